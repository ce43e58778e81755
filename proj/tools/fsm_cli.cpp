// Command-line front end: run, norms, weights-check.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "fsm/errors.hpp"
#include "fsm/runner.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

void emit(const std::string& text, const std::string& out_dir, const std::string& file_name) {
  if (out_dir.empty()) {
    std::cout << text;
    return;
  }
  std::filesystem::create_directories(out_dir);
  std::ofstream f(std::filesystem::path(out_dir) / file_name, std::ios::binary);
  if (!f) throw fsm::ValidationError(out_dir + "/" + file_name + ": cannot write");
  f << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite section method experiments"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  int threads = 1;
  bool verbose = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "configuration file (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--threads", threads, "worker threads for studies")->check(CLI::PositiveNumber);
    sub->add_flag("--verbose", verbose, "progress on stderr");
  };
  CLI::App* run = app.add_subcommand("run", "convergence study; writes study.csv, summary.json, manifest.json");
  CLI::App* norms = app.add_subcommand("norms", "algebra norms of finite sections as CSV");
  CLI::App* weights = app.add_subcommand("weights-check", "weight condition probes as JSON");
  add_common(run);
  add_common(norms);
  add_common(weights);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (run->parsed()) {
      const fsm::ExperimentConfig cfg = fsm::load_experiment(config_path);
      const std::string dir = out_dir.empty() ? cfg.output_dir : out_dir;
      if (verbose) std::cerr << "running " << cfg.ns.size() << " sections, output in " << dir << "\n";
      const fsm::RunOutcome outcome = fsm::run_experiment(cfg, threads);
      fsm::write_run_artifacts(outcome, dir);
      if (verbose) std::cerr << outcome.summary.dump(2) << "\n";
    } else if (norms->parsed()) {
      emit(fsm::run_norms(fsm::load_json_file(config_path)), out_dir, "norms.csv");
    } else if (weights->parsed()) {
      emit(fsm::run_weights_check(fsm::load_json_file(config_path)).dump(2) + "\n", out_dir, "weights_report.json");
    }
  } catch (const fsm::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const fsm::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
  return 0;
}
