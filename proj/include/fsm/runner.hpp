#ifndef FSM_RUNNER_HPP_
#define FSM_RUNNER_HPP_

#include <filesystem>
#include <string>

#include "json.hpp"

#include "fsm/config.hpp"

namespace fsm {

const char* library_version();

struct RunOutcome {
  std::string study_csv;
  nlohmann::json summary;
  nlohmann::json manifest;
};

// The `run` subcommand: optional symmetric comparison, then the study.
RunOutcome run_experiment(const ExperimentConfig& cfg, int threads = 1);
void write_run_artifacts(const RunOutcome& out, const std::filesystem::path& dir);

// The `norms` subcommand: {model, algebras: [...], ns: [...]} -> CSV
// kind,n,value,achieved_at.
std::string run_norms(const nlohmann::json& doc);

// The `weights-check` subcommand: {weights: [{name, weight}], moderate:
// [{name, m, v}], radius, grs_n, bd_x, bd_kmax} -> JSON report.
nlohmann::json run_weights_check(const nlohmann::json& doc);

}  // namespace fsm

#endif  // FSM_RUNNER_HPP_
