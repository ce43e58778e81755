#include "fsm/runner.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "fsm/errors.hpp"
#include "fsm/solver.hpp"

#ifndef FSM_VERSION
#define FSM_VERSION "0.0.0"
#endif

namespace fsm {

using nlohmann::json;

const char* library_version() { return FSM_VERSION; }

namespace {

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(); }

std::vector<std::int64_t> int_list(const json& doc, const std::string& key) {
  if (!doc.contains(key) || !doc.at(key).is_array()) throw ValidationError("/" + key + ": missing or not an array");
  std::vector<std::int64_t> out;
  for (const auto& v : doc.at(key)) {
    if (!v.is_number_integer()) throw ValidationError("/" + key + ": entries must be integers");
    out.push_back(v.get<std::int64_t>());
  }
  if (out.empty()) throw ValidationError("/" + key + ": must not be empty");
  return out;
}

}  // namespace

RunOutcome run_experiment(const ExperimentConfig& cfg, int threads) {
  const MatrixModel A = model_from_json(cfg.model);
  const RhsFn b = rhs_from_json(cfg.rhs, cfg.dim);
  RunOutcome out;
  json& summary = out.summary;

  if (cfg.compare_symmetric) {
    // The plain truncated system, without the positivity certificate.
    json per_n = json::array();
    bool failed = false;
    for (std::int64_t n : cfg.ns) {
      FsmConfig fc;
      fc.n = n;
      fc.require_positive = false;
      try {
        solve_fsm(A, b(n), fc);
        per_n.push_back({{"n", n}, {"status", "ok"}});
      } catch (const SingularSection& e) {
        failed = true;
        per_n.push_back({{"n", n}, {"status", "singular"}, {"pivot", e.pivot()}});
      }
    }
    summary["symmetric"] = failed ? "failed" : "ok";
    summary["symmetric_per_n"] = per_n;
  }

  StudyOptions opts;
  opts.pipeline = cfg.pipeline;
  opts.r_factor = cfg.r_factor;
  opts.alpha = cfg.alpha;
  opts.schedule_s = cfg.schedule_s;
  opts.backend = cfg.backend;
  opts.trace_kind = cfg.algebra;
  opts.threads = threads;
  const StudyReport rep = convergence_study(A, b, cfg.ns, cfg.in_space, cfg.out_space, opts);

  std::ostringstream csv;
  write_study_csv(csv, rep);
  out.study_csv = csv.str();

  summary.update(study_summary(rep));
  summary[to_string(cfg.pipeline)] = "ok";
  json records = json::array();
  for (std::size_t i = 0; i < rep.ns.size(); ++i)
    records.push_back({{"n", rep.ns[i]},
                       {"r", rep.rs[i]},
                       {"residual", rep.residuals[i]},
                       {"error_vs_reference", rep.errors[i]},
                       {"wall_time", rep.wall_times[i]}});
  summary["records"] = records;
  if (cfg.exact) {
    json vs_exact = json::array();
    double worst = 0.0;
    for (std::size_t i = 0; i < rep.ns.size(); ++i) {
      const double e = rep.solutions[i].max_abs_diff(*cfg.exact);
      worst = std::max(worst, e);
      vs_exact.push_back({{"n", rep.ns[i]}, {"max_error", e}});
    }
    summary["max_error_vs_exact"] = vs_exact;
    summary["max_error_vs_exact_last"] = vs_exact.back()["max_error"];
  }

  out.manifest = {{"library", "fsm"},
                  {"version", library_version()},
                  {"command", "run"},
                  {"threads", threads},
                  {"model", A.name()},
                  {"config", cfg.source},
                  {"artifacts", {"study.csv", "summary.json"}}};
  return out;
}

void write_run_artifacts(const RunOutcome& out, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw ValidationError((dir / name).string() + ": cannot write");
    f << text;
  };
  write("study.csv", out.study_csv);
  write("summary.json", out.summary.dump(2) + "\n");
  write("manifest.json", out.manifest.dump(2) + "\n");
}

std::string run_norms(const json& doc) {
  if (!doc.is_object() || !doc.contains("model")) throw ValidationError("/model: missing required field");
  const MatrixModel A = model_from_json(doc.at("model"));
  const std::vector<std::int64_t> ns = int_list(doc, "ns");
  if (!doc.contains("algebras") || !doc.at("algebras").is_array() || doc.at("algebras").empty())
    throw ValidationError("/algebras: missing or empty");
  std::vector<AlgebraKind> kinds;
  for (const auto& k : doc.at("algebras")) kinds.push_back(algebra_from_json(k, A.dim()));
  std::ostringstream os;
  write_norm_csv_header(os);
  for (std::int64_t n : ns) {
    if (n < 0) throw ValidationError("/ns: n must be >= 0");
    const Section S = finite_section(A, n);
    for (const auto& kind : kinds) write_norm_csv_row(os, kind, n, norm(S, kind));
  }
  return os.str();
}

json run_weights_check(const json& doc) {
  if (!doc.is_object() || !doc.contains("weights") || !doc.at("weights").is_array())
    throw ValidationError("/weights: missing or not an array");
  const std::int64_t radius = doc.value("radius", std::int64_t{12});
  const int grs_n = doc.value("grs_n", 64);
  const std::int64_t bd_kmax = doc.value("bd_kmax", std::int64_t{1000000});
  const std::vector<std::int64_t> bd_x = doc.contains("bd_x") ? int_list(doc, "bd_x") : std::vector<std::int64_t>{1, 2};

  json report;
  json weights = json::array();
  for (std::size_t i = 0; i < doc.at("weights").size(); ++i) {
    const json& entry = doc.at("weights")[i];
    const std::string name = entry.value("name", "weight" + std::to_string(i));
    if (!entry.contains("weight")) throw ValidationError("/weights/" + std::to_string(i) + "/weight: missing");
    const WeightSpec v = weight_from_json(entry.at("weight"));
    json w{{"name", name}, {"weight", to_json(v)}};

    const SubmultiplicativeReport sm = check_submultiplicative(v, radius);
    w["submultiplicative"] = {{"holds", sm.holds}, {"worst_ratio", sm.worst_ratio}};

    // v(nk)^{1/n} -> 1 exactly when the exponential part is subexponential.
    const std::vector<double> traj = check_grs(v, MultiIndex::axis(v.dim(), 0, 1), grs_n);
    const bool grs = v.is_tabulated() || !(v.a() > 0.0 && v.b() >= 1.0);
    w["grs"] = {{"holds", grs}, {"limit_estimate", traj.back()}, {"n", grs_n}};

    // A finite probe cannot see the linear growth of (v^{-1} * v^{-1}) v for
    // purely exponential weights; the parametric family is decided exactly.
    const SubconvolutiveReport sc = check_subconvolutive(v, radius);
    const bool sc_holds = !sc.divergent && std::isfinite(sc.C_upper) &&
                          (v.is_tabulated() || !(v.a() > 0.0 && v.b() >= 1.0) || v.s() > v.dim());
    w["subconvolutive"] = {{"divergent", sc.divergent},
                           {"holds", sc_holds},
                           {"C_est", finite_or_null(sc.C_est)},
                           {"C_upper", finite_or_null(sc.C_upper)}};

    json bd = json::array();
    bool bd_ok = true;
    for (std::int64_t x : bd_x) {
      const BeurlingDomarReport r = check_beurling_domar(v, x, bd_kmax);
      bd_ok = bd_ok && r.cauchy;
      bd.push_back({{"x", x}, {"cauchy", r.cauchy}, {"checkpoints", r.checkpoints}, {"partial_sums", r.partial_sums}});
    }
    w["beurling_domar"] = {{"holds", bd_ok}, {"probes", bd}};
    w["pass"] = sm.holds && grs && sc_holds && bd_ok;
    weights.push_back(w);
  }
  report["weights"] = weights;

  if (doc.contains("moderate")) {
    json moderate = json::array();
    for (const auto& entry : doc.at("moderate")) {
      if (!entry.contains("m") || !entry.contains("v")) throw ValidationError("/moderate: entries need m and v");
      const WeightSpec m = weight_from_json(entry.at("m"));
      const WeightSpec v = weight_from_json(entry.at("v"));
      const ModerateReport r = check_moderate(m, v, radius);
      moderate.push_back({{"name", entry.value("name", std::string("moderate"))},
                          {"C_est", r.C_est},
                          {"holds", std::isfinite(r.C_est)}});
    }
    report["moderate"] = moderate;
  }
  report["radius"] = radius;
  return report;
}

}  // namespace fsm
