#include "fsm/diagnostics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <mutex>
#include <thread>

#include "fsm/errors.hpp"
#include "fsm/sections.hpp"

namespace fsm {

std::string to_string(Pipeline p) { return p == Pipeline::symmetric ? "symmetric" : "nonsymmetric"; }

Pipeline parse_pipeline(const std::string& name) {
  if (name == "symmetric") return Pipeline::symmetric;
  if (name == "nonsymmetric") return Pipeline::nonsymmetric;
  throw ValidationError("unknown pipeline '" + name + "'");
}

RhsFn rhs_from_vector(SparseVector b) {
  return [b = std::move(b)](std::int64_t radius) { return b.restricted(radius); };
}

namespace {

struct PointSolve {
  SparseVector x{1};
  std::int64_t r = 0;
  double residual = 0.0;
  double wall_time = 0.0;
};

std::int64_t row_radius(const MatrixModel& A, std::int64_t n, const StudyOptions& o) {
  if (o.r_factor) {
    if (!(*o.r_factor >= 1.0)) throw ValidationError("r_factor must be >= 1");
    return std::max(n, static_cast<std::int64_t>(std::ceil(*o.r_factor * static_cast<double>(n) - 1e-9)));
  }
  if (A.band_width() && !o.alpha) return choose_r_banded(n, *A.band_width());
  if (!o.alpha && !(o.schedule_s > 0.0))
    throw ValidationError("non-symmetric study needs r_factor, alpha or schedule_s");
  return choose_r(n, o.schedule_s, A.dim(), o.alpha).r;
}

PointSolve solve_point(const MatrixModel& A, const RhsFn& b, std::int64_t n, const StudyOptions& o) {
  PointSolve p;
  if (o.pipeline == Pipeline::symmetric) {
    FsmConfig cfg;
    cfg.n = n;
    cfg.require_positive = o.require_positive;
    const FsmResult res = solve_fsm(A, b(n), cfg);
    p.x = res.x;
    p.r = n;
    p.residual = res.residual;
    p.wall_time = res.wall_time;
  } else {
    NonSymConfig cfg;
    cfg.n = n;
    cfg.r = row_radius(A, n, o);
    cfg.alpha = o.alpha;
    cfg.backend = o.backend;
    const NonSymResult res = solve_fsm_nonsym(A, b(cfg.r), cfg);
    p.x = res.x;
    p.r = res.r;
    p.residual = res.residual;
    p.wall_time = res.wall_time;
  }
  return p;
}

std::int64_t cube_points(int d, std::int64_t n) {
  double c = std::pow(static_cast<double>(2 * n + 1), d);
  return c > 9e18 ? std::numeric_limits<std::int64_t>::max() : static_cast<std::int64_t>(c);
}

// Runs fn(i) for i in [0, count) on up to `threads` workers; the first
// exception is rethrown after all workers stop.
template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!error) error = std::current_exception();
          next = count;
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

StudyReport convergence_study(const MatrixModel& A, const RhsFn& b, const std::vector<std::int64_t>& ns,
                              const SpaceSpec& in_space, const SpaceSpec& out_space, const StudyOptions& opts) {
  if (ns.empty()) throw ValidationError("convergence_study: ns is empty");
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (ns[i] < 0) throw ValidationError("convergence_study: n must be >= 0");
    if (i > 0 && ns[i] <= ns[i - 1]) throw ValidationError("convergence_study: ns must be strictly increasing");
  }
  if (in_space.m.dim() != A.dim() || out_space.m.dim() != A.dim())
    throw ValidationError("convergence_study: space dimension does not match the model");

  StudyReport rep;
  rep.pipeline = opts.pipeline;
  rep.ns = ns;
  const std::size_t K = ns.size();

  // Reference: double N until ||x_N - x_{N/2}|| is negligible next to the
  // smallest measured error.
  std::int64_t N = std::max<std::int64_t>(opts.reference_factor * ns.back(), ns.back() + 1);
  if (cube_points(A.dim(), N) > opts.max_reference_points)
    throw StudyAborted("reference section at N=" + std::to_string(N) + " exceeds " +
                       std::to_string(opts.max_reference_points) + " points");

  std::vector<PointSolve> points(K);
  parallel_for(K, opts.threads, [&](std::size_t i) { points[i] = solve_point(A, b, ns[i], opts); });
  for (std::size_t i = 0; i < K; ++i) {
    rep.rs.push_back(points[i].r);
    rep.residuals.push_back(points[i].residual);
    rep.wall_times.push_back(points[i].wall_time);
    rep.solutions.push_back(points[i].x);
  }

  PointSolve half = solve_point(A, b, N / 2, opts);
  for (;;) {
    PointSolve ref = solve_point(A, b, N, opts);
    const double ref_norm = lp_norm(ref.x, out_space);
    rep.error_floor = opts.floor_rel * std::max(1.0, ref_norm);
    rep.reference_stability = lp_norm(ref.x - half.x, out_space);
    rep.errors.assign(K, 0.0);
    for (std::size_t i = 0; i < K; ++i) rep.errors[i] = lp_norm(ref.x - points[i].x, out_space);
    double smallest = std::numeric_limits<double>::infinity();
    for (double e : rep.errors)
      if (e >= rep.error_floor) smallest = std::min(smallest, e);
    const bool stable = rep.reference_stability <= rep.error_floor ||
                        (std::isfinite(smallest) && rep.reference_stability <= 0.1 * smallest) ||
                        !std::isfinite(smallest);
    if (stable) {
      rep.reference_n = N;
      rep.b_norm_in = lp_norm(b(ref.r), in_space);
      break;
    }
    if (cube_points(A.dim(), 2 * N) > opts.max_reference_points)
      throw StudyAborted("reference unstable: ||x_" + std::to_string(N) + " - x_" + std::to_string(N / 2) +
                         "|| = " + std::to_string(rep.reference_stability) + " exceeds 10% of the smallest error " +
                         std::to_string(smallest) + " and the next reference exceeds the size cap");
    rep.notes.push_back("reference N=" + std::to_string(N) + " unstable, doubled");
    half = std::move(ref);
    N *= 2;
  }

  const double fit_floor = 10.0 * std::max(rep.reference_stability, rep.error_floor);
  std::vector<double> fit_n, fit_e;
  for (std::size_t i = 0; i < K; ++i) {
    rep.phi.push_back(tail_phi(in_space.m, out_space.m, in_space.p, out_space.p, ns[i]));
    rep.ratios.push_back(rep.phi[i] > 0.0 ? rep.errors[i] / rep.phi[i] : 0.0);
    const bool used = rep.errors[i] >= fit_floor;
    rep.used_in_fit.push_back(used);
    if (used) {
      fit_n.push_back(static_cast<double>(ns[i]));
      fit_e.push_back(rep.errors[i]);
    }
  }
  if (fit_n.size() >= 3) {
    rep.fitted_exponent = fit_rate(fit_n, fit_e);
  } else {
    rep.notes.push_back("fewer than 3 errors above the reference floor; exponent not fitted");
  }
  rep.c_ratio_range = {*std::min_element(rep.ratios.begin(), rep.ratios.end()),
                       *std::max_element(rep.ratios.begin(), rep.ratios.end())};
  if (rep.b_norm_in > 0.0)
    for (std::size_t i = 0; i < K; ++i)
      if (rep.phi[i] > 0.0) rep.c_measured = std::max(rep.c_measured, rep.errors[i] / (rep.b_norm_in * rep.phi[i]));

  if (opts.trace_kind && opts.pipeline == Pipeline::symmetric)
    rep.uniform_inverse_trace = uniform_inverse_trace(A, ns, *opts.trace_kind);
  return rep;
}

StudyReport convergence_study(const MatrixModel& A, const SparseVector& b, const std::vector<std::int64_t>& ns,
                              const SpaceSpec& in_space, const SpaceSpec& out_space, const StudyOptions& opts) {
  return convergence_study(A, rhs_from_vector(b), ns, in_space, out_space, opts);
}

double fit_rate(const std::vector<double>& ns, const std::vector<double>& values) {
  if (ns.size() != values.size()) throw ValidationError("fit_rate: ns and values differ in length");
  if (ns.size() < 3) throw ValidationError("fit_rate: need at least 3 points");
  const double K = static_cast<double>(ns.size());
  double sx = 0.0, sy = 0.0;
  std::vector<double> x(ns.size()), y(ns.size());
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (!(ns[i] > 0.0) || !(values[i] > 0.0)) throw ValidationError("fit_rate: values must be positive");
    x[i] = std::log(ns[i]);
    y[i] = std::log(values[i]);
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / K, my = sy / K;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw ValidationError("fit_rate: ns must not all be equal");
  return sxy / sxx;
}

double fit_rate(const std::vector<std::int64_t>& ns, const std::vector<double>& values) {
  return fit_rate(std::vector<double>(ns.begin(), ns.end()), values);
}

std::vector<double> uniform_inverse_trace(const MatrixModel& A, const std::vector<std::int64_t>& ns,
                                          const AlgebraKind& kind) {
  std::vector<double> out;
  out.reserve(ns.size());
  for (std::int64_t n : ns) out.push_back(norm(section_inverse(finite_section(A, n)), kind).value);
  return out;
}

ErrorDecomposition error_decomposition(const MatrixModel& A, const SparseVector& b, std::int64_t n,
                                       std::optional<std::int64_t> reference_n) {
  if (n < 0) throw ValidationError("error_decomposition: n must be >= 0");
  const std::int64_t N = reference_n.value_or(std::max<std::int64_t>(4 * n, n + 1));
  if (N <= n) throw ValidationError("error_decomposition: reference_n must exceed n");
  ErrorDecomposition out;
  out.reference_n = N;

  const Section AN = finite_section(A, N);
  const Cube& CN = AN.cols();
  const SparseVector bN = b.restricted(N);
  const SparseVector bn = b.restricted(n);
  FsmConfig cfg;
  cfg.n = n;
  cfg.require_positive = false;
  const SparseVector xn = solve_fsm(A, b, cfg).x;

  // On C_N: x - x_n = A_N^{-1}(b_N - b_n) - A_N^{-1}(P_N - P_n) A x_n.
  const Vector Axn = AN.matrix() * to_dense(xn, CN);
  Vector leak = Axn;
  for (std::size_t i = 0; i < CN.size(); ++i)
    if (CN.point(i).sup_norm() <= n) leak(static_cast<Eigen::Index>(i)) = 0.0;

  Matrix rhs(static_cast<Eigen::Index>(CN.size()), 3);
  rhs.col(0) = to_dense(bN - bn, CN);
  rhs.col(1) = -leak;
  rhs.col(2) = to_dense(bN, CN);
  const Matrix sol = solve_dense(AN, rhs);
  out.term_I = sol.col(0).norm();
  out.term_II = sol.col(1).norm();
  out.error = (sol.col(2) - to_dense(xn, CN)).norm();
  return out;
}

void write_study_csv(std::ostream& os, const StudyReport& rep) {
  os << "n,r,error,phi,ratio\n" << std::setprecision(17);
  for (std::size_t i = 0; i < rep.ns.size(); ++i)
    os << rep.ns[i] << ',' << rep.rs[i] << ',' << rep.errors[i] << ',' << rep.phi[i] << ',' << rep.ratios[i] << '\n';
}

nlohmann::json study_summary(const StudyReport& rep) {
  nlohmann::json j;
  j["pipeline"] = to_string(rep.pipeline);
  j["fitted_exponent"] = std::isfinite(rep.fitted_exponent) ? nlohmann::json(rep.fitted_exponent) : nlohmann::json();
  j["c_ratio_range"] = {rep.c_ratio_range.first, rep.c_ratio_range.second};
  j["c_measured"] = rep.c_measured;
  j["b_norm_in"] = rep.b_norm_in;
  j["reference_n"] = rep.reference_n;
  j["reference_stability"] = rep.reference_stability;
  j["error_floor"] = rep.error_floor;
  j["max_error"] = *std::max_element(rep.errors.begin(), rep.errors.end());
  j["used_in_fit"] = rep.used_in_fit;
  if (!rep.uniform_inverse_trace.empty()) j["uniform_inverse_trace"] = rep.uniform_inverse_trace;
  if (!rep.notes.empty()) j["notes"] = rep.notes;
  return j;
}

}  // namespace fsm
