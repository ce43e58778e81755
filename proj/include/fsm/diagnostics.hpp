#ifndef FSM_DIAGNOSTICS_HPP_
#define FSM_DIAGNOSTICS_HPP_

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "fsm/algebra.hpp"
#include "fsm/models.hpp"
#include "fsm/solver.hpp"
#include "fsm/weights.hpp"

namespace fsm {

enum class Pipeline { symmetric, nonsymmetric };
std::string to_string(Pipeline p);
Pipeline parse_pipeline(const std::string& name);

// A right-hand side given by its truncations: rhs(N) = P_N b.
using RhsFn = std::function<SparseVector(std::int64_t radius)>;
RhsFn rhs_from_vector(SparseVector b);

struct StudyOptions {
  Pipeline pipeline = Pipeline::symmetric;
  // Non-symmetric row radius: r = ceil(r_factor * n) if set; otherwise
  // n + band_width for banded models without alpha; otherwise choose_r
  // with (schedule_s, alpha).
  std::optional<double> r_factor;
  std::optional<double> alpha;
  double schedule_s = 0.0;
  NormalBackend backend = NormalBackend::normal_equations;
  bool require_positive = true;
  // When set, the symmetric pipeline also records ||A_n^{-1}|| in this algebra.
  std::optional<AlgebraKind> trace_kind;
  int threads = 1;
  std::int64_t reference_factor = 4;
  // Largest reference section, counted in lattice points.
  std::int64_t max_reference_points = 4097;
  // Errors below floor_rel * max(1, ||x_ref||) count as exact.
  double floor_rel = 1e-12;
};

struct StudyReport {
  Pipeline pipeline = Pipeline::symmetric;
  std::vector<std::int64_t> ns;
  std::vector<std::int64_t> rs;
  std::vector<double> errors;
  std::vector<double> phi;
  std::vector<double> ratios;  // error / phi
  std::vector<double> residuals;
  std::vector<double> wall_times;
  std::vector<bool> used_in_fit;
  std::vector<double> uniform_inverse_trace;
  std::vector<SparseVector> solutions;  // x_n, aligned with ns
  double fitted_exponent = std::numeric_limits<double>::quiet_NaN();
  std::pair<double, double> c_ratio_range{0.0, 0.0};
  // max_n error / (||b||_in phi(n)): the single constant of the error estimate.
  double c_measured = 0.0;
  double b_norm_in = 0.0;
  std::int64_t reference_n = 0;
  double reference_stability = 0.0;  // ||x_N - x_{N/2}|| in the out space
  double error_floor = 0.0;
  std::vector<std::string> notes;
};

// Runs the pipeline at every n, measures ||x_ref - x_n|| in out_space against a
// reference section that is doubled until stable, and compares with phi(n).
StudyReport convergence_study(const MatrixModel& A, const RhsFn& b, const std::vector<std::int64_t>& ns,
                              const SpaceSpec& in_space, const SpaceSpec& out_space, const StudyOptions& opts);
StudyReport convergence_study(const MatrixModel& A, const SparseVector& b, const std::vector<std::int64_t>& ns,
                              const SpaceSpec& in_space, const SpaceSpec& out_space, const StudyOptions& opts);

// Least-squares slope of log(values) against log(ns).
double fit_rate(const std::vector<double>& ns, const std::vector<double>& values);
double fit_rate(const std::vector<std::int64_t>& ns, const std::vector<double>& values);

std::vector<double> uniform_inverse_trace(const MatrixModel& A, const std::vector<std::int64_t>& ns,
                                          const AlgebraKind& kind);

struct ErrorDecomposition {
  double term_I = 0.0;   // ||A^{-1}(b - b_n)||_2
  double term_II = 0.0;  // ||A^{-1}(A_n - A) A_n^{-1} P_n b||_2
  double error = 0.0;    // ||x - x_n||_2
  std::int64_t reference_n = 0;
  bool triangle_holds() const { return error <= term_I + term_II + 1e-9; }
};

// A^{-1} is replaced by the inverse of the section at reference_n (default 4n).
ErrorDecomposition error_decomposition(const MatrixModel& A, const SparseVector& b, std::int64_t n,
                                       std::optional<std::int64_t> reference_n = std::nullopt);

// Columns n, r, error, phi, ratio.
void write_study_csv(std::ostream& os, const StudyReport& rep);
// {fitted_exponent, c_ratio_range, ...}
nlohmann::json study_summary(const StudyReport& rep);

}  // namespace fsm

#endif  // FSM_DIAGNOSTICS_HPP_
