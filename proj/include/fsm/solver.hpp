#ifndef FSM_SOLVER_HPP_
#define FSM_SOLVER_HPP_

#include <cstdint>
#include <optional>
#include <ostream>

#include "fsm/models.hpp"
#include "fsm/sections.hpp"
#include "fsm/weights.hpp"

namespace fsm {

enum class LambdaSource { eigenvalues, schur_bound };

struct FsmConfig {
  std::int64_t n = 0;
  SpaceSpec space;
  LambdaSource lambda_source = LambdaSource::eigenvalues;
  // Certify positive definiteness before solving. With false the plain
  // truncated system A_n x = P_n b is solved for any model.
  bool require_positive = true;
};

struct FsmResult {
  SparseVector x;
  std::int64_t n = 0;
  double residual = 0.0;  // ||A_n x_n - P_n b||_2
  SpectralBounds bounds;
  double wall_time = 0.0;
};

// x_n = A_n^{-1} P_n b supported on C_n.
FsmResult solve_fsm(const MatrixModel& A, const SparseVector& b, const FsmConfig& cfg);

struct RSchedule {
  std::int64_t r = 0;
  double alpha = 0.0;
  double threshold = 0.0;  // 2s / (2s - d)
  bool below_threshold = false;
};

// r = ceil(n^alpha), at least n + 1; alpha defaults to 2s/(2s-d) + 0.25.
RSchedule choose_r(std::int64_t n, double s, int d, std::optional<double> alpha = std::nullopt);
// For a model banded at width w, rows beyond C_{n+w} never meet C_n.
inline std::int64_t choose_r_banded(std::int64_t n, std::int64_t w) { return n + w; }

enum class NormalBackend { normal_equations, qr };

struct NonSymConfig {
  std::int64_t n = 0;
  std::int64_t r = 0;
  std::optional<double> alpha;
  NormalBackend backend = NormalBackend::normal_equations;
};

struct NonSymResult {
  SparseVector x;
  std::int64_t n = 0;
  std::int64_t r = 0;
  double residual = 0.0;          // ||P_r (A x - b)||_2
  double residual_tail = 0.0;     // l^1 bound of A x outside C_r
  double wall_time = 0.0;
};

// Solves A_{r,n}^* A_{r,n} x = A_{r,n}^* P_r b with A_{r,n} = P_r A P_n.
NonSymResult solve_fsm_nonsym(const MatrixModel& A, const SparseVector& b, const NonSymConfig& cfg);

struct DefectResult {
  Section E;                     // B_n - D_{r,n} on C_n
  std::int64_t truncation_radius = 0;
  double remainder_bound = 0.0;  // entrywise bound of the rows beyond the truncation
};

// E_{r,n} = sum_{j not in C_r} conj(a_jk) a_jl for k, l in C_n.
DefectResult defect_matrix(const MatrixModel& A, std::int64_t r, std::int64_t n);

// ||A||^2_{Av} sup_{k in C_2n} v(k)^2 sum_{j not in C_{r-n}} v(j)^{-2} with v the
// envelope weight and ||A||_{Av} bounded by the envelope constant.
double defect_bound(const MatrixModel& A, std::int64_t r, std::int64_t n);

// B_n = P_n A^* A P_n, and the extension B_n + lambda_+ (I - P_n) with
// lambda_+ the top eigenvalue of B_{n_probe}.
Section normal_section(const MatrixModel& A, std::int64_t n);
ExtensionHandle normal_extension(const MatrixModel& A, std::int64_t n, std::int64_t n_probe);

// Record {n, r, residual, error_vs_reference, wall_time}.
void write_solver_record(std::ostream& os, std::int64_t n, std::int64_t r, double residual, double error,
                         double wall_time);

}  // namespace fsm

#endif  // FSM_SOLVER_HPP_
