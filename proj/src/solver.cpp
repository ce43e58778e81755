#include "fsm/solver.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <chrono>
#include <cmath>
#include <iomanip>

#include "fsm/algebra.hpp"
#include "fsm/errors.hpp"

namespace fsm {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

FsmResult solve_fsm(const MatrixModel& A, const SparseVector& b, const FsmConfig& cfg) {
  if (cfg.n < 0) throw ValidationError("solve_fsm: n must be >= 0");
  if (b.dim() != A.dim()) throw ValidationError("solve_fsm: dimension mismatch");
  const auto t0 = std::chrono::steady_clock::now();
  FsmResult res{SparseVector(A.dim()), cfg.n, 0.0, {}, 0.0};
  if (cfg.require_positive) {
    if (!A.hermitian()) throw ModelRejected("symmetric FSM needs a hermitian model, got '" + A.name() + "'");
    const auto method = cfg.lambda_source == LambdaSource::schur_bound ? SpectralBounds::Method::schur_bound
                                                                       : SpectralBounds::Method::eig_of_largest_section;
    res.bounds = estimate_spectral_bounds(A, cfg.n, method);
    if (!(res.bounds.lambda_minus > 0.0))
      throw ModelRejected("symmetric FSM needs a positive definite model; lambda_- = " +
                          std::to_string(res.bounds.lambda_minus));
  }
  const Section An = finite_section(A, cfg.n);
  const DenseSolve s = solve_dense(An, to_dense(b, An.cols()));
  res.x = to_sparse(s.x, An.cols());
  res.residual = s.residual;
  res.wall_time = seconds_since(t0);
  return res;
}

RSchedule choose_r(std::int64_t n, double s, int d, std::optional<double> alpha) {
  if (n < 0) throw ValidationError("choose_r: n must be >= 0");
  RSchedule out;
  if (2.0 * s > d) out.threshold = 2.0 * s / (2.0 * s - d);
  if (!alpha) {
    if (!(2.0 * s > d)) throw ValidationError("choose_r: default schedule needs s > d/2");
    alpha = out.threshold + 0.25;
  }
  out.alpha = *alpha;
  out.below_threshold = !(2.0 * s > d) || *alpha <= out.threshold;
  const double target = std::pow(static_cast<double>(n), *alpha);
  out.r = std::max<std::int64_t>(n + 1, static_cast<std::int64_t>(std::ceil(target - 1e-9)));
  return out;
}

NonSymResult solve_fsm_nonsym(const MatrixModel& A, const SparseVector& b, const NonSymConfig& cfg) {
  if (cfg.n < 0 || cfg.r < cfg.n) throw ValidationError("solve_fsm_nonsym: need 0 <= n <= r");
  if (b.dim() != A.dim()) throw ValidationError("solve_fsm_nonsym: dimension mismatch");
  const auto t0 = std::chrono::steady_clock::now();
  NonSymResult res{SparseVector(A.dim()), cfg.n, cfg.r, 0.0, 0.0, 0.0};
  if (b.empty()) return res;

  const Section Arn = rect_section(A, cfg.r, cfg.n);
  const Vector rhs_r = to_dense(b, Arn.rows());
  Vector x;
  if (cfg.backend == NormalBackend::normal_equations) {
    const Section D(Arn.cols(), Matrix(Arn.matrix().adjoint() * Arn.matrix()));
    x = solve_dense(D, Vector(Arn.matrix().adjoint() * rhs_r)).x;
  } else {
    Eigen::ColPivHouseholderQR<Matrix> qr(Arn.matrix());
    qr.setThreshold(1e-14);
    if (qr.rank() < Arn.matrix().cols()) {
      const double pivot = std::abs(qr.matrixR()(qr.rank(), qr.rank()));
      throw SingularSection(cfg.n, pivot, qr.maxPivot());
    }
    x = qr.solve(rhs_r);
  }
  res.x = to_sparse(x, Arn.cols());
  const ApplyResult Ax = apply(A, res.x, cfg.r);
  res.residual = (to_dense(Ax.y, Arn.rows()) - rhs_r).norm();
  res.residual_tail = Ax.truncation_bound;
  res.wall_time = seconds_since(t0);
  return res;
}

DefectResult defect_matrix(const MatrixModel& A, std::int64_t r, std::int64_t n) {
  if (n < 0 || r < n) throw ValidationError("defect_matrix: need 0 <= n <= r");
  const int d = A.dim();
  const Envelope& env = A.envelope();
  DefectResult out{Section(Cube(d, n), Matrix::Zero(static_cast<Eigen::Index>(Cube(d, n).size()),
                                                    static_cast<Eigen::Index>(Cube(d, n).size()))),
                   r, 0.0};
  std::int64_t R;
  if (A.band_width()) {
    R = std::max(r, n + *A.band_width());
  } else {
    const WeightSpec one = WeightSpec::constant(d);
    auto remainder = [&](std::int64_t radius) {
      return env.C * env.C * weighted_tail(one, env.v, 2.0, radius - n).value;
    };
    R = std::max(r, n) + 8;
    while (remainder(R) > 1e-12 && R < (std::int64_t{1} << 20)) R *= 2;
    out.remainder_bound = remainder(R);
  }
  out.truncation_radius = R;
  if (R == r) return out;

  const Section M = rect_section(A, R, n);
  const Cube inner(d, r);
  Matrix outer = M.matrix();
  for (std::size_t i = 0; i < M.rows().size(); ++i)
    if (inner.contains(M.rows().point(i))) outer.row(static_cast<Eigen::Index>(i)).setZero();
  out.E = Section(Cube(d, n), Matrix(outer.adjoint() * outer));
  return out;
}

double defect_bound(const MatrixModel& A, std::int64_t r, std::int64_t n) {
  if (n < 0 || r < n) throw ValidationError("defect_bound: need 0 <= n <= r");
  const Envelope& env = A.envelope();
  const int d = A.dim();
  double vmax = 0.0;
  Cube c2n(d, 2 * n);
  for (std::size_t i = 0; i < c2n.size(); ++i) vmax = std::max(vmax, env.v(c2n.point(i)));
  const double tail = weighted_tail(WeightSpec::constant(d), env.v, 2.0, r - n).value;
  return env.C * env.C * vmax * vmax * tail;
}

Section normal_section(const MatrixModel& A, std::int64_t n) {
  const Section Ann = rect_section(A, n, n);
  Matrix D = Ann.matrix().adjoint() * Ann.matrix();
  const DefectResult E = defect_matrix(A, n, n);
  return Section(Ann.cols(), Matrix(D + E.E.matrix()));
}

ExtensionHandle normal_extension(const MatrixModel& A, std::int64_t n, std::int64_t n_probe) {
  const Section probe = normal_section(A, std::max(n, n_probe));
  Eigen::SelfAdjointEigenSolver<Matrix> eig(probe.matrix(), Eigen::EigenvaluesOnly);
  return ExtensionHandle{normal_section(A, n), eig.eigenvalues()(eig.eigenvalues().size() - 1)};
}

void write_solver_record(std::ostream& os, std::int64_t n, std::int64_t r, double residual, double error,
                         double wall_time) {
  os << std::setprecision(17) << "{\"n\":" << n << ",\"r\":" << r << ",\"residual\":" << residual
     << ",\"error_vs_reference\":" << error << ",\"wall_time\":" << wall_time << "}";
}

}  // namespace fsm
