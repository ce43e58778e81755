#include "fsm/sections.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>

#include "fsm/algebra.hpp"
#include "fsm/errors.hpp"

namespace fsm {

namespace {

constexpr double kPivotTol = 1e-14;

Eigen::PartialPivLU<Matrix> factor(const Section& B) {
  if (!B.is_square()) throw ValidationError("solve_dense: section must be square");
  const Matrix& M = B.matrix();
  const double scale = M.size() ? M.cwiseAbs().maxCoeff() : 0.0;
  if (M.size() == 0 || scale == 0.0) throw SingularSection(B.n(), 0.0, scale);
  Eigen::PartialPivLU<Matrix> lu(M);
  const auto& U = lu.matrixLU();
  double min_pivot = std::abs(U(0, 0));
  for (Eigen::Index i = 1; i < U.rows(); ++i) min_pivot = std::min(min_pivot, std::abs(U(i, i)));
  if (!(min_pivot >= kPivotTol * scale)) throw SingularSection(B.n(), min_pivot, scale);
  return lu;
}

}  // namespace

SpectralBounds estimate_spectral_bounds(const MatrixModel& A, std::int64_t n_probe, SpectralBounds::Method method) {
  if (!A.hermitian()) throw ModelRejected("estimate_spectral_bounds: model '" + A.name() + "' is not hermitian");
  if (n_probe < 0) throw ValidationError("n_probe must be >= 0");
  const Section S = finite_section(A, n_probe);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(S.matrix(), Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  SpectralBounds b;
  b.method = method;
  b.lambda_minus = ev(0);
  b.lambda_plus = ev(ev.size() - 1);
  b.margin = envelope_mass_outside(A.envelope(), n_probe);
  if (method == SpectralBounds::Method::schur_bound) {
    // every row of A misses at most the off-diagonal envelope mass
    b.lambda_plus = norm_av1(S, WeightSpec::constant(A.dim())).value + envelope_mass_outside(A.envelope(), 0);
  }
  return b;
}

DenseSolve solve_dense(const Section& B, const Vector& rhs) {
  if (rhs.size() != B.matrix().rows()) throw ValidationError("solve_dense: rhs size mismatch");
  auto lu = factor(B);
  DenseSolve out;
  out.x = lu.solve(rhs);
  out.residual = (B.matrix() * out.x - rhs).norm();
  return out;
}

Matrix solve_dense(const Section& B, const Matrix& rhs) {
  if (rhs.rows() != B.matrix().rows()) throw ValidationError("solve_dense: rhs size mismatch");
  return factor(B).solve(rhs);
}

Section section_inverse(const Section& B) {
  auto lu = factor(B);
  const Eigen::Index N = B.matrix().rows();
  Matrix inv = lu.solve(Matrix::Identity(N, N));
  const double defect = (B.matrix() * inv - Matrix::Identity(N, N)).cwiseAbs().maxCoeff();
  if (!(defect <= 1e-9)) throw NumericalError("section_inverse: ||B B^-1 - I||_max = " + std::to_string(defect));
  return Section(B.cols(), B.rows(), std::move(inv));
}

SparseVector extension_inverse_apply(const ExtensionHandle& h, const SparseVector& y) {
  if (!(h.lambda_plus > 0.0)) throw ValidationError("extension needs lambda_plus > 0");
  const Cube& c = h.base.cols();
  SparseVector inside(y.dim()), out(y.dim());
  for (const auto& [k, v] : y.entries()) {
    if (c.contains(k))
      inside.set(k, v);
    else
      out.set(k, v / h.lambda_plus);
  }
  const DenseSolve s = solve_dense(h.base, to_dense(inside, c));
  out += to_sparse(s.x, c);
  return out;
}

Section extension_section(const ExtensionHandle& h, std::int64_t N) {
  const Cube& c = h.base.cols();
  if (N < c.radius()) throw ValidationError("extension_section: N must be >= n");
  Cube big(Cube(c.anchor(), N));
  Matrix M = Matrix::Zero(static_cast<Eigen::Index>(big.size()), static_cast<Eigen::Index>(big.size()));
  for (std::size_t i = 0; i < big.size(); ++i) {
    const MultiIndex k = big.point(i);
    auto pk = c.position(k);
    if (!pk) {
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = h.lambda_plus;
      continue;
    }
    for (std::size_t j = 0; j < big.size(); ++j) {
      auto pl = c.position(big.point(j));
      if (pl)
        M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            h.base.matrix()(static_cast<Eigen::Index>(*pk), static_cast<Eigen::Index>(*pl));
    }
  }
  return Section(big, std::move(M));
}

}  // namespace fsm
