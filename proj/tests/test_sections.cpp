#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "doctest.h"
#include "support/gen.hpp"

#include "fsm/algebra.hpp"
#include "fsm/errors.hpp"
#include "fsm/sections.hpp"

using namespace fsm;

namespace {

const double kSchur3 = 2.0 * 1.2020569031595942 - 1.0;  // sum_m (1+|m|)^{-3}

MatrixModel perturbed_identity(std::uint64_t seed) {
  return shifted(scaled(jaffard_synthetic(3.0, 1.0, seed, 1, true), 0.1), 1.0);
}

Eigen::VectorXd eigenvalues(const Section& S) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(S.matrix(), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

Section dense(std::initializer_list<std::initializer_list<double>> rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  Matrix M(n, n);
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double x : r) M(i, j++) = x;
    ++i;
  }
  // odd sizes live on a cube; an even 2x2 is padded onto C_1 with a unit corner
  if (n % 2 == 1) return Section(Cube(1, (n - 1) / 2), M);
  Matrix P = Matrix::Identity(n + 1, n + 1);
  P.topLeftCorner(n, n) = M;
  return Section(Cube(1, n / 2), P);
}

}  // namespace

TEST_CASE("spectral bounds examples") {
  const auto b2 = estimate_spectral_bounds(scaled(identity_model(1), 2.0), 4);
  CHECK(b2.lambda_minus == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(b2.lambda_plus == doctest::Approx(2.0).epsilon(1e-14));

  const MatrixModel D = diagonal_model(
      1, [](const MultiIndex& k) { return Scalar(k[0] % 2 == 0 ? 1.0 : 3.0); }, 3.0, true);
  const auto bd = estimate_spectral_bounds(D, 3);
  CHECK(bd.lambda_minus == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(bd.lambda_plus == doctest::Approx(3.0).epsilon(1e-14));

  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto b = estimate_spectral_bounds(perturbed_identity(seed), 10);
    CHECK(b.lambda_minus >= 1.0 - 0.1 * kSchur3);
    CHECK(b.lambda_plus <= 1.0 + 0.1 * kSchur3);
    CHECK(b.positive());
  }
  CHECK_THROWS_AS(estimate_spectral_bounds(laurent_counterexample(0.5), 4), ModelRejected);
}

TEST_CASE("schur bound is a safe upper bound") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const MatrixModel A = perturbed_identity(seed);
    const auto eig = estimate_spectral_bounds(A, 8);
    const auto schur = estimate_spectral_bounds(A, 8, SpectralBounds::Method::schur_bound);
    CHECK(schur.method == SpectralBounds::Method::schur_bound);
    CHECK(schur.lambda_plus >= eig.lambda_plus);
    CHECK(schur.lambda_plus >= norm_av1(finite_section(A, 8), WeightSpec::constant(1)).value);
  }
}

TEST_CASE("spectral inclusion for every section") {
  gen::Rng g(21);
  for (int t = 0; t < 5; ++t) {
    const MatrixModel A = gen::positive_jaffard(g, 3.0);
    const auto b = estimate_spectral_bounds(A, 12);
    for (std::int64_t n = 1; n <= 12; ++n) {
      const Eigen::VectorXd ev = eigenvalues(finite_section(A, n));
      CHECK(ev.minCoeff() >= b.lambda_minus - b.margin - 1e-12);
      CHECK(ev.maxCoeff() <= b.lambda_plus + b.margin + 1e-12);
    }
  }
}

TEST_CASE("inverse norms of sections are monotone and uniformly bounded") {
  gen::Rng g(22);
  for (int t = 0; t < 5; ++t) {
    const MatrixModel A = gen::positive_jaffard(g, 3.0);
    std::vector<double> inv;
    for (std::int64_t n = 0; n <= 12; ++n) inv.push_back(operator_norm_l2(section_inverse(finite_section(A, n))));
    for (std::size_t i = 1; i < inv.size(); ++i) CHECK(inv[i] >= inv[i - 1] * (1.0 - 1e-12));
    for (double x : inv) CHECK(x <= inv.back() * (1.0 + 1e-8));
    CHECK(inv.back() <= 1.0 / estimate_spectral_bounds(A, 12).lambda_minus * (1.0 + 1e-8));
  }
}

TEST_CASE("Av norms of section inverses stay bounded") {
  const WeightSpec v = WeightSpec::polynomial(1, 2.0);
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const MatrixModel A = perturbed_identity(seed);
    double running = 0.0, at6 = 0.0;
    for (std::int64_t n = 2; n <= 12; ++n) {
      running = std::max(running, norm_av(section_inverse(finite_section(A, n)), v).value);
      if (n == 6) at6 = running;
    }
    CHECK(running < 1.05 * at6);
  }
}

TEST_CASE("solve_dense examples") {
  const Section I = finite_section(identity_model(1), 2);
  Vector e0 = Vector::Zero(5);
  e0(2) = 1.0;
  const DenseSolve s = solve_dense(I, e0);
  CHECK((s.x - e0).norm() == 0.0);
  CHECK(s.residual == 0.0);

  const Section T = dense({{2, 1}, {1, 2}});
  Vector rhs(3);
  rhs << 3.0, 3.0, 0.0;
  const Vector x = solve_dense(T, rhs).x;
  CHECK(std::abs(x(0) - 1.0) < 1e-14);
  CHECK(std::abs(x(1) - 1.0) < 1e-14);

  gen::Rng g(24);
  for (std::int64_t n : {1, 3, 6}) {
    const Section C = finite_section(laurent_counterexample(0.5), n);
    Vector r(C.matrix().rows());
    for (Eigen::Index i = 0; i < r.size(); ++i) r(i) = g.uniform(-1.0, 1.0);
    CHECK_THROWS_AS(solve_dense(C, r), SingularSection);
  }
  CHECK_THROWS_AS(solve_dense(I, Vector(Vector::Zero(3))), ValidationError);
}

TEST_CASE("solve_dense residual on random positive sections") {
  gen::Rng g(25);
  for (int t = 0; t < 10; ++t) {
    const Section S = finite_section(gen::positive_jaffard(g, 3.0), 10);
    Vector rhs(S.matrix().rows());
    for (Eigen::Index i = 0; i < rhs.size(); ++i) rhs(i) = Scalar(g.uniform(-1.0, 1.0), g.uniform(-1.0, 1.0));
    const DenseSolve s = solve_dense(S, rhs);
    CHECK(s.residual <= 1e-12 * rhs.norm());
    CHECK((S.matrix() * s.x - rhs).norm() == doctest::Approx(s.residual).epsilon(1e-6).scale(1e-15));
  }
}

TEST_CASE("section_inverse examples") {
  const Section I = finite_section(identity_model(1), 1);
  CHECK((section_inverse(I).matrix() - I.matrix()).norm() == 0.0);

  Matrix D = Matrix::Identity(3, 3);
  D(0, 0) = 2.0;
  D(1, 1) = 4.0;
  const Matrix Di = section_inverse(Section(Cube(1, 1), D)).matrix();
  CHECK(std::abs(Di(0, 0) - 0.5) == 0.0);
  CHECK(std::abs(Di(1, 1) - 0.25) == 0.0);

  // adjugate of [[2,1],[1,2]]
  const Matrix Ti = section_inverse(dense({{2, 1}, {1, 2}})).matrix();
  CHECK(std::abs(Ti(0, 0) - 2.0 / 3.0) < 1e-15);
  CHECK(std::abs(Ti(0, 1) + 1.0 / 3.0) < 1e-15);
  CHECK(std::abs(Ti(1, 0) + 1.0 / 3.0) < 1e-15);
  CHECK(std::abs(Ti(1, 1) - 2.0 / 3.0) < 1e-15);

  CHECK_THROWS_AS(section_inverse(finite_section(laurent_counterexample(0.5), 3)), SingularSection);
}

TEST_CASE("extension_inverse_apply examples") {
  const MultiIndex o{0}, f{5};
  const ExtensionHandle id{finite_section(identity_model(1), 2), 1.0};
  SparseVector y(1);
  y.set(MultiIndex{-1}, 0.25);
  y.set(f, Scalar(1.0, -2.0));
  CHECK(extension_inverse_apply(id, y).max_abs_diff(y) == 0.0);

  const ExtensionHandle h{finite_section(identity_model(1), 1), 4.0};
  SparseVector far(1);
  far.set(MultiIndex{7}, 2.0);
  far.set(MultiIndex{-3}, 1.0);
  CHECK(extension_inverse_apply(h, far).max_abs_diff(far * 0.25) == 0.0);

  const ExtensionHandle two{finite_section(scaled(identity_model(1), 2.0), 1), 2.0};
  const SparseVector z = extension_inverse_apply(two, SparseVector::unit(o) + SparseVector::unit(f));
  CHECK(z.get(o) == Scalar(0.5));
  CHECK(z.get(f) == Scalar(0.5));
  CHECK(z.nnz() == 2);

  const ExtensionHandle bad{finite_section(laurent_counterexample(0.5), 2), 1.0};
  CHECK_THROWS_AS(extension_inverse_apply(bad, SparseVector::unit(o)), SingularSection);
  CHECK_THROWS_AS(extension_inverse_apply(ExtensionHandle{finite_section(identity_model(1), 1), 0.0}, y), ValidationError);
}

TEST_CASE("extension agrees with its materialization") {
  gen::Rng g(26);
  for (int t = 0; t < 10; ++t) {
    const MatrixModel A = gen::positive_jaffard(g, 3.0);
    const std::int64_t n = g.integer(1, 6), N = n + g.integer(1, 6);
    const ExtensionHandle h{finite_section(A, n), estimate_spectral_bounds(A, N).lambda_plus};
    const SparseVector y = gen::sparse_vector(g, 1, N, 8);
    const Section E = extension_section(h, N);
    const Cube big(1, N);
    const SparseVector dense_x = to_sparse(solve_dense(E, to_dense(y, big)).x, big);
    CHECK(extension_inverse_apply(h, y).max_abs_diff(dense_x) <= 1e-10);
  }
  const ExtensionHandle h{finite_section(identity_model(1), 2), 1.0};
  CHECK_THROWS_AS(extension_section(h, 1), ValidationError);
}
