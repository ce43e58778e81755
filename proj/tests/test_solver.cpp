#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "doctest.h"
#include "support/gen.hpp"

#include "fsm/algebra.hpp"
#include "fsm/errors.hpp"
#include "fsm/solver.hpp"

using namespace fsm;

namespace {

MatrixModel tridiagonal(double diag) { return laurent_from_symbol({{-1, 1.0}, {0, diag}, {1, 1.0}}); }

FsmConfig sym(std::int64_t n) {
  FsmConfig c;
  c.n = n;
  return c;
}

NonSymConfig nonsym(std::int64_t n, std::int64_t r, NormalBackend backend = NormalBackend::normal_equations) {
  NonSymConfig c;
  c.n = n;
  c.r = r;
  c.backend = backend;
  return c;
}

double l2_diff(const SparseVector& a, const SparseVector& b) {
  const SparseVector d = a - b;
  double s = 0.0;
  for (const auto& [k, v] : d.entries()) s += std::norm(v);
  return std::sqrt(s);
}

SparseVector power_rhs(std::int64_t radius) {
  SparseVector b(1);
  for (std::int64_t k = -radius; k <= radius; ++k)
    b.set(MultiIndex{k}, std::pow(1.0 + static_cast<double>(std::llabs(k)), -3.0));
  return b;
}

double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Off-center invertible model: 2I + J with J non-hermitian, Schur bound < 2.
MatrixModel invertible_nonhermitian(gen::Rng& g) {
  return shifted(jaffard_synthetic(3.0, g.uniform(0.2, 1.0), g.seed(), 1, false), 2.0);
}

}  // namespace

TEST_CASE("symmetric FSM on the identity returns P_n b") {
  gen::Rng g(31);
  for (int t = 0; t < 10; ++t) {
    const SparseVector b = gen::sparse_vector(g, 1, 12, 10);
    const std::int64_t n = g.integer(0, 12);
    const FsmResult r = solve_fsm(identity_model(1), b, sym(n));
    CHECK(r.x.max_abs_diff(b.restricted(n)) == 0.0);
    CHECK(r.residual == 0.0);
  }
}

TEST_CASE("symmetric FSM on an invertible tridiagonal Toeplitz matrix") {
  // z + 3 + 1/z has roots rho, 1/rho; x_k = rho^|k| / sqrt(5) solves A x = e_0.
  const double rho = (std::sqrt(5.0) - 3.0) / 2.0;
  const SparseVector e0 = SparseVector::unit(MultiIndex{0});
  const SparseVector x20 = solve_fsm(tridiagonal(3.0), e0, sym(20)).x;
  const SparseVector x40 = solve_fsm(tridiagonal(3.0), e0, sym(40)).x;
  CHECK(x20.max_abs_diff(x40.restricted(20)) < 1e-8);
  for (std::int64_t k = -20; k <= 20; ++k)
    CHECK(std::abs(x40.get(MultiIndex{k}) - std::pow(rho, std::llabs(k)) / std::sqrt(5.0)) < 1e-15);
}

TEST_CASE("symmetric FSM does not converge for the singular symbol 2 + z + 1/z") {
  // Sections are discrete Laplacians: the central entry of A_n^{-1} is (n+1)/2.
  const SparseVector e0 = SparseVector::unit(MultiIndex{0});
  for (std::int64_t n : {10, 20, 40}) {
    const SparseVector x = solve_fsm(tridiagonal(2.0), e0, sym(n)).x;
    CHECK(x.get(MultiIndex{0}).real() == doctest::Approx((n + 1) / 2.0).epsilon(1e-10));
  }
}

TEST_CASE("symmetric FSM errors decrease for I + 0.1 Jaffard") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const MatrixModel A = shifted(scaled(jaffard_synthetic(3.0, 1.0, seed, 1, true), 0.1), 1.0);
    const SparseVector ref = solve_fsm(A, power_rhs(200), sym(200)).x;
    double prev = INFINITY;
    for (std::int64_t n : {2, 4, 8, 16, 32, 64}) {
      const double e = l2_diff(solve_fsm(A, power_rhs(n), sym(n)).x, ref);
      CHECK(e < prev);
      prev = e;
    }
  }
}

TEST_CASE("symmetric FSM rejects non-positive models") {
  CHECK_THROWS_AS(solve_fsm(laurent_counterexample(0.5), SparseVector::unit(MultiIndex{0}), sym(4)), ModelRejected);
  CHECK_THROWS_AS(solve_fsm(scaled(identity_model(1), -1.0), SparseVector::unit(MultiIndex{0}), sym(4)),
                  ModelRejected);
  FsmConfig plain = sym(4);
  plain.require_positive = false;
  CHECK_THROWS_AS(solve_fsm(laurent_counterexample(0.5), SparseVector::unit(MultiIndex{0}), plain), SingularSection);
}

TEST_CASE("choose_r examples") {
  const RSchedule a = choose_r(4, 2.0, 1);
  CHECK(a.r == 9);
  CHECK(a.alpha == doctest::Approx(4.0 / 3.0 + 0.25));
  CHECK(a.threshold == doctest::Approx(4.0 / 3.0));
  CHECK_FALSE(a.below_threshold);
  CHECK(choose_r(3, 2.0, 1, 2.0).r == 9);
  CHECK(choose_r(3, 2.0, 1, 1.2).below_threshold);
  CHECK(choose_r(1, 2.0, 1).r == 2);
  CHECK(choose_r(0, 2.0, 1).r == 1);
  CHECK_THROWS_AS(choose_r(4, 0.5, 1), ValidationError);
  CHECK(choose_r_banded(5, 1) == 6);
  gen::Rng g(32);
  for (int t = 0; t < 100; ++t) {
    const std::int64_t n = g.integer(0, 50);
    const double s = g.uniform(0.6, 5.0);
    const RSchedule r = choose_r(n, s, 1);
    CHECK(r.r >= n + 1);
    CHECK(static_cast<double>(r.r) >= std::pow(static_cast<double>(n), r.alpha) - 1e-6);
  }
}

TEST_CASE("non-symmetric FSM examples") {
  gen::Rng g(33);
  for (int t = 0; t < 5; ++t) {
    const SparseVector b = gen::sparse_vector(g, 1, 10, 8);
    const std::int64_t n = g.integer(0, 8);
    CHECK(solve_fsm_nonsym(identity_model(1), b, nonsym(n, n + g.integer(0, 5))).x.max_abs_diff(b.restricted(n)) <
          1e-15);
  }

  // A (e_{-1} - c e_0) = e_0
  SparseVector exact(1);
  exact.set(MultiIndex{-1}, 1.0);
  exact.set(MultiIndex{0}, -0.5);
  const MatrixModel C = laurent_counterexample(0.5);
  const ApplyResult check = apply(C, exact, 4);
  CHECK(check.y.max_abs_diff(SparseVector::unit(MultiIndex{0})) == 0.0);
  const NonSymResult r = solve_fsm_nonsym(C, SparseVector::unit(MultiIndex{0}), nonsym(8, 16));
  CHECK(r.x.max_abs_diff(exact) < 1e-8);
  CHECK(r.residual < 1e-8);
  CHECK(solve_fsm_nonsym(C, SparseVector::unit(MultiIndex{0}), nonsym(8, 16, NormalBackend::qr)).x.max_abs_diff(exact) <
        1e-8);
  CHECK_THROWS_AS(solve_fsm_nonsym(C, SparseVector::unit(MultiIndex{0}), nonsym(8, 8)), SingularSection);
  CHECK_THROWS_AS(solve_fsm_nonsym(C, SparseVector::unit(MultiIndex{0}), nonsym(8, 8, NormalBackend::qr)),
                  SingularSection);

  const NonSymResult z = solve_fsm_nonsym(C, SparseVector(1), nonsym(4, 8));
  CHECK(z.x.empty());
  CHECK(z.residual == 0.0);
  CHECK_THROWS_AS(solve_fsm_nonsym(C, SparseVector(1), nonsym(4, 3)), ValidationError);
}

TEST_CASE("non-symmetric and symmetric pipelines agree on a hermitian tridiagonal model") {
  const SparseVector e0 = SparseVector::unit(MultiIndex{0});
  for (std::int64_t n : {30, 40}) {
    const SparseVector xs = solve_fsm(tridiagonal(3.0), e0, sym(n)).x;
    const SparseVector xn = solve_fsm_nonsym(tridiagonal(3.0), e0, nonsym(n, n + 1)).x;
    CHECK(xs.max_abs_diff(xn) < 1e-10);
  }
}

TEST_CASE("QR and normal-equation backends agree") {
  gen::Rng g(34);
  for (int t = 0; t < 10; ++t) {
    const MatrixModel A = invertible_nonhermitian(g);
    const SparseVector b = gen::sparse_vector(g, 1, 6, 6);
    const std::int64_t n = g.integer(2, 12), r = n + g.integer(1, 12);
    const SparseVector xn = solve_fsm_nonsym(A, b, nonsym(n, r)).x;
    const SparseVector xq = solve_fsm_nonsym(A, b, nonsym(n, r, NormalBackend::qr)).x;
    CHECK(xn.max_abs_diff(xq) < 1e-8);
  }
}

TEST_CASE("defect matrix examples") {
  const MatrixModel T = tridiagonal(2.0);
  for (std::int64_t n : {0, 3, 7}) {
    const DefectResult d = defect_matrix(T, n + 1, n);
    CHECK(d.E.matrix().cwiseAbs().maxCoeff() == 0.0);
    CHECK(d.remainder_bound == 0.0);
    // r = n leaves the two boundary rows in the defect; at n = 0 both hit the same column
    CHECK(defect_matrix(T, n, n).E.matrix().cwiseAbs().maxCoeff() == (n == 0 ? 2.0 : 1.0));
  }
  CHECK(defect_matrix(identity_model(1), 5, 3).E.matrix().cwiseAbs().maxCoeff() == 0.0);
  CHECK(defect_matrix(identity_model(1), 3, 3).E.matrix().cwiseAbs().maxCoeff() == 0.0);

  gen::Rng g(35);
  for (int t = 0; t < 5; ++t) {
    const MatrixModel J = gen::jaffard(g, 3.0, false);
    const DefectResult d = defect_matrix(J, 6, 2);
    CHECK(d.remainder_bound <= 1e-12);
    CHECK(norm_av(d.E, J.envelope().v).value <= defect_bound(J, 6, 2));

    // tail oracle: A^*A over a far larger row cube minus the truncated part
    const Matrix far = rect_section(J, 400, 2).matrix(), near = rect_section(J, 6, 2).matrix();
    const Matrix oracle = far.adjoint() * far - near.adjoint() * near;
    CHECK((d.E.matrix() - oracle).cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK_THROWS_AS(defect_matrix(identity_model(1), 2, 3), ValidationError);
}

TEST_CASE("defect decays in r and vanishes at the envelope-predicted radius") {
  // E_{r,n} is a decreasing family of positive semidefinite matrices: its
  // operator norm is monotone, its weighted entrywise sup only under the bound.
  gen::Rng g(36);
  for (int t = 0; t < 5; ++t) {
    const MatrixModel J = gen::jaffard(g, 3.0, false);
    const WeightSpec& v = J.envelope().v;
    const std::int64_t n = 3;
    double prev = INFINITY, prev_bound = INFINITY;
    for (std::int64_t r = n; r <= 40; ++r) {
      const Section E = defect_matrix(J, r, n).E;
      const double e = operator_norm_l2(E), bound = defect_bound(J, r, n);
      CHECK(e <= prev * (1.0 + 1e-12) + 1e-15);
      CHECK(norm_av(E, v).value <= bound);
      CHECK(bound <= prev_bound);
      prev = e;
      prev_bound = bound;
    }
    std::int64_t r = n;
    while (defect_bound(J, r, n) >= 1e-6) ++r;
    CHECK(norm_av(defect_matrix(J, r, n).E, v).value < 1e-6);
  }
}

TEST_CASE("defect rate along the power schedule") {
  gen::Rng g(37);
  const double s = 3.0;
  for (int t = 0; t < 3; ++t) {
    const MatrixModel J = gen::jaffard(g, s, false);
    std::vector<double> lx, ly;
    double alpha = 0.0;
    for (std::int64_t n = 2; n <= 14; n += 2) {
      const RSchedule sch = choose_r(n, s, 1);
      alpha = sch.alpha;
      lx.push_back(std::log(static_cast<double>(n)));
      ly.push_back(std::log(norm_av(defect_matrix(J, sch.r, n).E, J.envelope().v).value));
    }
    CHECK(slope(lx, ly) <= alpha * (1.0 - 2.0 * s) + 2.0 * s + 0.3);
  }
}

TEST_CASE("small defect guarantees an invertible normal matrix") {
  gen::Rng g(38);
  int exercised = 0;
  for (int t = 0; t < 20; ++t) {
    const MatrixModel A = invertible_nonhermitian(g);
    const std::int64_t n = g.integer(1, 8), r = n + g.integer(0, 10);
    const Section B = normal_section(A, n);
    Eigen::SelfAdjointEigenSolver<Matrix> es(B.matrix(), Eigen::EigenvaluesOnly);
    const double lambda = es.eigenvalues().minCoeff();
    const double defect = operator_norm_l2(defect_matrix(A, r, n).E);
    if (defect >= lambda) continue;
    ++exercised;
    const Matrix D = rect_section(A, r, n).matrix().adjoint() * rect_section(A, r, n).matrix();
    Eigen::SelfAdjointEigenSolver<Matrix> ed(D, Eigen::EigenvaluesOnly);
    CHECK(ed.eigenvalues().minCoeff() >= lambda - defect - 1e-10);
    CHECK_NOTHROW(solve_fsm_nonsym(A, SparseVector::unit(MultiIndex{0}), nonsym(n, r)));
  }
  CHECK(exercised >= 10);
}

TEST_CASE("non-symmetric solutions converge in r to the full normal-equation solution") {
  // As r grows x_{r,n} tends to B_n^{-1} P_n A^* b, not to A_n^{-1} P_n b.
  gen::Rng g(39);
  for (int t = 0; t < 5; ++t) {
    const MatrixModel A = gen::positive_jaffard(g, 3.0);
    const SparseVector b = power_rhs(10);
    const std::int64_t n = 8;
    const Matrix Astar_b = rect_section(A, 10, n).matrix().adjoint() * to_dense(b, Cube(1, 10));
    const Vector limit = solve_dense(normal_section(A, n), Vector(Astar_b)).x;
    const SparseVector x_inf = to_sparse(limit, Cube(1, n));
    double prev = INFINITY;
    for (std::int64_t m : {1, 2, 4, 8, 16}) {
      const double d = l2_diff(solve_fsm_nonsym(A, b, nonsym(n, n + m)).x, x_inf);
      if (prev > 1e-12) CHECK(d <= 0.5 * prev);
      prev = d;
    }
  }
}

TEST_CASE("symmetric and non-symmetric solutions meet as n grows") {
  gen::Rng g(40);
  for (int t = 0; t < 5; ++t) {
    const MatrixModel A = gen::positive_jaffard(g, 3.0);
    double prev = INFINITY;
    for (std::int64_t n : {8, 16, 32}) {
      const SparseVector b = power_rhs(n);
      const double d = l2_diff(solve_fsm(A, b, sym(n)).x, solve_fsm_nonsym(A, b, nonsym(n, 2 * n)).x);
      CHECK(d < prev);
      prev = d;
    }
    CHECK(prev < 1e-5);
  }
}

TEST_CASE("solver records") {
  std::ostringstream os;
  write_solver_record(os, 4, 9, 1e-3, 2.5e-4, 0.125);
  const std::string s = os.str();
  for (const char* key : {"\"n\"", "\"r\"", "\"residual\"", "\"error_vs_reference\"", "\"wall_time\""})
    CHECK(s.find(key) != std::string::npos);
}
