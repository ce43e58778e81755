#ifndef FSM_SECTIONS_HPP_
#define FSM_SECTIONS_HPP_

#include <cstdint>

#include "fsm/models.hpp"
#include "fsm/weights.hpp"

namespace fsm {

struct SpectralBounds {
  enum class Method { eig_of_largest_section, schur_bound };

  double lambda_minus = 0.0;
  double lambda_plus = 0.0;
  // Envelope coupling mass beyond the probe cube; reported, not certified.
  double margin = 0.0;
  Method method = Method::eig_of_largest_section;

  bool positive() const { return lambda_minus > 0.0 && lambda_minus <= lambda_plus; }
};

// Extreme eigenvalues of the Hermitian section A_{n_probe}. With
// Method::schur_bound lambda_plus is the safe upper bound
// norm_av1(A_{n_probe}, 1) + off-diagonal envelope mass.
SpectralBounds estimate_spectral_bounds(const MatrixModel& A, std::int64_t n_probe,
                                        SpectralBounds::Method method = SpectralBounds::Method::eig_of_largest_section);

struct DenseSolve {
  Vector x;
  double residual = 0.0;  // ||B x - rhs||_2
};

// Row-pivoted elimination. Throws SingularSection when a pivot falls below
// 1e-14 * max|B_ij|.
DenseSolve solve_dense(const Section& B, const Vector& rhs);
Matrix solve_dense(const Section& B, const Matrix& rhs);

// Dense inverse with ||B B^{-1} - I||_max <= 1e-9 enforced.
Section section_inverse(const Section& B);

// A_n + lambda_plus (I - P_n), acting on all of Z^d.
struct ExtensionHandle {
  Section base;
  double lambda_plus = 1.0;
};

// A_n^{-1} P_n y + lambda_plus^{-1} (I - P_n) y.
SparseVector extension_inverse_apply(const ExtensionHandle& h, const SparseVector& y);
// The extension materialized on a larger cube C_N.
Section extension_section(const ExtensionHandle& h, std::int64_t N);

}  // namespace fsm

#endif  // FSM_SECTIONS_HPP_
