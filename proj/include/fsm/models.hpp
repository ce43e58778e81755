#ifndef FSM_MODELS_HPP_
#define FSM_MODELS_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fsm/lattice.hpp"
#include "fsm/weights.hpp"

namespace fsm {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

// Certifies |a_kl| <= C / v(k - l).
struct Envelope {
  double C = 0.0;
  WeightSpec v;
};

// An infinite matrix over Z^d x Z^d given by a pure entry oracle.
class MatrixModel {
 public:
  using EntryFn = std::function<Scalar(const MultiIndex& k, const MultiIndex& l)>;

  MatrixModel(int dim, EntryFn entry, Envelope envelope, bool hermitian,
              std::optional<std::int64_t> band_width, std::string name);

  Scalar operator()(const MultiIndex& k, const MultiIndex& l) const { return entry_(k, l); }
  Scalar entry(const MultiIndex& k, const MultiIndex& l) const { return entry_(k, l); }

  int dim() const { return dim_; }
  const Envelope& envelope() const { return envelope_; }
  bool hermitian() const { return hermitian_; }
  const std::optional<std::int64_t>& band_width() const { return band_width_; }
  const std::string& name() const { return name_; }

 private:
  int dim_;
  EntryFn entry_;
  Envelope envelope_;
  bool hermitian_;
  std::optional<std::int64_t> band_width_;
  std::string name_;
};

// Dense matrix whose rows are indexed by the cube `rows` and columns by the
// cube `cols`, both in lexicographic order. A finite section P_n A P_n has
// rows == cols == C_n; the non-symmetric method uses rows C_r, cols C_n.
class Section {
 public:
  Section(Cube rows, Cube cols, Matrix data);
  Section(Cube square, Matrix data) : Section(square, square, std::move(data)) {}

  const Cube& rows() const { return rows_; }
  const Cube& cols() const { return cols_; }
  const Matrix& matrix() const { return data_; }
  int dim() const { return rows_.dim(); }
  bool is_square() const { return rows_ == cols_; }
  // Column cube radius (the n of A_n or A_{r,n}) and row cube radius.
  std::int64_t n() const { return cols_.radius(); }
  std::int64_t r() const { return rows_.radius(); }

  // Entry at global lattice indices; zero outside the cubes.
  Scalar at(const MultiIndex& k, const MultiIndex& l) const;
  Section adjoint() const;
  // Same entries moved to the cubes j + C (extension B^J).
  Section translated(const MultiIndex& shift) const;

 private:
  Cube rows_;
  Cube cols_;
  Matrix data_;
};

using FiniteSection = Section;
using RectSection = Section;

MatrixModel identity_model(int dim);
// `hermitian` declares that diag is real-valued.
MatrixModel diagonal_model(int dim, std::function<Scalar(const MultiIndex&)> diag, double bound,
                           bool hermitian = false, std::string name = "diagonal");
MatrixModel zero_model(int dim);

// Laurent (bi-infinite Toeplitz) operator a_kl = h_{k-l} from finitely many
// coefficients.
MatrixModel laurent_from_symbol(const std::map<std::int64_t, Scalar>& coeffs);
// Laurent operator from a coefficient rule with a caller-certified envelope
// |h_m| <= C / v(m).
MatrixModel laurent_from_rule(std::function<Scalar(std::int64_t)> h, Envelope envelope,
                              bool hermitian, std::string name);
// h_m = c^{m-1} for m >= 1, zero otherwise; a_00 = 0 and every finite
// section is singular.
MatrixModel laurent_counterexample(double c);

MatrixModel jaffard_synthetic(double s, double amplitude, std::uint64_t seed, int dim,
                              bool hermitian);

// Stacks square blocks along the diagonal: block m occupies anchor_m + C_{n_m}.
MatrixModel block_stack(const std::vector<Section>& blocks, const std::vector<MultiIndex>& anchors);

// Discrete communication channel a_kl = (pulse(. - kR) * h * pulse(. - lT)),
// i.e. the correlation of the pulse with h * pulse evaluated at kR - lT.
// pulse[i] sits at time pulse_offset + i, channel[i] at time i. `decay` is a
// declared rate rho with |h_t| <~ e^{-rho t}; it sets the envelope weight.
struct ChannelSpec {
  std::vector<double> pulse{1.0};
  std::int64_t pulse_offset = 0;
  std::vector<double> channel{1.0};
  std::int64_t T = 1;
  std::int64_t R = 1;
  double decay = 0.0;
};
MatrixModel channel_matrix(const ChannelSpec& spec);
// Kernel kappa(m) with a_kl = kappa(kR - lT); returned with its first index.
std::pair<std::int64_t, std::vector<double>> channel_kernel(const ChannelSpec& spec);

MatrixModel sum(const MatrixModel& A, const MatrixModel& B);
MatrixModel scaled(const MatrixModel& A, double factor);
// A + shift * I
MatrixModel shifted(const MatrixModel& A, double shift);

FiniteSection finite_section(const MatrixModel& A, std::int64_t n);
RectSection rect_section(const MatrixModel& A, std::int64_t r, std::int64_t n);
Section materialize(const MatrixModel& A, const Cube& rows, const Cube& cols);

// C * sum_{m outside C_n} 1/v(m); n < 0 sums over all of Z^d. Infinite when
// 1/v is not summable.
double envelope_mass_outside(const Envelope& env, std::int64_t n);

struct ApplyResult {
  SparseVector y;
  // Bound on the l^1 mass of (Ax) outside C_out_radius: exact for banded
  // models, from the envelope otherwise.
  double truncation_bound = 0.0;
};
ApplyResult apply(const MatrixModel& A, const SparseVector& x, std::int64_t out_radius);

// Dense vector over a cube <-> sparse vector.
Vector to_dense(const SparseVector& x, const Cube& cube);
SparseVector to_sparse(const Vector& v, const Cube& cube);

// One line per row, values in lexicographic cube order. Complex entries are
// written as re+imj.
void write_section_csv(std::ostream& os, const Section& section);

}  // namespace fsm

#endif  // FSM_MODELS_HPP_
