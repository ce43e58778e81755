#ifndef FSM_WEIGHTS_HPP_
#define FSM_WEIGHTS_HPP_

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fsm/lattice.hpp"

namespace fsm {

// Choice of the norm d(x) inside a weight.
enum class NormKind { sup, euclidean, taxicab };

std::string to_string(NormKind kind);
NormKind parse_norm_kind(const std::string& name);

// Weight of the form v(x) = e^{a d(x)^b} (1 + d(x))^s on Z^d, or a tabulated
// radial profile v = table[d(x)] with a polynomial tail beyond the table.
//
// The exponential factor is taken to be 1 at x = 0 so that v(0) = 1 also for
// b = 0. Negative s gives moderate (not submultiplicative) weights.
class WeightSpec {
 public:
  // Far-field representation scale * e^{a t^b} (1+t)^s, valid for t >= start.
  struct FarField {
    double scale = 1.0;
    double a = 0.0;
    double b = 0.0;
    double s = 0.0;
    double start = 0.0;
  };

  WeightSpec() : WeightSpec(1, 0.0, 0.0, 0.0, NormKind::sup) {}
  WeightSpec(int dim, double a, double b, double s, NormKind kind = NormKind::sup);

  static WeightSpec constant(int dim) { return WeightSpec(dim, 0.0, 0.0, 0.0); }
  static WeightSpec polynomial(int dim, double s, NormKind kind = NormKind::sup) {
    return WeightSpec(dim, 0.0, 0.0, s, kind);
  }
  static WeightSpec exponential(int dim, double a, double b = 1.0,
                                NormKind kind = NormKind::sup) {
    return WeightSpec(dim, a, b, 0.0, kind);
  }
  // values[j] = v at d(x) = j, values[0] must be 1; beyond the table
  // v(t) = values.back() * ((1+t)/(1+L))^tail_exponent.
  static WeightSpec tabulated(int dim, std::vector<double> values,
                              double tail_exponent,
                              NormKind kind = NormKind::sup);

  double operator()(const MultiIndex& k) const { return eval(k); }
  double eval(const MultiIndex& k) const;
  // Value as a function of t = d(x).
  double radial(double t) const;
  double distance(const MultiIndex& k) const;

  int dim() const { return dim_; }
  double a() const { return a_; }
  double b() const { return b_; }
  double s() const { return s_; }
  NormKind norm_kind() const { return kind_; }
  bool is_tabulated() const { return !table_.empty(); }
  const std::vector<double>& table() const { return table_; }
  double tail_exponent() const { return tail_exponent_; }
  bool is_constant() const;

  FarField far_field() const;

  friend bool operator==(const WeightSpec&, const WeightSpec&) = default;

 private:
  int dim_;
  double a_;
  double b_;
  double s_;
  NormKind kind_;
  std::vector<double> table_;
  double tail_exponent_ = 0.0;
};

// Finitely supported sequence over Z^d.
class SparseVector {
 public:
  explicit SparseVector(int dim) : dim_(dim) {}

  static SparseVector unit(const MultiIndex& k, Scalar value = 1.0);

  int dim() const { return dim_; }
  // Stores value at k; explicit zeros are dropped.
  void set(const MultiIndex& k, Scalar value);
  void add(const MultiIndex& k, Scalar value);
  Scalar get(const MultiIndex& k) const;
  const std::map<MultiIndex, Scalar>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  std::size_t nnz() const { return entries_.size(); }

  // Smallest radius R with supp(x) inside C_R (0 for the zero vector).
  std::int64_t bounding_radius() const;

  // P_n x and (I - P_n) x.
  SparseVector restricted(std::int64_t n) const;
  SparseVector outside(std::int64_t n) const;

  SparseVector& operator+=(const SparseVector& other);
  SparseVector& operator-=(const SparseVector& other);
  SparseVector operator*(Scalar factor) const;
  friend SparseVector operator+(SparseVector lhs, const SparseVector& rhs) {
    lhs += rhs;
    return lhs;
  }
  friend SparseVector operator-(SparseVector lhs, const SparseVector& rhs) {
    lhs -= rhs;
    return lhs;
  }

  // Largest |x_k - y_k| over the union of supports.
  double max_abs_diff(const SparseVector& other) const;

 private:
  int dim_;
  std::map<MultiIndex, Scalar> entries_;
};

// l^p_m. p = infinity is spelled std::numeric_limits<double>::infinity().
struct SpaceSpec {
  double p = 2.0;
  WeightSpec m;

  SpaceSpec() = default;
  SpaceSpec(double p_, WeightSpec m_);
  static SpaceSpec l2(int dim) { return SpaceSpec(2.0, WeightSpec::constant(dim)); }
  bool is_sup() const { return p == std::numeric_limits<double>::infinity(); }
};

double eval_weight(const WeightSpec& w, const MultiIndex& k);

struct SubmultiplicativeReport {
  bool holds = true;
  double worst_ratio = 0.0;
  MultiIndex worst_k;
  MultiIndex worst_l;
};
SubmultiplicativeReport check_submultiplicative(const WeightSpec& w, std::int64_t radius);

// v(n k)^{1/n} for n = 1..n_max.
std::vector<double> check_grs(const WeightSpec& w, const MultiIndex& k, int n_max);

struct SubconvolutiveReport {
  bool divergent = false;     // v^{-1} is not summable
  double C_est = 0.0;         // max_k (v^{-1} * v^{-1})(k) v(k), truncated
  double C_upper = 0.0;       // C_est plus the certified truncation remainder
  MultiIndex worst_k;
  std::int64_t truncation_radius = 0;
};
SubconvolutiveReport check_subconvolutive(const WeightSpec& v, std::int64_t radius);

struct ModerateReport {
  double C_est = 0.0;  // max m(k+l) / (m(k) v(l)) over k, l in C_radius
  MultiIndex worst_k;
  MultiIndex worst_l;
};
ModerateReport check_moderate(const WeightSpec& m, const WeightSpec& v, std::int64_t radius);

double lp_norm(const SparseVector& x, const SpaceSpec& space);

// Exponent r of the tail functional: 1/r = max(1/q - 1/p, 0); infinity when p <= q.
double tail_exponent_r(double p, double q);

struct TailSum {
  double value = 0.0;           // certified upper bound of the quantity
  double lower = 0.0;           // certified lower bound
  double relative_error = 0.0;  // (value - lower) / value
  std::int64_t explicit_radius = 0;
};

// Sum over k outside C_n of (w(k)/m(k))^r for finite r >= 1, or the supremum
// of w/m there when r is infinite. Throws EmbeddingError when it diverges.
TailSum weighted_tail(const WeightSpec& w, const WeightSpec& m, double r,
                      std::int64_t n, double rel_tol = 1e-9);

// phi(n) = ( sum_{k not in C_n} (w(k)/m(k))^r )^{1/r}; the returned value is a
// certified upper bound within relative error rel_tol when reachable.
double tail_phi(const WeightSpec& m, const WeightSpec& w, double p, double q,
                std::int64_t n);
TailSum tail_phi_report(const WeightSpec& m, const WeightSpec& w, double p, double q,
                        std::int64_t n);

// Partial sums of sum_{k>=1} log v(k x) / k^2 along the first axis.
struct BeurlingDomarReport {
  double x = 1.0;
  std::vector<std::int64_t> checkpoints;
  std::vector<double> partial_sums;
  bool cauchy = false;
};
BeurlingDomarReport check_beurling_domar(const WeightSpec& v, std::int64_t x,
                                         std::int64_t k_max = 1000000);

}  // namespace fsm

#endif  // FSM_WEIGHTS_HPP_
