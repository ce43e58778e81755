#include "fsm/models.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <memory>
#include <numbers>
#include <sstream>

#include "fsm/errors.hpp"

namespace fsm {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based stream keyed by (seed, k, l, lane).
double uniform01(std::uint64_t seed, const MultiIndex& k, const MultiIndex& l, std::uint64_t lane) {
  std::uint64_t h = splitmix64(seed ^ (lane * 0xd1b54a32d192ed03ULL));
  for (auto c : k.coords()) h = splitmix64(h ^ static_cast<std::uint64_t>(c));
  h = splitmix64(h ^ 0x5555555555555555ULL);
  for (auto c : l.coords()) h = splitmix64(h ^ static_cast<std::uint64_t>(c));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

std::int64_t offset_of(const MultiIndex& k, const MultiIndex& l) { return (k - l).sup_norm(); }

// Largest C' with |entry| <= C' / v_target(k-l) for a model banded at width w
// whose entries are bounded by C / v_src(k-l).
double rebased_constant(const Envelope& env, std::int64_t w, const WeightSpec& target) {
  double best = 0.0;
  Cube band(target.dim(), w);
  for (std::size_t i = 0; i < band.size(); ++i) {
    const MultiIndex m = band.point(i);
    best = std::max(best, env.C * target(m) / env.v(m));
  }
  return best;
}

}  // namespace

MatrixModel::MatrixModel(int dim, EntryFn entry, Envelope envelope, bool hermitian,
                         std::optional<std::int64_t> band_width, std::string name)
    : dim_(dim),
      entry_(std::move(entry)),
      envelope_(std::move(envelope)),
      hermitian_(hermitian),
      band_width_(band_width),
      name_(std::move(name)) {
  if (dim < 1) throw ValidationError("model dimension must be >= 1");
  if (envelope_.v.dim() != dim) throw ValidationError("envelope weight dimension mismatch");
  if (band_width_ && *band_width_ < 0) throw ValidationError("band width must be >= 0");
}

// ---------------------------------------------------------------------------
// Section

Section::Section(Cube rows, Cube cols, Matrix data)
    : rows_(std::move(rows)), cols_(std::move(cols)), data_(std::move(data)) {
  if (rows_.dim() != cols_.dim()) throw std::invalid_argument("Section: cube dimension mismatch");
  if (static_cast<std::size_t>(data_.rows()) != rows_.size() ||
      static_cast<std::size_t>(data_.cols()) != cols_.size())
    throw std::invalid_argument("Section: data shape does not match cubes");
}

Scalar Section::at(const MultiIndex& k, const MultiIndex& l) const {
  auto i = rows_.position(k);
  auto j = cols_.position(l);
  if (!i || !j) return 0.0;
  return data_(static_cast<Eigen::Index>(*i), static_cast<Eigen::Index>(*j));
}

Section Section::adjoint() const { return Section(cols_, rows_, data_.adjoint()); }

Section Section::translated(const MultiIndex& shift) const {
  return Section(rows_.translated(shift), cols_.translated(shift), data_);
}

// ---------------------------------------------------------------------------
// Constructors

MatrixModel identity_model(int dim) {
  return MatrixModel(
      dim, [](const MultiIndex& k, const MultiIndex& l) { return k == l ? Scalar(1.0) : Scalar(0.0); },
      Envelope{1.0, WeightSpec::constant(dim)}, true, 0, "identity");
}

MatrixModel zero_model(int dim) {
  return MatrixModel(
      dim, [](const MultiIndex&, const MultiIndex&) { return Scalar(0.0); },
      Envelope{0.0, WeightSpec::constant(dim)}, true, 0, "zero");
}

MatrixModel diagonal_model(int dim, std::function<Scalar(const MultiIndex&)> diag, double bound,
                           bool hermitian, std::string name) {
  return MatrixModel(
      dim,
      [diag = std::move(diag)](const MultiIndex& k, const MultiIndex& l) {
        return k == l ? diag(k) : Scalar(0.0);
      },
      Envelope{bound, WeightSpec::constant(dim)}, hermitian, 0, std::move(name));
}

MatrixModel laurent_from_symbol(const std::map<std::int64_t, Scalar>& coeffs) {
  std::int64_t width = 0;
  double C = 0.0;
  bool hermitian = true;
  for (const auto& [m, h] : coeffs) {
    if (h == Scalar(0.0)) continue;
    width = std::max<std::int64_t>(width, std::llabs(m));
    C = std::max(C, std::abs(h));
    auto it = coeffs.find(-m);
    const Scalar mirror = it == coeffs.end() ? Scalar(0.0) : it->second;
    if (mirror != std::conj(h)) hermitian = false;
  }
  auto table = std::make_shared<const std::map<std::int64_t, Scalar>>(coeffs);
  return MatrixModel(
      1,
      [table](const MultiIndex& k, const MultiIndex& l) {
        auto it = table->find(k[0] - l[0]);
        return it == table->end() ? Scalar(0.0) : it->second;
      },
      Envelope{C, WeightSpec::constant(1)}, hermitian, width, "laurent");
}

MatrixModel laurent_from_rule(std::function<Scalar(std::int64_t)> h, Envelope envelope,
                              bool hermitian, std::string name) {
  return MatrixModel(
      1, [h = std::move(h)](const MultiIndex& k, const MultiIndex& l) { return h(k[0] - l[0]); },
      std::move(envelope), hermitian, std::nullopt, std::move(name));
}

MatrixModel laurent_counterexample(double c) {
  if (!(std::abs(c) < 1.0)) throw ValidationError("counterexample needs |c| < 1");
  if (c == 0.0) {
    MatrixModel shift = laurent_from_symbol({{1, 1.0}});
    return MatrixModel(1, [shift](const MultiIndex& k, const MultiIndex& l) { return shift(k, l); },
                       shift.envelope(), false, shift.band_width(), "laurent_counterexample");
  }
  // |c|^{m-1} = |c|^{-1} e^{-m log(1/|c|)}
  const double rate = std::log(1.0 / std::abs(c));
  Envelope env{1.0 / std::abs(c), WeightSpec::exponential(1, rate, 1.0)};
  return laurent_from_rule(
      [c](std::int64_t m) { return m >= 1 ? Scalar(std::pow(c, static_cast<double>(m - 1))) : Scalar(0.0); },
      env, false, "laurent_counterexample");
}

MatrixModel jaffard_synthetic(double s, double amplitude, std::uint64_t seed, int dim, bool hermitian) {
  if (!(s > dim)) throw ValidationError("jaffard_synthetic needs s > d");
  if (!(amplitude >= 0.0)) throw ValidationError("amplitude must be >= 0");
  const WeightSpec v = WeightSpec::polynomial(dim, s);
  auto entry = [=](const MultiIndex& k, const MultiIndex& l) -> Scalar {
    if (amplitude == 0.0) return 0.0;
    const double decay = amplitude / v(k - l);
    if (hermitian) {
      if (k == l) return decay * (2.0 * uniform01(seed, k, k, 0) - 1.0);
      // evaluate at the ordered pair so that a_lk = conj(a_kl)
      const bool swapped = l < k;
      const MultiIndex& lo = swapped ? l : k;
      const MultiIndex& hi = swapped ? k : l;
      const double mag = uniform01(seed, lo, hi, 0);
      const double phase = 2.0 * std::numbers::pi * uniform01(seed, lo, hi, 1);
      const Scalar g = std::polar(mag, swapped ? -phase : phase);
      return decay * g;
    }
    const double mag = uniform01(seed, k, l, 0);
    const double phase = 2.0 * std::numbers::pi * uniform01(seed, k, l, 1);
    return decay * std::polar(mag, phase);
  };
  std::ostringstream name;
  name << "jaffard(s=" << s << ",seed=" << seed << ")";
  return MatrixModel(dim, entry, Envelope{amplitude, v}, hermitian, std::nullopt, name.str());
}

MatrixModel block_stack(const std::vector<Section>& blocks, const std::vector<MultiIndex>& anchors) {
  if (blocks.empty()) throw ValidationError("block_stack needs at least one block");
  if (blocks.size() != anchors.size()) throw ValidationError("block_stack: blocks/anchors size mismatch");
  const int dim = blocks.front().dim();
  std::vector<Cube> cubes;
  double C = 0.0;
  std::int64_t width = 0;
  bool hermitian = true;
  for (std::size_t m = 0; m < blocks.size(); ++m) {
    const Section& B = blocks[m];
    if (!B.is_square()) throw ValidationError("block_stack: blocks must be square sections");
    if (B.dim() != dim || anchors[m].dim() != dim) throw ValidationError("block_stack: dimension mismatch");
    cubes.emplace_back(anchors[m], B.n());
    C = std::max(C, B.matrix().cwiseAbs().maxCoeff());
    width = std::max(width, 2 * B.n());
    if (!B.matrix().isApprox(B.matrix().adjoint(), 0.0)) hermitian = false;
  }
  for (std::size_t a = 0; a < cubes.size(); ++a)
    for (std::size_t b = a + 1; b < cubes.size(); ++b) {
      bool separated = false;
      for (int i = 0; i < dim; ++i)
        if (std::llabs(cubes[a].anchor()[i] - cubes[b].anchor()[i]) > cubes[a].radius() + cubes[b].radius())
          separated = true;
      if (!separated) throw ValidationError("block_stack: cubes overlap");
    }
  auto data = std::make_shared<const std::vector<Section>>(blocks);
  auto where = std::make_shared<const std::vector<Cube>>(cubes);
  auto entry = [data, where](const MultiIndex& k, const MultiIndex& l) -> Scalar {
    for (std::size_t m = 0; m < where->size(); ++m) {
      auto i = (*where)[m].position(k);
      if (!i) continue;
      auto j = (*where)[m].position(l);
      if (!j) return 0.0;
      return (*data)[m].matrix()(static_cast<Eigen::Index>(*i), static_cast<Eigen::Index>(*j));
    }
    return 0.0;
  };
  return MatrixModel(dim, entry, Envelope{C, WeightSpec::constant(dim)}, hermitian, width, "block_stack");
}

std::pair<std::int64_t, std::vector<double>> channel_kernel(const ChannelSpec& spec) {
  if (spec.pulse.empty() || spec.channel.empty()) throw ValidationError("channel: pulse and channel must be nonempty");
  // g = h * pulse, supported from pulse_offset
  const std::size_t lp = spec.pulse.size(), lh = spec.channel.size();
  std::vector<double> g(lp + lh - 1, 0.0);
  for (std::size_t i = 0; i < lh; ++i)
    for (std::size_t j = 0; j < lp; ++j) g[i + j] += spec.channel[i] * spec.pulse[j];
  // kappa(m) = sum_tau pulse(tau) g(tau + m); m ranges over [-(lp-1), lp+lh-2]
  const std::int64_t first = -static_cast<std::int64_t>(lp - 1);
  std::vector<double> kappa(2 * lp + lh - 2, 0.0);
  for (std::size_t idx = 0; idx < kappa.size(); ++idx) {
    const std::int64_t m = first + static_cast<std::int64_t>(idx);
    double acc = 0.0;
    for (std::size_t j = 0; j < lp; ++j) {
      const std::int64_t gi = static_cast<std::int64_t>(j) + m;
      if (gi >= 0 && gi < static_cast<std::int64_t>(g.size())) acc += spec.pulse[j] * g[static_cast<std::size_t>(gi)];
    }
    kappa[idx] = acc;
  }
  return {first, kappa};
}

MatrixModel channel_matrix(const ChannelSpec& spec) {
  if (spec.T < 1 || spec.R < 1) throw ValidationError("channel: T and R must be >= 1");
  if (!(spec.decay >= 0.0)) throw ValidationError("channel: decay must be >= 0");
  auto [first, kappa] = channel_kernel(spec);
  auto table = std::make_shared<const std::vector<double>>(kappa);
  const std::int64_t T = spec.T, R = spec.R;
  auto entry = [table, first, T, R](const MultiIndex& k, const MultiIndex& l) -> Scalar {
    const std::int64_t m = k[0] * R - l[0] * T - first;
    if (m < 0 || m >= static_cast<std::int64_t>(table->size())) return 0.0;
    return (*table)[static_cast<std::size_t>(m)];
  };
  if (R != T) {
    double C = 0.0;
    for (double x : kappa) C = std::max(C, std::abs(x));
    return MatrixModel(1, entry, Envelope{C, WeightSpec::constant(1)}, false, std::nullopt, "channel");
  }
  // a_kl = kappa(T (k - l)): banded Laurent operator
  std::int64_t width = 0;
  double C = 0.0;
  bool symmetric = true;
  const WeightSpec v = spec.decay > 0.0 ? WeightSpec::exponential(1, spec.decay * static_cast<double>(T), 1.0)
                                        : WeightSpec::constant(1);
  for (std::size_t idx = 0; idx < kappa.size(); ++idx) {
    const std::int64_t m = first + static_cast<std::int64_t>(idx);
    if (kappa[idx] == 0.0 || m % T != 0) continue;
    const std::int64_t off = m / T;
    width = std::max<std::int64_t>(width, std::llabs(off));
    C = std::max(C, std::abs(kappa[idx]) * v(MultiIndex{off}));
    const std::int64_t mirror = -m - first;
    if (mirror < 0 || mirror >= static_cast<std::int64_t>(kappa.size()) ||
        kappa[static_cast<std::size_t>(mirror)] != kappa[idx])
      symmetric = false;
  }
  return MatrixModel(1, entry, Envelope{C, v}, symmetric, width, "channel");
}

MatrixModel sum(const MatrixModel& A, const MatrixModel& B) {
  if (A.dim() != B.dim()) throw ValidationError("sum: dimension mismatch");
  const Envelope& ea = A.envelope();
  const Envelope& eb = B.envelope();
  Envelope env;
  if (ea.v == eb.v) {
    env = {ea.C + eb.C, ea.v};
  } else if (B.band_width()) {
    env = {ea.C + rebased_constant(eb, *B.band_width(), ea.v), ea.v};
  } else if (A.band_width()) {
    env = {eb.C + rebased_constant(ea, *A.band_width(), eb.v), eb.v};
  } else {
    throw ValidationError("sum: cannot combine envelopes with different weights of unbanded models");
  }
  std::optional<std::int64_t> band;
  if (A.band_width() && B.band_width()) band = std::max(*A.band_width(), *B.band_width());
  return MatrixModel(
      A.dim(), [A, B](const MultiIndex& k, const MultiIndex& l) { return A(k, l) + B(k, l); }, env,
      A.hermitian() && B.hermitian(), band, A.name() + "+" + B.name());
}

MatrixModel scaled(const MatrixModel& A, double factor) {
  std::ostringstream name;
  name << factor << "*" << A.name();
  return MatrixModel(
      A.dim(), [A, factor](const MultiIndex& k, const MultiIndex& l) { return factor * A(k, l); },
      Envelope{std::abs(factor) * A.envelope().C, A.envelope().v}, A.hermitian(), A.band_width(), name.str());
}

MatrixModel shifted(const MatrixModel& A, double shift) {
  return sum(A, scaled(identity_model(A.dim()), shift));
}

// ---------------------------------------------------------------------------
// Sections and application

Section materialize(const MatrixModel& A, const Cube& rows, const Cube& cols) {
  if (rows.dim() != A.dim() || cols.dim() != A.dim()) throw ValidationError("materialize: dimension mismatch");
  Matrix data = Matrix::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  std::vector<MultiIndex> col_points(cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) col_points[j] = cols.point(j);
  const auto band = A.band_width();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const MultiIndex k = rows.point(i);
    for (std::size_t j = 0; j < cols.size(); ++j) {
      if (band && offset_of(k, col_points[j]) > *band) continue;
      data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = A(k, col_points[j]);
    }
  }
  return Section(rows, cols, std::move(data));
}

FiniteSection finite_section(const MatrixModel& A, std::int64_t n) {
  if (n < 0) throw ValidationError("finite_section: n must be >= 0");
  Cube c(A.dim(), n);
  return materialize(A, c, c);
}

RectSection rect_section(const MatrixModel& A, std::int64_t r, std::int64_t n) {
  if (r < 0 || n < 0) throw ValidationError("rect_section: r and n must be >= 0");
  return materialize(A, Cube(A.dim(), r), Cube(A.dim(), n));
}

double envelope_mass_outside(const Envelope& env, std::int64_t n) {
  if (env.C == 0.0) return 0.0;
  const WeightSpec one = WeightSpec::constant(env.v.dim());
  try {
    const double tail = weighted_tail(one, env.v, 1.0, std::max<std::int64_t>(n, 0)).value;
    return env.C * (n < 0 ? tail + 1.0 : tail);
  } catch (const EmbeddingError&) {
    return std::numeric_limits<double>::infinity();
  }
}

ApplyResult apply(const MatrixModel& A, const SparseVector& x, std::int64_t out_radius) {
  if (out_radius < 0) throw ValidationError("apply: out_radius must be >= 0");
  if (x.dim() != A.dim()) throw ValidationError("apply: dimension mismatch");
  ApplyResult res{SparseVector(A.dim()), 0.0};
  Cube out(A.dim(), out_radius);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const MultiIndex k = out.point(i);
    Scalar acc = 0.0;
    for (const auto& [l, v] : x.entries()) {
      if (A.band_width() && offset_of(k, l) > *A.band_width()) continue;
      acc += A(k, l) * v;
    }
    res.y.set(k, acc);
  }
  if (x.empty()) return res;
  const std::int64_t gap = out_radius - x.bounding_radius();
  if (A.band_width()) {
    // Ax lives in C_{R_x + w}: sum the rows beyond the window exactly.
    const std::int64_t reach = x.bounding_radius() + *A.band_width();
    if (reach <= out_radius) return res;
    const Cube wide(A.dim(), reach);
    for (std::size_t i = 0; i < wide.size(); ++i) {
      const MultiIndex k = wide.point(i);
      if (k.sup_norm() <= out_radius) continue;
      Scalar acc = 0.0;
      for (const auto& [l, v] : x.entries())
        if (offset_of(k, l) <= *A.band_width()) acc += A(k, l) * v;
      res.truncation_bound += std::abs(acc);
    }
    return res;
  }
  double x_l1 = 0.0;
  for (const auto& [l, v] : x.entries()) x_l1 += std::abs(v);
  // rows k outside C_out see columns l in supp(x) only at offsets outside C_gap
  res.truncation_bound = x_l1 * envelope_mass_outside(A.envelope(), gap);
  return res;
}

Vector to_dense(const SparseVector& x, const Cube& cube) {
  Vector v = Vector::Zero(static_cast<Eigen::Index>(cube.size()));
  for (const auto& [k, value] : x.entries()) {
    auto pos = cube.position(k);
    if (pos) v(static_cast<Eigen::Index>(*pos)) = value;
  }
  return v;
}

SparseVector to_sparse(const Vector& v, const Cube& cube) {
  SparseVector x(cube.dim());
  for (std::size_t i = 0; i < cube.size(); ++i) x.set(cube.point(i), v(static_cast<Eigen::Index>(i)));
  return x;
}

void write_section_csv(std::ostream& os, const Section& section) {
  const Matrix& M = section.matrix();
  os << std::setprecision(17);
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      if (j) os << ',';
      const Scalar z = M(i, j);
      if (z.imag() == 0.0) {
        os << z.real();
      } else {
        os << z.real() << (z.imag() < 0 ? "" : "+") << z.imag() << 'j';
      }
    }
    os << '\n';
  }
}

}  // namespace fsm
