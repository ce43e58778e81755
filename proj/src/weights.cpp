#include "fsm/weights.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fsm/errors.hpp"

namespace fsm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRelTol = 1e-12;

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Integral over u in [x, inf) of (2u - c0)^(d-1) u^(-q), expanded binomially.
double shell_power_integral(int d, double c0, double q, double x) {
  double total = 0.0;
  for (int i = 0; i <= d - 1; ++i) {
    const double coef = binomial(d - 1, i) * std::pow(2.0, i) * std::pow(-c0, d - 1 - i);
    const double e = static_cast<double>(i) + 1.0 - q;  // must be < 0
    total += coef * std::pow(x, e) / (-e);
  }
  return total;
}

// Net behaviour of the ratio w/m in the far field:
//   w(t)/m(t) <= K e^{-alpha t^beta} (1+t)^{-P}  for t >= start.
struct RatioEnvelope {
  bool growth = false;  // ratio unbounded
  double K = 1.0;
  double alpha = 0.0;
  double beta = 0.0;
  double P = 0.0;
  double start = 1.0;

  bool exponential() const { return alpha > 0.0; }

  double at(double t) const {
    double v = K * std::pow(1.0 + t, -P);
    if (alpha > 0.0) v *= std::exp(-alpha * std::pow(t, beta));
    return v;
  }

  // Smallest t from which `at` is nonincreasing.
  double monotone_from() const {
    if (P >= 0.0) return start;
    if (alpha <= 0.0) return kInf;
    double t = std::max({start, 1.0, beta < 1.0 ? (1.0 - beta) / beta : 0.0});
    while (alpha * beta * std::pow(t, beta - 1.0) * (1.0 + t) < -P) t *= 2.0;
    return t;
  }
};

WeightSpec::FarField normalized(WeightSpec::FarField f) {
  // e^{a t^0} is the constant e^a away from the origin.
  if (f.a != 0.0 && f.b == 0.0) {
    f.scale *= std::exp(f.a);
    f.a = 0.0;
    f.start = std::max(f.start, 1.0);
  }
  return f;
}

RatioEnvelope ratio_envelope(const WeightSpec& w, const WeightSpec& m) {
  const auto fw = normalized(w.far_field());
  const auto fm = normalized(m.far_field());
  RatioEnvelope env;
  env.K = fw.scale / fm.scale;
  env.P = fm.s - fw.s;
  env.start = std::max({fw.start, fm.start, 1.0});
  const double aw = fw.a, bw = fw.b, am = fm.a, bm = fm.b;
  if (aw == 0.0 && am == 0.0) return env;
  if (aw > 0.0 && bw == bm && aw == am) return env;
  if (aw > 0.0 && (am == 0.0 || bw > bm || (bw == bm && aw > am))) {
    env.growth = true;
    return env;
  }
  env.beta = bm;
  if (aw == 0.0) {
    env.alpha = am;
  } else if (bw == bm) {
    env.alpha = am - aw;
  } else {
    env.alpha = am / 2.0;
    env.start = std::max(env.start, std::pow(2.0 * aw / am, 1.0 / (bm - bw)));
  }
  return env;
}

// Certified upper bound of sum_{j > J} cnt_up(j) G(j)^r for the exponential
// case, using e^{-y} <= (mu/e)^mu y^{-mu}.
double exponential_tail_majorant(const RatioEnvelope& env, int d, double r, double J) {
  const double E = static_cast<double>(d - 1) - r * env.P;
  const double K2 = std::pow(env.K, r) * 2.0 * d * std::pow(2.0, d - 1) *
                    (E >= 0.0 ? std::pow(2.0, E) : 1.0);
  const double ra = r * env.alpha;
  const double beta = env.beta;
  const double mu_min = (E + 1.0) / beta + 0.5;
  const double mu_opt = ra * std::pow(J, beta) / beta;
  double best = kInf;
  const double lo = std::max(mu_min, 0.5);
  const double hi = std::max(lo * 2.0, 4.0 * mu_opt + lo);
  for (int i = 0; i <= 200; ++i) {
    const double mu = lo * std::pow(hi / lo, i / 200.0);
    const double g = mu * beta - E - 1.0;
    if (g <= 0.0) continue;
    const double log_bound = std::log(K2) + mu * std::log(mu / (std::exp(1.0) * ra)) -
                             g * std::log(J) - std::log(g);
    best = std::min(best, log_bound);
  }
  return std::exp(best);
}

bool same_radial_norm(const WeightSpec& w, const WeightSpec& m) {
  return w.dim() == 1 || w.norm_kind() == m.norm_kind();
}

}  // namespace

std::string to_string(NormKind kind) {
  switch (kind) {
    case NormKind::sup:
      return "sup";
    case NormKind::euclidean:
      return "euclidean";
    case NormKind::taxicab:
      return "taxicab";
  }
  return "sup";
}

NormKind parse_norm_kind(const std::string& name) {
  if (name == "sup" || name == "sup-norm" || name == "max") return NormKind::sup;
  if (name == "euclidean" || name == "l2") return NormKind::euclidean;
  if (name == "taxicab" || name == "l1") return NormKind::taxicab;
  throw ValidationError("unknown norm_kind '" + name + "'");
}

WeightSpec::WeightSpec(int dim, double a, double b, double s, NormKind kind)
    : dim_(dim), a_(a), b_(b), s_(s), kind_(kind) {
  if (dim < 1) throw ValidationError("weight dimension must be >= 1");
  if (!(a >= 0.0)) throw ValidationError("weight parameter a must be >= 0");
  if (!(b >= 0.0 && b <= 1.0)) throw ValidationError("weight parameter b must lie in [0,1]");
  if (!std::isfinite(s)) throw ValidationError("weight parameter s must be finite");
}

WeightSpec WeightSpec::tabulated(int dim, std::vector<double> values, double tail_exponent,
                                 NormKind kind) {
  if (values.empty() || values.front() != 1.0)
    throw ValidationError("tabulated weight needs values[0] == 1");
  for (double v : values)
    if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("tabulated weight values must be positive");
  if (kind == NormKind::euclidean && dim > 1)
    throw ValidationError("tabulated weights need an integer-valued norm (sup or taxicab)");
  WeightSpec w(dim, 0.0, 0.0, 0.0, kind);
  w.table_ = std::move(values);
  w.tail_exponent_ = tail_exponent;
  return w;
}

double WeightSpec::distance(const MultiIndex& k) const {
  switch (kind_) {
    case NormKind::sup:
      return static_cast<double>(k.sup_norm());
    case NormKind::euclidean:
      return k.euclidean_norm();
    case NormKind::taxicab:
      return static_cast<double>(k.taxicab_norm());
  }
  return 0.0;
}

double WeightSpec::radial(double t) const {
  if (!table_.empty()) {
    const double last = static_cast<double>(table_.size() - 1);
    if (t <= last) return table_[static_cast<std::size_t>(std::llround(t))];
    return table_.back() * std::pow((1.0 + t) / (1.0 + last), tail_exponent_);
  }
  double v = std::pow(1.0 + t, s_);
  if (t > 0.0 && a_ != 0.0) v *= std::exp(a_ * std::pow(t, b_));
  return v;
}

double WeightSpec::eval(const MultiIndex& k) const {
  if (k.dim() != dim_) throw std::invalid_argument("weight/index dimension mismatch");
  return radial(distance(k));
}

bool WeightSpec::is_constant() const {
  if (!table_.empty()) {
    for (double v : table_)
      if (v != 1.0) return false;
    return tail_exponent_ == 0.0;
  }
  return a_ == 0.0 && s_ == 0.0;
}

WeightSpec::FarField WeightSpec::far_field() const {
  if (!table_.empty()) {
    const double last = static_cast<double>(table_.size() - 1);
    return {table_.back() / std::pow(1.0 + last, tail_exponent_), 0.0, 0.0, tail_exponent_, last};
  }
  return {1.0, a_, b_, s_, 0.0};
}

double eval_weight(const WeightSpec& w, const MultiIndex& k) { return w.eval(k); }

// ---------------------------------------------------------------------------
// SparseVector

SparseVector SparseVector::unit(const MultiIndex& k, Scalar value) {
  SparseVector x(k.dim());
  x.set(k, value);
  return x;
}

void SparseVector::set(const MultiIndex& k, Scalar value) {
  if (k.dim() != dim_) throw std::invalid_argument("SparseVector: dimension mismatch");
  if (value == Scalar(0.0))
    entries_.erase(k);
  else
    entries_[k] = value;
}

void SparseVector::add(const MultiIndex& k, Scalar value) { set(k, get(k) + value); }

Scalar SparseVector::get(const MultiIndex& k) const {
  auto it = entries_.find(k);
  return it == entries_.end() ? Scalar(0.0) : it->second;
}

std::int64_t SparseVector::bounding_radius() const {
  std::int64_t r = 0;
  for (const auto& [k, v] : entries_) r = std::max(r, k.sup_norm());
  return r;
}

SparseVector SparseVector::restricted(std::int64_t n) const {
  SparseVector out(dim_);
  for (const auto& [k, v] : entries_)
    if (k.sup_norm() <= n) out.entries_.emplace(k, v);
  return out;
}

SparseVector SparseVector::outside(std::int64_t n) const {
  SparseVector out(dim_);
  for (const auto& [k, v] : entries_)
    if (k.sup_norm() > n) out.entries_.emplace(k, v);
  return out;
}

SparseVector& SparseVector::operator+=(const SparseVector& other) {
  for (const auto& [k, v] : other.entries_) add(k, v);
  return *this;
}

SparseVector& SparseVector::operator-=(const SparseVector& other) {
  for (const auto& [k, v] : other.entries_) add(k, -v);
  return *this;
}

SparseVector SparseVector::operator*(Scalar factor) const {
  SparseVector out(dim_);
  for (const auto& [k, v] : entries_) out.set(k, v * factor);
  return out;
}

double SparseVector::max_abs_diff(const SparseVector& other) const {
  double m = 0.0;
  for (const auto& [k, v] : entries_) m = std::max(m, std::abs(v - other.get(k)));
  for (const auto& [k, v] : other.entries_) m = std::max(m, std::abs(v - get(k)));
  return m;
}

SpaceSpec::SpaceSpec(double p_, WeightSpec m_) : p(p_), m(std::move(m_)) {
  if (!(p >= 1.0)) throw ValidationError("space exponent p must be >= 1");
}

// ---------------------------------------------------------------------------
// Property probes

SubmultiplicativeReport check_submultiplicative(const WeightSpec& w, std::int64_t radius) {
  if (radius < 1) throw ValidationError("radius must be >= 1");
  SubmultiplicativeReport rep;
  Cube cube(w.dim(), radius);
  std::vector<double> vals(cube.size());
  for (std::size_t i = 0; i < cube.size(); ++i) vals[i] = w(cube.point(i));
  for (std::size_t i = 0; i < cube.size(); ++i) {
    const MultiIndex k = cube.point(i);
    for (std::size_t j = 0; j < cube.size(); ++j) {
      const MultiIndex l = cube.point(j);
      const double ratio = w(k + l) / (vals[i] * vals[j]);
      if (ratio > rep.worst_ratio) {
        rep.worst_ratio = ratio;
        rep.worst_k = k;
        rep.worst_l = l;
      }
    }
  }
  rep.holds = rep.worst_ratio <= 1.0 + kRelTol;
  return rep;
}

std::vector<double> check_grs(const WeightSpec& w, const MultiIndex& k, int n_max) {
  if (k.is_zero()) throw ValidationError("GRS probe needs k != 0");
  if (n_max < 2) throw ValidationError("GRS probe needs n_max >= 2");
  std::vector<double> traj;
  traj.reserve(static_cast<std::size_t>(n_max));
  for (int n = 1; n <= n_max; ++n) {
    // log-space keeps e^{a n^b} representable for large n
    const double t = w.distance(k * n);
    double log_v;
    if (w.is_tabulated()) {
      log_v = std::log(w.radial(t));
    } else {
      log_v = w.s() * std::log1p(t) + (w.a() != 0.0 ? w.a() * std::pow(t, w.b()) : 0.0);
    }
    traj.push_back(std::exp(log_v / n));
  }
  return traj;
}

SubconvolutiveReport check_subconvolutive(const WeightSpec& v, std::int64_t radius) {
  if (radius < 1) throw ValidationError("radius must be >= 1");
  SubconvolutiveReport rep;
  const WeightSpec one = WeightSpec::constant(v.dim());
  try {
    (void)weighted_tail(one, v, 1.0, 0);
  } catch (const EmbeddingError&) {
    rep.divergent = true;
    rep.C_est = rep.C_upper = kInf;
    return rep;
  }

  const int d = v.dim();
  Cube probe(d, radius);
  double vmax = 0.0;
  for (std::size_t i = 0; i < probe.size(); ++i) vmax = std::max(vmax, v(probe.point(i)));

  const std::int64_t cap = d == 1 ? (std::int64_t{1} << 21) : (d == 2 ? 2048 : 64);
  std::int64_t L = 2 * radius + 32;
  double remainder = vmax * vmax * weighted_tail(one, v, 2.0, L).value;
  while (remainder > 1e-9 && L < cap) {
    L = std::min(cap, 2 * L);
    remainder = vmax * vmax * weighted_tail(one, v, 2.0, L).value;
  }
  rep.truncation_radius = L;

  // 1/v tabulated on C_{L+radius}
  Cube big(d, L + radius);
  std::vector<double> inv(big.size());
  for (std::size_t i = 0; i < big.size(); ++i) inv[i] = 1.0 / v(big.point(i));
  Cube window(d, L);
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const MultiIndex k = probe.point(i);
    long double conv = 0.0L;
    for (std::size_t j = 0; j < window.size(); ++j) {
      const MultiIndex l = window.point(j);
      conv += static_cast<long double>(inv[*big.position(l)]) * inv[*big.position(k - l)];
    }
    const double vk = v(k);
    const double c = static_cast<double>(conv) * vk;
    if (c > rep.C_est) {
      rep.C_est = c;
      rep.worst_k = k;
    }
    rep.C_upper = std::max(rep.C_upper, c + vk * vk * weighted_tail(one, v, 2.0, L).value);
  }
  return rep;
}

ModerateReport check_moderate(const WeightSpec& m, const WeightSpec& v, std::int64_t radius) {
  if (radius < 1) throw ValidationError("radius must be >= 1");
  if (m.dim() != v.dim()) throw ValidationError("weights of different dimension");
  ModerateReport rep;
  Cube cube(m.dim(), radius);
  for (std::size_t i = 0; i < cube.size(); ++i) {
    const MultiIndex k = cube.point(i);
    const double mk = m(k);
    for (std::size_t j = 0; j < cube.size(); ++j) {
      const MultiIndex l = cube.point(j);
      const double c = m(k + l) / (mk * v(l));
      if (c > rep.C_est) {
        rep.C_est = c;
        rep.worst_k = k;
        rep.worst_l = l;
      }
    }
  }
  return rep;
}

double lp_norm(const SparseVector& x, const SpaceSpec& space) {
  double scale = 0.0;
  for (const auto& [k, v] : x.entries()) scale = std::max(scale, std::abs(v) * space.m(k));
  if (space.is_sup() || scale == 0.0) return scale;
  long double acc = 0.0L;
  for (const auto& [k, v] : x.entries())
    acc += std::pow(std::abs(v) * space.m(k) / scale, space.p);
  return scale * std::pow(static_cast<double>(acc), 1.0 / space.p);
}

// ---------------------------------------------------------------------------
// Tail functional

double tail_exponent_r(double p, double q) {
  if (!(p >= 1.0) || !(q >= 1.0)) throw ValidationError("p and q must be >= 1");
  const double inv = 1.0 / q - 1.0 / p;
  return inv <= 0.0 ? kInf : 1.0 / inv;
}

TailSum weighted_tail(const WeightSpec& w, const WeightSpec& m, double r, std::int64_t n,
                      double rel_tol) {
  if (w.dim() != m.dim()) throw ValidationError("weights of different dimension");
  if (!same_radial_norm(w, m)) throw ValidationError("tail functional needs weights sharing the norm d(x)");
  if (n < 0) throw ValidationError("n must be >= 0");
  if (!(r >= 1.0)) throw ValidationError("tail exponent r must be >= 1");

  const int d = w.dim();
  const RatioEnvelope env = ratio_envelope(w, m);
  const bool sup_shells = d == 1 || m.norm_kind() == NormKind::sup;
  auto ratio_at_shell = [&](std::int64_t j) {
    const double t = static_cast<double>(j);
    return w.radial(t) / m.radial(t);
  };
  // Visits (ratio, multiplicity) for shell j.
  auto visit_shell = [&](std::int64_t j, auto&& fn) {
    if (sup_shells) {
      fn(ratio_at_shell(j), shell_count(d, j));
    } else {
      for_each_in_shell(d, j, [&](const MultiIndex& k) { fn(w(k) / m(k), 1.0); });
    }
  };
  const std::int64_t cap = sup_shells ? (std::int64_t{1} << 26)
                                      : static_cast<std::int64_t>(std::pow(2.0e7, 1.0 / d) / 2.0);

  TailSum out;
  if (std::isinf(r)) {
    if (env.growth || (!env.exponential() && env.P < 0.0))
      throw EmbeddingError("embedding fails at n=" + std::to_string(n) + ": w/m is unbounded");
    const double mono = env.monotone_from();
    double best = 0.0;
    std::int64_t j = n + 1;
    std::int64_t J = std::max<std::int64_t>(
        n + 16, static_cast<std::int64_t>(std::ceil(std::max(env.start, mono))));
    while (true) {
      for (; j <= J; ++j) visit_shell(j, [&](double ratio, double) { best = std::max(best, ratio); });
      const double beyond = env.at(static_cast<double>(J));
      if (beyond <= best) break;
      if (J >= cap) {
        best = std::max(best, beyond);
        break;
      }
      J *= 2;
    }
    out.value = out.lower = best;
    out.explicit_radius = J;
    return out;
  }

  if (env.growth || (!env.exponential() && r * env.P <= d))
    throw EmbeddingError("embedding fails at n=" + std::to_string(n) + ": tail sum diverges");

  // Thresholds making the integral comparisons valid.
  double t_min = std::max(env.start, 1.0);
  const double rp = r * env.P;
  if (!env.exponential() && d > 1) {
    const double den = 2.0 * rp - 2.0 * (d - 1);
    t_min = std::max(t_min, (2.0 * (d - 1) + rp) / den);
  }
  if (!sup_shells) t_min = std::max(t_min, env.monotone_from());

  long double partial = 0.0L;
  std::int64_t j = n + 1;
  std::int64_t J = std::max<std::int64_t>(n + 16, static_cast<std::int64_t>(std::ceil(t_min)));
  double upper = 0.0, lower = 0.0;
  while (true) {
    for (; j <= J; ++j)
      visit_shell(j, [&](double ratio, double mult) {
        partial += static_cast<long double>(mult) * std::pow(ratio, r);
      });
    const double S = static_cast<double>(partial);
    const double Kr = std::pow(env.K, r);
    const double x = static_cast<double>(J);
    if (env.exponential()) {
      upper = exponential_tail_majorant(env, d, r, x);
      lower = 0.0;
    } else {
      upper = Kr * 2.0 * d * shell_power_integral(d, 1.0, rp, 1.0 + x);
      lower = sup_shells ? Kr * 2.0 * d * shell_power_integral(d, 3.0, rp, 2.0 + x) : 0.0;
    }
    const double value = S + upper;
    out.value = value;
    out.lower = S + lower;
    out.relative_error = value > 0.0 ? (out.value - out.lower) / value : 0.0;
    out.explicit_radius = J;
    if (out.relative_error <= rel_tol || J >= cap) break;
    J = std::min(cap, 2 * J);
  }
  return out;
}

TailSum tail_phi_report(const WeightSpec& m, const WeightSpec& w, double p, double q,
                        std::int64_t n) {
  const double r = tail_exponent_r(p, q);
  TailSum t = weighted_tail(w, m, r, n);
  if (!std::isinf(r)) {
    const double lo = std::pow(t.lower, 1.0 / r);
    t.value = std::pow(t.value, 1.0 / r);
    t.lower = lo;
    t.relative_error = t.value > 0.0 ? (t.value - t.lower) / t.value : 0.0;
  }
  return t;
}

double tail_phi(const WeightSpec& m, const WeightSpec& w, double p, double q, std::int64_t n) {
  return tail_phi_report(m, w, p, q, n).value;
}

BeurlingDomarReport check_beurling_domar(const WeightSpec& v, std::int64_t x, std::int64_t k_max) {
  if (x < 1) throw ValidationError("Beurling-Domar probe needs x >= 1");
  BeurlingDomarReport rep;
  rep.x = static_cast<double>(x);
  long double sum = 0.0L;
  std::int64_t next = 10;
  for (std::int64_t k = 1; k <= k_max; ++k) {
    const MultiIndex point = MultiIndex::axis(v.dim(), 0, k * x);
    const double t = v.distance(point);
    double log_v;
    if (v.is_tabulated()) {
      log_v = std::log(v.radial(t));
    } else {
      log_v = v.s() * std::log1p(t) + (t > 0.0 && v.a() != 0.0 ? v.a() * std::pow(t, v.b()) : 0.0);
    }
    sum += static_cast<long double>(log_v) / (static_cast<long double>(k) * k);
    if (k == next || k == k_max) {
      rep.checkpoints.push_back(k);
      rep.partial_sums.push_back(static_cast<double>(sum));
      next *= 10;
    }
  }
  const auto& s = rep.partial_sums;
  if (s.size() >= 3) {
    const double last = std::abs(s[s.size() - 1] - s[s.size() - 2]);
    const double prev = std::abs(s[s.size() - 2] - s[s.size() - 3]);
    rep.cauchy = last <= 1e-3 * std::max(1.0, std::abs(s.back())) && last <= 0.5 * prev;
  }
  return rep;
}

}  // namespace fsm
