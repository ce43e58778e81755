#include "fsm/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "fsm/errors.hpp"

namespace fsm {

using nlohmann::json;

namespace {

// A validation failure at a JSON location; callers prepend their own key.
class FieldError : public ValidationError {
 public:
  FieldError(std::vector<std::string> path, const std::string& what)
      : ValidationError(what), path_(std::move(path)) {}
  const std::vector<std::string>& path() const { return path_; }

 private:
  std::vector<std::string> path_;
};

[[noreturn]] void fail(const std::string& key, const std::string& why) { throw FieldError({key}, why); }

template <typename Fn>
auto within(const std::string& key, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const FieldError& e) {
    std::vector<std::string> path{key};
    path.insert(path.end(), e.path().begin(), e.path().end());
    throw FieldError(std::move(path), e.what());
  } catch (const ValidationError& e) {
    throw FieldError({key}, e.what());
  }
}

double real_value(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf" || s == "infinity" || s == "Infinity") return std::numeric_limits<double>::infinity();
    if (s == "-inf" || s == "-infinity") return -std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) throw ValidationError("'" + s + "' is not a number");
    return x;
  }
  throw ValidationError("expected a number or decimal string");
}

double real_at(const json& j, const std::string& key, std::optional<double> fallback = std::nullopt) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    fail(key, "missing required field");
  }
  return within(key, [&] { return real_value(j.at(key)); });
}

std::int64_t int_at(const json& j, const std::string& key, std::optional<std::int64_t> fallback = std::nullopt) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    fail(key, "missing required field");
  }
  const json& v = j.at(key);
  if (!v.is_number_integer()) fail(key, "expected an integer");
  return v.get<std::int64_t>();
}

bool bool_at(const json& j, const std::string& key, bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) fail(key, "expected true or false");
  return j.at(key).get<bool>();
}

std::string string_at(const json& j, const std::string& key, std::optional<std::string> fallback = std::nullopt) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    fail(key, "missing required field");
  }
  if (!j.at(key).is_string()) fail(key, "expected a string");
  return j.at(key).get<std::string>();
}

std::vector<double> reals_at(const json& j, const std::string& key) {
  if (!j.contains(key)) fail(key, "missing required field");
  if (!j.at(key).is_array()) fail(key, "expected an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.at(key).size(); ++i)
    out.push_back(within(key, [&] { return within(std::to_string(i), [&] { return real_value(j.at(key)[i]); }); }));
  return out;
}

void require_object(const json& j, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ValidationError("expected an object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) fail(key, "unknown field");
}

MultiIndex index_value(const json& j, int dim) {
  if (j.is_number_integer()) {
    if (dim != 1) throw ValidationError("scalar index needs dim 1");
    return MultiIndex({j.get<std::int64_t>()});
  }
  if (!j.is_array() || static_cast<int>(j.size()) != dim)
    throw ValidationError("index must be an array of " + std::to_string(dim) + " integers");
  std::vector<std::int64_t> c;
  for (const auto& x : j) {
    if (!x.is_number_integer()) throw ValidationError("index entries must be integers");
    c.push_back(x.get<std::int64_t>());
  }
  return MultiIndex(std::move(c));
}

Scalar scalar_value(const json& j) {
  if (j.is_array()) {
    if (j.size() != 2) throw ValidationError("complex value must be [re, im]");
    return {real_value(j[0]), real_value(j[1])};
  }
  return real_value(j);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::size_t line_of(const std::string& text, const std::vector<std::string>& path) {
  if (text.empty()) return 0;
  std::size_t pos = 0;
  for (const auto& key : path) {
    const bool numeric = !key.empty() && key.find_first_not_of("0123456789") == std::string::npos;
    if (numeric) continue;
    const std::size_t at = text.find('"' + key + '"', pos);
    if (at == std::string::npos) break;
    pos = at;
  }
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

std::string pointer_of(const std::vector<std::string>& path) {
  std::string out;
  for (const auto& p : path) out += "/" + p;
  return out.empty() ? "/" : out;
}

}  // namespace

json to_json(const WeightSpec& w) {
  json j{{"a", w.a()}, {"b", w.b()}, {"s", w.s()}, {"norm_kind", to_string(w.norm_kind())}, {"dim", w.dim()}};
  if (w.is_tabulated()) {
    j["table"] = w.table();
    j["tail_exponent"] = w.tail_exponent();
  }
  return j;
}

static WeightSpec weight_from_json_dim(const json& j, std::optional<int> dim_default) {
  require_object(j, {"a", "b", "s", "norm_kind", "dim", "table", "tail_exponent"});
  const int dim = static_cast<int>(int_at(j, "dim", dim_default ? std::optional<std::int64_t>(*dim_default)
                                                                 : std::nullopt));
  const NormKind kind = within("norm_kind", [&] { return parse_norm_kind(string_at(j, "norm_kind", "sup")); });
  if (j.contains("table")) return WeightSpec::tabulated(dim, reals_at(j, "table"), real_at(j, "tail_exponent", 0.0), kind);
  const double a = real_at(j, "a", 0.0), b = real_at(j, "b", 0.0), s = real_at(j, "s", 0.0);
  return WeightSpec(dim, a, b, s, kind);
}

WeightSpec weight_from_json(const json& j) { return weight_from_json_dim(j, 1); }

json to_json(const SpaceSpec& s) {
  json p = std::isinf(s.p) ? json("inf") : json(s.p);
  return json{{"p", p}, {"m", to_json(s.m)}};
}

SpaceSpec space_from_json(const json& j, int dim) {
  require_object(j, {"p", "m"});
  const double p = real_at(j, "p");
  const WeightSpec m =
      j.contains("m") ? within("m", [&] { return weight_from_json_dim(j.at("m"), dim); }) : WeightSpec::constant(dim);
  if (m.dim() != dim) fail("m", "weight dimension differs from the model dimension");
  return within("p", [&] { return SpaceSpec(p, m); });
}

json to_json(const AlgebraKind& k) {
  json j{{"kind", k.name()}};
  if (k.tag == AlgebraKind::Tag::jaffard)
    j["s"] = k.s;
  else
    j["v"] = to_json(k.v);
  return j;
}

AlgebraKind algebra_from_json(const json& j, int dim) {
  require_object(j, {"kind", "s", "v"});
  const std::string kind = string_at(j, "kind");
  if (kind == "jaffard") return AlgebraKind::jaffard(real_at(j, "s"), dim);
  const WeightSpec v =
      j.contains("v") ? within("v", [&] { return weight_from_json_dim(j.at("v"), dim); }) : WeightSpec::constant(dim);
  if (kind == "Av" || kind == "av") return AlgebraKind::av(v);
  if (kind == "Av1" || kind == "av1") return AlgebraKind::av1(v);
  if (kind == "Cv" || kind == "cv") return AlgebraKind::cv(v);
  fail("kind", "unknown algebra '" + kind + "' (jaffard, Av, Av1, Cv)");
}

static MatrixModel base_model(const json& j, const std::string& name) {
  if (name == "identity") {
    require_object(j, {"name", "dim", "shift", "scale"});
    return identity_model(static_cast<int>(int_at(j, "dim", 1)));
  }
  if (name == "diagonal") {
    require_object(j, {"name", "dim", "value", "shift", "scale"});
    const double value = real_at(j, "value");
    return diagonal_model(static_cast<int>(int_at(j, "dim", 1)), [value](const MultiIndex&) { return Scalar(value); },
                          std::abs(value), true);
  }
  if (name == "laurent") {
    require_object(j, {"name", "coeffs", "shift", "scale"});
    if (!j.contains("coeffs") || !j.at("coeffs").is_object()) fail("coeffs", "expected an object {offset: value}");
    std::map<std::int64_t, Scalar> coeffs;
    for (const auto& [key, value] : j.at("coeffs").items()) {
      std::int64_t m = 0;
      within("coeffs", [&] {
        return within(key, [&] {
          std::size_t used = 0;
          try {
            m = std::stoll(key, &used);
          } catch (const std::exception&) {
            used = 0;
          }
          if (used == 0 || used != key.size()) throw ValidationError("offset must be an integer");
          coeffs[m] = scalar_value(value);
          return 0;
        });
      });
    }
    return laurent_from_symbol(coeffs);
  }
  if (name == "counterexample") {
    require_object(j, {"name", "c", "shift", "scale"});
    const double c = real_at(j, "c");
    return within("c", [&] { return laurent_counterexample(c); });
  }
  if (name == "jaffard") {
    require_object(j, {"name", "s", "amplitude", "seed", "dim", "hermitian", "shift", "scale"});
    const double s = real_at(j, "s");
    const double amp = real_at(j, "amplitude", 1.0);
    const auto seed = static_cast<std::uint64_t>(int_at(j, "seed", 0));
    const int dim = static_cast<int>(int_at(j, "dim", 1));
    const bool herm = bool_at(j, "hermitian", true);
    return within("s", [&] { return jaffard_synthetic(s, amp, seed, dim, herm); });
  }
  if (name == "channel") {
    require_object(j, {"name", "pulse", "pulse_offset", "channel", "geometric", "T", "R", "decay", "shift", "scale"});
    ChannelSpec spec;
    if (j.contains("pulse")) spec.pulse = reals_at(j, "pulse");
    spec.pulse_offset = int_at(j, "pulse_offset", 0);
    if (j.contains("channel") == j.contains("geometric")) fail("channel", "give exactly one of channel or geometric");
    if (j.contains("channel")) {
      spec.channel = reals_at(j, "channel");
    } else {
      const json& g = j.at("geometric");
      within("geometric", [&] {
        require_object(g, {"c", "terms", "delay"});
        const double c = real_at(g, "c");
        const std::int64_t terms = int_at(g, "terms");
        const std::int64_t delay = int_at(g, "delay", 0);
        if (terms < 1 || delay < 0) throw ValidationError("terms must be >= 1 and delay >= 0");
        spec.channel.assign(static_cast<std::size_t>(delay), 0.0);
        double h = 1.0;
        for (std::int64_t t = 0; t < terms; ++t, h *= c) spec.channel.push_back(h);
        if (!j.contains("decay") && c != 0.0 && std::abs(c) < 1.0) spec.decay = std::log(1.0 / std::abs(c));
        return 0;
      });
    }
    spec.T = int_at(j, "T", 1);
    spec.R = int_at(j, "R", 1);
    if (j.contains("decay")) spec.decay = real_at(j, "decay");
    return channel_matrix(spec);
  }
  fail("name", "unknown model '" + name + "' (identity, diagonal, laurent, counterexample, jaffard, channel)");
}

MatrixModel model_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("model must be an object");
  const std::string name = string_at(j, "name");
  MatrixModel A = base_model(j, name);
  if (j.contains("scale")) A = scaled(A, real_at(j, "scale"));
  if (j.contains("shift")) A = shifted(A, real_at(j, "shift"));
  return A;
}

SparseVector vector_from_json(const json& j, int dim) {
  if (!j.is_array()) throw ValidationError("expected an array of {index, value}");
  SparseVector out(dim);
  for (std::size_t i = 0; i < j.size(); ++i)
    within(std::to_string(i), [&] {
      require_object(j[i], {"index", "value"});
      if (!j[i].contains("index") || !j[i].contains("value")) throw ValidationError("entry needs index and value");
      const MultiIndex k = within("index", [&] { return index_value(j[i].at("index"), dim); });
      out.add(k, within("value", [&] { return scalar_value(j[i].at("value")); }));
      return 0;
    });
  return out;
}

RhsFn rhs_from_json(const json& j, int dim) {
  if (!j.is_object()) throw ValidationError("rhs must be an object");
  const std::string name = string_at(j, "name");
  if (name == "unit") {
    require_object(j, {"name", "index", "value"});
    if (!j.contains("index")) fail("index", "missing required field");
    const MultiIndex k = within("index", [&] { return index_value(j.at("index"), dim); });
    const Scalar v = j.contains("value") ? within("value", [&] { return scalar_value(j.at("value")); }) : Scalar(1.0);
    SparseVector b(dim);
    b.set(k, v);
    return rhs_from_vector(b);
  }
  if (name == "entries") {
    require_object(j, {"name", "entries"});
    if (!j.contains("entries")) fail("entries", "missing required field");
    return rhs_from_vector(within("entries", [&] { return vector_from_json(j.at("entries"), dim); }));
  }
  if (name == "power_decay") {
    // b_k = amplitude (1 + |k|)^{-s}
    require_object(j, {"name", "s", "amplitude", "norm_kind"});
    const double s = real_at(j, "s"), amp = real_at(j, "amplitude", 1.0);
    const WeightSpec w = within("norm_kind", [&] {
      return WeightSpec::polynomial(dim, -s, parse_norm_kind(string_at(j, "norm_kind", "sup")));
    });
    return [w, amp, dim](std::int64_t radius) {
      SparseVector b(dim);
      const Cube c(dim, radius);
      for (std::size_t i = 0; i < c.size(); ++i) b.set(c.point(i), amp * w(c.point(i)));
      return b;
    };
  }
  if (name == "random") {
    require_object(j, {"name", "seed", "radius", "amplitude"});
    const auto seed = static_cast<std::uint64_t>(int_at(j, "seed", 0));
    const std::int64_t radius = int_at(j, "radius");
    if (radius < 0) fail("radius", "must be >= 0");
    const double amp = real_at(j, "amplitude", 1.0);
    SparseVector b(dim);
    const Cube c(dim, radius);
    for (std::size_t i = 0; i < c.size(); ++i) {
      const MultiIndex k = c.point(i);
      std::uint64_t h = splitmix64(seed);
      for (auto x : k.coords()) h = splitmix64(h ^ static_cast<std::uint64_t>(x));
      const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
      b.set(c.point(i), amp * (2.0 * u - 1.0));
    }
    return rhs_from_vector(b);
  }
  fail("name", "unknown rhs '" + name + "' (unit, entries, power_decay, random)");
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path + ": cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    const std::string text = ss.str();
    const std::size_t byte = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte ? byte - 1 : 0), '\n');
    throw ValidationError(path + ":" + std::to_string(line) + ": parse error: " + e.what());
  }
}

ExperimentConfig parse_experiment(const json& doc, const std::string& origin, const std::string& text) {
  ExperimentConfig cfg;
  cfg.source = doc;
  try {
    require_object(doc, {"model", "rhs", "pipeline", "ns", "alpha", "r_factor", "schedule_s", "backend", "in_space",
                         "out_space", "algebra", "output_dir", "seed", "compare_symmetric", "exact"});
    if (!doc.contains("model")) fail("model", "missing required field");
    cfg.model = doc.at("model");
    if (cfg.model.is_object() && cfg.model.value("name", "") == "jaffard" && !cfg.model.contains("seed") &&
        doc.contains("seed"))
      cfg.model["seed"] = doc.at("seed");
    const MatrixModel A = within("model", [&] { return model_from_json(cfg.model); });
    cfg.dim = A.dim();

    if (!doc.contains("rhs")) fail("rhs", "missing required field");
    cfg.rhs = doc.at("rhs");
    if (cfg.rhs.is_object() && cfg.rhs.value("name", "") == "random" && !cfg.rhs.contains("seed") &&
        doc.contains("seed"))
      cfg.rhs["seed"] = doc.at("seed");
    within("rhs", [&] { return rhs_from_json(cfg.rhs, cfg.dim); });

    cfg.pipeline = within("pipeline", [&] { return parse_pipeline(string_at(doc, "pipeline", "symmetric")); });

    if (!doc.contains("ns") || !doc.at("ns").is_array()) fail("ns", "missing or not an array");
    for (std::size_t i = 0; i < doc.at("ns").size(); ++i) {
      const json& v = doc.at("ns")[i];
      if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
        within("ns", [&]() -> int { fail(std::to_string(i), "n must be a nonnegative integer"); });
      cfg.ns.push_back(v.get<std::int64_t>());
    }
    if (cfg.ns.empty()) fail("ns", "must not be empty");
    for (std::size_t i = 1; i < cfg.ns.size(); ++i)
      if (cfg.ns[i] <= cfg.ns[i - 1]) fail("ns", "must be strictly increasing");

    if (doc.contains("alpha")) cfg.alpha = real_at(doc, "alpha");
    if (doc.contains("r_factor")) {
      cfg.r_factor = real_at(doc, "r_factor");
      if (!(*cfg.r_factor >= 1.0)) fail("r_factor", "must be >= 1");
    }
    cfg.schedule_s = real_at(doc, "schedule_s", 0.0);
    const std::string backend = string_at(doc, "backend", "normal");
    if (backend == "normal")
      cfg.backend = NormalBackend::normal_equations;
    else if (backend == "qr")
      cfg.backend = NormalBackend::qr;
    else
      fail("backend", "unknown backend '" + backend + "' (normal, qr)");
    if (cfg.pipeline == Pipeline::nonsymmetric && !cfg.r_factor && !cfg.alpha && !(cfg.schedule_s > 0.0) &&
        !A.band_width())
      fail("pipeline", "non-symmetric pipeline needs r_factor, alpha or schedule_s for a non-banded model");

    cfg.in_space = doc.contains("in_space") ? within("in_space", [&] { return space_from_json(doc.at("in_space"), cfg.dim); })
                                            : SpaceSpec::l2(cfg.dim);
    cfg.out_space = doc.contains("out_space")
                        ? within("out_space", [&] { return space_from_json(doc.at("out_space"), cfg.dim); })
                        : SpaceSpec::l2(cfg.dim);
    if (doc.contains("algebra")) cfg.algebra = within("algebra", [&] { return algebra_from_json(doc.at("algebra"), cfg.dim); });
    cfg.output_dir = string_at(doc, "output_dir", "out");
    const std::int64_t seed = int_at(doc, "seed", 0);
    if (seed < 0) fail("seed", "must be >= 0");
    cfg.seed = static_cast<std::uint64_t>(seed);
    cfg.compare_symmetric = bool_at(doc, "compare_symmetric", false);
    if (doc.contains("exact")) cfg.exact = within("exact", [&] { return vector_from_json(doc.at("exact"), cfg.dim); });
  } catch (const FieldError& e) {
    throw ValidationError(origin + ":" + std::to_string(line_of(text, e.path())) + ": " + pointer_of(e.path()) + ": " +
                          e.what());
  }
  return cfg;
}

ExperimentConfig load_experiment(const std::string& path) {
  const json doc = load_json_file(path);
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment(doc, path, ss.str());
}

}  // namespace fsm
