#ifndef FSM_CONFIG_HPP_
#define FSM_CONFIG_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "fsm/algebra.hpp"
#include "fsm/diagnostics.hpp"
#include "fsm/models.hpp"
#include "fsm/weights.hpp"

namespace fsm {

// Structured-text records shared with the CLI. Reals may be written as JSON
// numbers or decimal strings ("0.5", "inf").
nlohmann::json to_json(const WeightSpec& w);
// {a, b, s, norm_kind, dim, table, tail_exponent}; absent fields give the
// constant weight on Z^1.
WeightSpec weight_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SpaceSpec& s);
SpaceSpec space_from_json(const nlohmann::json& j, int dim);
nlohmann::json to_json(const AlgebraKind& k);
AlgebraKind algebra_from_json(const nlohmann::json& j, int dim);

// Model record {"name": ..., parameters}. Names: identity, diagonal,
// laurent, counterexample, jaffard, channel. An optional "shift" adds shift*I.
MatrixModel model_from_json(const nlohmann::json& j);

// Right-hand side record {"name": ..., parameters}. Names: unit, entries,
// power_decay, random.
RhsFn rhs_from_json(const nlohmann::json& j, int dim);
// List of {"index": [...], "value": re | [re, im]}.
SparseVector vector_from_json(const nlohmann::json& j, int dim);

struct ExperimentConfig {
  nlohmann::json source;  // the parsed document, echoed into the manifest
  nlohmann::json model;
  nlohmann::json rhs;
  int dim = 1;
  Pipeline pipeline = Pipeline::symmetric;
  std::vector<std::int64_t> ns;
  std::optional<double> alpha;
  std::optional<double> r_factor;
  double schedule_s = 0.0;
  NormalBackend backend = NormalBackend::normal_equations;
  SpaceSpec in_space;
  SpaceSpec out_space;
  std::optional<AlgebraKind> algebra;
  std::string output_dir = "out";
  std::uint64_t seed = 0;
  bool compare_symmetric = false;
  std::optional<SparseVector> exact;
};

// Parses and validates; errors are ValidationError with "<file>:<line>: <path>: <why>".
nlohmann::json load_json_file(const std::string& path);
ExperimentConfig parse_experiment(const nlohmann::json& doc, const std::string& origin = "<config>",
                                  const std::string& text = "");
ExperimentConfig load_experiment(const std::string& path);

}  // namespace fsm

#endif  // FSM_CONFIG_HPP_
