#ifndef FSM_ALGEBRA_HPP_
#define FSM_ALGEBRA_HPP_

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fsm/models.hpp"
#include "fsm/weights.hpp"

namespace fsm {

// One of the four matrix algebras with off-diagonal decay.
struct AlgebraKind {
  enum class Tag { jaffard, av, av1, cv };

  Tag tag = Tag::av;
  double s = 0.0;  // Jaffard exponent
  WeightSpec v;    // weight for Av, Av1, Cv

  static AlgebraKind jaffard(double s, int dim = 1);
  static AlgebraKind av(WeightSpec v);
  static AlgebraKind av1(WeightSpec v);
  static AlgebraKind cv(WeightSpec v);

  // The weight every kind reduces to; Jaffard uses (1 + |k|)^s.
  WeightSpec weight() const;
  std::string name() const;
};

// Value of a norm and where the defining sup/sum is attained: an entry (row,
// col) for the sup norms, a row or column for Av1, a diagonal offset for Cv.
struct NormReport {
  double value = 0.0;
  std::optional<MultiIndex> row;
  std::optional<MultiIndex> col;
  std::optional<MultiIndex> offset;

  std::string achieved_at() const;
};

NormReport norm_jaffard(const Section& B, double s);
NormReport norm_av(const Section& B, const WeightSpec& v);
NormReport norm_av1(const Section& B, const WeightSpec& v);
NormReport norm_cv(const Section& B, const WeightSpec& v);
NormReport norm(const Section& B, const AlgebraKind& kind);

// Largest singular value.
double operator_norm_l2(const Section& B);

struct TranslationReport {
  double base = 0.0;
  std::vector<double> shifted;
  double max_abs_diff = 0.0;
  bool equal(double tol = 0.0) const { return max_abs_diff <= tol; }
};
TranslationReport check_translation_invariance(const MatrixModel& A, const AlgebraKind& kind,
                                               const std::vector<MultiIndex>& shifts, std::int64_t n);

// norm(B) <= norm(B_dominating). Throws ValidationError when B is not
// entrywise dominated.
bool check_solidity(const Section& B, const Section& B_dominating, const AlgebraKind& kind);

struct BlockEquivalenceReport {
  double sup_norm = 0.0;    // sup_m ||B_m||
  double block_norm = 0.0;  // ||B^block||
  double ratio() const { return sup_norm > 0.0 ? block_norm / sup_norm : 1.0; }
};
// Stacks the blocks along the first axis with gaps and compares both sides.
BlockEquivalenceReport check_block_equivalence(const std::vector<Section>& blocks,
                                               const AlgebraKind& kind);

// Section covering every block cube of a stack built by check_block_equivalence.
struct StackLayout {
  std::vector<MultiIndex> anchors;
  std::int64_t enclosing_radius = 0;
};
StackLayout stack_layout(const std::vector<Section>& blocks);

// CSV row: kind,n,value,achieved_at
void write_norm_csv_header(std::ostream& os);
void write_norm_csv_row(std::ostream& os, const AlgebraKind& kind, std::int64_t n, const NormReport& rep);

}  // namespace fsm

#endif  // FSM_ALGEBRA_HPP_
