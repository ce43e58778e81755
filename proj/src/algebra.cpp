#include "fsm/algebra.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>

#include "fsm/errors.hpp"

namespace fsm {

namespace {

// Calls fn(k, l, |a_kl|) for every stored entry of a section.
template <typename Fn>
void for_each_entry(const Section& B, Fn&& fn) {
  const Matrix& M = B.matrix();
  std::vector<MultiIndex> cols(B.cols().size());
  for (std::size_t j = 0; j < cols.size(); ++j) cols[j] = B.cols().point(j);
  for (std::size_t i = 0; i < B.rows().size(); ++i) {
    const MultiIndex k = B.rows().point(i);
    for (std::size_t j = 0; j < cols.size(); ++j) {
      const double a = std::abs(M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      if (a != 0.0) fn(k, cols[j], a);
    }
  }
}

template <typename Visit>
NormReport sup_norm_impl(Visit&& visit, const WeightSpec& v) {
  NormReport rep;
  visit([&](const MultiIndex& k, const MultiIndex& l, double a) {
    const double x = a * v(k - l);
    if (x > rep.value) {
      rep.value = x;
      rep.row = k;
      rep.col = l;
    }
  });
  return rep;
}

template <typename Visit>
NormReport schur_norm_impl(Visit&& visit, const WeightSpec& v) {
  std::map<MultiIndex, double> rows, cols;
  visit([&](const MultiIndex& k, const MultiIndex& l, double a) {
    const double x = a * v(k - l);
    rows[k] += x;
    cols[l] += x;
  });
  NormReport rep;
  for (const auto& [k, s] : rows)
    if (s > rep.value) {
      rep.value = s;
      rep.row = k;
    }
  for (const auto& [l, s] : cols)
    if (s > rep.value) {
      rep.value = s;
      rep.row.reset();
      rep.col = l;
    }
  return rep;
}

template <typename Visit>
NormReport diagonal_norm_impl(Visit&& visit, const WeightSpec& v) {
  std::map<MultiIndex, double> diag_sup;
  visit([&](const MultiIndex& k, const MultiIndex& l, double a) {
    double& s = diag_sup[k - l];
    s = std::max(s, a);
  });
  NormReport rep;
  double best = -1.0;
  for (const auto& [m, s] : diag_sup) {
    const double x = s * v(m);
    rep.value += x;
    if (x > best) {
      best = x;
      rep.offset = m;
    }
  }
  return rep;
}

template <typename Visit>
NormReport norm_dispatch(Visit&& visit, const AlgebraKind& kind) {
  switch (kind.tag) {
    case AlgebraKind::Tag::jaffard:
    case AlgebraKind::Tag::av:
      return sup_norm_impl(visit, kind.weight());
    case AlgebraKind::Tag::av1:
      return schur_norm_impl(visit, kind.weight());
    case AlgebraKind::Tag::cv:
      return diagonal_norm_impl(visit, kind.weight());
  }
  return {};
}

auto section_visitor(const Section& B) {
  return [&B](auto&& fn) { for_each_entry(B, fn); };
}

}  // namespace

AlgebraKind AlgebraKind::jaffard(double s, int dim) {
  AlgebraKind k;
  k.tag = Tag::jaffard;
  k.s = s;
  k.v = WeightSpec::polynomial(dim, s);
  return k;
}

AlgebraKind AlgebraKind::av(WeightSpec v) {
  AlgebraKind k;
  k.tag = Tag::av;
  k.v = std::move(v);
  return k;
}

AlgebraKind AlgebraKind::av1(WeightSpec v) {
  AlgebraKind k;
  k.tag = Tag::av1;
  k.v = std::move(v);
  return k;
}

AlgebraKind AlgebraKind::cv(WeightSpec v) {
  AlgebraKind k;
  k.tag = Tag::cv;
  k.v = std::move(v);
  return k;
}

WeightSpec AlgebraKind::weight() const {
  if (tag == Tag::jaffard) return WeightSpec::polynomial(v.dim(), s);
  return v;
}

std::string AlgebraKind::name() const {
  switch (tag) {
    case Tag::jaffard:
      return "jaffard";
    case Tag::av:
      return "Av";
    case Tag::av1:
      return "Av1";
    case Tag::cv:
      return "Cv";
  }
  return "?";
}

std::string NormReport::achieved_at() const {
  std::ostringstream os;
  if (row && col) {
    os << "entry " << *row << ' ' << *col;
  } else if (row) {
    os << "row " << *row;
  } else if (col) {
    os << "col " << *col;
  } else if (offset) {
    os << "offset " << *offset;
  }
  return os.str();
}

NormReport norm_jaffard(const Section& B, double s) {
  return sup_norm_impl(section_visitor(B), WeightSpec::polynomial(B.dim(), s));
}

NormReport norm_av(const Section& B, const WeightSpec& v) { return sup_norm_impl(section_visitor(B), v); }

NormReport norm_av1(const Section& B, const WeightSpec& v) { return schur_norm_impl(section_visitor(B), v); }

NormReport norm_cv(const Section& B, const WeightSpec& v) { return diagonal_norm_impl(section_visitor(B), v); }

NormReport norm(const Section& B, const AlgebraKind& kind) { return norm_dispatch(section_visitor(B), kind); }

double operator_norm_l2(const Section& B) {
  if (B.matrix().size() == 0) return 0.0;
  Eigen::BDCSVD<Matrix> svd(B.matrix());
  return svd.singularValues()(0);
}

TranslationReport check_translation_invariance(const MatrixModel& A, const AlgebraKind& kind,
                                               const std::vector<MultiIndex>& shifts, std::int64_t n) {
  const Section base = finite_section(A, n);
  TranslationReport rep;
  rep.base = norm(base, kind).value;
  for (const auto& j : shifts) {
    const double x = norm(base.translated(j), kind).value;
    rep.shifted.push_back(x);
    rep.max_abs_diff = std::max(rep.max_abs_diff, std::abs(x - rep.base));
  }
  return rep;
}

bool check_solidity(const Section& B, const Section& B_dominating, const AlgebraKind& kind) {
  const Matrix& X = B.matrix();
  const Matrix& D = B_dominating.matrix();
  if (!(B.rows() == B_dominating.rows() && B.cols() == B_dominating.cols()))
    throw ValidationError("check_solidity: sections live on different cubes");
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < X.cols(); ++j)
      if (std::abs(X(i, j)) > std::abs(D(i, j)))
        throw ValidationError("check_solidity: B is not entrywise dominated");
  return norm(B, kind).value <= norm(B_dominating, kind).value * (1.0 + 1e-12);
}

StackLayout stack_layout(const std::vector<Section>& blocks) {
  StackLayout layout;
  if (blocks.empty()) return layout;
  const int dim = blocks.front().dim();
  std::int64_t center = 0;
  for (std::size_t m = 0; m < blocks.size(); ++m) {
    if (m > 0) center += blocks[m - 1].n() + blocks[m].n() + 2;
    layout.anchors.push_back(MultiIndex::axis(dim, 0, center));
    layout.enclosing_radius = std::max(layout.enclosing_radius, center + blocks[m].n());
  }
  return layout;
}

BlockEquivalenceReport check_block_equivalence(const std::vector<Section>& blocks, const AlgebraKind& kind) {
  BlockEquivalenceReport rep;
  for (const auto& B : blocks) rep.sup_norm = std::max(rep.sup_norm, norm(B, kind).value);
  const StackLayout layout = stack_layout(blocks);
  const MatrixModel stacked = block_stack(blocks, layout.anchors);

  // The stacked model vanishes outside the union of the block cubes.
  std::vector<MultiIndex> support;
  for (std::size_t m = 0; m < blocks.size(); ++m) {
    Cube c(layout.anchors[m], blocks[m].n());
    for (std::size_t i = 0; i < c.size(); ++i) support.push_back(c.point(i));
  }
  auto visit = [&](auto&& fn) {
    for (const auto& k : support)
      for (const auto& l : support) {
        const double a = std::abs(stacked(k, l));
        if (a != 0.0) fn(k, l, a);
      }
  };
  rep.block_norm = norm_dispatch(visit, kind).value;
  return rep;
}

void write_norm_csv_header(std::ostream& os) { os << "kind,n,value,achieved_at\n"; }

void write_norm_csv_row(std::ostream& os, const AlgebraKind& kind, std::int64_t n, const NormReport& rep) {
  os << kind.name() << ',' << n << ',' << std::setprecision(17) << rep.value << ",\"" << rep.achieved_at()
     << "\"\n";
}

}  // namespace fsm
