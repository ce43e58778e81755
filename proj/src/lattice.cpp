#include "fsm/lattice.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

namespace fsm {

MultiIndex MultiIndex::axis(int dim, int axis, std::int64_t k) {
  MultiIndex e(dim);
  e[axis] = k;
  return e;
}

bool MultiIndex::is_zero() const {
  for (auto c : coords_)
    if (c != 0) return false;
  return true;
}

std::int64_t MultiIndex::sup_norm() const {
  std::int64_t m = 0;
  for (auto c : coords_) m = std::max<std::int64_t>(m, std::llabs(c));
  return m;
}

std::int64_t MultiIndex::taxicab_norm() const {
  std::int64_t m = 0;
  for (auto c : coords_) m += std::llabs(c);
  return m;
}

double MultiIndex::euclidean_norm() const {
  double s = 0.0;
  for (auto c : coords_) s += static_cast<double>(c) * static_cast<double>(c);
  return std::sqrt(s);
}

MultiIndex MultiIndex::operator-() const {
  MultiIndex r = *this;
  for (auto& c : r.coords_) c = -c;
  return r;
}

MultiIndex& MultiIndex::operator+=(const MultiIndex& other) {
  if (other.dim() != dim()) throw std::invalid_argument("MultiIndex: dimension mismatch");
  for (std::size_t i = 0; i < coords_.size(); ++i) coords_[i] += other.coords_[i];
  return *this;
}

MultiIndex& MultiIndex::operator-=(const MultiIndex& other) {
  if (other.dim() != dim()) throw std::invalid_argument("MultiIndex: dimension mismatch");
  for (std::size_t i = 0; i < coords_.size(); ++i) coords_[i] -= other.coords_[i];
  return *this;
}

MultiIndex MultiIndex::operator*(std::int64_t factor) const {
  MultiIndex r = *this;
  for (auto& c : r.coords_) c *= factor;
  return r;
}

std::string MultiIndex::to_string() const {
  std::ostringstream os;
  os << *this;
  return os.str();
}

std::ostream& operator<<(std::ostream& os, const MultiIndex& k) {
  os << '(';
  for (int i = 0; i < k.dim(); ++i) {
    if (i) os << ' ';
    os << k[i];
  }
  return os << ')';
}

Cube::Cube(int dim, std::int64_t radius) : Cube(MultiIndex::zero(dim), radius) {}

Cube::Cube(MultiIndex anchor, std::int64_t radius)
    : anchor_(std::move(anchor)), radius_(radius), size_(1) {
  if (anchor_.dim() < 1) throw std::invalid_argument("Cube: dimension must be >= 1");
  if (radius < 0) throw std::invalid_argument("Cube: radius must be >= 0");
  for (int i = 0; i < anchor_.dim(); ++i) size_ *= static_cast<std::size_t>(side());
}

MultiIndex Cube::point(std::size_t position) const {
  MultiIndex k(dim());
  const auto s = static_cast<std::size_t>(side());
  for (int i = dim() - 1; i >= 0; --i) {
    k[i] = static_cast<std::int64_t>(position % s) - radius_ + anchor_[i];
    position /= s;
  }
  return k;
}

std::optional<std::size_t> Cube::position(const MultiIndex& k) const {
  if (k.dim() != dim()) return std::nullopt;
  std::size_t pos = 0;
  const auto s = static_cast<std::size_t>(side());
  for (int i = 0; i < dim(); ++i) {
    const std::int64_t local = k[i] - anchor_[i];
    if (local < -radius_ || local > radius_) return std::nullopt;
    pos = pos * s + static_cast<std::size_t>(local + radius_);
  }
  return pos;
}

double shell_count(int dim, std::int64_t j) {
  if (j == 0) return 1.0;
  const double outer = std::pow(2.0 * static_cast<double>(j) + 1.0, dim);
  const double inner = std::pow(2.0 * static_cast<double>(j) - 1.0, dim);
  return outer - inner;
}

}  // namespace fsm
