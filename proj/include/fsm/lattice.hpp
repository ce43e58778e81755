#ifndef FSM_LATTICE_HPP_
#define FSM_LATTICE_HPP_

#include <complex>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace fsm {

using Scalar = std::complex<double>;

// A point of the integer lattice Z^d.
class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(int dim) : coords_(static_cast<std::size_t>(dim), 0) {}
  MultiIndex(std::initializer_list<std::int64_t> coords) : coords_(coords) {}
  explicit MultiIndex(std::vector<std::int64_t> coords)
      : coords_(std::move(coords)) {}

  static MultiIndex zero(int dim) { return MultiIndex(dim); }
  // k * e_axis
  static MultiIndex axis(int dim, int axis, std::int64_t k);

  int dim() const { return static_cast<int>(coords_.size()); }
  std::int64_t operator[](int i) const { return coords_[static_cast<std::size_t>(i)]; }
  std::int64_t& operator[](int i) { return coords_[static_cast<std::size_t>(i)]; }
  const std::vector<std::int64_t>& coords() const { return coords_; }

  bool is_zero() const;
  std::int64_t sup_norm() const;
  std::int64_t taxicab_norm() const;
  double euclidean_norm() const;

  MultiIndex operator-() const;
  MultiIndex& operator+=(const MultiIndex& other);
  MultiIndex& operator-=(const MultiIndex& other);
  MultiIndex operator*(std::int64_t factor) const;

  friend MultiIndex operator+(MultiIndex lhs, const MultiIndex& rhs) {
    lhs += rhs;
    return lhs;
  }
  friend MultiIndex operator-(MultiIndex lhs, const MultiIndex& rhs) {
    lhs -= rhs;
    return lhs;
  }
  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;
  friend auto operator<=>(const MultiIndex&, const MultiIndex&) = default;

  std::string to_string() const;

 private:
  std::vector<std::int64_t> coords_;
};

std::ostream& operator<<(std::ostream& os, const MultiIndex& k);

// The translated cube anchor + C_radius, C_radius = [-radius, radius]^d.
// Points are enumerated lexicographically, first coordinate slowest.
class Cube {
 public:
  Cube(int dim, std::int64_t radius);
  Cube(MultiIndex anchor, std::int64_t radius);

  int dim() const { return anchor_.dim(); }
  std::int64_t radius() const { return radius_; }
  const MultiIndex& anchor() const { return anchor_; }
  std::int64_t side() const { return 2 * radius_ + 1; }
  std::size_t size() const { return size_; }

  MultiIndex point(std::size_t position) const;
  std::optional<std::size_t> position(const MultiIndex& k) const;
  bool contains(const MultiIndex& k) const { return position(k).has_value(); }

  Cube translated(const MultiIndex& shift) const {
    return Cube(anchor_ + shift, radius_);
  }

  friend bool operator==(const Cube&, const Cube&) = default;

 private:
  MultiIndex anchor_;
  std::int64_t radius_;
  std::size_t size_;
};

// Number of lattice points k in Z^d with |k|_inf == j.
double shell_count(int dim, std::int64_t j);

// Calls fn(k) for every k with |k|_inf == j.
template <typename Fn>
void for_each_in_shell(int dim, std::int64_t j, Fn&& fn) {
  if (j == 0) {
    fn(MultiIndex::zero(dim));
    return;
  }
  // Split the shell by the first axis carrying |k_axis| == j: earlier
  // coordinates range over (-j, j), later ones over [-j, j].
  MultiIndex k(dim);
  for (int axis = 0; axis < dim; ++axis) {
    for (std::int64_t sign : {-1, 1}) {
      for (int i = 0; i < dim; ++i) k[i] = i < axis ? -(j - 1) : -j;
      k[axis] = sign * j;
      while (true) {
        fn(static_cast<const MultiIndex&>(k));
        int i = dim - 1;
        for (; i >= 0; --i) {
          if (i == axis) continue;
          const std::int64_t hi = i < axis ? j - 1 : j;
          if (k[i] < hi) {
            ++k[i];
            break;
          }
          k[i] = i < axis ? -(j - 1) : -j;
        }
        if (i < 0) break;
      }
    }
  }
}

}  // namespace fsm

#endif  // FSM_LATTICE_HPP_
