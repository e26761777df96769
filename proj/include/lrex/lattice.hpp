#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "lrex/error.hpp"

namespace lrex {

inline constexpr int kMaxDim = 4;

// Integer lattice point; only the first d coordinates are meaningful.
struct Site {
  std::array<int, kMaxDim> c{};

  int& operator[](int i) { return c[i]; }
  int operator[](int i) const { return c[i]; }
  bool operator==(const Site&) const = default;
  bool operator<(const Site& o) const { return c < o.c; }
};

Site operator+(Site a, const Site& b);
Site operator-(Site a, const Site& b);
Site operator*(int s, Site a);
Site unit(int j);  // e_j, 0-based axis

enum class BondClass { Fast, Slow };

// Slow iff exactly one of x_d, y_d is negative (last coordinate).
BondClass classify_bond(const Site& x, const Site& y, int d);

// Closed box {-L,...,L-1}^d.
class LatticeBox {
 public:
  LatticeBox(int d, int L);

  int dim() const { return d_; }
  int half_width() const { return L_; }
  std::size_t size() const { return size_; }
  int side() const { return 2 * L_; }

  bool contains(const Site& x) const;
  // Lexicographic index, first coordinate most significant.
  std::size_t index(const Site& x) const;
  Site site(std::size_t idx) const;

  bool operator==(const LatticeBox& o) const { return d_ == o.d_ && L_ == o.L_; }

 private:
  int d_;
  int L_;
  std::size_t size_;
};

class Configuration {
 public:
  Configuration(const LatticeBox& box, int n_e);
  Configuration(const LatticeBox& box, int n_e, std::vector<std::uint8_t> occ);

  const LatticeBox& box() const { return box_; }
  int n_e() const { return n_e_; }

  int at(const Site& x) const;  // throws OutOfBox
  int operator[](std::size_t idx) const { return occ_[idx]; }
  // Occupancy, or 0 for sites outside the box.
  int value_or_zero(const Site& x) const {
    return box_.contains(x) ? occ_[box_.index(x)] : 0;
  }
  void set(const Site& x, int v);
  void set_index(std::size_t idx, int v);

  long total() const;
  const std::vector<std::uint8_t>& data() const { return occ_; }
  std::vector<std::uint8_t>& mutable_data() { return occ_; }

  bool operator==(const Configuration& o) const {
    return box_ == o.box_ && n_e_ == o.n_e_ && occ_ == o.occ_;
  }

 private:
  LatticeBox box_;
  int n_e_;
  std::vector<std::uint8_t> occ_;
};

Configuration apply_jump(const Configuration& eta, const Site& x, const Site& y);
// In-place variant on linear indices; preconditions unchecked.
inline void jump_in_place(Configuration& eta, std::size_t ix, std::size_t iy) {
  auto& v = eta.mutable_data();
  --v[ix];
  ++v[iy];
}
Configuration complement(const Configuration& eta);

// One line per site: "x1 ... xd occupancy", lexicographic order.
void write_snapshot(std::ostream& os, const Configuration& eta);

}  // namespace lrex
