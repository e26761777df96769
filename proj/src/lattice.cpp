#include "lrex/lattice.hpp"

#include <ostream>
#include <string>

namespace lrex {

Site operator+(Site a, const Site& b) {
  for (int i = 0; i < kMaxDim; ++i) a.c[i] += b.c[i];
  return a;
}

Site operator-(Site a, const Site& b) {
  for (int i = 0; i < kMaxDim; ++i) a.c[i] -= b.c[i];
  return a;
}

Site operator*(int s, Site a) {
  for (int i = 0; i < kMaxDim; ++i) a.c[i] *= s;
  return a;
}

Site unit(int j) {
  Site e;
  e.c[j] = 1;
  return e;
}

BondClass classify_bond(const Site& x, const Site& y, int d) {
  const bool xn = x[d - 1] < 0;
  const bool yn = y[d - 1] < 0;
  return xn != yn ? BondClass::Slow : BondClass::Fast;
}

LatticeBox::LatticeBox(int d, int L) : d_(d), L_(L), size_(1) {
  if (d < 1 || d > kMaxDim)
    throw Error(ErrorCode::InvalidSpec, "dimension must be in 1.." + std::to_string(kMaxDim));
  if (L < 2) throw Error(ErrorCode::InvalidSpec, "half-width L must be >= 2");
  for (int i = 0; i < d; ++i) size_ *= static_cast<std::size_t>(2 * L);
}

bool LatticeBox::contains(const Site& x) const {
  for (int i = 0; i < d_; ++i)
    if (x[i] < -L_ || x[i] >= L_) return false;
  return true;
}

std::size_t LatticeBox::index(const Site& x) const {
  std::size_t idx = 0;
  const std::size_t s = static_cast<std::size_t>(2 * L_);
  for (int i = 0; i < d_; ++i) idx = idx * s + static_cast<std::size_t>(x[i] + L_);
  return idx;
}

Site LatticeBox::site(std::size_t idx) const {
  Site x;
  const std::size_t s = static_cast<std::size_t>(2 * L_);
  for (int i = d_ - 1; i >= 0; --i) {
    x[i] = static_cast<int>(idx % s) - L_;
    idx /= s;
  }
  return x;
}

Configuration::Configuration(const LatticeBox& box, int n_e)
    : Configuration(box, n_e, std::vector<std::uint8_t>(box.size(), 0)) {}

Configuration::Configuration(const LatticeBox& box, int n_e, std::vector<std::uint8_t> occ)
    : box_(box), n_e_(n_e), occ_(std::move(occ)) {
  if (n_e < 1 || n_e > 255) throw Error(ErrorCode::InvalidSpec, "N_e must be in 1..255");
  if (occ_.size() != box.size()) throw Error(ErrorCode::InvalidSpec, "occupancy size mismatch");
  for (auto v : occ_)
    if (v > n_e) throw Error(ErrorCode::PreconditionViolated, "occupancy exceeds N_e");
}

int Configuration::at(const Site& x) const {
  if (!box_.contains(x)) throw Error(ErrorCode::OutOfBox, "site outside box");
  return occ_[box_.index(x)];
}

void Configuration::set(const Site& x, int v) {
  if (!box_.contains(x)) throw Error(ErrorCode::OutOfBox, "site outside box");
  set_index(box_.index(x), v);
}

void Configuration::set_index(std::size_t idx, int v) {
  if (v < 0 || v > n_e_) throw Error(ErrorCode::PreconditionViolated, "occupancy out of range");
  occ_[idx] = static_cast<std::uint8_t>(v);
}

long Configuration::total() const {
  long s = 0;
  for (auto v : occ_) s += v;
  return s;
}

Configuration apply_jump(const Configuration& eta, const Site& x, const Site& y) {
  const auto& box = eta.box();
  if (!box.contains(x) || !box.contains(y)) throw Error(ErrorCode::OutOfBox, "jump endpoint outside box");
  if (x == y) throw Error(ErrorCode::PreconditionViolated, "x == y");
  const std::size_t ix = box.index(x), iy = box.index(y);
  if (eta[ix] == 0) throw Error(ErrorCode::PreconditionViolated, "empty source site");
  if (eta[iy] == eta.n_e()) throw Error(ErrorCode::PreconditionViolated, "saturated target site");
  Configuration out = eta;
  jump_in_place(out, ix, iy);
  return out;
}

Configuration complement(const Configuration& eta) {
  auto occ = eta.data();
  for (auto& v : occ) v = static_cast<std::uint8_t>(eta.n_e() - v);
  return Configuration(eta.box(), eta.n_e(), std::move(occ));
}

void write_snapshot(std::ostream& os, const Configuration& eta) {
  const auto& box = eta.box();
  for (std::size_t i = 0; i < box.size(); ++i) {
    const Site x = box.site(i);
    for (int j = 0; j < box.dim(); ++j) os << x[j] << ' ';
    os << eta[i] << '\n';
  }
}

}  // namespace lrex
