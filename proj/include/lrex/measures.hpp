#pragma once

#include <cstdint>
#include <string>

#include "lrex/lattice.hpp"
#include "lrex/rng.hpp"
#include "lrex/testfn.hpp"

namespace lrex {

// Built-in Ref family: value `left` for u_d < 0 and `right` for u_d > 0, joined by a
// smoothstep of width `slab` centered on the barrier, and relaxed to `background` by a
// radial smoothstep over [support - slab, support].
struct RefShape {
  double left = 0.3;
  double right = 0.7;
  double slab = 0.5;
  double background = 0.5;
  double support = 2.0;
};

struct RefConstants {
  double a_h, b_h, L_h, R_h, A_h;
};

class Profile {
 public:
  enum class Kind { Constant, Ref };

  static Profile constant(double beta, int d);
  static Profile ref(const RefShape& shape, int d);

  Kind kind() const { return kind_; }
  int dim() const { return d_; }
  double beta() const { return beta_; }
  const RefShape& shape() const { return shape_; }
  RefConstants constants() const;

  double operator()(const Point& u) const;
  void validate() const;  // throws InvalidProfile
  std::string describe() const;

 private:
  Kind kind_ = Kind::Constant;
  int d_ = 1;
  double beta_ = 0.5;
  RefShape shape_;
};

// key=value file: kind=ref|constant, beta, plateau_left, plateau_right, slab_width,
// background, support_radius.
Profile load_profile(const std::string& path, int d);
Profile parse_profile_text(const std::string& text, int d);

double smootherstep(double t);

Configuration sample_product(const Profile& h, int n, const LatticeBox& box, int n_e, Rng& rng);
Configuration sample_product(const Profile& h, int n, const LatticeBox& box, int n_e, std::uint64_t seed);
int sample_binomial(int n_e, double p, Rng& rng);

double relative_entropy_product(const Profile& mu, const Profile& nu, int n, const LatticeBox& box, int n_e);

double empirical_pairing(const Configuration& eta, const TestFunction& G, int n);
double block_average(const Configuration& xi, const Site& z, double ell);
double iota_indicator(const Point& u, double eps, const Point& v, int d);

}  // namespace lrex
