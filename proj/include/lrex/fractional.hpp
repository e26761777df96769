#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "lrex/lattice.hpp"
#include "lrex/rates.hpp"
#include "lrex/testfn.hpp"

namespace lrex {

enum class BondSet { B, F, S };  // all bonds, fast bonds, slow bonds

struct OperatorSpec {
  double gamma = 1.5;
  double kappa = 1.0;
  BondSet bonds = BondSet::B;
  double c_gamma = 1.0;
  int radius = 0;  // interaction radius in lattice units; 0 means unbounded

  // Constant and radius taken from a simulator kernel.
  static OperatorSpec from_kernel(const JumpKernel& k, double kappa = 1.0, BondSet bonds = BondSet::B);
  // Unbounded kernel normalized to unit mass on Z^d.
  static OperatorSpec unbounded(double gamma, int d, double kappa = 1.0, BondSet bonds = BondSet::B);
  void validate() const;
};

// Values on the sites of a window at scale n. When `outside` is set the field is extended by that
// constant beyond the window; otherwise operators act on the closed window.
struct LatticeField {
  LatticeBox window;
  int n = 1;
  std::vector<double> values;
  std::optional<double> outside;

  LatticeField(const LatticeBox& w, int n_, std::vector<double> v, std::optional<double> out = std::nullopt);
  static LatticeField from_function(const TestFunction& G, const LatticeBox& w, int n);
};

// Precomputed discrete operator on a fixed window: direct summation on small windows,
// FFT convolution otherwise.
class Stencil {
 public:
  Stencil(const LatticeBox& window, int n, const OperatorSpec& op);
  ~Stencil();
  Stencil(const Stencil&) = delete;
  Stencil& operator=(const Stencil&) = delete;

  // n^gamma [w_fast sum_{fast} p (H(y)-H(x)) + w_slow sum_{slow} p (H(y)-H(x))], closed window,
  // plus the exterior contribution when `outside` is given.
  std::vector<double> apply(const std::vector<double>& H, double w_fast, double w_slow,
                            std::optional<double> outside = std::nullopt) const;

  const std::vector<double>& row_fast() const { return row_fast_; }
  const std::vector<double>& row_slow() const { return row_slow_; }
  // max_x n^gamma (w_fast row_fast(x) + w_slow row_slow(x)).
  double max_row_sum(double w_fast, double w_slow) const;
  bool uses_fft() const { return fft_ != nullptr; }
  const LatticeBox& window() const { return window_; }
  int scale() const { return n_; }

 private:
  struct Fft;
  void convolve(const std::vector<double>& in, std::vector<double>& out) const;
  void ensure_exterior() const;

  LatticeBox window_;
  int n_;
  OperatorSpec op_;
  double ng_;
  std::vector<double> kern_;  // p over offsets [-(side-1), side-1]^d
  std::size_t kside_;
  std::vector<double> row_fast_, row_slow_;
  std::unique_ptr<Fft> fft_;
  mutable std::vector<double> ext_fast_, ext_slow_;
};

// Delta^{gamma/2}_{n,C} for the bond class in op.bonds.
LatticeField discrete_fraclap(const LatticeField& H, const OperatorSpec& op);
// Delta_{n,F} + kappa Delta_{n,S}.
LatticeField discrete_distorted(const LatticeField& H, const OperatorSpec& op);

enum class Region { FullSpace, LeftHalf, RightHalf, Star, Distorted };

struct QuadOptions {
  double inner_radius = 0.0;  // Taylor ball radius; 0 picks one from the function's extent
  double panel_ratio = 4.0;   // geometric ratio of radial panels
};

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
};

// Continuous fractional operators with constant op.c_gamma; d <= 2. Distorted uses op.kappa.
// Points with u_d = 0 belong to the right half.
QuadResult continuous_fraclap(const TestFunction& G, const Point& u, const OperatorSpec& op, Region region,
                              const QuadOptions& q = {});

struct ConvergenceRow {
  int n = 0;
  double error = 0.0;
  std::size_t sites = 0;
};

struct ConvergenceReport {
  std::string function;
  double kappa = 1.0;
  std::vector<ConvergenceRow> rows;
  bool decreasing = false;
};

// n^{-d} sum_x |L_{n,kappa} G(x/n) - L_kappa G(x/n)| over a window on which G is negligible near the edge.
ConvergenceReport operator_convergence_report(const TestFunction& G, const OperatorSpec& op,
                                              const std::vector<int>& n_list);

// Limit of |r|^{2-gamma} d_d Phi(u_*, r) as r -> 0 from the given side, by iterated Aitken extrapolation.
double directional_frac_derivative(const std::function<double(const Point&)>& phi, const Point& u_star, int d,
                                   int side, double gamma, double r0 = 0.1);

// sum_{m >= a} m^{-s}, a >= 1, s > 1.
double hurwitz_tail(long a, double s);
// Q[h] = sum of p(z) over offsets with z_d >= h + 1, for h = 0..H-1.
std::vector<double> half_space_mass(const OperatorSpec& op, int d, int H);

}  // namespace lrex
