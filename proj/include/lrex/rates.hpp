#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lrex/lattice.hpp"
#include "lrex/rng.hpp"

namespace lrex {

// Slow-bond factor alpha_n: constant or a * n^{-beta}.
struct AlphaSeq {
  enum class Kind { Constant, PowerLaw };
  Kind kind = Kind::Constant;
  double a = 1.0;
  double beta = 0.0;

  static AlphaSeq constant(double alpha) { return {Kind::Constant, alpha, 0.0}; }
  static AlphaSeq power_law(double a, double beta) { return {Kind::PowerLaw, a, beta}; }
  double value(double n) const;
  double limit() const;  // +inf when divergent
  std::string describe() const;
};

// Truncation level ell_n: fixed K or floor(n^delta), at least 1.
struct EllSeq {
  enum class Kind { Fixed, PowerLaw };
  Kind kind = Kind::Fixed;
  int fixed = 1;
  double delta = 0.0;

  static EllSeq fixed_at(int k) { return {Kind::Fixed, k, 0.0}; }
  static EllSeq power_law(double delta) { return {Kind::PowerLaw, 1, delta}; }
  int value(int n) const;
  std::string describe() const;
};

struct LowerBoundCert {
  double b_plus = 0.0;
  double b_minus = 0.0;
  int k_plus = 1;
  int k_minus = 1;
};

struct ModelSpec {
  std::string name = "custom";
  double gamma = 1.5;
  int d = 1;
  int n_e = 1;
  double b0 = 0.0;
  std::vector<double> b_plus;   // b_plus[k-1] = b_k^+
  std::vector<double> b_minus;  // b_minus[k-1] = b_k^-
  EllSeq ell = EllSeq::fixed_at(1);
  AlphaSeq alpha = AlphaSeq::constant(1.0);
  LowerBoundCert cert;
  bool series_truncated = false;  // coefficients cut from an infinite series

  double bp(int k) const { return k <= static_cast<int>(b_plus.size()) ? b_plus[k - 1] : 0.0; }
  double bm(int k) const { return k <= static_cast<int>(b_minus.size()) ? b_minus[k - 1] : 0.0; }
  int stored_k() const;
  // Effective truncation: min(ell_n, stored coefficients).
  int ell_at(int n) const;
  // Largest k <= ell_at(n) with a nonzero coefficient (0 when none).
  int max_active_k(int n) const;
  // True when no coefficient with k >= 2 is active, so rates do not depend on windows.
  bool state_independent_constraint(int n) const { return max_active_k(n) <= 1; }
  void validate() const;
};

// Presets: "sep", "porous:k", "power:m", "custom:<file>" with "k b_plus b_minus" lines.
ModelSpec make_preset(const std::string& preset, double gamma, int d, int n_e);

struct PowerCoeffs {
  double b0;
  std::vector<double> b_minus;
};
PowerCoeffs power_series_coeffs(double m, int K, int n_e);

// Jump kernel p(z) = c |z|^{-d-gamma} on 0 < |z| <= R with alias sampling.
class JumpKernel {
 public:
  enum class Mode { TruncatedNormalized, InfiniteConstant };

  JumpKernel(double gamma, int d, int R, Mode mode);

  double gamma() const { return gamma_; }
  int dim() const { return d_; }
  int radius() const { return R_; }
  Mode mode() const { return mode_; }
  double c_gamma() const { return c_; }
  double truncated_mass() const { return mass_; }

  double p(const Site& z) const;
  std::size_t table_size() const { return offsets_.size(); }
  const Site& offset(std::size_t i) const { return offsets_[i]; }
  double table_p(std::size_t i) const { return probs_[i]; }
  // Draw a table index with probability table_p(i) / truncated_mass().
  std::size_t sample(Rng& rng) const;

 private:
  double gamma_;
  int d_;
  int R_;
  Mode mode_;
  double c_ = 0.0;
  double mass_ = 0.0;
  std::vector<Site> offsets_;
  std::vector<double> probs_;
  std::vector<double> alias_prob_;
  std::vector<std::uint32_t> alias_;
  std::vector<double> dense_;  // p over [-R,R]^d when small enough
  std::size_t dense_side_ = 0;
};

JumpKernel build_kernel(double gamma, int d, int R,
                        JumpKernel::Mode mode = JumpKernel::Mode::TruncatedNormalized);

// Sum over nonzero lattice points of |z|^{-s} (s > d), via theta-function integrals.
double lattice_zeta(int d, double s);

enum class WindowPolicy { Strict, ZeroPad };

inline long rate_a(const Configuration& eta, std::size_t ix, std::size_t iy) {
  return static_cast<long>(eta[ix]) * (eta.n_e() - eta[iy]);
}
long rate_a(const Configuration& eta, const Site& x, const Site& y);

// r^{(k),j}_{x,y} on eta (or its complement when tilde); axis j is 0-based.
double constraint_r(const Configuration& eta, const Site& x, const Site& y, int k, int j,
                    bool tilde = false, WindowPolicy policy = WindowPolicy::Strict);
// Exact integer 2 c^{(k),j}_{x,y} = r_{x,y} + r_{y,x}.
long constraint_c2_axis(const Configuration& eta, const Site& x, const Site& y, int k, int j,
                        bool tilde = false, WindowPolicy policy = WindowPolicy::Strict);
double constraint_c(const Configuration& eta, const Site& x, const Site& y, int k,
                    bool tilde = false, WindowPolicy policy = WindowPolicy::Strict);
double constraint_series(const Configuration& eta, const Site& x, const Site& y,
                         const ModelSpec& spec, int n,
                         WindowPolicy policy = WindowPolicy::Strict);

// Constraint used by the dynamics for the move x -> y: average of the series constraint
// before and after the move. Zero padding at the box boundary.
double jump_constraint(const Configuration& eta, const Site& x, const Site& y,
                       const ModelSpec& spec, int n);
// Same, evaluating the post-jump state in place (eta is restored before return).
double jump_constraint_inplace(Configuration& eta, const Site& x, const Site& y,
                               const ModelSpec& spec, int n);

double slow_factor(const Site& x, const Site& y, const ModelSpec& spec, int n);

// Rate of the directed move x -> y under the (unaccelerated) generator.
double directed_rate(const Configuration& eta, const Site& x, const Site& y,
                     const ModelSpec& spec, const JumpKernel& kernel, int n);
// Ordered-pair generator summand (1/(2N_e)) p alpha [c_{x->y} a_{xy} + c_{y->x} a_{yx}];
// symmetric in (x,y). The two directed moves on {x,y} together occur at twice this rate.
double exchange_rate(const Configuration& eta, const Site& x, const Site& y,
                     const ModelSpec& spec, const JumpKernel& kernel, int n);

struct SeriesF {
  double b0 = 0.0;
  std::vector<double> b_plus, b_minus;
  int n_e = 1;
  bool truncated = false;

  static SeriesF from_spec(const ModelSpec& spec);
  double value(double rho) const;       // unchecked
  double derivative(double rho) const;  // unchecked
  double f_inf() const;
  double f_inf_prime() const;
  double f_prime_n(int ell) const;
  // Bound on the omitted tail of an infinite series beyond the stored terms, estimated
  // from the decay of the last stored coefficients.
  double tail_estimate() const;
  double sup_derivative() const;
};

double F_eval(double rho, const SeriesF& f);
double D_eval(double rho, const SeriesF& f);

double r_n_gamma(double n, double gamma);

struct HypothesisRow {
  int n;
  int ell;
  double f_prime_n;
  double r_n;
  double tight;      // f'_n r_n / n
  double composite;  // barrier-aware quantity
};

struct HypothesisReport {
  std::vector<HypothesisRow> rows;
  bool tight_decreasing = false;
  bool composite_decreasing = false;
  bool lower_bound_exhaustive = false;
  long lower_bound_checked = 0;
  long lower_bound_failures = 0;
  double lower_bound_min_slack = 0.0;
  bool lower_bound_ok() const { return lower_bound_failures == 0; }
};

HypothesisReport hypothesis_report(const ModelSpec& spec, const std::vector<int>& n_list,
                                   std::uint64_t seed = 1);

}  // namespace lrex
