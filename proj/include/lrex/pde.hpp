#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lrex/fractional.hpp"
#include "lrex/rates.hpp"
#include "lrex/testfn.hpp"

namespace lrex {

enum class BarrierCondition { Transmission, None, Neumann, LimitedTransmission };
const char* to_string(BarrierCondition b);

struct Regime {
  double kappa = 1.0;
  BarrierCondition barrier = BarrierCondition::None;
  AlphaSeq alpha;
  std::string note;
  // Weight of slow bonds in the semi-discrete operator at grid scale n.
  double slow_weight(int n) const;
};

// Limit of alpha_n r_n^gamma for the supported alpha forms (may be +inf).
double alpha_r_limit(const AlphaSeq& alpha, double gamma);
Regime regime(const AlphaSeq& alpha, double gamma);

struct Window {
  int d = 1;
  double half_width = 3.0;  // macroscopic
};

struct SolveOptions {
  std::optional<OperatorSpec> op;     // kernel constant and radius; unbounded normalized kernel by default
  std::vector<double> sample_times;   // default {T}
  double tol = 1e-6;                  // local error per step (max norm)
  double bound_tol = 1e-8;
  double dt_min = 1e-12;
};

struct DensityTrajectory {
  LatticeBox box{1, 2};
  int n = 1;
  int n_e = 1;
  double gamma = 1.5;
  Regime reg;
  double slow_weight = 1.0;
  SeriesF F;
  OperatorSpec op;
  double tail_estimate = 0.0;
  std::vector<double> times;
  std::vector<std::vector<double>> fields;
  std::vector<double> mass;  // n^{-d} sum_x rho(x)
  long steps = 0;
  long rejected = 0;
  double tol = 1e-6;
  double bound_tol = 1e-8;

  Point node(std::size_t i) const { return macro_point(box.site(i), n, box.dim()); }
  double pairing(std::size_t k, const TestFunction& G) const;
  double max_mass_drift() const;  // relative
};

DensityTrajectory solve(const std::function<double(const Point&)>& g, const SeriesF& F, const Regime& reg,
                        double gamma, double T, int n_grid, const Window& window, const SolveOptions& opts = {});

// n^{-d} sum over the coarse nodes of |a - b| at the sample index k of each; b's grid must refine a's.
double l1_difference(const DensityTrajectory& a, std::size_t ka, const DensityTrajectory& b, std::size_t kb);

// <rho_t,G_t> - <g,G_0> - int <rho_s, dG_s> ds - int <F(rho_s), L_kappa G_s> ds on the solver grid,
// trapezoid rule over the stored sample times up to t.
double weak_residual(const DensityTrajectory& traj, const SpaceTimeTest& G,
                     const std::function<double(const Point&)>& g, const Regime& reg, double t);

// |r|^{2-gamma} d_d F(rho) one half cell from the barrier, averaged over transverse nodes.
double barrier_derivative_estimate(const DensityTrajectory& traj, std::size_t k, int side);

// CSV `t,x1..xd,rho`.
void write_density_csv(std::ostream& os, const DensityTrajectory& traj);
std::string manifest_json(const DensityTrajectory& traj);

}  // namespace lrex
