#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "lrex/measures.hpp"
#include "lrex/rates.hpp"
#include "lrex/testfn.hpp"

namespace lrex {

struct RunOptions {
  std::vector<TestFunction> functionals;
  // Accumulate the integral of n^gamma L<pi,G> along the path (for martingale checks).
  bool track_integral = false;
  bool store_grids = false;
  // Called for each accepted move before it is applied.
  std::function<void(const Configuration&, std::size_t from, std::size_t to)> on_event;
  std::uint64_t max_accepted = 0;  // 0: no limit
  std::uint64_t stream = 0;        // RNG stream (replica index)
};

struct TrajectoryRecord {
  std::vector<std::string> names;
  std::vector<double> times;
  std::vector<std::vector<double>> pairings;   // [time][functional]
  std::vector<std::vector<double>> integrals;  // [time][functional], empty unless tracked
  std::vector<double> initial_pairings;
  std::vector<long> totals;
  std::vector<std::vector<std::uint8_t>> grids;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::uint64_t proposals = 0;
  std::uint64_t accepted = 0;
  double envelope_rate = 0.0;
  double max_ratio = 0.0;
  double acceptance_ratio() const { return proposals ? static_cast<double>(accepted) / proposals : 0.0; }
};

// Per-proposal bound on (1/(2N_e)) alpha [c a + c' a'] used by the thinning envelope.
double envelope_bound(const ModelSpec& spec, int n);

TrajectoryRecord run(const ModelSpec& spec, const JumpKernel& kernel, const LatticeBox& box, int n,
                     const Configuration& eta0, double t_end, const std::vector<double>& sample_times,
                     std::uint64_t seed, const RunOptions& opts = {});

// n^gamma L <pi, G> evaluated directly (sum over all ordered pairs).
double pairing_drift(const Configuration& eta, const TestFunction& G, const ModelSpec& spec,
                     const JumpKernel& kernel, int n);

void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& rec);
// 32-byte header: "LRX1", d, L, n, N_e, reserved (u32 each), time (f64); then one byte per site.
void write_grid_binary(std::ostream& os, const LatticeBox& box, int n, int n_e, double t,
                       const std::vector<std::uint8_t>& grid);

struct MartingaleStat {
  double mean;
  double stderr_;
  std::size_t replicas;
};
MartingaleStat martingale_residual(const std::vector<TrajectoryRecord>& ensemble, const std::string& name, double t);

// Exact enumeration of Omega = {0..N_e}^box.
class StateEnumerator {
 public:
  StateEnumerator(const LatticeBox& box, int n_e);
  std::size_t count() const { return count_; }
  std::size_t index(const Configuration& eta) const;
  Configuration state(std::size_t idx) const;

 private:
  LatticeBox box_;
  int n_e_;
  std::size_t count_;
};

struct GeneratorMatrix {
  std::size_t dim = 0;
  std::vector<std::vector<std::pair<std::size_t, double>>> rows;  // off-diagonal entries
  std::vector<double> diag;

  std::vector<double> apply(const std::vector<double>& f) const;          // (Q f)(i)
  std::vector<double> left_apply(const std::vector<double>& mu) const;    // (mu Q)(j)
  double rate(std::size_t i, std::size_t j) const;
};

GeneratorMatrix generator_matrix(const ModelSpec& spec, const JumpKernel& kernel, const LatticeBox& box, int n);
std::vector<double> product_measure_weights(const StateEnumerator& en, double beta);
double stationarity_residual(const GeneratorMatrix& Q, const std::vector<double>& nu);

struct DirichletResult {
  double fast = 0.0;
  double slow = 0.0;
  double total = 0.0;      // D_F + alpha_n D_S
  double generator = 0.0;  // <-Lf, f>_nu
  double residual = 0.0;   // |generator - total / 2|
};

DirichletResult dirichlet_form(const std::vector<double>& f, double beta, const ModelSpec& spec,
                               const JumpKernel& kernel, const LatticeBox& box, int n);

}  // namespace lrex
