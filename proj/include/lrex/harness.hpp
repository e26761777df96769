#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "lrex/measures.hpp"
#include "lrex/pde.hpp"
#include "lrex/rates.hpp"
#include "lrex/testfn.hpp"

namespace lrex {

struct ExperimentConfig {
  std::string preset = "sep";
  double gamma = 1.5;
  int d = 1;
  int n_e = 1;
  std::vector<int> n_list{64, 128, 256};
  int replicas = 100;
  std::vector<std::string> test_functions{"gauss:0.5", "bump:1"};
  std::vector<double> times{0.25, 0.5};
  std::uint64_t seed = 1;
  std::string output_dir;  // empty: no files
  AlphaSeq alpha = AlphaSeq::constant(1.0);
  std::string profile = "ref";  // "ref", "constant:<beta>" or "file:<path>"
  int box_factor = 4;           // box half-width L = box_factor * n
  int threads = 0;              // 0: hardware concurrency

  void validate() const;  // throws ConfigError
  Profile initial_profile() const;
  ModelSpec model() const;
};

// `key = value` lines with `#` comments. Lists: n_list and times comma separated, test_functions
// separated by ';'. alpha is a number or "power:<a>,<beta>".
ExperimentConfig parse_config_text(const std::string& text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {});  // IoError if missing
// Applies one `key=value` override.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);
AlphaSeq parse_alpha(const std::string& text);

struct HydroRow {
  int n = 0;
  double t = 0.0;
  std::string function;
  double mean_error = 0.0;  // mean over replicas of |<pi^n_t,G> - <rho_t,G>|
  double stderr_ = 0.0;
  double mean_signed = 0.0;
  std::size_t replicas = 0;
  std::string anchor = "hydrodynamic_limit";
};

struct HydroReport {
  std::string preset;
  Regime reg;
  int n_ref = 0;
  std::vector<HydroRow> rows;  // ordered by (t, G, n)
  bool decreasing = false;     // every (t, G) column strictly decreasing in n
  double final_max_error = 0.0;  // max over (t, G) at the largest n
  double pde_mass_drift = 0.0;
  std::string criterion = "PASS iff the error decreases strictly from the smallest to the largest n in every (t,G) cell";
};

// Simulates M replicas per n from the product measure of the initial profile and compares
// pairings with the PDE solution at n_ref = 2 max(n_list) on the same closed box.
HydroReport hydrodynamic_convergence(const ExperimentConfig& cfg);
void write_hydro_csv(std::ostream& os, const HydroReport& rep);
std::string hydro_manifest_json(const ExperimentConfig& cfg, const HydroReport& rep);

struct StationarityReport {
  // Exact half.
  std::size_t states = 0;
  double residual = 0.0;  // ||nu_beta Q||_inf
  // Monte Carlo half.
  double beta = 0.4;
  std::vector<double> site_mean;
  std::vector<double> site_stderr;
  int outside_3sigma = 0;
  double bonferroni_z = 3.0;  // family-wise level of a single 3 sigma test
  int outside_bonferroni = 0;
  bool exact_ok(double tol = 1e-12) const { return residual < tol; }
  bool mc_ok() const { return outside_bonferroni == 0; }
};

// Exact half on the closed 4-site box (d = 1); Monte Carlo half at scale n_mc on 32 sites, occupancy
// averaged over 21 snapshots in [0, 1] per replica. mc_replicas = 0 skips the Monte Carlo half.
StationarityReport stationarity_experiment(const ExperimentConfig& cfg, double beta, int mc_replicas = 100,
                                           int n_mc = 64);

struct CheckLine {
  std::string name;
  std::string anchor;
  bool pass = false;
  std::string detail;
};

// Gradient identity, exact stationarity, Dirichlet identity, path construction and martingale
// mean-zero checks for the configured preset. quick shrinks trial counts and the martingale system.
std::vector<CheckLine> verify_suite(const ExperimentConfig& cfg, bool quick);

// Threads used for replica fan-out.
int worker_count(int requested);

std::string version_string();

}  // namespace lrex
