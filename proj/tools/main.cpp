#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "lrex/error.hpp"
#include "lrex/fractional.hpp"
#include "lrex/harness.hpp"
#include "lrex/identity.hpp"
#include "lrex/pde.hpp"
#include "lrex/rng.hpp"
#include "lrex/simulator.hpp"

using namespace lrex;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitVerify = 2;
constexpr int kExitUsage = 64;

// Options shared by subcommands; unset values keep the configuration file or defaults.
struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> preset, alpha, profile, output_dir;
  std::optional<double> gamma;
  std::optional<int> d, n_e, replicas, threads, box_factor;
  std::vector<int> n_list;
  std::vector<double> times;
  std::vector<std::string> functions;
};

void add_model_options(CLI::App* app, Common& c) {
  app->add_option("--preset", c.preset, "Model preset: sep, porous:k, power:m, custom:<file>");
  app->add_option("--gamma", c.gamma, "Jump exponent in (0,2)");
  app->add_option("--d", c.d, "Dimension");
  app->add_option("--n-e", c.n_e, "Maximal occupancy per site");
  app->add_option("--alpha", c.alpha, "Slow-bond factor: number or power:a,beta");
  app->add_option("--profile", c.profile, "Initial profile: ref, constant:<beta>, file:<path>");
  app->add_option("--threads", c.threads, "Worker threads (0: all cores)");
}

ExperimentConfig build_config(const Common& c) {
  ExperimentConfig cfg;
  if (!c.config.empty()) cfg = load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (c.preset) cfg.preset = *c.preset;
  if (c.alpha) cfg.alpha = parse_alpha(*c.alpha);
  if (c.profile) cfg.profile = *c.profile;
  if (c.output_dir) cfg.output_dir = *c.output_dir;
  if (c.gamma) cfg.gamma = *c.gamma;
  if (c.d) cfg.d = *c.d;
  if (c.n_e) cfg.n_e = *c.n_e;
  if (c.replicas) cfg.replicas = *c.replicas;
  if (c.threads) cfg.threads = *c.threads;
  if (c.box_factor) cfg.box_factor = *c.box_factor;
  if (!c.n_list.empty()) cfg.n_list = c.n_list;
  if (!c.times.empty()) cfg.times = c.times;
  if (!c.functions.empty()) cfg.test_functions = c.functions;
  cfg.validate();
  return cfg;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + path);
  return f;
}

void with_output(const std::string& path, const std::function<void(std::ostream&)>& body) {
  if (path.empty() || path == "-") {
    body(std::cout);
  } else {
    auto f = open_out(path);
    body(f);
  }
}

int cmd_simulate(const Common& c, int n, const std::string& out, const std::string& grid) {
  const ExperimentConfig cfg = build_config(c);
  const ModelSpec spec = cfg.model();
  if (n <= 0) n = cfg.n_list.front();
  const LatticeBox box(cfg.d, cfg.box_factor * n);
  const JumpKernel kernel(cfg.gamma, cfg.d, box.side(), JumpKernel::Mode::InfiniteConstant);
  Rng init(mix64(cfg.seed ^ 0x5bd1e995ULL), 0);
  const Configuration eta0 = sample_product(cfg.initial_profile(), n, box, cfg.n_e, init);
  RunOptions opts;
  for (const auto& s : cfg.test_functions) opts.functionals.push_back(parse_test_function(s, cfg.d));
  opts.store_grids = !grid.empty();
  const TrajectoryRecord rec = run(spec, kernel, box, n, eta0, cfg.times.back(), cfg.times, cfg.seed, opts);
  with_output(out, [&](std::ostream& os) { write_trajectory_csv(os, rec); });
  if (!grid.empty()) {
    auto f = open_out(grid);
    write_grid_binary(f, box, n, cfg.n_e, rec.times.back(), rec.grids.back());
  }
  return kExitOk;
}

int cmd_solve(const Common& c, int n_grid, double T, double half_width, const std::string& out,
              const std::string& manifest) {
  const ExperimentConfig cfg = build_config(c);
  const ModelSpec spec = cfg.model();
  const Profile h = cfg.initial_profile();
  const double Ne = cfg.n_e;
  SolveOptions so;
  so.op = OperatorSpec::unbounded(cfg.gamma, cfg.d);
  if (T <= 0.0) T = cfg.times.back();
  for (double t : cfg.times)
    if (t <= T) so.sample_times.push_back(t);
  const DensityTrajectory tr = solve([&](const Point& u) { return Ne * h(u); }, SeriesF::from_spec(spec),
                                     regime(cfg.alpha, cfg.gamma), cfg.gamma, T, n_grid,
                                     Window{cfg.d, half_width > 0.0 ? half_width : cfg.box_factor}, so);
  with_output(out, [&](std::ostream& os) { write_density_csv(os, tr); });
  if (!manifest.empty()) {
    auto f = open_out(manifest);
    f << manifest_json(tr) << "\n";
  }
  return kExitOk;
}

int cmd_verify(const Common& c, bool quick) {
  const ExperimentConfig cfg = build_config(c);
  bool all = true;
  for (const auto& line : verify_suite(cfg, quick)) {
    std::printf("%s %s [%s] %s\n", line.pass ? "PASS" : "FAIL", line.name.c_str(), line.anchor.c_str(),
                line.detail.c_str());
    all = all && line.pass;
  }
  return all ? kExitOk : kExitVerify;
}

int cmd_converge(const Common& c) {
  const ExperimentConfig cfg = build_config(c);
  const HydroReport rep = hydrodynamic_convergence(cfg);
  if (cfg.output_dir.empty()) {
    write_hydro_csv(std::cout, rep);
  } else {
    auto csv = open_out(cfg.output_dir + "/hydro.csv");
    write_hydro_csv(csv, rep);
    auto js = open_out(cfg.output_dir + "/hydro_manifest.json");
    js << hydro_manifest_json(cfg, rep) << "\n";
  }
  std::fprintf(stderr, "%s: error columns %s, final max error %.4f\n", rep.decreasing ? "PASS" : "FAIL",
               rep.decreasing ? "strictly decreasing" : "not strictly decreasing", rep.final_max_error);
  return rep.decreasing ? kExitOk : kExitVerify;
}

int cmd_operator(const Common& c, double kappa, const std::string& function, std::vector<int> n_list) {
  const ExperimentConfig cfg = build_config(c);
  if (n_list.empty()) n_list = {32, 64, 128};
  const OperatorSpec op = OperatorSpec::unbounded(cfg.gamma, cfg.d, kappa);
  const ConvergenceReport rep = operator_convergence_report(parse_test_function(function, cfg.d), op, n_list);
  std::printf("n,error,sites,anchor\n");
  for (const auto& r : rep.rows) std::printf("%d,%.17g,%zu,operator_convergence\n", r.n, r.error, r.sites);
  std::fprintf(stderr, "%s: error column %s\n", rep.decreasing ? "PASS" : "FAIL",
               rep.decreasing ? "strictly decreasing" : "not strictly decreasing");
  return rep.decreasing ? kExitOk : kExitVerify;
}

int cmd_paths(const Common& c, int k_star, const std::string& branch, int count) {
  const ExperimentConfig cfg = build_config(c);
  if (branch != "plus" && branch != "minus") throw CLI::ValidationError("--branch", "must be plus or minus");
  const StarCert cert{k_star, 1.0, branch == "plus" ? ClusterBranch::PlusCluster : ClusterBranch::MinusCluster};
  Rng rng(cfg.seed, 31);
  bool all = true;
  std::printf("[\n");
  for (int i = 0; i < count; ++i) {
    const PathInstance in = random_path_instance(rng, cfg.d, cert);
    std::string body;
    try {
      const PathPlan plan = moving_particle_path(in.eta, in.x, in.y, in.j, cert, in.eta.n_e());
      all = all && verify_path(plan, in.eta.n_e());
      body = path_json(plan);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::BlockedPath) throw;
      all = false;
      body = std::string("{\"error\": \"") + to_string(e.code()) + "\"}";
    }
    std::printf("%s%s\n", body.c_str(), i + 1 < count ? "," : "");
  }
  std::printf("]\n");
  return all ? kExitOk : kExitVerify;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Long-range exclusion process simulator and PDE suite"};
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);
  app.fallthrough();
  Common c;
  app.add_option("--config", c.config, "key = value configuration file");
  app.add_option("--seed", c.seed, "Random seed");

  auto* sim = app.add_subcommand("simulate", "Run one trajectory and write pairings as CSV");
  int sim_n = 0;
  std::string sim_out, sim_grid;
  add_model_options(sim, c);
  sim->add_option("--n", sim_n, "Scaling parameter (default: first of n_list)");
  sim->add_option("--times", c.times, "Sample times")->delimiter(',');
  sim->add_option("--functions", c.functions, "Test functions");
  sim->add_option("--box-factor", c.box_factor, "Box half-width in units of n");
  sim->add_option("--out", sim_out, "CSV output (default stdout)");
  sim->add_option("--grid", sim_grid, "Binary grid of the final state");

  auto* sol = app.add_subcommand("solve", "Solve the limit equation and write the density as CSV");
  int sol_n = 256;
  double sol_T = 0.0, sol_hw = 0.0;
  std::string sol_out, sol_manifest;
  add_model_options(sol, c);
  sol->add_option("--n-grid", sol_n, "Grid points per unit length");
  sol->add_option("--T", sol_T, "Final time (default: last sample time)");
  sol->add_option("--times", c.times, "Sample times")->delimiter(',');
  sol->add_option("--half-width", sol_hw, "Window half-width (default: box factor)");
  sol->add_option("--out", sol_out, "CSV output (default stdout)");
  sol->add_option("--manifest", sol_manifest, "JSON manifest output");

  auto* ver = app.add_subcommand("verify", "Run the exact and statistical verification suite");
  bool quick = false;
  add_model_options(ver, c);
  ver->add_flag("--quick", quick, "Smaller trial counts");

  auto* con = app.add_subcommand("converge", "Hydrodynamic convergence study");
  add_model_options(con, c);
  con->add_option("--n-list", c.n_list, "Scaling parameters, increasing")->delimiter(',');
  con->add_option("--replicas", c.replicas, "Replicas per n");
  con->add_option("--times", c.times, "Sample times")->delimiter(',');
  con->add_option("--functions", c.functions, "Test functions");
  con->add_option("--output-dir", c.output_dir, "Directory for hydro.csv and hydro_manifest.json");

  auto* opr = app.add_subcommand("operator", "Discrete vs continuous operator convergence table");
  double kappa = 1.0;
  std::string function = "gauss:0.5";
  std::vector<int> op_n;
  add_model_options(opr, c);
  opr->add_option("--kappa", kappa, "Weight of the cross part");
  opr->add_option("--function", function, "Test function");
  opr->add_option("--n-list", op_n, "Scaling parameters")->delimiter(',');

  auto* pth = app.add_subcommand("paths", "Emit moving-particle paths for random admissible inputs as JSON");
  int k_star = 2, count = 3;
  std::string branch = "plus";
  add_model_options(pth, c);
  pth->add_option("--k-star", k_star, "Cluster size k*");
  pth->add_option("--branch", branch, "plus or minus");
  pth->add_option("--count", count, "Number of instances");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }
  try {
    if (*sim) return cmd_simulate(c, sim_n, sim_out, sim_grid);
    if (*sol) return cmd_solve(c, sol_n, sol_T, sol_hw, sol_out, sol_manifest);
    if (*ver) return cmd_verify(c, quick);
    if (*con) return cmd_converge(c);
    if (*opr) return cmd_operator(c, kappa, function, op_n);
    if (*pth) return cmd_paths(c, k_star, branch, count);
  } catch (const CLI::ValidationError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  }
  return kExitUsage;
}
