#include "lrex/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <boost/math/distributions/normal.hpp>

#include "json.hpp"
#include "lrex/error.hpp"
#include "lrex/fractional.hpp"
#include "lrex/identity.hpp"
#include "lrex/simulator.hpp"

namespace lrex {

namespace {

std::string trim(std::string s) {
  s.erase(0, s.find_first_not_of(" \t\r\n"));
  s.erase(s.find_last_not_of(" \t\r\n") + 1);
  return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw Error(ErrorCode::ConfigError, "bad number for " + key + ": " + v);
  }
}

long to_long(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw Error(ErrorCode::ConfigError, "bad integer for " + key + ": " + v);
  }
}

template <class F>
void parallel_for(int count, int workers, F&& body) {
  std::atomic<int> next{0};
  std::mutex err_mu;
  std::exception_ptr err;
  auto loop = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!err) err = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < std::min(workers, count); ++w) pool.emplace_back(loop);
  loop();
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace

AlphaSeq parse_alpha(const std::string& text) {
  const std::string t = trim(text);
  if (t.rfind("power:", 0) == 0) {
    const auto parts = split(t.substr(6), ',');
    if (parts.size() != 2) throw Error(ErrorCode::ConfigError, "alpha power law needs a,beta: " + t);
    return AlphaSeq::power_law(to_double("alpha", parts[0]), to_double("alpha", parts[1]));
  }
  return AlphaSeq::constant(to_double("alpha", t));
}

void set_config_value(ExperimentConfig& cfg, const std::string& key_in, const std::string& value_in) {
  const std::string key = trim(key_in), v = trim(value_in);
  if (key == "preset") {
    cfg.preset = v;
  } else if (key == "gamma") {
    cfg.gamma = to_double(key, v);
  } else if (key == "d") {
    cfg.d = static_cast<int>(to_long(key, v));
  } else if (key == "n_e") {
    cfg.n_e = static_cast<int>(to_long(key, v));
  } else if (key == "n_list") {
    cfg.n_list.clear();
    for (const auto& s : split(v, ',')) cfg.n_list.push_back(static_cast<int>(to_long(key, s)));
  } else if (key == "replicas") {
    cfg.replicas = static_cast<int>(to_long(key, v));
  } else if (key == "test_functions") {
    cfg.test_functions = split(v, ';');
  } else if (key == "times") {
    cfg.times.clear();
    for (const auto& s : split(v, ',')) cfg.times.push_back(to_double(key, s));
  } else if (key == "seed") {
    cfg.seed = static_cast<std::uint64_t>(to_long(key, v));
  } else if (key == "output_dir") {
    cfg.output_dir = v;
  } else if (key == "alpha") {
    cfg.alpha = parse_alpha(v);
  } else if (key == "profile") {
    cfg.profile = v;
  } else if (key == "box_factor") {
    cfg.box_factor = static_cast<int>(to_long(key, v));
  } else if (key == "threads") {
    cfg.threads = static_cast<int>(to_long(key, v));
  } else {
    throw Error(ErrorCode::ConfigError, "unknown configuration key: " + key);
  }
}

ExperimentConfig parse_config_text(const std::string& text, ExperimentConfig cfg) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::ConfigError, "line " + std::to_string(lineno) + ": expected key = value");
    set_config_value(cfg, line.substr(0, eq), line.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), std::move(base));
}

void ExperimentConfig::validate() const {
  if (n_list.empty()) throw Error(ErrorCode::ConfigError, "n_list is empty");
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    if (n_list[i] < 1) throw Error(ErrorCode::ConfigError, "n_list entries must be >= 1");
    if (i > 0 && n_list[i] <= n_list[i - 1]) throw Error(ErrorCode::ConfigError, "n_list must increase strictly");
  }
  if (replicas < 1) throw Error(ErrorCode::ConfigError, "replicas must be >= 1");
  if (d < 1 || d > kMaxDim) throw Error(ErrorCode::ConfigError, "d out of range");
  if (n_e < 1) throw Error(ErrorCode::ConfigError, "n_e must be >= 1");
  if (!(gamma > 0.0 && gamma < 2.0)) throw Error(ErrorCode::ConfigError, "gamma must lie in (0,2)");
  if (box_factor < 1) throw Error(ErrorCode::ConfigError, "box_factor must be >= 1");
  if (times.empty()) throw Error(ErrorCode::ConfigError, "times is empty");
  for (std::size_t i = 0; i < times.size(); ++i)
    if (times[i] < 0.0 || (i > 0 && times[i] <= times[i - 1]))
      throw Error(ErrorCode::ConfigError, "times must be non-negative and increasing");
  if (test_functions.empty()) throw Error(ErrorCode::ConfigError, "test_functions is empty");
}

Profile ExperimentConfig::initial_profile() const {
  Profile h = Profile::ref(RefShape{}, d);
  if (profile == "ref") {
  } else if (profile.rfind("constant:", 0) == 0) {
    h = Profile::constant(to_double("profile", profile.substr(9)), d);
  } else if (profile.rfind("file:", 0) == 0) {
    h = load_profile(profile.substr(5), d);
  } else {
    throw Error(ErrorCode::ConfigError, "unknown profile: " + profile);
  }
  h.validate();
  return h;
}

ModelSpec ExperimentConfig::model() const {
  ModelSpec spec = make_preset(preset, gamma, d, n_e);
  spec.alpha = alpha;
  spec.validate();
  return spec;
}

int worker_count(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

std::string version_string() {
#ifdef LREX_VERSION
  return LREX_VERSION;
#else
  return "unknown";
#endif
}

HydroReport hydrodynamic_convergence(const ExperimentConfig& cfg) {
  cfg.validate();
  const ModelSpec spec = cfg.model();
  const Profile h = cfg.initial_profile();
  HydroReport rep;
  rep.preset = cfg.preset;
  rep.reg = regime(cfg.alpha, cfg.gamma);
  std::vector<TestFunction> G;
  for (const auto& s : cfg.test_functions) G.push_back(parse_test_function(s, cfg.d));

  rep.n_ref = 2 * cfg.n_list.back();
  const double Ne = cfg.n_e;
  auto g = [&](const Point& u) { return Ne * h(u); };
  SolveOptions so;
  so.op = OperatorSpec::unbounded(cfg.gamma, cfg.d);
  so.sample_times = cfg.times;
  const DensityTrajectory ref = solve(g, SeriesF::from_spec(spec), rep.reg, cfg.gamma, cfg.times.back(), rep.n_ref,
                                     Window{cfg.d, static_cast<double>(cfg.box_factor)}, so);
  rep.pde_mass_drift = ref.max_mass_drift();
  const std::size_t nt = cfg.times.size(), ng = G.size();
  std::vector<std::vector<double>> target(nt, std::vector<double>(ng));
  for (std::size_t k = 0; k < nt; ++k)
    for (std::size_t q = 0; q < ng; ++q) target[k][q] = ref.pairing(k, G[q]);

  const int workers = worker_count(cfg.threads);
  // err[n index][replica][time][function]
  std::vector<std::vector<std::vector<std::vector<double>>>> err(cfg.n_list.size());
  for (std::size_t ni = 0; ni < cfg.n_list.size(); ++ni) {
    const int n = cfg.n_list[ni];
    const LatticeBox box(cfg.d, cfg.box_factor * n);
    const JumpKernel kernel(cfg.gamma, cfg.d, box.side(), JumpKernel::Mode::InfiniteConstant);
    const std::uint64_t seed_n = mix64(cfg.seed ^ mix64(static_cast<std::uint64_t>(n)));
    err[ni].assign(cfg.replicas, {});
    parallel_for(cfg.replicas, workers, [&](int r) {
      Rng init(seed_n ^ 0x5bd1e995ULL, static_cast<std::uint64_t>(r));
      const Configuration eta0 = sample_product(h, n, box, cfg.n_e, init);
      RunOptions opts;
      opts.functionals = G;
      opts.stream = static_cast<std::uint64_t>(r);
      const TrajectoryRecord rec = run(spec, kernel, box, n, eta0, cfg.times.back(), cfg.times, seed_n, opts);
      std::vector<std::vector<double>> e(nt, std::vector<double>(ng));
      for (std::size_t k = 0; k < nt; ++k)
        for (std::size_t q = 0; q < ng; ++q) e[k][q] = rec.pairings[k][q] - target[k][q];
      err[ni][r] = std::move(e);
    });
  }

  rep.decreasing = true;
  for (std::size_t k = 0; k < nt; ++k) {
    for (std::size_t q = 0; q < ng; ++q) {
      double prev = std::numeric_limits<double>::infinity();
      for (std::size_t ni = 0; ni < cfg.n_list.size(); ++ni) {
        HydroRow row;
        row.n = cfg.n_list[ni];
        row.t = cfg.times[k];
        row.function = G[q].name();
        row.replicas = static_cast<std::size_t>(cfg.replicas);
        double s = 0.0, s2 = 0.0, ss = 0.0;
        for (int r = 0; r < cfg.replicas; ++r) {
          const double e = err[ni][r][k][q];
          s += std::abs(e);
          s2 += e * e;
          ss += e;
        }
        const double M = cfg.replicas;
        row.mean_error = s / M;
        row.mean_signed = ss / M;
        const double var = M > 1 ? std::max(0.0, (s2 - s * s / M) / (M - 1)) : 0.0;
        row.stderr_ = std::sqrt(var / M);
        if (!(row.mean_error < prev)) rep.decreasing = false;
        prev = row.mean_error;
        if (ni + 1 == cfg.n_list.size()) rep.final_max_error = std::max(rep.final_max_error, row.mean_error);
        rep.rows.push_back(row);
      }
    }
  }
  return rep;
}

void write_hydro_csv(std::ostream& os, const HydroReport& rep) {
  os << "n,t,function,mean_error,stderr,mean_signed,replicas,anchor\n";
  for (const auto& r : rep.rows) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%d,%.17g,%s,%.17g,%.17g,%.17g,%zu,%s\n", r.n, r.t, r.function.c_str(),
                  r.mean_error, r.stderr_, r.mean_signed, r.replicas, r.anchor.c_str());
    os << buf;
  }
}

std::string hydro_manifest_json(const ExperimentConfig& cfg, const HydroReport& rep) {
  nlohmann::json j;
  j["version"] = version_string();
  j["seed"] = cfg.seed;
  j["preset"] = cfg.preset;
  j["gamma"] = cfg.gamma;
  j["d"] = cfg.d;
  j["n_e"] = cfg.n_e;
  j["n_list"] = cfg.n_list;
  j["replicas"] = cfg.replicas;
  j["times"] = cfg.times;
  j["test_functions"] = cfg.test_functions;
  j["alpha"] = cfg.alpha.describe();
  j["profile"] = cfg.profile;
  j["box_factor"] = cfg.box_factor;
  j["regime"] = {{"kappa", rep.reg.kappa}, {"barrier", to_string(rep.reg.barrier)}, {"note", rep.reg.note}};
  j["n_ref"] = rep.n_ref;
  j["pde_mass_drift"] = rep.pde_mass_drift;
  j["decreasing"] = rep.decreasing;
  j["final_max_error"] = rep.final_max_error;
  j["criterion"] = rep.criterion;
  j["confidence_note"] =
      "stderr columns are per-cell; with many (t,G) cells a 3-sigma band needs a Bonferroni correction";
  return j.dump(2);
}

StationarityReport stationarity_experiment(const ExperimentConfig& cfg, double beta, int mc_replicas, int n_mc) {
  if (!(beta > 0.0 && beta < 1.0)) throw Error(ErrorCode::InvalidProfile, "beta must lie in (0,1)");
  Profile::constant(beta, 1).validate();
  ExperimentConfig c1 = cfg;
  c1.d = 1;
  const ModelSpec spec = c1.model();
  StationarityReport rep;
  rep.beta = beta;
  {
    const LatticeBox box(1, 2);
    const JumpKernel kernel(c1.gamma, 1, 3, JumpKernel::Mode::TruncatedNormalized);
    const int n = 8;
    const GeneratorMatrix Q = generator_matrix(spec, kernel, box, n);
    const StateEnumerator en(box, c1.n_e);
    rep.states = en.count();
    rep.residual = stationarity_residual(Q, product_measure_weights(en, beta));
  }
  if (mc_replicas <= 0) return rep;

  const LatticeBox box(1, 16);
  const JumpKernel kernel(c1.gamma, 1, 32, JumpKernel::Mode::TruncatedNormalized);
  std::vector<double> ts;
  for (int i = 0; i <= 20; ++i) ts.push_back(i / 20.0);
  std::vector<std::vector<double>> avg(mc_replicas, std::vector<double>(box.size(), 0.0));
  const Profile h = Profile::constant(beta, 1);
  parallel_for(mc_replicas, worker_count(c1.threads), [&](int r) {
    RunOptions opts;
    opts.store_grids = true;
    opts.stream = static_cast<std::uint64_t>(r);
    Rng init(mix64(c1.seed ^ 0x9e3779b9ULL), static_cast<std::uint64_t>(r));
    const TrajectoryRecord rec =
        run(spec, kernel, box, n_mc, sample_product(h, n_mc, box, c1.n_e, init), 1.0, ts, c1.seed, opts);
    for (const auto& g : rec.grids)
      for (std::size_t i = 0; i < g.size(); ++i) avg[r][i] += g[i] / static_cast<double>(rec.grids.size());
  });
  const std::size_t S = box.size();
  const double alpha_fw = 2.0 * boost::math::cdf(boost::math::complement(boost::math::normal(), 3.0));
  rep.bonferroni_z = boost::math::quantile(boost::math::complement(boost::math::normal(), alpha_fw / (2.0 * S)));
  const double target = c1.n_e * beta;
  for (std::size_t i = 0; i < S; ++i) {
    double m = 0.0, v = 0.0;
    for (int r = 0; r < mc_replicas; ++r) m += avg[r][i];
    m /= mc_replicas;
    for (int r = 0; r < mc_replicas; ++r) v += (avg[r][i] - m) * (avg[r][i] - m);
    const double se = mc_replicas > 1 ? std::sqrt(v / (mc_replicas - 1) / mc_replicas) : 0.0;
    rep.site_mean.push_back(m);
    rep.site_stderr.push_back(se);
    if (std::abs(m - target) > 3.0 * se) ++rep.outside_3sigma;
    if (std::abs(m - target) > rep.bonferroni_z * se) ++rep.outside_bonferroni;
  }
  return rep;
}

std::vector<CheckLine> verify_suite(const ExperimentConfig& cfg, bool quick) {
  std::vector<CheckLine> out;
  auto fmt = [](const char* f, auto... a) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a...);
    return std::string(buf);
  };
  {
    long trials = 0, fails = 0;
    for (int d = 1; d <= 3; ++d) {
      const GradientReport g = gradient_decomposition_check(cfg.seed + d, quick ? 1000 : 3400, 5, d, cfg.n_e);
      trials += g.trials;
      fails += g.identity_failures + g.antisymmetry_failures;
    }
    out.push_back({"gradient_identity", "gradient_identity", fails == 0, fmt("%ld tuples, %ld failures", trials, fails)});
  }
  {
    const StationarityReport st = stationarity_experiment(cfg, 0.4, 0);
    out.push_back({"stationarity_exact", "reversible_measure", st.exact_ok(),
                   fmt("%zu states, residual %.3e", st.states, st.residual)});
  }
  {
    ExperimentConfig c1 = cfg;
    c1.d = 1;
    const ModelSpec spec = c1.model();
    const LatticeBox box(1, 2);
    const JumpKernel kernel(c1.gamma, 1, 3, JumpKernel::Mode::TruncatedNormalized);
    const StateEnumerator en(box, c1.n_e);
    Rng rng(cfg.seed, 17);
    double worst = 0.0;
    const int count = quick ? 10 : 50;
    for (int t = 0; t < count; ++t) {
      std::vector<double> f(en.count());
      for (auto& v : f) v = 2.0 * rng.uniform() - 1.0;
      worst = std::max(worst, dirichlet_form(f, 0.4, spec, kernel, box, 8).residual);
    }
    out.push_back({"dirichlet_identity", "dirichlet_identity", worst < 1e-10,
                   fmt("%d functions, max residual %.3e", count, worst)});
  }
  {
    const PathCheckReport pr = path_construction_check(cfg.seed, quick ? 200 : 1000, 2, {1, 2, 3});
    out.push_back({"moving_particle_paths", "moving_particle_path", pr.ok(),
                   fmt("%ld instances, %ld verified, %ld blocked, max length %d", pr.instances, pr.verified, pr.blocked,
                       pr.max_length)});
  }
  {
    ExperimentConfig c1 = cfg;
    c1.d = 1;
    const ModelSpec spec = c1.model();
    const int n = quick ? 32 : 64;
    const int M = quick ? 50 : 200;
    const LatticeBox box(1, 2 * n);
    const JumpKernel kernel(c1.gamma, 1, 2 * n, JumpKernel::Mode::TruncatedNormalized);
    const Profile h = c1.initial_profile();
    const std::vector<TestFunction> G{tf_gauss(0.5, 1), tf_bump(1.0, 1)};
    const std::vector<double> ts{0.25, 0.5};
    std::vector<TrajectoryRecord> ens(M);
    parallel_for(M, worker_count(cfg.threads), [&](int r) {
      RunOptions opts;
      opts.functionals = G;
      opts.track_integral = true;
      opts.stream = static_cast<std::uint64_t>(r);
      Rng init(mix64(cfg.seed ^ 0x27d4eb2fULL), static_cast<std::uint64_t>(r));
      ens[r] = run(spec, kernel, box, n, sample_product(h, n, box, c1.n_e, init), ts.back(), ts, cfg.seed, opts);
    });
    bool ok = true;
    std::string detail;
    for (const auto& g : G)
      for (double t : ts) {
        const MartingaleStat m = martingale_residual(ens, g.name(), t);
        ok = ok && std::abs(m.mean) < 3.0 * m.stderr_;
        detail += fmt("%s t=%.2f mean %.2e se %.2e; ", g.name().c_str(), t, m.mean, m.stderr_);
      }
    out.push_back({"martingale_mean_zero", "martingale_mean_zero", ok, detail});
  }
  return out;
}

}  // namespace lrex
