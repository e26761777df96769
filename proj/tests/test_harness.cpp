#include <sys/wait.h>

#include <cstdlib>
#include <sstream>

#include "doctest.h"
#include "lrex/error.hpp"
#include "lrex/harness.hpp"

using namespace lrex;

namespace {

ExperimentConfig tiny() {
  ExperimentConfig cfg;
  cfg.n_list = {8, 16};
  cfg.replicas = 6;
  cfg.times = {0.1, 0.2};
  cfg.threads = 2;
  return cfg;
}

std::string hydro_csv(const ExperimentConfig& cfg) {
  std::ostringstream os;
  write_hydro_csv(os, hydrodynamic_convergence(cfg));
  return os.str();
}

int cli(const std::string& args) {
  const char* exe = std::getenv("LREX_CLI");
  REQUIRE(exe != nullptr);
  const std::string cmd = std::string(exe) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("config text sets every listed field") {
  const ExperimentConfig cfg = parse_config_text(
      "# study\n"
      "preset = porous:2\n"
      "gamma = 1.2\n"
      "d = 2\n"
      "n_e = 3\n"
      "n_list = 16, 32\n"
      "replicas = 7\n"
      "test_functions = gauss:0.5; split:-1,1\n"
      "times = 0.1,0.3\n"
      "seed = 99\n"
      "alpha = power:2,0.5\n"
      "box_factor = 3\n");
  CHECK(cfg.preset == "porous:2");
  CHECK(cfg.gamma == doctest::Approx(1.2));
  CHECK(cfg.d == 2);
  CHECK(cfg.n_e == 3);
  CHECK(cfg.n_list == std::vector<int>{16, 32});
  CHECK(cfg.replicas == 7);
  CHECK(cfg.test_functions == std::vector<std::string>{"gauss:0.5", "split:-1,1"});
  CHECK(cfg.times == std::vector<double>{0.1, 0.3});
  CHECK(cfg.seed == 99);
  CHECK(cfg.box_factor == 3);
  CHECK(cfg.alpha.value(4) == doctest::Approx(1.0));
}

TEST_CASE("config errors") {
  auto code = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Unsupported;
  };
  CHECK(code([] { parse_config_text("colour = red\n"); }) == ErrorCode::ConfigError);
  CHECK(code([] { parse_config_text("n_list = 64, 32\n").validate(); }) == ErrorCode::ConfigError);
  CHECK(code([] { parse_config_text("gamma = 2\n").validate(); }) == ErrorCode::ConfigError);
  CHECK(code([] { parse_config_text("replicas = many\n"); }) == ErrorCode::ConfigError);
  CHECK(code([] { parse_config_text("no equals sign\n"); }) == ErrorCode::ConfigError);
  CHECK(code([] { load_config("/nonexistent/study.cfg"); }) == ErrorCode::IoError);
}

TEST_CASE("hydro csv is reproducible for a fixed seed and independent of thread count") {
  ExperimentConfig cfg = tiny();
  const std::string a = hydro_csv(cfg);
  const std::string b = hydro_csv(cfg);
  CHECK(a == b);
  cfg.threads = 1;
  CHECK(hydro_csv(cfg) == a);
  cfg.seed = 2;
  CHECK(hydro_csv(cfg) != a);
}

TEST_CASE("hydro csv layout") {
  const ExperimentConfig cfg = tiny();
  const HydroReport rep = hydrodynamic_convergence(cfg);
  CHECK(rep.rows.size() == cfg.n_list.size() * cfg.times.size() * cfg.test_functions.size());
  CHECK(rep.n_ref == 32);
  CHECK(rep.pde_mass_drift < 1e-9);
  for (const auto& r : rep.rows) {
    CHECK(r.replicas == 6);
    CHECK(r.mean_error >= std::abs(r.mean_signed) - 1e-15);
    CHECK(r.anchor == "hydrodynamic_limit");
  }
  std::ostringstream os;
  write_hydro_csv(os, rep);
  std::istringstream is(os.str());
  std::string header;
  std::getline(is, header);
  CHECK(header == "n,t,function,mean_error,stderr,mean_signed,replicas,anchor");
  const std::string js = hydro_manifest_json(cfg, rep);
  CHECK(js.find("\"decreasing\"") != std::string::npos);
}

TEST_CASE("hydro error at time zero is sampling noise only") {
  ExperimentConfig cfg = tiny();
  cfg.times = {0.0, 0.1};
  const HydroReport rep = hydrodynamic_convergence(cfg);
  for (const auto& r : rep.rows)
    if (r.t == 0.0) CHECK(r.mean_error < 0.2);
}

TEST_CASE("exact stationarity for the closed four-site box") {
  for (const char* preset : {"sep", "porous:2", "power:1"}) {
    ExperimentConfig cfg;
    cfg.preset = preset;
    for (double beta : {0.2, 0.5, 0.8}) {
      const StationarityReport rep = stationarity_experiment(cfg, beta, 0);
      CHECK(rep.states == 16);
      CHECK(rep.exact_ok());
    }
  }
  ExperimentConfig two;
  two.n_e = 2;
  two.preset = "porous:2";
  const StationarityReport rep = stationarity_experiment(two, 0.4, 0);
  CHECK(rep.states == 81);
  CHECK(rep.exact_ok());
}

TEST_CASE("stationarity rejects degenerate densities") {
  ExperimentConfig cfg;
  CHECK_THROWS_AS(stationarity_experiment(cfg, 0.0, 0), Error);
  CHECK_THROWS_AS(stationarity_experiment(cfg, 1.0, 0), Error);
}

TEST_CASE("Monte Carlo site occupancies stay at the product density") {
  ExperimentConfig cfg;
  cfg.threads = 2;
  const StationarityReport rep = stationarity_experiment(cfg, 0.4, 40, 16);
  CHECK(rep.site_mean.size() == 32);
  CHECK(rep.mc_ok());
  double avg = 0.0;
  for (double m : rep.site_mean) avg += m / rep.site_mean.size();
  CHECK(avg == doctest::Approx(0.4).epsilon(0.05));
}

TEST_CASE("quick verify suite passes for sep and porous:2") {
  for (const char* preset : {"sep", "porous:2"}) {
    ExperimentConfig cfg;
    cfg.preset = preset;
    cfg.threads = 2;
    for (const auto& line : verify_suite(cfg, true)) {
      INFO(preset << " " << line.name << " " << line.detail);
      CHECK(line.pass);
    }
  }
}

TEST_CASE("cli exit codes") {
  CHECK(cli("verify --preset sep --quick") == 0);
  CHECK(cli("frobnicate") == 64);
  CHECK(cli("") == 64);
  CHECK(cli("converge --config /nonexistent/study.cfg") == 1);
  CHECK(cli("converge --n-list 32,16") == 1);
  CHECK(cli("paths --branch sideways") == 64);
  CHECK(cli("--help") == 0);
}
