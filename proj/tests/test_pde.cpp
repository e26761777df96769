#include <cmath>
#include <sstream>

#include "doctest.h"
#include "lrex/measures.hpp"
#include "lrex/pde.hpp"

using namespace lrex;

namespace {

SeriesF sep_F() { return SeriesF::from_spec(make_preset("sep", 1.5, 1, 1)); }

std::function<double(const Point&)> ref_profile(int d = 1) {
  const auto h = Profile::ref(RefShape{}, d);
  return [h](const Point& u) { return h(u); };
}

}  // namespace

TEST_CASE("regime table") {
  auto r = regime(AlphaSeq::constant(1.0), 1.5);
  CHECK(r.kappa == 1.0);
  CHECK(r.barrier == BarrierCondition::None);
  r = regime(AlphaSeq::constant(0.5), 1.5);
  CHECK(r.kappa == 0.5);
  CHECK(r.barrier == BarrierCondition::Transmission);
  r = regime(AlphaSeq::power_law(1.0, 2.0), 1.5);
  CHECK(r.kappa == 0.0);
  CHECK(r.barrier == BarrierCondition::Neumann);
  r = regime(AlphaSeq::power_law(1.0, 0.25), 1.5);
  CHECK(r.barrier == BarrierCondition::LimitedTransmission);
  CHECK(r.slow_weight(16) == doctest::Approx(0.5));
  r = regime(AlphaSeq::power_law(2.0, 0.5), 1.5);
  CHECK(r.barrier == BarrierCondition::LimitedTransmission);
  CHECK(alpha_r_limit(AlphaSeq::power_law(2.0, 0.5), 1.5) == doctest::Approx(2.0));
  r = regime(AlphaSeq::power_law(1.0, 0.5), 1.0);
  CHECK(r.barrier == BarrierCondition::Neumann);
  r = regime(AlphaSeq::constant(0.0), 0.5);
  CHECK(r.barrier == BarrierCondition::Neumann);
  CHECK_THROWS_AS(regime(AlphaSeq::power_law(1.0, -0.5), 1.5), Error);
}

TEST_CASE("constant profile is a fixed point") {
  for (const char* preset : {"sep", "porous:2", "power:0.5"}) {
    const auto F = SeriesF::from_spec(make_preset(preset, 1.5, 1, 2));
    const auto reg = regime(AlphaSeq::constant(0.3), 1.5);
    auto tr = solve([](const Point&) { return 1.3; }, F, reg, 1.5, 0.5, 32, {1, 2.0});
    for (double v : tr.fields.back()) CHECK(std::abs(v - 1.3) < 1e-12);
  }
}

TEST_CASE("mass conservation and bounds") {
  for (double kappa : {1.0, 0.5}) {
    for (const char* preset : {"sep", "porous:2"}) {
      const auto F = SeriesF::from_spec(make_preset(preset, 1.5, 1, 1));
      SolveOptions o;
      o.sample_times = {0.0, 0.1, 0.25, 0.5};
      auto tr = solve(ref_profile(), F, regime(AlphaSeq::constant(kappa), 1.5), 1.5, 0.5, 64, {1, 3.0}, o);
      CHECK(tr.max_mass_drift() < 1e-9);
      for (const auto& f : tr.fields)
        for (double v : f) CHECK((v >= -1e-8 && v <= 1 + 1e-8));
      CHECK(tr.times.size() == 4);
    }
  }
  // Neumann regime keeps the mass of each half separately.
  SolveOptions o;
  o.sample_times = {0.0, 0.3};
  auto tr = solve(ref_profile(), sep_F(), regime(AlphaSeq::power_law(1, 2), 1.5), 1.5, 0.3, 32, {1, 3.0}, o);
  auto right_mass = [&](std::size_t k) {
    double s = 0.0;
    for (std::size_t i = 0; i < tr.box.size(); ++i)
      if (tr.box.site(i)[0] >= 0) s += tr.fields[k][i];
    return s;
  };
  CHECK(right_mass(1) == doctest::Approx(right_mass(0)).epsilon(1e-10));
  CHECK(tr.fields[1] != tr.fields[0]);
}

TEST_CASE("two-dimensional solve conserves mass with the FFT operator") {
  const auto F = SeriesF::from_spec(make_preset("porous:2", 1.2, 2, 1));
  SolveOptions o;
  o.sample_times = {0.0, 0.05};
  auto tr = solve(ref_profile(2), F, regime(AlphaSeq::constant(0.4), 1.2), 1.2, 0.05, 12, {2, 2.0}, o);
  CHECK(tr.box.size() > 1024);
  CHECK(tr.max_mass_drift() < 1e-9);
}

TEST_CASE("comparison principle") {
  const auto F = SeriesF::from_spec(make_preset("porous:2", 1.5, 1, 1));
  auto g1 = [](const Point& u) { return 0.2 + 0.5 * std::exp(-u[0] * u[0]); };
  auto g2 = [](const Point& u) { return 0.25 + 0.6 * std::exp(-u[0] * u[0] / 1.5); };
  SolveOptions o;
  o.sample_times = {0.1, 0.3};
  const auto reg = regime(AlphaSeq::constant(0.5), 1.5);
  auto a = solve(g1, F, reg, 1.5, 0.3, 32, {1, 3.0}, o);
  auto b = solve(g2, F, reg, 1.5, 0.3, 32, {1, 3.0}, o);
  for (std::size_t k = 0; k < 2; ++k)
    for (std::size_t i = 0; i < a.box.size(); ++i) CHECK(a.fields[k][i] <= b.fields[k][i] + 1e-6);
}

TEST_CASE("sample time validation and bound errors") {
  const auto F = sep_F();
  SolveOptions o;
  o.sample_times = {0.3, 0.2};
  CHECK_THROWS_AS(solve(ref_profile(), F, regime(AlphaSeq::constant(1), 1.5), 1.5, 0.5, 16, {1, 3.0}, o), Error);
  CHECK_THROWS_AS(solve([](const Point&) { return 1.5; }, F, regime(AlphaSeq::constant(1), 1.5), 1.5, 0.5, 16,
                        {1, 3.0}),
                  Error);
}

TEST_CASE("SEP self-convergence under grid refinement") {
  const auto F = sep_F();
  const auto reg = regime(AlphaSeq::constant(1.0), 1.5);
  std::vector<DensityTrajectory> tr;
  for (int n : {32, 64, 128, 256}) tr.push_back(solve(ref_profile(), F, reg, 1.5, 0.5, n, {1, 3.0}));
  std::vector<double> diffs;
  for (std::size_t i = 0; i + 1 < tr.size(); ++i) diffs.push_back(l1_difference(tr[i], 0, tr[i + 1], 0));
  for (std::size_t i = 0; i < diffs.size(); ++i) MESSAGE("L1(n, 2n) at n = " << tr[i].n << ": " << diffs[i]);
  for (std::size_t i = 1; i < diffs.size(); ++i) CHECK(diffs[i] < diffs[i - 1]);
}

TEST_CASE("weak residual") {
  const auto F = sep_F();
  const auto reg = regime(AlphaSeq::constant(1.0), 1.5);
  SolveOptions o;
  for (int i = 0; i <= 20; ++i) o.sample_times.push_back(i * 0.025);
  SpaceTimeTest G{tf_gauss(0.5, 1)};
  SUBCASE("constant solution") {
    auto c = [](const Point&) { return 0.4; };
    auto tr = solve(c, F, reg, 1.5, 0.5, 32, {1, 3.0}, o);
    CHECK(std::abs(weak_residual(tr, G, c, reg, 0.5)) < 1e-6);
  }
  SUBCASE("zero test function") {
    auto tr = solve(ref_profile(), F, reg, 1.5, 0.5, 16, {1, 3.0}, o);
    SpaceTimeTest Z{tf_constant(0.0, 1)};
    CHECK(weak_residual(tr, Z, ref_profile(), reg, 0.5) == 0.0);
  }
  SUBCASE("residual decreases under grid doubling") {
    SpaceTimeTest Gt{tf_gauss(0.5, 1), [](double t) { return 1.0 + t; }, [](double) { return 1.0; }};
    double prev = 1e300;
    for (int n : {32, 64, 128}) {
      auto tr = solve(ref_profile(), F, reg, 1.5, 0.5, n, {1, 3.0}, o);
      const double r = std::abs(weak_residual(tr, Gt, ref_profile(), reg, 0.5));
      MESSAGE("n = " << n << " residual " << r);
      CHECK(r < prev);
      prev = r;
    }
  }
}

TEST_CASE("output formats") {
  const auto F = sep_F();
  SolveOptions o;
  o.sample_times = {0.0, 0.01};
  auto tr = solve(ref_profile(), F, regime(AlphaSeq::power_law(1, 2), 1.5), 1.5, 0.01, 4, {1, 1.0}, o);
  std::ostringstream os;
  write_density_csv(os, tr);
  CHECK(os.str().rfind("t,x1,rho\n0,-1,", 0) == 0);
  const auto m = manifest_json(tr);
  CHECK(m.find("\"barrier\": \"neumann\"") != std::string::npos);
  CHECK(m.find("barrier_derivative_right") != std::string::npos);
}
