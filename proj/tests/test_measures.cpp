#include <cmath>

#include "doctest.h"
#include "lrex/measures.hpp"

using namespace lrex;

namespace {
Site s1(int a) {
  Site s;
  s[0] = a;
  return s;
}
}  // namespace

TEST_CASE("constant product sample mean within 3 sigma") {
  const double beta = 1.0 - 1e-3;
  LatticeBox box(1, 500000);
  auto eta = sample_product(Profile::constant(beta, 1), 1000, box, 1, 123u);
  const double N = static_cast<double>(box.size());
  const double mean = eta.total() / N;
  CHECK(std::abs(mean - beta) < 3.0 * std::sqrt(beta * (1 - beta) / N));
}

TEST_CASE("binomial marginals for N_e = 4") {
  Rng rng(5);
  const int M = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < M; ++i) {
    const int k = sample_binomial(4, 0.3, rng);
    s += k;
    s2 += k * k;
  }
  const double mean = s / M, var = s2 / M - mean * mean;
  CHECK(std::abs(mean - 1.2) < 5 * std::sqrt(0.84 / M));
  CHECK(std::abs(var - 0.84) < 0.02);
}

TEST_CASE("profile validation") {
  CHECK_THROWS_AS(Profile::constant(0.0, 1), Error);
  CHECK_THROWS_AS(Profile::constant(1.0, 1), Error);
  RefShape bad;
  bad.left = 0.0;
  CHECK_THROWS_AS(Profile::ref(bad, 1), Error);
  CHECK_THROWS_AS(parse_profile_text("kind=ref\nplateau_left=1.2\n", 1), Error);
}

TEST_CASE("sampling is deterministic given the seed") {
  LatticeBox box(2, 16);
  auto p = Profile::ref(RefShape{}, 2);
  CHECK(sample_product(p, 8, box, 3, 99u) == sample_product(p, 8, box, 3, 99u));
  CHECK_FALSE(sample_product(p, 8, box, 3, 99u) == sample_product(p, 8, box, 3, 100u));
}

TEST_CASE("Ref profile constants hold on a fine grid") {
  for (int d = 1; d <= 2; ++d) {
    auto p = parse_profile_text("kind=ref\nplateau_left=0.2\nplateau_right=0.8\nslab_width=0.4\n", d);
    const auto c = p.constants();
    const int M = d == 1 ? 4000 : 300;
    const double h = 6.0 / M;
    double max_slope = 0.0;
    for (int i = 0; i <= M; ++i)
      for (int j = 0; j <= (d == 2 ? M : 0); ++j) {
        Point u{};
        u[0] = -3 + i * h;
        if (d == 2) u[1] = -3 + j * h;
        const double v = p(u);
        CHECK(v >= c.a_h - 1e-15);
        CHECK(v <= c.b_h + 1e-15);
        if (norm(u, d) >= c.R_h) CHECK(v == doctest::Approx(c.A_h).epsilon(1e-14));
        for (int a = 0; a < d; ++a) {
          Point w = u;
          w[a] += h;
          max_slope = std::max(max_slope, std::abs(p(w) - v) / h);
        }
      }
    CHECK(max_slope <= c.L_h);
    CHECK(c.a_h > 0.0);
    CHECK(c.b_h < 1.0);
  }
}

TEST_CASE("relative entropy") {
  LatticeBox box(1, 8);
  auto a = Profile::constant(0.4, 1);
  CHECK(relative_entropy_product(a, a, 4, box, 2) == 0.0);
  LatticeBox one(1, 2);
  // 4 sites, each Bernoulli KL(0.5 || 0.25)
  const double kl = 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0);
  CHECK(std::abs(kl - 0.14384) < 1e-5);
  CHECK(relative_entropy_product(Profile::constant(0.5, 1), Profile::constant(0.25, 1), 1, one, 1) ==
        doctest::Approx(4 * kl).epsilon(1e-14));
  // Perturbation makes it positive.
  CHECK(relative_entropy_product(Profile::constant(0.4001, 1), a, 4, box, 2) > 0.0);
  // Ref vs constant: H / (2L)^d bounded uniformly.
  auto ref = Profile::ref(RefShape{}, 1);
  auto theta = Profile::constant(0.5, 1);
  double prev_ratio = 0.0;
  for (int L : {8, 16, 32}) {
    const int n = L / 4;
    LatticeBox b(1, L);
    const double H = relative_entropy_product(ref, theta, n, b, 1);
    const double ratio = H / b.size();
    CHECK(H >= 0.0);
    CHECK(ratio < 0.1);
    if (prev_ratio > 0) CHECK(std::abs(ratio - prev_ratio) < 0.5 * prev_ratio);
    prev_ratio = ratio;
  }
}

TEST_CASE("empirical pairing") {
  LatticeBox box(1, 8);
  Configuration zero(box, 2);
  auto g = tf_gauss(0.5, 1);
  CHECK(empirical_pairing(zero, g, 4) == 0.0);
  Configuration full(box, 2);
  for (std::size_t i = 0; i < box.size(); ++i) full.set_index(i, 2);
  CHECK(empirical_pairing(full, tf_constant(1.0, 1), 4) == doctest::Approx(2.0 * 16 / 4));
  Rng rng(3);
  LatticeBox b2(2, 6);
  auto g2 = tf_bump(1.3, 2);
  for (int t = 0; t < 100; ++t) {
    Configuration eta(b2, 3);
    for (std::size_t i = 0; i < b2.size(); ++i) eta.set_index(i, static_cast<int>(rng.below(4)));
    double naive = 0.0;
    for (int x = -6; x < 6; ++x)
      for (int y = -6; y < 6; ++y) {
        Site s;
        s[0] = x;
        s[1] = y;
        Point u{};
        u[0] = x / 3.0;
        u[1] = y / 3.0;
        naive += g2(u) * eta.at(s);
      }
    CHECK(empirical_pairing(eta, g2, 3) == doctest::Approx(naive / 9.0).epsilon(1e-13));
  }
  // Linearity in eta and G.
  Configuration e1(box, 3), e2(box, 3), e3(box, 3);
  for (std::size_t i = 0; i < box.size(); ++i) {
    const int a = static_cast<int>(rng.below(2)), b = static_cast<int>(rng.below(2));
    e1.set_index(i, a);
    e2.set_index(i, b);
    e3.set_index(i, a + b);
  }
  CHECK(empirical_pairing(e3, g, 4) == doctest::Approx(empirical_pairing(e1, g, 4) + empirical_pairing(e2, g, 4)));
  auto g3 = tf_gauss(0.5, 1, 2.5);
  CHECK(empirical_pairing(e1, g3, 4) == doctest::Approx(2.5 * empirical_pairing(e1, g, 4)));
}

TEST_CASE("block averages") {
  LatticeBox box(2, 6);
  Configuration c(box, 3);
  for (std::size_t i = 0; i < box.size(); ++i) c.set_index(i, 2);
  Site z;
  CHECK(block_average(c, z, 3) == 2.0);
  Rng rng(8);
  Configuration r(box, 3);
  for (std::size_t i = 0; i < box.size(); ++i) r.set_index(i, static_cast<int>(rng.below(4)));
  Site one;
  one[0] = 1;
  one[1] = 1;
  CHECK(block_average(r, z, 1) == r.at(one));
  for (int t = 0; t < 50; ++t) {
    Site zz;
    zz[0] = static_cast<int>(rng.below(6)) - 6;
    zz[1] = static_cast<int>(rng.below(6)) - 6;
    const double ell = 1.0 + rng.uniform() * 4.0;
    const int l = static_cast<int>(ell);
    long naive = 0;
    for (int a = 1; a <= l; ++a)
      for (int b = 1; b <= l; ++b) {
        Site w = zz;
        w[0] += a;
        w[1] += b;
        naive += r.at(w);
      }
    const double v = block_average(r, zz, ell);
    CHECK(v == static_cast<double>(naive) / (l * l));
    CHECK(v >= 0.0);
    CHECK(v <= 3.0);
  }
  Site edge;
  edge[0] = 4;
  CHECK_THROWS_AS(block_average(r, edge, 3), Error);
}

TEST_CASE("approximate identity") {
  Point u{};
  u[0] = 0.2;
  u[1] = -0.1;
  const double eps = 0.1;
  CHECK(iota_indicator(u, eps, u, 2) == 0.0);
  Point v = u;
  v[0] += eps;
  v[1] += eps;
  CHECK(iota_indicator(u, eps, v, 2) == doctest::Approx(100.0));
  // Riemann sum over a cell-centered grid.
  const int M = 2000;
  const double h = 0.4 / M;
  double s = 0.0;
  for (int i = 0; i < M; ++i) {
    Point w{};
    w[0] = (i + 0.5) * h;
    s += iota_indicator(Point{0.2}, eps, w, 1) * h;
  }
  CHECK(std::abs(s - 1.0) < 1e-6);
}
