#include <cmath>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/hypergeometric_1F1.hpp>
#include <boost/math/special_functions/zeta.hpp>

#include "doctest.h"
#include "lrex/fractional.hpp"

using namespace lrex;

namespace {

Point pt(double a, double b = 0.0) {
  Point u{};
  u[0] = a;
  u[1] = b;
  return u;
}

// Normalizing constant of -(-Delta)^{gamma/2} as a singular integral.
double c_frac(int d, double g) {
  return g * std::pow(2.0, g - 1) * std::tgamma((d + g) / 2) / (std::pow(M_PI, d / 2.0) * std::tgamma(1 - g / 2));
}

// c int (G(u+w)-G(u))/|w|^{d+g} for G = exp(-|u|^2/(2 s^2)), closed form via 1F1.
double gauss_closed_form(double c, int d, double g, double s, double r) {
  const double a = g / 2 + d / 2.0;
  const double frac = std::pow(2.0, g / 2) * std::tgamma(a) / std::tgamma(d / 2.0) *
                      boost::math::hypergeometric_1F1(a, d / 2.0, -r * r / (2 * s * s)) * std::pow(s, -g);
  return -c / c_frac(d, g) * frac;
}

}  // namespace

TEST_CASE("tail sums") {
  double direct = 0.0;
  for (long m = 7; m < 2000000; ++m) direct += std::pow(static_cast<double>(m), -2.5);
  direct += std::pow(2000000.0, -1.5) / 1.5 + 0.5 * std::pow(2000000.0, -2.5);
  CHECK(hurwitz_tail(7, 2.5) == doctest::Approx(direct).epsilon(1e-12));
  CHECK(hurwitz_tail(1, 2.0) == doctest::Approx(M_PI * M_PI / 6).epsilon(1e-13));
}

TEST_CASE("half-space masses add up to the lattice sum") {
  for (double g : {0.5, 1.0, 1.5, 1.9}) {
    OperatorSpec op;
    op.gamma = g;
    op.c_gamma = 1.0;
    const auto Q1 = half_space_mass(op, 1, 3);
    CHECK(2 * Q1[0] == doctest::Approx(lattice_zeta(1, 1 + g)).epsilon(1e-12));
    CHECK(Q1[2] == doctest::Approx(boost::math::zeta(1 + g) - 1 - std::pow(2.0, -1 - g)).epsilon(1e-12));
    // Z^2: two half planes plus the row z_2 = 0.
    const auto Q2 = half_space_mass(op, 2, 2);
    CHECK(2 * Q2[0] + 2 * boost::math::zeta(2 + g) == doctest::Approx(lattice_zeta(2, 2 + g)).epsilon(1e-12));
    // Row m = 1 by brute force.
    double row = 0.0;
    for (long w = -200000; w <= 200000; ++w) row += std::pow(static_cast<double>(w * w + 1), -(2 + g) / 2);
    CHECK(Q2[0] - Q2[1] == doctest::Approx(row).epsilon(1e-6));
  }
  OperatorSpec op;
  op.gamma = 1.2;
  op.radius = 5;
  const auto Q = half_space_mass(op, 2, 7);
  double brute = 0.0;
  for (int a = -5; a <= 5; ++a)
    for (int b = 2; b <= 5; ++b)
      if (a * a + b * b <= 25) brute += std::pow(a * a + b * b, -(2 + 1.2) / 2);
  CHECK(Q[1] == doctest::Approx(brute).epsilon(1e-14));
  CHECK(Q[5] == 0.0);
  CHECK(Q[6] == 0.0);
}

TEST_CASE("discrete operator annihilates constants") {
  const auto op = OperatorSpec::unbounded(1.5, 1);
  LatticeBox box(1, 40);
  LatticeField H(box, 16, std::vector<double>(box.size(), 2.5), 2.5);
  for (BondSet b : {BondSet::B, BondSet::F, BondSet::S}) {
    auto o = op;
    o.bonds = b;
    for (double v : discrete_fraclap(H, o).values) CHECK(std::abs(v) < 1e-12);
  }
  LatticeField closed(box, 16, std::vector<double>(box.size(), 2.5));
  for (double v : discrete_fraclap(closed, op).values) CHECK(std::abs(v) < 1e-12);
  auto c2 = LatticeField::from_function(tf_constant(1.0, 2), LatticeBox(2, 6), 4);
  for (double v : discrete_distorted(c2, OperatorSpec::unbounded(1.2, 2, 0.3)).values) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("odd field vanishes at the symmetry centre") {
  LatticeBox box(1, 30);
  std::vector<double> v(box.size());
  for (std::size_t i = 0; i < box.size(); ++i) {
    const double x = box.site(i)[0];
    v[i] = std::abs(x) < 25 ? std::sin(x / 4.0) * std::exp(-x * x / 50.0) : 0.0;
  }
  LatticeField H(box, 8, v);
  const auto out = discrete_fraclap(H, OperatorSpec::unbounded(1.3, 1));
  Site o;
  CHECK(std::abs(out.values[box.index(o)]) < 1e-13);
}

TEST_CASE("linearity, mass balance and sign at a maximum") {
  const auto op = OperatorSpec::unbounded(1.4, 2);
  LatticeBox box(2, 8);
  Rng rng(3);
  std::vector<double> a(box.size()), b(box.size()), ab(box.size());
  for (std::size_t i = 0; i < box.size(); ++i) {
    a[i] = rng.uniform();
    b[i] = rng.uniform();
    ab[i] = 2 * a[i] - 3 * b[i];
  }
  for (BondSet s : {BondSet::B, BondSet::F, BondSet::S}) {
    auto o = op;
    o.bonds = s;
    const auto la = discrete_fraclap(LatticeField(box, 4, a), o).values;
    const auto lb = discrete_fraclap(LatticeField(box, 4, b), o).values;
    const auto lab = discrete_fraclap(LatticeField(box, 4, ab), o).values;
    double mass = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < box.size(); ++i) {
      CHECK(lab[i] == doctest::Approx(2 * la[i] - 3 * lb[i]).epsilon(1e-12).scale(1e-9));
      mass += la[i];
      scale += std::abs(la[i]);
    }
    CHECK(std::abs(mass) < 1e-12 * scale);
  }
  auto g = LatticeField::from_function(tf_gauss(0.25, 2), box, 4);
  const auto lg = discrete_fraclap(g, op).values;
  CHECK(lg[box.index(Site{})] < 0.0);
}

TEST_CASE("FFT path agrees with direct summation") {
  for (int d : {1, 2}) {
    const int L = d == 1 ? 700 : 24;
    LatticeBox box(d, L);
    OperatorSpec op = OperatorSpec::unbounded(1.5, d);
    op.radius = d == 1 ? 300 : 0;
    Stencil st(box, 8, op);
    REQUIRE(st.uses_fft());
    Rng rng(17);
    std::vector<double> H(box.size());
    for (auto& h : H) h = rng.uniform();
    const auto out = st.apply(H, 1.0, 0.4);
    const double ng = std::pow(8.0, 1.5);
    double mass = 0.0;
    for (std::size_t ix = 0; ix < box.size(); ix += 37) {
      const Site x = box.site(ix);
      double ref = 0.0;
      for (std::size_t iy = 0; iy < box.size(); ++iy) {
        const Site y = box.site(iy);
        double n2 = 0.0;
        for (int i = 0; i < d; ++i) n2 += double(y[i] - x[i]) * (y[i] - x[i]);
        if (n2 == 0.0 || (op.radius && n2 > double(op.radius) * op.radius)) continue;
        const double w = classify_bond(x, y, d) == BondClass::Slow ? 0.4 : 1.0;
        ref += w * op.c_gamma * std::pow(n2, -(d + 1.5) / 2) * (H[iy] - H[ix]);
      }
      CHECK(out[ix] == doctest::Approx(ng * ref).epsilon(1e-10).scale(1e-10));
    }
    const auto full = st.apply(H, 1.0, 1.0);
    double scale = 0.0;
    for (double v : full) {
      mass += v;
      scale += std::abs(v);
    }
    CHECK(std::abs(mass) < 1e-11 * scale);
  }
}

TEST_CASE("exterior extension matches a larger closed window for a finite radius") {
  for (int d : {1, 2}) {
    OperatorSpec op = OperatorSpec::unbounded(1.3, d);
    op.radius = 6;
    const int L = 5, L2 = 12;
    LatticeBox small(d, L), big(d, L2);
    auto f = [&](const Site& x) { return std::cos(x[0] * 0.3) + 0.1 * x[d - 1] + 0.5; };
    std::vector<double> hs(small.size()), hb(big.size(), 0.7);
    for (std::size_t i = 0; i < small.size(); ++i) {
      hs[i] = f(small.site(i));
      hb[big.index(small.site(i))] = hs[i];
    }
    Stencil ss(small, 3, op), sb(big, 3, op);
    const auto a = ss.apply(hs, 1.0, 0.25, 0.7);
    const auto b = sb.apply(hb, 1.0, 0.25);
    for (std::size_t i = 0; i < small.size(); ++i)
      CHECK(a[i] == doctest::Approx(b[big.index(small.site(i))]).epsilon(1e-12));
  }
}

TEST_CASE("exterior extension, unbounded kernel, against a distant closed window") {
  const auto op = OperatorSpec::unbounded(1.5, 1);
  LatticeBox small(1, 20), big(1, 20000);
  std::vector<double> hs(small.size()), hb(big.size(), 0.0);
  for (std::size_t i = 0; i < small.size(); ++i) {
    const double x = small.site(i)[0];
    hs[i] = std::exp(-x * x / 20.0);
    hb[big.index(small.site(i))] = hs[i];
  }
  Stencil ss(small, 1, op), sb(big, 1, op);
  for (double ws : {1.0, 0.0, 0.5}) {
    const auto a = ss.apply(hs, 1.0, ws, 0.0);
    const auto b = sb.apply(hb, 1.0, ws);
    for (std::size_t i = 0; i < small.size(); ++i)
      CHECK(std::abs(a[i] - b[big.index(small.site(i))]) < 1e-6);
  }
}

TEST_CASE("window too small") {
  LatticeBox box(1, 10);
  auto H = LatticeField::from_function(tf_gauss(2.0, 1), box, 4);
  CHECK_THROWS_AS(discrete_fraclap(H, OperatorSpec::unbounded(1.5, 1)), Error);
}

TEST_CASE("continuous operator against closed forms for Gaussians") {
  for (int d : {1, 2})
    for (double g : {0.6, 1.0, 1.5, 1.8})
      for (double r : {0.0, 0.3, 1.1}) {
        const auto op = OperatorSpec::unbounded(g, d);
        const double s = 0.6;
        const auto res = continuous_fraclap(tf_gauss(s, d), pt(r * 0.6, r * 0.8 * (d - 1)), op, Region::FullSpace);
        const double rr = d == 1 ? 0.6 * r : r;
        CHECK(res.value == doctest::Approx(gauss_closed_form(op.c_gamma, d, g, s, rr)).epsilon(1e-6));
        CHECK(res.error < 1e-4 * std::max(1.0, std::abs(res.value)));
      }
}

TEST_CASE("continuous operator basic properties") {
  const auto op = OperatorSpec::unbounded(1.5, 1);
  CHECK(std::abs(continuous_fraclap(tf_constant(3.0, 1), pt(0.4), op, Region::FullSpace).value) < 1e-12);
  CHECK(std::abs(continuous_fraclap(tf_constant(3.0, 1), pt(0.4), op, Region::Star).value) < 1e-12);
  CHECK(continuous_fraclap(tf_gauss(0.5, 1), pt(0.0), op, Region::FullSpace).value <= 0.0);
  CHECK(continuous_fraclap(tf_gauss(0.5, 1), pt(0.0), op, Region::Star).value <= 0.0);
  const auto op2 = OperatorSpec::unbounded(1.5, 2);
  CHECK(continuous_fraclap(tf_gauss(0.5, 2), pt(0.0, 0.0), op2, Region::Star).value <= 0.0);
  CHECK(std::abs(continuous_fraclap(tf_constant(1.0, 2), pt(0.2, -0.3), op2, Region::Star).value) < 1e-12);
  QuadOptions fine{0.0, 2.0};
  for (double u : {0.0, 0.2, -0.7}) {
    const auto G = tf_gauss(0.5, 1);
    const double a = continuous_fraclap(G, pt(u), op, Region::Star).value;
    QuadOptions q = fine;
    q.inner_radius = 0.5 * 1e-4 * G.extent();
    const double b = continuous_fraclap(G, pt(u), op, Region::Star, q).value;
    CHECK(std::abs(a - b) < 1e-6);
  }
}

TEST_CASE("regional plus cross term equals the full operator") {
  const double g = 1.5;
  SUBCASE("d = 1") {
    const auto op = OperatorSpec::unbounded(g, 1);
    const auto G = tf_gauss(0.5, 1);
    for (double u : {0.05, 0.3, 0.9}) {
      boost::math::quadrature::exp_sinh<double> es;
      auto f = [&](double t) { return (G(pt(-t)) - G(pt(u))) * std::pow(u + t, -1 - g); };
      const double cross = op.c_gamma * es.integrate(f);
      const double reg = continuous_fraclap(G, pt(u), op, Region::RightHalf).value;
      const double full = continuous_fraclap(G, pt(u), op, Region::FullSpace).value;
      CHECK(reg + cross == doctest::Approx(full).epsilon(1e-7));
      const double left = continuous_fraclap(G, pt(-u), op, Region::LeftHalf).value;
      CHECK(left == doctest::Approx(reg).epsilon(1e-9));
      auto o = op;
      o.kappa = 0.3;
      CHECK(continuous_fraclap(G, pt(u), o, Region::Distorted).value ==
            doctest::Approx(reg + 0.3 * cross).epsilon(1e-7));
    }
  }
  SUBCASE("d = 2") {
    const auto op = OperatorSpec::unbounded(g, 2);
    const auto G = tf_gauss(0.5, 2);
    const Point u = pt(0.2, 0.25);
    using boost::math::quadrature::gauss_kronrod;
    auto inner = [&](double v2) {
      return gauss_kronrod<double, 61>::integrate(
          [&](double v1) {
            const double dx = v1 - u[0], dy = v2 - u[1];
            return (G(pt(v1, v2)) - G(u)) * std::pow(dx * dx + dy * dy, -(2 + g) / 2);
          },
          -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), 15, 1e-12);
    };
    const double cross =
        op.c_gamma * gauss_kronrod<double, 61>::integrate(inner, -std::numeric_limits<double>::infinity(), 0.0, 15,
                                                          1e-11);
    const double reg = continuous_fraclap(G, u, op, Region::RightHalf).value;
    const double full = continuous_fraclap(G, u, op, Region::FullSpace).value;
    CHECK(reg + cross == doctest::Approx(full).epsilon(1e-6));
  }
}

TEST_CASE("discrete operator approaches the continuous one") {
  // The lattice sum differs from the integral by about c |G''| |zeta(gamma-1)| n^{gamma-2}.
  const auto op = OperatorSpec::unbounded(1.5, 1);
  const auto G = tf_gauss(2.0, 1);
  const int n = 128;
  LatticeBox box(1, static_cast<int>(std::ceil(G.extent() / 0.85 * n)));
  const auto Ln = discrete_fraclap(LatticeField::from_function(G, box, n), op);
  double sup = 0.0;
  for (std::size_t i = 0; i < box.size(); ++i) {
    const Point u = macro_point(box.site(i), n, 1);
    if (std::abs(u[0]) > 1.0) continue;
    sup = std::max(sup, std::abs(Ln.values[i] - continuous_fraclap(G, u, op, Region::FullSpace).value));
  }
  MESSAGE("sup error on the core: " << sup);
  CHECK(sup < 2e-2);
}

TEST_CASE("operator convergence tables decrease") {
  CHECK(operator_convergence_report(tf_constant(1.0, 1), OperatorSpec::unbounded(1.5, 1), {16, 32}).rows[1].error ==
        0.0);
  for (double kappa : {1.0, 0.5, 0.0}) {
    const auto rep = operator_convergence_report(tf_gauss(0.5, 1), OperatorSpec::unbounded(1.5, 1, kappa),
                                                 {32, 64, 128});
    for (const auto& r : rep.rows) MESSAGE("kappa " << kappa << " n " << r.n << " error " << r.error);
    CHECK(rep.decreasing);
  }
  const auto rep = operator_convergence_report(tf_split(0.3, 0.8, 1), OperatorSpec::unbounded(1.5, 1, 0.0),
                                               {32, 64, 128});
  for (const auto& r : rep.rows) MESSAGE("split n " << r.n << " error " << r.error);
  CHECK(rep.decreasing);
}

TEST_CASE("directional fractional derivative") {
  const double g = 1.4;
  auto lin = [](const Point& u) { return 2.0 + 3.0 * u[0]; };
  CHECK(std::abs(directional_frac_derivative(lin, pt(0), 1, 1, g)) < 1e-6);
  auto pw = [&](const Point& u) { return std::pow(std::abs(u[1]), g - 1) + u[0]; };
  CHECK(directional_frac_derivative(pw, pt(0.3), 2, 1, g) == doctest::Approx(g - 1).epsilon(1e-6));
  CHECK(directional_frac_derivative(pw, pt(0.3), 2, -1, g) == doctest::Approx(1 - g).epsilon(1e-6));
  auto half = [&](const Point& u) { return std::pow(std::abs(u[0]), g / 2); };
  CHECK(std::abs(directional_frac_derivative(half, pt(0), 1, 1, g)) < 1e-3);
  auto osc = [](const Point& u) { return std::sin(1.0 / (std::abs(u[0]) + 1e-9)) / std::abs(u[0] + 1e-12); };
  CHECK_THROWS_AS(directional_frac_derivative(osc, pt(0), 1, 1, g), Error);
}
