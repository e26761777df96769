#include <map>

#include "doctest.h"
#include "lrex/identity.hpp"
#include "lrex/rng.hpp"

using namespace lrex;

namespace {

Site s1(int a) {
  Site s;
  s[0] = a;
  return s;
}

Site s2(int a, int b) {
  Site s;
  s[0] = a;
  s[1] = b;
  return s;
}

using Bond = std::pair<Site, Site>;

// Independent evaluation of the doubled identity on a 1D occupation map.
struct Oracle1D {
  std::map<int, long> eta;
  long v(int z) const { return eta.at(z); }
  long prod(int a, int step, int from, int to) const {
    long p = 1;
    for (int i = from; i <= to; ++i) p *= v(a + step * i);
    return p;
  }
  long r(int x, int y, int k) const {
    long s = 0;
    for (int l = 1; l <= k; ++l) s += prod(x, -1, 1, k - l) * prod(y, +1, 1, l - 1);
    return s;
  }
  long m2(int x, int y, int k) const {
    long s = 0;
    for (int l = 1; l < k; ++l) s += prod(x, -1, 1, l) * prod(y, +1, 0, k - 1 - l);
    return s;
  }
  long a2(int x, int y, int k) const { return m2(x, y, k) - m2(y, x, k); }
  long p2(int s, int k) const { return prod(s, +1, 0, k - 1) + prod(s, -1, 0, k - 1); }
  long lhs2(int x, int y, int k) const { return (r(x, y, k) + r(y, x, k)) * (v(y) - v(x)); }
  long rhs2(int x, int y, int k) const {
    return p2(y, k) - p2(x, k) - (a2(x + 1, y + 1, k) - a2(x, y, k));
  }
};

}  // namespace

TEST_CASE("gradient identity with k = 1 reduces to the plain current") {
  const LatticeBox box(1, 8);
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    Configuration eta(box, 3);
    for (std::size_t i = 0; i < box.size(); ++i) eta.set_index(i, static_cast<int>(rng.below(4)));
    const Site x = s1(-3), y = s1(2 + t % 3);
    const GradientTuple g = gradient_tuple(eta, x, y, 1, 0);
    CHECK(g.lhs2 == 2 * (eta.at(y) - eta.at(x)));
    CHECK(g.rhs2 == g.lhs2);
    CHECK(gradient_antisym2(eta, x, y, 1, 0) == 0);
  }
}

TEST_CASE("gradient identity vanishes on the full configuration") {
  const LatticeBox box(2, 8);
  Configuration eta(box, 2);
  for (std::size_t i = 0; i < box.size(); ++i) eta.set_index(i, 2);
  for (int k = 1; k <= 5; ++k)
    for (int j = 0; j < 2; ++j) {
      const GradientTuple g = gradient_tuple(eta, s2(-1, 0), s2(1, 1), k, j);
      CHECK(g.lhs2 == 0);
      CHECK(g.rhs2 == 0);
    }
}

TEST_CASE("library terms match an independent one-dimensional evaluation") {
  const LatticeBox box(1, 16);
  Rng rng(11);
  for (int t = 0; t < 500; ++t) {
    const int n_e = 1 + static_cast<int>(rng.below(3));
    Configuration eta(box, n_e);
    Oracle1D o;
    for (int z = -16; z < 16; ++z) {
      const int v = static_cast<int>(rng.below(n_e + 1));
      eta.set(s1(z), v);
      o.eta[z] = v;
    }
    const int k = 1 + static_cast<int>(rng.below(5));
    const int x = -8 + static_cast<int>(rng.below(16));
    int y = x;
    while (y == x) y = -8 + static_cast<int>(rng.below(16));
    const GradientTuple g = gradient_tuple(eta, s1(x), s1(y), k, 0);
    CHECK(g.lhs2 == o.lhs2(x, y, k));
    CHECK(g.rhs2 == o.rhs2(x, y, k));
    CHECK(o.lhs2(x, y, k) == o.rhs2(x, y, k));
  }
}

TEST_CASE("random gradient tuples satisfy the identity exactly") {
  long total = 0;
  double seconds = 0.0;
  for (int d = 1; d <= 3; ++d) {
    for (int n_e = 1; n_e <= 3; ++n_e) {
      const GradientReport rep = gradient_decomposition_check(100 + 10 * d + n_e, 1200, 5, d, n_e);
      CHECK(rep.identity_failures == 0);
      CHECK(rep.antisymmetry_failures == 0);
      CHECK(rep.nonzero_lhs > 0);
      total += rep.trials;
      seconds += rep.seconds;
    }
  }
  CHECK(total >= 10000);
  CHECK(seconds < 10.0);
}

TEST_CASE("star certificate follows the model lower bound") {
  const StarCert sep = StarCert::from_spec(make_preset("sep", 1.5, 1, 1));
  CHECK(sep.k_star == 1);
  CHECK(sep.branch == ClusterBranch::PlusCluster);
  const StarCert por = StarCert::from_spec(make_preset("porous:3", 1.5, 1, 1));
  CHECK(por.k_star == 3);
  CHECK(por.branch == ClusterBranch::PlusCluster);
  const StarCert pw = StarCert::from_spec(make_preset("power:0.5", 1.5, 1, 2));
  CHECK(pw.branch == ClusterBranch::MinusCluster);
}

TEST_CASE("k* = 1 routes through an empty intermediate site") {
  const LatticeBox box(1, 16);
  Configuration eta(box, 1);
  eta.set(s1(-5), 1);
  const PathPlan plan = moving_particle_path(eta, s1(-5), s1(12), 0, {1, 1.0, ClusterBranch::PlusCluster}, 1);
  CHECK(plan.z == s1(4));
  REQUIRE(plan.bonds.size() == 2);
  CHECK(plan.bonds[0] == Bond{s1(-5), s1(4)});
  CHECK(plan.bonds[1] == Bond{s1(4), s1(12)});
  CHECK(verify_path(plan, 1));
  CHECK(plan.claimed_end == apply_jump(eta, s1(-5), s1(12)));
}

TEST_CASE("k* = 1 with a full intermediate site empties it first") {
  const LatticeBox box(1, 16);
  Configuration eta(box, 1);
  eta.set(s1(-5), 1);
  eta.set(s1(4), 1);
  const PathPlan plan = moving_particle_path(eta, s1(-5), s1(12), 0, {1, 1.0, ClusterBranch::PlusCluster}, 1);
  REQUIRE(plan.bonds.size() == 2);
  CHECK(plan.bonds[0] == Bond{s1(4), s1(12)});
  CHECK(plan.bonds[1] == Bond{s1(-5), s1(4)});
  CHECK(verify_path(plan, 1));
}

TEST_CASE("particle cluster shuttle for k* = 3") {
  const LatticeBox box(1, 16);
  Configuration eta(box, 1);
  const Site x = s1(-5), y = s1(12), z = s1(4), e = unit(0);
  for (int i = 0; i <= 4; ++i) eta.set(x + i * e, 1);
  const PathPlan plan = moving_particle_path(eta, x, y, 0, {3, 1.0, ClusterBranch::PlusCluster}, 1);
  CHECK(plan.z == z);
  CHECK(plan.shuttle == std::vector<int>{1, 2});
  const std::vector<Bond> expect = {{x, z},         {x + e, z + e},         {x + 2 * e, z + 2 * e},
                                    {z, y},         {z + 2 * e, x + 2 * e}, {z + e, x + e}};
  CHECK(plan.bonds == expect);
  CHECK(verify_path(plan, 1));
  for (const auto& s : plan.steps) CHECK(s.constraint2 > 0);
}

TEST_CASE("hole cluster shuttle for k* = 3") {
  const LatticeBox box(1, 20);
  Configuration eta(box, 1);
  const Site x = s1(-5), y = s1(12), z = s1(4), e = unit(0);
  eta.set(x, 1);
  eta.set(z + e, 1);
  eta.set(z + 2 * e, 1);
  const PathPlan plan = moving_particle_path(eta, x, y, 0, {3, 1.0, ClusterBranch::MinusCluster}, 1);
  CHECK(plan.z == z);
  const std::vector<Bond> expect = {{z + e, y + e}, {z + 2 * e, y + 2 * e}, {x, z},
                                    {z, y},         {y + 2 * e, z + 2 * e}, {y + e, z + e}};
  CHECK(plan.bonds == expect);
  CHECK(verify_path(plan, 1));
  for (const auto& s : plan.steps) CHECK(s.constraint2 > 0);
}

TEST_CASE("full intermediate site with a particle cluster") {
  const LatticeBox box(1, 16);
  Configuration eta(box, 1);
  const Site x = s1(-5), y = s1(12), z = s1(4), e = unit(0);
  for (int i = 0; i <= 2; ++i) eta.set(x + i * e, 1);
  eta.set(x + 3 * e, 1);
  eta.set(x + 4 * e, 1);
  eta.set(z, 1);
  eta.set(z + 2 * e, 1);
  const PathPlan plan = moving_particle_path(eta, x, y, 0, {3, 1.0, ClusterBranch::PlusCluster}, 1);
  const std::vector<Bond> expect = {{x + e, z + e}, {z, y}, {x, z}, {z + e, x + e}};
  CHECK(plan.bonds == expect);
  CHECK(verify_path(plan, 1));
}

TEST_CASE("path preconditions") {
  const LatticeBox box(1, 16);
  Configuration eta(box, 1);
  eta.set(s1(-5), 1);
  const StarCert k3{3, 1.0, ClusterBranch::PlusCluster};
  CHECK_THROWS_AS(moving_particle_path(eta, s1(-5), s1(12), 0, k3, 1), Error);
  try {
    moving_particle_path(eta, s1(-5), s1(12), 0, k3, 1);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ClusterMissing);
  }
  try {
    moving_particle_path(eta, s1(-4), s1(12), 0, {1, 1.0, ClusterBranch::PlusCluster}, 1);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PreconditionViolated);
  }
}

TEST_CASE("verify_path basic cases") {
  const LatticeBox box(1, 4);
  Configuration eta(box, 2);
  eta.set(s1(0), 1);
  PathPlan same(eta, eta);
  CHECK(verify_path(same, 2));
  PathPlan bad(eta, apply_jump(eta, s1(0), s1(1)));
  bad.bonds = {{s1(2), s1(1)}};
  CHECK_FALSE(verify_path(bad, 2));
  PathPlan wrong_end(eta, eta);
  wrong_end.bonds = {{s1(0), s1(1)}};
  CHECK_FALSE(verify_path(wrong_end, 2));
  CHECK_FALSE(verify_path(same, 1));
}

TEST_CASE("one-dimensional paths block only when the cluster window reaches y") {
  const PathCheckReport rep = path_construction_check(8, 1200, 1, {1, 2, 3});
  CHECK(rep.instances == 1200);
  CHECK(rep.verified + rep.blocked == rep.instances);
  for (std::size_t r = 7; r < rep.blocked_by_r.size(); ++r) CHECK(rep.blocked_by_r[r] == 0);
  for (int k = 1; k <= 3; ++k) {
    const PathCheckReport far = path_construction_check(20 + k, 400, 1, {k}, 2 * k + 1);
    CHECK(far.ok());
  }
}

TEST_CASE("random admissible paths verify in the fast half-space") {
  for (int d = 2; d <= 3; ++d) {
    const PathCheckReport rep = path_construction_check(7 + d, 600, d, {1, 2, 3});
    CHECK(rep.instances == 600);
    CHECK(rep.verified == rep.instances);
    CHECK(rep.blocked == 0);
    CHECK(rep.length_violations == 0);
    CHECK(rep.slow_bond_hits == 0);
    CHECK(rep.nonpositive_constraint == 0);
    CHECK(rep.max_length <= 6);
    CHECK(rep.seconds < 10.0);
  }
}

TEST_CASE("path JSON lists bonds with occupancy certificates") {
  const LatticeBox box(1, 16);
  Configuration eta(box, 1);
  eta.set(s1(-5), 1);
  const PathPlan plan = moving_particle_path(eta, s1(-5), s1(12), 0, {1, 1.0, ClusterBranch::PlusCluster}, 1);
  const std::string js = path_json(plan);
  CHECK(js.find("\"bonds\"") != std::string::npos);
  CHECK(js.find("\"source_occupancy\": 1") != std::string::npos);
  CHECK(js.find("\"verified\": true") != std::string::npos);
}
