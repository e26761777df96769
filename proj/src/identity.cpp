#include "lrex/identity.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>

#include "json.hpp"

#include "lrex/error.hpp"
#include "lrex/rng.hpp"

namespace lrex {

namespace {

long prod_along(const Configuration& eta, const Site& start, int j, int step, int from, int to) {
  long p = 1;
  const Site e = unit(j);
  for (int i = from; i <= to; ++i) p *= eta.at(start + (step * i) * e);
  return p;
}

}  // namespace

long gradient_pure2(const Configuration& eta, const Site& s, int k, int j) {
  return prod_along(eta, s, j, +1, 0, k - 1) + prod_along(eta, s, j, -1, 0, k - 1);
}

long gradient_mixed2(const Configuration& eta, const Site& x, const Site& y, int k, int j) {
  long s = 0;
  for (int l = 1; l <= k - 1; ++l) s += prod_along(eta, x, j, -1, 1, l) * prod_along(eta, y, j, +1, 0, k - 1 - l);
  return s;
}

long gradient_antisym2(const Configuration& eta, const Site& x, const Site& y, int k, int j) {
  return gradient_mixed2(eta, x, y, k, j) - gradient_mixed2(eta, y, x, k, j);
}

GradientTuple gradient_tuple(const Configuration& eta, const Site& x, const Site& y, int k, int j) {
  GradientTuple t;
  t.k = k;
  t.j = j;
  t.x = x;
  t.y = y;
  const Site e = unit(j);
  t.lhs2 = constraint_c2_axis(eta, x, y, k, j) * (eta.at(y) - eta.at(x));
  const long grad_a = gradient_antisym2(eta, x + e, y + e, k, j) - gradient_antisym2(eta, x, y, k, j);
  t.rhs2 = gradient_pure2(eta, y, k, j) - gradient_pure2(eta, x, k, j) - grad_a;
  t.antisym_sum2 = gradient_antisym2(eta, x, y, k, j) + gradient_antisym2(eta, y, x, k, j);
  return t;
}

GradientReport gradient_decomposition_check(std::uint64_t seed, long trials, int k_max, int d, int n_e) {
  if (d < 1 || d > 3) throw Error(ErrorCode::PreconditionViolated, "d must be in 1..3");
  if (k_max < 1 || n_e < 1 || trials < 0) throw Error(ErrorCode::PreconditionViolated, "bad check parameters");
  const auto t0 = std::chrono::steady_clock::now();
  const int margin = k_max + 1;
  const int L = margin + 4;
  const LatticeBox box(d, L);
  Configuration eta(box, n_e);
  Rng rng(seed);
  GradientReport rep;
  auto draw_site = [&] {
    Site s;
    for (int i = 0; i < d; ++i) s[i] = -L + margin + static_cast<int>(rng.below(2 * (L - margin)));
    return s;
  };
  for (long t = 0; t < trials; ++t) {
    for (std::size_t i = 0; i < box.size(); ++i) eta.set_index(i, static_cast<int>(rng.below(n_e + 1)));
    const int k = 1 + static_cast<int>(rng.below(k_max));
    const int j = static_cast<int>(rng.below(d));
    const Site x = draw_site();
    Site y = draw_site();
    while (y == x) y = draw_site();
    const GradientTuple g = gradient_tuple(eta, x, y, k, j);
    ++rep.trials;
    if (g.lhs2 != 0) ++rep.nonzero_lhs;
    const bool bad_id = g.lhs2 != g.rhs2;
    const bool bad_anti = g.antisym_sum2 != 0;
    rep.identity_failures += bad_id;
    rep.antisymmetry_failures += bad_anti;
    if ((bad_id || bad_anti) && rep.failures.size() < 16) rep.failures.push_back(g);
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

const char* to_string(ClusterBranch b) {
  return b == ClusterBranch::PlusCluster ? "PlusCluster" : "MinusCluster";
}

StarCert StarCert::from_spec(const ModelSpec& spec) {
  if (spec.cert.b_plus > 0.0) return {spec.cert.k_plus, spec.cert.b_plus, ClusterBranch::PlusCluster};
  if (spec.cert.b_minus > 0.0) return {spec.cert.k_minus, spec.cert.b_minus, ClusterBranch::MinusCluster};
  throw Error(ErrorCode::InvalidSpec, "lower-bound certificate has no positive coefficient");
}

namespace {

bool plus(const StarCert& c) { return c.branch == ClusterBranch::PlusCluster; }

// Site counts as cluster material: occupied (plus) or not full (minus).
bool cluster_site(const Configuration& eta, const Site& s, const StarCert& c) {
  if (!eta.box().contains(s)) return false;
  const int v = eta.at(s);
  return plus(c) ? v >= 1 : v < eta.n_e();
}

// E_j(z): window offsets 1..k*-1 that are empty (plus) or full (minus).
bool shuttle_set(const Configuration& eta, const Site& z, int j, const StarCert& c, std::vector<int>& out) {
  out.clear();
  const Site e = unit(j);
  for (int i = 1; i <= c.k_star - 1; ++i) {
    const Site s = z + i * e;
    if (!eta.box().contains(s)) return false;
    const int v = eta.at(s);
    if (plus(c) ? v == 0 : v == eta.n_e()) out.push_back(i);
  }
  return true;
}

using Bonds = std::vector<std::pair<Site, Site>>;

// gamma_1(r1, r2): moves along the shuttle set in increasing order; gamma_2 reverses it.
void shuttle_out(Bonds& b, const Site& r1, const Site& r2, int j, const std::vector<int>& m) {
  for (int i : m) b.push_back({r1 + i * unit(j), r2 + i * unit(j)});
}
void shuttle_back(Bonds& b, const Site& r2, const Site& r1, int j, const std::vector<int>& m) {
  for (auto it = m.rbegin(); it != m.rend(); ++it) b.push_back({r2 + *it * unit(j), r1 + *it * unit(j)});
}

Bonds route(const Configuration& eta, const Site& x, const Site& y, const Site& z, int j, const StarCert& c,
            const std::vector<int>& m) {
  Bonds b;
  const bool z_full = eta.at(z) == eta.n_e();
  if (c.k_star == 1) {
    if (!z_full) {
      b = {{x, z}, {z, y}};
    } else {
      b = {{z, y}, {x, z}};
    }
    return b;
  }
  if (plus(c)) {
    if (!z_full) {
      b.push_back({x, z});
      shuttle_out(b, x, z, j, m);
      b.push_back({z, y});
      shuttle_back(b, z, x, j, m);
    } else {
      shuttle_out(b, x, z, j, m);
      b.push_back({z, y});
      b.push_back({x, z});
      shuttle_back(b, z, x, j, m);
    }
  } else {
    if (!z_full) {
      shuttle_out(b, z, y, j, m);
      b.push_back({x, z});
      b.push_back({z, y});
      shuttle_back(b, y, z, j, m);
    } else {
      b.push_back({z, y});
      shuttle_out(b, z, y, j, m);
      b.push_back({x, z});
      shuttle_back(b, y, z, j, m);
    }
  }
  return b;
}

}  // namespace

bool in_cluster_set(const Configuration& eta, const Site& w, int j, const StarCert& cert) {
  if (cert.k_star <= 1) return true;
  for (int i = 1; i <= 2 * (cert.k_star - 1); ++i)
    if (!cluster_site(eta, w + i * unit(j), cert)) return false;
  return true;
}

std::vector<StepCertificate> replay_certificates(const PathPlan& plan, int j, const StarCert& cert) {
  std::vector<StepCertificate> out;
  Configuration cur = plan.start;
  const LatticeBox& box = cur.box();
  const bool tilde = !plus(cert);
  for (const auto& [a, b] : plan.bonds) {
    if (!box.contains(a) || !box.contains(b) || a == b) return {};
    StepCertificate s;
    s.source = cur.at(a);
    s.target = cur.at(b);
    s.a = rate_a(cur, a, b);
    s.constraint2 = cert.k_star == 1 ? 2 : constraint_c2_axis(cur, a, b, cert.k_star, j, tilde, WindowPolicy::ZeroPad);
    if (s.a < 1) return {};
    out.push_back(s);
    jump_in_place(cur, box.index(a), box.index(b));
  }
  if (!(cur == plan.claimed_end)) return {};
  return out;
}

bool verify_path(const PathPlan& plan, int n_e) {
  if (plan.start.n_e() != n_e || plan.claimed_end.n_e() != n_e) return false;
  Configuration cur = plan.start;
  const LatticeBox& box = cur.box();
  for (const auto& [a, b] : plan.bonds) {
    if (!box.contains(a) || !box.contains(b) || a == b) return false;
    if (rate_a(cur, a, b) < 1) return false;
    jump_in_place(cur, box.index(a), box.index(b));
  }
  return cur == plan.claimed_end;
}

PathPlan moving_particle_path(const Configuration& eta, const Site& x, const Site& y, int j, const StarCert& cert,
                              int n_e) {
  const LatticeBox& box = eta.box();
  const int d = box.dim();
  if (n_e != eta.n_e()) throw Error(ErrorCode::PreconditionViolated, "N_e does not match the configuration");
  if (cert.k_star < 1) throw Error(ErrorCode::PreconditionViolated, "k* must be >= 1");
  if (j < 0 || j >= d) throw Error(ErrorCode::PreconditionViolated, "cluster axis out of range");
  if (!box.contains(x) || !box.contains(y)) throw Error(ErrorCode::OutOfBox, "path endpoints outside the box");
  int axis = -1, r = 0;
  for (int i = 0; i < d; ++i) {
    if (x[i] == y[i]) continue;
    if (axis >= 0) throw Error(ErrorCode::PreconditionViolated, "y - x must lie along one axis");
    axis = i;
    r = y[i] - x[i];
  }
  if (axis < 0 || std::abs(r) < 2) throw Error(ErrorCode::PreconditionViolated, "need |r| >= 2");
  if (rate_a(eta, x, y) < 1) throw Error(ErrorCode::PreconditionViolated, "a_{x,y}(eta) = 0");
  const Site anchor = plus(cert) ? x : y;
  if (!in_cluster_set(eta, anchor, j, cert))
    throw Error(ErrorCode::ClusterMissing, "no cluster after the anchor site along the chosen axis");

  const int half = std::abs(r) / 2;
  const int sgn = r > 0 ? 1 : -1;
  Configuration target = apply_jump(eta, x, y);
  std::vector<int> omega(d, 1);
  std::vector<int> m;
  for (;;) {
    Site z = x;
    z[axis] += sgn * half;
    for (int i = 0; i < d; ++i) z[i] += sgn * omega[i];
    if (box.contains(z) && z != x && z != y && shuttle_set(eta, z, j, cert, m)) {
      PathPlan plan(eta, target);
      plan.bonds = route(eta, x, y, z, j, cert, m);
      plan.x = x;
      plan.y = y;
      plan.z = z;
      plan.axis_move = axis;
      plan.axis_cluster = j;
      plan.cert = cert;
      plan.shuttle = m;
      plan.steps = replay_certificates(plan, j, cert);
      bool ok = !plan.steps.empty();
      for (const auto& s : plan.steps) ok = ok && s.constraint2 > 0;
      if (ok) return plan;
    }
    // Lexicographic increment, first coordinate most significant.
    int i = d - 1;
    while (i >= 0 && omega[i] == half) omega[i--] = 1;
    if (i < 0) break;
    ++omega[i];
  }
  throw Error(ErrorCode::BlockedPath, "no intermediate site yields a valid path");
}

std::string path_json(const PathPlan& plan) {
  using nlohmann::json;
  const int d = plan.start.box().dim();
  auto site = [d](const Site& s) {
    json a = json::array();
    for (int i = 0; i < d; ++i) a.push_back(s[i]);
    return a;
  };
  json j;
  j["x"] = site(plan.x);
  j["y"] = site(plan.y);
  j["z"] = site(plan.z);
  j["axis_move"] = plan.axis_move;
  j["axis_cluster"] = plan.axis_cluster;
  j["k_star"] = plan.cert.k_star;
  j["branch"] = to_string(plan.cert.branch);
  j["shuttle"] = plan.shuttle;
  j["length"] = plan.bonds.size();
  json bonds = json::array();
  for (std::size_t m = 0; m < plan.bonds.size(); ++m) {
    json b;
    b["from"] = site(plan.bonds[m].first);
    b["to"] = site(plan.bonds[m].second);
    if (m < plan.steps.size()) {
      b["source_occupancy"] = plan.steps[m].source;
      b["target_occupancy"] = plan.steps[m].target;
      b["a"] = plan.steps[m].a;
      b["constraint2"] = plan.steps[m].constraint2;
    }
    bonds.push_back(b);
  }
  j["bonds"] = bonds;
  j["verified"] = verify_path(plan, plan.start.n_e());
  return j.dump(2);
}

PathInstance random_path_instance(Rng& rng, int d, const StarCert& cert, int r_min) {
  if (d < 1 || d > kMaxDim || cert.k_star < 1) throw Error(ErrorCode::PreconditionViolated, "bad path instance parameters");
  const int k = cert.k_star;
  const int r_top = k + 6;
  const int reach = r_top + 2 * k + 2;
  const int L = 3 * r_top + reach + 2;
  const LatticeBox box(d, L);
  auto uniform_int = [&](int a, int b) { return a + static_cast<int>(rng.below(b - a + 1)); };
  for (;;) {
    const int n_e = uniform_int(1, 3);
    const int ar = uniform_int(std::min(std::max({2, k + 1, r_min}), r_top), r_top);
    const int r = rng.below(2) ? ar : -ar;
    const int axis = uniform_int(0, d - 1);
    const int j = uniform_int(0, d - 1);
    Site x;
    for (int i = 0; i < d; ++i) x[i] = uniform_int(-L + reach, L - 1 - reach);
    x[d - 1] = uniform_int(3 * ar, L - 1 - reach);
    const Site y = x + r * unit(axis);
    Configuration eta(box, n_e);
    // Only sites within reach of x can influence the path.
    Site lo;
    for (int i = 0; i < d; ++i) lo[i] = x[i] - reach;
    Site s = lo;
    for (;;) {
      eta.set(s, uniform_int(0, n_e));
      int i = d - 1;
      while (i >= 0 && s[i] == x[i] + reach) s[i] = lo[i], --i;
      if (i < 0) break;
      ++s[i];
    }
    eta.set(x, uniform_int(1, n_e));
    eta.set(y, uniform_int(0, n_e - 1));
    const bool pl = cert.branch == ClusterBranch::PlusCluster;
    const Site anchor = pl ? x : y;
    for (int i = 1; i <= 2 * (k - 1); ++i) eta.set(anchor + i * unit(j), pl ? uniform_int(1, n_e) : uniform_int(0, n_e - 1));
    if (rate_a(eta, x, y) < 1 || !in_cluster_set(eta, anchor, j, cert)) continue;
    return PathInstance{std::move(eta), x, y, j, cert};
  }
}

PathCheckReport path_construction_check(std::uint64_t seed, long instances, int d, const std::vector<int>& k_list,
                                 int r_min) {
  if (d < 1 || d > kMaxDim || k_list.empty()) throw Error(ErrorCode::PreconditionViolated, "bad path check parameters");
  const auto t0 = std::chrono::steady_clock::now();
  const int k_top = *std::max_element(k_list.begin(), k_list.end());
  Rng rng(seed);
  PathCheckReport rep;
  rep.per_k.assign(k_top, 0);
  rep.blocked_by_r.assign(k_top + 7, 0);
  for (long t = 0; t < instances; ++t) {
    const int k = k_list[t % k_list.size()];
    const StarCert cert{k, 1.0, (t / k_list.size()) % 2 == 0 ? ClusterBranch::PlusCluster : ClusterBranch::MinusCluster};
    const PathInstance in = random_path_instance(rng, d, cert, r_min);
    const int n_e = in.eta.n_e();
    ++rep.instances;
    ++rep.per_k[k - 1];
    try {
      const PathPlan plan = moving_particle_path(in.eta, in.x, in.y, in.j, cert, n_e);
      if (verify_path(plan, n_e)) ++rep.verified;
      const int len = static_cast<int>(plan.bonds.size());
      rep.max_length = std::max(rep.max_length, len);
      if (len > 2 + 2 * (k - 1)) ++rep.length_violations;
      for (const auto& [a, b] : plan.bonds)
        if (classify_bond(a, b, d) == BondClass::Slow) ++rep.slow_bond_hits;
      for (const auto& s : replay_certificates(plan, in.j, cert))
        if (s.constraint2 <= 0) ++rep.nonpositive_constraint;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::BlockedPath) throw;
      ++rep.blocked;
      int ar = 0;
      for (int i = 0; i < d; ++i) ar += std::abs(in.y[i] - in.x[i]);
      ++rep.blocked_by_r[ar];
    }
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

}  // namespace lrex
