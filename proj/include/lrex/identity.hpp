#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lrex/lattice.hpp"
#include "lrex/rates.hpp"

namespace lrex {

// Doubled terms of the gradient identity, all exact integers. Axis j is 0-based.
// 2 P^{(k),j}(tau^s eta).
long gradient_pure2(const Configuration& eta, const Site& s, int k, int j);
// 2 M^{(k),j}_{x,y}(eta).
long gradient_mixed2(const Configuration& eta, const Site& x, const Site& y, int k, int j);
// 2 A^{(k),j}_{x,y}(eta) = 2 M_{x,y} - 2 M_{y,x}.
long gradient_antisym2(const Configuration& eta, const Site& x, const Site& y, int k, int j);

struct GradientTuple {
  int k = 1;
  int j = 0;
  Site x, y;
  long lhs2 = 0;  // (r_xy + r_yx)(eta(y) - eta(x))
  long rhs2 = 0;  // 2P(tau^y) - 2P(tau^x) - 2(A_{x+e,y+e} - A_{x,y})
  long antisym_sum2 = 0;  // 2A_{x,y} + 2A_{y,x}
};

struct GradientReport {
  long trials = 0;
  long identity_failures = 0;
  long antisymmetry_failures = 0;
  long nonzero_lhs = 0;  // tuples where the current term is nonzero
  std::vector<GradientTuple> failures;  // first few failing tuples
  double seconds = 0.0;
  bool ok() const { return identity_failures == 0 && antisymmetry_failures == 0; }
};

// Evaluates one tuple; windows must lie inside the box.
GradientTuple gradient_tuple(const Configuration& eta, const Site& x, const Site& y, int k, int j);

// Random (eta, k <= k_max, j, x, y) with d <= 3 and occupancies in {0..N_e}.
GradientReport gradient_decomposition_check(std::uint64_t seed, long trials, int k_max, int d, int n_e);

enum class ClusterBranch { PlusCluster, MinusCluster };
const char* to_string(ClusterBranch b);

struct StarCert {
  int k_star = 1;
  double b_star = 1.0;
  ClusterBranch branch = ClusterBranch::PlusCluster;

  // Plus branch when b_plus > 0, otherwise minus branch; throws InvalidSpec if neither is positive.
  static StarCert from_spec(const ModelSpec& spec);
};

// Occupancies and rates seen by one step of a replayed path, before the move.
struct StepCertificate {
  int source = 0;
  int target = 0;
  long a = 0;          // eta(x0) (N_e - eta(x1))
  long constraint2 = 0;  // 2 c^{(k*),j}_{x0,x1}, on the complement for the minus branch
};

struct PathPlan {
  std::vector<std::pair<Site, Site>> bonds;  // ordered: a particle moves from first to second
  Configuration start;
  Configuration claimed_end;
  // Construction data; unset for hand-built plans.
  Site x, y, z;
  int axis_move = 0;     // axis of y - x
  int axis_cluster = 0;  // j
  StarCert cert;
  std::vector<int> shuttle;  // increasing elements of the non-full window set at z
  std::vector<StepCertificate> steps;

  PathPlan(Configuration s, Configuration e) : start(std::move(s)), claimed_end(std::move(e)) {}
};

// eta in Omega*_j(w): the 2(k*-1) sites after w along e_j are occupied (plus branch) or
// not full (minus branch). Sites outside the box fail.
bool in_cluster_set(const Configuration& eta, const Site& w, int j, const StarCert& cert);

// Path from eta to eta^{x,y}, y = x + r e_i with |r| >= 2, through an intermediate site z chosen
// as the first offset in the scan of [1, floor(|r|/2)]^d whose plan replays and whose every step
// has a positive constraint.
PathPlan moving_particle_path(const Configuration& eta, const Site& x, const Site& y, int j,
                              const StarCert& cert, int n_e);

// Replays the plan: every step needs a >= 1 and the final state must equal claimed_end.
bool verify_path(const PathPlan& plan, int n_e);
// Per-step certificates of a replay; empty when a step is invalid.
std::vector<StepCertificate> replay_certificates(const PathPlan& plan, int j, const StarCert& cert);

std::string path_json(const PathPlan& plan);

struct PathInstance {
  Configuration eta;
  Site x, y;
  int j = 0;
  StarCert cert;
};

class Rng;
// Admissible input in the fast half-space x_d >= 3|r|: a_{x,y} > 0 and the cluster precondition
// holds; N_e in {1,2,3}, |r| in [max(2, k*+1, r_min), k*+6].
PathInstance random_path_instance(Rng& rng, int d, const StarCert& cert, int r_min = 0);

struct PathCheckReport {
  long instances = 0;
  long verified = 0;
  long blocked = 0;
  long length_violations = 0;
  long slow_bond_hits = 0;
  long nonpositive_constraint = 0;
  int max_length = 0;
  std::vector<long> per_k;       // instances by k*, index k*-1
  std::vector<long> blocked_by_r;  // blocked instances by |r|
  double seconds = 0.0;
  bool ok() const {
    return verified == instances && blocked == 0 && length_violations == 0 && slow_bond_hits == 0 &&
           nonpositive_constraint == 0;
  }
};

// Random admissible inputs in the fast half-space x_d >= 3|r|, cycling k* over k_list and both
// cluster branches, with N_e in {1,2,3} and |r| in [max(2, k*+1, r_min), k*+6] (r_min <= k*+6).
PathCheckReport path_construction_check(std::uint64_t seed, long instances, int d, const std::vector<int>& k_list,
                                 int r_min = 0);

}  // namespace lrex
