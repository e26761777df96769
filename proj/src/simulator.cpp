#include "lrex/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <ostream>

namespace lrex {

double envelope_bound(const ModelSpec& spec, int n) {
  const SeriesF f = SeriesF::from_spec(spec);
  const double cmax = 1.0 + f.f_prime_n(spec.ell_at(n));
  return std::max(1.0, spec.alpha.value(n)) * cmax * spec.n_e / 2.0;
}

namespace {

struct FluxEngine {
  const ModelSpec& spec;
  const JumpKernel& kernel;
  const LatticeBox& box;
  int n;
  double alpha_n;
  double scale;                          // n^{gamma-d}
  const std::vector<std::vector<double>>& gv;  // [functional][site]

  // Directed rate u -> v on the (mutable) configuration.
  double rate(Configuration& eta, std::size_t iu, std::size_t iv, const Site& u, const Site& v, double p) const {
    const long a = rate_a(eta, iu, iv);
    if (a == 0) return 0.0;
    const double al = classify_bond(u, v, spec.d) == BondClass::Slow ? alpha_n : 1.0;
    if (al == 0.0) return 0.0;
    return p * al * jump_constraint_inplace(eta, u, v, spec, n) * a / eta.n_e();
  }

  // Adds flux of bond {u,v} for each functional into acc.
  void add_bond(Configuration& eta, std::size_t iu, std::size_t iv, const Site& u, const Site& v, double p,
                std::vector<double>& acc) const {
    const double net = rate(eta, iu, iv, u, v, p) - rate(eta, iv, iu, v, u, p);
    if (net == 0.0) return;
    for (std::size_t f = 0; f < gv.size(); ++f) acc[f] += net * (gv[f][iv] - gv[f][iu]);
  }

  std::vector<double> total(Configuration& eta) const {
    std::vector<double> acc(gv.size(), 0.0);
    for (std::size_t iu = 0; iu < box.size(); ++iu) {
      const Site u = box.site(iu);
      for (std::size_t k = 0; k < kernel.table_size(); ++k) {
        const Site v = u + kernel.offset(k);
        if (!box.contains(v)) continue;
        const std::size_t iv = box.index(v);
        if (iv <= iu) continue;
        add_bond(eta, iu, iv, u, v, kernel.table_p(k), acc);
      }
    }
    for (auto& a : acc) a *= scale;
    return acc;
  }

  // Sites whose bonds may change when x and y change.
  std::vector<std::size_t> affected(const Site& x, const Site& y) const {
    const int K = std::max(1, spec.max_active_k(n));
    std::vector<std::size_t> out;
    auto add = [&](const Site& s) {
      if (!box.contains(s)) return;
      const auto i = box.index(s);
      if (std::find(out.begin(), out.end(), i) == out.end()) out.push_back(i);
    };
    for (const Site& c : {x, y}) {
      add(c);
      for (int j = 0; j < spec.d; ++j)
        for (int i = 1; i < K; ++i) {
          add(c + i * unit(j));
          add(c - i * unit(j));
        }
    }
    return out;
  }

  std::vector<double> local(Configuration& eta, const std::vector<std::size_t>& set) const {
    std::vector<double> acc(gv.size(), 0.0);
    for (std::size_t iu : set) {
      const Site u = box.site(iu);
      for (std::size_t k = 0; k < kernel.table_size(); ++k) {
        const Site v = u + kernel.offset(k);
        if (!box.contains(v)) continue;
        const std::size_t iv = box.index(v);
        const bool v_in = std::find(set.begin(), set.end(), iv) != set.end();
        if (v_in && iv < iu) continue;
        add_bond(eta, iu, iv, u, v, kernel.table_p(k), acc);
      }
    }
    for (auto& a : acc) a *= scale;
    return acc;
  }
};

}  // namespace

double pairing_drift(const Configuration& eta, const TestFunction& G, const ModelSpec& spec, const JumpKernel& kernel,
                     int n) {
  const auto& box = eta.box();
  std::vector<std::vector<double>> gv(1, std::vector<double>(box.size()));
  for (std::size_t i = 0; i < box.size(); ++i) gv[0][i] = G(macro_point(box.site(i), n, box.dim()));
  const double scale = std::pow(static_cast<double>(n), spec.gamma - spec.d);
  FluxEngine fe{spec, kernel, box, n, spec.alpha.value(n), scale, gv};
  Configuration tmp = eta;
  return fe.total(tmp)[0];
}

TrajectoryRecord run(const ModelSpec& spec, const JumpKernel& kernel, const LatticeBox& box, int n,
                     const Configuration& eta0, double t_end, const std::vector<double>& sample_times,
                     std::uint64_t seed, const RunOptions& opts) {
  spec.validate();
  if (!(eta0.box() == box) || eta0.n_e() != spec.n_e || box.dim() != spec.d)
    throw Error(ErrorCode::InvalidSpec, "configuration, box and spec disagree");
  if (kernel.dim() != spec.d || kernel.gamma() != spec.gamma)
    throw Error(ErrorCode::InvalidSpec, "kernel does not match spec");
  if (n < 1) throw Error(ErrorCode::InvalidSpec, "scale n must be >= 1");
  for (std::size_t i = 0; i < sample_times.size(); ++i) {
    if (sample_times[i] < 0.0 || sample_times[i] > t_end)
      throw Error(ErrorCode::PreconditionViolated, "sample time outside [0, t_end]");
    if (i > 0 && !(sample_times[i] > sample_times[i - 1]))
      throw Error(ErrorCode::PreconditionViolated, "sample times must be strictly increasing");
  }

  TrajectoryRecord rec;
  rec.seed = seed;
  rec.stream = opts.stream;
  const int d = spec.d;
  const std::size_t S = box.size();
  const double nd = std::pow(static_cast<double>(n), d);
  const double ng = std::pow(static_cast<double>(n), spec.gamma);
  const double M = envelope_bound(spec, n);
  const double lambda = ng * static_cast<double>(S) * M * kernel.truncated_mass();
  const double alpha_n = spec.alpha.value(n);
  const int n_e = spec.n_e;
  rec.envelope_rate = lambda;

  Configuration eta = eta0;
  const long total0 = eta.total();
  Rng rng(seed, opts.stream);

  const std::size_t nf = opts.functionals.size();
  for (const auto& g : opts.functionals) rec.names.push_back(g.name());
  std::vector<std::vector<double>> gv(nf, std::vector<double>(S));
  for (std::size_t f = 0; f < nf; ++f)
    for (std::size_t i = 0; i < S; ++i) gv[f][i] = opts.functionals[f](macro_point(box.site(i), n, d));
  auto pairing = [&](std::size_t f) {
    double s = 0.0;
    const auto& occ = eta.data();
    for (std::size_t i = 0; i < S; ++i)
      if (occ[i]) s += gv[f][i] * occ[i];
    return s / nd;
  };
  for (std::size_t f = 0; f < nf; ++f) rec.initial_pairings.push_back(pairing(f));

  // Integral term of the Dynkin martingale.
  const bool track = opts.track_integral && nf > 0;
  const bool linear = spec.state_independent_constraint(n);
  const double scale = ng / nd;
  FluxEngine fe{spec, kernel, box, n, alpha_n, scale, gv};
  std::vector<std::vector<double>> W;  // linear case: drift = sum_x eta(x) W[f][x]
  std::vector<double> phi(nf, 0.0), integral(nf, 0.0);
  if (track) {
    if (linear) {
      const double c1 = spec.bp(1) + spec.bm(1);
      W.assign(nf, std::vector<double>(S, 0.0));
      for (std::size_t ix = 0; ix < S; ++ix) {
        const Site x = box.site(ix);
        for (std::size_t k = 0; k < kernel.table_size(); ++k) {
          const Site& z = kernel.offset(k);
          const Site y = x + z;
          if (!box.contains(y)) continue;
          const std::size_t iy = box.index(y);
          const bool slow = classify_bond(x, y, d) == BondClass::Slow;
          int l1 = 0;
          for (int i = 0; i < d; ++i) l1 += std::abs(z[i]);
          const double c = c1 + ((!slow && l1 == 1) ? 1.0 : 0.0);
          const double kxy = kernel.table_p(k) * (slow ? alpha_n : 1.0) * c;
          for (std::size_t f = 0; f < nf; ++f) W[f][ix] += kxy * (gv[f][iy] - gv[f][ix]);
        }
      }
      for (auto& w : W)
        for (auto& v : w) v *= scale;
      const auto& occ = eta.data();
      for (std::size_t f = 0; f < nf; ++f)
        for (std::size_t i = 0; i < S; ++i) phi[f] += occ[i] * W[f][i];
    } else {
      phi = fe.total(eta);
    }
  }

  double t = 0.0, t_int = 0.0;
  std::size_t next_sample = 0;
  auto snapshot = [&](double ts) {
    if (track)
      for (std::size_t f = 0; f < nf; ++f) integral[f] += phi[f] * (ts - t_int);
    t_int = ts;
    const long tot = eta.total();
    if (tot != total0) throw Error(ErrorCode::PreconditionViolated, "particle number not conserved");
    rec.times.push_back(ts);
    std::vector<double> pv(nf);
    for (std::size_t f = 0; f < nf; ++f) pv[f] = pairing(f);
    rec.pairings.push_back(std::move(pv));
    if (track) rec.integrals.push_back(integral);
    rec.totals.push_back(tot);
    if (opts.store_grids && S <= (std::size_t{1} << 24)) rec.grids.push_back(eta.data());
  };

  const double inv_2ne = 1.0 / (2.0 * n_e);
  while (true) {
    const double t_next = t + rng.exponential(lambda);
    while (next_sample < sample_times.size() && sample_times[next_sample] < t_next)
      snapshot(sample_times[next_sample++]);
    if (t_next > t_end) break;
    t = t_next;
    ++rec.proposals;

    const std::size_t ix = rng.below(S);
    const std::size_t k = kernel.sample(rng);
    const Site x = box.site(ix);
    const Site y = x + kernel.offset(k);
    if (!box.contains(y)) continue;
    const std::size_t iy = box.index(y);
    const long axy = rate_a(eta, ix, iy), ayx = rate_a(eta, iy, ix);
    if (axy == 0 && ayx == 0) continue;
    const double al = classify_bond(x, y, d) == BondClass::Slow ? alpha_n : 1.0;
    if (al == 0.0) continue;
    const double wxy = axy ? jump_constraint_inplace(eta, x, y, spec, n) * axy : 0.0;
    const double wyx = ayx ? jump_constraint_inplace(eta, y, x, spec, n) * ayx : 0.0;
    const double w = al * (wxy + wyx) * inv_2ne;
    const double ratio = w / M;
    rec.max_ratio = std::max(rec.max_ratio, ratio);
    if (ratio > 1.0 + 1e-12) throw Error(ErrorCode::EnvelopeViolation, "acceptance ratio exceeds one");
    if (!(rng.uniform() * M < w)) continue;
    const bool forward = rng.uniform() * (wxy + wyx) < wxy;
    const std::size_t from = forward ? ix : iy, to = forward ? iy : ix;

    if (track)
      for (std::size_t f = 0; f < nf; ++f) integral[f] += phi[f] * (t - t_int);
    t_int = t;
    if (opts.on_event) opts.on_event(eta, from, to);
    if (track && !linear) {
      const auto set = fe.affected(x, y);
      const auto before = fe.local(eta, set);
      jump_in_place(eta, from, to);
      const auto after = fe.local(eta, set);
      for (std::size_t f = 0; f < nf; ++f) phi[f] += after[f] - before[f];
    } else {
      jump_in_place(eta, from, to);
      if (track)
        for (std::size_t f = 0; f < nf; ++f) phi[f] += W[f][to] - W[f][from];
    }
    ++rec.accepted;
    if (opts.max_accepted && rec.accepted >= opts.max_accepted) break;
  }
  return rec;
}

void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& rec) {
  os << "time,functional_name,value\n";
  char buf[64];
  for (std::size_t i = 0; i < rec.times.size(); ++i)
    for (std::size_t f = 0; f < rec.names.size(); ++f) {
      std::snprintf(buf, sizeof buf, "%.17g", rec.times[i]);
      os << buf << ',' << rec.names[f] << ',';
      std::snprintf(buf, sizeof buf, "%.17g", rec.pairings[i][f]);
      os << buf << '\n';
    }
}

void write_grid_binary(std::ostream& os, const LatticeBox& box, int n, int n_e, double t,
                       const std::vector<std::uint8_t>& grid) {
  char header[32] = {'L', 'R', 'X', '1'};
  const std::uint32_t vals[5] = {static_cast<std::uint32_t>(box.dim()), static_cast<std::uint32_t>(box.half_width()),
                                 static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(n_e), 0u};
  std::memcpy(header + 4, vals, sizeof vals);
  std::memcpy(header + 24, &t, sizeof t);
  os.write(header, 32);
  os.write(reinterpret_cast<const char*>(grid.data()), static_cast<std::streamsize>(grid.size()));
}

MartingaleStat martingale_residual(const std::vector<TrajectoryRecord>& ensemble, const std::string& name, double t) {
  if (ensemble.empty()) throw Error(ErrorCode::MismatchedEnsemble, "empty ensemble");
  std::vector<double> vals;
  for (const auto& rec : ensemble) {
    auto it = std::find(rec.names.begin(), rec.names.end(), name);
    if (it == rec.names.end()) throw Error(ErrorCode::MismatchedEnsemble, "functional not registered: " + name);
    const std::size_t f = static_cast<std::size_t>(it - rec.names.begin());
    if (t == 0.0) {
      vals.push_back(0.0);
      continue;
    }
    if (rec.integrals.empty()) throw Error(ErrorCode::MismatchedEnsemble, "integral term not tracked");
    std::size_t k = rec.times.size();
    for (std::size_t i = 0; i < rec.times.size(); ++i)
      if (std::abs(rec.times[i] - t) <= 1e-12 * std::max(1.0, t)) k = i;
    if (k == rec.times.size()) throw Error(ErrorCode::MismatchedEnsemble, "time not sampled in every record");
    vals.push_back(rec.pairings[k][f] - rec.initial_pairings[f] - rec.integrals[k][f]);
  }
  const double m = static_cast<double>(vals.size());
  double mean = 0.0;
  for (double v : vals) mean += v;
  mean /= m;
  double var = 0.0;
  for (double v : vals) var += (v - mean) * (v - mean);
  var = vals.size() > 1 ? var / (m - 1) : 0.0;
  return {mean, std::sqrt(var / m), vals.size()};
}

// ---------------------------------------------------------------------------
// Exact small-system oracles

StateEnumerator::StateEnumerator(const LatticeBox& box, int n_e) : box_(box), n_e_(n_e), count_(1) {
  for (std::size_t i = 0; i < box.size(); ++i) {
    if (count_ > (std::size_t{1} << 40) / static_cast<std::size_t>(n_e + 1))
      throw Error(ErrorCode::StateSpaceTooLarge, "state space too large to enumerate");
    count_ *= static_cast<std::size_t>(n_e + 1);
  }
}

std::size_t StateEnumerator::index(const Configuration& eta) const {
  std::size_t idx = 0;
  for (std::size_t i = box_.size(); i-- > 0;) idx = idx * static_cast<std::size_t>(n_e_ + 1) + eta[i];
  return idx;
}

Configuration StateEnumerator::state(std::size_t idx) const {
  std::vector<std::uint8_t> occ(box_.size());
  for (std::size_t i = 0; i < box_.size(); ++i) {
    occ[i] = static_cast<std::uint8_t>(idx % static_cast<std::size_t>(n_e_ + 1));
    idx /= static_cast<std::size_t>(n_e_ + 1);
  }
  return Configuration(box_, n_e_, std::move(occ));
}

std::vector<double> GeneratorMatrix::apply(const std::vector<double>& f) const {
  std::vector<double> out(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    double s = diag[i] * f[i];
    for (const auto& [j, q] : rows[i]) s += q * f[j];
    out[i] = s;
  }
  return out;
}

std::vector<double> GeneratorMatrix::left_apply(const std::vector<double>& mu) const {
  std::vector<double> out(dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) {
    out[i] += mu[i] * diag[i];
    for (const auto& [j, q] : rows[i]) out[j] += mu[i] * q;
  }
  return out;
}

double GeneratorMatrix::rate(std::size_t i, std::size_t j) const {
  if (i == j) return diag[i];
  double s = 0.0;
  for (const auto& [k, q] : rows[i])
    if (k == j) s += q;
  return s;
}

namespace {
constexpr std::size_t kMaxStates = std::size_t{1} << 20;
}

GeneratorMatrix generator_matrix(const ModelSpec& spec, const JumpKernel& kernel, const LatticeBox& box, int n) {
  StateEnumerator en(box, spec.n_e);
  if (en.count() > kMaxStates) throw Error(ErrorCode::StateSpaceTooLarge, "more than 2^20 states");
  GeneratorMatrix Q;
  Q.dim = en.count();
  Q.rows.resize(Q.dim);
  Q.diag.assign(Q.dim, 0.0);
  const std::size_t S = box.size();
  for (std::size_t s = 0; s < Q.dim; ++s) {
    Configuration eta = en.state(s);
    for (std::size_t ix = 0; ix < S; ++ix) {
      if (eta[ix] == 0) continue;
      for (std::size_t iy = 0; iy < S; ++iy) {
        if (iy == ix || eta[iy] == spec.n_e) continue;
        const double r = directed_rate(eta, box.site(ix), box.site(iy), spec, kernel, n);
        if (r == 0.0) continue;
        jump_in_place(eta, ix, iy);
        const std::size_t t = en.index(eta);
        jump_in_place(eta, iy, ix);
        Q.rows[s].push_back({t, r});
        Q.diag[s] -= r;
      }
    }
  }
  return Q;
}

std::vector<double> product_measure_weights(const StateEnumerator& en, double beta) {
  std::vector<double> w(en.count());
  for (std::size_t s = 0; s < en.count(); ++s) {
    const Configuration eta = en.state(s);
    const int N = eta.n_e();
    double p = 1.0;
    for (std::size_t i = 0; i < eta.box().size(); ++i) {
      const int k = eta[i];
      double c = 1.0;
      for (int j = 1; j <= k; ++j) c = c * (N - k + j) / j;
      p *= c * std::pow(beta, k) * std::pow(1.0 - beta, N - k);
    }
    w[s] = p;
  }
  return w;
}

double stationarity_residual(const GeneratorMatrix& Q, const std::vector<double>& nu) {
  const auto r = Q.left_apply(nu);
  double m = 0.0;
  for (double v : r) m = std::max(m, std::abs(v));
  return m;
}

DirichletResult dirichlet_form(const std::vector<double>& f, double beta, const ModelSpec& spec,
                               const JumpKernel& kernel, const LatticeBox& box, int n) {
  StateEnumerator en(box, spec.n_e);
  if (en.count() > kMaxStates) throw Error(ErrorCode::StateSpaceTooLarge, "more than 2^20 states");
  if (f.size() != en.count()) throw Error(ErrorCode::PreconditionViolated, "function size mismatch");
  const auto nu = product_measure_weights(en, beta);
  const std::size_t S = box.size();
  const double inv2n = 1.0 / (2.0 * spec.n_e);
  DirichletResult res;
  // I_{x,y} for every ordered pair, accumulated over states.
  for (std::size_t ix = 0; ix < S; ++ix)
    for (std::size_t iy = 0; iy < S; ++iy) {
      if (ix == iy) continue;
      const Site x = box.site(ix), y = box.site(iy);
      const double p = kernel.p(y - x);
      if (p == 0.0) continue;
      double Ixy = 0.0, Iyx = 0.0;
      for (std::size_t s = 0; s < en.count(); ++s) {
        Configuration eta = en.state(s);
        for (int dir = 0; dir < 2; ++dir) {
          const std::size_t a_ = dir ? iy : ix, b_ = dir ? ix : iy;
          const long a = rate_a(eta, a_, b_);
          if (a == 0) continue;
          const double c = jump_constraint(eta, box.site(a_), box.site(b_), spec, n);
          jump_in_place(eta, a_, b_);
          const double df = f[en.index(eta)] - f[s];
          jump_in_place(eta, b_, a_);
          (dir ? Iyx : Ixy) += inv2n * nu[s] * a * c * df * df;
        }
      }
      const double term = p * (Ixy + Iyx);
      (classify_bond(x, y, spec.d) == BondClass::Slow ? res.slow : res.fast) += term;
    }
  res.total = res.fast + spec.alpha.value(n) * res.slow;
  const auto Q = generator_matrix(spec, kernel, box, n);
  const auto Qf = Q.apply(f);
  double g = 0.0;
  for (std::size_t s = 0; s < en.count(); ++s) g -= nu[s] * f[s] * Qf[s];
  res.generator = g;
  res.residual = std::abs(g - 0.5 * res.total);
  return res;
}

}  // namespace lrex
