#include "lrex/pde.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "json.hpp"
#include "lrex/error.hpp"

namespace lrex {

const char* to_string(BarrierCondition b) {
  switch (b) {
    case BarrierCondition::Transmission:
      return "transmission";
    case BarrierCondition::None:
      return "none";
    case BarrierCondition::Neumann:
      return "neumann";
    case BarrierCondition::LimitedTransmission:
      return "limited-transmission";
  }
  return "?";
}

double Regime::slow_weight(int n) const {
  if (barrier == BarrierCondition::LimitedTransmission) return alpha.value(n);
  return kappa;
}

double alpha_r_limit(const AlphaSeq& a, double gamma) {
  const double inf = std::numeric_limits<double>::infinity();
  if (a.kind == AlphaSeq::Kind::Constant || a.beta == 0.0 || a.a == 0.0) {
    if (a.a == 0.0) return 0.0;
    return gamma < 1.0 ? a.a : inf;
  }
  if (a.beta < 0.0) return inf;
  if (gamma < 1.0 || gamma == 1.0) return 0.0;
  const double e = gamma - 1.0 - a.beta;
  if (std::abs(e) < 1e-12) return a.a;
  return e < 0.0 ? 0.0 : inf;
}

Regime regime(const AlphaSeq& alpha, double gamma) {
  if (!(gamma > 0.0 && gamma < 2.0)) throw Error(ErrorCode::InvalidGamma, "gamma must lie in (0,2)");
  if (!(alpha.a >= 0.0)) throw Error(ErrorCode::InvalidSpec, "alpha must be non-negative");
  Regime r;
  r.alpha = alpha;
  const double lim = alpha.limit();
  if (std::isinf(lim)) throw Error(ErrorCode::UnclassifiedRegime, "alpha_n diverges");
  if (lim == 1.0) {
    r.kappa = 1.0;
    r.barrier = BarrierCondition::None;
    r.note = "alpha = 1: no barrier";
  } else if (lim > 0.0) {
    r.kappa = lim;
    r.barrier = BarrierCondition::Transmission;
    r.note = "alpha in (0,inf), alpha != 1: transmission with kappa = alpha";
  } else {
    const double ar = alpha_r_limit(alpha, gamma);
    r.kappa = 0.0;
    if (ar == 0.0) {
      r.barrier = BarrierCondition::Neumann;
      r.note = "alpha = 0 and alpha_n r_n -> 0: fractional Neumann condition";
    } else if (gamma >= 1.0) {
      r.barrier = BarrierCondition::LimitedTransmission;
      r.note = "alpha = 0 and alpha_n r_n -> " + std::string(std::isinf(ar) ? "inf" : std::to_string(ar)) +
               ": limited transmission";
      if (gamma > 1.0) r.note += "; uniqueness of weak solutions is open for gamma in (1,2)";
    } else {
      throw Error(ErrorCode::UnclassifiedRegime, "alpha = 0, gamma < 1 with non-vanishing alpha_n r_n");
    }
  }
  return r;
}

double DensityTrajectory::pairing(std::size_t k, const TestFunction& G) const {
  double s = 0.0;
  for (std::size_t i = 0; i < box.size(); ++i) s += fields[k][i] * G(node(i));
  return s / std::pow(static_cast<double>(n), box.dim());
}

double DensityTrajectory::max_mass_drift() const {
  double m = 0.0;
  for (double v : mass) m = std::max(m, std::abs(v - mass.front()) / std::max(std::abs(mass.front()), 1e-300));
  return m;
}

DensityTrajectory solve(const std::function<double(const Point&)>& g, const SeriesF& F, const Regime& reg,
                        double gamma, double T, int n_grid, const Window& window, const SolveOptions& opts) {
  if (!(T >= 0.0)) throw Error(ErrorCode::PreconditionViolated, "T must be >= 0");
  if (n_grid < 1 || !(window.half_width > 0.0)) throw Error(ErrorCode::PreconditionViolated, "bad grid");
  DensityTrajectory tr;
  tr.op = opts.op ? *opts.op : OperatorSpec::unbounded(gamma, window.d);
  if (tr.op.gamma != gamma) throw Error(ErrorCode::InvalidSpec, "operator gamma differs from gamma");
  tr.box = LatticeBox(window.d, static_cast<int>(std::ceil(window.half_width * n_grid)));
  tr.n = n_grid;
  tr.n_e = F.n_e;
  tr.gamma = gamma;
  tr.reg = reg;
  tr.slow_weight = reg.slow_weight(n_grid);
  tr.F = F;
  tr.tail_estimate = F.tail_estimate();
  tr.tol = opts.tol;
  tr.bound_tol = opts.bound_tol;

  const std::size_t S = tr.box.size();
  const double Ne = F.n_e;
  std::vector<double> rho(S);
  for (std::size_t i = 0; i < S; ++i) {
    rho[i] = g(tr.node(i));
    if (!(rho[i] >= 0.0 && rho[i] <= Ne)) throw Error(ErrorCode::InvalidProfile, "initial profile outside [0, N_e]");
  }
  std::vector<double> samples = opts.sample_times.empty() ? std::vector<double>{T} : opts.sample_times;
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (samples[i] < 0.0 || samples[i] > T || (i > 0 && !(samples[i] > samples[i - 1])))
      throw Error(ErrorCode::PreconditionViolated, "sample times must increase within [0, T]");

  Stencil st(tr.box, n_grid, tr.op);
  const double ws = tr.slow_weight;
  const double nd = std::pow(static_cast<double>(n_grid), window.d);
  auto mass = [&](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / nd;
  };
  std::vector<double> Fv(S);
  auto rhs = [&](const std::vector<double>& v) {
    for (std::size_t i = 0; i < S; ++i) Fv[i] = F.value(v[i]);
    return st.apply(Fv, 1.0, ws);
  };
  auto heun = [&](const std::vector<double>& v, double h, const std::vector<double>& k1) {
    std::vector<double> mid(S);
    for (std::size_t i = 0; i < S; ++i) mid[i] = v[i] + h * k1[i];
    const auto k2 = rhs(mid);
    std::vector<double> out(S);
    for (std::size_t i = 0; i < S; ++i) out[i] = v[i] + 0.5 * h * (k1[i] + k2[i]);
    return out;
  };
  const double rate = st.max_row_sum(1.0, ws) * std::max(F.sup_derivative(), 1e-300);
  const double dt_cap = rate > 0.0 ? 0.9 / rate : std::numeric_limits<double>::infinity();

  double t = 0.0;
  double dt = std::min(dt_cap, T > 0 ? T : 1.0);
  std::size_t next = 0;
  auto record = [&](double ts) {
    tr.times.push_back(ts);
    tr.fields.push_back(rho);
    tr.mass.push_back(mass(rho));
  };
  while (next < samples.size() && samples[next] <= 0.0) record(samples[next++]);
  while (next < samples.size()) {
    const double target = samples[next];
    double h = std::min({dt, dt_cap, target - t});
    const auto k0 = rhs(rho);
    const auto full = heun(rho, h, k0);
    const auto mid = heun(rho, 0.5 * h, k0);
    const auto half = heun(mid, 0.5 * h, rhs(mid));
    double err = 0.0;
    for (std::size_t i = 0; i < S; ++i) err = std::max(err, std::abs(full[i] - half[i]));
    if (err > opts.tol) {
      ++tr.rejected;
      dt = h * std::max(0.2, 0.9 * std::cbrt(opts.tol / err));
      if (dt < opts.dt_min) throw Error(ErrorCode::StepUnderflow, "time step below minimum");
      continue;
    }
    for (std::size_t i = 0; i < S; ++i)
      if (half[i] < -opts.bound_tol || half[i] > Ne + opts.bound_tol)
        throw Error(ErrorCode::BoundViolation, "density left [0, N_e]");
    rho = half;
    ++tr.steps;
    const bool hit = h == target - t;
    t = hit ? target : t + h;
    const double grow = err > 0.0 ? 0.9 * std::cbrt(opts.tol / err) : 2.0;
    dt = std::max(dt, h) * std::min(2.0, std::max(0.2, grow));
    if (hit) record(samples[next++]);
  }
  return tr;
}

double l1_difference(const DensityTrajectory& a, std::size_t ka, const DensityTrajectory& b, std::size_t kb) {
  if (b.n % a.n != 0 || a.box.dim() != b.box.dim())
    throw Error(ErrorCode::PreconditionViolated, "grids are not nested");
  const int r = b.n / a.n;
  const int d = a.box.dim();
  double s = 0.0;
  for (std::size_t i = 0; i < a.box.size(); ++i) {
    const Site x = a.box.site(i);
    const Site y = r * x;
    if (!b.box.contains(y)) continue;
    s += std::abs(a.fields[ka][i] - b.fields[kb][b.box.index(y)]);
  }
  return s / std::pow(static_cast<double>(a.n), d);
}

double weak_residual(const DensityTrajectory& traj, const SpaceTimeTest& G,
                     const std::function<double(const Point&)>& g, const Regime& reg, double t) {
  std::size_t kt = traj.times.size();
  for (std::size_t k = 0; k < traj.times.size(); ++k)
    if (std::abs(traj.times[k] - t) <= 1e-12 * std::max(1.0, t)) kt = k;
  if (kt == traj.times.size()) throw Error(ErrorCode::PreconditionViolated, "t is not a stored sample time");
  if (traj.times.front() != 0.0) throw Error(ErrorCode::PreconditionViolated, "trajectory must start at t = 0");
  const std::size_t S = traj.box.size();
  const int d = traj.box.dim();
  const double nd = std::pow(static_cast<double>(traj.n), d);
  std::vector<double> gv(S), lg(S), g0(S);
  bool zero = true;
  for (std::size_t i = 0; i < S; ++i) {
    gv[i] = G.g(traj.node(i));
    g0[i] = g(traj.node(i));
    if (gv[i] != 0.0) zero = false;
  }
  if (zero && G.g.extent() < 1e200 && G.g.sup_abs() == 0.0) return 0.0;
  OperatorSpec op = traj.op;
  op.kappa = reg.kappa;
  for (std::size_t i = 0; i < S; ++i) lg[i] = continuous_fraclap(G.g, traj.node(i), op, Region::Distorted).value;
  auto dot = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < S; ++i) s += a[i] * b[i];
    return s / nd;
  };
  // Beyond the window the density is taken equal to its mean on the outer shell, and the
  // integral of L G over the exterior is minus its integral over the window.
  std::vector<char> shell(S, 0);
  const int L = traj.box.half_width();
  const int w = std::max(1, static_cast<int>(std::ceil(0.1 * L)));
  std::size_t n_shell = 0;
  for (std::size_t i = 0; i < S; ++i) {
    const Site x = traj.box.site(i);
    for (int j = 0; j < d; ++j)
      if (x[j] < -L + w || x[j] >= L - w) shell[i] = 1;
    n_shell += shell[i];
  }
  double lg_window = 0.0;
  for (double v : lg) lg_window += v;
  lg_window /= nd;
  std::vector<double> fr(S);
  auto integrand = [&](std::size_t k) {
    const auto& rho = traj.fields[k];
    double edge = 0.0;
    for (std::size_t i = 0; i < S; ++i) {
      fr[i] = traj.F.value(rho[i]);
      if (shell[i]) edge += rho[i];
    }
    edge /= static_cast<double>(n_shell);
    const double s = traj.times[k];
    return dot(rho, gv) * G.a_dot(s) + (dot(fr, lg) - traj.F.value(edge) * lg_window) * G.a(s);
  };
  double integral = 0.0;
  double prev = integrand(0);
  for (std::size_t k = 1; k <= kt; ++k) {
    const double cur = integrand(k);
    integral += 0.5 * (traj.times[k] - traj.times[k - 1]) * (prev + cur);
    prev = cur;
  }
  return dot(traj.fields[kt], gv) * G.a(t) - dot(g0, gv) * G.a(0.0) - integral;
}

double barrier_derivative_estimate(const DensityTrajectory& traj, std::size_t k, int side) {
  const int d = traj.box.dim();
  const auto& rho = traj.fields.at(k);
  double acc = 0.0;
  int count = 0;
  const double r = 1.5 / traj.n;
  for (std::size_t i = 0; i < traj.box.size(); ++i) {
    Site x = traj.box.site(i);
    if (x[d - 1] != (side > 0 ? 1 : -2)) continue;
    Site y = x + unit(d - 1);
    if (!traj.box.contains(y)) continue;
    const double deriv = (traj.F.value(rho[traj.box.index(y)]) - traj.F.value(rho[i])) * traj.n;
    acc += std::pow(r, 2 - traj.gamma) * deriv;
    ++count;
  }
  return count ? acc / count : 0.0;
}

void write_density_csv(std::ostream& os, const DensityTrajectory& traj) {
  const int d = traj.box.dim();
  os << "t";
  for (int j = 1; j <= d; ++j) os << ",x" << j;
  os << ",rho\n";
  char buf[64];
  for (std::size_t k = 0; k < traj.times.size(); ++k)
    for (std::size_t i = 0; i < traj.box.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", traj.times[k]);
      os << buf;
      const Point u = traj.node(i);
      for (int j = 0; j < d; ++j) {
        std::snprintf(buf, sizeof buf, ",%.17g", u[j]);
        os << buf;
      }
      std::snprintf(buf, sizeof buf, ",%.17g\n", traj.fields[k][i]);
      os << buf;
    }
}

std::string manifest_json(const DensityTrajectory& traj) {
  nlohmann::json j;
  j["regime"] = {{"kappa", traj.reg.kappa},
                 {"barrier", to_string(traj.reg.barrier)},
                 {"alpha", traj.reg.alpha.describe()},
                 {"note", traj.reg.note},
                 {"slow_weight", traj.slow_weight}};
  j["gamma"] = traj.gamma;
  j["d"] = traj.box.dim();
  j["n_grid"] = traj.n;
  j["half_width_sites"] = traj.box.half_width();
  j["n_e"] = traj.n_e;
  j["c_gamma"] = traj.op.c_gamma;
  j["kernel_radius"] = traj.op.radius;
  j["series_tail_estimate"] = traj.tail_estimate;
  j["tolerances"] = {{"local_error", traj.tol}, {"bound", traj.bound_tol}};
  j["steps"] = traj.steps;
  j["rejected_steps"] = traj.rejected;
  j["times"] = traj.times;
  j["mass"] = traj.mass;
  j["max_relative_mass_drift"] = traj.max_mass_drift();
  if (traj.reg.kappa == 0.0 && !traj.times.empty()) {
    j["barrier_derivative_right"] = barrier_derivative_estimate(traj, traj.times.size() - 1, 1);
    j["barrier_derivative_left"] = barrier_derivative_estimate(traj, traj.times.size() - 1, -1);
  }
  return j.dump(2);
}

}  // namespace lrex
