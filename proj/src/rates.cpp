#include "lrex/rates.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace lrex {

double AlphaSeq::value(double n) const {
  return kind == Kind::Constant ? a : a * std::pow(n, -beta);
}

double AlphaSeq::limit() const {
  if (kind == Kind::Constant || beta == 0.0) return a;
  if (beta > 0.0) return 0.0;
  return a == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

std::string AlphaSeq::describe() const {
  std::ostringstream os;
  if (kind == Kind::Constant)
    os << "const:" << a;
  else
    os << "power:" << a << "," << beta;
  return os.str();
}

int EllSeq::value(int n) const {
  if (kind == Kind::Fixed) return fixed;
  return std::max(1, static_cast<int>(std::floor(std::pow(static_cast<double>(n), delta) + 1e-9)));
}

std::string EllSeq::describe() const {
  std::ostringstream os;
  if (kind == Kind::Fixed)
    os << "fixed:" << fixed;
  else
    os << "power:" << delta;
  return os.str();
}

int ModelSpec::stored_k() const {
  return static_cast<int>(std::max(b_plus.size(), b_minus.size()));
}

int ModelSpec::ell_at(int n) const { return std::min(ell.value(n), stored_k()); }

int ModelSpec::max_active_k(int n) const {
  for (int k = ell_at(n); k >= 1; --k)
    if (bp(k) != 0.0 || bm(k) != 0.0) return k;
  return 0;
}

void ModelSpec::validate() const {
  if (!(gamma > 0.0 && gamma < 2.0)) throw Error(ErrorCode::InvalidGamma, "gamma must lie in (0,2)");
  if (d < 1 || d > kMaxDim) throw Error(ErrorCode::InvalidSpec, "dimension out of range");
  if (n_e < 1 || n_e > 255) throw Error(ErrorCode::InvalidSpec, "N_e must be in 1..255");
  for (double b : b_plus)
    if (!std::isfinite(b)) throw Error(ErrorCode::InvalidSpec, "non-finite coefficient");
  for (double b : b_minus)
    if (!std::isfinite(b)) throw Error(ErrorCode::InvalidSpec, "non-finite coefficient");
  if (!std::isfinite(b0)) throw Error(ErrorCode::InvalidSpec, "non-finite b0");
  if (cert.b_plus < 0.0 || cert.b_minus < 0.0)
    throw Error(ErrorCode::InvalidSpec, "lower-bound coefficients must be non-negative");
  if (cert.b_plus == 0.0 && cert.b_minus == 0.0)
    throw Error(ErrorCode::InvalidSpec, "lower-bound coefficients are both zero");
  if (cert.k_plus < 1 || cert.k_minus < 1) throw Error(ErrorCode::InvalidSpec, "lower-bound k must be >= 1");
  if (cert.b_plus == 0.0 && cert.k_plus != 1)
    throw Error(ErrorCode::InvalidSpec, "k_plus must be 1 when b_plus is zero");
  if (cert.b_minus == 0.0 && cert.k_minus != 1)
    throw Error(ErrorCode::InvalidSpec, "k_minus must be 1 when b_minus is zero");
  if (ell.kind == EllSeq::Kind::Fixed && ell.fixed < 1) throw Error(ErrorCode::InvalidSpec, "ell must be >= 1");
  if (ell.kind == EllSeq::Kind::PowerLaw && !(ell.delta >= 0.0))
    throw Error(ErrorCode::InvalidSpec, "ell exponent must be >= 0");
  if (!(alpha.a >= 0.0)) throw Error(ErrorCode::InvalidSpec, "slow factor must be >= 0");
}

PowerCoeffs power_series_coeffs(double m, int K, int n_e) {
  if (!(m > 0.0 && m < 2.0) || m == 1.0)
    throw Error(ErrorCode::InvalidExponent, "exponent must lie in (0,1) or (1,2)");
  if (K < 1) throw Error(ErrorCode::InvalidSpec, "K must be >= 1");
  PowerCoeffs pc;
  pc.b0 = std::pow(static_cast<double>(n_e), m);
  pc.b_minus.resize(K);
  double binom = 1.0;  // binom(m, 0)
  double sign = 1.0;   // (-1)^k
  for (int k = 1; k <= K; ++k) {
    binom *= (m - (k - 1)) / k;
    sign = -sign;
    pc.b_minus[k - 1] = -sign * std::pow(static_cast<double>(n_e), m - k) * binom;
  }
  return pc;
}

namespace {

ModelSpec load_custom(const std::string& path, ModelSpec spec) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open coefficient file: " + path);
  std::string line;
  int max_k = 0;
  while (std::getline(in, line)) {
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    if (first == "b0") {
      if (!(ls >> spec.b0)) throw Error(ErrorCode::ConfigError, "bad b0 line in " + path);
      continue;
    }
    int k = 0;
    double bp = 0, bm = 0;
    try {
      k = std::stoi(first);
    } catch (...) {
      throw Error(ErrorCode::ConfigError, "bad coefficient line in " + path + ": " + line);
    }
    if (k < 1 || !(ls >> bp >> bm)) throw Error(ErrorCode::ConfigError, "bad coefficient line in " + path + ": " + line);
    if (k > static_cast<int>(spec.b_plus.size())) {
      spec.b_plus.resize(k, 0.0);
      spec.b_minus.resize(k, 0.0);
    }
    spec.b_plus[k - 1] = bp;
    spec.b_minus[k - 1] = bm;
    max_k = std::max(max_k, k);
  }
  if (max_k == 0) throw Error(ErrorCode::ConfigError, "no coefficients in " + path);
  spec.ell = EllSeq::fixed_at(max_k);
  // Certificate from the lowest positive coefficient on each side.
  for (int k = 1; k <= max_k; ++k)
    if (spec.bp(k) > 0.0) {
      spec.cert.b_plus = spec.bp(k);
      spec.cert.k_plus = k;
      break;
    }
  for (int k = 1; k <= max_k; ++k)
    if (spec.bm(k) > 0.0) {
      spec.cert.b_minus = spec.bm(k);
      spec.cert.k_minus = k;
      break;
    }
  return spec;
}

}  // namespace

ModelSpec make_preset(const std::string& preset, double gamma, int d, int n_e) {
  ModelSpec s;
  s.gamma = gamma;
  s.d = d;
  s.n_e = n_e;
  s.name = preset;
  const auto colon = preset.find(':');
  const std::string head = preset.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : preset.substr(colon + 1);
  if (head == "sep") {
    s.b_plus = {1.0};
    s.ell = EllSeq::fixed_at(1);
    s.cert = {1.0, 0.0, 1, 1};
  } else if (head == "porous") {
    int k = 0;
    try {
      k = std::stoi(arg);
    } catch (...) {
      throw Error(ErrorCode::ConfigError, "porous preset needs an integer exponent: " + preset);
    }
    if (k < 1) throw Error(ErrorCode::ConfigError, "porous exponent must be >= 1");
    s.b_plus.assign(k, 0.0);
    s.b_plus[k - 1] = 1.0;
    s.ell = EllSeq::fixed_at(k);
    s.cert = {1.0, 0.0, k, 1};
  } else if (head == "power") {
    double m = 0;
    try {
      m = std::stod(arg);
    } catch (...) {
      throw Error(ErrorCode::ConfigError, "power preset needs an exponent: " + preset);
    }
    if (m == std::floor(m) && m >= 1.0) return make_preset("porous:" + std::to_string(static_cast<int>(m)), gamma, d, n_e);
    auto pc = power_series_coeffs(m, 200, n_e);
    s.b0 = pc.b0;
    s.b_minus = pc.b_minus;
    s.b_plus.assign(pc.b_minus.size(), 0.0);
    s.ell = EllSeq::fixed_at(8);
    s.cert = {0.0, pc.b_minus[0], 1, 1};
    s.series_truncated = true;
  } else if (head == "custom") {
    s = load_custom(arg, s);
  } else {
    throw Error(ErrorCode::ConfigError, "unknown preset: " + preset);
  }
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------
// Kernel

double lattice_zeta(int d, double s) {
  if (!(s > d)) throw Error(ErrorCode::InvalidGamma, "lattice sum diverges for s <= d");
  auto theta_m1 = [](double t) {
    double acc = 0.0;
    for (int k = 1; k < 12; ++k) {
      const double term = std::exp(-M_PI * k * k * t);
      acc += term;
      if (term < 1e-300) break;
    }
    return 2.0 * acc;  // theta(t) - 1
  };
  auto integrand = [&](double t) {
    const double th = 1.0 + theta_m1(t);
    const double thd_m1 = std::pow(th, d) - 1.0;
    return (std::pow(t, s / 2 - 1) + std::pow(t, (d - s) / 2 - 1)) * thd_m1;
  };
  double err = 0;
  const double I = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 1.0, 80.0, 15, 1e-15, &err);
  const double pref = std::pow(M_PI, s / 2) / boost::math::tgamma(s / 2);
  return pref * (I + 2.0 / (s - d) - 2.0 / s);
}

JumpKernel::JumpKernel(double gamma, int d, int R, Mode mode) : gamma_(gamma), d_(d), R_(R), mode_(mode) {
  if (!(gamma > 0.0 && gamma < 2.0)) throw Error(ErrorCode::InvalidGamma, "gamma must lie in (0,2)");
  if (d < 1 || d > kMaxDim) throw Error(ErrorCode::InvalidSpec, "dimension out of range");
  if (R < 1) throw Error(ErrorCode::InvalidSpec, "kernel radius must be >= 1");
  const double s = d + gamma;
  const long R2 = static_cast<long>(R) * R;
  // Enumerate the cube [-R,R]^d lexicographically.
  Site z;
  for (int i = 0; i < d; ++i) z[i] = -R;
  std::vector<double> w;
  double sum = 0.0;
  while (true) {
    long n2 = 0;
    for (int i = 0; i < d; ++i) n2 += static_cast<long>(z[i]) * z[i];
    if (n2 > 0 && n2 <= R2) {
      const double v = std::pow(static_cast<double>(n2), -s / 2);
      offsets_.push_back(z);
      w.push_back(v);
    }
    int i = d - 1;
    while (i >= 0 && z[i] == R) z[i--] = -R;
    if (i < 0) break;
    ++z[i];
  }
  // Sum small terms first for accuracy.
  std::vector<double> sorted = w;
  std::sort(sorted.begin(), sorted.end());
  for (double v : sorted) sum += v;
  c_ = mode == Mode::TruncatedNormalized ? 1.0 / sum : 1.0 / lattice_zeta(d, s);
  probs_.resize(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) probs_[i] = c_ * w[i];
  mass_ = mode == Mode::TruncatedNormalized ? 1.0 : c_ * sum;

  // Vose alias table.
  const std::size_t m = w.size();
  alias_prob_.assign(m, 0.0);
  alias_.assign(m, 0);
  std::vector<double> scaled(m);
  std::vector<std::uint32_t> small, large;
  for (std::size_t i = 0; i < m; ++i) {
    scaled[i] = w[i] / sum * static_cast<double>(m);
    (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
  }
  while (!small.empty() && !large.empty()) {
    const auto l = small.back();
    small.pop_back();
    const auto g = large.back();
    alias_prob_[l] = scaled[l];
    alias_[l] = g;
    scaled[g] = (scaled[g] + scaled[l]) - 1.0;
    if (scaled[g] < 1.0) {
      large.pop_back();
      small.push_back(g);
    }
  }
  for (auto g : large) alias_prob_[g] = 1.0, alias_[g] = g;
  for (auto l : small) alias_prob_[l] = 1.0, alias_[l] = l;

  std::size_t side = static_cast<std::size_t>(2 * R + 1);
  std::size_t cells = 1;
  for (int i = 0; i < d; ++i) cells *= side;
  if (cells <= (std::size_t{1} << 24)) {
    dense_side_ = side;
    dense_.assign(cells, 0.0);
    for (std::size_t i = 0; i < offsets_.size(); ++i) {
      std::size_t idx = 0;
      for (int j = 0; j < d; ++j) idx = idx * side + static_cast<std::size_t>(offsets_[i][j] + R);
      dense_[idx] = probs_[i];
    }
  }
}

double JumpKernel::p(const Site& z) const {
  long n2 = 0;
  for (int i = 0; i < d_; ++i) {
    if (z[i] > R_ || z[i] < -R_) return 0.0;
    n2 += static_cast<long>(z[i]) * z[i];
  }
  if (dense_side_ != 0) {
    std::size_t idx = 0;
    for (int j = 0; j < d_; ++j) idx = idx * dense_side_ + static_cast<std::size_t>(z[j] + R_);
    return dense_[idx];
  }
  if (n2 == 0 || n2 > static_cast<long>(R_) * R_) return 0.0;
  return c_ * std::pow(static_cast<double>(n2), -(d_ + gamma_) / 2);
}

std::size_t JumpKernel::sample(Rng& rng) const {
  const std::size_t m = offsets_.size();
  const std::size_t i = rng.below(m);
  return rng.uniform() < alias_prob_[i] ? i : alias_[i];
}

JumpKernel build_kernel(double gamma, int d, int R, JumpKernel::Mode mode) {
  return JumpKernel(gamma, d, R, mode);
}

// ---------------------------------------------------------------------------
// Constraints

long rate_a(const Configuration& eta, const Site& x, const Site& y) {
  return static_cast<long>(eta.at(x)) * (eta.n_e() - eta.at(y));
}

namespace {

struct Reader {
  const Configuration& eta;
  bool tilde;
  WindowPolicy policy;

  long operator()(const Site& s) const {
    const auto& box = eta.box();
    if (!box.contains(s)) {
      if (policy == WindowPolicy::Strict) throw Error(ErrorCode::WindowOutOfBox, "constraint window leaves the box");
      return 0;
    }
    const int v = eta[box.index(s)];
    return tilde ? eta.n_e() - v : v;
  }
};

// pl[m] = prod_{i=1..m} v(x - i e_j), pr[m] = prod_{i=1..m} v(y + i e_j), m = 0..len-1.
template <class T>
void prefix_products(const Reader& rd, const Site& x, const Site& y, int j, int len, T* pl, T* pr) {
  pl[0] = 1;
  pr[0] = 1;
  const Site e = unit(j);
  Site a = x, b = y;
  for (int m = 1; m < len; ++m) {
    a = a - e;
    b = b + e;
    pl[m] = pl[m - 1] * static_cast<T>(rd(a));
    pr[m] = pr[m - 1] * static_cast<T>(rd(b));
  }
}

template <class T>
T r_from_prefix(const T* pl_x, const T* pr_y, int k) {
  T s = 0;
  for (int l = 1; l <= k; ++l) s += pl_x[k - l] * pr_y[l - 1];
  return s;
}

constexpr int kMaxWindow = 512;

bool nearest_neighbors(const Site& x, const Site& y, int d) {
  int dist1 = 0;
  for (int i = 0; i < d; ++i) dist1 += std::abs(x[i] - y[i]);
  return dist1 == 1;
}

}  // namespace

double constraint_r(const Configuration& eta, const Site& x, const Site& y, int k, int j, bool tilde,
                    WindowPolicy policy) {
  if (k < 1 || k > kMaxWindow) throw Error(ErrorCode::PreconditionViolated, "k out of range");
  if (j < 0 || j >= eta.box().dim()) throw Error(ErrorCode::PreconditionViolated, "axis out of range");
  Reader rd{eta, tilde, policy};
  std::vector<double> pl(k), pr(k);
  prefix_products(rd, x, y, j, k, pl.data(), pr.data());
  return r_from_prefix(pl.data(), pr.data(), k);
}

long constraint_c2_axis(const Configuration& eta, const Site& x, const Site& y, int k, int j, bool tilde,
                        WindowPolicy policy) {
  if (k < 1 || k > kMaxWindow) throw Error(ErrorCode::PreconditionViolated, "k out of range");
  if (j < 0 || j >= eta.box().dim()) throw Error(ErrorCode::PreconditionViolated, "axis out of range");
  Reader rd{eta, tilde, policy};
  std::vector<long> plx(k), pry(k), ply(k), prx(k);
  prefix_products(rd, x, y, j, k, plx.data(), pry.data());
  prefix_products(rd, y, x, j, k, ply.data(), prx.data());
  return r_from_prefix(plx.data(), pry.data(), k) + r_from_prefix(ply.data(), prx.data(), k);
}

double constraint_c(const Configuration& eta, const Site& x, const Site& y, int k, bool tilde,
                    WindowPolicy policy) {
  const int d = eta.box().dim();
  double s = 0.0;
  for (int j = 0; j < d; ++j) {
    Reader rd{eta, tilde, policy};
    std::vector<double> plx(k), pry(k), ply(k), prx(k);
    prefix_products(rd, x, y, j, k, plx.data(), pry.data());
    prefix_products(rd, y, x, j, k, ply.data(), prx.data());
    s += 0.5 * (r_from_prefix(plx.data(), pry.data(), k) + r_from_prefix(ply.data(), prx.data(), k));
  }
  return s / d;
}

double constraint_series(const Configuration& eta, const Site& x, const Site& y, const ModelSpec& spec, int n,
                         WindowPolicy policy) {
  const int d = spec.d;
  const int K = spec.max_active_k(n);
  double s = (classify_bond(x, y, d) == BondClass::Fast && nearest_neighbors(x, y, d)) ? 1.0 : 0.0;
  double acc = spec.bp(1) + spec.bm(1);
  if (K >= 2) {
    if (K > kMaxWindow) throw Error(ErrorCode::PreconditionViolated, "truncation level too large");
    bool any_plus = false, any_minus = false;
    for (int k = 2; k <= K; ++k) {
      any_plus |= spec.bp(k) != 0.0;
      any_minus |= spec.bm(k) != 0.0;
    }
    double plx[kMaxWindow], pry[kMaxWindow], ply[kMaxWindow], prx[kMaxWindow];
    for (int t = 0; t < 2; ++t) {
      const bool tilde = t == 1;
      if ((!tilde && !any_plus) || (tilde && !any_minus)) continue;
      Reader rd{eta, tilde, policy};
      double part = 0.0;
      for (int j = 0; j < d; ++j) {
        prefix_products(rd, x, y, j, K, plx, pry);
        prefix_products(rd, y, x, j, K, ply, prx);
        for (int k = 2; k <= K; ++k) {
          const double b = tilde ? spec.bm(k) : spec.bp(k);
          if (b == 0.0) continue;
          part += b * 0.5 * (r_from_prefix(plx, pry, k) + r_from_prefix(ply, prx, k));
        }
      }
      acc += part / d;
    }
  }
  s += acc;
  if (s < 0.0) {
    if (s < -1e-12 * (1.0 + std::abs(acc))) throw Error(ErrorCode::NegativeRate, "series constraint is negative");
    s = 0.0;
  }
  return s;
}

namespace {

bool windows_touch_endpoints(const Site& x, const Site& y, int d, int K) {
  int axis = -1, diff = 0;
  for (int i = 0; i < d; ++i) {
    if (x[i] != y[i]) {
      if (axis >= 0) return false;
      axis = i;
      diff = std::abs(x[i] - y[i]);
    }
  }
  return axis >= 0 && diff <= K - 1;
}

}  // namespace

double jump_constraint_inplace(Configuration& eta, const Site& x, const Site& y, const ModelSpec& spec, int n) {
  const double c0 = constraint_series(eta, x, y, spec, n, WindowPolicy::ZeroPad);
  const int K = spec.max_active_k(n);
  if (K < 3 || !windows_touch_endpoints(x, y, spec.d, K)) return c0;
  const auto& box = eta.box();
  const std::size_t ix = box.index(x), iy = box.index(y);
  if (eta[ix] == 0 || eta[iy] == eta.n_e()) return c0;
  jump_in_place(eta, ix, iy);
  const double c1 = constraint_series(eta, x, y, spec, n, WindowPolicy::ZeroPad);
  jump_in_place(eta, iy, ix);
  return 0.5 * (c0 + c1);
}

double jump_constraint(const Configuration& eta, const Site& x, const Site& y, const ModelSpec& spec, int n) {
  Configuration tmp = eta;
  return jump_constraint_inplace(tmp, x, y, spec, n);
}

double slow_factor(const Site& x, const Site& y, const ModelSpec& spec, int n) {
  return classify_bond(x, y, spec.d) == BondClass::Slow ? spec.alpha.value(n) : 1.0;
}

double directed_rate(const Configuration& eta, const Site& x, const Site& y, const ModelSpec& spec,
                     const JumpKernel& kernel, int n) {
  const long a = rate_a(eta, x, y);
  if (a == 0) return 0.0;
  const double p = kernel.p(y - x);
  if (p == 0.0) return 0.0;
  return p * slow_factor(x, y, spec, n) * jump_constraint(eta, x, y, spec, n) * a / eta.n_e();
}

double exchange_rate(const Configuration& eta, const Site& x, const Site& y, const ModelSpec& spec,
                     const JumpKernel& kernel, int n) {
  if (x == y) throw Error(ErrorCode::PreconditionViolated, "x == y");
  return 0.5 * (directed_rate(eta, x, y, spec, kernel, n) + directed_rate(eta, y, x, spec, kernel, n));
}

// ---------------------------------------------------------------------------
// F series

SeriesF SeriesF::from_spec(const ModelSpec& spec) {
  SeriesF f;
  f.b0 = spec.b0;
  f.b_plus = spec.b_plus;
  f.b_minus = spec.b_minus;
  f.n_e = spec.n_e;
  f.truncated = spec.series_truncated;
  return f;
}

double SeriesF::value(double rho) const {
  const double h = n_e - rho;
  double s = b0, pr = 1.0, ph = 1.0;
  const std::size_t K = std::max(b_plus.size(), b_minus.size());
  for (std::size_t k = 0; k < K; ++k) {
    pr *= rho;
    ph *= h;
    if (k < b_plus.size()) s += b_plus[k] * pr;
    if (k < b_minus.size()) s -= b_minus[k] * ph;
  }
  return s;
}

double SeriesF::derivative(double rho) const {
  const double h = n_e - rho;
  double s = 0.0, pr = 1.0, ph = 1.0;
  const std::size_t K = std::max(b_plus.size(), b_minus.size());
  for (std::size_t k = 0; k < K; ++k) {
    const double kk = static_cast<double>(k + 1);
    if (k < b_plus.size()) s += b_plus[k] * kk * pr;
    if (k < b_minus.size()) s += b_minus[k] * kk * ph;
    pr *= rho;
    ph *= h;
  }
  return s;
}

double SeriesF::f_inf() const {
  double s = 0.0;
  const std::size_t K = std::max(b_plus.size(), b_minus.size());
  for (std::size_t k = 0; k < K; ++k) {
    const double b = (k < b_plus.size() ? std::abs(b_plus[k]) : 0.0) + (k < b_minus.size() ? std::abs(b_minus[k]) : 0.0);
    s += b * std::pow(static_cast<double>(n_e), static_cast<double>(k + 1));
  }
  return s;
}

double SeriesF::f_prime_n(int ell) const {
  double s = 0.0;
  const int K = std::min<int>(ell, static_cast<int>(std::max(b_plus.size(), b_minus.size())));
  for (int k = 1; k <= K; ++k) {
    const double b = (k <= static_cast<int>(b_plus.size()) ? std::abs(b_plus[k - 1]) : 0.0) +
                     (k <= static_cast<int>(b_minus.size()) ? std::abs(b_minus[k - 1]) : 0.0);
    s += b * k * std::pow(static_cast<double>(n_e), k - 1);
  }
  return s;
}

double SeriesF::f_inf_prime() const {
  return f_prime_n(static_cast<int>(std::max(b_plus.size(), b_minus.size())));
}

double SeriesF::tail_estimate() const {
  if (!truncated) return 0.0;
  const int K = static_cast<int>(std::max(b_plus.size(), b_minus.size()));
  if (K < 3) return std::numeric_limits<double>::infinity();
  auto term = [&](int k) {
    const double b = (k <= static_cast<int>(b_plus.size()) ? std::abs(b_plus[k - 1]) : 0.0) +
                     (k <= static_cast<int>(b_minus.size()) ? std::abs(b_minus[k - 1]) : 0.0);
    return b * std::pow(static_cast<double>(n_e), k);
  };
  const double tK = term(K), tK1 = term(K - 1);
  if (tK == 0.0) return 0.0;
  const double p = std::log(tK1 / tK) / std::log(static_cast<double>(K) / (K - 1));
  if (!(p > 1.0)) return std::numeric_limits<double>::infinity();
  return tK * K / (p - 1.0);
}

double SeriesF::sup_derivative() const {
  double m = 0.0;
  for (int i = 0; i <= 2000; ++i) m = std::max(m, std::abs(derivative(n_e * i / 2000.0)));
  return m;
}

double F_eval(double rho, const SeriesF& f) {
  if (!(rho >= 0.0 && rho <= f.n_e)) throw Error(ErrorCode::DomainError, "rho outside [0, N_e]");
  return f.value(rho);
}

double D_eval(double rho, const SeriesF& f) {
  if (!(rho >= 0.0 && rho <= f.n_e)) throw Error(ErrorCode::DomainError, "rho outside [0, N_e]");
  return f.derivative(rho);
}

double r_n_gamma(double n, double gamma) {
  if (gamma < 1.0) return 1.0;
  if (gamma == 1.0) return std::log(n);
  return std::pow(n, gamma - 1.0);
}

// ---------------------------------------------------------------------------
// Hypotheses

namespace {

bool alpha_r_vanishes(const AlphaSeq& a, double gamma) {
  if (a.limit() != 0.0) return false;
  if (a.kind == AlphaSeq::Kind::Constant || a.a == 0.0) return true;
  if (gamma <= 1.0) return a.beta > 0.0;
  return a.beta > gamma - 1.0;
}

struct BondCase {
  Site x, y;
};

}  // namespace

HypothesisReport hypothesis_report(const ModelSpec& spec, const std::vector<int>& n_list, std::uint64_t seed) {
  spec.validate();
  HypothesisReport rep;
  const SeriesF f = SeriesF::from_spec(spec);
  const bool vanish = alpha_r_vanishes(spec.alpha, spec.gamma);
  for (int n : n_list) {
    HypothesisRow row;
    row.n = n;
    row.ell = spec.ell_at(n);
    row.f_prime_n = f.f_prime_n(row.ell);
    row.r_n = r_n_gamma(n, spec.gamma);
    row.tight = row.f_prime_n * row.r_n / n;
    const double an = spec.alpha.value(n);
    row.composite = vanish ? row.f_prime_n * row.r_n * (1.0 / n + an)
                           : row.f_prime_n * (row.r_n + an * std::pow(n, spec.gamma / 2)) / n;
    rep.rows.push_back(row);
  }
  rep.tight_decreasing = rep.composite_decreasing = rep.rows.size() >= 2;
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    if (!(rep.rows[i].tight < rep.rows[i - 1].tight)) rep.tight_decreasing = false;
    if (!(rep.rows[i].composite < rep.rows[i - 1].composite)) rep.composite_decreasing = false;
  }

  // Kinetic lower bound on local windows.
  const int n_ref = n_list.empty() ? 1 : n_list.back();
  const int K = std::max({spec.max_active_k(n_ref), spec.cert.k_plus, spec.cert.k_minus, 1});
  const int d = spec.d;
  const int r_long = K + 2;
  const int L = K + r_long + 2;
  LatticeBox box(d, L);
  std::vector<BondCase> cases;
  {
    Site x, y;
    y[0] = 1;  // nearest neighbours along axis 0, fast
    cases.push_back({x, y});
    Site xs, ys;
    xs[d - 1] = -1;  // nearest neighbours across the barrier
    cases.push_back({xs, ys});
    Site xl, yl;
    yl[0] = r_long;
    cases.push_back({xl, yl});
    if (d >= 2) {
      Site xo, yo;
      yo[0] = 2;
      yo[1] = 1;
      cases.push_back({xo, yo});
    }
  }
  rep.lower_bound_min_slack = std::numeric_limits<double>::infinity();
  Rng rng(seed, 0x10b);
  rep.lower_bound_exhaustive = true;
  for (const auto& bc : cases) {
    // Sites that influence the constraint of this bond.
    std::vector<std::size_t> sites;
    auto add = [&](const Site& s) {
      if (!box.contains(s)) return;
      const auto i = box.index(s);
      if (std::find(sites.begin(), sites.end(), i) == sites.end()) sites.push_back(i);
    };
    add(bc.x);
    add(bc.y);
    for (int j = 0; j < d; ++j)
      for (int i = 1; i < K; ++i) {
        add(bc.x - i * unit(j));
        add(bc.x + i * unit(j));
        add(bc.y - i * unit(j));
        add(bc.y + i * unit(j));
      }
    const double states = std::pow(spec.n_e + 1.0, static_cast<double>(sites.size()));
    const bool exhaustive = states <= 1048576.0;
    if (!exhaustive) rep.lower_bound_exhaustive = false;
    const long count = exhaustive ? static_cast<long>(states) : 100000L;
    Configuration eta(box, spec.n_e);
    for (long c = 0; c < count; ++c) {
      long code = c;
      for (auto si : sites) {
        int v;
        if (exhaustive) {
          v = static_cast<int>(code % (spec.n_e + 1));
          code /= spec.n_e + 1;
        } else {
          v = static_cast<int>(rng.below(spec.n_e + 1));
        }
        eta.set_index(si, v);
      }
      double cn;
      try {
        cn = constraint_series(eta, bc.x, bc.y, spec, n_ref, WindowPolicy::ZeroPad);
      } catch (const Error&) {
        ++rep.lower_bound_failures;
        ++rep.lower_bound_checked;
        continue;
      }
      double lb = 0.0;
      if (spec.cert.b_plus > 0.0)
        lb += spec.cert.b_plus * constraint_c(eta, bc.x, bc.y, spec.cert.k_plus, false, WindowPolicy::ZeroPad);
      if (spec.cert.b_minus > 0.0)
        lb += spec.cert.b_minus * constraint_c(eta, bc.x, bc.y, spec.cert.k_minus, true, WindowPolicy::ZeroPad);
      const double slack = cn - lb;
      rep.lower_bound_min_slack = std::min(rep.lower_bound_min_slack, slack);
      if (slack < -1e-9 * (1.0 + std::abs(lb))) ++rep.lower_bound_failures;
      ++rep.lower_bound_checked;
    }
  }
  return rep;
}

}  // namespace lrex
