#include "lrex/fractional.hpp"

#include <fftw3.h>

#include <algorithm>
#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <limits>
#include <mutex>

#include "lrex/error.hpp"

namespace lrex {

namespace {
constexpr double kPi = boost::math::constants::pi<double>();
constexpr std::size_t kDirectLimit = 1024;
std::mutex fftw_planner_mutex;
}  // namespace

// ---------------------------------------------------------------------------
// Specs and fields

OperatorSpec OperatorSpec::from_kernel(const JumpKernel& k, double kappa, BondSet bonds) {
  OperatorSpec op;
  op.gamma = k.gamma();
  op.kappa = kappa;
  op.bonds = bonds;
  op.c_gamma = k.c_gamma();
  op.radius = k.radius();
  return op;
}

OperatorSpec OperatorSpec::unbounded(double gamma, int d, double kappa, BondSet bonds) {
  if (!(gamma > 0.0 && gamma < 2.0)) throw Error(ErrorCode::InvalidGamma, "gamma must lie in (0,2)");
  OperatorSpec op;
  op.gamma = gamma;
  op.kappa = kappa;
  op.bonds = bonds;
  op.c_gamma = 1.0 / lattice_zeta(d, d + gamma);
  op.radius = 0;
  return op;
}

void OperatorSpec::validate() const {
  if (!(gamma > 0.0 && gamma < 2.0)) throw Error(ErrorCode::InvalidGamma, "gamma must lie in (0,2)");
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw Error(ErrorCode::InvalidSpec, "kappa must be >= 0");
  if (!(c_gamma > 0.0)) throw Error(ErrorCode::InvalidSpec, "c_gamma must be positive");
  if (radius < 0) throw Error(ErrorCode::InvalidSpec, "radius must be >= 0");
}

LatticeField::LatticeField(const LatticeBox& w, int n_, std::vector<double> v, std::optional<double> out)
    : window(w), n(n_), values(std::move(v)), outside(out) {
  if (values.size() != window.size()) throw Error(ErrorCode::PreconditionViolated, "field size mismatch");
  for (double x : values)
    if (!std::isfinite(x)) throw Error(ErrorCode::PreconditionViolated, "non-finite field value");
}

LatticeField LatticeField::from_function(const TestFunction& G, const LatticeBox& w, int n) {
  std::vector<double> v(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) v[i] = G(macro_point(w.site(i), n, w.dim()));
  const double out = G.extent() < 1e200 ? 0.0 : G(Point{});
  return LatticeField(w, n, std::move(v), out);
}

double hurwitz_tail(long a, double s) {
  if (a < 1 || !(s > 1.0)) throw Error(ErrorCode::DomainError, "hurwitz_tail needs a >= 1, s > 1");
  double acc = 0.0;
  const long A = a + 20;
  for (long m = A - 1; m >= a; --m) acc += std::pow(static_cast<double>(m), -s);
  const double x = static_cast<double>(A);
  const double xs = std::pow(x, -s);
  acc += x * xs / (s - 1.0) + 0.5 * xs + s * xs / x / 12.0 - s * (s + 1) * (s + 2) * xs / (x * x * x) / 720.0 +
         s * (s + 1) * (s + 2) * (s + 3) * (s + 4) * xs / std::pow(x, 5) / 30240.0;
  return acc;
}

// ---------------------------------------------------------------------------
// Stencil

struct Stencil::Fft {
  int d;
  int M;
  std::size_t real_size;
  std::size_t cplx_size;
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
  fftw_complex* khat = nullptr;
  double* work_r = nullptr;
  fftw_complex* work_c = nullptr;
  std::vector<std::size_t> pos;
  std::mutex work_mutex;

  Fft(int d_, int M_) : d(d_), M(M_) {
    real_size = 1;
    for (int i = 0; i < d; ++i) real_size *= static_cast<std::size_t>(M);
    cplx_size = real_size / static_cast<std::size_t>(M) * static_cast<std::size_t>(M / 2 + 1);
    std::vector<int> dims(d, M);
    double* r = fftw_alloc_real(real_size);
    fftw_complex* c = fftw_alloc_complex(cplx_size);
    {
      std::lock_guard<std::mutex> lock(fftw_planner_mutex);
      fwd = fftw_plan_dft_r2c(d, dims.data(), r, c, FFTW_ESTIMATE);
      bwd = fftw_plan_dft_c2r(d, dims.data(), c, r, FFTW_ESTIMATE);
    }
    fftw_free(r);
    fftw_free(c);
    khat = fftw_alloc_complex(cplx_size);
    work_r = fftw_alloc_real(real_size);
    work_c = fftw_alloc_complex(cplx_size);
  }
  ~Fft() {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex);
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
    fftw_free(khat);
    fftw_free(work_r);
    fftw_free(work_c);
  }
};

Stencil::Stencil(const LatticeBox& window, int n, const OperatorSpec& op)
    : window_(window), n_(n), op_(op), ng_(std::pow(static_cast<double>(n), op.gamma)) {
  op.validate();
  if (n < 1) throw Error(ErrorCode::PreconditionViolated, "scale must be >= 1");
  const int d = window.dim();
  const int side = window.side();
  kside_ = static_cast<std::size_t>(2 * side - 1);
  std::size_t ksz = 1;
  for (int i = 0; i < d; ++i) ksz *= kside_;
  kern_.assign(ksz, 0.0);
  const double s = d + op.gamma;
  const long R2 = static_cast<long>(op.radius) * op.radius;
  for (std::size_t k = 0; k < ksz; ++k) {
    std::size_t rem = k;
    long n2 = 0;
    for (int i = d - 1; i >= 0; --i) {
      const long z = static_cast<long>(rem % kside_) - (side - 1);
      rem /= kside_;
      n2 += z * z;
    }
    if (n2 == 0 || (op.radius > 0 && n2 > R2)) continue;
    kern_[k] = op.c_gamma * std::pow(static_cast<double>(n2), -s / 2);
  }

  const std::size_t S = window.size();
  row_fast_.assign(S, 0.0);
  row_slow_.assign(S, 0.0);
  if (S <= kDirectLimit) {
    for (std::size_t ix = 0; ix < S; ++ix) {
      const Site x = window.site(ix);
      const bool xr = x[d - 1] >= 0;
      for (std::size_t iy = 0; iy < S; ++iy) {
        const Site y = window.site(iy);
        std::size_t k = 0;
        for (int i = 0; i < d; ++i) k = k * kside_ + static_cast<std::size_t>(y[i] - x[i] + side - 1);
        ((y[d - 1] >= 0) == xr ? row_fast_ : row_slow_)[ix] += kern_[k];
      }
    }
    return;
  }

  fft_ = std::make_unique<Fft>(d, 2 * side);
  {
    double* r = fftw_alloc_real(fft_->real_size);
    std::fill(r, r + fft_->real_size, 0.0);
    const int M = fft_->M;
    for (std::size_t k = 0; k < ksz; ++k) {
      if (kern_[k] == 0.0) continue;
      std::size_t rem = k, pos = 0, stride = 1;
      for (int i = d - 1; i >= 0; --i) {
        const long z = static_cast<long>(rem % kside_) - (side - 1);
        rem /= kside_;
        pos += static_cast<std::size_t>((z + M) % M) * stride;
        stride *= static_cast<std::size_t>(M);
      }
      r[pos] = kern_[k];
    }
    fftw_execute_dft_r2c(fft_->fwd, r, fft_->khat);
    fftw_free(r);
  }
  std::vector<double> ones(S, 1.0), left(S, 0.0), conv_all, conv_left;
  for (std::size_t i = 0; i < S; ++i) left[i] = window.site(i)[d - 1] < 0 ? 1.0 : 0.0;
  convolve(ones, conv_all);
  convolve(left, conv_left);
  for (std::size_t i = 0; i < S; ++i) {
    if (left[i] > 0.0) {
      row_fast_[i] = conv_left[i];
      row_slow_[i] = conv_all[i] - conv_left[i];
    } else {
      row_slow_[i] = conv_left[i];
      row_fast_[i] = conv_all[i] - conv_left[i];
    }
  }
}

Stencil::~Stencil() = default;

void Stencil::convolve(const std::vector<double>& in, std::vector<double>& out) const {
  Fft& f = *fft_;
  std::lock_guard<std::mutex> lock(f.work_mutex);
  const std::size_t S = window_.size();
  if (f.pos.empty()) {
    const int d = window_.dim();
    const int L = window_.half_width();
    f.pos.resize(S);
    for (std::size_t i = 0; i < S; ++i) {
      const Site x = window_.site(i);
      std::size_t p = 0;
      for (int j = 0; j < d; ++j) p = p * static_cast<std::size_t>(f.M) + static_cast<std::size_t>(x[j] + L);
      f.pos[i] = p;
    }
  }
  double* r = f.work_r;
  fftw_complex* c = f.work_c;
  std::fill(r, r + f.real_size, 0.0);
  for (std::size_t i = 0; i < S; ++i) r[f.pos[i]] = in[i];
  fftw_execute_dft_r2c(f.fwd, r, c);
  for (std::size_t k = 0; k < f.cplx_size; ++k) {
    const double a = c[k][0], b = c[k][1];
    const double e = f.khat[k][0], g = f.khat[k][1];
    c[k][0] = a * e - b * g;
    c[k][1] = a * g + b * e;
  }
  fftw_execute_dft_c2r(f.bwd, c, r);
  const double inv = 1.0 / static_cast<double>(f.real_size);
  out.resize(S);
  for (std::size_t i = 0; i < S; ++i) out[i] = r[f.pos[i]] * inv;
}

double Stencil::max_row_sum(double w_fast, double w_slow) const {
  double m = 0.0;
  for (std::size_t i = 0; i < row_fast_.size(); ++i) m = std::max(m, w_fast * row_fast_[i] + w_slow * row_slow_[i]);
  return ng_ * m;
}

std::vector<double> half_space_mass(const OperatorSpec& op, int d, int H) {
  std::vector<double> Q(static_cast<std::size_t>(H), 0.0);
  const double s = d + op.gamma;
  if (op.radius > 0) {
    const int R = op.radius;
    std::vector<double> q(static_cast<std::size_t>(R) + 1, 0.0);
    Site z;
    for (int i = 0; i < d; ++i) z[i] = -R;
    const long R2 = static_cast<long>(R) * R;
    while (true) {
      long n2 = 0;
      for (int i = 0; i < d; ++i) n2 += static_cast<long>(z[i]) * z[i];
      if (n2 > 0 && n2 <= R2 && z[d - 1] > 0) q[z[d - 1]] += op.c_gamma * std::pow(static_cast<double>(n2), -s / 2);
      int i = d - 1;
      while (i >= 0 && z[i] == R) z[i--] = -R;
      if (i < 0) break;
      ++z[i];
    }
    double acc = 0.0;
    for (int h = R; h >= 1; --h) {
      acc += q[h];
      if (h - 1 < H) Q[h - 1] = acc;
    }
    return Q;
  }
  if (d == 1) {
    for (int h = 0; h < H; ++h) Q[h] = op.c_gamma * hurwitz_tail(h + 1, 1.0 + op.gamma);
    return Q;
  }
  if (d == 2) {
    // Poisson summation of sum_w (w^2 + m^2)^{-sigma} over w in Z.
    const double sigma = s / 2, nu = sigma - 0.5;
    const double main = std::sqrt(kPi) * std::tgamma(nu) / std::tgamma(sigma);
    const double pref = 4.0 * std::pow(kPi, sigma) / std::tgamma(sigma);
    auto bessel_part = [&](int m) {
      double acc = 0.0;
      for (int k = 1; k <= 8; ++k) {
        const double x = 2.0 * kPi * k * m;
        if (x > 700.0) break;
        acc += std::pow(static_cast<double>(k) / m, nu) * boost::math::cyl_bessel_k(nu, x);
      }
      return pref * acc;
    };
    for (int h = 0; h < H; ++h) {
      double b = 0.0;
      for (int m = h + 1; m <= h + 12; ++m) b += bessel_part(m);
      Q[h] = op.c_gamma * (main * hurwitz_tail(h + 1, 2 * nu) + b);
    }
    return Q;
  }
  throw Error(ErrorCode::Unsupported, "bond-class exterior sums for an unbounded kernel need d <= 2");
}

namespace {

double ball_mass(const OperatorSpec& op, int d) {
  if (op.radius == 0) return op.c_gamma * lattice_zeta(d, d + op.gamma);
  const int R = op.radius;
  const long R2 = static_cast<long>(R) * R;
  const double s = d + op.gamma;
  std::vector<double> w;
  Site z;
  for (int i = 0; i < d; ++i) z[i] = -R;
  while (true) {
    long n2 = 0;
    for (int i = 0; i < d; ++i) n2 += static_cast<long>(z[i]) * z[i];
    if (n2 > 0 && n2 <= R2) w.push_back(std::pow(static_cast<double>(n2), -s / 2));
    int i = d - 1;
    while (i >= 0 && z[i] == R) z[i--] = -R;
    if (i < 0) break;
    ++z[i];
  }
  std::sort(w.begin(), w.end());
  double acc = 0.0;
  for (double v : w) acc += v;
  return op.c_gamma * acc;
}

}  // namespace

void Stencil::ensure_exterior() const {
  if (!ext_fast_.empty()) return;
  const int d = window_.dim();
  const std::size_t S = window_.size();
  const double total = ball_mass(op_, d);
  const auto Q = half_space_mass(op_, d, window_.half_width());
  ext_fast_.resize(S);
  ext_slow_.resize(S);
  for (std::size_t i = 0; i < S; ++i) {
    const int xd = window_.site(i)[d - 1];
    const int h = xd >= 0 ? xd : -xd - 1;
    const double es = std::max(0.0, Q[h] - row_slow_[i]);
    const double eb = std::max(0.0, total - row_slow_[i] - row_fast_[i]);
    ext_slow_[i] = es;
    ext_fast_[i] = std::max(0.0, eb - es);
  }
}

std::vector<double> Stencil::apply(const std::vector<double>& H, double w_fast, double w_slow,
                                   std::optional<double> outside) const {
  const std::size_t S = window_.size();
  if (H.size() != S) throw Error(ErrorCode::PreconditionViolated, "field size mismatch");
  const int d = window_.dim();
  std::vector<double> out(S, 0.0);
  if (!fft_) {
    const int side = window_.side();
    std::vector<Site> sites(S);
    for (std::size_t i = 0; i < S; ++i) sites[i] = window_.site(i);
    for (std::size_t ix = 0; ix < S; ++ix) {
      const Site& x = sites[ix];
      const bool xr = x[d - 1] >= 0;
      double fast = 0.0, slow = 0.0;
      for (std::size_t iy = 0; iy < S; ++iy) {
        const Site& y = sites[iy];
        std::size_t k = 0;
        for (int i = 0; i < d; ++i) k = k * kside_ + static_cast<std::size_t>(y[i] - x[i] + side - 1);
        const double t = kern_[k] * (H[iy] - H[ix]);
        if ((y[d - 1] >= 0) == xr)
          fast += t;
        else
          slow += t;
      }
      out[ix] = ng_ * (w_fast * fast + w_slow * slow);
    }
  } else if (w_fast == w_slow) {
    std::vector<double> a;
    convolve(H, a);
    for (std::size_t i = 0; i < S; ++i) out[i] = ng_ * w_fast * (a[i] - H[i] * (row_fast_[i] + row_slow_[i]));
  } else {
    std::vector<double> hl(S), a, b;
    for (std::size_t i = 0; i < S; ++i) hl[i] = window_.site(i)[d - 1] < 0 ? H[i] : 0.0;
    convolve(H, a);
    convolve(hl, b);
    for (std::size_t i = 0; i < S; ++i) {
      const bool left = window_.site(i)[d - 1] < 0;
      const double same = left ? b[i] : a[i] - b[i];
      const double other = left ? a[i] - b[i] : b[i];
      out[i] = ng_ * (w_fast * (same - H[i] * row_fast_[i]) + w_slow * (other - H[i] * row_slow_[i]));
    }
  }
  if (outside) {
    ensure_exterior();
    for (std::size_t i = 0; i < S; ++i)
      out[i] += ng_ * (*outside - H[i]) * (w_fast * ext_fast_[i] + w_slow * ext_slow_[i]);
  }
  return out;
}

namespace {

void check_window(const LatticeField& H) {
  if (!H.outside) return;
  const auto& w = H.window;
  const int d = w.dim();
  const int L = w.half_width();
  const int shell = std::max(1, static_cast<int>(std::ceil(0.1 * L)));
  double sup = 0.0;
  for (double v : H.values) sup = std::max(sup, std::abs(v - *H.outside));
  for (std::size_t i = 0; i < w.size(); ++i) {
    const Site x = w.site(i);
    bool edge = false;
    for (int j = 0; j < d; ++j)
      if (x[j] < -L + shell || x[j] >= L - shell) edge = true;
    if (edge && std::abs(H.values[i] - *H.outside) > 1e-8 * std::max(1.0, sup))
      throw Error(ErrorCode::WindowTooSmall, "field is not negligible near the window edge");
  }
}

LatticeField apply_weights(const LatticeField& H, const OperatorSpec& op, double wf, double ws) {
  check_window(H);
  Stencil st(H.window, H.n, op);
  return LatticeField(H.window, H.n, st.apply(H.values, wf, ws, H.outside), std::nullopt);
}

}  // namespace

LatticeField discrete_fraclap(const LatticeField& H, const OperatorSpec& op) {
  const double wf = op.bonds == BondSet::S ? 0.0 : 1.0;
  const double ws = op.bonds == BondSet::F ? 0.0 : 1.0;
  return apply_weights(H, op, wf, ws);
}

LatticeField discrete_distorted(const LatticeField& H, const OperatorSpec& op) {
  return apply_weights(H, op, 1.0, op.kappa);
}

// ---------------------------------------------------------------------------
// Continuous operators

namespace {

using boost::math::quadrature::gauss_kronrod;

struct Radial {
  double gamma;
  double ratio;
  double err = 0.0;

  // int_a^b r^{-1-gamma} A(r) dr over geometric panels.
  template <class F>
  double operator()(F&& A, double a, double b) {
    if (!(b > a)) return 0.0;
    double acc = 0.0;
    double lo = a;
    while (lo < b) {
      const double hi = std::min(b, lo * ratio);
      double e = 0.0;
      acc += gauss_kronrod<double, 31>::integrate(
          [&](double r) { return A(r) * std::pow(r, -1.0 - gamma); }, lo, hi, 8, 1e-10, &e);
      err += e;
      lo = hi;
    }
    return acc;
  }
};

double arc_integral(const std::function<double(double)>& f, double lo, double hi) {
  return gauss_kronrod<double, 21>::integrate(f, lo, hi, 8, 1e-11);
}

QuadResult one_region(const TestFunction& G, const Point& u, const OperatorSpec& op, Region region,
                      const QuadOptions& q) {
  const int d = G.dim();
  if (d > 2) throw Error(ErrorCode::Unsupported, "continuous operators are implemented for d <= 2");
  const double g = op.gamma;
  const bool full = region == Region::FullSpace;
  const bool right = region == Region::RightHalf;
  const int sgn = right ? 1 : -1;
  const double ud = u[d - 1];
  if (region == Region::RightHalf && ud < 0.0)
    throw Error(ErrorCode::PreconditionViolated, "point lies outside the right half");
  if (region == Region::LeftHalf && ud > 0.0)
    throw Error(ErrorCode::PreconditionViolated, "point lies outside the left half");

  auto fn = [&](const Point& p) { return full ? G.value(p) : G.side_value(p, right); };
  const bool finite = G.extent() < 1e200;
  const double scale = finite ? G.extent() : 1.0;
  const double eps = q.inner_radius > 0.0 ? q.inner_radius : 3e-4 * scale;
  const double far = finite ? G.extent() + norm(u, d) + eps : 1e4 * (1.0 + norm(u, d));
  const double g0 = fn(u);
  const double lap = full ? G.laplacian(u) : G.side_laplacian(u, right);
  Radial radial{g, q.panel_ratio};

  auto at = [&](double r, double th, int dir) {
    Point p = u;
    if (d == 1) {
      p[0] += dir * r;
    } else {
      p[0] += r * std::cos(th);
      p[1] += dir * r * std::sin(th);
    }
    return fn(p);
  };
  auto sym = [&](double r) {
    if (d == 1) return at(r, 0, 1) + at(r, 0, -1) - 2.0 * g0;
    return arc_integral([&](double th) { return at(r, th, 1) + at(r, th, -1) - 2.0 * g0; }, 0.0, kPi);
  };
  const double m_sym = d == 1 ? 1.0 : kPi / 2;

  double val = 0.0;
  if (full) {
    val = m_sym * lap * std::pow(eps, 2 - g) / (2 - g) + radial(sym, eps, far);
    if (finite) val -= (d == 1 ? 2.0 : 2.0 * kPi) * g0 * std::pow(far, -g) / g;
  } else {
    const double delta = std::abs(ud);
    auto outer = [&](double r) {
      if (d == 1) return at(r, 0, sgn) - g0;
      const double phi = std::asin(std::min(1.0, delta / r));
      return arc_integral([&](double th) { return at(r, th, sgn) - g0; }, -phi, kPi + phi);
    };
    double start = delta;
    if (delta > 0.0) {
      const double e1 = std::min(eps, delta);
      val += m_sym * lap * std::pow(e1, 2 - g) / (2 - g) + radial(sym, e1, delta);
    } else {
      const double h = 1e-5 * scale;
      Point a = u, b = u;
      a[d - 1] += h;
      b[d - 1] -= h;
      const double grad = (fn(a) - fn(b)) / (2 * h);
      if (std::abs(grad) > 1e-9 * std::max(1.0, G.sup_abs())) {
        if (g >= 1.0) throw Error(ErrorCode::QuadratureFailure, "regional operator is unbounded at the barrier");
        val += (d == 1 ? 1.0 : 2.0) * sgn * grad * std::pow(eps, 1 - g) / (1 - g);
      }
      val += (d == 1 ? 0.5 : kPi / 4) * lap * std::pow(eps, 2 - g) / (2 - g);
      start = eps;
    }
    val += radial(outer, start, far);
    if (finite) {
      if (d == 1) {
        val -= g0 * std::pow(far, -g) / g;
      } else {
        double e = 0.0;
        const double extra = gauss_kronrod<double, 31>::integrate(
            [&](double t) { return std::pow(t, g - 1) * std::asin(std::min(1.0, delta * t)); }, 0.0, 1.0 / far, 10,
            1e-12, &e);
        val -= g0 * (kPi * std::pow(far, -g) / g + 2.0 * extra);
      }
    }
  }
  QuadResult res{op.c_gamma * val, op.c_gamma * radial.err};
  if (!std::isfinite(res.value) || res.error > 1e-4 * std::max(1.0, std::abs(res.value)))
    throw Error(ErrorCode::QuadratureFailure, "quadrature error estimate too large");
  return res;
}

}  // namespace

QuadResult continuous_fraclap(const TestFunction& G, const Point& u, const OperatorSpec& op, Region region,
                              const QuadOptions& q) {
  op.validate();
  const int d = G.dim();
  const Region side = u[d - 1] >= 0.0 ? Region::RightHalf : Region::LeftHalf;
  switch (region) {
    case Region::FullSpace:
    case Region::LeftHalf:
    case Region::RightHalf:
      return one_region(G, u, op, region, q);
    case Region::Star:
      return one_region(G, u, op, side, q);
    case Region::Distorted: {
      const double k = op.kappa;
      if (k == 1.0) return one_region(G, u, op, Region::FullSpace, q);
      const auto star = one_region(G, u, op, side, q);
      if (k == 0.0) return star;
      const auto fullr = one_region(G, u, op, Region::FullSpace, q);
      return {k * fullr.value + (1 - k) * star.value, k * fullr.error + std::abs(1 - k) * star.error};
    }
  }
  throw Error(ErrorCode::PreconditionViolated, "unknown region");
}

ConvergenceReport operator_convergence_report(const TestFunction& G, const OperatorSpec& op,
                                              const std::vector<int>& n_list) {
  if (op.radius != 0) throw Error(ErrorCode::PreconditionViolated, "convergence report needs an unbounded kernel");
  const int d = G.dim();
  ConvergenceReport rep;
  rep.function = G.name();
  rep.kappa = op.kappa;
  const double W = G.extent() < 1e200 ? G.extent() / 0.85 : 1.0;
  for (int n : n_list) {
    const int L = static_cast<int>(std::ceil(W * n));
    LatticeBox box(d, L);
    const auto H = LatticeField::from_function(G, box, n);
    const auto Ln = discrete_distorted(H, op);
    double err = 0.0;
    for (std::size_t i = 0; i < box.size(); ++i) {
      const Point u = macro_point(box.site(i), n, d);
      err += std::abs(Ln.values[i] - continuous_fraclap(G, u, op, Region::Distorted).value);
    }
    rep.rows.push_back({n, err / std::pow(static_cast<double>(n), d), box.size()});
  }
  rep.decreasing = true;
  for (std::size_t i = 1; i < rep.rows.size(); ++i)
    if (!(rep.rows[i].error < rep.rows[i - 1].error)) rep.decreasing = false;
  return rep;
}

double directional_frac_derivative(const std::function<double(const Point&)>& phi, const Point& u_star, int d,
                                   int side, double gamma, double r0) {
  if (side != 1 && side != -1) throw Error(ErrorCode::PreconditionViolated, "side must be +1 or -1");
  if (!(gamma > 0.0 && gamma < 2.0)) throw Error(ErrorCode::InvalidGamma, "gamma must lie in (0,2)");
  std::vector<double> s;
  for (int k = 0; k < 12; ++k) {
    const double r = side * r0 * std::ldexp(1.0, -k);
    const double h = std::abs(r) * 1e-4;
    Point a = u_star, b = u_star;
    a[d - 1] = r + h;
    b[d - 1] = r - h;
    s.push_back(std::pow(std::abs(r), 2 - gamma) * (phi(a) - phi(b)) / (2 * h));
  }
  std::vector<double> extrap{s.back()};
  while (s.size() >= 3) {
    std::vector<double> t;
    double scale = 0.0;
    for (double v : s) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i + 2 < s.size(); ++i) {
      const double d1 = s[i + 1] - s[i], den = s[i + 2] - 2 * s[i + 1] + s[i];
      t.push_back(std::abs(den) <= 1e-13 * std::max(scale, 1e-300) ? s[i + 2] : s[i] - d1 * d1 / den);
    }
    s = std::move(t);
    extrap.push_back(s.back());
    if (extrap.size() >= 4) break;
  }
  const double last = extrap.back(), prev = extrap[extrap.size() - 2];
  if (!std::isfinite(last) || std::abs(last - prev) > 1e-3)
    throw Error(ErrorCode::NoConvergence, "extrapolants do not settle");
  return last;
}

}  // namespace lrex
