#include "lrex/measures.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace lrex {

double smootherstep(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return t * t * t * (t * (6.0 * t - 15.0) + 10.0);
}

namespace {
constexpr double kSmoothSlope = 15.0 / 8.0;  // max of smootherstep'
}

Profile Profile::constant(double beta, int d) {
  Profile p;
  p.kind_ = Kind::Constant;
  p.beta_ = beta;
  p.d_ = d;
  p.validate();
  return p;
}

Profile Profile::ref(const RefShape& shape, int d) {
  Profile p;
  p.kind_ = Kind::Ref;
  p.shape_ = shape;
  p.d_ = d;
  p.validate();
  return p;
}

double Profile::operator()(const Point& u) const {
  if (kind_ == Kind::Constant) return beta_;
  const auto& s = shape_;
  const double core = s.left + (s.right - s.left) * smootherstep((u[d_ - 1] + 0.5 * s.slab) / s.slab);
  const double r = norm(u, d_);
  const double cut = 1.0 - smootherstep((r - (s.support - s.slab)) / s.slab);
  return s.background + (core - s.background) * cut;
}

RefConstants Profile::constants() const {
  if (kind_ == Kind::Constant) return {beta_, beta_, 0.0, 0.0, beta_};
  const auto& s = shape_;
  const double lo = std::min({s.left, s.right, s.background});
  const double hi = std::max({s.left, s.right, s.background});
  const double dev = std::max(std::abs(s.left - s.background), std::abs(s.right - s.background));
  const double lip = kSmoothSlope / s.slab * (std::abs(s.right - s.left) + dev);
  return {lo, hi, lip, s.support, s.background};
}

void Profile::validate() const {
  if (d_ < 1 || d_ > kMaxDim) throw Error(ErrorCode::InvalidProfile, "dimension out of range");
  if (kind_ == Kind::Constant) {
    if (!(beta_ > 0.0 && beta_ < 1.0)) throw Error(ErrorCode::InvalidProfile, "constant profile must lie in (0,1)");
    return;
  }
  const auto& s = shape_;
  for (double v : {s.left, s.right, s.background})
    if (!(v > 0.0 && v < 1.0)) throw Error(ErrorCode::InvalidProfile, "profile values must lie in (0,1)");
  if (!(s.slab > 0.0)) throw Error(ErrorCode::InvalidProfile, "slab width must be positive");
  if (!(s.support >= 2.0 * s.slab)) throw Error(ErrorCode::InvalidProfile, "support radius must be >= 2 * slab width");
}

std::string Profile::describe() const {
  std::ostringstream os;
  if (kind_ == Kind::Constant) {
    os << "constant:" << beta_;
  } else {
    const auto& s = shape_;
    os << "ref:left=" << s.left << ",right=" << s.right << ",slab=" << s.slab << ",background=" << s.background
       << ",support=" << s.support;
  }
  return os.str();
}

Profile parse_profile_text(const std::string& text, int d) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    for (char& c : line)
      if (c == ',') c = '\n';
    std::istringstream parts(line);
    std::string item;
    while (std::getline(parts, item)) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) {
        if (item.find_first_not_of(" \t\r") != std::string::npos)
          throw Error(ErrorCode::ConfigError, "bad profile entry: " + item);
        continue;
      }
      auto trim = [](std::string s) {
        s.erase(0, s.find_first_not_of(" \t\r"));
        s.erase(s.find_last_not_of(" \t\r") + 1);
        return s;
      };
      kv[trim(item.substr(0, eq))] = trim(item.substr(eq + 1));
    }
  }
  auto num = [&](const std::string& key, double dflt) {
    auto it = kv.find(key);
    if (it == kv.end()) return dflt;
    try {
      return std::stod(it->second);
    } catch (...) {
      throw Error(ErrorCode::ConfigError, "bad number for " + key);
    }
  };
  const std::string kind = kv.count("kind") ? kv["kind"] : "ref";
  if (kind == "constant") return Profile::constant(num("beta", 0.5), d);
  if (kind != "ref") throw Error(ErrorCode::ConfigError, "unknown profile kind: " + kind);
  RefShape s;
  s.left = num("plateau_left", s.left);
  s.right = num("plateau_right", s.right);
  s.slab = num("slab_width", s.slab);
  s.background = num("background", 0.5 * (s.left + s.right));
  s.support = num("support_radius", s.support);
  return Profile::ref(s, d);
}

Profile load_profile(const std::string& path, int d) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open profile file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_profile_text(ss.str(), d);
}

int sample_binomial(int n_e, double p, Rng& rng) {
  if (n_e == 1) return rng.uniform() < p ? 1 : 0;
  // Inverse CDF.
  const double u = rng.uniform();
  const double q = 1.0 - p;
  double pmf = std::pow(q, n_e);
  double cdf = pmf;
  int k = 0;
  while (u >= cdf && k < n_e) {
    pmf *= (static_cast<double>(n_e - k) / (k + 1)) * (p / q);
    ++k;
    cdf += pmf;
  }
  return k;
}

Configuration sample_product(const Profile& h, int n, const LatticeBox& box, int n_e, Rng& rng) {
  h.validate();
  Configuration eta(box, n_e);
  auto& occ = eta.mutable_data();
  for (std::size_t i = 0; i < box.size(); ++i) {
    const double p = h(macro_point(box.site(i), n, box.dim()));
    occ[i] = static_cast<std::uint8_t>(sample_binomial(n_e, p, rng));
  }
  return eta;
}

Configuration sample_product(const Profile& h, int n, const LatticeBox& box, int n_e, std::uint64_t seed) {
  Rng rng(seed, 0x5a3b1e);
  return sample_product(h, n, box, n_e, rng);
}

double relative_entropy_product(const Profile& mu, const Profile& nu, int n, const LatticeBox& box, int n_e) {
  mu.validate();
  nu.validate();
  double H = 0.0;
  for (std::size_t i = 0; i < box.size(); ++i) {
    const Point u = macro_point(box.site(i), n, box.dim());
    const double p = mu(u), q = nu(u);
    if (p == q) continue;
    H += n_e * (p * std::log(p / q) + (1.0 - p) * std::log((1.0 - p) / (1.0 - q)));
  }
  return H;
}

double empirical_pairing(const Configuration& eta, const TestFunction& G, int n) {
  const auto& box = eta.box();
  const int d = box.dim();
  double s = 0.0;
  for (std::size_t i = 0; i < box.size(); ++i) {
    if (eta[i] == 0) continue;
    s += G(macro_point(box.site(i), n, d)) * eta[i];
  }
  return s / std::pow(static_cast<double>(n), d);
}

double block_average(const Configuration& xi, const Site& z, double ell) {
  const int l = static_cast<int>(std::floor(ell));
  if (l < 1) throw Error(ErrorCode::PreconditionViolated, "block size must be >= 1");
  const auto& box = xi.box();
  const int d = box.dim();
  Site lo = z, hi = z;
  for (int i = 0; i < d; ++i) {
    lo[i] += 1;
    hi[i] += l;
  }
  if (!box.contains(lo) || !box.contains(hi)) throw Error(ErrorCode::WindowOutOfBox, "block leaves the box");
  long sum = 0;
  Site w = lo;
  while (true) {
    sum += xi[box.index(w)];
    int i = d - 1;
    while (i >= 0 && w[i] == hi[i]) w[i] = lo[i], --i;
    if (i < 0) break;
    ++w[i];
  }
  return static_cast<double>(sum) / std::pow(static_cast<double>(l), d);
}

double iota_indicator(const Point& u, double eps, const Point& v, int d) {
  if (!(eps > 0.0)) throw Error(ErrorCode::PreconditionViolated, "epsilon must be positive");
  for (int i = 0; i < d; ++i)
    if (!(v[i] > u[i] && v[i] <= u[i] + eps)) return 0.0;
  return std::pow(eps, -d);
}

}  // namespace lrex
