#include "lrex/testfn.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "lrex/error.hpp"

namespace lrex {

double norm(const Point& u, int d) {
  double s = 0.0;
  for (int i = 0; i < d; ++i) s += u[i] * u[i];
  return std::sqrt(s);
}

TestFunction::TestFunction(std::string name, int d, Fn f, Fn lap, double extent, double sup)
    : name_(std::move(name)), d_(d), split_(false), left_(f), left_lap_(lap), right_(f), right_lap_(lap),
      extent_(extent), sup_(sup) {}

TestFunction::TestFunction(std::string name, int d, Fn left, Fn left_lap, Fn right, Fn right_lap, double extent,
                           double sup)
    : name_(std::move(name)), d_(d), split_(true), left_(std::move(left)), left_lap_(std::move(left_lap)),
      right_(std::move(right)), right_lap_(std::move(right_lap)), extent_(extent), sup_(sup) {}

namespace {

std::string fmt_num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

TestFunction tf_gauss(double sigma, int d, double amplitude) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::ConfigError, "gauss width must be positive");
  const double s2 = sigma * sigma;
  auto f = [=](const Point& u) {
    double r2 = 0.0;
    for (int i = 0; i < d; ++i) r2 += u[i] * u[i];
    return amplitude * std::exp(-r2 / (2 * s2));
  };
  auto lap = [=](const Point& u) {
    double r2 = 0.0;
    for (int i = 0; i < d; ++i) r2 += u[i] * u[i];
    return amplitude * std::exp(-r2 / (2 * s2)) * (r2 / (s2 * s2) - d / s2);
  };
  return TestFunction("gauss:" + fmt_num(sigma), d, f, lap, sigma * 9.0, std::abs(amplitude));
}

TestFunction tf_bump(double R, int d) {
  if (!(R > 0.0)) throw Error(ErrorCode::ConfigError, "bump radius must be positive");
  const double R2 = R * R;
  auto f = [=](const Point& u) {
    double r2 = 0.0;
    for (int i = 0; i < d; ++i) r2 += u[i] * u[i];
    const double q = r2 / R2;
    return q < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - q)) : 0.0;
  };
  auto lap = [=](const Point& u) {
    double r2 = 0.0;
    for (int i = 0; i < d; ++i) r2 += u[i] * u[i];
    const double q = r2 / R2;
    if (q >= 1.0) return 0.0;
    const double g = std::exp(1.0 - 1.0 / (1.0 - q));
    const double om = 1.0 - q;
    // g = exp(phi(r)), phi' = -2r/(R^2 om^2), phi'' = -2/(R^2 om^2) - 8 r^2/(R^4 om^3).
    const double phi2 = -2.0 / (R2 * om * om) - 8.0 * r2 / (R2 * R2 * om * om * om);
    const double phi1_over_r = -2.0 / (R2 * om * om);
    const double phi1_sq = r2 * phi1_over_r * phi1_over_r;
    return g * (phi1_sq + phi2 + (d - 1) * phi1_over_r);
  };
  return TestFunction("bump:" + fmt_num(R), d, f, lap, R, 1.0);
}

TestFunction tf_split(double left, double right, int d, double sigma) {
  auto gl = tf_gauss(sigma, d, left);
  auto gr = tf_gauss(sigma, d, right);
  auto lv = [gl](const Point& u) { return gl.value(u); };
  auto ll = [gl](const Point& u) { return gl.laplacian(u); };
  auto rv = [gr](const Point& u) { return gr.value(u); };
  auto rl = [gr](const Point& u) { return gr.laplacian(u); };
  std::string name = "split:left=" + fmt_num(left) + ",right=" + fmt_num(right);
  if (sigma != 0.5) name += ",sigma=" + fmt_num(sigma);
  return TestFunction(name, d, lv, ll, rv, rl, sigma * 9.0, std::max(std::abs(left), std::abs(right)));
}

TestFunction tf_constant(double c, int d) {
  return TestFunction("const:" + fmt_num(c), d, [c](const Point&) { return c; }, [](const Point&) { return 0.0; },
                      1e300, std::abs(c));
}

TestFunction parse_test_function(const std::string& text, int d) {
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  try {
    if (head == "gauss") return tf_gauss(std::stod(arg), d);
    if (head == "bump") return tf_bump(std::stod(arg), d);
    if (head == "const") return tf_constant(std::stod(arg), d);
    if (head == "split") {
      std::map<std::string, double> kv{{"left", 1.0}, {"right", 1.0}, {"sigma", 0.5}};
      std::istringstream is(arg);
      std::string item;
      while (std::getline(is, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw Error(ErrorCode::ConfigError, "bad split argument: " + item);
        const std::string key = item.substr(0, eq);
        if (!kv.count(key)) throw Error(ErrorCode::ConfigError, "unknown split key: " + key);
        kv[key] = std::stod(item.substr(eq + 1));
      }
      return tf_split(kv["left"], kv["right"], d, kv["sigma"]);
    }
  } catch (const std::invalid_argument&) {
    throw Error(ErrorCode::ConfigError, "bad test function: " + text);
  }
  throw Error(ErrorCode::ConfigError, "unknown test function: " + text);
}

}  // namespace lrex
