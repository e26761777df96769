#pragma once

#include <array>
#include <functional>
#include <string>

#include "lrex/lattice.hpp"

namespace lrex {

using Point = std::array<double, kMaxDim>;

inline Point macro_point(const Site& x, double n, int d) {
  Point u{};
  for (int i = 0; i < d; ++i) u[i] = x[i] / n;
  return u;
}

double norm(const Point& u, int d);

// Test function, possibly discontinuous across {u_d = 0}. Each side is a smooth function
// defined on all of R^d; value(u) uses the right part when u_d >= 0.
class TestFunction {
 public:
  using Fn = std::function<double(const Point&)>;

  TestFunction() = default;
  // Smooth function with its Laplacian.
  TestFunction(std::string name, int d, Fn f, Fn lap, double extent, double sup);
  // Split function: left/right smooth parts.
  TestFunction(std::string name, int d, Fn left, Fn left_lap, Fn right, Fn right_lap, double extent,
               double sup);

  const std::string& name() const { return name_; }
  int dim() const { return d_; }
  bool is_split() const { return split_; }
  double extent() const { return extent_; }  // |G| < 1e-16 beyond this radius
  double sup_abs() const { return sup_; }

  double operator()(const Point& u) const { return value(u); }
  double value(const Point& u) const {
    return (split_ && u[d_ - 1] < 0.0) ? left_(u) : right_(u);
  }
  // Smooth part from one side, evaluated anywhere.
  double side_value(const Point& u, bool right) const { return (split_ && !right) ? left_(u) : right_(u); }
  double side_laplacian(const Point& u, bool right) const {
    return (split_ && !right) ? left_lap_(u) : right_lap_(u);
  }
  double laplacian(const Point& u) const { return side_laplacian(u, !(split_ && u[d_ - 1] < 0.0)); }

 private:
  std::string name_;
  int d_ = 1;
  bool split_ = false;
  Fn left_, left_lap_, right_, right_lap_;
  double extent_ = 0.0;
  double sup_ = 0.0;
};

TestFunction tf_gauss(double sigma, int d, double amplitude = 1.0);
TestFunction tf_bump(double R, int d);
TestFunction tf_split(double left, double right, int d, double sigma = 0.5);
TestFunction tf_constant(double c, int d);
// Parse "gauss:s", "bump:R", "split:left=a,right=b[,sigma=s]", "const:c".
TestFunction parse_test_function(const std::string& text, int d);

// G(t,u) = a(t) G(u).
struct SpaceTimeTest {
  TestFunction g;
  std::function<double(double)> a = [](double) { return 1.0; };
  std::function<double(double)> a_dot = [](double) { return 0.0; };
};

}  // namespace lrex
