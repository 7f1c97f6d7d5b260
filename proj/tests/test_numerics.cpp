#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "conic_ke/numerics.hpp"

using namespace conic_ke;
using doctest::Approx;

namespace {
std::vector<double> sample(double a, double h, int n, double (*f)(double)) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = f(a + i * h);
  return v;
}
}  // namespace

TEST_CASE("fornberg weights reproduce the classical centered stencils") {
  const std::vector<double> x{-2, -1, 0, 1, 2};
  const auto w = numerics::fornberg_weights(0.0, x, 2);
  // first derivative row: (1, -8, 0, 8, -1) / 12
  CHECK(w[5 + 0] == Approx(1.0 / 12));
  CHECK(w[5 + 1] == Approx(-8.0 / 12));
  CHECK(w[5 + 3] == Approx(8.0 / 12));
  // second derivative row: (-1, 16, -30, 16, -1) / 12
  CHECK(w[10 + 2] == Approx(-30.0 / 12));
  CHECK(w[10 + 4] == Approx(-1.0 / 12));
}

TEST_CASE("derivatives converge at their nominal order") {
  for (int order : {2, 4}) {
    double prev = 0.0;
    for (int n : {101, 201, 401}) {
      const double h = 2.0 / (n - 1);
      const auto f = sample(-1.0, h, n, [](double t) { return std::sin(3 * t); });
      const auto d = numerics::second_derivative(f, h, order);
      double err = 0.0;
      for (int i = 0; i < n; ++i) err = std::max(err, std::abs(d[i] + 9 * std::sin(3 * (-1.0 + i * h))));
      if (prev > 0.0) CHECK(prev / err > 0.8 * std::pow(2.0, order));
      prev = err;
    }
  }
}

TEST_CASE("simpson and gauss-legendre integrate polynomials exactly") {
  const int n = 21;
  const double h = 0.1;
  const auto f = sample(0.0, h, n, [](double t) { return t * t * t - 2 * t; });
  CHECK(numerics::simpson(f, h) == Approx(4.0 - 4.0).epsilon(1e-12));  // int_0^2
  const auto& g = numerics::gauss_legendre(8);
  double s = 0.0;
  for (int i = 0; i < 8; ++i) s += g.weights[i] * std::pow(g.nodes[i], 14);
  CHECK(s == Approx(2.0 / 15).epsilon(1e-13));
  CHECK(numerics::integrate([](double t) { return std::exp(t); }, 0.0, 1.0) == Approx(std::exp(1.0) - 1).epsilon(1e-14));
}

TEST_CASE("cumulative integral and interpolation") {
  const int n = 201;
  const double h = std::numbers::pi / (n - 1);
  const auto f = sample(0.0, h, n, [](double t) { return std::sin(t); });
  const auto c = numerics::cumulative_integral(f, h);
  for (int i = 0; i < n; i += 20) CHECK(c[i] == Approx(1 - std::cos(i * h)).epsilon(1e-8));
  CHECK(numerics::interpolate(f, 0.0, h, 1.0) == Approx(std::sin(1.0)).epsilon(1e-7));
}

TEST_CASE("tridiagonal solve matches a dense check") {
  const std::vector<double> sub{1, 1, 1}, diag{4, 4, 4, 4}, sup{1, 1, 1}, rhs{1, 2, 3, 4};
  const auto x = numerics::solve_tridiagonal(sub, diag, sup, rhs);
  for (int i = 0; i < 4; ++i) {
    double r = diag[i] * x[i];
    if (i > 0) r += sub[i - 1] * x[i - 1];
    if (i < 3) r += sup[i] * x[i + 1];
    CHECK(r == Approx(rhs[i]).epsilon(1e-14));
  }
}

TEST_CASE("log-sum-exp, line fit and monotone root") {
  const std::vector<double> x{1000.0, 1000.0};
  CHECK(numerics::log_sum_exp(x) == Approx(1000.0 + std::log(2.0)));
  const std::vector<double> a{0, 1, 2, 3}, b{1, 3, 5, 7};
  const auto fit = numerics::fit_line(a, b);
  CHECK(fit.slope == Approx(2.0));
  CHECK(fit.intercept == Approx(1.0));
  const double r = numerics::solve_increasing([](double t) { return t * t * t - 2.0; }, 0.0, 1.0);
  CHECK(r == Approx(std::cbrt(2.0)).epsilon(1e-13));
}
