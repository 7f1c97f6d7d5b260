#pragma once

#include <functional>
#include <span>
#include <vector>

namespace conic_ke {

using Profile = std::vector<double>;

namespace numerics {

/// Finite-difference weights (Fornberg) for derivatives 0..m at x0 on nodes x.
/// Returns a (m+1) x x.size() row-major table.
std::vector<double> fornberg_weights(double x0, std::span<const double> x, int m);

/// Derivative of uniformly sampled data. Central stencils of the given order in the
/// interior, one-sided stencils of the same order near the ends. order in {2,4,6}.
Profile derivative(std::span<const double> f, double h, int order = 4);
Profile second_derivative(std::span<const double> f, double h, int order = 4);

/// Composite Simpson weights for an odd number of nodes.
std::vector<double> simpson_weights(int n, double h);
double simpson(std::span<const double> f, double h);

/// Running integral F(t_i) = int_{t_0}^{t_i} f, fourth order.
Profile cumulative_integral(std::span<const double> f, double h);

/// Cubic Lagrange interpolation of uniform data at x.
double interpolate(std::span<const double> f, double x0, double h, double x);

/// Thomas algorithm. Sizes: sub n-1, diag n, sup n-1, rhs n.
std::vector<double> solve_tridiagonal(std::span<const double> sub, std::span<const double> diag,
                                      std::span<const double> sup, std::span<const double> rhs);

double log_sum_exp(std::span<const double> x);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms = 0.0;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

/// Root of an increasing function: bracket expansion, bisection, then secant polish.
double solve_increasing(const std::function<double(double)>& f, double lo, double hi,
                        double tol = 1e-14);

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const GaussRule& gauss_legendre(int n);

/// int_a^b f with a composite Gauss-Legendre rule.
double integrate(const std::function<double(double)>& f, double a, double b, int panels = 8,
                 int order = 16);

double sup_abs(std::span<const double> f);

}  // namespace numerics
}  // namespace conic_ke
