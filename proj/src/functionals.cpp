#include "conic_ke/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "conic_ke/errors.hpp"

namespace conic_ke {

double j_functional(const Profile& phi, const Grid& grid) {
  if (static_cast<int>(phi.size()) != grid.size()) throw InvalidArgument("profile does not match the grid");
  auto d = numerics::derivative(phi, grid.spacing(), 6);
  for (auto& v : d) v *= v;
  return std::numbers::pi / kVolume * numerics::simpson(d, grid.spacing());
}

double linear_term(const Profile& phi, const Grid& grid) {
  if (static_cast<int>(phi.size()) != grid.size()) throw InvalidArgument("profile does not match the grid");
  const auto fs = fubini_study_potential(grid);
  const Profile ones(phi.size(), 1.0);
  return integrate_on_sphere(fs, phi) / integrate_on_sphere(fs, ones);
}

FunctionalReport f_functional(const Profile& phi, double tau, const ReferenceWeight& weight,
                              const Grid& grid) {
  if (!(tau > 0.0)) throw InvalidArgument("F is undefined at tau = 0");
  if (static_cast<int>(phi.size()) != grid.size() || weight.log_weight.size() != phi.size())
    throw InvalidArgument("profile does not match the grid");
  const auto fs = fubini_study_potential(grid);
  const int n = grid.size();
  FunctionalReport rep;
  rep.tau = tau;
  rep.beta = weight.beta;
  rep.delta = weight.delta;
  rep.J = j_functional(phi, grid);
  rep.linear = linear_term(phi, grid);
  // the weight's tails are lumped at the end values of phi
  Profile e(n);
  for (int i = 0; i < n; ++i) e[i] = std::exp(weight.log_weight[i] - tau * phi[i]);
  const double tl = weight.left.weight_mass * std::exp(-tau * phi.front()) / e.front();
  const double tr = weight.right.weight_mass * std::exp(-tau * phi.back()) / e.back();
  const Profile ones(n, 1.0);
  const double vol = integrate_on_sphere(fs, ones);
  rep.log_term = std::log(integrate_on_sphere(fs, e, tl, tr) / vol);
  rep.F = rep.J - rep.linear - rep.log_term / tau;
  return rep;
}

PathResidualReport path_derivative_residual(const ContinuationTrace& trace) {
  const auto& st = trace.steps;
  const int n = static_cast<int>(st.size());
  if (n < 5) throw InvalidArgument("trace needs at least 5 steps");
  const auto& grid = st.front().solution.grid();
  const auto weight = make_reference_weight(trace.cone.beta(), trace.delta, grid);
  PathResidualReport rep;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> F(n, nan);
  const Profile ones(grid.size(), 1.0);
  for (int k = 0; k < n; ++k) {
    const auto& s = st[k];
    rep.tau.push_back(s.tau);
    const double vol = integrate_on_sphere(s.solution, ones);
    rep.derivative_formula.push_back(s.tau > 0 ? integrate_on_sphere(s.solution, s.phi) / (s.tau * vol) : nan);
    if (s.tau > 0) {
      const auto fr = f_functional(s.phi, s.tau, weight, grid);
      F[k] = fr.F;
      rep.on_path.push_back(std::abs(fr.F - (fr.J - fr.linear)));
      rep.max_on_path = std::max(rep.max_on_path, rep.on_path.back());
    } else {
      rep.on_path.push_back(nan);
    }
  }
  for (int k = 0; k < n; ++k) {
    double fd = nan;
    // centered (non-uniform) three-point difference; stencils touching tau = 0 are skipped
    if (k > 0 && k + 1 < n && st[k - 1].tau > 0) {
      const double a = st[k].tau - st[k - 1].tau, b = st[k + 1].tau - st[k].tau;
      fd = (a * a * F[k + 1] - b * b * F[k - 1] + (b * b - a * a) * F[k]) / (a * b * (a + b));
    }
    if (std::isnan(fd)) {
      rep.fd_relative.push_back(nan);
    } else {
      const double f = rep.derivative_formula[k];
      const double rel = std::abs(fd - f) / std::max(std::abs(f), 1e-6);
      rep.fd_relative.push_back(rel);
      rep.max_fd_relative = std::max(rep.max_fd_relative, rel);
    }
    // tau phidot + phi is orthogonal to omega_phi; forward difference for phidot
    if (k + 1 < n) {
      const double dt = st[k + 1].tau - st[k].tau;
      Profile g(grid.size());
      for (int i = 0; i < grid.size(); ++i)
        g[i] = st[k].tau * (st[k + 1].phi[i] - st[k].phi[i]) / dt + st[k].phi[i];
      const double vol = integrate_on_sphere(st[k].solution, ones);
      rep.orthogonality.push_back(std::abs(integrate_on_sphere(st[k].solution, g)) / vol);
    } else {
      rep.orthogonality.push_back(nan);
    }
  }
  return rep;
}

PropernessFit properness_fit(const std::vector<PropernessSample>& samples) {
  if (samples.size() < 10) throw InvalidArgument("properness fit needs at least 10 samples");
  PropernessFit fit;
  std::vector<PropernessSample> sorted(samples);
  std::sort(sorted.begin(), sorted.end(), [](auto& a, auto& b) { return a.J < b.J; });
  double jmin = std::numeric_limits<double>::infinity(), jmax = 0.0;
  for (const auto& s : sorted)
    if (s.J > 0) {
      jmin = std::min(jmin, s.J);
      jmax = std::max(jmax, s.J);
    }
  fit.J_decades = jmax > 0 ? std::log10(jmax / jmin) : 0.0;
  // C_eps counts as finite when the upper half of the J range does not raise the bound
  // already attained on the lower half
  const std::size_t half = sorted.size() / 2;
  for (int k = 1; k <= 100; ++k) {
    const double eps = 0.01 * k;
    double lower = -std::numeric_limits<double>::infinity(), upper = lower;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      const double v = eps * sorted[i].J - sorted[i].F;
      (i < half ? lower : upper) = std::max(i < half ? lower : upper, v);
    }
    fit.epsilon_grid.push_back(eps);
    fit.C_grid.push_back(std::max(lower, upper));
    const double slack = 1e-12 * (1.0 + std::abs(lower));
    if (upper <= lower + slack) {
      fit.epsilon = eps;
      fit.C = std::max(lower, upper);
    }
  }
  fit.flagged = fit.epsilon == 0.0;
  return fit;
}

}  // namespace conic_ke
