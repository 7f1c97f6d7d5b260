#include <cmath>
#include <numbers>

#include "conic_ke/errors.hpp"
#include "conic_ke/ma_solver.hpp"

namespace conic_ke {

namespace {

constexpr int kTailNodes = 6001;
constexpr double kTailDecades = 45.0;

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

/// h_delta without its additive constant.
double bare_log_weight(double t, double beta, double delta) {
  const double ls = log_section_norm(t);
  if (delta == 0.0) return -(1.0 - beta) * ls;
  // log(delta + e^ls), stable in both regimes
  const double m = std::max(std::log(delta), ls);
  return -(1.0 - beta) * (m + std::log(std::exp(std::log(delta) - m) + std::exp(ls - m)));
}

/// log of the Fubini-Study density Phi0'' = sech^2(t/2)/2.
double log_fs_density(double t) { return log_section_norm(t) - std::numbers::ln2; }

struct TailGrid {
  double step;
  std::vector<double> s;
};

TailGrid tail_grid(double t_node, int direction, double rate) {
  TailGrid g;
  g.step = kTailDecades / rate / (kTailNodes - 1);
  g.s.resize(kTailNodes);
  for (int j = 0; j < kTailNodes; ++j) g.s[j] = t_node + direction * j * g.step;
  return g;
}

/// Simpson integral on the tail grid plus the exponential remainder beyond it.
double tail_integral(const Profile& f, double step, double rate) {
  return numerics::simpson(f, step) + f.back() / rate;
}

double decay_rate(double beta, double delta) { return delta == 0.0 ? beta : 1.0; }

/// int Phi0'' e^{h} over one tail, h without constant.
double bare_tail_mass(double t_node, int direction, double beta, double delta) {
  const double rate = decay_rate(beta, delta);
  const auto g = tail_grid(t_node, direction, rate);
  Profile f(kTailNodes);
  for (int j = 0; j < kTailNodes; ++j)
    f[j] = std::exp(log_fs_density(g.s[j]) + bare_log_weight(g.s[j], beta, delta));
  return tail_integral(f, g.step, rate);
}

TailModel build_tail(double t_node, int direction, double beta, double delta, double constant) {
  const double rate = decay_rate(beta, delta);
  const auto grid = tail_grid(t_node, direction, rate);
  TailModel tm;
  tm.step = grid.step;
  const int m = kTailNodes;
  tm.density.resize(m);
  for (int j = 0; j < m; ++j)
    tm.density[j] = std::exp(log_fs_density(grid.s[j]) + bare_log_weight(grid.s[j], beta, delta) + constant);
  // W(s): density mass beyond s (toward the pole)
  Profile w(m);
  w[m - 1] = tm.density[m - 1] / rate;
  for (int j = m - 2; j >= 0; --j) w[j] = w[j + 1] + 0.5 * tm.step * (tm.density[j] + tm.density[j + 1]);
  tm.g.assign(m, 0.0);
  for (int j = 1; j < m; ++j) tm.g[j] = tm.g[j - 1] + 0.5 * tm.step * (w[j - 1] + w[j]);
  tm.e.resize(m);
  // the reference moment distance to the pole is 2*sigma(-direction*s); E integrates it
  const double outward = -static_cast<double>(direction);
  for (int j = 0; j < m; ++j)
    tm.e[j] = 2.0 * (softplus(outward * t_node) - softplus(outward * grid.s[j]));
  tm.weight_mass = tail_integral(tm.density, tm.step, rate);
  tm.reference_mass = 2.0 / (1.0 + std::exp(-outward * t_node));
  return tm;
}

}  // namespace

double TailModel::flux(double phi, double tau, double* derivative) const {
  if (tau == 0.0) {
    if (derivative) *derivative = 0.0;
    return weight_mass;
  }
  const double q = std::exp(-tau * phi);
  const int m = static_cast<int>(density.size());
  Profile f(m), fg(m);
  for (int j = 0; j < m; ++j) {
    const double ex = std::exp(tau * (q * g[j] - e[j]));
    f[j] = density[j] * ex;
    fg[j] = f[j] * g[j];
  }
  double rate_guess = std::log(density[m - 2] / density[m - 1]) / step;
  if (!(rate_guess > 0.0) || !std::isfinite(rate_guess)) rate_guess = 1.0;
  const double base = numerics::simpson(f, step) + f.back() / rate_guess;
  const double flux_value = q * base;
  if (derivative) {
    const double corr = numerics::simpson(fg, step) + fg.back() / rate_guess;
    *derivative = -tau * flux_value - tau * tau * q * q * corr;
  }
  return flux_value;
}

std::vector<double> scheme_weights(const Grid& grid) {
  const int n = grid.size();
  std::vector<double> w(n, grid.spacing());
  w[0] = w[n - 1] = 5.0 / 12.0 * grid.spacing();
  w[1] = w[n - 2] = 13.0 / 12.0 * grid.spacing();
  return w;
}

namespace {

double normalizing_constant(double beta, double delta, const Grid& grid) {
  const int n = grid.size();
  const auto w = scheme_weights(grid);
  double bare = 0.0, reference = 0.0;
  for (int i = 0; i < n; ++i) {
    const double t = grid.node(i);
    const double d = std::exp(log_fs_density(t));
    reference += w[i] * d;
    bare += w[i] * std::exp(log_fs_density(t) + bare_log_weight(t, beta, delta));
  }
  // exact Fubini-Study tails: Phi0'(t_min) and 2 - Phi0'(t_max)
  reference += 2.0 / (1.0 + std::exp(-grid.t_min())) + 2.0 / (1.0 + std::exp(grid.t_max()));
  bare += bare_tail_mass(grid.t_min(), -1, beta, delta) + bare_tail_mass(grid.t_max(), +1, beta, delta);
  // root of the increasing map c -> e^c * bare - reference
  auto excess = [&](double c) { return std::exp(c) * bare - reference; };
  const double guess = std::log(reference / bare);
  return numerics::solve_increasing(excess, guess - 1.0, guess + 1.0);
}

}  // namespace

double compute_a_beta(double beta, const Grid& grid) {
  if (!(beta > 0.0 && beta <= 1.0)) throw InvalidArgument("beta must lie in (0, 1]");
  if (beta == 1.0) return 0.0;
  return normalizing_constant(beta, 0.0, grid);
}

double compute_c_delta(double beta, double delta, const Grid& grid) {
  if (!(beta > 0.0 && beta <= 1.0)) throw InvalidArgument("beta must lie in (0, 1]");
  if (!(delta > 0.0) || !std::isfinite(delta)) throw InvalidArgument("delta must be positive");
  if (beta == 1.0) return 0.0;
  return normalizing_constant(beta, delta, grid);
}

ReferenceWeight make_reference_weight(double beta, double delta, const Grid& grid) {
  if (!(delta >= 0.0)) throw InvalidArgument("delta must be nonnegative");
  ReferenceWeight rw;
  rw.beta = beta;
  rw.delta = delta;
  rw.constant = delta == 0.0 ? compute_a_beta(beta, grid) : compute_c_delta(beta, delta, grid);
  rw.log_weight.resize(grid.size());
  for (int i = 0; i < grid.size(); ++i)
    rw.log_weight[i] = bare_log_weight(grid.node(i), beta, delta) + rw.constant;
  rw.left = build_tail(grid.t_min(), -1, beta, delta, rw.constant);
  rw.right = build_tail(grid.t_max(), +1, beta, delta, rw.constant);
  return rw;
}

}  // namespace conic_ke
