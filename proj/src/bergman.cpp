#include "conic_ke/bergman.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include "conic_ke/errors.hpp"
#include "conic_ke/parallel.hpp"

namespace conic_ke {

namespace {

/// One tail of int g omega, in the moment variable x (distance of Phi' to its pole value):
/// x0, x1 are the moment distances of the last two nodes, g0, g1 = log g there. Near the pole
/// g is either close to constant (linear in x) or dominated by a power x^p.
double log_tail(double lg0, double lg1, double x0, double x1) {
  const double p = (lg1 - lg0) / std::log(x1 / x0);
  if (std::abs(p) < 0.1) {
    const double r = std::exp(lg1 - lg0);
    const double bracket = 1.0 - 0.5 * (r - 1.0) * x0 / (x1 - x0);
    return lg0 + std::log(x0) + std::log(bracket);
  }
  if (!(p > -1.0)) throw DomainError("integrand is not integrable toward a pole");
  return lg0 + std::log(x0) - std::log1p(p);
}

/// int e^{g} omega split as log(2 pi) + logs of the grid part and of the two modelled tails.
struct LogIntegral {
  double grid_part, left_tail, right_tail;
  double total() const {
    const std::vector<double> t{grid_part, left_tail, right_tail};
    return std::log(2.0 * std::numbers::pi) + numerics::log_sum_exp(t);
  }
};

LogIntegral log_integral_parts(const Profile& g, const RadialKahlerPotential& pot) {
  const auto& grid = pot.grid();
  const int n = grid.size();
  const auto& w = grid.weights();
  const auto& d1 = pot.phi_prime();
  std::vector<double> terms(n);
  for (int i = 0; i < n; ++i) terms[i] = std::log(w[i]) + g[i] + std::log(pot.phi_doubleprime()[i]);
  const double xl = pot.tail_mass(Pole::zero), xr = pot.tail_mass(Pole::infinity);
  if (!(xl > 0.0) || !(xr > 0.0)) throw DomainError("potential has no mass beyond the grid");
  return {numerics::log_sum_exp(terms), log_tail(g[0], g[1], xl, xl + d1[1] - d1[0]),
          log_tail(g[n - 1], g[n - 2], xr, xr + d1[n - 1] - d1[n - 2])};
}

/// log int e^{g} omega for g sampled at the nodes: Simpson on the grid plus modelled tails.
double log_integral(const Profile& g, const RadialKahlerPotential& pot) {
  return log_integral_parts(g, pot).total();
}

double core_sup(const Profile& f, const Grid& grid) {
  double s = 0.0;
  for (int i = 0; i < grid.size(); ++i)
    if (std::abs(grid.node(i)) <= 0.5 * grid.half_width()) s = std::max(s, std::abs(f[i]));
  return s;
}

/// Normalized discrete angular integral (1/2pi) int e^{i d theta} with m equispaced points.
double angular_factor(int d, int m) {
  std::complex<double> s = 0.0;
  for (int j = 0; j < m; ++j) s += std::polar(1.0, 2.0 * std::numbers::pi * d * j / m);
  return std::abs(s) / m;
}

Profile monomial_log_norm(int k, int ell, const HermitianWeight& weight, const Grid& grid) {
  Profile u(grid.size());
  for (int i = 0; i < grid.size(); ++i) u[i] = k * grid.node(i) + ell * weight.log_norm[i];
  return u;
}

Profile monomial_log_slope(int k, int ell, const HermitianWeight& weight) {
  Profile u1(weight.log_norm_prime.size());
  for (std::size_t i = 0; i < u1.size(); ++i) u1[i] = k + ell * weight.log_norm_prime[i];
  return u1;
}

void check_ell(int ell) {
  if (ell < 1) throw InvalidArgument("ell must be a positive integer");
}

}  // namespace

HermitianWeight associated_hermitian_weight(const RadialKahlerPotential& pot, const ConeConfiguration& cone) {
  if (!cone.is_solver_configuration())
    throw InvalidArgument("hermitian weight needs lambda = 1 and D = {0, infinity}");
  const double mu = cone.mu(), beta = cone.beta();
  if (!(mu > 0.0)) throw InvalidArgument("mu must be positive");
  const auto& grid = pot.grid();
  const int n = grid.size();
  const auto rp = ricci_potential(pot, mu, beta);
  HermitianWeight hw;
  hw.mu = mu;
  hw.beta = beta;
  hw.log_norm.resize(n);
  Profile logd(n);
  for (int i = 0; i < n; ++i) logd[i] = std::log(pot.phi_doubleprime()[i]);
  // h' already contains -(log Phi'')', so adding it back cancels the difference quotient
  const auto slope = numerics::derivative(logd, grid.spacing(), 4);
  hw.log_norm_prime.resize(n);
  for (int i = 0; i < n; ++i) {
    hw.log_norm[i] = rp.h[i] / mu + logd[i] / mu - grid.node(i);
    hw.log_norm_prime[i] = (rp.h_prime[i] + slope[i]) / mu - 1.0;
  }
  // H(S, S) = |z|^2 H(dz, dz) for S = z d/dz; rescaling S by c shifts the metric by
  // (1-beta)/mu log|c|^2 and the section norm by log|c|^2 / mu in total
  Profile s(n);
  for (int i = 0; i < n; ++i) s[i] = grid.node(i) + hw.log_norm[i];
  const double log_i = log_integral(s, pot);
  hw.kappa = -(1.0 - beta) * log_i;
  const double log_c2 = -mu * log_i;
  for (auto& v : hw.log_norm) v += hw.kappa;
  hw.log_section_norm.resize(n);
  for (int i = 0; i < n; ++i) hw.log_section_norm[i] = grid.node(i) + hw.log_norm[i] + log_c2;
  hw.section_integral = std::exp(log_integral(hw.log_section_norm, pot));
  return hw;
}

double hermitian_curvature_residual(const HermitianWeight& weight, const RadialKahlerPotential& pot) {
  const auto& grid = pot.grid();
  auto d2 = numerics::derivative(weight.log_norm_prime, grid.spacing(), 4);
  for (int i = 0; i < grid.size(); ++i) d2[i] = -d2[i] - pot.phi_doubleprime()[i];
  return core_sup(d2, grid);
}

SectionBasisGram gram_matrix(int ell, const HermitianWeight& weight, const RadialKahlerPotential& pot) {
  check_ell(ell);
  const auto& grid = pot.grid();
  const int dim = 2 * ell + 1;
  SectionBasisGram g;
  g.ell = ell;
  g.log_diagonal.resize(dim);
  for (int k = 0; k < dim; ++k) g.log_diagonal[k] = log_integral(monomial_log_norm(k, ell, weight, grid), pot);
  double mean = 0.0;
  for (double v : g.log_diagonal) mean += v;
  g.log_scale = mean / dim;
  // angular quadrature with more points than the largest frequency difference
  const int m = 4 * ell + 4;
  g.gram.assign(static_cast<std::size_t>(dim) * dim, 0.0);
  Profile u(grid.size());
  for (int j = 0; j < dim; ++j) {
    g.gram[j * dim + j] = std::exp(g.log_diagonal[j] - g.log_scale);
    for (int k = j + 1; k < dim; ++k) {
      const double a = angular_factor(j - k, m);
      for (int i = 0; i < grid.size(); ++i) u[i] = 0.5 * (j + k) * grid.node(i) + ell * weight.log_norm[i];
      const double rel = a * std::exp(log_integral(u, pot) - 0.5 * (g.log_diagonal[j] + g.log_diagonal[k]));
      g.gram[j * dim + k] = g.gram[k * dim + j] =
          rel * std::exp(0.5 * (g.log_diagonal[j] + g.log_diagonal[k]) - g.log_scale);
      g.max_offdiagonal = std::max(g.max_offdiagonal, rel);
    }
  }
  return g;
}

BergmanDensity bergman_density(int ell, const SectionBasisGram& gram, const HermitianWeight& weight,
                               const RadialKahlerPotential& pot) {
  check_ell(ell);
  if (gram.ell != ell) throw InvalidArgument("gram matrix was built for a different ell");
  const auto& grid = pot.grid();
  const int n = grid.size(), dim = gram.dimension();
  for (int k = 0; k < dim; ++k)
    if (!std::isfinite(gram.log_diagonal[k])) throw Error("gram matrix is not positive definite");
  BergmanDensity b;
  b.ell = ell;
  b.rho.assign(n, 0.0);
  // the tail of rho mixes different powers of the moment distance, so it is integrated
  // monomial by monomial; the grid part is a direct quadrature of rho
  double tails = 0.0;
  for (int k = 0; k < dim; ++k) {
    const auto u = monomial_log_norm(k, ell, weight, grid);
    for (int i = 0; i < n; ++i) b.rho[i] += std::exp(u[i] - gram.log_diagonal[k]);
    const auto parts = log_integral_parts(u, pot);
    const double lg = gram.log_diagonal[k] - std::log(2.0 * std::numbers::pi);
    tails += std::exp(parts.left_tail - lg) + std::exp(parts.right_tail - lg);
  }
  b.inf = *std::min_element(b.rho.begin(), b.rho.end());
  b.sup = *std::max_element(b.rho.begin(), b.rho.end());
  double body = 0.0;
  for (int i = 0; i < n; ++i) body += grid.weights()[i] * b.rho[i] * pot.phi_doubleprime()[i];
  b.trace = 2.0 * std::numbers::pi * body + tails;
  return b;
}

std::vector<PartialC0Row> partial_c0_scan(const std::vector<double>& betas, const std::vector<int>& ells,
                                          const Grid& grid, int jobs) {
  for (double b : betas)
    if (!(b > 0.0 && b <= 1.0)) throw InvalidArgument("beta must lie in (0, 1]");
  for (int l : ells) check_ell(l);
  const int nb = static_cast<int>(betas.size()), nl = static_cast<int>(ells.size());
  std::vector<PartialC0Row> rows(static_cast<std::size_t>(nb) * nl);
  parallel_for(nb, jobs, [&](int ib) {
    const double beta = betas[ib];
    const auto pot = football_potential(grid, beta);
    const auto cone = ConeConfiguration::anticanonical_pair(beta);
    const auto weight = associated_hermitian_weight(pot, cone);
    for (int il = 0; il < nl; ++il) {
      const int ell = ells[il];
      const auto dens = bergman_density(ell, gram_matrix(ell, weight, pot), weight, pot);
      rows[ib * nl + il] = {beta, ell, dens.inf, dens.sup, dens.trace - (2 * ell + 1)};
    }
  });
  return rows;
}

BochnerResidual bochner_residual(int k, const RadialKahlerPotential& pot, int ell, const ConeConfiguration& cone) {
  check_ell(ell);
  if (k < 0 || k > 2 * ell) throw InvalidArgument("monomial index out of range");
  const auto& grid = pot.grid();
  const int n = grid.size();
  const double h = grid.spacing();
  const auto weight = associated_hermitian_weight(pot, cone);
  auto u = monomial_log_norm(k, ell, weight, grid);
  const double lg = log_integral(u, pot);
  for (auto& v : u) v -= lg;
  const auto& d2 = pot.phi_doubleprime();
  Profile logd(n);
  for (int i = 0; i < n; ++i) logd[i] = std::log(d2[i]);
  const auto u1 = monomial_log_slope(k, ell, weight);
  const auto u2 = numerics::derivative(u1, h, 4);
  const auto l1 = numerics::derivative(logd, h, 4);
  Profile norm(n), grad(n);
  for (int i = 0; i < n; ++i) {
    norm[i] = std::exp(u[i]);
    grad[i] = norm[i] * u1[i] * u1[i] / d2[i];
  }
  const auto lap_norm = numerics::second_derivative(norm, h, 4);
  const auto lap_grad = numerics::second_derivative(grad, h, 4);
  const double mu = cone.mu();
  BochnerResidual r;
  r.first.resize(n);
  r.second.resize(n);
  for (int i = 0; i < n; ++i) {
    // everything below is the identity multiplied by Phi''
    r.first[i] = lap_norm[i] - grad[i] * d2[i] + ell * norm[i] * d2[i];
    const double holo = u2[i] + u1[i] * u1[i] - u1[i] * l1[i];  // (2,0) part of the Hessian
    const double hess = norm[i] * (holo * holo + u2[i] * u2[i]) / d2[i];
    r.second[i] = lap_grad[i] - hess + (3.0 * ell - mu) * grad[i] * d2[i];
  }
  r.sup_first = core_sup(r.first, grid);
  r.sup_second = core_sup(r.second, grid);
  return r;
}

SectionNorms monomial_norms(int k, int ell, const SectionBasisGram& gram, const HermitianWeight& weight,
                            const RadialKahlerPotential& pot) {
  if (gram.ell != ell || k < 0 || k > 2 * ell) throw InvalidArgument("monomial index out of range");
  const auto& grid = pot.grid();
  const int n = grid.size();
  auto u = monomial_log_norm(k, ell, weight, grid);
  for (auto& v : u) v -= gram.log_diagonal[k];
  const auto u1 = monomial_log_slope(k, ell, weight);
  SectionNorms s;
  s.norm2.resize(n);
  s.grad2.resize(n);
  for (int i = 0; i < n; ++i) {
    s.norm2[i] = std::exp(u[i]);
    s.grad2[i] = s.norm2[i] * u1[i] * u1[i] / pot.phi_doubleprime()[i];
  }
  return s;
}

double gradient_estimate_ratio(int ell, const RadialKahlerPotential& pot, const ConeConfiguration& cone) {
  check_ell(ell);
  const auto weight = associated_hermitian_weight(pot, cone);
  const auto gram = gram_matrix(ell, weight, pot);
  const auto& grid = pot.grid();
  const int n = grid.size();
  // At a point, the value and the gradient of z^k share the phase pattern, so the sup over
  // unit sections of ||s|| + c ||grad s|| is max over signs of (sum_k ||s_k||^2 (1 +- w_k)^2)^{1/2}
  // with w_k = c u_k'/sqrt(Phi'').
  Profile plus(n, 0.0), minus(n, 0.0);
  const double c = 1.0 / std::sqrt(static_cast<double>(ell));
  for (int k = 0; k <= 2 * ell; ++k) {
    auto u = monomial_log_norm(k, ell, weight, grid);
    for (auto& v : u) v -= gram.log_diagonal[k];
    const auto u1 = monomial_log_slope(k, ell, weight);
    for (int i = 0; i < n; ++i) {
      const double e = std::exp(u[i]);
      const double w = c * u1[i] / std::sqrt(pot.phi_doubleprime()[i]);
      plus[i] += e * (1.0 + w) * (1.0 + w);
      minus[i] += e * (1.0 - w) * (1.0 - w);
    }
  }
  double best = 0.0;
  for (int i = 0; i < n; ++i) best = std::max({best, plus[i], minus[i]});
  return std::sqrt(best) / std::sqrt(static_cast<double>(ell));
}

PeakSectionReport peak_section_experiment(double t0, int ell, const RadialKahlerPotential& pot,
                                          const ConeConfiguration& cone, double width) {
  check_ell(ell);
  const auto& grid = pot.grid();
  if (!(std::abs(t0) <= 0.5 * grid.half_width())) throw DomainError("t0 lies outside the grid core");
  if (!(width > 0.0)) throw InvalidArgument("width must be positive");
  const int n = grid.size();
  const auto weight = associated_hermitian_weight(pot, cone);
  const auto gram = gram_matrix(ell, weight, pot);
  // ||z^k||^2 peaks where k + ell L' = 0
  const double kstar = -ell * numerics::interpolate(weight.log_norm_prime, grid.t_min(), grid.spacing(), t0);
  PeakSectionReport rep;
  rep.monomial = static_cast<int>(std::clamp<long>(std::lround(kstar), 0, 2 * ell));
  rep.width = width;
  const int k0 = rep.monomial;
  Profile logchi(n);
  for (int i = 0; i < n; ++i) logchi[i] = -0.5 * std::pow((grid.node(i) - t0) / width, 2);
  const auto u0 = monomial_log_norm(k0, ell, weight, grid);
  // coefficients <Q, z^k> / <z^k, z^k>; the angular factor removes every k != k0
  const int m = 4 * ell + 4;
  std::vector<double> coeff(2 * ell + 1, 0.0);
  Profile g(n);
  for (int k = 0; k <= 2 * ell; ++k) {
    const double a = angular_factor(k - k0, m);
    if (a == 0.0) continue;
    for (int i = 0; i < n; ++i) g[i] = logchi[i] + 0.5 * (k + k0) * grid.node(i) + ell * weight.log_norm[i];
    coeff[k] = a * std::exp(log_integral(g, pot) - gram.log_diagonal[k]);
  }
  // ||P Q||^2 and <P Q, Q> use the diagonal Gram matrix
  double proj2 = 0.0;
  for (int k = 0; k <= 2 * ell; ++k) proj2 += coeff[k] * coeff[k] * std::exp(gram.log_diagonal[k] - gram.log_diagonal[k0]);
  for (int i = 0; i < n; ++i) g[i] = 2.0 * logchi[i] + u0[i];
  const double q2 = std::exp(log_integral(g, pot) - gram.log_diagonal[k0]);
  rep.residual = std::sqrt(std::max(0.0, q2 - proj2) / q2);
  // at t0 the projection is coeff[k0] z^{k0} and the input is chi(t0) z^{k0} with chi(t0) = 1
  rep.value_ratio = coeff[k0];
  return rep;
}

}  // namespace conic_ke
