#include "conic_ke/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "conic_ke/errors.hpp"

namespace conic_ke {

namespace {

/// log(1 + e^x) without overflow.
double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

/// Tail mass from a quadratic moment profile u(s) = b*d + c*d^2 matched to the end node.
double extrapolated_tail(double d2phi, double slope_toward_pole, double beta) {
  const double denom = beta + slope_toward_pole;
  if (std::isfinite(denom) && denom > 0.25 * beta) return 2.0 * d2phi / denom;
  return d2phi / beta;
}

}  // namespace

RadialKahlerPotential::RadialKahlerPotential(Grid grid, Profile values, Profile phi_prime,
                                             Profile phi_doubleprime, double base_offset,
                                             double angle_at_zero, double angle_at_infinity,
                                             Check check)
    : grid_(std::move(grid)),
      values_(std::move(values)),
      phi_prime_(std::move(phi_prime)),
      phi_doubleprime_(std::move(phi_doubleprime)),
      base_offset_(base_offset),
      angle_zero_(angle_at_zero),
      angle_infinity_(angle_at_infinity) {
  const auto n = static_cast<std::size_t>(grid_.size());
  if (values_.size() != n || phi_prime_.size() != n || phi_doubleprime_.size() != n)
    throw InvalidArgument("potential profiles do not match the grid");
  for (double b : {angle_zero_, angle_infinity_})
    if (!(b > 0.0 && b <= 1.0)) throw InvalidArgument("cone fractions must lie in (0, 1]");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(values_[i]) || !std::isfinite(phi_prime_[i]))
      throw InvalidArgument("potential profile is not finite");
    if (!(phi_doubleprime_[i] > 0.0) || !std::isfinite(phi_doubleprime_[i]))
      throw InvalidArgument("metric positivity violated at node " + std::to_string(i));
  }
  if (check == Check::strict) {
    for (std::size_t i = 1; i < n; ++i)
      if (!(phi_prime_[i] > phi_prime_[i - 1]))
        throw InvalidArgument("moment map is not strictly increasing");
    const double t0 = grid_.t_min(), t1 = grid_.t_max();
    /// an exponential tail c e^{beta t} has Phi' = Phi''/beta whatever c is
    const double tail0 = std::max(10.0 * std::exp(angle_zero_ * t0), 2.0 * phi_doubleprime_.front() / angle_zero_);
    const double tail1 =
        std::max(10.0 * std::exp(-angle_infinity_ * t1), 2.0 * phi_doubleprime_.back() / angle_infinity_);
    if (std::abs(phi_prime_.front()) > tail0) throw InvalidArgument("moment map does not start at 0");
    if (std::abs(phi_prime_.back() - 2.0) > tail1) throw InvalidArgument("moment map does not end at 2");
    const auto d = numerics::derivative(phi_prime_, grid_.spacing(), 4);
    for (std::size_t i = 0; i < n; ++i)
      if (std::abs(d[i] - phi_doubleprime_[i]) > 1e-3 * (1.0 + phi_doubleprime_[i]))
        throw InvalidArgument("Phi'' is inconsistent with Phi'");
  }
  Profile logd(n);
  for (std::size_t i = 0; i < n; ++i) logd[i] = std::log(phi_doubleprime_[i]);
  const auto slope = numerics::derivative(logd, grid_.spacing(), 4);
  tail_left_ = extrapolated_tail(phi_doubleprime_.front(), slope.front(), angle_zero_);
  tail_right_ = extrapolated_tail(phi_doubleprime_.back(), -slope.back(), angle_infinity_);
}

Profile RadialKahlerPotential::potential_profile() const {
  Profile p(values_);
  for (auto& v : p) v += base_offset_;
  return p;
}

double RadialKahlerPotential::moment_limit(Pole p) const {
  return p == Pole::zero ? phi_prime_.front() - tail_left_ : phi_prime_.back() + tail_right_;
}

double RadialKahlerPotential::tail_mass(Pole p) const {
  return p == Pole::zero ? tail_left_ : tail_right_;
}

RadialKahlerPotential RadialKahlerPotential::with_offset(double offset) const {
  RadialKahlerPotential copy(*this);
  copy.base_offset_ = offset;
  return copy;
}

RadialKahlerPotential RadialKahlerPotential::scaled(double c) const {
  if (!(c > 0)) throw InvalidArgument("metric scale must be positive");
  auto mul = [c](Profile p) {
    for (auto& v : p) v *= c;
    return p;
  };
  RadialKahlerPotential out(grid_, mul(values_), mul(phi_prime_), mul(phi_doubleprime_),
                            c * base_offset_, angle_zero_, angle_infinity_, Check::basic);
  out.tail_left_ = c * tail_left_;
  out.tail_right_ = c * tail_right_;
  return out;
}

RadialKahlerPotential RadialKahlerPotential::with_tail_masses(double left, double right) const {
  if (!(left >= 0) || !(right >= 0)) throw InvalidArgument("tail masses must be nonnegative");
  RadialKahlerPotential copy(*this);
  copy.tail_left_ = left;
  copy.tail_right_ = right;
  return copy;
}

ConeConfiguration::ConeConfiguration(int lambda, double beta, std::vector<ConePoint> points)
    : lambda_(lambda), beta_(beta), points_(std::move(points)) {
  if (lambda < 1) throw InvalidArgument("lambda must be a positive integer");
  if (!(beta > 0.0 && beta <= 1.0)) throw InvalidArgument("beta must lie in (0, 1]");
  mu_ = 1.0 - (1.0 - beta) * lambda;
  if (!(mu_ > 0.0)) throw InvalidArgument("mu = 1 - (1 - beta) lambda must be positive");
  for (const auto& p : points_)
    if (!(p.weight > 0.0)) throw InvalidArgument("divisor weights must be positive");
}

ConeConfiguration ConeConfiguration::anticanonical_pair(double beta) {
  return ConeConfiguration(1, beta, {ConePoint::pole(Pole::zero), ConePoint::pole(Pole::infinity)});
}

bool ConeConfiguration::is_solver_configuration() const {
  if (lambda_ != 1 || points_.size() != 2) return false;
  bool zero = false, inf = false;
  for (const auto& p : points_) {
    zero |= p.kind == PointKind::zero && p.weight == 1.0;
    inf |= p.kind == PointKind::infinity && p.weight == 1.0;
  }
  return zero && inf;
}

RadialKahlerPotential fubini_study_potential(const Grid& grid) { return football_potential(grid, 1.0); }

RadialKahlerPotential football_potential(const Grid& grid, double beta) {
  if (!(beta > 0.0 && beta <= 1.0)) throw InvalidArgument("beta must lie in (0, 1]");
  const int n = grid.size();
  Profile v(n), d1(n), d2(n);
  for (int i = 0; i < n; ++i) {
    const double x = beta * grid.node(i);
    // logistic sigma(x) = e^x/(1+e^x)
    const double s = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    v[i] = 2.0 / beta * softplus(x);
    d1[i] = 2.0 * s;
    // s(1-s) written symmetrically so it keeps full relative precision in both tails
    const double e = std::exp(-std::abs(x));
    d2[i] = 2.0 * beta * e / ((1.0 + e) * (1.0 + e));
  }
  return RadialKahlerPotential(grid, std::move(v), std::move(d1), std::move(d2), 0.0, beta, beta);
}

double area(const RadialKahlerPotential& pot) {
  return 2.0 * std::numbers::pi * (pot.moment_limit(Pole::infinity) - pot.moment_limit(Pole::zero));
}

Profile ricci_density(const RadialKahlerPotential& pot, int order) {
  const auto& d2 = pot.phi_doubleprime();
  Profile logd(d2.size());
  for (std::size_t i = 0; i < d2.size(); ++i) logd[i] = std::log(d2[i]);
  auto r = numerics::second_derivative(logd, pot.grid().spacing(), order);
  for (auto& v : r) v = -v;
  return r;
}

Profile gauss_curvature_profile(const RadialKahlerPotential& pot) {
  auto k = ricci_density(pot);
  for (std::size_t i = 0; i < k.size(); ++i) k[i] /= pot.phi_doubleprime()[i];
  return k;
}

double gauss_curvature(const RadialKahlerPotential& pot, double t) {
  const auto& g = pot.grid();
  if (!(t >= g.t_min() + 2 * g.spacing() && t <= g.t_max() - 2 * g.spacing()))
    throw DomainError("curvature requested too close to the grid boundary");
  return numerics::interpolate(gauss_curvature_profile(pot), g.t_min(), g.spacing(), t);
}

double cone_angle_at_pole(const RadialKahlerPotential& pot, Pole pole) {
  const auto& g = pot.grid();
  const int n = g.size();
  const int m = std::max(5, static_cast<int>(std::lround(0.2 * n)));
  std::vector<double> x, y;
  for (int k = 0; k < m; ++k) {
    const int i = pole == Pole::zero ? k : n - 1 - k;
    x.push_back(g.node(i));
    y.push_back(std::log(pot.phi_doubleprime()[i]));
  }
  const auto fit = numerics::fit_line(x, y);
  if (fit.rms > 0.02) throw FitError("log Phi'' is not asymptotically linear at the pole");
  const double sign = pole == Pole::zero ? 1.0 : -1.0;
  if (!(sign * fit.slope > 0.0)) throw FitError("log-slope at the pole has the wrong sign");

  // Refine in the moment variable: Phi'' = a + b u + c u^2 with u = Phi' - Phi'(end).
  // The pole is the root u* near 0 and the angle is |dPhi''/dPhi'| there.
  const int e = pole == Pole::zero ? 0 : n - 1;
  const double u0 = pot.phi_prime()[e];
  double s[5] = {0, 0, 0, 0, 0}, r[3] = {0, 0, 0};
  for (int k = 0; k < m; ++k) {
    const int i = pole == Pole::zero ? k : n - 1 - k;
    const double u = pot.phi_prime()[i] - u0, y = pot.phi_doubleprime()[i];
    double p = 1.0;
    for (int j = 0; j < 5; ++j, p *= u) {
      s[j] += p;
      if (j < 3) r[j] += p * y;
    }
  }
  const auto det3 = [](double a0, double a1, double a2, double b0, double b1, double b2, double c0, double c1,
                       double c2) { return a0 * (b1 * c2 - b2 * c1) - a1 * (b0 * c2 - b2 * c0) + a2 * (b0 * c1 - b1 * c0); };
  const double d = det3(s[0], s[1], s[2], s[1], s[2], s[3], s[2], s[3], s[4]);
  const double a = det3(r[0], s[1], s[2], r[1], s[2], s[3], r[2], s[3], s[4]) / d;
  const double b = det3(s[0], r[0], s[2], s[1], r[1], s[3], s[2], r[2], s[4]) / d;
  const double c = det3(s[0], s[1], r[0], s[1], s[2], r[1], s[2], s[3], r[2]) / d;
  double u = 0.0;
  for (int it = 0; it < 50; ++it) {
    const double du = (a + u * (b + c * u)) / (b + 2.0 * c * u);
    u -= du;
    if (std::abs(du) < 1e-15) break;
  }
  double beta = sign * (b + 2.0 * c * u);
  // fall back to the log-slope if the quadratic model is not trustworthy
  if (!std::isfinite(beta) || !(beta > 0.0) || std::abs(beta - sign * fit.slope) > 0.05) beta = sign * fit.slope;
  return std::min(beta, 1.0);
}

double log_section_norm(double t) {
  // log sech^2(t/2) = -2 log cosh(t/2)
  const double a = std::abs(0.5 * t);
  return -2.0 * (a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2);
}

Profile defining_section_norm(const Grid& grid) {
  Profile s(grid.size());
  for (int i = 0; i < grid.size(); ++i) s[i] = std::exp(log_section_norm(grid.node(i)));
  return s;
}

double integrate_on_sphere(const RadialKahlerPotential& pot, std::span<const double> f,
                           double tail_left, double tail_right) {
  const auto& w = pot.grid().weights();
  const auto& d2 = pot.phi_doubleprime();
  if (f.size() != d2.size()) throw InvalidArgument("integrand does not match the grid");
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += w[i] * f[i] * d2[i];
  s += f.front() * tail_left + f.back() * tail_right;
  return 2.0 * std::numbers::pi * s;
}

double integrate_on_sphere(const RadialKahlerPotential& pot, std::span<const double> f) {
  return integrate_on_sphere(pot, f, pot.tail_mass(Pole::zero), pot.tail_mass(Pole::infinity));
}

RicciPotential ricci_potential(const RadialKahlerPotential& pot, double mu, double beta) {
  const auto& g = pot.grid();
  const int n = g.size();
  Profile logd(n);
  for (int i = 0; i < n; ++i) logd[i] = std::log(pot.phi_doubleprime()[i]);
  const auto slope = numerics::derivative(logd, g.spacing(), 6);
  RicciPotential r;
  r.h_prime.resize(n);
  for (int i = 0; i < n; ++i) r.h_prime[i] = beta - slope[i] - mu * pot.phi_prime()[i];
  r.h = numerics::cumulative_integral(r.h_prime, g.spacing());
  const double shift = r.h[n / 2];
  for (auto& v : r.h) v -= shift;

  Profile ones(n, 1.0);
  const double vol = integrate_on_sphere(pot, ones);
  Profile e(n);
  auto excess = [&](double c) {
    for (int i = 0; i < n; ++i) e[i] = std::exp(r.h[i] + c);
    return integrate_on_sphere(pot, e) - vol;
  };
  const double c = numerics::solve_increasing(excess, -1.0, 1.0);
  for (auto& v : r.h) v += c;
  r.normalization = c;
  return r;
}

RicciPotential ricci_potential_h0(const RadialKahlerPotential& pot0) {
  if (pot0.angle_at_zero() != 1.0 || pot0.angle_at_infinity() != 1.0)
    throw InvalidArgument("reference metric must be smooth at both poles");
  return ricci_potential(pot0, 1.0, 1.0);
}

}  // namespace conic_ke
