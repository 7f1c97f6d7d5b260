#include "conic_ke/cone_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>

#include "conic_ke/errors.hpp"
#include "conic_ke/numerics.hpp"

namespace conic_ke {

namespace {

constexpr double kPi = std::numbers::pi;
const double kLog3 = std::log(3.0);

void check_radii(const std::vector<double>& r) {
  if (r.empty()) throw InvalidArgument("radius list is empty");
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!(r[i] > 0.0)) throw InvalidArgument("radii must be positive");
    if (i > 0 && !(r[i] > r[i - 1])) throw InvalidArgument("radii must be increasing");
  }
}

/// Volume of {a <= |w| <= b} in R^d (d = 0 counts a point).
double shell_volume(int d, double a, double b) {
  if (d == 0) return 1.0;
  const double c = unit_ball_volume(d);
  return numerics::integrate([&](double w) { return d * c * std::pow(w, d - 1); }, a, b, 4, 16);
}

void finish_ratios(VolumeRatioReport& rep, double unit, double tolerance) {
  rep.monotone = true;
  for (std::size_t i = 1; i < rep.ratio.size(); ++i) {
    const double inc = rep.ratio[i] - rep.ratio[i - 1];
    rep.max_increase = std::max(rep.max_increase, inc);
    if (inc > tolerance * std::max(1.0, rep.ratio[i - 1])) rep.monotone = false;
  }
  // ratio = a + b r^2 through the three smallest radii
  const std::size_t m = std::min<std::size_t>(3, rep.r.size());
  if (m == 1) {
    rep.limit = rep.ratio[0];
  } else {
    std::vector<double> x(m), y(m);
    for (std::size_t i = 0; i < m; ++i) {
      x[i] = rep.r[i] * rep.r[i];
      y[i] = rep.ratio[i];
    }
    rep.limit = numerics::fit_line(x, y).intercept;
  }
  rep.beta_estimate = rep.limit / unit;
}

/// Deterministic uniform and normal variates from the raw 64-bit stream.
struct Sampler {
  std::mt19937_64 engine;
  explicit Sampler(std::uint64_t seed) : engine(seed) {}
  double uniform() { return static_cast<double>(engine() >> 11) * 0x1.0p-53; }
  double normal() {
    const double u1 = 1.0 - uniform(), u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }
};

}  // namespace

double unit_ball_volume(int d) {
  if (d < 0) throw InvalidArgument("dimension must be nonnegative");
  return std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

FlatConeModel::FlatConeModel(int n, double beta_bar) : n_(n), beta_bar_(beta_bar) {
  if (n < 1) throw InvalidArgument("dimension n must be at least 1");
  if (!(beta_bar > 0.0 && beta_bar <= 1.0)) throw InvalidArgument("cone fraction must lie in (0, 1]");
}

FlatConeModel flat_cone_metric(int n, double beta_bar) { return FlatConeModel(n, beta_bar); }

double FlatConeModel::cone_distance(double rho1, double theta1, double rho2, double theta2) const {
  if (!(rho1 >= 0.0) || !(rho2 >= 0.0)) throw InvalidArgument("cone radius must be nonnegative");
  double d = std::fmod(std::abs(theta1 - theta2), 2.0 * kPi);
  d = std::min(d, 2.0 * kPi - d);
  const double phi = beta_bar_ * d;
  if (phi >= kPi) return rho1 + rho2;
  // law of cosines in the unrolled sector, written to avoid cancellation
  const double s = std::sin(0.5 * phi);
  return std::sqrt((rho1 - rho2) * (rho1 - rho2) + 4.0 * rho1 * rho2 * s * s);
}

double FlatConeModel::distance(const ConeCoordinates& a, const ConeCoordinates& b) const {
  const std::size_t dim = 2 * static_cast<std::size_t>(n_) - 2;
  if (a.z.size() != dim || b.z.size() != dim) throw InvalidArgument("flat coordinates have the wrong size");
  double s = 0.0;
  for (std::size_t i = 0; i < dim; ++i) s += (a.z[i] - b.z[i]) * (a.z[i] - b.z[i]);
  const double c = cone_distance(a.rho, a.theta, b.rho, b.theta);
  return std::sqrt(s + c * c);
}

double FlatConeModel::circumference(double r) const { return 2.0 * kPi * beta_bar_ * r; }

double FlatConeModel::vertex_ball_volume(double r) const {
  return beta_bar_ * unit_ball_volume(2 * n_) * std::pow(r, 2 * n_);
}

LogLogCutoff::LogLogCutoff(double eps_bar, double log_inv_delta) : eps_(eps_bar), big_l_(log_inv_delta) {
  if (!(eps_bar > 0.0)) throw InvalidArgument("eps_bar must be positive");
  if (!(log_inv_delta > kLog3) || !std::isfinite(log_inv_delta)) throw InvalidArgument("delta must be below 1/3");
}

LogLogCutoff loglog_cutoff(double eps_bar, double delta) {
  if (!(delta > 0.0 && delta < 1.0 / 3.0)) throw InvalidArgument("delta must lie in (0, 1/3)");
  return LogLogCutoff(eps_bar, -std::log(delta));
}

double LogLogCutoff::window_lo() const { return std::log(big_l_); }
double LogLogCutoff::window_hi() const { return std::log(3.0 * big_l_); }

double LogLogCutoff::eta(double s) const {
  if (s <= window_lo()) return 1.0;
  if (s >= window_hi()) return 0.0;
  return (window_hi() - s) / kLog3;
}

double LogLogCutoff::eta_slope(double s) const {
  return (s > window_lo() && s < window_hi()) ? -1.0 / kLog3 : 0.0;
}

double LogLogCutoff::value_at_log(double log_rho) const {
  const double l = std::log(eps_) - log_rho;
  if (l <= 0.0) return 1.0;
  return eta(std::log(l));
}

double LogLogCutoff::value(double rho) const {
  if (!(rho >= 0.0)) throw InvalidArgument("rho must be nonnegative");
  return rho == 0.0 ? 0.0 : value_at_log(std::log(rho));
}

double LogLogCutoff::scaled_gradient(double log_rho) const {
  const double l = std::log(eps_) - log_rho;
  if (l <= 0.0) return 0.0;
  return std::abs(eta_slope(std::log(l))) / l;
}

double LogLogCutoff::scaled_gradient_bound(double log_rho) const {
  const double l = std::log(eps_) - log_rho;
  if (l <= 0.0) throw DomainError("gradient bound only applies below eps_bar");
  return 1.0 / l;
}

double select_log_inv_delta(int n, double eps_bar, double beta_bar, DeltaRule rule) {
  if (n < 1) throw InvalidArgument("dimension n must be at least 1");
  if (!(eps_bar > 0.0)) throw InvalidArgument("eps_bar must be positive");
  if (!(beta_bar > 0.0 && beta_bar <= 1.0)) throw InvalidArgument("cone fraction must lie in (0, 1]");
  const double a = unit_ball_volume(2 * n - 2);
  const double literal = a / std::pow(eps_bar, 2 * n - 1);
  double l = literal;
  // the ramp has |eta'| <= 1 over a window of length log 3, and the circle factor is 2 pi beta_bar
  if (rule == DeltaRule::automatic) l = std::max(literal, 4.0 * kPi / 3.0 * beta_bar * literal);
  return std::max(l, 2.0);
}

DirichletEnergyReport dirichlet_energy(const LogLogCutoff& cutoff, const FlatConeModel& model, double radius) {
  const int n = model.n();
  const double eps = cutoff.eps_bar();
  const double big_r = radius > 0.0 ? radius : 1.0 / eps;
  if (!(big_r > eps)) throw InvalidArgument("region radius must exceed eps_bar");
  const double bb = model.beta_bar();
  const int flat = 2 * n - 2;
  // direct: s = log(-log(rho/eps)), flat factor integrated over the slice of B_R
  auto integrand = [&](double s) {
    const double slope = cutoff.eta_slope(s);
    const double rho = eps * std::exp(-std::exp(s));
    const double wmax = std::sqrt(std::max(0.0, big_r * big_r - rho * rho));
    return slope * slope * std::exp(-s) * 2.0 * kPi * bb * shell_volume(flat, 0.0, wmax);
  };
  DirichletEnergyReport rep;
  rep.energy = numerics::integrate(integrand, cutoff.window_lo(), cutoff.window_hi(), 8, 16);
  // co-area: int eta'(log(-log r))^2 dr / (r (-log r)^2) over delta^3 < r < delta, in L = -log r
  const double big_l = cutoff.log_inv_delta();
  const double one_d = numerics::integrate(
      [&](double l) {
        const double slope = cutoff.eta_slope(std::log(l));
        return slope * slope / (l * l);
      },
      big_l, 3.0 * big_l, 8, 16);
  rep.coarea = 2.0 * kPi * bb * unit_ball_volume(flat) * std::pow(big_r, flat) * one_d;
  rep.coarea_relative_diff = std::abs(rep.coarea - rep.energy) / rep.energy;
  const double a = unit_ball_volume(flat);
  rep.literal_bound = a / (std::pow(eps, 2 * n - 2) * big_l);
  rep.corrected_bound = 4.0 * kPi / 3.0 * bb * rep.literal_bound;
  rep.within_literal = rep.energy <= rep.literal_bound;
  rep.within_corrected = rep.energy <= rep.corrected_bound;
  rep.below_eps = rep.energy <= eps;
  return rep;
}

double bar_eta(double t) {
  if (t <= 1.1) return 0.0;
  if (t >= 1.6) return 1.0;
  return 2.0 * (t - 1.1);
}

namespace {
double bar_eta_slope(double t) { return (t > 1.1 && t < 1.6) ? 2.0 : 0.0; }

/// Integer points k in Z^d with |k| <= bound.
void lattice_points(int d, double bound, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == d) {
    double s = 0.0;
    for (int v : cur) s += static_cast<double>(v) * v;
    if (s <= bound * bound) out.push_back(cur);
    return;
  }
  const int m = static_cast<int>(std::floor(bound));
  for (int v = -m; v <= m; ++v) {
    cur.push_back(v);
    lattice_points(d, bound, cur, out);
    cur.pop_back();
  }
}
}  // namespace

BallCoverReport ball_cover_cutoff(const FlatConeModel& model, const CodimFourSubspace& singular, double eps0,
                                  double region_radius, std::uint64_t seed, int samples) {
  const int n = model.n();
  if (n < 2) throw InvalidArgument("a codimension-4 singular set needs n >= 2");
  if (!(eps0 > 0.0)) throw InvalidArgument("eps0 must be positive");
  if (!(region_radius > 0.0)) throw InvalidArgument("region radius must be positive");
  if (samples < 100) throw InvalidArgument("too few Monte-Carlo samples");
  const int flat = 2 * n - 2, d = 2 * n - 4, dim = 2 * n - 1;
  const double r = 0.5 * eps0;
  BallCoverReport rep;
  rep.seed = seed;
  rep.samples = samples;
  const double off2 = singular.offset[0] * singular.offset[0] + singular.offset[1] * singular.offset[1];
  // equal balls on a cubic lattice of the flat singular piece; spacing 2r/sqrt(d) covers it
  // and stays >= r, so the half balls are disjoint
  if (off2 <= region_radius * region_radius) {
    const double reach = std::sqrt(region_radius * region_radius - off2);
    const double spacing = d > 0 ? 2.0 * r / std::sqrt(static_cast<double>(d)) : 0.0;
    std::vector<std::vector<int>> pts;
    std::vector<int> cur;
    if (d == 0) {
      pts.push_back({});
    } else {
      lattice_points(d, (reach + 0.5 * spacing * std::sqrt(static_cast<double>(d))) / spacing, cur, pts);
    }
    for (const auto& k : pts) {
      std::vector<double> c(flat + 1, 0.0);
      c[0] = singular.offset[0];
      c[1] = singular.offset[1];
      for (int j = 0; j < d; ++j) c[2 + j] = spacing * k[j];
      rep.centers.push_back(std::move(c));
      rep.radii.push_back(r);
    }
  }
  const std::size_t m = rep.centers.size();
  for (double ra : rep.radii) rep.radius_sum += std::pow(ra, 2 * n - 3);
  if (rep.radius_sum > 1.0) throw CoverInfeasible("sum of r^(2n-3) exceeds 1; reduce eps0");
  rep.min_center_gap = std::numeric_limits<double>::infinity();
  if (m <= 4000) {
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = a + 1; b < m; ++b) {
        double s = 0.0;
        for (int j = 0; j < dim; ++j) s += std::pow(rep.centers[a][j] - rep.centers[b][j], 2);
        rep.min_center_gap = std::min(rep.min_center_gap, std::sqrt(s) / (0.5 * rep.radii[a] + 0.5 * rep.radii[b]));
      }
  } else {
    rep.min_center_gap = 2.0 / std::sqrt(static_cast<double>(d));
  }
  if (m == 0) return rep;

  // one ball: |grad chi_a| = 2 / r_a on the shell 1.1 r_a < d < 1.6 r_a
  const double unit = unit_ball_volume(2 * n);
  double single = 0.0;
  for (double ra : rep.radii)
    single += 4.0 / (ra * ra) * model.beta_bar() * unit * std::pow(ra, 2 * n) * (std::pow(1.6, 2 * n) - std::pow(1.1, 2 * n));

  // Monte-Carlo over the union of the supports B_{2 r_a}: pick a ball, sample it uniformly
  // (the cone measure is beta_bar times Lebesgue in these coordinates), divide by multiplicity
  Sampler rng(seed);
  const double vol_ball = model.beta_bar() * unit * std::pow(2.0 * r, 2 * n);
  const double total = vol_ball * static_cast<double>(m);
  std::vector<double> x(2 * n), y(dim), grad(dim);
  std::vector<std::size_t> near;
  std::vector<double> chi, slope, dist;
  double sum = 0.0, sum2 = 0.0;
  int max_overlap = 1;
  for (int k = 0; k < samples; ++k) {
    const std::size_t a = std::min<std::size_t>(m - 1, static_cast<std::size_t>(rng.uniform() * m));
    double norm = 0.0;
    for (auto& v : x) {
      v = rng.normal();
      norm += v * v;
    }
    const double rad = 2.0 * r * std::pow(rng.uniform(), 1.0 / (2 * n)) / std::sqrt(norm);
    for (int j = 0; j < flat; ++j) y[j] = rep.centers[a][j] + rad * x[j];
    y[flat] = rad * std::hypot(x[flat], x[flat + 1]);  // rho
    near.clear();
    chi.clear();
    slope.clear();
    dist.clear();
    for (std::size_t b = 0; b < m; ++b) {
      double s = 0.0;
      for (int j = 0; j < dim; ++j) s += (y[j] - rep.centers[b][j]) * (y[j] - rep.centers[b][j]);
      const double db = std::sqrt(s);
      if (db < 2.0 * rep.radii[b]) {
        near.push_back(b);
        chi.push_back(bar_eta(db / rep.radii[b]));
        slope.push_back(bar_eta_slope(db / rep.radii[b]) / rep.radii[b]);
        dist.push_back(db);
      }
    }
    max_overlap = std::max(max_overlap, static_cast<int>(near.size()));
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < near.size(); ++i) {
      if (slope[i] == 0.0) continue;
      double others = 1.0;
      for (std::size_t j = 0; j < near.size(); ++j)
        if (j != i) others *= chi[j];
      for (int c = 0; c < dim; ++c) grad[c] += others * slope[i] * (y[c] - rep.centers[near[i]][c]) / dist[i];
    }
    double g2 = 0.0;
    for (double v : grad) g2 += v * v;
    const double f = g2 / static_cast<double>(near.size());
    sum += f;
    sum2 += f * f;
  }
  const double mean = sum / samples;
  const double var = std::max(0.0, sum2 / samples - mean * mean);
  rep.energy = total * mean;
  rep.standard_error = total * std::sqrt(var / samples);
  rep.max_overlap = max_overlap;
  rep.bound = max_overlap * single;
  rep.constant = rep.bound / eps0;
  return rep;
}

VolumeRatioReport volume_ratio_profile(const FlatConeModel& model, const ConeCoordinates& center,
                                       const std::vector<double>& r_list, double tolerance) {
  check_radii(r_list);
  const int n = model.n();
  const double bb = model.beta_bar();
  const double rho0 = center.rho;
  if (!(rho0 >= 0.0)) throw InvalidArgument("cone radius must be nonnegative");
  // area of the 2-d geodesic disc of radius s about a point at distance rho0 from the vertex
  auto disc_area = [&](double s) -> double {
    if (s <= 0.0) return 0.0;
    if (rho0 == 0.0) return kPi * bb * s * s;
    const double cmin = std::cos(kPi * bb);
    // angular measure times beta_bar rho, with rho = rho0 + s cos(psi)
    auto integrand = [&](double psi) {
      const double rho = rho0 + s * std::cos(psi);
      if (rho <= 0.0) return 0.0;
      const double c = (rho * rho + rho0 * rho0 - s * s) / (2.0 * rho * rho0);
      const double ang = c <= cmin ? kPi * bb : (c >= 1.0 ? 0.0 : std::acos(c));
      return 2.0 * rho * ang * s * std::sin(psi);
    };
    const double psi_max = rho0 >= s ? kPi : std::acos(-rho0 / s);
    std::vector<double> breaks{0.0, psi_max};
    // where the disc starts to wrap all the way around the vertex
    const double disc = s * s - rho0 * rho0 * std::pow(std::sin(kPi * bb), 2);
    if (disc > 0.0)
      for (double sign : {-1.0, 1.0}) {
        const double rho = rho0 * cmin + sign * std::sqrt(disc);
        const double x = (rho - rho0) / s;
        if (rho > 0.0 && x > -1.0 && x < 1.0) {
          const double psi = std::acos(x);
          if (psi < psi_max) breaks.push_back(psi);
        }
      }
    std::sort(breaks.begin(), breaks.end());
    double area = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
      area += numerics::integrate(integrand, breaks[i], breaks[i + 1], 16, 16);
    return area;
  };
  auto volume = [&](double r) -> double {
    if (n == 1) return disc_area(r);
    const double c = unit_ball_volume(2 * n - 2);
    // V(r) = int A(s) 2 (n-1) c s (r^2 - s^2)^{n-2} ds, integrated by parts from the layers
    auto f = [&](double s) { return disc_area(s) * 2.0 * (n - 1) * c * s * std::pow(r * r - s * s, n - 2); };
    std::vector<double> breaks{0.0, r};
    if (rho0 > 0.0 && rho0 < r) breaks.insert(breaks.begin() + 1, rho0);
    double v = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) v += numerics::integrate(f, breaks[i], breaks[i + 1], 8, 16);
    return v;
  };
  VolumeRatioReport rep;
  for (double r : r_list) {
    rep.r.push_back(r);
    rep.ratio.push_back(volume(r) / std::pow(r, 2 * n));
  }
  finish_ratios(rep, unit_ball_volume(2 * n), tolerance);
  return rep;
}

VolumeRatioReport volume_ratio_profile(const RadialKahlerPotential& pot, Pole center,
                                       const std::vector<double>& r_list, double tolerance) {
  check_radii(r_list);
  const auto& grid = pot.grid();
  const int n = grid.size();
  const double h = grid.spacing();
  // walk outward from the chosen pole: index j runs over nodes in order of distance
  Profile d2(n), d1(n);
  for (int j = 0; j < n; ++j) {
    const int i = center == Pole::zero ? j : n - 1 - j;
    d2[j] = pot.phi_doubleprime()[i];
    d1[j] = center == Pole::zero ? pot.phi_prime()[i] - pot.moment_limit(Pole::zero)
                                 : pot.moment_limit(Pole::infinity) - pot.phi_prime()[i];
  }
  // radial speed sqrt(Phi''/2). Beyond the grid, in the moment variable x, Phi'' = x g(x)
  // with g linear through the first two nodes; then dist(x) = 2 sqrt(x) int_0^1 du / sqrt(2 g(x u^2)).
  Profile speed(n);
  for (int j = 0; j < n; ++j) speed[j] = std::sqrt(0.5 * d2[j]);
  const double x0 = d1[0], x1 = d1[1];
  if (!(x0 > 0.0 && x1 > x0)) throw DomainError("metric does not close up at the pole");
  const double g0 = d2[0] / x0, g1 = (d2[1] / x1 - g0) / (x1 - x0);
  auto tail_distance = [&](double x) {
    if (x <= 0.0) return 0.0;
    return 2.0 * std::sqrt(x) * numerics::integrate(
        [&](double u) {
          const double g = g0 + g1 * (x * u * u - x0);
          if (!(g > 0.0)) throw DomainError("metric does not close up at the pole");
          return 1.0 / std::sqrt(2.0 * g);
        },
        0.0, 1.0, 1, 16);
  };
  const double tail = tail_distance(x0);
  Profile dist = numerics::cumulative_integral(speed, h);
  for (auto& v : dist) v += tail;
  VolumeRatioReport rep;
  for (double r : r_list) {
    if (r > dist[n - 1]) throw DomainError("radius exceeds the grid");
    double mass;
    if (r <= dist[0]) {
      mass = numerics::solve_increasing([&](double x) { return tail_distance(x) - r; }, 0.0, x0);
    } else {
      const int j = static_cast<int>(std::upper_bound(dist.begin(), dist.end(), r) - dist.begin()) - 1;
      // position between nodes by bisection on the interpolated distance
      double lo = j * h, hi = std::min(j + 1, n - 1) * h;
      for (int it = 0; it < 100 && hi - lo > 1e-15 * (1.0 + hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        (numerics::interpolate(dist, 0.0, h, mid) < r ? lo : hi) = mid;
      }
      mass = numerics::interpolate(d1, 0.0, h, 0.5 * (lo + hi));
    }
    rep.r.push_back(r);
    rep.ratio.push_back(2.0 * kPi * mass / (r * r));
  }
  finish_ratios(rep, unit_ball_volume(2), tolerance);
  return rep;
}

TubeVolumeReport tube_volume(const FlatConeModel& model, double inner, double outer, const std::vector<double>& r_list) {
  check_radii(r_list);
  const int n = model.n();
  if (n >= 2 && !(inner >= 0.0 && outer > inner)) throw InvalidArgument("annulus needs 0 <= inner < outer");
  const double k_volume = n == 1 ? 1.0 : shell_volume(2 * n - 2, inner, outer);
  TubeVolumeReport rep;
  std::vector<double> lx, ly;
  for (double r : r_list) {
    const double cross = numerics::integrate([&](double rho) { return 2.0 * kPi * model.beta_bar() * rho; }, 0.0, r, 2, 16);
    rep.r.push_back(r);
    rep.volume.push_back(k_volume * cross);
    lx.push_back(std::log(r));
    ly.push_back(std::log(k_volume * cross));
  }
  if (r_list.size() >= 2) {
    const auto fit = numerics::fit_line(lx, ly);
    rep.exponent = fit.slope;
    rep.constant = std::exp(fit.intercept);
  }
  return rep;
}

}  // namespace conic_ke
