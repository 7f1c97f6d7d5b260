#include "conic_ke/stability.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "conic_ke/errors.hpp"
#include "conic_ke/ma_solver.hpp"
#include "conic_ke/parallel.hpp"

namespace conic_ke {

namespace {

/// int f omega with the tails integrated in the moment variable, f extrapolated linearly
/// in the moment to each pole.
double moment_integral(const RadialKahlerPotential& pot, const Profile& f) {
  const auto& grid = pot.grid();
  const int n = grid.size();
  const auto& w = grid.weights();
  const auto& d1 = pot.phi_prime();
  const auto& d2 = pot.phi_doubleprime();
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += w[i] * f[i] * d2[i];
  const double xl = pot.tail_mass(Pole::zero), xr = pot.tail_mass(Pole::infinity);
  const double fl = f[0] - (f[1] - f[0]) * xl / (d1[1] - d1[0]);
  const double fr = f[n - 1] + (f[n - 1] - f[n - 2]) * xr / (d1[n - 1] - d1[n - 2]);
  s += 0.5 * xl * (f[0] + fl) + 0.5 * xr * (f[n - 1] + fr);
  return 2.0 * std::numbers::pi * s;
}

double curvature_form(const RadialKahlerPotential& pot, const HamiltonianPotential& ham) {
  const auto& grid = pot.grid();
  const int n = grid.size();
  const auto ric = ricci_density(pot);
  const auto& d2 = pot.phi_doubleprime();
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += grid.weights()[i] * ham.theta[i] * (ric[i] - d2[i]);
  // beyond the grid the curvature is taken constant at its end value
  s += pot.tail_mass(Pole::zero) * ham.theta[0] * (ric[0] / d2[0] - 1.0);
  s += pot.tail_mass(Pole::infinity) * ham.theta[n - 1] * (ric[n - 1] / d2[n - 1] - 1.0);
  return -2.0 * std::numbers::pi * s;
}

void check_points(const std::vector<ConePoint>& points, const Grid& grid) {
  for (const auto& p : points) {
    if (!(p.weight > 0.0)) throw InvalidArgument("divisor weights must be positive");
    if (p.kind == PointKind::interior && !(p.t >= grid.t_min() && p.t <= grid.t_max()))
      throw InvalidArgument("divisor point lies outside the grid");
  }
}

bool symmetric_pole_pair(const std::vector<ConePoint>& points) {
  if (points.size() != 2) return false;
  const auto& a = points[0];
  const auto& b = points[1];
  const bool poles = (a.kind == PointKind::zero && b.kind == PointKind::infinity) ||
                     (a.kind == PointKind::infinity && b.kind == PointKind::zero);
  return poles && a.weight == b.weight;
}

}  // namespace

double HamiltonianPotential::at(const ConePoint& p, const Grid& grid) const {
  switch (p.kind) {
    case PointKind::zero: return at_zero;
    case PointKind::infinity: return at_infinity;
    case PointKind::interior: break;
  }
  return numerics::interpolate(theta, grid.t_min(), grid.spacing(), p.t);
}

HamiltonianPotential hamiltonian_theta(const RadialKahlerPotential& pot) {
  const auto& grid = pot.grid();
  const int n = grid.size();
  const Profile ones(n, 1.0);
  const double vol = moment_integral(pot, ones);
  HamiltonianPotential ham;
  ham.mean = moment_integral(pot, pot.phi_prime()) / vol;
  ham.theta.resize(n);
  for (int i = 0; i < n; ++i) ham.theta[i] = pot.phi_prime()[i] - ham.mean;
  ham.at_zero = pot.moment_limit(Pole::zero) - ham.mean;
  ham.at_infinity = pot.moment_limit(Pole::infinity) - ham.mean;
  ham.mean_residual = std::abs(moment_integral(pot, ham.theta)) / vol;
  const auto d = numerics::derivative(ham.theta, grid.spacing(), 4);
  for (int i = 0; i < n; ++i)
    if (std::abs(grid.node(i)) <= 0.5 * grid.half_width())
      ham.relation_residual = std::max(ham.relation_residual, std::abs(d[i] - pot.phi_doubleprime()[i]));
  return ham;
}

FutakiReport futaki(const RadialKahlerPotential& pot) {
  FutakiReport rep;
  const auto ham = hamiltonian_theta(pot);
  rep.via_curvature = curvature_form(pot, ham);
  rep.smooth = pot.angle_at_zero() == 1.0 && pot.angle_at_infinity() == 1.0;
  if (rep.smooth) {
    // X(h) = h'(t) for the rotation field and a radial Ricci potential
    const auto rp = ricci_potential(pot, 1.0, 1.0);
    rep.via_ricci_potential = moment_integral(pot, rp.h_prime);
    rep.discrepancy = std::abs(rep.via_ricci_potential - rep.via_curvature);
  } else {
    rep.via_ricci_potential = rep.discrepancy = std::numeric_limits<double>::quiet_NaN();
  }
  return rep;
}

double log_futaki(const RadialKahlerPotential& pot, double beta, const std::vector<ConePoint>& points) {
  if (!(beta > 0.0 && beta <= 1.0)) throw InvalidArgument("beta must lie in (0, 1]");
  check_points(points, pot.grid());
  const auto ham = hamiltonian_theta(pot);
  double divisor = 0.0;
  for (const auto& p : points) divisor += p.weight * ham.at(p, pot.grid());
  return curvature_form(pot, ham) + (1.0 - beta) * divisor;
}

double linearity_check(const RadialKahlerPotential& pot, double beta, double beta1,
                       const std::vector<ConePoint>& points) {
  if (beta == beta1) throw InvalidArgument("linearity check needs two different angles");
  const double f = futaki(pot).via_curvature;
  const double fb = log_futaki(pot, beta, points);
  const double fb1 = log_futaki(pot, beta1, points);
  return std::abs((beta - beta1) * f - ((1.0 - beta1) * fb - (1.0 - beta) * fb1));
}

std::vector<ObstructionRow> obstruction_scan(const std::vector<ObstructionConfig>& configs,
                                             const std::vector<double>& betas,
                                             const RadialKahlerPotential& pot, bool solve, int jobs) {
  for (const auto& c : configs) check_points(c.points, pot.grid());
  const int nb = static_cast<int>(betas.size());
  const int cells = static_cast<int>(configs.size()) * nb;
  std::vector<ObstructionRow> rows(cells);
  parallel_for(cells, jobs, [&](int cell) {
    const auto& cfg = configs[cell / nb];
    const double beta = betas[cell % nb];
    ObstructionRow row;
    row.config_id = cfg.id;
    row.beta = beta;
    row.log_futaki = log_futaki(pot, beta, cfg.points);
    row.obstructed = std::abs(row.log_futaki) > kObstructionThreshold;
    row.solver_check = "skipped";
    if (solve && !row.obstructed && symmetric_pole_pair(cfg.points)) {
      SolverConfig sc;
      sc.cone = ConeConfiguration::anticanonical_pair(beta);
      sc.delta = 0.0;
      sc.tau = sc.cone.mu();
      try {
        solve_ma_detailed(sc, fubini_study_potential(pot.grid()));
        row.solver_check = "ok";
      } catch (const Error&) {
        row.solver_check = "failed";
      }
    }
    rows[cell] = row;
  });
  return rows;
}

}  // namespace conic_ke
