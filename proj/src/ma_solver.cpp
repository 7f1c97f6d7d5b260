#include "conic_ke/ma_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "conic_ke/errors.hpp"
#include "conic_ke/functionals.hpp"
#include "conic_ke/parallel.hpp"

namespace conic_ke {

void SolverConfig::validate() const {
  if (!cone.is_solver_configuration())
    throw InvalidArgument("solver needs lambda = 1 and cone points {0, infinity}");
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw InvalidArgument("delta must be nonnegative");
  if (!(tau >= 0.0) || tau > cone.mu() * (1.0 + 1e-14))
    throw InvalidArgument("tau must lie in [0, mu]");
  if (newton.max_iterations < 1 || !(newton.tolerance > 0.0) || !(newton.damping > 0.0 && newton.damping < 1.0) ||
      newton.max_halvings < 0)
    throw InvalidArgument("invalid Newton options");
}

bool SolverConfig::degenerate() const {
  const bool at_end = std::abs(tau - cone.mu()) <= 1e-14;
  return at_end && (delta == 0.0 || cone.beta() == 1.0);
}

Profile relative_potential(const RadialKahlerPotential& pot) {
  const auto fs = fubini_study_potential(pot.grid());
  Profile phi(pot.grid().size());
  for (int i = 0; i < pot.grid().size(); ++i) phi[i] = pot.potential(i) - fs.potential(i);
  return phi;
}

namespace {

/// The discretized radial equation phi'' = Phi0''(e^{w - tau phi} - 1) with a fourth-order
/// compact (Numerov) interior stencil and flux closures at both ends.
struct Discretization {
  const Grid& grid;
  const ReferenceWeight& weight;
  RadialKahlerPotential fs;
  double tau;

  Discretization(const Grid& g, const ReferenceWeight& w, double t)
      : grid(g), weight(w), fs(fubini_study_potential(g)), tau(t) {}

  /// Residual; when sub/diag/sup are given the Jacobian is filled as well.
  Profile residual(const Profile& phi, std::vector<double>* sub = nullptr,
                   std::vector<double>* diag = nullptr, std::vector<double>* sup = nullptr) const {
    const int n = grid.size();
    const double h = grid.spacing();
    const auto& d0 = fs.phi_doubleprime();
    const auto& m0 = fs.phi_prime();
    Profile f(n), fp(n), r(n);
    for (int i = 0; i < n; ++i) {
      const double e = d0[i] * std::exp(weight.log_weight[i] - tau * phi[i]);
      f[i] = e - d0[i];
      fp[i] = -tau * e;
    }
    double dl = 0.0, dr = 0.0;
    const double fl = weight.left.flux(phi[0], tau, &dl);
    const double fr = weight.right.flux(phi[n - 1], tau, &dr);
    r[0] = ((phi[1] - phi[0]) / h - (fl - m0[0])) / h - (f[0] / 3.0 + f[1] / 6.0);
    r[n - 1] = ((2.0 - fr - m0[n - 1]) - (phi[n - 1] - phi[n - 2]) / h) / h -
               (f[n - 1] / 3.0 + f[n - 2] / 6.0);
    const double ih2 = 1.0 / (h * h);
    for (int i = 1; i + 1 < n; ++i)
      r[i] = (phi[i + 1] - 2.0 * phi[i] + phi[i - 1]) * ih2 - (f[i + 1] + 10.0 * f[i] + f[i - 1]) / 12.0;
    if (diag) {
      sub->assign(n - 1, 0.0);
      diag->assign(n, 0.0);
      sup->assign(n - 1, 0.0);
      (*diag)[0] = -ih2 - dl / h - fp[0] / 3.0;
      (*sup)[0] = ih2 - fp[1] / 6.0;
      (*diag)[n - 1] = -ih2 - dr / h - fp[n - 1] / 3.0;
      (*sub)[n - 2] = ih2 - fp[n - 2] / 6.0;
      for (int i = 1; i + 1 < n; ++i) {
        (*sub)[i - 1] = ih2 - fp[i - 1] / 12.0;
        (*diag)[i] = -2.0 * ih2 - 10.0 * fp[i] / 12.0;
        (*sup)[i] = ih2 - fp[i + 1] / 12.0;
      }
    }
    return r;
  }

  /// Discrete metric density stays positive.
  bool positive(const Profile& phi) const {
    const int n = grid.size();
    const double ih2 = 1.0 / (grid.spacing() * grid.spacing());
    const auto& d0 = fs.phi_doubleprime();
    for (int i = 0; i < n; ++i)
      if (!std::isfinite(phi[i])) return false;
    for (int i = 1; i + 1 < n; ++i)
      if (!(d0[i] + (phi[i + 1] - 2.0 * phi[i] + phi[i - 1]) * ih2 > 0.0)) return false;
    return true;
  }

  RadialKahlerPotential assemble(const Profile& phi, double angle) const {
    const int n = grid.size();
    Profile d2(n), values(n);
    for (int i = 0; i < n; ++i) {
      d2[i] = fs.phi_doubleprime()[i] * std::exp(weight.log_weight[i] - tau * phi[i]);
      values[i] = fs.potential(i) + phi[i];
    }
    const double fl = weight.left.flux(phi[0], tau);
    const double fr = weight.right.flux(phi[n - 1], tau);
    auto d1 = numerics::cumulative_integral(d2, grid.spacing());
    for (auto& v : d1) v += fl;
    return RadialKahlerPotential(grid, std::move(values), std::move(d1), std::move(d2), 0.0, angle,
                                 angle, Check::basic)
        .with_tail_masses(fl, fr);
  }
};

double fs_mean(const RadialKahlerPotential& fs, const Profile& phi) {
  static thread_local Profile ones;
  ones.assign(phi.size(), 1.0);
  return integrate_on_sphere(fs, phi) / integrate_on_sphere(fs, ones);
}

void symmetrize(Profile& v) {
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n / 2; ++i) {
    const double m = 0.5 * (v[i] + v[n - 1 - i]);
    v[i] = v[n - 1 - i] = m;
  }
}

double solution_angle(const SolverConfig& cfg) { return cfg.delta == 0.0 ? cfg.cone.beta() : 1.0; }

/// Damped Newton on the discrete system starting from phi.
SolveResult newton_core(const SolverConfig& cfg, const ReferenceWeight& weight, const Grid& grid,
                        Profile phi) {
  cfg.validate();
  const Discretization disc(grid, weight, cfg.tau);
  const bool sym = cfg.degenerate();
  const bool pinned = cfg.tau == 0.0;
  const int n = grid.size();
  if (sym) symmetrize(phi);
  if (!disc.positive(phi)) throw PositivityLost("initial guess is not a positive metric");
  std::vector<double> sub, diag, sup;
  Profile r = disc.residual(phi, &sub, &diag, &sup);
  double res = numerics::sup_abs(r);
  const auto& opt = cfg.newton;
  for (int it = 0; it <= opt.max_iterations; ++it) {
    if (res <= opt.tolerance) {
      if (pinned) {
        const double c = fs_mean(disc.fs, phi);
        for (auto& v : phi) v -= c;
      }
      return SolveResult{disc.assemble(phi, solution_angle(cfg)), phi, it, res};
    }
    if (it == opt.max_iterations) break;
    Profile rhs(n);
    for (int i = 0; i < n; ++i) rhs[i] = -r[i];
    if (pinned) {
      // constants span the kernel: pin the middle node, fix the mean afterwards
      const int m = n / 2;
      if (m > 0) sub[m - 1] = 0.0;
      if (m < n - 1) sup[m] = 0.0;
      diag[m] = 1.0;
      rhs[m] = 0.0;
    }
    Profile step;
    try {
      step = numerics::solve_tridiagonal(sub, diag, sup, rhs);
    } catch (const std::runtime_error&) {
      throw NewtonDiverged("singular Newton matrix", res);
    }
    if (sym) symmetrize(step);
    if (pinned) {
      const double c = fs_mean(disc.fs, step);
      for (auto& v : step) v -= c;
    }
    double lambda = 1.0;
    bool accepted = false;
    int positive_trials = 0;
    Profile cand(n);
    for (int k = 0; k <= opt.max_halvings; ++k, lambda *= opt.damping) {
      for (int i = 0; i < n; ++i) cand[i] = phi[i] + lambda * step[i];
      if (!disc.positive(cand)) continue;
      ++positive_trials;
      Profile rc = disc.residual(cand, &sub, &diag, &sup);
      const double resc = numerics::sup_abs(rc);
      if (std::isfinite(resc) && resc < res) {
        phi.swap(cand);
        r.swap(rc);
        res = resc;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // rounding floor: the full step is negligible and the residual is already tiny
      const double size = numerics::sup_abs(step);
      if (res <= 10.0 * opt.tolerance && size <= 1e-12 * (1.0 + numerics::sup_abs(phi))) {
        return SolveResult{disc.assemble(phi, solution_angle(cfg)), phi, it + 1, res};
      }
      if (positive_trials == 0)
        throw PositivityLost("every damped iterate lost metric positivity");
      throw NewtonDiverged("residual not reduced within the damping budget", res);
    }
  }
  throw NewtonDiverged("Newton iteration limit reached", res);
}

SolveResult quadrature_solution(const SolverConfig& cfg, const ReferenceWeight& weight, const Grid& grid) {
  const Discretization disc(grid, weight, 0.0);
  const int n = grid.size();
  const auto& fs = disc.fs;
  Profile d2(n);
  for (int i = 0; i < n; ++i) d2[i] = fs.phi_doubleprime()[i] * std::exp(weight.log_weight[i]);
  auto moment = numerics::cumulative_integral(d2, grid.spacing());
  Profile slope(n);
  for (int i = 0; i < n; ++i) slope[i] = moment[i] + weight.left.weight_mass - fs.phi_prime()[i];
  Profile phi = numerics::cumulative_integral(slope, grid.spacing());
  const double c = fs_mean(fs, phi);
  for (auto& v : phi) v -= c;
  auto r = disc.residual(phi);
  return SolveResult{disc.assemble(phi, solution_angle(cfg)), phi, 0, numerics::sup_abs(r)};
}

}  // namespace

double equation_residual(const SolverConfig& cfg, const RadialKahlerPotential& solution) {
  cfg.validate();
  const auto& grid = solution.grid();
  const auto weight = make_reference_weight(cfg.cone.beta(), cfg.delta, grid);
  const Discretization disc(grid, weight, cfg.tau);
  return numerics::sup_abs(disc.residual(relative_potential(solution)));
}

SolveResult solve_ma_newton(const SolverConfig& cfg, const RadialKahlerPotential& guess) {
  cfg.validate();
  const auto& grid = guess.grid();
  const auto weight = make_reference_weight(cfg.cone.beta(), cfg.delta, grid);
  return newton_core(cfg, weight, grid, relative_potential(guess));
}

SolveResult solve_ma_detailed(const SolverConfig& cfg, const RadialKahlerPotential& guess) {
  cfg.validate();
  const auto& grid = guess.grid();
  const auto weight = make_reference_weight(cfg.cone.beta(), cfg.delta, grid);
  if (cfg.tau == 0.0) return quadrature_solution(cfg, weight, grid);
  return newton_core(cfg, weight, grid, relative_potential(guess));
}

RadialKahlerPotential solve_ma(const SolverConfig& cfg, const RadialKahlerPotential& guess) {
  return solve_ma_detailed(cfg, guess).solution;
}

}  // namespace conic_ke

namespace conic_ke {

namespace {

TraceStep make_step(double tau, SolveResult&& res, const ReferenceWeight& weight, const Grid& grid,
                    const std::vector<int>& modes) {
  TraceStep step{tau, std::move(res.solution), std::move(res.phi), 0.0, 0.0, 0.0, {}, 0, 0.0};
  step.newton_iterations = res.iterations;
  step.residual = res.residual;
  step.J = j_functional(step.phi, grid);
  // below tau = 0.05 the 1/tau log term is replaced by the on-path reduction
  if (tau < 0.05)
    step.F = step.J - linear_term(step.phi, grid);
  else
    step.F = f_functional(step.phi, tau, weight, grid).F;
  const auto eig = first_eigenvalue(step.solution, modes);
  step.lambda1 = eig.lambda1;
  step.lambda1_by_mode = eig.by_mode;
  return step;
}

}  // namespace

ContinuationTrace continuity_path(const ConeConfiguration& cone, double delta,
                                  const ContinuationSchedule& schedule, const Grid& grid) {
  if (!cone.is_solver_configuration())
    throw InvalidArgument("continuation needs lambda = 1 and cone points {0, infinity}");
  if (!(delta >= 0.0)) throw InvalidArgument("delta must be nonnegative");
  if (delta == 0.0 && cone.beta() < 0.3)
    throw InvalidArgument("conic continuation requires beta >= 0.3");
  const double mu = cone.mu();
  const double min_step = schedule.min_step;
  double step = schedule.initial_step > 0 ? schedule.initial_step : mu / 20.0;
  const double max_step = schedule.max_step > 0 ? schedule.max_step : mu;
  if (!(min_step > 0) || step < min_step) throw InvalidArgument("invalid continuation schedule");

  const auto weight = make_reference_weight(cone.beta(), delta, grid);
  SolverConfig cfg{cone, delta, 0.0, schedule.newton};

  ContinuationTrace trace;
  trace.cone = cone;
  trace.delta = delta;
  // Calabi-Yau step by quadrature, polished on the discrete system
  auto start = quadrature_solution(cfg, weight, grid);
  start = newton_core(cfg, weight, grid, start.phi);
  trace.steps.push_back(make_step(0.0, std::move(start), weight, grid, schedule.modes));

  double tau = 0.0;
  double last_step = 0.0;
  int easy = 0;
  while (tau < mu) {
    if (static_cast<int>(trace.steps.size()) > schedule.max_steps)
      throw PathStalled("continuation step budget exhausted", tau);
    step = std::min(step, max_step);
    const bool final_step = tau + step > mu - 0.5 * min_step;
    const double next = final_step ? mu : tau + step;
    const double taken = next - tau;
    cfg.tau = next;
    const auto& cur = trace.steps.back().phi;
    std::vector<Profile> predictors;
    if (trace.steps.size() >= 2 && last_step > 0) {
      const auto& prev = trace.steps[trace.steps.size() - 2].phi;
      Profile secant(cur.size());
      const double ratio = taken / last_step;
      for (std::size_t i = 0; i < cur.size(); ++i) secant[i] = cur[i] + ratio * (cur[i] - prev[i]);
      predictors.push_back(std::move(secant));
    }
    predictors.push_back(cur);
    std::optional<SolveResult> solved;
    for (const auto& guess : predictors) {
      try {
        solved = newton_core(cfg, weight, grid, guess);
        break;
      } catch (const NewtonDiverged&) {
      } catch (const PositivityLost&) {
      }
    }
    if (!solved) {
      step = 0.5 * taken;
      easy = 0;
      if (step < min_step) throw PathStalled("continuation step fell below the minimum", tau);
      continue;
    }
    const int iters = solved->iterations;
    trace.steps.push_back(make_step(next, std::move(*solved), weight, grid, schedule.modes));
    last_step = taken;
    tau = next;
    if (iters <= schedule.easy_iterations) {
      if (++easy >= schedule.easy_steps_to_grow) {
        step = 2.0 * taken;
        easy = 0;
      } else {
        step = taken;
      }
    } else {
      easy = 0;
      step = taken;
    }
  }
  trace.completed = true;
  for (const auto& s : trace.steps) {
    trace.sup_abs_phi = std::max(trace.sup_abs_phi, numerics::sup_abs(s.phi));
    trace.max_F = std::max(trace.max_F, s.F);
  }
  return trace;
}

SmoothingReport smoothing_family(const ConeConfiguration& cone, const std::vector<double>& deltas,
                                 const Grid& grid, int jobs) {
  if (deltas.empty()) throw InvalidArgument("delta list is empty");
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (!(deltas[i] > 0)) throw InvalidArgument("delta list must be positive");
    if (i > 0 && !(deltas[i] < deltas[i - 1])) throw InvalidArgument("delta list must be decreasing");
  }
  const double mu = cone.mu();
  const auto fs = fubini_study_potential(grid);
  auto conic = solve_ma_detailed(SolverConfig{cone, 0.0, mu}, fs);

  std::vector<std::optional<FamilyMember>> slots(deltas.size());
  parallel_for(static_cast<int>(deltas.size()), jobs, [&](int k) {
    auto res = solve_ma_detailed(SolverConfig{cone, deltas[k], mu}, conic.solution);
    FamilyMember m{deltas[k], std::move(res.solution), std::move(res.phi)};
    m.newton_iterations = res.iterations;
    const double core = 0.5 * grid.half_width();
    for (int i = 0; i < grid.size(); ++i) {
      const double d = std::abs(m.phi[i] - conic.phi[i]);
      m.sup_distance = std::max(m.sup_distance, d);
      if (std::abs(grid.node(i)) <= core) m.core_distance = std::max(m.core_distance, d);
    }
    slots[k] = std::move(m);
  });

  SmoothingReport rep{std::move(conic.solution), std::move(conic.phi), {}, false, false, false};
  for (auto& s : slots) rep.members.push_back(std::move(*s));
  rep.sup_monotone = rep.core_monotone = rep.core_below_sup = true;
  for (std::size_t k = 0; k < rep.members.size(); ++k) {
    const auto& m = rep.members[k];
    rep.core_below_sup &= m.core_distance <= m.sup_distance;
    if (k > 0) {
      rep.sup_monotone &= m.sup_distance <= rep.members[k - 1].sup_distance;
      rep.core_monotone &= m.core_distance <= rep.members[k - 1].core_distance;
    }
  }
  return rep;
}

MarginReport ricci_lower_bound_margin(const RadialKahlerPotential& solution, const SolverConfig& cfg) {
  if (!(cfg.delta > 0.0)) throw InvalidArgument("margin check needs a smoothed solution (delta > 0)");
  const auto& grid = solution.grid();
  const int n = grid.size();
  const double beta = cfg.cone.beta(), mu = cfg.cone.mu(), delta = cfg.delta;
  const auto fs = fubini_study_potential(grid);
  MarginReport rep;
  rep.direct = ricci_density(solution);
  rep.formula.resize(n);
  for (int i = 0; i < n; ++i) {
    rep.direct[i] -= mu * solution.phi_doubleprime()[i];
    const double t = grid.node(i);
    const double s2 = std::exp(log_section_norm(t));
    const double th = std::tanh(0.5 * t);
    const double den = delta + s2;
    // (1-beta)[delta/(delta+|S|^2) omega0 + delta |DS|^2/(delta+|S|^2)^2], |DS|^2 = |S|^2 tanh^2(t/2)
    rep.formula[i] = (1.0 - beta) * delta * (fs.phi_doubleprime()[i] / den + s2 * th * th / (den * den));
  }
  rep.min_margin = std::numeric_limits<double>::infinity();
  for (int i = 2; i < n - 2; ++i) {
    rep.min_margin = std::min(rep.min_margin, rep.direct[i]);
    rep.discrepancy = std::max(rep.discrepancy, std::abs(rep.direct[i] - rep.formula[i]));
  }
  return rep;
}

TwoSidedReport two_sided_bound_check(const SmoothingReport& family, const ConeConfiguration& cone) {
  TwoSidedReport rep;
  const double beta = cone.beta();
  for (const auto& m : family.members) {
    const auto& grid = m.solution.grid();
    const auto fs = fubini_study_potential(grid);
    double min_ratio = std::numeric_limits<double>::infinity(), max_upper = 0.0, arg = 0.0;
    for (int i = 0; i < grid.size(); ++i) {
      const double r = m.solution.phi_doubleprime()[i] / fs.phi_doubleprime()[i];
      if (r < min_ratio) {
        min_ratio = r;
        arg = grid.node(i);
      }
      const double s2 = std::exp(log_section_norm(grid.node(i)));
      max_upper = std::max(max_upper, r * std::pow(m.delta + s2, 1.0 - beta));
    }
    rep.C_by_delta.push_back(1.0 / min_ratio);
    rep.C_prime_by_delta.push_back(max_upper);
    rep.argmin_t.push_back(arg);
    rep.C = std::max(rep.C, 1.0 / min_ratio);
    rep.C_prime = std::max(rep.C_prime, max_upper);
  }
  return rep;
}

}  // namespace conic_ke
