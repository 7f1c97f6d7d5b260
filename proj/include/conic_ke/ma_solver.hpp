#pragma once

#include <optional>
#include <vector>

#include "conic_ke/geometry.hpp"

namespace conic_ke {

/// One-sided tail of the sphere beyond the last grid node, sampled on a fine auxiliary
/// grid. Carries the data of a first-order model of phi in the tail so the flux
/// int_tail Phi'' can be evaluated as a function of the boundary value of phi.
struct TailModel {
  double step = 0.0;
  Profile density;  ///< Phi0'' e^w on the tail grid, ordered from the node outward
  Profile g;        ///< G(s): integral of the weighted moment between node and s
  Profile e;        ///< E(s): integral of the reference moment between node and s
  double weight_mass = 0.0;     ///< int density
  double reference_mass = 0.0;  ///< int Phi0'' (exact)

  /// Tail flux for boundary value phi of the unknown, and its derivative.
  double flux(double phi, double tau, double* derivative = nullptr) const;
};

/// The smoothed (delta > 0) or conic (delta = 0) right-hand side weight e^{h_delta},
/// h_delta = -(1-beta) log(delta + ||S||^2) + constant, relative to the Fubini-Study metric.
struct ReferenceWeight {
  double beta = 1.0;
  double delta = 0.0;
  double constant = 0.0;  ///< a_beta (delta = 0) or c_delta
  Profile log_weight;     ///< h_delta at the grid nodes
  TailModel left, right;
};

/// Gregory weights (5/12, 13/12, 1, ..., 1, 13/12, 5/12) h implied by the solver's stencil.
std::vector<double> scheme_weights(const Grid& grid);

ReferenceWeight make_reference_weight(double beta, double delta, const Grid& grid);
double compute_a_beta(double beta, const Grid& grid);
double compute_c_delta(double beta, double delta, const Grid& grid);

struct NewtonOptions {
  int max_iterations = 50;
  double tolerance = 1e-11;
  double damping = 0.5;
  int max_halvings = 8;
};

struct SolverConfig {
  ConeConfiguration cone = ConeConfiguration::anticanonical_pair(1.0);
  double delta = 0.0;
  double tau = 1.0;
  NewtonOptions newton{};

  void validate() const;
  /// delta = 0 at tau = mu (or beta = 1 at tau = 1): dilations act on the solution set.
  bool degenerate() const;
};

struct SolveResult {
  RadialKahlerPotential solution;
  Profile phi;  ///< Phi - Phi0 at the nodes
  int iterations = 0;
  double residual = 0.0;  ///< sup norm of the discrete equation
};

/// Sup norm of the discrete equation evaluated on a potential.
double equation_residual(const SolverConfig& cfg, const RadialKahlerPotential& solution);

/// Newton solve for any tau in [0, mu]; tau = 0 fixes the constant by int phi omega0 = 0.
SolveResult solve_ma_newton(const SolverConfig& cfg, const RadialKahlerPotential& guess);
/// tau = 0: double quadrature. Otherwise damped Newton.
SolveResult solve_ma_detailed(const SolverConfig& cfg, const RadialKahlerPotential& guess);
RadialKahlerPotential solve_ma(const SolverConfig& cfg, const RadialKahlerPotential& guess);

/// phi = Phi - Phi0 for any potential on the Fubini-Study reference.
Profile relative_potential(const RadialKahlerPotential& pot);

struct ContinuationSchedule {
  double initial_step = 0.0;  ///< 0 means mu/20
  double max_step = 0.0;      ///< 0 means unbounded
  double min_step = 1e-5;
  int easy_iterations = 4;    ///< Newton iterations counting as an easy step
  int easy_steps_to_grow = 3;
  int max_steps = 400;
  std::vector<int> modes{0, 1, 2};
  NewtonOptions newton{};
};

struct TraceStep {
  double tau = 0.0;
  RadialKahlerPotential solution;
  Profile phi;
  double J = 0.0;
  double F = 0.0;
  double lambda1 = 0.0;
  std::vector<double> lambda1_by_mode;
  int newton_iterations = 0;
  double residual = 0.0;
};

struct ContinuationTrace {
  ConeConfiguration cone = ConeConfiguration::anticanonical_pair(1.0);
  double delta = 0.0;
  std::vector<TraceStep> steps;
  bool completed = false;
  double sup_abs_phi = 0.0;  ///< recorded, no bound asserted
  double max_F = 0.0;        ///< bound of F along the path
};

ContinuationTrace continuity_path(const ConeConfiguration& cone, double delta,
                                  const ContinuationSchedule& schedule = {},
                                  const Grid& grid = Grid());

struct FamilyMember {
  double delta = 0.0;
  RadialKahlerPotential solution;
  Profile phi;
  double sup_distance = 0.0;
  double core_distance = 0.0;
  int newton_iterations = 0;
};

struct SmoothingReport {
  RadialKahlerPotential conic;  ///< delta = 0 solution at tau = mu
  Profile conic_phi;
  std::vector<FamilyMember> members;
  bool sup_monotone = false;
  bool core_monotone = false;
  bool core_below_sup = false;
};

SmoothingReport smoothing_family(const ConeConfiguration& cone, const std::vector<double>& deltas,
                                 const Grid& grid = Grid(), int jobs = 1);

struct MarginReport {
  Profile direct;   ///< K Phi'' - mu Phi'' from the solved profile
  Profile formula;  ///< three-term expression in radial form
  double min_margin = 0.0;
  double discrepancy = 0.0;  ///< sup |direct - formula| away from the two end nodes
};

MarginReport ricci_lower_bound_margin(const RadialKahlerPotential& solution,
                                      const SolverConfig& cfg);

struct EigenReport {
  double lambda1 = 0.0;  ///< minimum over modes
  std::vector<int> modes;
  std::vector<double> by_mode;
};

/// Smallest nonzero eigenvalue of the dbar-Laplacian per angular mode.
EigenReport first_eigenvalue(const RadialKahlerPotential& pot, const std::vector<int>& modes = {0, 1, 2});

struct TwoSidedReport {
  double C = 0.0;
  double C_prime = 0.0;
  std::vector<double> C_by_delta;
  std::vector<double> C_prime_by_delta;
  std::vector<double> argmin_t;  ///< where omega_delta/omega0 is smallest
};

TwoSidedReport two_sided_bound_check(const SmoothingReport& family, const ConeConfiguration& cone);

}  // namespace conic_ke
