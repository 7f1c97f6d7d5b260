#pragma once

#include <string>
#include <vector>

#include "conic_ke/geometry.hpp"

namespace conic_ke {

/// Hamiltonian of the rotation field z d/dz: theta = Phi' - mean, mean-zero against omega.
struct HamiltonianPotential {
  Profile theta;
  double mean = 0.0;            ///< (1/V) int Phi' omega
  double at_zero = 0.0;         ///< theta at t = -inf, from the moment limit
  double at_infinity = 0.0;
  double mean_residual = 0.0;   ///< |(1/V) int theta omega|
  double relation_residual = 0.0;  ///< sup over |t| <= T/2 of |theta' - Phi''|

  double at(const ConePoint& p, const Grid& grid) const;
};

HamiltonianPotential hamiltonian_theta(const RadialKahlerPotential& pot);

struct FutakiReport {
  double via_ricci_potential = 0.0;  ///< int X(h) omega; NaN for conic input
  double via_curvature = 0.0;        ///< -int theta (Ric - omega)
  double discrepancy = 0.0;          ///< NaN for conic input
  bool smooth = true;
};

FutakiReport futaki(const RadialKahlerPotential& pot);

/// f(X) + (1 - beta) sum_p weight_p theta(p), with f evaluated through the curvature form.
double log_futaki(const RadialKahlerPotential& pot, double beta, const std::vector<ConePoint>& points);

/// |(beta - beta1) f - (1 - beta1) f_beta + (1 - beta) f_beta1|.
double linearity_check(const RadialKahlerPotential& pot, double beta, double beta1,
                       const std::vector<ConePoint>& points);

struct ObstructionConfig {
  std::string id;
  std::vector<ConePoint> points;
};

struct ObstructionRow {
  std::string config_id;
  double beta = 1.0;
  double log_futaki = 0.0;
  bool obstructed = false;
  std::string solver_check;  ///< "ok", "failed" or "skipped"
};

constexpr double kObstructionThreshold = 1e-4;

/// Rows ordered config-major. For unobstructed symmetric pole pairs the conic equation is
/// solved as a cross-check; other configurations are only flagged.
std::vector<ObstructionRow> obstruction_scan(const std::vector<ObstructionConfig>& configs,
                                             const std::vector<double>& betas,
                                             const RadialKahlerPotential& pot, bool solve = true,
                                             int jobs = 1);

}  // namespace conic_ke
