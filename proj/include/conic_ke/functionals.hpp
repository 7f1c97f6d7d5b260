#pragma once

#include <vector>

#include "conic_ke/ma_solver.hpp"

namespace conic_ke {

/// J = (pi/V) int phi'(t)^2 dt for a profile on the grid.
double j_functional(const Profile& phi, const Grid& grid);

/// (1/V) int phi omega0 with the Fubini-Study reference.
double linear_term(const Profile& phi, const Grid& grid);

struct FunctionalReport {
  double J = 0.0;
  double F = 0.0;
  double linear = 0.0;
  double log_term = 0.0;  ///< log((1/V) int e^{h - tau phi} omega0)
  double tau = 0.0;
  double beta = 1.0;
  double delta = 0.0;
};

FunctionalReport f_functional(const Profile& phi, double tau, const ReferenceWeight& weight,
                              const Grid& grid);

struct PathResidualReport {
  std::vector<double> tau;
  std::vector<double> on_path;       ///< |F - (J - linear)| where F is evaluable
  std::vector<double> fd_relative;   ///< centered FD of F vs (1/(tau V)) int phi omega_phi; NaN if unavailable
  std::vector<double> orthogonality; ///< (1/V) int (tau phidot + phi) omega_phi, forward differences
  std::vector<double> derivative_formula;
  double max_on_path = 0.0;
  double max_fd_relative = 0.0;
};

PathResidualReport path_derivative_residual(const ContinuationTrace& trace);

struct PropernessSample {
  double J = 0.0;
  double F = 0.0;
};

struct PropernessFit {
  double epsilon = 0.0;  ///< 0 flags that no properness was detected
  double C = 0.0;
  std::vector<double> epsilon_grid;
  std::vector<double> C_grid;
  double J_decades = 0.0;
  bool flagged = false;
};

PropernessFit properness_fit(const std::vector<PropernessSample>& samples);

}  // namespace conic_ke
