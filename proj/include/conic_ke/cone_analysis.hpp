#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "conic_ke/geometry.hpp"

namespace conic_ke {

/// Point of C^{n-1} x C_beta: z holds the 2n-2 real coordinates of the flat factor.
struct ConeCoordinates {
  std::vector<double> z;
  double rho = 0.0;
  double theta = 0.0;
};

/// Product of flat C^{n-1} with the 2-d cone d rho^2 + beta_bar^2 rho^2 d theta^2.
class FlatConeModel {
 public:
  FlatConeModel(int n, double beta_bar);

  int n() const { return n_; }
  double beta_bar() const { return beta_bar_; }

  /// Geodesic distance: the cone factor is unrolled into a planar sector.
  double distance(const ConeCoordinates& a, const ConeCoordinates& b) const;
  /// Distance inside the 2-d cone factor.
  double cone_distance(double rho1, double theta1, double rho2, double theta2) const;
  double circumference(double r) const;
  /// Volume of the ball of radius r about a point of the singular set (closed form).
  double vertex_ball_volume(double r) const;

 private:
  int n_;
  double beta_bar_;
};

FlatConeModel flat_cone_metric(int n, double beta_bar);

/// Volume of the unit ball in R^d.
double unit_ball_volume(int d);

/// gamma(rho) = eta(log(-log(rho/eps))) with eta piecewise linear from 1 at log(-log delta)
/// to 0 at log(-log delta^3). delta is carried as L = -log delta so tiny deltas stay finite.
class LogLogCutoff {
 public:
  LogLogCutoff(double eps_bar, double log_inv_delta);

  double eps_bar() const { return eps_; }
  double log_inv_delta() const { return big_l_; }
  /// eta and its slope as functions of s = log(-log(rho/eps)).
  double eta(double s) const;
  double eta_slope(double s) const;
  double window_lo() const;  ///< s where the ramp starts
  double window_hi() const;

  /// gamma at rho = exp(log_rho).
  double value_at_log(double log_rho) const;
  double value(double rho) const;
  /// rho |grad gamma| and its bound 1/(-log(rho/eps)) at rho = exp(log_rho).
  double scaled_gradient(double log_rho) const;
  double scaled_gradient_bound(double log_rho) const;

 private:
  double eps_, big_l_;
};

LogLogCutoff loglog_cutoff(double eps_bar, double delta);

enum class DeltaRule {
  literal,  ///< a_{n-1} = eps^{2n-1} (-log delta)
  automatic ///< the larger of the literal value and the value that absorbs the cone angle
};

/// -log delta chosen by the rule (never below 2, so delta < 1/3).
double select_log_inv_delta(int n, double eps_bar, double beta_bar, DeltaRule rule);

struct DirichletEnergyReport {
  double energy = 0.0;             ///< product quadrature over B_R
  double coarea = 0.0;             ///< one-dimensional reorganization
  double coarea_relative_diff = 0.0;
  double literal_bound = 0.0;      ///< a_{n-1} / (eps^{2n-2} (-log delta))
  double corrected_bound = 0.0;    ///< literal bound times (4 pi / 3) beta_bar
  bool within_literal = false;
  bool within_corrected = false;
  bool below_eps = false;
};

/// Energy of the cutoff over the ball of radius R (default 1/eps) about a vertex point.
DirichletEnergyReport dirichlet_energy(const LogLogCutoff& cutoff, const FlatConeModel& model, double radius = 0.0);

/// Singular subset {z_1 = offset, rho = 0}, of real codimension 4.
struct CodimFourSubspace {
  std::array<double, 2> offset{0.0, 0.0};
};

struct BallCoverReport {
  std::vector<std::vector<double>> centers;  ///< real coordinates (z, 0) of each center
  std::vector<double> radii;
  double radius_sum = 0.0;      ///< sum r_a^{2n-3}
  int max_overlap = 0;          ///< most balls B_{2r_a} meeting at a sampled point
  double min_center_gap = 0.0;  ///< min |y_a - y_b| / (r_a/2 + r_b/2); >= 1 means disjoint half balls
  double energy = 0.0;          ///< Monte-Carlo estimate of int |grad chi|^2
  double standard_error = 0.0;
  double bound = 0.0;           ///< max_overlap * sum of single-ball energies (closed form)
  double constant = 0.0;        ///< bound / eps0
  std::uint64_t seed = 0;
  int samples = 0;
};

/// Cutoff ramp 0 for t <= 1.1, 1 for t > 1.6, slope 2.
double bar_eta(double t);

BallCoverReport ball_cover_cutoff(const FlatConeModel& model, const CodimFourSubspace& singular, double eps0,
                                  double region_radius, std::uint64_t seed = 20240601, int samples = 200000);

struct VolumeRatioReport {
  std::vector<double> r;
  std::vector<double> ratio;      ///< Vol(B_r) / r^{2n}
  bool monotone = false;          ///< nonincreasing within tolerance
  double max_increase = 0.0;
  double limit = 0.0;             ///< r -> 0 extrapolation from the three smallest radii
  double beta_estimate = 0.0;     ///< limit / unit ball volume
};

/// Flat cone: balls about an arbitrary point (product quadrature).
VolumeRatioReport volume_ratio_profile(const FlatConeModel& model, const ConeCoordinates& center,
                                       const std::vector<double>& r_list, double tolerance = 1e-6);
/// Radial metric: balls about a pole.
VolumeRatioReport volume_ratio_profile(const RadialKahlerPotential& pot, Pole center,
                                       const std::vector<double>& r_list, double tolerance = 1e-6);

struct TubeVolumeReport {
  std::vector<double> r;
  std::vector<double> volume;
  double exponent = 0.0;
  double constant = 0.0;  ///< C_K in Vol = C_K r^p
};

/// Vol of {rho < r} intersected with K = {inner <= |z| <= outer} (n >= 2; n = 1 takes the vertex).
TubeVolumeReport tube_volume(const FlatConeModel& model, double inner, double outer, const std::vector<double>& r_list);

}  // namespace conic_ke
