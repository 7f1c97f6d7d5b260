#pragma once

#include <span>
#include <vector>

#include "conic_ke/numerics.hpp"

namespace conic_ke {

/// Uniform, symmetric grid in t = log|z|^2 with composite Simpson weights.
class Grid {
 public:
  explicit Grid(double half_width = 16.0, int n_nodes = 2049);

  double t_min() const { return -half_width_; }
  double t_max() const { return half_width_; }
  double half_width() const { return half_width_; }
  int size() const { return n_nodes_; }
  double spacing() const { return h_; }
  double node(int i) const { return -half_width_ + i * h_; }
  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }

  /// Same window, twice the resolution.
  Grid refined() const { return Grid(half_width_, 2 * n_nodes_ - 1); }

  bool operator==(const Grid& o) const {
    return half_width_ == o.half_width_ && n_nodes_ == o.n_nodes_;
  }

 private:
  double half_width_;
  int n_nodes_;
  double h_;
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

enum class Pole { zero, infinity };

/// How strictly a potential is validated on construction.
enum class Check {
  strict,  ///< positivity, monotone moment map, moment interval [0, 2]
  basic,   ///< positivity and shapes only (test profiles, rescaled metrics)
};

/// Rotationally invariant Kahler potential on CP^1 sampled on a grid.
/// The Kahler form is i Phi''(t) dz^dzbar/|z|^2; potential values are base_offset + values().
class RadialKahlerPotential {
 public:
  RadialKahlerPotential(Grid grid, Profile values, Profile phi_prime, Profile phi_doubleprime,
                        double base_offset, double angle_at_zero, double angle_at_infinity,
                        Check check = Check::strict);

  const Grid& grid() const { return grid_; }
  const Profile& values() const { return values_; }
  const Profile& phi_prime() const { return phi_prime_; }
  const Profile& phi_doubleprime() const { return phi_doubleprime_; }
  double base_offset() const { return base_offset_; }
  double angle_at(Pole p) const { return p == Pole::zero ? angle_zero_ : angle_infinity_; }
  double angle_at_zero() const { return angle_zero_; }
  double angle_at_infinity() const { return angle_infinity_; }

  double potential(int i) const { return base_offset_ + values_[i]; }
  Profile potential_profile() const;

  /// Phi'(-inf) and Phi'(+inf), extrapolated from the declared cone fractions.
  double moment_limit(Pole p) const;
  /// Area density 2*pi*Phi'' lying beyond the last node (divided by 2*pi).
  double tail_mass(Pole p) const;

  RadialKahlerPotential with_offset(double offset) const;
  /// The metric c*omega (potential scaled by c).
  RadialKahlerPotential scaled(double c) const;
  /// Replace the extrapolated tail masses by externally known ones (solver tail model).
  RadialKahlerPotential with_tail_masses(double left, double right) const;

 private:
  Grid grid_;
  Profile values_, phi_prime_, phi_doubleprime_;
  double base_offset_;
  double angle_zero_, angle_infinity_;
  double tail_left_, tail_right_;
};

enum class PointKind { zero, infinity, interior };

/// A point of the divisor with its multiplicity weight.
struct ConePoint {
  PointKind kind = PointKind::interior;
  double t = 0.0;  ///< only for interior points
  double weight = 1.0;

  static ConePoint pole(Pole p, double weight = 1.0) {
    return {p == Pole::zero ? PointKind::zero : PointKind::infinity, 0.0, weight};
  }
  static ConePoint at(double t, double weight = 1.0) { return {PointKind::interior, t, weight}; }
};

/// Divisor and angle data; mu = 1 - (1 - beta) * lambda.
class ConeConfiguration {
 public:
  ConeConfiguration(int lambda, double beta, std::vector<ConePoint> points);
  /// lambda = 1, D = {0, infinity}: the configuration the solver accepts.
  static ConeConfiguration anticanonical_pair(double beta);

  int lambda() const { return lambda_; }
  double beta() const { return beta_; }
  double mu() const { return mu_; }
  const std::vector<ConePoint>& points() const { return points_; }
  bool is_solver_configuration() const;

 private:
  int lambda_;
  double beta_;
  double mu_;
  std::vector<ConePoint> points_;
};

RadialKahlerPotential fubini_study_potential(const Grid& grid);
RadialKahlerPotential football_potential(const Grid& grid, double beta);

double area(const RadialKahlerPotential& pot);

/// Curvature -(log Phi'')''/Phi'' at every node (fourth-order differences).
Profile gauss_curvature_profile(const RadialKahlerPotential& pot);
/// Curvature at an interior t (cubic interpolation between nodes).
double gauss_curvature(const RadialKahlerPotential& pot, double t);
/// Ricci density K*Phii'' = -(log Phi'')''.
Profile ricci_density(const RadialKahlerPotential& pot, int order = 4);

double cone_angle_at_pole(const RadialKahlerPotential& pot, Pole pole);

/// ||S||_0^2 = 4e^t/(1+e^t)^2 = sech^2(t/2).
Profile defining_section_norm(const Grid& grid);
/// log ||S||_0^2 at t, stable for large |t|.
double log_section_norm(double t);

struct RicciPotential {
  Profile h;
  Profile h_prime;
  double normalization = 0.0;  ///< additive constant fixed by int (e^h - 1) omega = 0
};
RicciPotential ricci_potential_h0(const RadialKahlerPotential& pot0);
/// Ricci potential relative to mu: Ric - mu*omega = i ddbar h, for a metric with cone
/// fraction beta at both poles (so h stays bounded); normalized like h0.
RicciPotential ricci_potential(const RadialKahlerPotential& pot, double mu, double beta);

/// int f omega over the sphere (grid quadrature plus lumped tail masses).
double integrate_on_sphere(const RadialKahlerPotential& pot, std::span<const double> f);
/// Same with per-pole tail masses supplied by the caller.
double integrate_on_sphere(const RadialKahlerPotential& pot, std::span<const double> f,
                           double tail_left, double tail_right);

constexpr double kVolume = 12.566370614359172;  // 4*pi

}  // namespace conic_ke
