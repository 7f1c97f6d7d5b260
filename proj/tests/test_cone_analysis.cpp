#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <random>

#include "conic_ke/cone_analysis.hpp"
#include "conic_ke/errors.hpp"

using namespace conic_ke;
using doctest::Approx;

namespace {
constexpr double kPi = std::numbers::pi;

/// Shortest paths on a polar graph of the 2-d cone d rho^2 + b^2 rho^2 dtheta^2.
/// Edge lengths integrate the metric along coordinate-straight segments (Simpson), so the
/// oracle never uses the unrolling formula.
class PolarGraph {
 public:
  PolarGraph(double beta_bar, double rho_max, int n_rho, int n_theta, int reach_rho, int reach_theta)
      : b_(beta_bar), dr_(rho_max / n_rho), nr_(n_rho), nt_(n_theta), rr_(reach_rho), rt_(reach_theta) {}

  double rho(int i) const { return i * dr_; }
  double theta(int j) const { return 2 * kPi * j / nt_; }

  /// Distances from node (i0, j0), i0 > 0.
  std::vector<double> from(int i0, int j0) const {
    const int total = 1 + nr_ * nt_;
    std::vector<double> dist(total, std::numeric_limits<double>::infinity());
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> q;
    dist[id(i0, j0)] = 0.0;
    q.push({0.0, id(i0, j0)});
    while (!q.empty()) {
      const auto [d, u] = q.top();
      q.pop();
      if (d > dist[u]) continue;
      auto relax = [&](int v, double w) {
        if (d + w < dist[v]) {
          dist[v] = d + w;
          q.push({dist[v], v});
        }
      };
      if (u == 0) {
        for (int j = 0; j < nt_; ++j) relax(id(1, j), dr_);
        continue;
      }
      const int i = 1 + (u - 1) / nt_, j = (u - 1) % nt_;
      if (i == 1) relax(0, dr_);
      for (int di = -rr_; di <= rr_; ++di) {
        const int k = i + di;
        if (k < 1 || k > nr_) continue;
        for (int dj = -rt_; dj <= rt_; ++dj) {
          if (di == 0 && dj == 0) continue;
          relax(id(k, (j + dj + nt_) % nt_), length(rho(i), rho(k), 2 * kPi * dj / nt_));
        }
      }
    }
    return dist;
  }

  int id(int i, int j) const { return i == 0 ? 0 : 1 + (i - 1) * nt_ + j; }

 private:
  double length(double r0, double r1, double dth) const {
    auto speed = [&](double s) {
      const double r = r0 + s * (r1 - r0);
      return std::sqrt((r1 - r0) * (r1 - r0) + b_ * b_ * r * r * dth * dth);
    };
    return (speed(0) + 4 * speed(0.5) + speed(1)) / 6;
  }

  double b_, dr_;
  int nr_, nt_, rr_, rt_;
};
}  // namespace

TEST_CASE("flat cone model") {
  const auto m = flat_cone_metric(1, 0.5);
  CHECK(m.circumference(2.0) == Approx(2 * kPi * 0.5 * 2.0));
  CHECK(m.vertex_ball_volume(1.3) == Approx(kPi * 1.3 * 1.3 / 2));
  CHECK(unit_ball_volume(2) == Approx(kPi));
  CHECK(unit_ball_volume(4) == Approx(kPi * kPi / 2));
  CHECK(unit_ball_volume(3) == Approx(4 * kPi / 3));
  const auto e = flat_cone_metric(2, 1.0);
  // Euclidean R^4 with the cone factor in polar coordinates
  const ConeCoordinates a{{0.3, -0.2}, 1.0, 0.4}, b{{-0.1, 0.5}, 0.7, 2.9};
  const double dx = 1.0 * std::cos(0.4) - 0.7 * std::cos(2.9), dy = 1.0 * std::sin(0.4) - 0.7 * std::sin(2.9);
  CHECK(e.distance(a, b) == Approx(std::sqrt(0.16 + 0.49 + dx * dx + dy * dy)).epsilon(1e-14));
  CHECK(m.cone_distance(1.0, 0.0, 1.0, kPi) == Approx(2 * std::sin(kPi / 4)).epsilon(1e-14));
  // opposite points of a wide-open cone are joined through the vertex
  CHECK(flat_cone_metric(1, 1.0).cone_distance(1.0, 0.0, 0.5, kPi) == Approx(1.5));
  CHECK_THROWS_AS(flat_cone_metric(0, 0.5), InvalidArgument);
  CHECK_THROWS_AS(flat_cone_metric(1, 1.5), InvalidArgument);
  CHECK_THROWS_AS(m.distance(a, b), InvalidArgument);
}

TEST_CASE("cone distance against graph shortest paths") {
  for (double beta_bar : {0.5, 0.3}) {
    const auto m = flat_cone_metric(1, beta_bar);
    const PolarGraph graph(beta_bar, 1.5, 150, 256, 6, 12);
    const int i0 = 100, j0 = 0;  // rho = 1
    const auto dist = graph.from(i0, j0);
    double worst = 0.0;
    for (int i : {20, 50, 100, 140})
      for (int j : {16, 64, 100, 128, 200}) {
        const double exact = m.cone_distance(graph.rho(i0), graph.theta(j0), graph.rho(i), graph.theta(j));
        worst = std::max(worst, std::abs(dist[graph.id(i, j)] - exact));
      }
    MESSAGE("beta_bar ", beta_bar, ": worst graph-metric gap ", worst);
    CHECK(worst <= 1e-3);
  }
}

TEST_CASE("log-log cutoff support and gradient") {
  const double eps = 0.2, delta = 1e-2;
  const auto c = loglog_cutoff(eps, delta);
  CHECK(c.value(eps / 2) == 1.0);
  CHECK(c.value(delta * eps * 1.0001) == 1.0);
  CHECK(c.value(std::pow(delta, 3) * eps / 2) == 0.0);
  CHECK(c.value(std::pow(delta, 3) * eps * 0.9999) == 0.0);
  CHECK(c.value(0.0) == 0.0);
  std::mt19937_64 rng(5);
  const double lo = std::log(std::pow(delta, 3) * eps), hi = std::log(delta * eps);
  std::uniform_real_distribution<double> u(lo, hi);
  for (int k = 0; k < 1000; ++k) {
    const double lr = u(rng);
    const double v = c.value_at_log(lr);
    CHECK((v >= 0.0 && v <= 1.0));
    const double g = c.scaled_gradient(lr);
    CHECK(g <= c.scaled_gradient_bound(lr) * (1 + 1e-12));
    // rho |d gamma / d rho| = |d gamma / d log rho|
    const double h = 1e-6;
    const double fd = std::abs(c.value_at_log(lr + h) - c.value_at_log(lr - h)) / (2 * h);
    if (std::abs(lr - lo) > 1e-4 && std::abs(lr - hi) > 1e-4) CHECK(fd == Approx(g).epsilon(1e-5));
  }
  // gradient vanishes outside the band
  CHECK(c.scaled_gradient(std::log(eps / 2)) == 0.0);
  CHECK(c.scaled_gradient(lo - 1.0) == 0.0);
  CHECK_THROWS_AS(loglog_cutoff(eps, 0.5), InvalidArgument);
  CHECK_THROWS_AS(loglog_cutoff(-1.0, 0.1), InvalidArgument);
  CHECK_THROWS_AS(c.scaled_gradient_bound(std::log(2 * eps)), DomainError);
}

TEST_CASE("dirichlet energy of the cutoff") {
  // n = 1: energy = 2 pi b int eta'^2 e^{-s} ds = 2 pi b (2/3) / (L log^2 3) exactly
  for (double b : {0.25, 1.0}) {
    for (double big_l : {3.0, 10.0, 100.0}) {
      const LogLogCutoff c(0.1, big_l);
      const auto rep = dirichlet_energy(c, flat_cone_metric(1, b));
      const double exact = 2 * kPi * b * (2.0 / 3.0) / (big_l * std::pow(std::log(3.0), 2));
      CHECK(rep.energy == Approx(exact).epsilon(1e-10));
      CHECK(rep.coarea_relative_diff <= 1e-6);
      CHECK(rep.within_corrected);
    }
  }
  // n = 2: the flat factor contributes the volume of a (2n-2)-ball of radius ~ 1/eps
  {
    const LogLogCutoff c(0.2, 8.0);
    const auto rep = dirichlet_energy(c, flat_cone_metric(2, 0.5));
    const double approx = 2 * kPi * 0.5 * kPi * 25.0 * (2.0 / 3.0) / (8.0 * std::pow(std::log(3.0), 2));
    CHECK(rep.energy == Approx(approx).epsilon(1e-3));
    CHECK(rep.energy < approx);
    CHECK(rep.literal_bound == Approx(kPi / (0.04 * 8.0)));
    CHECK(rep.coarea_relative_diff <= 1e-6);
  }
  // energy decays like 1 / (-log delta)
  std::vector<double> x, y;
  for (double big_l : {5.0, 10.0, 20.0, 40.0, 80.0}) {
    x.push_back(std::log(big_l));
    y.push_back(std::log(dirichlet_energy(LogLogCutoff(0.2, big_l), flat_cone_metric(2, 1.0)).energy));
  }
  const auto fit = numerics::fit_line(x, y);
  CHECK(fit.slope == Approx(-1.0).epsilon(0.05));
}

TEST_CASE("delta selection rules") {
  for (auto [n, eps] : {std::pair{1, 0.1}, std::pair{2, 0.2}}) {
    const double big_l = select_log_inv_delta(n, eps, 1.0, DeltaRule::automatic);
    const auto rep = dirichlet_energy(LogLogCutoff(eps, big_l), flat_cone_metric(n, 1.0));
    CHECK(rep.below_eps);
    CHECK(rep.energy <= eps);
    CHECK(rep.within_corrected);
    // a narrow cone satisfies the literal statement with the literal rule
    const double lit = select_log_inv_delta(n, eps, 0.25, DeltaRule::literal);
    CHECK(lit == Approx(std::max(2.0, unit_ball_volume(2 * n - 2) / std::pow(eps, 2 * n - 1))));
    const auto narrow = dirichlet_energy(LogLogCutoff(eps, lit), flat_cone_metric(n, 0.25));
    CHECK(narrow.within_literal);
    CHECK(narrow.energy <= eps);
  }
  // Cauchy-Schwarz: no admissible profile beats pi b times the literal bound, so b = 1 misses it
  const auto full = dirichlet_energy(LogLogCutoff(0.1, 50.0), flat_cone_metric(1, 1.0));
  CHECK(full.energy >= kPi * full.literal_bound);
  CHECK_FALSE(full.within_literal);
  CHECK(select_log_inv_delta(1, 10.0, 1.0, DeltaRule::automatic) == 2.0);
}

TEST_CASE("ball cover of a codimension-4 set") {
  // n = 2: the singular set is a point, covered by one ball
  const auto m2 = flat_cone_metric(2, 0.7);
  const auto one = ball_cover_cutoff(m2, {}, 0.1, 5.0, 17, 100000);
  REQUIRE(one.centers.size() == 1);
  CHECK(one.max_overlap == 1);
  CHECK(one.radius_sum <= 1.0);
  CHECK(std::abs(one.energy - one.bound) <= 4 * one.standard_error);
  CHECK(one.energy <= one.constant * 0.1 + 4 * one.standard_error);
  const auto half = ball_cover_cutoff(m2, {}, 0.05, 5.0, 17, 100000);
  CHECK(half.energy <= one.constant * 0.05 + 4 * half.standard_error);
  CHECK(half.constant <= one.constant);
  // same seed, same numbers
  const auto again = ball_cover_cutoff(m2, {}, 0.1, 5.0, 17, 100000);
  CHECK(again.energy == one.energy);

  // n = 3: a plane, covered by a lattice of balls
  const auto m3 = flat_cone_metric(3, 0.5);
  const CodimFourSubspace s{{0.3, 0.0}};
  const double region = 1.0, eps0 = 0.2;
  const auto cover = ball_cover_cutoff(m3, s, eps0, region, 9, 20000);
  CHECK(cover.centers.size() > 1);
  CHECK(cover.radius_sum <= 1.0);
  CHECK(cover.min_center_gap >= 1.0);
  for (double r : cover.radii) CHECK(2 * r <= eps0 * (1 + 1e-12));
  // every point of the singular set in the region lies in some ball
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double reach = std::sqrt(region * region - 0.09);
  for (int k = 0; k < 500; ++k) {
    const double p = reach * u(rng), q = reach * u(rng);
    if (p * p + q * q > reach * reach) continue;
    double best = 1e300;
    for (std::size_t a = 0; a < cover.centers.size(); ++a) {
      const auto& c = cover.centers[a];
      best = std::min(best, std::hypot(std::hypot(c[0] - 0.3, c[1]), std::hypot(c[2] - p, c[3] - q)) / cover.radii[a]);
    }
    CHECK(best <= 1.0 + 1e-12);
  }
  CHECK(cover.max_overlap >= 1);
  CHECK(cover.energy <= cover.bound + 4 * cover.standard_error);

  CHECK_THROWS_AS(ball_cover_cutoff(m3, {}, 1.0, 10.0), CoverInfeasible);
  CHECK_THROWS_AS(ball_cover_cutoff(flat_cone_metric(1, 0.5), {}, 0.1, 1.0), InvalidArgument);
  CHECK(bar_eta(1.0) == 0.0);
  CHECK(bar_eta(1.35) == Approx(0.5));
  CHECK(bar_eta(1.7) == 1.0);
}

TEST_CASE("volume ratios on flat cones") {
  const std::vector<double> radii{0.1, 0.2, 0.4, 0.8, 1.6};
  const auto vertex = volume_ratio_profile(flat_cone_metric(1, 0.5), {{}, 0.0, 0.0}, radii);
  for (double v : vertex.ratio) CHECK(v == Approx(kPi / 2).epsilon(1e-12));
  CHECK(vertex.monotone);
  CHECK(vertex.beta_estimate == Approx(0.5).epsilon(1e-10));
  const auto euclid = volume_ratio_profile(flat_cone_metric(2, 1.0), {{0.0, 0.0}, 0.7, 1.0}, radii);
  for (double v : euclid.ratio) CHECK(v == Approx(kPi * kPi / 2).epsilon(1e-6));
  // off the vertex the ratio starts at the smooth value and decreases to the cone value
  const auto off = volume_ratio_profile(flat_cone_metric(1, 0.4), {{}, 0.5, 0.0}, {0.1, 0.3, 0.6, 1.2, 3.0, 10.0});
  CHECK(off.monotone);
  CHECK(off.ratio.front() == Approx(kPi).epsilon(1e-8));
  CHECK(off.ratio.back() < kPi * 0.5);
  CHECK(off.ratio.back() > kPi * 0.4);
  CHECK_THROWS_AS(volume_ratio_profile(flat_cone_metric(1, 0.5), {{}, 0.0, 0.0}, {0.2, 0.1}), InvalidArgument);
}

TEST_CASE("volume ratios at the pole of a football") {
  const Grid g;
  std::vector<double> radii;
  for (double r = 0.02; r < 2.0; r *= 1.5) radii.push_back(r);
  for (double beta : {0.6, 1.0}) {
    const auto rep = volume_ratio_profile(football_potential(g, beta), Pole::zero, radii);
    // area of a ball about a cone point of angle 2 pi beta on a sphere of curvature beta
    for (std::size_t k = 0; k < radii.size(); ++k) {
      const double r = radii[k];
      CHECK(rep.ratio[k] == Approx(2 * kPi * (1 - std::cos(std::sqrt(beta) * r)) / (r * r)).epsilon(1e-6));
      CHECK(rep.ratio[k] <= kPi * beta * (1 + 1e-9));
    }
    CHECK(rep.monotone);
    CHECK(rep.limit == Approx(kPi * beta).epsilon(0.01));
    CHECK(rep.beta_estimate == Approx(beta).epsilon(0.01));
  }
  CHECK_THROWS_AS(volume_ratio_profile(fubini_study_potential(g), Pole::infinity, {1.0, 50.0}), DomainError);
}

TEST_CASE("tube volumes") {
  std::vector<double> radii{0.01, 0.02, 0.05, 0.1, 0.2};
  const auto m = flat_cone_metric(2, 0.7);
  const auto t = tube_volume(m, 1.0, 2.0, radii);
  CHECK(t.exponent == Approx(2.0).epsilon(0.05 / 2));
  CHECK(t.constant == Approx(kPi * 0.7 * kPi * (4 - 1)).epsilon(1e-8));
  const auto wide = tube_volume(m, 1.0, 3.0, radii);
  CHECK(wide.constant / t.constant == Approx((9.0 - 1) / (4.0 - 1)).epsilon(1e-10));
  const auto flat = tube_volume(flat_cone_metric(2, 1.0), 0.5, 1.0, radii);
  CHECK(flat.constant == Approx(kPi * kPi * 0.75).epsilon(1e-8));
  const auto point = tube_volume(flat_cone_metric(1, 0.3), 0.0, 1.0, radii);
  CHECK(point.exponent == Approx(2.0).epsilon(1e-6));
  CHECK(point.constant == Approx(kPi * 0.3).epsilon(1e-10));
  CHECK_THROWS_AS(tube_volume(m, 2.0, 1.0, radii), InvalidArgument);
}
