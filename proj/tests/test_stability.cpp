#include <doctest.h>

#include <cmath>
#include <random>

#include "conic_ke/errors.hpp"
#include "conic_ke/stability.hpp"

using namespace conic_ke;
using doctest::Approx;

namespace {
/// Fubini-Study with the moment map bent by a sech^2 bump: Phi' = 2 sigma(t) + a sech^2(b (t - c)).
RadialKahlerPotential bent(const Grid& g, double a, double b, double c, double lift = 0.0) {
  const auto fs = fubini_study_potential(g);
  Profile v(g.size()), d1(g.size()), d2(g.size());
  for (int i = 0; i < g.size(); ++i) {
    const double x = b * (g.node(i) - c);
    const double s = 1 / std::cosh(x);
    d1[i] = fs.phi_prime()[i] + a * s * s + lift;
    d2[i] = fs.phi_doubleprime()[i] - 2 * a * b * s * s * std::tanh(x);
    v[i] = fs.values()[i] + a / b * (std::tanh(x) + 1) + lift * g.node(i);
  }
  return RadialKahlerPotential(g, v, d1, d2, 0.0, 1.0, 1.0, lift == 0.0 ? Check::strict : Check::basic);
}

const std::vector<ConePoint> kPair{ConePoint::pole(Pole::zero), ConePoint::pole(Pole::infinity)};
const std::vector<ConePoint> kTeardrop{ConePoint::pole(Pole::infinity)};
}  // namespace

TEST_CASE("hamiltonian of the reference metric and footballs") {
  const Grid g;
  const auto fs = fubini_study_potential(g);
  const auto h = hamiltonian_theta(fs);
  CHECK(h.mean == Approx(1.0).epsilon(1e-12));
  CHECK(h.at_zero == Approx(-1.0).epsilon(1e-12));
  CHECK(h.at_infinity == Approx(1.0).epsilon(1e-12));
  CHECK(h.mean_residual <= 1e-10);
  CHECK(h.relation_residual <= 1e-8);
  for (int i = 0; i < g.size(); i += 97) CHECK(h.theta[i] == Approx(fs.phi_prime()[i] - 1.0).epsilon(1e-12));
  for (double beta : {0.4, 0.75}) {
    const auto hb = hamiltonian_theta(football_potential(g, beta));
    CHECK(hb.at_infinity == Approx(1.0).epsilon(1e-10));
    CHECK(hb.at_zero == Approx(-1.0).epsilon(1e-10));
    CHECK(hb.mean_residual <= 1e-10);
    for (int i = 0; i < g.size() / 2; i += 61) CHECK(hb.theta[i] == Approx(-hb.theta[g.size() - 1 - i]).epsilon(1e-12));
  }
  const auto hp = hamiltonian_theta(bent(g, 0.1, 0.5, 1.0));
  CHECK(hp.mean_residual <= 1e-10);
  CHECK(hp.relation_residual <= 1e-7);
}

TEST_CASE("futaki invariant vanishes on the sphere") {
  const Grid g;
  const auto f0 = futaki(fubini_study_potential(g));
  CHECK(f0.smooth);
  CHECK(std::abs(f0.via_curvature) <= 1e-10);
  CHECK(std::abs(f0.via_ricci_potential) <= 1e-10);

  std::mt19937_64 rng(11);
  // b = 1/2 or 1 keeps the bump rational in |z|^2, so the metric stays smooth at the poles
  std::uniform_real_distribution<double> amp(-0.1, 0.1), centre(-1.0, 1.0);
  for (int k = 0; k < 5; ++k) {
    const auto pot = bent(g, amp(rng), k % 2 ? 1.0 : 0.5, centre(rng));
    const auto f = futaki(pot);
    CHECK(std::abs(f.via_curvature) <= 1e-6);
    CHECK(std::abs(f.via_ricci_potential) <= 1e-6);
    CHECK(f.discrepancy <= 1e-6);
  }
  // conic input: only the curvature form is defined
  const auto fc = futaki(football_potential(g, 0.6));
  CHECK_FALSE(fc.smooth);
  CHECK(std::isnan(fc.via_ricci_potential));
  CHECK(std::abs(fc.via_curvature) <= 1e-8);
}

TEST_CASE("log-futaki of footballs and teardrops") {
  const Grid g;
  const auto fs = fubini_study_potential(g);
  for (double beta : {0.3, 0.7, 1.0}) {
    CHECK(std::abs(log_futaki(fs, beta, kPair)) <= 1e-8);
    CHECK(std::abs(log_futaki(football_potential(g, beta), beta, kPair)) <= 1e-8);
  }
  CHECK(log_futaki(fs, 0.7, kTeardrop) == Approx(0.3).epsilon(1e-6 / 0.3));
  CHECK(log_futaki(football_potential(g, 0.7), 0.7, kTeardrop) == Approx(0.3).epsilon(1e-6 / 0.3));
  CHECK(std::abs(log_futaki(fs, 1.0, kTeardrop)) <= 1e-10);
  // interior point on the equator: theta = 0 there for the reference metric
  CHECK(std::abs(log_futaki(fs, 0.5, {ConePoint::at(0.0, 2.0)})) <= 1e-8);
  CHECK_THROWS_AS(log_futaki(fs, 0.0, kPair), InvalidArgument);
  CHECK_THROWS_AS(log_futaki(fs, 0.5, {ConePoint::at(40.0)}), InvalidArgument);
  CHECK_THROWS_AS(log_futaki(fs, 0.5, {ConePoint::pole(Pole::zero, -1.0)}), InvalidArgument);
}

TEST_CASE("invariants do not see a constant added to the moment map") {
  const Grid g;
  const auto a = bent(g, 0.08, 1.0, 0.5);
  const auto b = bent(g, 0.08, 1.0, 0.5, 3.0);
  const auto ha = hamiltonian_theta(a), hb = hamiltonian_theta(b);
  for (int i = 0; i < g.size(); i += 101) CHECK(hb.theta[i] == Approx(ha.theta[i]).epsilon(1e-12));
  CHECK(log_futaki(b, 0.6, kTeardrop) == Approx(log_futaki(a, 0.6, kTeardrop)).epsilon(1e-12));
  CHECK(futaki(b).via_curvature == Approx(futaki(a).via_curvature).epsilon(1e-12));
}

TEST_CASE("linearity in the cone angle") {
  const Grid g;
  const auto fs = fubini_study_potential(g);
  CHECK(linearity_check(fs, 0.9, 0.6, kPair) <= 1e-12);
  CHECK(linearity_check(fs, 0.8, 0.5, kTeardrop) <= 1e-12);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> w(0.1, 3.0), t(-5.0, 5.0);
  const auto pot = bent(g, 0.1, 0.5, -1.0);
  for (int k = 0; k < 5; ++k) {
    const std::vector<ConePoint> pts{ConePoint::pole(Pole::zero, w(rng)), ConePoint::at(t(rng), w(rng)),
                                     ConePoint::pole(Pole::infinity, w(rng))};
    CHECK(linearity_check(pot, 0.9, 0.6, pts) <= 1e-12);
  }
  CHECK_THROWS_AS(linearity_check(fs, 0.5, 0.5, kPair), InvalidArgument);
}

TEST_CASE("obstruction scan") {
  const Grid g;
  const std::vector<ObstructionConfig> configs{
      {"pair", kPair},
      {"double-infinity", {ConePoint::pole(Pole::infinity, 2.0)}},
      {"unbalanced", {ConePoint::pole(Pole::zero, 0.5), ConePoint::pole(Pole::infinity, 1.5)}},
  };
  const std::vector<double> betas{0.4, 0.7, 0.9};
  const auto rows = obstruction_scan(configs, betas, fubini_study_potential(g), true, 3);
  REQUIRE(rows.size() == 9);
  for (std::size_t c = 0; c < configs.size(); ++c)
    for (std::size_t b = 0; b < betas.size(); ++b) {
      const auto& row = rows[c * betas.size() + b];
      const double beta = betas[b];
      CHECK(row.config_id == configs[c].id);
      CHECK(row.beta == beta);
      if (c == 0) {
        CHECK_FALSE(row.obstructed);
        CHECK(row.solver_check == "ok");
      } else {
        CHECK(row.obstructed);
        CHECK(row.solver_check == "skipped");
        const double expected = c == 1 ? 2 * (1 - beta) : (1 - beta) * (1.5 - 0.5);
        CHECK(row.log_futaki == Approx(expected).epsilon(1e-6));
      }
    }
  // deterministic regardless of the worker count
  const auto serial = obstruction_scan(configs, betas, fubini_study_potential(g), false, 1);
  const auto threaded = obstruction_scan(configs, betas, fubini_study_potential(g), false, 4);
  for (std::size_t i = 0; i < serial.size(); ++i) CHECK(serial[i].log_futaki == threaded[i].log_futaki);
}
