/// Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned below.
/// Exit status is nonzero if a criterion fails that is not listed in kKnownUnattainable.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "conic_ke/bergman.hpp"
#include "conic_ke/cli.hpp"
#include "conic_ke/cone_analysis.hpp"
#include "conic_ke/functionals.hpp"
#include "conic_ke/io.hpp"
#include "conic_ke/ma_solver.hpp"
#include "conic_ke/stability.hpp"

using namespace conic_ke;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kVolume = 4 * kPi;

// criterion 1
constexpr double kFootballSup = 1e-6;
constexpr double kFootballWindow = 8.0;
constexpr int kFootballIterations = 25;
// criterion 2
constexpr double kMarginFloor = -1e-8;
constexpr double kSmoothingFinal = 5e-3;
// criterion 3
constexpr double kFsEigenTol = 1e-4;
// criterion 4
constexpr double kFdRelative = 1e-3;
constexpr double kOnPath = 1e-8;
// criterion 5
constexpr double kTraceTol = 1e-8;
constexpr double kRefineStability = 0.02;
// criterion 6
constexpr double kHalvingGain = 3.5;
// criterion 7
constexpr double kUniformity = 0.15;
// criterion 8
constexpr double kFutakiTol = 1e-6;
constexpr double kLogFutakiSymmetric = 1e-8;
constexpr double kLogFutakiTeardrop = 1e-6;
constexpr double kLinearity = 1e-12;
// criterion 9
constexpr double kCoareaTol = 1e-6;
// criterion 10
constexpr double kPoleDensityRel = 0.01;
constexpr double kTubeExponentTol = 0.05;

/// The closed-form capacity bound omits the 2 pi beta_bar factor of the cone and cannot hold for beta_bar = 1.
const std::set<int> kKnownUnattainable{9};

struct Line {
  int id;
  bool pass;
  std::string detail;
};

std::string num(double x) {
  std::ostringstream s;
  s.precision(3);
  s << x;
  return s.str();
}

double sup_diff(const Profile& a, const Profile& b, const Grid& g, double window) {
  double e = 0.0;
  for (int i = 0; i < g.size(); ++i)
    if (std::abs(g.node(i)) <= window) e = std::max(e, std::abs(a[i] - b[i]));
  return e;
}

/// Exact conic solution: the football shifted by the constant fixed by the normalization.
Profile football_solution(const Grid& g, double beta) {
  const double b = std::tgamma(beta) * std::tgamma(0.5) / std::tgamma(beta + 0.5);
  const double a_beta = -std::log(0.5 * b);
  const double c = (a_beta - std::log(beta) - (1 - beta) * std::log(4.0)) / beta;
  auto phi = relative_potential(football_potential(g, beta));
  for (auto& v : phi) v += c;
  return phi;
}

SolverConfig config(double beta, double delta, double tau) {
  SolverConfig c;
  c.cone = ConeConfiguration::anticanonical_pair(beta);
  c.delta = delta;
  c.tau = tau;
  return c;
}

ContinuationTrace path(double beta, double delta, double max_step = 0.0) {
  ContinuationSchedule s;
  s.max_step = max_step;
  return continuity_path(ConeConfiguration::anticanonical_pair(beta), delta, s);
}

// ---------------------------------------------------------------------------------------

Line football_recovery() {
  const Grid g;
  double worst = 0.0;
  int iters = 0;
  for (double beta : {0.5, 0.75, 0.9}) {
    const auto res = solve_ma_detailed(config(beta, 0.0, beta), fubini_study_potential(g));
    worst = std::max(worst, sup_diff(res.phi, football_solution(g, beta), g, kFootballWindow));
    iters = std::max(iters, res.iterations);
  }
  return {1, worst <= kFootballSup && iters <= kFootballIterations,
          "sup error " + num(worst) + ", newton iterations <= " + std::to_string(iters)};
}

Line smoothing() {
  const double beta = 0.75;
  const auto cone = ConeConfiguration::anticanonical_pair(beta);
  const auto rep = smoothing_family(cone, {1e-1, 1e-2, 1e-3, 1e-4, 1e-5}, Grid(), 4);
  double margin = 1e300;
  for (const auto& m : rep.members)
    margin = std::min(margin, ricci_lower_bound_margin(m.solution, config(beta, m.delta, beta)).min_margin);
  const double last = rep.members.back().sup_distance;
  return {2, margin >= kMarginFloor && rep.sup_monotone && last <= kSmoothingFinal,
          "min Ricci margin " + num(margin) + ", monotone " + (rep.sup_monotone ? "yes" : "no") +
              ", final sup distance " + num(last)};
}

Line eigenvalue_gap(const std::vector<const ContinuationTrace*>& traces) {
  const double fs = first_eigenvalue(fubini_study_potential(Grid())).lambda1;
  double gap = 1e300;
  std::size_t steps = 0;
  bool completed = true;
  for (const auto* t : traces) {
    completed = completed && t->completed;
    for (const auto& s : t->steps) gap = std::min(gap, s.lambda1 - s.tau);
    steps += t->steps.size();
  }
  return {3, completed && gap > 0.0 && std::abs(fs - 1.0) <= kFsEigenTol,
          "min lambda1 - tau " + num(gap) + " over " + std::to_string(steps) + " steps, FS lambda1 " +
              num(fs)};
}

Line path_identity(const ContinuationTrace& t) {
  const auto r = path_derivative_residual(t);
  return {4, t.completed && r.max_fd_relative <= kFdRelative && r.max_on_path <= kOnPath,
          "fd relative " + num(r.max_fd_relative) + ", on-path " + num(r.max_on_path)};
}

Line bergman_positivity() {
  std::vector<double> betas;
  for (int k = 0; k <= 8; ++k) betas.push_back(0.6 + 0.05 * k);
  const std::vector<int> ells{2, 4, 8, 16};
  const auto coarse = partial_c0_scan(betas, ells, Grid(16.0, 2049), 4);
  const auto fine = partial_c0_scan(betas, ells, Grid(16.0, 4097), 4);
  double trace = 0.0, drift = 0.0, low = 1e300;
  for (std::size_t i = 0; i < coarse.size(); ++i) {
    trace = std::max({trace, std::abs(coarse[i].trace_check), std::abs(fine[i].trace_check)});
    drift = std::max(drift, std::abs(fine[i].inf_rho - coarse[i].inf_rho) / coarse[i].inf_rho);
    low = std::min(low, coarse[i].inf_rho * kVolume / (2 * coarse[i].ell + 1));
  }
  return {5, trace <= kTraceTol && low > 0.0 && drift <= kRefineStability,
          "trace error " + num(trace) + ", min inf rho V/(2l+1) " + num(low) + ", refinement drift " + num(drift)};
}

Line bochner() {
  const auto one = ConeConfiguration::anticanonical_pair(1.0);
  const Grid coarse(16.0, 257);
  const auto a = bochner_residual(0, fubini_study_potential(coarse), 1, one);
  const auto b = bochner_residual(0, fubini_study_potential(coarse.refined()), 1, one);
  const auto cone = ConeConfiguration::anticanonical_pair(0.75);
  const Grid mid(16.0, 513);
  const auto c = bochner_residual(2, football_potential(mid, 0.75), 4, cone);
  const auto d = bochner_residual(2, football_potential(mid.refined(), 0.75), 4, cone);
  const double gain = std::min({a.sup_first / b.sup_first, a.sup_second / b.sup_second, c.sup_first / d.sup_first,
                                c.sup_second / d.sup_second});
  return {6, gain >= kHalvingGain, "smallest gain per halving " + num(gain)};
}

Line moser_constant() {
  const auto fs = fubini_study_potential(Grid());
  const auto one = ConeConfiguration::anticanonical_pair(1.0);
  std::vector<double> r;
  for (int ell : {2, 4, 8, 16, 32}) r.push_back(gradient_estimate_ratio(ell, fs, one));
  double mean = 0.0;
  for (double x : r) mean += x / r.size();
  double dev = 0.0;
  for (double x : r) dev = std::max(dev, std::abs(x - mean) / mean);
  return {7, dev <= kUniformity, "max deviation from mean " + num(dev)};
}

/// Round metric with the moment map bent by a sech^2 bump; b in {1/2, 1} keeps it smooth.
RadialKahlerPotential bent(const Grid& g, double a, double b, double c) {
  const auto fs = fubini_study_potential(g);
  Profile v(g.size()), d1(g.size()), d2(g.size());
  for (int i = 0; i < g.size(); ++i) {
    const double x = b * (g.node(i) - c);
    const double s = 1 / std::cosh(x);
    d1[i] = fs.phi_prime()[i] + a * s * s;
    d2[i] = fs.phi_doubleprime()[i] - 2 * a * b * s * s * std::tanh(x);
    v[i] = fs.values()[i] + a / b * (std::tanh(x) + 1);
  }
  return RadialKahlerPotential(g, v, d1, d2, 0.0, 1.0, 1.0);
}

Line futaki_invariants() {
  const Grid g;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> amp(-0.1, 0.1), centre(-1.0, 1.0);
  double value = 0.0, gap = 0.0;
  for (int k = 0; k < 5; ++k) {
    const auto f = futaki(bent(g, amp(rng), k % 2 ? 1.0 : 0.5, centre(rng)));
    value = std::max({value, std::abs(f.via_curvature), std::abs(f.via_ricci_potential)});
    gap = std::max(gap, f.discrepancy);
  }
  const std::vector<ConePoint> pair{ConePoint::pole(Pole::zero), ConePoint::pole(Pole::infinity)};
  const std::vector<ConePoint> teardrop{ConePoint::pole(Pole::infinity)};
  const auto fs = fubini_study_potential(g);
  double symmetric = 0.0, tear = 0.0;
  for (double beta : {0.3, 0.7, 0.9}) {
    symmetric = std::max(symmetric, std::abs(log_futaki(football_potential(g, beta), beta, pair)));
    const double theta_inf = hamiltonian_theta(fs).at_infinity;
    tear = std::max(tear, std::abs(log_futaki(fs, beta, teardrop) - (1 - beta) * theta_inf));
  }
  const double lin = std::max(linearity_check(fs, 0.9, 0.6, pair), linearity_check(fs, 0.8, 0.5, teardrop));
  const bool pass =
      value <= kFutakiTol && gap <= kFutakiTol && symmetric <= kLogFutakiSymmetric && tear <= kLogFutakiTeardrop &&
      lin <= kLinearity;
  return {8, pass,
          "futaki " + num(value) + " (formulas differ by " + num(gap) + "), football log-futaki " + num(symmetric) +
              ", teardrop error " + num(tear) + ", linearity " + num(lin)};
}

Line capacity() {
  bool literal = true, below = true, corrected = true;
  double coarea = 0.0, excess = 0.0;
  for (auto [n, eps] : {std::pair{1, 0.1}, std::pair{2, 0.2}}) {
    const auto rule = dirichlet_energy(LogLogCutoff(eps, select_log_inv_delta(n, eps, 1.0, DeltaRule::automatic)),
                                       flat_cone_metric(n, 1.0));
    below = below && rule.energy <= eps;
    corrected = corrected && rule.within_corrected;
    coarea = std::max(coarea, rule.coarea_relative_diff);
    literal = literal && rule.within_literal;
    excess = std::max(excess, rule.energy / rule.literal_bound);
  }
  return {9, literal && below && coarea <= kCoareaTol,
          std::string("literal bound ") + (literal ? "holds" : "violated") + " (energy/bound up to " + num(excess) +
              "), corrected bound " + (corrected ? "holds" : "violated") + ", energy <= eps " +
              (below ? "yes" : "no") + ", co-area " + num(coarea)};
}

Line volume_comparison() {
  std::vector<double> radii;
  for (double r = 0.02; r < 2.0; r *= 1.5) radii.push_back(r);
  const auto pole = volume_ratio_profile(football_potential(Grid(), 0.6), Pole::zero, radii);
  const double rel = std::abs(pole.limit - kPi * 0.6) / (kPi * 0.6);
  const auto flat = volume_ratio_profile(flat_cone_metric(1, 0.4), {{}, 0.5, 0.0}, {0.1, 0.3, 0.6, 1.2, 3.0, 10.0});
  const std::vector<double> tr{0.01, 0.02, 0.05, 0.1, 0.2};
  double exp_err = 0.0;
  for (const auto& t : {tube_volume(flat_cone_metric(2, 0.7), 1.0, 2.0, tr),
                        tube_volume(flat_cone_metric(3, 0.5), 0.5, 1.0, tr),
                        tube_volume(flat_cone_metric(1, 0.3), 0.0, 1.0, tr)})
    exp_err = std::max(exp_err, std::abs(t.exponent - 2.0));
  return {10, rel <= kPoleDensityRel && pole.monotone && flat.monotone && exp_err <= kTubeExponentTol,
          "pole density error " + num(rel) + ", monotone " + (pole.monotone && flat.monotone ? "yes" : "no") +
              ", tube exponent error " + num(exp_err)};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

Line reproducibility() {
  const fs::path root = fs::temp_directory_path() / ("conic_ke_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const std::vector<std::vector<std::string>> commands{
      {"solve", "--beta", "0.75", "--delta", "1e-3", "--grid-N", "1025"},
      {"continue-path", "--beta", "0.8", "--delta", "1e-3", "--grid-N", "1025"},
      {"smooth-family", "--beta", "0.75", "--deltas", "1e-1,1e-3", "--grid-N", "1025"},
      {"bergman-scan", "--betas", "0.7,1", "--ells", "2,8", "--profiles", "true", "--grid-N", "1025"},
      {"futaki", "--family", "football", "--metric-beta", "0.7", "--grid-N", "1025"},
      {"log-futaki", "--grid-N", "1025"},
      {"capacity", "--n", "2", "--eps", "0.2", "--cover", "true", "--samples", "20000"},
      {"volume-scan", "--family", "football", "--beta", "0.6"},
      {"volume-scan", "--family", "flat", "--n", "2", "--beta", "0.7", "--rho0", "0.3"},
  };
  int files = 0, mismatched = 0, failed = 0;
  for (std::size_t k = 0; k < commands.size(); ++k) {
    std::vector<fs::path> dirs;
    for (const char* jobs : {"1", "1", "3"}) {
      dirs.push_back(root / (std::to_string(k) + "_" + std::to_string(dirs.size())));
      auto args = commands[k];
      args.insert(args.end(), {"--jobs", jobs, "--out", dirs.back().string()});
      std::ostringstream out, err;
      if (cli::run(args, out, err) != 0) {
        ++failed;
        std::fprintf(stderr, "%s", err.str().c_str());
      }
    }
    if (failed) break;
    const auto manifest = io::read_json((dirs[0] / "manifest.json").string());
    for (const auto& f : manifest["outputs"]) {
      const auto ref = slurp(dirs[0] / f.get<std::string>());
      ++files;
      for (std::size_t d = 1; d < dirs.size(); ++d)
        if (ref.empty() || slurp(dirs[d] / f.get<std::string>()) != ref) ++mismatched;
    }
  }
  fs::remove_all(root);
  return {11, failed == 0 && files > 0 && mismatched == 0,
          std::to_string(commands.size()) + " commands, " + std::to_string(files) + " files, " +
              std::to_string(mismatched) + " mismatches" + (failed ? ", a command failed" : "")};
}

}  // namespace

int main() {
  const auto start = std::chrono::steady_clock::now();
  const auto t4 = path(0.8, 1e-4);
  const auto t3 = path(0.8, 1e-3, 0.8 / 40);

  std::vector<std::function<Line()>> checks{
      football_recovery,
      smoothing,
      [&] { return eigenvalue_gap({&t4, &t3}); },
      [&] { return path_identity(t3); },
      bergman_positivity,
      bochner,
      moser_constant,
      futaki_invariants,
      capacity,
      volume_comparison,
      reproducibility,
  };
  int unexpected = 0;
  for (const auto& check : checks) {
    Line line;
    try {
      line = check();
    } catch (const std::exception& e) {
      line = {static_cast<int>(&check - checks.data()) + 1, false, std::string("exception: ") + e.what()};
    }
    const bool known = !line.pass && kKnownUnattainable.count(line.id);
    if (!line.pass && !known) ++unexpected;
    std::printf("criterion %2d: %s  %s%s\n", line.id, line.pass ? "PASS" : "FAIL", line.detail.c_str(),
                known ? "  [known unattainable]" : "");
    std::fflush(stdout);
  }
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  std::printf("%d unexpected failure(s), %.1f s\n", unexpected, elapsed.count());
  return unexpected == 0 ? 0 : 1;
}
