#include "conic_ke/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include "conic_ke/bergman.hpp"
#include "conic_ke/cone_analysis.hpp"
#include "conic_ke/errors.hpp"
#include "conic_ke/functionals.hpp"
#include "conic_ke/io.hpp"
#include "conic_ke/ma_solver.hpp"
#include "conic_ke/stability.hpp"

namespace conic_ke::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

enum class Type { real, integer, boolean, text, reals, integers, object };

/// A configuration key, settable by flag (--name) or by the JSON config file. A null default
/// means the key is optional and absent unless given.
struct Param {
  std::string name;
  Type type;
  json def;
  std::string help;
};

struct Context {
  fs::path out_dir;
  int jobs = 1;
  json config;
  json results = json::object();
  std::vector<std::string> outputs;
  std::ostream* out = nullptr;

  std::string path(const std::string& file) {
    outputs.push_back(file);
    return (out_dir / file).string();
  }
  void csv(const std::string& file, const io::CsvTable& t) { io::write_csv(path(file), t); }

  double real(const std::string& k) const { return config.at(k).get<double>(); }
  int integer(const std::string& k) const { return config.at(k).get<int>(); }
  bool flag(const std::string& k) const { return config.at(k).get<bool>(); }
  std::string text(const std::string& k) const { return config.at(k).get<std::string>(); }
  bool has(const std::string& k) const { return config.contains(k) && !config.at(k).is_null(); }
  std::vector<double> reals(const std::string& k) const { return config.at(k).get<std::vector<double>>(); }
  std::vector<int> integers(const std::string& k) const { return config.at(k).get<std::vector<int>>(); }
  Grid grid() const { return Grid(real("grid-T"), integer("grid-N")); }
};

struct Command {
  std::string name;
  std::string description;
  std::vector<Param> params;
  std::function<void(Context&)> run;
};

std::string fmt(double x) { return io::format_number(x); }

std::string padded(int i, int width) {
  std::string s = std::to_string(i);
  return std::string(std::max(0, width - static_cast<int>(s.size())), '0') + s;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

double to_real(const std::string& s, const std::string& key) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw InvalidArgument("--" + key + ": not a number: " + s);
  return v;
}

int to_integer(const std::string& s, const std::string& key) {
  const double v = to_real(s, key);
  if (v != std::floor(v) || std::abs(v) > 1e9) throw InvalidArgument("--" + key + ": not an integer: " + s);
  return static_cast<int>(v);
}

json parse_flag(const Param& p, const std::string& s) {
  switch (p.type) {
    case Type::real: return to_real(s, p.name);
    case Type::integer: return to_integer(s, p.name);
    case Type::boolean:
      if (s == "true" || s == "1") return true;
      if (s == "false" || s == "0") return false;
      throw InvalidArgument("--" + p.name + ": expected true or false");
    case Type::text: return s;
    case Type::reals: {
      json a = json::array();
      for (const auto& x : split_list(s)) a.push_back(to_real(x, p.name));
      return a;
    }
    case Type::integers: {
      json a = json::array();
      for (const auto& x : split_list(s)) a.push_back(to_integer(x, p.name));
      return a;
    }
    case Type::object:
      try {
        return json::parse(s);
      } catch (const json::exception&) {
        throw InvalidArgument("--" + p.name + ": invalid JSON");
      }
  }
  return {};
}

void check_type(const Param& p, const json& v) {
  if (v.is_null()) return;
  bool ok = false;
  switch (p.type) {
    case Type::real: ok = v.is_number(); break;
    case Type::integer: ok = v.is_number_integer(); break;
    case Type::boolean: ok = v.is_boolean(); break;
    case Type::text: ok = v.is_string(); break;
    case Type::reals:
      ok = v.is_array() && std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_number(); });
      break;
    case Type::integers:
      ok = v.is_array() && std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_number_integer(); });
      break;
    case Type::object: ok = true; break;
  }
  if (!ok) throw InvalidArgument("config key '" + p.name + "' has the wrong type");
}

const Param kGridT{"grid-T", Type::real, 16.0, "grid half-width in t = log|z|^2"};
const Param kGridN{"grid-N", Type::integer, 2049, "number of grid nodes (odd)"};

json grid_json(const Context& c) { return {{"T", c.real("grid-T")}, {"N", c.integer("grid-N")}}; }

// ---------------------------------------------------------------------------------------

void write_solution(Context& c, const std::string& stem, const RadialKahlerPotential& pot, const Profile& phi) {
  c.csv(stem + ".csv", io::potential_table(pot));
  io::CsvTable t{{"t", "phi"}, {}};
  for (int i = 0; i < pot.grid().size(); ++i) t.add_row({pot.grid().node(i), phi[i]});
  c.csv(stem + "_phi.csv", t);
}

NewtonOptions newton_options(const Context& c) {
  NewtonOptions o;
  o.max_iterations = c.integer("max-iterations");
  o.tolerance = c.real("tolerance");
  return o;
}

void cmd_solve(Context& c) {
  SolverConfig cfg;
  cfg.cone = ConeConfiguration::anticanonical_pair(c.real("beta"));
  cfg.delta = c.real("delta");
  cfg.tau = c.has("tau") ? c.real("tau") : cfg.cone.mu();
  cfg.newton = newton_options(c);
  cfg.validate();
  const Grid grid = c.grid();
  const auto res = solve_ma_detailed(cfg, fubini_study_potential(grid));
  write_solution(c, "solution", res.solution, res.phi);
  c.results = {{"mu", cfg.cone.mu()}, {"tau", cfg.tau}, {"newton_iterations", res.iterations},
               {"residual", res.residual}, {"sup_abs_phi", numerics::sup_abs(res.phi)}};
  *c.out << "converged in " << res.iterations << " iterations, residual " << fmt(res.residual) << '\n';
}

void cmd_continue_path(Context& c) {
  const auto cone = ConeConfiguration::anticanonical_pair(c.real("beta"));
  ContinuationSchedule s;
  s.initial_step = c.real("initial-step");
  s.max_step = c.real("max-step");
  s.min_step = c.real("min-step");
  s.max_steps = c.integer("max-steps");
  s.modes = c.integers("modes");
  const auto trace = continuity_path(cone, c.real("delta"), s, c.grid());
  io::CsvTable t{{"tau", "J", "F", "lambda1", "newton_iters", "residual"}, {}};
  for (const auto& st : trace.steps)
    t.add_row({fmt(st.tau), fmt(st.J), fmt(st.F), fmt(st.lambda1), std::to_string(st.newton_iterations), fmt(st.residual)});
  c.csv("trace.csv", t);
  if (c.flag("write-steps"))
    for (std::size_t k = 0; k < trace.steps.size(); ++k)
      write_solution(c, "step_" + padded(static_cast<int>(k), 4), trace.steps[k].solution, trace.steps[k].phi);
  c.results = {{"steps", trace.steps.size()}, {"completed", trace.completed}, {"sup_abs_phi", trace.sup_abs_phi},
               {"max_F", trace.max_F}};
  // the finite-difference checks need a few steps; short traces skip them
  if (trace.steps.size() >= 5) {
    const auto pr = path_derivative_residual(trace);
    io::CsvTable r{{"tau", "on_path", "fd_relative", "orthogonality", "derivative_formula"}, {}};
    for (std::size_t k = 0; k < pr.tau.size(); ++k)
      r.add_row({pr.tau[k], pr.on_path[k], pr.fd_relative[k], pr.orthogonality[k], pr.derivative_formula[k]});
    c.csv("path_residuals.csv", r);
    c.results["max_on_path"] = pr.max_on_path;
    c.results["max_fd_relative"] = pr.max_fd_relative;
  }
  *c.out << "path reached tau = " << fmt(trace.steps.back().tau) << " in " << trace.steps.size() << " steps\n";
}

void cmd_smooth_family(Context& c) {
  const auto cone = ConeConfiguration::anticanonical_pair(c.real("beta"));
  const Grid grid = c.grid();
  const auto deltas = c.reals("deltas");
  const auto rep = smoothing_family(cone, deltas, grid, c.jobs);
  const auto bounds = two_sided_bound_check(rep, cone);
  io::CsvTable fam{{"delta", "sup_distance", "core_distance", "newton_iters", "min_ricci_margin", "C", "C_prime"}, {}};
  io::CsvTable fun{{"tag", "tau", "beta", "delta", "J", "F", "linear", "logterm"}, {}};
  auto functional_row = [&](const std::string& tag, double delta, const Profile& phi) {
    const auto w = make_reference_weight(cone.beta(), delta, grid);
    const auto f = f_functional(phi, cone.mu(), w, grid);
    fun.add_row({tag, fmt(f.tau), fmt(f.beta), fmt(f.delta), fmt(f.J), fmt(f.F), fmt(f.linear), fmt(f.log_term)});
  };
  write_solution(c, "conic", rep.conic, rep.conic_phi);
  functional_row("conic", 0.0, rep.conic_phi);
  for (std::size_t k = 0; k < rep.members.size(); ++k) {
    const auto& m = rep.members[k];
    SolverConfig sc;
    sc.cone = cone;
    sc.delta = m.delta;
    sc.tau = cone.mu();
    const auto margin = ricci_lower_bound_margin(m.solution, sc);
    fam.add_row({fmt(m.delta), fmt(m.sup_distance), fmt(m.core_distance), std::to_string(m.newton_iterations),
                 fmt(margin.min_margin), fmt(bounds.C_by_delta[k]), fmt(bounds.C_prime_by_delta[k])});
    const std::string stem = "member_" + padded(static_cast<int>(k), 3);
    write_solution(c, stem, m.solution, m.phi);
    functional_row(stem, m.delta, m.phi);
  }
  c.csv("family.csv", fam);
  c.csv("functionals.csv", fun);
  c.results = {{"sup_monotone", rep.sup_monotone}, {"core_monotone", rep.core_monotone},
               {"core_below_sup", rep.core_below_sup}, {"C", bounds.C}, {"C_prime", bounds.C_prime}};
  *c.out << rep.members.size() << " family members, sup distance monotone: " << (rep.sup_monotone ? "yes" : "no") << '\n';
}

void cmd_bergman_scan(Context& c) {
  const auto betas = c.reals("betas");
  const auto ells = c.integers("ells");
  if (betas.empty() || ells.empty()) throw InvalidArgument("betas and ells must be nonempty");
  const Grid grid = c.grid();
  const auto rows = partial_c0_scan(betas, ells, grid, c.jobs);
  io::CsvTable t{{"beta", "ell", "inf_rho", "sup_rho", "trace_check"}, {}};
  for (const auto& r : rows)
    t.add_row({fmt(r.beta), std::to_string(r.ell), fmt(r.inf_rho), fmt(r.sup_rho), fmt(r.trace_check)});
  c.csv("scan.csv", t);
  if (c.flag("profiles")) {
    for (std::size_t b = 0; b < betas.size(); ++b) {
      const auto pot = football_potential(grid, betas[b]);
      const auto w = associated_hermitian_weight(pot, ConeConfiguration::anticanonical_pair(betas[b]));
      for (int ell : ells) {
        const auto d = bergman_density(ell, gram_matrix(ell, w, pot), w, pot);
        io::CsvTable p{{"t", "rho"}, {}};
        for (int i = 0; i < grid.size(); ++i) p.add_row({grid.node(i), d.rho[i]});
        c.csv("density_b" + padded(static_cast<int>(b), 2) + "_l" + padded(ell, 3) + ".csv", p);
      }
    }
  }
  double worst = INFINITY;
  for (const auto& r : rows) worst = std::min(worst, r.inf_rho * kVolume / (2 * r.ell + 1));
  c.results = {{"rows", rows.size()}, {"min_normalized_inf_rho", worst}};
  *c.out << rows.size() << " cells, min inf rho / ((2 ell + 1)/V) = " << fmt(worst) << '\n';
}

RadialKahlerPotential metric_from(const Context& c) {
  if (c.has("metric")) {
    std::optional<double> bz, bi;
    if (c.has("beta-zero")) bz = c.real("beta-zero");
    if (c.has("beta-infinity")) bi = c.real("beta-infinity");
    return io::read_potential_csv(c.text("metric"), bz, bi);
  }
  const std::string family = c.text("family");
  if (family == "fs") return fubini_study_potential(c.grid());
  if (family == "football") return football_potential(c.grid(), c.real("metric-beta"));
  throw InvalidArgument("unknown metric family '" + family + "' (fs or football)");
}

void cmd_futaki(Context& c) {
  const auto pot = metric_from(c);
  const auto rep = futaki(pot);
  const auto ham = hamiltonian_theta(pot);
  c.csv("futaki.csv", io::CsvTable{{"via_ricci_potential", "via_curvature", "discrepancy"},
                                   {{fmt(rep.via_ricci_potential), fmt(rep.via_curvature), fmt(rep.discrepancy)}}});
  io::CsvTable th{{"t", "theta"}, {}};
  for (int i = 0; i < pot.grid().size(); ++i) th.add_row({pot.grid().node(i), ham.theta[i]});
  c.csv("theta.csv", th);
  const double value = rep.smooth ? rep.via_ricci_potential : rep.via_curvature;
  c.results = {{"futaki", value}, {"smooth", rep.smooth}, {"theta_mean_residual", ham.mean_residual},
               {"angle_at_zero", pot.angle_at_zero()}, {"angle_at_infinity", pot.angle_at_infinity()}};
  *c.out << "futaki invariant " << fmt(value) << '\n';
}

std::vector<ObstructionConfig> obstruction_configs(const json& j) {
  if (!j.is_array() || j.empty()) throw InvalidArgument("configs must be a nonempty array");
  std::vector<ObstructionConfig> out;
  for (const auto& e : j) {
    ObstructionConfig cfg;
    cfg.id = e.at("id").get<std::string>();
    for (const auto& p : e.at("points")) {
      const std::string kind = p.at("kind").get<std::string>();
      const double w = p.value("weight", 1.0);
      if (kind == "zero") cfg.points.push_back(ConePoint::pole(Pole::zero, w));
      else if (kind == "infinity") cfg.points.push_back(ConePoint::pole(Pole::infinity, w));
      else if (kind == "interior") cfg.points.push_back(ConePoint::at(p.at("t").get<double>(), w));
      else throw InvalidArgument("unknown point kind '" + kind + "'");
    }
    out.push_back(std::move(cfg));
  }
  return out;
}

void cmd_log_futaki(Context& c) {
  const auto pot = metric_from(c);
  std::vector<ObstructionConfig> configs;
  try {
    configs = obstruction_configs(c.config.at("configs"));
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("configs: ") + e.what());
  }
  const auto betas = c.reals("betas");
  const auto rows = obstruction_scan(configs, betas, pot, c.flag("solve"), c.jobs);
  io::CsvTable t{{"config_id", "beta", "log_futaki", "flag"}, {}};
  io::CsvTable s{{"config_id", "beta", "solver_check"}, {}};
  int obstructed = 0;
  for (const auto& r : rows) {
    t.add_row({r.config_id, fmt(r.beta), fmt(r.log_futaki), r.obstructed ? "obstructed" : "unobstructed"});
    s.add_row({r.config_id, fmt(r.beta), r.solver_check});
    obstructed += r.obstructed;
  }
  c.csv("obstruction.csv", t);
  c.csv("solver_check.csv", s);
  c.results = {{"rows", rows.size()}, {"obstructed", obstructed}, {"threshold", kObstructionThreshold}};
  *c.out << obstructed << " of " << rows.size() << " cells obstructed\n";
}

void cmd_capacity(Context& c) {
  const int n = c.integer("n");
  const double eps = c.real("eps");
  const auto model = flat_cone_metric(n, c.real("beta-bar"));
  const std::string rule = c.text("rule");
  double big_l;
  if (c.has("delta")) {
    const double d = c.real("delta");
    if (!(d > 0.0 && d < 1.0 / 3.0)) throw InvalidArgument("delta must lie in (0, 1/3)");
    big_l = -std::log(d);
  } else if (rule == "auto" || rule == "literal") {
    big_l = select_log_inv_delta(n, eps, model.beta_bar(), rule == "auto" ? DeltaRule::automatic : DeltaRule::literal);
  } else {
    throw InvalidArgument("rule must be auto or literal");
  }
  const LogLogCutoff cut(eps, big_l);
  const auto rep = dirichlet_energy(cut, model, c.has("radius") ? c.real("radius") : 0.0);
  io::CsvTable e{{"n", "eps", "beta_bar", "log_inv_delta", "energy", "coarea", "literal_bound", "corrected_bound", "below_eps"}, {}};
  e.add_row({std::to_string(n), fmt(eps), fmt(model.beta_bar()), fmt(big_l), fmt(rep.energy), fmt(rep.coarea),
             fmt(rep.literal_bound), fmt(rep.corrected_bound), rep.below_eps ? "1" : "0"});
  c.csv("capacity.csv", e);
  // cutoff profile in r where representable, and in s = log(-log(r/eps)) throughout
  io::CsvTable pr{{"r", "value"}, {}}, ps{{"s", "value"}, {}};
  const double s0 = cut.window_lo() - 1.0, s1 = cut.window_hi() + 1.0;
  for (int k = 0; k <= 200; ++k) {
    const double s = s0 + (s1 - s0) * k / 200.0;
    const double log_r = std::log(eps) - std::exp(s);
    ps.add_row({s, cut.value_at_log(log_r)});
    if (log_r > -700.0) pr.add_row({std::exp(log_r), cut.value_at_log(log_r)});
  }
  c.csv("cutoff_profile.csv", pr);
  c.csv("cutoff_loglog.csv", ps);
  c.results = {{"log_inv_delta", big_l}, {"energy", rep.energy}, {"coarea_relative_diff", rep.coarea_relative_diff},
               {"below_eps", rep.below_eps}, {"within_literal_bound", rep.within_literal},
               {"within_corrected_bound", rep.within_corrected}};
  if (c.flag("cover")) {
    CodimFourSubspace sub;
    const auto cover = ball_cover_cutoff(model, sub, c.real("eps0"), c.real("region-radius"),
                                         static_cast<std::uint64_t>(c.integer("seed")), c.integer("samples"));
    json cj = {{"centers", cover.centers}, {"radii", cover.radii}, {"radius_sum", cover.radius_sum},
               {"max_overlap", cover.max_overlap}, {"min_center_gap", cover.min_center_gap},
               {"energy", cover.energy}, {"standard_error", cover.standard_error}, {"bound", cover.bound},
               {"constant", cover.constant}, {"seed", cover.seed}, {"samples", cover.samples}};
    if (!std::isfinite(cover.min_center_gap)) cj["min_center_gap"] = nullptr;
    io::write_json(c.path("cover.json"), cj);
    c.results["cover_energy"] = cover.energy;
    c.results["cover_constant"] = cover.constant;
  }
  *c.out << "energy " << fmt(rep.energy) << (rep.below_eps ? " <= " : " > ") << "eps " << fmt(eps) << '\n';
}

void cmd_volume_scan(Context& c) {
  const std::string family = c.text("family");
  const auto radii = c.reals("radii");
  VolumeRatioReport rep;
  if (family == "flat") {
    const auto model = flat_cone_metric(c.integer("n"), c.real("beta"));
    ConeCoordinates center;
    center.z.assign(2 * model.n() - 2, 0.0);
    center.rho = c.real("rho0");
    rep = volume_ratio_profile(model, center, radii);
    const auto tube = tube_volume(model, c.real("tube-inner"), c.real("tube-outer"), radii);
    io::CsvTable tt{{"r", "value"}, {}};
    for (std::size_t k = 0; k < tube.r.size(); ++k) tt.add_row({tube.r[k], tube.volume[k]});
    c.csv("tube.csv", tt);
    c.results["tube_exponent"] = tube.exponent;
    c.results["tube_constant"] = tube.constant;
  } else {
    const Grid grid = c.grid();
    const auto pot = family == "fs" ? fubini_study_potential(grid)
                     : family == "football" ? football_potential(grid, c.real("beta"))
                                            : throw InvalidArgument("family must be flat, fs or football");
    const std::string pole = c.text("pole");
    if (pole != "zero" && pole != "infinity") throw InvalidArgument("pole must be zero or infinity");
    rep = volume_ratio_profile(pot, pole == "zero" ? Pole::zero : Pole::infinity, radii);
  }
  io::CsvTable t{{"r", "value"}, {}};
  for (std::size_t k = 0; k < rep.r.size(); ++k) t.add_row({rep.r[k], rep.ratio[k]});
  c.csv("volume_ratio.csv", t);
  c.results["monotone"] = rep.monotone;
  c.results["max_increase"] = rep.max_increase;
  c.results["limit"] = rep.limit;
  c.results["beta_estimate"] = rep.beta_estimate;
  *c.out << "density limit " << fmt(rep.limit) << ", monotone: " << (rep.monotone ? "yes" : "no") << '\n';
}

json default_obstruction_configs() {
  return json::array({
      {{"id", "pair"}, {"points", json::array({{{"kind", "zero"}, {"weight", 1.0}}, {{"kind", "infinity"}, {"weight", 1.0}}})}},
      {{"id", "teardrop"}, {"points", json::array({{{"kind", "zero"}, {"weight", 1.0}}})}},
  });
}

std::vector<Command> commands() {
  const Param newton_iters{"max-iterations", Type::integer, 50, "Newton iteration cap"};
  const Param newton_tol{"tolerance", Type::real, 1e-11, "Newton residual tolerance"};
  const std::vector<Param> metric{
      {"metric", Type::text, nullptr, "metric CSV with columns t,phi_prime,phi_doubleprime"},
      {"beta-zero", Type::real, nullptr, "cone fraction at z = 0 for --metric (default: fitted)"},
      {"beta-infinity", Type::real, nullptr, "cone fraction at z = infinity for --metric (default: fitted)"},
      {"family", Type::text, "fs", "built-in metric when --metric is absent: fs or football"},
      {"metric-beta", Type::real, 1.0, "cone fraction of the built-in football"},
      kGridT, kGridN};
  auto with = [](std::vector<Param> a, const std::vector<Param>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };
  return {
      {"solve", "solve the radial Monge-Ampere equation at one (beta, delta, tau)",
       {{"beta", Type::real, 1.0, "cone fraction in (0, 1]"},
        {"delta", Type::real, 0.0, "smoothing parameter (0 = conic)"},
        {"tau", Type::real, nullptr, "continuity parameter in [0, mu] (default mu)"},
        kGridT, kGridN, newton_iters, newton_tol},
       cmd_solve},
      {"continue-path", "continuity path from tau = 0 to tau = mu",
       {{"beta", Type::real, 1.0, "cone fraction in (0, 1]"},
        {"delta", Type::real, 0.0, "smoothing parameter"},
        {"initial-step", Type::real, 0.0, "first step (0 = mu/20)"},
        {"max-step", Type::real, 0.0, "largest step (0 = unbounded)"},
        {"min-step", Type::real, 1e-5, "smallest step before giving up"},
        {"max-steps", Type::integer, 400, "step budget"},
        {"modes", Type::integers, json::array({0, 1, 2}), "angular modes for the first eigenvalue"},
        {"write-steps", Type::boolean, true, "write the solution at every step"},
        kGridT, kGridN},
       cmd_continue_path},
      {"smooth-family", "smoothed solutions at tau = mu approaching the conic one",
       {{"beta", Type::real, 0.75, "cone fraction in (0, 1)"},
        {"deltas", Type::reals, json::array({1e-1, 1e-2, 1e-3, 1e-4, 1e-5}), "smoothing parameters"},
        kGridT, kGridN},
       cmd_smooth_family},
      {"bergman-scan", "inf of the Bergman density over (beta, ell)",
       {{"betas", Type::reals, json::array({0.5, 0.6, 0.7, 0.8, 0.9, 1.0}), "cone fractions"},
        {"ells", Type::integers, json::array({1, 2, 4, 8, 16}), "powers of the anticanonical bundle"},
        {"profiles", Type::boolean, false, "also write every density profile"},
        kGridT, kGridN},
       cmd_bergman_scan},
      {"futaki", "Futaki invariant of the rotation field", metric, cmd_futaki},
      {"log-futaki", "log-Futaki invariant over divisor configurations and angles",
       with({{"betas", Type::reals, json::array({0.25, 0.5, 0.75, 1.0}), "cone angles"},
             {"configs", Type::object, default_obstruction_configs(),
              "JSON array of {id, points: [{kind: zero|infinity|interior, t, weight}]}"},
             {"solve", Type::boolean, true, "cross-check unobstructed pole pairs with the solver"}},
            metric),
       cmd_log_futaki},
      {"capacity", "Dirichlet energy of the log-log cutoff on a flat cone",
       {{"n", Type::integer, 1, "complex dimension"},
        {"eps", Type::real, 0.1, "scale eps_bar"},
        {"beta-bar", Type::real, 1.0, "cone fraction of the model"},
        {"rule", Type::text, "auto", "delta rule: auto or literal"},
        {"delta", Type::real, nullptr, "explicit delta, overriding the rule"},
        {"radius", Type::real, nullptr, "ball radius (default 1/eps)"},
        {"cover", Type::boolean, false, "also build the ball-cover cutoff (n >= 2)"},
        {"eps0", Type::real, 0.1, "cover scale: balls have radius eps0/2"},
        {"region-radius", Type::real, 1.0, "radius of the covered region"},
        {"seed", Type::integer, 20240601, "Monte-Carlo seed"},
        {"samples", Type::integer, 200000, "Monte-Carlo samples"}},
       cmd_capacity},
      {"volume-scan", "volume ratios of small balls",
       {{"family", Type::text, "football", "flat, fs or football"},
        {"beta", Type::real, 0.6, "cone fraction"},
        {"n", Type::integer, 1, "complex dimension (flat only)"},
        {"rho0", Type::real, 0.0, "distance of the center from the singular set (flat only)"},
        {"pole", Type::text, "zero", "pole for fs/football: zero or infinity"},
        {"radii", Type::reals, json::array({0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0}), "increasing radii"},
        {"tube-inner", Type::real, 0.5, "inner radius of the compact set K (flat only)"},
        {"tube-outer", Type::real, 1.0, "outer radius of K"},
        kGridT, kGridN},
       cmd_volume_scan},
  };
}

const char* kExitCodes =
    "Exit codes: 0 success, 1 invalid input, 2 Newton diverged, 3 positivity lost,\n"
    "4 continuation stalled, 5 fit failed, 6 cover infeasible, 7 outside the valid domain.\n"
    "Every flag can also be given as a key of the JSON file passed to --config\n"
    "(a manifest written by an earlier run is accepted too); flags override the file.";

int jobs_default() {
  if (const char* env = std::getenv("CONIC_KE_JOBS")) {
    try {
      return std::max(1, std::stoi(env));
    } catch (const std::exception&) {
      throw InvalidArgument("CONIC_KE_JOBS must be a positive integer");
    }
  }
  return 1;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical experiments with conic Kahler-Einstein metrics on the sphere", "conic-ke"};
  app.footer(kExitCodes);
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  const auto cmds = commands();
  struct Bound {
    CLI::App* sub;
    std::map<std::string, std::string> raw;
    std::map<std::string, CLI::Option*> opts;
    std::string config_file, out_dir = ".";
    int jobs = 0;
  };
  std::vector<Bound> bound(cmds.size());
  for (std::size_t i = 0; i < cmds.size(); ++i) {
    auto& b = bound[i];
    b.sub = app.add_subcommand(cmds[i].name, cmds[i].description);
    b.sub->footer(kExitCodes);
    for (const auto& p : cmds[i].params) {
      std::string help = p.help;
      if (!p.def.is_null() && p.type != Type::object) help += " [" + p.def.dump() + "]";
      if (p.type == Type::object) help += " [built-in]";
      b.opts[p.name] = b.sub->add_option("--" + p.name, b.raw[p.name], help);
    }
    b.sub->add_option("--config", b.config_file, "JSON configuration file");
    b.sub->add_option("--out", b.out_dir, "output directory [.]");
    b.sub->add_option("--jobs", b.jobs, "worker threads [CONIC_KE_JOBS or 1]");
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      std::ostringstream o, ignored;
      app.exit(e, o, ignored);
      out << o.str();
      return 0;
    }
    err << "conic-ke: error: " << e.what() << '\n';
    return 1;
  }

  std::size_t which = 0;
  while (!bound[which].sub->parsed()) ++which;
  const auto& cmd = cmds[which];
  auto& b = bound[which];
  try {
    Context ctx;
    ctx.out = &out;
    ctx.jobs = b.jobs > 0 ? b.jobs : jobs_default();
    json cfg = json::object();
    for (const auto& p : cmd.params) cfg[p.name] = p.def;
    if (!b.config_file.empty()) {
      json file = io::read_json(b.config_file);
      if (file.contains("command") && file.contains("config")) {
        if (file["command"] != cmd.name) throw InvalidArgument("manifest belongs to command " + file["command"].dump());
        file = file["config"];
      }
      if (!file.is_object()) throw InvalidArgument("config file must hold a JSON object");
      for (auto it = file.begin(); it != file.end(); ++it) {
        auto p = std::find_if(cmd.params.begin(), cmd.params.end(), [&](const Param& q) { return q.name == it.key(); });
        if (p == cmd.params.end()) throw InvalidArgument("unknown config key '" + it.key() + "'");
        check_type(*p, it.value());
        cfg[it.key()] = it.value();
      }
    }
    for (const auto& p : cmd.params)
      if (b.opts[p.name]->count() > 0) cfg[p.name] = parse_flag(p, b.raw[p.name]);
    ctx.config = cfg;
    ctx.out_dir = b.out_dir;
    std::error_code ec;
    fs::create_directories(ctx.out_dir, ec);
    if (ec) throw InvalidArgument("cannot create output directory " + b.out_dir);

    const auto start = std::chrono::steady_clock::now();
    cmd.run(ctx);
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;

    json manifest = {{"command", cmd.name}, {"config", cfg}, {"version", kVersion}, {"outputs", ctx.outputs},
                     {"results", ctx.results}, {"wall_clock_seconds", elapsed.count()}};
    if (cfg.contains("grid-T")) manifest["grid"] = grid_json(ctx);
    if (cfg.contains("seed")) manifest["seed"] = cfg["seed"];
    io::write_json((ctx.out_dir / "manifest.json").string(), manifest);
    return 0;
  } catch (const Error& e) {
    err << "conic-ke: error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const json::exception& e) {
    err << "conic-ke: error: invalid configuration: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "conic-ke: error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace conic_ke::cli
