// sglab: simulate | oracle | verify-assumptions | analyze
// Exit codes: 0 pass, 2 verdict fail, 1 error.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sglab/coefficients.hpp"
#include "sglab/experiment.hpp"
#include "sglab/noise_model.hpp"
#include "sglab/regularity.hpp"
#include "sglab/simulator.hpp"
#include "sglab/sobolev_norms.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace sglab;

namespace {

struct Options {
  std::string config;
  std::vector<std::string> bundles;
  std::string out = "out";
  int workers = 1;
  int traj = 0;
  bool stationary = false;
};

std::vector<double> merged_r(const ExperimentConfig& c) {
  std::vector<double> r = c.analysis.r_list;
  r.insert(r.end(), c.analysis.gamma_grid.begin(), c.analysis.gamma_grid.end());
  std::sort(r.begin(), r.end());
  r.erase(std::unique(r.begin(), r.end()), r.end());
  return r;
}

std::vector<int> truncations(const ExperimentConfig& c) {
  return c.analysis.N_list.empty() ? std::vector<int>{c.run.N} : c.analysis.N_list;
}

void finish_bundle(const Options& o, const ExperimentConfig& c, const std::string& command,
                   std::chrono::steady_clock::time_point start) {
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_text((fs::path(o.out) / "manifest.json").string(), manifest_json(c, command, wall, o.workers).dump(2) + "\n");
}

int cmd_simulate(const Options& o) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentConfig c = load_config(o.config);
  if (o.traj > 0) c.run.n_traj = o.traj;
  fs::create_directories(o.out);
  EnsembleRequest req;
  req.r_list = merged_r(c);
  if (!c.analysis.h_list.empty()) {
    req.increment_base = c.analysis.t_base;
    req.h_list = c.analysis.h_list;
  }
  MomentTable moments;
  IncrementTable increments;
  int diverged = 0;
  for (int N : truncations(c)) {
    SimulationConfig sim = c.simulation(N);
    if (req.increment_base >= 0.0) {
      const double need = req.increment_base + *std::max_element(req.h_list.begin(), req.h_list.end());
      if (need > sim.T + 1e-12) throw std::invalid_argument("increment times exceed T");
    }
    const auto res = run_ensemble(sim, req, o.workers);
    moments.insert(moments.end(), res.moments.begin(), res.moments.end());
    increments.insert(increments.end(), res.increments.begin(), res.increments.end());
    diverged += res.diverged;
  }
  write_text((fs::path(o.out) / "moments.csv").string(), moments_csv(c.name, moments, c.run.seed));
  if (!increments.empty())
    write_text((fs::path(o.out) / "increments.csv").string(), increments_csv(c.name, increments, c.run.seed));
  finish_bundle(o, c, "simulate", start);
  std::cout << "wrote " << moments.size() << " moment rows to " << o.out << "\n";
  if (diverged > 0) {
    std::cerr << diverged << " trajectories diverged\n";
    return 2;
  }
  return 0;
}

int cmd_oracle(const Options& o) {
  const auto start = std::chrono::steady_clock::now();
  const ExperimentConfig c = load_config(o.config);
  const NemytskiiPair pair = c.pair();
  OracleKind kind;
  try {
    kind = oracle_kind_for(pair, c.noise);
  } catch (const std::invalid_argument& e) {
    std::cerr << "oracle refused: " << e.what() << "\n";
    return 1;
  }
  fs::create_directories(o.out);
  std::vector<double> times = c.run.checkpoints;
  if (o.stationary) times = {std::numeric_limits<double>::infinity()};
  std::string csv = std::string(kMomentHeader) + ",tail,divergent,growth_rate\n";
  struct Row {
    double t, r;
    int N, J;
    OracleValue v;
  };
  std::vector<Row> rows;
  for (int N : truncations(c)) {
    CovarianceSpectrum spec = c.noise;
    if (c.J_tracks_N) spec.n_noise = oracle_noise_modes(kind, N);
    const auto rs = merged_r(c);
    for (double t : times) {
      const auto vals = ou_oracle_moments(spec, c.op, rs, t, kind, N);
      for (std::size_t k = 0; k < rs.size(); ++k) rows.push_back({t, rs[k], N, spec.n_noise, vals[k]});
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.t != b.t) return a.t < b.t;
    return a.r < b.r;
  });
  for (const auto& row : rows)
    csv += c.name + "," + csv_number(row.t) + "," + csv_number(row.r) + ",2," + csv_number(row.v.value) + ",0,0," +
           std::to_string(row.N) + "," + std::to_string(row.J) + ",0," + std::to_string(c.run.seed) + "," +
           csv_number(row.v.tail) + "," + (row.v.divergent ? "1" : "0") + "," + csv_number(row.v.growth_rate) + "\n";
  write_text((fs::path(o.out) / "moments.csv").string(), csv);

  if (!c.analysis.h_list.empty()) {
    std::string inc = std::string(kIncrementHeader) + ",tail,divergent,growth_rate\n";
    const int N = truncations(c).back();
    CovarianceSpectrum spec = c.noise;
    if (c.J_tracks_N) spec.n_noise = oracle_noise_modes(kind, N);
    std::vector<double> hs = c.analysis.h_list;
    std::sort(hs.begin(), hs.end());
    std::vector<std::vector<OracleValue>> by_r;
    for (double r : c.analysis.r_list) by_r.push_back(ou_oracle_time_increments(spec, c.op, r, c.analysis.t_base, hs, kind, N));
    for (std::size_t i = 0; i < hs.size(); ++i)
      for (std::size_t ri = 0; ri < c.analysis.r_list.size(); ++ri) {
        const double h = hs[i], r = c.analysis.r_list[ri];
        const auto& v = by_r[ri][i];
        inc += c.name + "," + csv_number(c.analysis.t_base) + "," + csv_number(h) + "," + csv_number(r) + ",2," +
               csv_number(v.value) + ",0,0," + std::to_string(N) + "," + std::to_string(spec.n_noise) + ",0," +
               std::to_string(c.run.seed) + "," + csv_number(v.tail) + "," + (v.divergent ? "1" : "0") + "," +
               csv_number(v.growth_rate) + "\n";
      }
    write_text((fs::path(o.out) / "increments.csv").string(), inc);
  }
  finish_bundle(o, c, "oracle", start);
  std::cout << "wrote " << rows.size() << " oracle rows to " << o.out << "\n";
  return 0;
}

int cmd_verify(const Options& o) {
  const auto start = std::chrono::steady_clock::now();
  const ExperimentConfig c = load_config(o.config);
  const NemytskiiPair pair = c.pair();
  json report;
  report["name"] = c.name;
  bool all = true;

  const auto tr = trace(c.noise);
  report["trace_class"] = {{"truncated", tr.truncated}, {"tail_bound", tr.tail_bound}, {"pass", tr.trace_class}};
  all = all && tr.trace_class;

  json eig = json::array();
  const double dsup = eigenfunction_delta_supremum(c.noise);
  bool eig_ok = false;
  for (double delta : {0.25, 0.5, 0.75, 1.0}) {
    const auto rep = eigenfunction_condition_check(c.noise, delta);
    eig.push_back({{"delta", delta}, {"sup_norm", rep.sup_norm}, {"sum", rep.sum_truncated}, {"tail", rep.tail_bound},
                   {"pass", rep.pass}});
    eig_ok = eig_ok || rep.pass;
  }
  report["eigenfunction_condition"] = {{"delta_supremum", dsup}, {"checks", eig}, {"pass", eig_ok}};
  all = all && eig_ok;

  const auto compat = boundary_compat_check(pair, c.op.d);
  report["boundary_compatibility"] = {{"applicable", compat.applicable}, {"lower_limit", compat.lower_limit},
                                      {"upper_limit", compat.upper_limit}, {"pass", compat.pass}};

  const auto lip = lipschitz_spot_check(pair, c.op.d, 2000, c.run.seed);
  report["lipschitz"] = {{"max_ratio", lip.max_ratio}, {"b0_l2_sq", lip.b0_l2_sq}, {"q", pair.q}, {"pass", lip.pass}};
  all = all && lip.pass;

  if (tr.trace_class && c.noise.kind != NoiseKind::custom) {
    const std::vector<int> n_list = c.analysis.N_list.empty() ? std::vector<int>{64, 128, 256, 512} : c.analysis.N_list;
    const std::vector<double> alphas =
        c.analysis.alpha_list.empty() ? std::vector<double>{0.0, 0.15, 0.35} : c.analysis.alpha_list;
    json growth = json::array();
    for (double a : alphas) {
      const auto g = growth_bound_check(pair, c.noise, c.op, a, 8, n_list, c.run.seed);
      const bool certified = a < g.certified_limit;
      const bool stable = std::abs(g.slope) <= c.analysis.slope_tol;
      json levels = json::array();
      for (const auto& l : g.levels) levels.push_back({{"N", l.n_modes}, {"max_ratio", l.max_ratio}});
      growth.push_back({{"alpha", a}, {"slope", g.slope}, {"slope_ls", g.slope_ls}, {"levels", levels},
                        {"certified_limit", g.certified_limit},
                        {"reference_constant", std::isfinite(g.reference_constant) ? json(g.reference_constant) : json(nullptr)},
                        {"holds", stable && (!certified || g.within_reference)},
                        {"in_certified_range", certified}});
      if (certified && !stable) all = false;
    }
    report["growth_bound"] = growth;
  }

  json semigroup = json::array();
  std::vector<double> grid;
  for (int k = -40; k <= 40; ++k) grid.push_back(std::pow(10.0, k / 5.0));
  for (double r : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const auto rep = semigroup_bound_check(r, grid, grid);
    semigroup.push_back({{"r", r}, {"max_smoothing", rep.max_smoothing}, {"reference", rep.reference},
                         {"max_increment", rep.max_increment}, {"pass", rep.pass}});
    all = all && rep.pass;
  }
  report["semigroup_bounds"] = semigroup;

  if (c.op.d == 1) {
    json equiv = json::array();
    for (double r : {0.1, 0.2, 0.3, 0.4}) {
      const double a = equivalence_constant_estimate(r, 30, 128).c_hat;
      const double b = equivalence_constant_estimate(r, 30, 256).c_hat;
      const bool ok = std::abs(b - a) / a < 0.1;
      equiv.push_back({{"r", r}, {"c_hat_M128", a}, {"c_hat_M256", b}, {"pass", ok}});
      all = all && ok;
    }
    report["norm_equivalence"] = equiv;
  }
  report["pass"] = all;

  fs::create_directories(o.out);
  write_text((fs::path(o.out) / "assumptions.json").string(), report.dump(2) + "\n");
  finish_bundle(o, c, "verify-assumptions", start);
  std::cout << report.dump(2) << "\n";
  return all ? 0 : 2;
}

int cmd_analyze(const Options& o) {
  if (o.bundles.empty()) throw std::invalid_argument("analyze: no bundles given");
  std::optional<ExperimentConfig> cfg;
  std::string command;
  // gamma -> N -> point
  std::map<double, std::map<int, ScanPoint>> scan;
  std::map<double, std::vector<IncrementPoint>> inc;
  double inc_dt = 0.0, inc_p = 2.0;
  for (const auto& dir : o.bundles) {
    std::ifstream mf(fs::path(dir) / "manifest.json");
    if (!mf) throw std::runtime_error("bundle '" + dir + "' has no manifest.json");
    const auto manifest = nlohmann::json::parse(mf);
    const ExperimentConfig c = parse_config(manifest.at("config").get<std::string>());
    if (cfg && (c.name != cfg->name || !(c.noise == cfg->noise) || c.coefficients != cfg->coefficients))
      throw std::invalid_argument("analyze: bundles describe different presets");
    if (!cfg) {
      cfg = c;
      command = manifest.at("command").get<std::string>();
    }
    const auto table = read_csv((fs::path(dir) / "moments.csv").string());
    double t_max = -1.0;
    for (std::size_t k = 0; k < table.rows.size(); ++k) t_max = std::max(t_max, table.num(k, "t"));
    std::set<double> grid(c.analysis.gamma_grid.begin(), c.analysis.gamma_grid.end());
    for (std::size_t k = 0; k < table.rows.size(); ++k) {
      if (table.num(k, "t") != t_max || table.num(k, "p") != 2.0) continue;
      const double r = table.num(k, "r");
      if (!grid.count(r)) continue;
      const int N = static_cast<int>(table.num(k, "N"));
      scan[r][N] = {N, table.num(k, "estimate"), table.num(k, "std_error")};
    }
    const auto inc_path = fs::path(dir) / "increments.csv";
    if (fs::exists(inc_path)) {
      const auto it = read_csv(inc_path.string());
      int n_max = 0;
      for (std::size_t k = 0; k < it.rows.size(); ++k) n_max = std::max(n_max, static_cast<int>(it.num(k, "N")));
      for (std::size_t k = 0; k < it.rows.size(); ++k) {
        if (static_cast<int>(it.num(k, "N")) != n_max) continue;
        inc[it.num(k, "r")].push_back({it.num(k, "h"), it.num(k, "estimate"), it.num(k, "std_error")});
        inc_dt = it.num(k, "dt");
        inc_p = it.num(k, "p");
      }
    }
  }
  const double predicted = predicted_gamma_star(cfg->pair(), cfg->noise);
  std::vector<double> gammas;
  std::vector<std::vector<ScanPoint>> series;
  for (const auto& [g, pts] : scan) {
    gammas.push_back(g);
    std::vector<ScanPoint> s;
    for (const auto& [N, p] : pts) s.push_back(p);
    series.push_back(s);
  }
  std::vector<TemporalFit> temporal;
  for (const auto& [r, pts] : inc) temporal.push_back(temporal_fit(r, pts, inc_p, inc_dt));
  VerdictCriteria crit;
  if (command == "simulate") crit = {0.10, 0.10};
  RegularityVerdict v;
  if (series.empty()) {
    v.preset = cfg->name;
    v.predicted_gamma_star = predicted;
    v.inconclusive = true;
    v.note = "no gamma scan in the bundles";
    v.temporal = temporal;
  } else {
    v = make_verdict(cfg->name, predicted, spatial_scan(gammas, series, cfg->analysis.slope_tol), temporal, crit);
  }
  const json j = to_json(v);
  fs::create_directories(o.out);
  write_text((fs::path(o.out) / "verdict.json").string(), j.dump(2) + "\n");
  std::cout << j.dump(2) << "\n";
  return v.pass ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral Galerkin experiments for semilinear stochastic heat equations"};
  app.require_subcommand(1);
  Options o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--workers", o.workers, "worker threads (results do not depend on it)")->check(CLI::PositiveNumber);
  };
  auto* sim = app.add_subcommand("simulate", "Monte Carlo moments");
  sim->add_option("config", o.config)->required();
  sim->add_option("--traj", o.traj, "override the number of trajectories")->check(CLI::PositiveNumber);
  add_common(sim);
  auto* orc = app.add_subcommand("oracle", "exact series for additive presets");
  orc->add_option("config", o.config)->required();
  orc->add_flag("--stationary", o.stationary, "evaluate at t = infinity");
  add_common(orc);
  auto* ver = app.add_subcommand("verify-assumptions", "assumption report");
  ver->add_option("config", o.config)->required();
  add_common(ver);
  auto* ana = app.add_subcommand("analyze", "regularity verdict from result bundles");
  ana->add_option("bundles", o.bundles)->required();
  add_common(ana);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  try {
    if (*sim) return cmd_simulate(o);
    if (*orc) return cmd_oracle(o);
    if (*ver) return cmd_verify(o);
    if (*ana) return cmd_analyze(o);
  } catch (const ConfigError& e) {
    std::cerr << o.config << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
