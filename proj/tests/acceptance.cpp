// Acceptance run: one PASS/FAIL line per criterion, details underneath.
// Exit status is 0 only when every criterion passes.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "sglab/coefficients.hpp"
#include "sglab/experiment.hpp"
#include "sglab/regularity.hpp"
#include "sglab/simulator.hpp"
#include "sglab/sobolev_norms.hpp"
#include "sglab/spectral_space.hpp"

using namespace sglab;
namespace fs = std::filesystem;

namespace {

ExperimentConfig preset(const std::string& name) { return load_config(std::string(SGLAB_PRESET_DIR) + "/" + name + ".toml"); }

struct Criterion {
  Criterion(int i, std::string t) : id(i), title(std::move(t)) {}
  int id;
  std::string title;
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    notes.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
  }
};

std::string num(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

std::string gamma_text(const SpatialScan& s) {
  if (!s.gamma_star) return "none (" + s.note + ")";
  return num(*s.gamma_star) + (s.inconclusive ? " inconclusive: " + s.note : "");
}

bool in_range(const SpatialScan& s, double lo, double hi) {
  return s.gamma_star && !s.inconclusive && *s.gamma_star >= lo - 1e-12 && *s.gamma_star <= hi + 1e-12;
}

std::vector<int> octaves(int lo, int hi) {
  std::vector<int> out;
  for (int n = lo; n <= hi; n *= 2) out.push_back(n);
  return out;
}

SpatialScan oracle_scan(const ExperimentConfig& c, OracleKind kind, const std::vector<int>& K) {
  const auto& grid = c.analysis.gamma_grid;
  const double t = c.run.checkpoints.back();
  const auto sums = ou_partial_sums(c.noise, c.op, grid, t, kind, K);
  std::vector<std::vector<ScanPoint>> data(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g)
    for (std::size_t k = 0; k < K.size(); ++k) data[g].push_back({K[k], sums[g][k], 0.0});
  return spatial_scan(grid, data, c.analysis.slope_tol);
}

Criterion oracle_agreement() {
  Criterion c{1, "Monte Carlo moments match the exact series (commutative, rho = 2, N = J = 128)"};
  const auto cfg = preset("example53_d1");
  const auto sim = cfg.simulation();
  const auto table = ensemble_moments(sim, cfg.analysis.r_list, 1);
  for (const auto& row : table) {
    const double exact = ou_oracle_moment(sim.spec, sim.op, row.r, row.t, OracleKind::commutative, sim.n_modes).value;
    const double z = (row.estimate - exact) / row.std_error;
    c.require(std::abs(z) <= 3.0, "t " + num(row.t) + " gamma " + num(row.r) + ": mc " + num(row.estimate, 6) + " exact " +
                                      num(exact, 6) + " z " + num(z, 3));
  }
  c.require(table.size() == 9, "9 (t, gamma) pairs, " + std::to_string(sim.n_traj) + " trajectories");
  return c;
}

Criterion spatial_threshold() {
  Criterion c{2, "spatial threshold gamma* = 0.75 for commutative noise, d = 1, rho = 2"};
  const auto oc = preset("example53_d1_oracle");
  const auto exact = oracle_scan(oc, OracleKind::commutative, octaves(64, 4096));
  c.require(in_range(exact, 0.70, 0.80), "exact series over N = 2^6..2^12: gamma* " + gamma_text(exact));

  auto mc = preset("example53_d1");
  mc.run.n_traj = 400;
  mc.run.checkpoints = {mc.run.checkpoints.back()};
  const auto& grid = mc.analysis.gamma_grid;
  std::vector<std::vector<ScanPoint>> data(grid.size());
  for (int N : mc.analysis.N_list) {
    const auto rows = ensemble_moments(mc.simulation(N), grid, 1);
    for (const auto& row : rows)
      for (std::size_t g = 0; g < grid.size(); ++g)
        if (std::abs(row.r - grid[g]) < 1e-12) data[g].push_back({N, row.estimate, row.std_error});
  }
  const auto scan = spatial_scan(grid, data, mc.analysis.slope_tol);
  c.require(in_range(scan, 0.65, 0.85), "Monte Carlo over N = 64..512, 400 trajectories: gamma* " + gamma_text(scan));
  return c;
}

Criterion boundary_boost() {
  Criterion c{3, "boundary compatible diffusion raises gamma* (cosine noise, rho = 3)"};
  const auto flat = preset("example51_additive_rho3");
  const auto sine = preset("example52_sine");
  const auto K = flat.analysis.N_list;
  const auto a = oracle_scan(flat, oracle_kind_for(flat.pair(), flat.noise), K);
  const auto b = oracle_scan(sine, oracle_kind_for(sine.pair(), sine.noise), sine.analysis.N_list);
  c.require(in_range(a, 0.70, 0.80), "b = 1: gamma* " + gamma_text(a) + ", predicted " +
                                         num(predicted_gamma_star(flat.pair(), flat.noise)));
  c.require(in_range(b, 0.93, 1.05), "b = sin(pi x): gamma* " + gamma_text(b) + ", predicted " +
                                         num(predicted_gamma_star(sine.pair(), sine.noise)));
  c.require(a.gamma_star && b.gamma_star && *b.gamma_star > *a.gamma_star, "strict ordering");
  return c;
}

Criterion temporal_exponents() {
  Criterion c{4, "temporal Hoelder exponents min(gamma* - r, 1/2)"};
  const auto oc = preset("example53_d1_oracle");
  const int K = oc.analysis.N_list.back();
  auto spec = oc.noise;
  spec.n_noise = oracle_noise_modes(OracleKind::commutative, K);
  for (double r : oc.analysis.r_list) {
    const auto vals = ou_oracle_time_increments(spec, oc.op, r, oc.analysis.t_base, oc.analysis.h_list,
                                                OracleKind::commutative, K);
    std::vector<IncrementPoint> pts;
    for (std::size_t i = 0; i < vals.size(); ++i) pts.push_back({oc.analysis.h_list[i], vals[i].value, 0.0});
    const auto fit = temporal_fit(r, pts);
    const double target = predicted_temporal_exponent(0.75, r);
    const double tol = r == 0.0 ? 0.02 : 0.05;
    c.require(std::abs(fit.beta_hat - target) <= tol,
              "exact r " + num(r) + ": beta " + num(fit.beta_hat) + " target " + num(target) + " +- " + num(tol));
  }

  const auto tc = preset("example53_d1_temporal");
  const auto sim = tc.simulation();
  EnsembleRequest req;
  req.r_list = tc.analysis.r_list;
  req.increment_base = tc.analysis.t_base;
  req.h_list = tc.analysis.h_list;
  const auto res = run_ensemble(sim, req, 1);
  for (double r : tc.analysis.r_list) {
    std::vector<IncrementPoint> pts;
    for (const auto& row : res.increments)
      if (row.r == r) pts.push_back({row.h, row.estimate, row.std_error});
    const auto fit = temporal_fit(r, pts, sim.p, sim.dt());
    const double target = predicted_temporal_exponent(0.75, r);
    c.require(std::abs(fit.beta_hat - target) <= 0.1, "Monte Carlo r " + num(r) + " (" + std::to_string(sim.n_traj) +
                                                         " trajectories): beta " + num(fit.beta_hat) + " target " +
                                                         num(target) + " +- 0.1");
  }
  return c;
}

Criterion growth_bound() {
  Criterion c{5, "HS growth of B in V_alpha stays bounded across N = 64..512"};
  const std::vector<int> n_list{64, 128, 256, 512};
  const auto nl = preset("example51_rho2");
  const auto nl_pair = nl.pair();
  const auto below = growth_bound_check(nl_pair, nl.noise, nl.op, 0.15, 8, n_list, nl.run.seed);
  c.require(std::abs(below.slope) <= 0.05, "nonlinear, rho = 2, alpha 0.15: slope " + num(below.slope) + " (|.| <= 0.05)");
  const auto above = growth_bound_check(nl_pair, nl.noise, nl.op, 0.35, 8, n_list, nl.run.seed);
  c.require(above.slope >= 0.3, "nonlinear, rho = 2, alpha 0.35: slope " + num(above.slope) + " (>= 0.3)");

  const auto bs = preset("example52_sine");
  for (double alpha : bs.analysis.alpha_list) {
    const auto rep = growth_bound_check(bs.pair(), bs.noise, bs.op, alpha, 8, n_list, bs.run.seed);
    c.require(std::abs(rep.slope) <= 0.05, "b = sin(pi x), alpha " + num(alpha) + ": slope " + num(rep.slope) +
                                               " (|.| <= 0.05), least squares " + num(rep.slope_ls));
  }
  return c;
}

Criterion semigroup_bounds() {
  Criterion c{6, "smoothing and increment bounds of the heat semigroup"};
  std::vector<double> grid;
  for (int k = -60; k <= 60; ++k) grid.push_back(std::pow(10.0, k / 10.0));
  for (double r : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const auto rep = semigroup_bound_check(r, grid, grid);
    c.require(rep.pass, "r " + num(r) + ": max (t lambda)^r e^{-t lambda} " + num(rep.max_smoothing, 8) + " vs " +
                            num(rep.reference, 8) + ", max increment ratio " + num(rep.max_increment, 8));
  }
  return c;
}

GridField line(int m, double (*fn)(double)) {
  return GridField::sample(1, m, [fn](std::span<const double> x) { return fn(x[0]); });
}

Criterion norm_machinery() {
  Criterion c{7, "fractional norm quadrature and inequality suites"};
  const double exact = std::sqrt(13.0 / 15.0);
  const double s = slobodeckij_norm(line(512, [](double x) { return x; }), 0.25);
  c.require(std::abs(s - exact) < 0.01 * exact, "g = x, r = 0.25, M = 512: " + num(s, 6) + " vs " + num(exact, 6));

  const auto vs = random_dirichlet_fields(1000, 24, 0.75, 41);
  const auto ws = random_dirichlet_fields(1000, 24, 1.5, 42);
  int mult = 0;
  for (std::size_t k = 0; k < vs.size(); ++k) {
    const double r = 0.05 + 0.85 * static_cast<double>(k % 17) / 17.0;
    const double delta = std::min(1.0, r + 0.05 + 0.5 * static_cast<double>(k % 5) / 5.0);
    mult += multiplication_inequality_check(from_spectral(vs[k], 63), from_spectral(ws[k], 63), r, delta).pass ? 1 : 0;
  }
  c.require(mult == 1000, "product inequality " + std::to_string(mult) + "/1000");

  const auto fields = random_dirichlet_fields(1000, 32, 0.6, 77);
  const auto names = preset_names();
  int comp = 0;
  for (std::size_t k = 0; k < fields.size(); ++k) {
    const double r = 0.05 + 0.9 * static_cast<double>(k % 13) / 13.0;
    GridField g = from_spectral(fields[k], 63);
    for (double& x : g.values()) x *= 1.0 + static_cast<double>(k % 7);
    comp += composition_bound_check(make_preset(names[k % names.size()]), g, r).pass ? 1 : 0;
  }
  c.require(comp == 1000, "composition bound " + std::to_string(comp) + "/1000");

  for (double r : {0.1, 0.2, 0.35, 0.45}) {
    const double a = equivalence_constant_estimate(r, 50, 128).c_hat;
    const double b = equivalence_constant_estimate(r, 100, 256).c_hat;
    c.require(std::abs(b - a) < 0.1 * a, "equivalence constant r " + num(r) + ": " + num(a) + " -> " + num(b));
  }
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + SGLAB_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Criterion determinism() {
  Criterion c{8, "CSV output does not depend on the worker count"};
  const auto dir = fs::temp_directory_path() / "sglab_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(SGLAB_PRESET_DIR))
    if (e.path().extension() == ".toml") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    auto cfg = load_config(f.string());
    const auto stem = f.stem().string();
    // Run length only: one truncation, a handful of trajectories.
    cfg.analysis.N_list.clear();
    cfg.run.n_traj = 6;
    const bool on_grid = std::all_of(cfg.analysis.h_list.begin(), cfg.analysis.h_list.end(), [&](double h) {
      return cfg.simulation().step_of(cfg.analysis.t_base + h) >= 0;
    });
    if (!on_grid) cfg.analysis.h_list.clear();
    const auto path = dir / (stem + ".toml");
    write_text(path.string(), serialize_config(cfg));
    const auto one = dir / (stem + "_w1"), four = dir / (stem + "_w4");
    const int s1 = run_cli("simulate \"" + path.string() + "\" --workers 1 --out \"" + one.string() + "\"");
    const int s4 = run_cli("simulate \"" + path.string() + "\" --workers 4 --out \"" + four.string() + "\"");
    bool same = s1 == 0 && s4 == 0;
    for (const char* csv : {"moments.csv", "increments.csv"}) {
      const bool e1 = fs::exists(one / csv), e4 = fs::exists(four / csv);
      same = same && e1 == e4 && (!e1 || slurp(one / csv) == slurp(four / csv));
    }
    same = same && fs::exists(one / "moments.csv");
    c.require(same, stem + " at N = " + std::to_string(cfg.run.N) + (cfg.analysis.h_list.empty() ? "" : " with increments") +
                        ": exit " + std::to_string(s1) + "/" + std::to_string(s4));
  }
  fs::remove_all(dir);
  return c;
}

}  // namespace

int main() {
  using Clock = std::chrono::steady_clock;
  int failed = 0, index = 0;
  for (auto* run : {oracle_agreement, spatial_threshold, boundary_boost, temporal_exponents, growth_bound, semigroup_bounds,
                    norm_machinery, determinism}) {
    const auto start = Clock::now();
    Criterion c{++index, "threw before finishing"};
    try {
      c = run();
    } catch (const std::exception& e) {
      c.pass = false;
      c.notes.push_back(std::string("FAIL exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    std::cout << (c.pass ? "PASS" : "FAIL") << " criterion " << c.id << ": " << c.title << " [" << num(secs, 3) << " s]\n";
    for (const auto& n : c.notes) std::cout << "    " << n << "\n";
    std::cout.flush();
    failed += c.pass ? 0 : 1;
  }
  std::cout << (failed == 0 ? "all criteria pass" : std::to_string(failed) + " criterion(s) failed") << "\n";
  return failed == 0 ? 0 : 1;
}
