#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "sglab/regularity.hpp"
#include "sglab/simulator.hpp"

using namespace sglab;
using Catch::Matchers::WithinAbs;

namespace {

CovarianceSpectrum noise(NoiseKind kind, double rho, int d = 1) {
  CovarianceSpectrum s;
  s.kind = kind;
  s.d = d;
  s.rho = rho;
  s.n_noise = 16;
  return s;
}

std::vector<int> octaves(int lo, int hi) {
  std::vector<int> out;
  for (int n = lo; n <= hi; n *= 2) out.push_back(n);
  return out;
}

SpatialScan oracle_scan(const CovarianceSpectrum& spec, OracleKind kind, const std::vector<double>& grid,
                        const std::vector<int>& K, int d = 1) {
  const OperatorSpec op{d, 1.0, 0.0};
  const auto sums = ou_partial_sums(spec, op, grid, 1.0, kind, K);
  std::vector<std::vector<ScanPoint>> data(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g)
    for (std::size_t k = 0; k < K.size(); ++k) data[g].push_back({K[k], sums[g][k], 0.0});
  return spatial_scan(grid, data);
}

std::vector<IncrementPoint> oracle_increments(const CovarianceSpectrum& spec, OracleKind kind, double r, double t, int K) {
  const OperatorSpec op{1, 1.0, 0.0};
  auto s = spec;
  s.n_noise = oracle_noise_modes(kind, K);
  std::vector<IncrementPoint> pts;
  for (int e = 20; e >= 14; --e) {
    const double h = std::ldexp(1.0, -e);
    pts.push_back({h, ou_oracle_time_increment(s, op, r, t, h, kind, K).value, 0.0});
  }
  return pts;
}

}  // namespace

TEST_CASE("predicted thresholds") {
  CHECK(predicted_gamma_star(make_preset("additive_one"), noise(NoiseKind::commutative, 2.0)) == 0.75);
  CHECK(predicted_gamma_star(make_preset("additive_one"), noise(NoiseKind::commutative, 3.0, 2)) == 0.75);
  CHECK(predicted_gamma_star(make_preset("additive_one"), noise(NoiseKind::commutative, 9.0)) == 1.0);
  CHECK(predicted_gamma_star(make_preset("nonlinear"), noise(NoiseKind::cosine, 2.0)) == 0.75);
  CHECK(predicted_gamma_star(make_preset("additive_one"), noise(NoiseKind::cosine, 3.0)) == 0.75);
  CHECK(predicted_gamma_star(make_preset("additive_one"), noise(NoiseKind::cosine, 1.4)) == Catch::Approx(0.6));
  CHECK(predicted_gamma_star(make_preset("boundary_sine"), noise(NoiseKind::cosine, 3.0)) == 1.0);
  CHECK(predicted_gamma_star(make_preset("linear_state"), noise(NoiseKind::cosine, 3.0)) == 1.0);
  CHECK(predicted_temporal_exponent(0.75, 0.0) == 0.5);
  CHECK(predicted_temporal_exponent(0.75, 0.5) == 0.25);
}

TEST_CASE("oracle spatial scans locate the thresholds") {
  const auto K = octaves(64, 4096);
  SECTION("commutative, d = 1, rho = 2") {
    const auto grid = gamma_grid(0.5, 1.0, 0.05);
    const auto scan = oracle_scan(noise(NoiseKind::commutative, 2.0), OracleKind::commutative, grid, K);
    REQUIRE(scan.gamma_star);
    CHECK_FALSE(scan.inconclusive);
    CHECK(*scan.gamma_star >= 0.70);
    CHECK(*scan.gamma_star <= 0.80);
    CHECK(std::abs(*scan.gamma_star - 0.75) <= 0.05 + 1e-12);
    for (const auto& s : scan.slopes)
      if (s.gamma < 0.75) CHECK(std::abs(s.slope) <= 0.05);
  }
  SECTION("cosine, b = 1, rho = 3") {
    const auto grid = gamma_grid(0.5, 1.0, 0.05);
    const auto scan = oracle_scan(noise(NoiseKind::cosine, 3.0), OracleKind::cosine_additive, grid, K);
    REQUIRE(scan.gamma_star);
    CHECK(std::abs(*scan.gamma_star - 0.75) <= 0.05 + 1e-12);
    for (const auto& s : scan.slopes)
      if (std::abs(s.gamma - 0.85) < 1e-9) CHECK_THAT(s.slope, WithinAbs(0.4, 0.05));
  }
  SECTION("cosine, b = sin(pi x), rho = 3") {
    const auto grid = gamma_grid(0.5, 1.1, 0.05);
    const auto scan = oracle_scan(noise(NoiseKind::cosine, 3.0), OracleKind::boundary_sine, grid, K);
    REQUIRE(scan.gamma_star);
    CHECK(*scan.gamma_star >= 0.93);
    CHECK(*scan.gamma_star <= 1.05);
  }
  SECTION("commutative, d = 2, rho = 3") {
    const auto grid = gamma_grid(0.6, 0.9, 0.05);
    const auto scan = oracle_scan(noise(NoiseKind::commutative, 3.0, 2), OracleKind::commutative, grid, octaves(32, 2048), 2);
    REQUIRE(scan.gamma_star);
    for (const auto& s : scan.slopes) UNSCOPED_INFO("gamma " << s.gamma << " slope " << s.slope);
    CHECK(std::abs(*scan.gamma_star - 0.75) <= 0.05 + 1e-12);
  }
}

TEST_CASE("oracle temporal fits") {
  const auto spec = noise(NoiseKind::commutative, 2.0);
  const std::vector<std::pair<double, double>> cases{{0.0, 0.02}, {0.25, 0.05}, {0.5, 0.05}};
  for (const auto& [r, tol] : cases) {
    const auto pts = oracle_increments(spec, OracleKind::commutative, r, 0.5, 4096);
    const auto fit = temporal_fit(r, pts);
    INFO("r " << r << " beta " << fit.beta_hat);
    CHECK_THAT(fit.beta_hat, WithinAbs(predicted_temporal_exponent(0.75, r), tol));
    CHECK(fit.points_used == 7);
  }
}

TEST_CASE("deterministic heat flow is smooth in time") {
  const OperatorSpec op{1, 1.0, 0.0};
  SpectralField e1(op, 4);
  e1[0] = 1.0;
  for (double r : {0.0, 0.25, 0.5}) {
    std::vector<IncrementPoint> pts;
    for (int e = 14; e >= 8; --e) {
      const double h = std::ldexp(1.0, -e);
      SpectralField d = semigroup_apply(e1, 0.5 + h);
      const auto base = semigroup_apply(e1, 0.5);
      for (std::size_t k = 0; k < d.size(); ++k) d[k] -= base[k];
      pts.push_back({h, std::pow(fractional_norm(d, r), 2), 0.0});
    }
    CHECK(temporal_fit(r, pts).beta_hat >= 0.99);
  }
}

TEST_CASE("fit input validation") {
  std::vector<IncrementPoint> pts;
  for (int e = 10; e >= 4; --e) pts.push_back({std::ldexp(1.0, -e), std::ldexp(1.0, -e), 0.0});
  CHECK_THAT(temporal_fit(0.0, pts).beta_hat, WithinAbs(0.5, 1e-12));
  CHECK_THAT(temporal_fit(0.0, pts, 4.0).beta_hat, WithinAbs(0.25, 1e-12));
  // The dt floor drops h < 8 dt.
  CHECK(temporal_fit(0.0, pts, 2.0, std::ldexp(1.0, -12)).points_used == 6);
  CHECK(temporal_fit(0.0, pts, 2.0, std::ldexp(1.0, -11)).points_used == 5);
  CHECK_THROWS(temporal_fit(0.0, pts, 2.0, std::ldexp(1.0, -10)));
  auto bad = pts;
  bad[2].value = -1.0;
  CHECK_THROWS(temporal_fit(0.0, bad));
  bad[2].value = NAN;
  CHECK_THROWS(temporal_fit(0.0, bad));
}

TEST_CASE("spatial scan bookkeeping") {
  const std::vector<double> grid{0.6, 0.7, 0.8};
  auto series = [](double slope, double scale) {
    std::vector<ScanPoint> pts;
    for (int n : {64, 128, 256, 512}) pts.push_back({n, scale * std::pow(n, slope), 0.0});
    return pts;
  };
  const auto scan = spatial_scan(grid, {series(0.0, 1.0), series(0.01, 2.0), series(0.3, 3.0)});
  REQUIRE(scan.gamma_star);
  CHECK(*scan.gamma_star == 0.8);
  CHECK(scan.bracket_lo == 0.7);
  SECTION("scale invariance") {
    const auto scaled = spatial_scan(grid, {series(0.0, 7.0), series(0.01, 1e-6), series(0.3, 1e9)});
    for (std::size_t k = 0; k < grid.size(); ++k) CHECK_THAT(scaled.slopes[k].slope, WithinAbs(scan.slopes[k].slope, 1e-12));
  }
  SECTION("non-monotone profile is inconclusive") {
    const auto odd = spatial_scan(grid, {series(0.0, 1.0), series(0.3, 1.0), series(0.0, 1.0)});
    CHECK(odd.inconclusive);
    CHECK_FALSE(make_verdict("x", 0.7, odd, {}).pass);
  }
  SECTION("too few truncation levels") {
    std::vector<std::vector<ScanPoint>> short_data(3, {{64, 1.0, 0.0}, {128, 1.0, 0.0}, {256, 1.0, 0.0}});
    const auto s = spatial_scan(grid, short_data);
    CHECK(s.inconclusive);
    CHECK_FALSE(make_verdict("x", 0.7, s, {}).pass);
  }
  SECTION("no divergence on the grid") {
    const auto flat = spatial_scan(grid, {series(0.0, 1.0), series(0.0, 1.0), series(0.0, 1.0)});
    CHECK_FALSE(flat.gamma_star);
    CHECK(make_verdict("x", 1.0, flat, {}).pass);
    CHECK_FALSE(make_verdict("x", 0.7, flat, {}).pass);
  }
  CHECK_THROWS(spatial_scan(grid, {series(0.0, 1.0)}));
}

TEST_CASE("verdict JSON") {
  const std::vector<double> grid{0.7, 0.8};
  std::vector<std::vector<ScanPoint>> data;
  for (double s : {0.0, 0.2}) {
    std::vector<ScanPoint> pts;
    for (int n : {8, 16, 32, 64}) pts.push_back({n, std::pow(n, s), 0.01});
    data.push_back(pts);
  }
  TemporalFit fit;
  fit.r = 0.0;
  fit.beta_hat = 0.49;
  fit.se = 0.01;
  const auto v = make_verdict("demo", 0.75, spatial_scan(grid, data), {fit});
  CHECK(v.pass);
  const auto j = to_json(v);
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  const std::vector<std::string> expect{"preset", "predicted_gamma_star", "estimated_gamma_star", "slopes", "temporal", "pass"};
  CHECK(keys == expect);
  CHECK(j["slopes"][1]["gamma"] == 0.8);
  CHECK(j["slopes"][1].contains("se"));
  CHECK(j["temporal"][0]["beta_hat"] == 0.49);

  fit.beta_hat = 0.3;
  CHECK_FALSE(make_verdict("demo", 0.75, spatial_scan(grid, data), {fit}).pass);

  ThresholdInput missing;
  missing.preset = "empty";
  missing.predicted = 0.75;
  const auto table = threshold_table({missing});
  REQUIRE(table.size() == 1);
  CHECK(table[0].inconclusive);
  CHECK_FALSE(table[0].pass);
}

TEST_CASE("Monte Carlo scan agrees with the oracle verdict") {
  SimulationConfig c;
  c.op = OperatorSpec{1, 1.0, 0.0};
  c.spec = noise(NoiseKind::commutative, 2.0);
  c.pair = make_preset("additive_one");
  c.T = 0.5;
  c.n_steps = 512;
  c.n_traj = 150;
  c.seed = 17;
  c.checkpoints = {0.5};
  const std::vector<double> grid{0.5, 0.6, 0.7, 0.8, 0.9};
  std::vector<std::vector<ScanPoint>> data(grid.size());
  for (int N : {32, 64, 128, 256}) {
    c.n_modes = N;
    c.spec.n_noise = N;
    const auto rows = ensemble_moments(c, grid, 1);
    for (const auto& row : rows)
      for (std::size_t g = 0; g < grid.size(); ++g)
        if (std::abs(row.r - grid[g]) < 1e-12) data[g].push_back({N, row.estimate, row.std_error});
  }
  const auto mc = spatial_scan(grid, data);
  const auto oracle = oracle_scan(c.spec, OracleKind::commutative, grid, octaves(32, 256));
  REQUIRE(mc.gamma_star);
  REQUIRE(oracle.gamma_star);
  CHECK(std::abs(*mc.gamma_star - *oracle.gamma_star) <= 0.1 + 1e-12);
}
