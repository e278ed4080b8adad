#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "sglab/rng.hpp"
#include "sglab/spectral_space.hpp"

using namespace sglab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

SpectralField random_field(const OperatorSpec& op, int n, std::uint64_t seed) {
  SpectralField v(op, n);
  const RngTuple id{seed, 2, 0, 0};
  fill_standard_normal(id, v.coeffs());
  return v;
}

}  // namespace

TEST_CASE("eigenvalues follow kappa pi^2 |i|^2") {
  const OperatorSpec d1{1, 1.0, 0.0}, d2{2, 1.0, 0.0}, half{1, 0.5, 0.0};
  const int one[1] = {1}, two[1] = {2}, pair[2] = {1, 1}, mixed[2] = {1, 2};
  CHECK_THAT(eigenvalue(d1, one), WithinRel(9.8696044010893586, 1e-15));
  CHECK_THAT(eigenvalue(d2, pair), WithinRel(2.0 * pi * pi, 1e-15));
  CHECK_THAT(eigenvalue(half, two), WithinRel(19.739208802178717, 1e-15));
  CHECK_THAT(eigenvalue(d2, mixed), WithinRel(5.0 * pi * pi, 1e-15));
  const int zero[1] = {0};
  CHECK_THROWS_AS(eigenvalue(d1, zero), std::invalid_argument);
  CHECK_THROWS_AS(eigenvalue(d2, one), ShapeError);
  CHECK_THROWS(OperatorSpec{1, -1.0, 0.0}.validate());
}

TEST_CASE("eigenfunction values") {
  const OperatorSpec d1{1, 1.0, 0.0}, d2{2, 1.0, 0.0};
  const int one[1] = {1}, two[1] = {2}, pair[2] = {1, 1};
  const double mid[1] = {0.5}, mid2[2] = {0.5, 0.5}, edge[1] = {1.0};
  CHECK_THAT(eigenfunction_eval(d1, one, mid), WithinAbs(std::sqrt(2.0), 1e-15));
  CHECK_THAT(eigenfunction_eval(d1, two, mid), WithinAbs(0.0, 1e-15));
  CHECK_THAT(eigenfunction_eval(d2, pair, mid2), WithinAbs(2.0, 1e-15));
  CHECK_THROWS_AS(eigenfunction_eval(d1, one, edge), std::domain_error);
}

TEST_CASE("fractional norms") {
  const OperatorSpec op{1, 1.0, 0.0};
  SpectralField e1(op, 8);
  e1[0] = 1.0;
  CHECK_THAT(fractional_norm(e1, 0.5), WithinRel(pi, 1e-15));
  SpectralField v = e1;
  v[1] = 1.0;
  CHECK_THAT(fractional_norm(v, 1.0), WithinRel(pi * pi * std::sqrt(17.0), 1e-14));
  CHECK_THROWS_AS(fractional_norm(v, -0.1), std::domain_error);

  SECTION("Parseval at r = 0") {
    for (int d : {1, 2}) {
      const OperatorSpec o{d, 1.0, 0.0};
      const auto w = random_field(o, 12, 11 + d);
      double sum = 0.0;
      for (double a : w.coeffs()) sum += a * a;
      CHECK(std::abs(std::pow(fractional_norm(w, 0.0), 2) - sum) <= 1e-12 * sum);
    }
  }
  SECTION("nondecreasing in r when every lambda >= 1") {
    const auto w = random_field(op, 32, 5);
    double prev = 0.0;
    for (double r = 0.0; r <= 1.0; r += 0.05) {
      const double n = fractional_norm(w, r);
      CHECK(n >= prev);
      prev = n;
    }
  }
}

TEST_CASE("heat semigroup") {
  const OperatorSpec op{1, 1.0, 0.0};
  SpectralField e1(op, 4);
  e1[0] = 1.0;
  const auto s = semigroup_apply(e1, 0.1);
  CHECK_THAT(s[0], WithinRel(std::exp(-0.1 * pi * pi), 1e-14));
  CHECK_THAT(s[0], WithinAbs(0.37267, 1e-4));  // quoted to four digits; exact value 0.3727078...
  CHECK_THROWS_AS(semigroup_apply(e1, -1.0), std::domain_error);

  for (int d : {1, 2}) {
    const OperatorSpec o{d, 0.7, 0.0};
    const auto v = random_field(o, 10, 17 + d);
    const auto zero = semigroup_apply(v, 0.0);
    for (std::size_t k = 0; k < v.size(); ++k) CHECK(zero[k] == v[k]);
    const auto a = semigroup_apply(semigroup_apply(v, 0.013), 0.021);
    const auto b = semigroup_apply(v, 0.034);
    for (std::size_t k = 0; k < v.size(); ++k) CHECK(std::abs(a[k] - b[k]) <= 1e-12 * std::abs(b[k]) + 1e-300);
    CHECK(fractional_norm(b, 0.0) <= fractional_norm(v, 0.0));

    // Smoothing into every V_r at truncation level.
    const auto lambda = eigenvalues(o, 10);
    for (double r : {0.5, 1.0, 2.0}) {
      double sup = 0.0;
      for (double l : lambda) sup = std::max(sup, std::pow(l, r) * std::exp(-l * 0.034));
      CHECK(fractional_norm(b, r) <= sup * fractional_norm(v, 0.0) * (1 + 1e-12));
    }
  }
}

TEST_CASE("semigroup estimates with constant one") {
  std::vector<double> grid;
  for (int k = -300; k <= 300; ++k) grid.push_back(std::pow(10.0, k / 100.0));
  const std::vector<double> unit{1.0};
  const auto r0 = semigroup_bound_check(0.0, grid, unit);
  CHECK(r0.pass);
  CHECK(r0.max_smoothing <= 1.0);
  CHECK(r0.max_increment <= 1.0);
  const auto r1 = semigroup_bound_check(1.0, grid, unit);
  CHECK_THAT(r1.max_smoothing, WithinAbs(1.0 / std::exp(1.0), 1e-6));
  CHECK_THAT(r1.reference, WithinRel(0.36787944117144233, 1e-15));
  const auto rh = semigroup_bound_check(0.5, grid, unit);
  CHECK_THAT(rh.max_smoothing, WithinAbs(0.42888194248035333, 1e-6));
  CHECK(rh.pass);
  CHECK_THROWS(semigroup_bound_check(1.5, grid, unit));

  const OperatorSpec op{1, 1.0, 0.0};
  const std::vector<int> modes{1, 2, 4, 8, 16, 32, 64};
  const std::vector<double> times{1e-6, 1e-4, 1e-2, 1.0};
  CHECK(semigroup_bound_check(op, 0.75, times, modes).pass);
}

TEST_CASE("sine transforms") {
  const OperatorSpec op{1, 1.0, 0.0};
  SECTION("basis vector is recovered") {
    SpectralField e1(op, 8);
    e1[0] = 1.0;
    const auto back = to_spectral(from_spectral(e1, 8), op, 8);
    for (std::size_t k = 0; k < back.size(); ++k) CHECK_THAT(back[k], WithinAbs(k == 0 ? 1.0 : 0.0, 1e-14));
  }
  SECTION("zero round trips") {
    const auto back = to_spectral(from_spectral(SpectralField(op, 8), 8), op, 8);
    for (double c : back.coeffs()) CHECK(c == 0.0);
  }
  SECTION("band-limited input") {
    const SpectralField v(op, 2, {1.0, 0.5});
    const auto back = to_spectral(from_spectral(v, 8), op, 2);
    CHECK_THAT(back[0], WithinRel(1.0, 1e-12));
    CHECK_THAT(back[1], WithinRel(0.5, 1e-12));
  }
  SECTION("grid samples equal the series") {
    const SpectralField v(op, 3, {0.3, -1.0, 2.0});
    const auto g = from_spectral(v, 11);
    for (int k = 1; k <= 11; ++k) {
      const double x = k / 12.0;
      double s = 0.0;
      for (int i = 1; i <= 3; ++i) s += v[static_cast<std::size_t>(i - 1)] * std::sqrt(2.0) * std::sin(i * pi * x);
      CHECK_THAT(g[static_cast<std::size_t>(k - 1)], WithinAbs(s, 1e-13));
    }
  }
  SECTION("two dimensions with oversampling") {
    const OperatorSpec o2{2, 1.0, 0.0};
    const auto v = random_field(o2, 6, 3);
    const auto g = from_spectral(v, 13);
    const int idx[2] = {2, 5};
    const double x[2] = {g.node(4), g.node(9)};
    double direct = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
      const auto mi = v.multi_index(k);
      direct += v[k] * eigenfunction_eval(o2, mi, x);
    }
    CHECK_THAT(g[static_cast<std::size_t>(3 * 13 + 8)], WithinAbs(direct, 1e-12));
    const auto back = to_spectral(g, o2, 6);
    for (std::size_t k = 0; k < v.size(); ++k) CHECK_THAT(back[k], WithinAbs(v[k], 1e-12));
    CHECK(v.flat_index(idx) == 1 * 6 + 4);
  }
  SECTION("shape errors") {
    CHECK_THROWS_AS(to_spectral(GridField(2, 4), op, 4), ShapeError);
    CHECK_THROWS_AS(SpectralField(op, 3, {1.0, 2.0}), ShapeError);
  }
}
