#pragma once

// Sobolev-Slobodeckij W^{r,2} and Hoelder C^delta norms of grid functions, and
// empirical checks of the norm equivalence, multiplication and composition
// inequalities used to verify the diffusion growth bound.
//
// Quadrature: interior nodes x_k = k/(M+1) with cell volume h^d, h = 1/(M+1).
// The double integral uses the midpoint rule over distinct node pairs; the
// diagonal cells are excluded. Cost is O(M^{2d}); keep M <= 96 for d = 2.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "sglab/nemytskii.hpp"
#include "sglab/rng.hpp"
#include "sglab/spectral_space.hpp"

namespace sglab {

enum class QuadratureRule { midpoint_offdiagonal, grid_supremum };

struct NormReport {
  double value = 0.0;
  int m_points = 0;
  QuadratureRule rule = QuadratureRule::midpoint_offdiagonal;
  bool diagonal_excluded = true;
};

namespace detail {

// Integer node coordinates (0-based) of every flat index.
inline std::vector<int> node_coords(const GridField& g) {
  const int d = g.dim(), m = g.m_points();
  std::vector<int> coords(g.size() * static_cast<std::size_t>(d));
  for (std::size_t flat = 0; flat < g.size(); ++flat) {
    std::size_t rem = flat;
    for (int k = d - 1; k >= 0; --k) {
      coords[flat * static_cast<std::size_t>(d) + static_cast<std::size_t>(k)] =
          static_cast<int>(rem % static_cast<std::size_t>(m));
      rem /= static_cast<std::size_t>(m);
    }
  }
  return coords;
}

// Table of ||offset * h||^{-power} indexed by |offset| components (row-major, M^d).
inline std::vector<double> offset_kernel(int d, int m, double h, double power) {
  std::vector<double> table(ipow(static_cast<std::size_t>(m), d));
  for (std::size_t flat = 0; flat < table.size(); ++flat) {
    std::size_t rem = flat;
    double sq = 0.0;
    for (int k = 0; k < d; ++k) {
      const double c = static_cast<double>(rem % static_cast<std::size_t>(m));
      rem /= static_cast<std::size_t>(m);
      sq += c * c;
    }
    table[flat] = sq == 0.0 ? 0.0 : std::pow(std::sqrt(sq) * h, -power);
  }
  return table;
}

template <class PairFn>
inline void for_each_pair(const GridField& g, PairFn&& fn) {
  const int d = g.dim(), m = g.m_points();
  const auto coords = node_coords(g);
  const std::size_t n = g.size();
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = p + 1; q < n; ++q) {
      std::size_t off = 0;
      for (int k = 0; k < d; ++k) {
        const int a = coords[p * static_cast<std::size_t>(d) + static_cast<std::size_t>(k)];
        const int b = coords[q * static_cast<std::size_t>(d) + static_cast<std::size_t>(k)];
        off = off * static_cast<std::size_t>(m) + static_cast<std::size_t>(a > b ? a - b : b - a);
      }
      fn(p, q, off);
    }
  }
}

}  // namespace detail

/// (||g||_{L^2}^2 + int int |g(x)-g(y)|^2 / |x-y|^{d+2r} dx dy)^{1/2} by quadrature.
inline NormReport slobodeckij_norm_report(const GridField& g, double r) {
  if (!(r > 0.0 && r < 1.0)) throw std::domain_error("slobodeckij_norm: r must lie in (0,1)");
  const int d = g.dim(), m = g.m_points();
  const double h = g.spacing();
  const double cell = std::pow(h, d);
  double l2 = 0.0;
  for (double v : g.values()) l2 += v * v;
  l2 *= cell;

  double seminorm = 0.0;
  const auto vals = g.values();
  if (d == 1) {
    // Kernel depends only on the offset; sum row differences offset by offset.
    for (int k = 1; k < m; ++k) {
      double s = 0.0;
      for (int p = 0; p + k < m; ++p) {
        const double diff = vals[static_cast<std::size_t>(p)] - vals[static_cast<std::size_t>(p + k)];
        s += diff * diff;
      }
      seminorm += s * std::pow(k * h, -(1.0 + 2.0 * r));
    }
  } else {
    const auto kernel = detail::offset_kernel(d, m, h, d + 2.0 * r);
    detail::for_each_pair(g, [&](std::size_t p, std::size_t q, std::size_t off) {
      const double diff = vals[p] - vals[q];
      seminorm += diff * diff * kernel[off];
    });
  }
  seminorm *= 2.0 * cell * cell;  // ordered pairs
  return {std::sqrt(l2 + seminorm), m, QuadratureRule::midpoint_offdiagonal, true};
}

inline double slobodeckij_norm(const GridField& g, double r) { return slobodeckij_norm_report(g, r).value; }

/// Grid version of sup|g| + sup |g(x)-g(y)| / |x-y|^delta; a lower bound of
/// the continuum norm.
inline double holder_norm(const GridField& g, double delta) {
  if (!(delta > 0.0 && delta <= 1.0)) throw std::domain_error("holder_norm: delta must lie in (0,1]");
  const auto vals = g.values();
  double sup = 0.0;
  for (double v : vals) sup = std::max(sup, std::abs(v));
  double semi = 0.0;
  const int m = g.m_points();
  const double h = g.spacing();
  if (g.dim() == 1) {
    for (int k = 1; k < m; ++k) {
      const double scale = std::pow(k * h, -delta);
      double best = 0.0;
      for (int p = 0; p + k < m; ++p)
        best = std::max(best, std::abs(vals[static_cast<std::size_t>(p)] - vals[static_cast<std::size_t>(p + k)]));
      semi = std::max(semi, best * scale);
    }
  } else {
    const auto kernel = detail::offset_kernel(g.dim(), m, h, delta);
    detail::for_each_pair(g, [&](std::size_t p, std::size_t q, std::size_t off) {
      semi = std::max(semi, std::abs(vals[p] - vals[q]) * kernel[off]);
    });
  }
  return sup + semi;
}

/// Hoelder seminorm of a function sampled on an arbitrary fine grid is the
/// part of holder_norm above the sup norm.
inline double holder_seminorm(const GridField& g, double delta) {
  double sup = 0.0;
  for (double v : g.values()) sup = std::max(sup, std::abs(v));
  return holder_norm(g, delta) - sup;
}

struct EquivalenceEstimate {
  double r = 0.0;
  double c_hat = 1.0;        // empirical; not the true equivalence constant
  int samples_used = 0;
  int samples_skipped = 0;
  int m_points = 0;
};

/// Random band-limited Dirichlet fields v = sum_{i <= modes} Z_i i^{-decay} e_i (d = 1).
inline std::vector<SpectralField> random_dirichlet_fields(int count, int modes, double decay, std::uint64_t seed,
                                                          std::uint64_t first_index = 0) {
  const OperatorSpec op{1, 1.0, 0.0};
  std::vector<SpectralField> out;
  out.reserve(static_cast<std::size_t>(count));
  std::vector<double> z(static_cast<std::size_t>(modes));
  for (int s = 0; s < count; ++s) {
    const RngTuple id{seed, static_cast<std::uint32_t>(Stream::test_fields), first_index + static_cast<std::uint64_t>(s), 0};
    fill_standard_normal(id, z);
    SpectralField v(op, modes);
    for (int i = 0; i < modes; ++i) v[static_cast<std::size_t>(i)] = z[static_cast<std::size_t>(i)] * std::pow(i + 1.0, -decay);
    out.push_back(std::move(v));
  }
  return out;
}

/// C_hat_r = max over samples of max(W/V, V/W) with W = ||v||_{W^{2r,2}} on the
/// M-point grid and V = ||v||_{V_r}. Zero samples are skipped.
inline EquivalenceEstimate equivalence_constant_estimate(double r, std::span<const SpectralField> samples, int m_points) {
  if (!(r > 0.0 && r < 0.5)) throw std::domain_error("equivalence_constant_estimate: r must lie in (0,1/2)");
  if (std::abs(r - 0.25) < 1e-12) throw std::domain_error("equivalence_constant_estimate: r = 1/4 is excluded");
  EquivalenceEstimate est;
  est.r = r;
  est.m_points = m_points;
  for (const auto& v : samples) {
    const double spectral = fractional_norm(v, r);
    if (!(spectral > 0.0)) {
      ++est.samples_skipped;
      continue;
    }
    const double sob = slobodeckij_norm(from_spectral(v, m_points), 2.0 * r);
    est.c_hat = std::max({est.c_hat, sob / spectral, spectral / sob});
    ++est.samples_used;
  }
  return est;
}

/// Default sampling used wherever an empirical C_r is needed downstream.
inline EquivalenceEstimate equivalence_constant_estimate(double r, int sample_count = 50, int m_points = 128,
                                                         std::uint64_t seed = 20240601) {
  const auto samples = random_dirichlet_fields(sample_count, 16, 1.0, seed);
  return equivalence_constant_estimate(r, samples, m_points);
}

struct InequalityReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double constant = 0.0;
  double slack = std::numeric_limits<double>::infinity();  // rhs / lhs
  bool pass = false;
};

/// ||v w||_{W^{r,2}} <= (3d)^{d/2} / sqrt(delta - r) ||v||_{W^{r,2}} ||w||_{C^delta}.
inline InequalityReport multiplication_inequality_check(const GridField& v, const GridField& w, double r, double delta) {
  if (!(r > 0.0 && r < delta && delta <= 1.0))
    throw std::domain_error("multiplication_inequality_check: need 0 < r < delta <= 1");
  if (v.dim() != w.dim() || v.m_points() != w.m_points()) throw ShapeError("multiplication_inequality_check: grid mismatch");
  GridField vw = v;
  for (std::size_t k = 0; k < vw.size(); ++k) vw[k] *= w[k];
  const int d = v.dim();
  InequalityReport rep;
  rep.constant = std::pow(3.0 * d, 0.5 * d) / std::sqrt(delta - r);
  rep.lhs = slobodeckij_norm(vw, r);
  rep.rhs = rep.constant * slobodeckij_norm(v, r) * holder_norm(w, delta);
  if (rep.lhs > 0.0) rep.slack = rep.rhs / rep.lhs;
  rep.pass = rep.lhs <= rep.rhs;
  return rep;
}

/// ||b(., v)||_{W^{r,2}} <= q (3d)^d / (1 - r) (1 + ||v||_{W^{r,2}}).
inline InequalityReport composition_bound_check(const NemytskiiPair& pair, const GridField& v, double r) {
  if (!(r > 0.0 && r < 1.0)) throw std::domain_error("composition_bound_check: r must lie in (0,1)");
  const int d = v.dim();
  InequalityReport rep;
  rep.constant = pair.q * std::pow(3.0 * d, d) / (1.0 - r);
  rep.lhs = slobodeckij_norm(eval_b(pair, v), r);
  rep.rhs = rep.constant * (1.0 + slobodeckij_norm(v, r));
  if (rep.lhs > 0.0) rep.slack = rep.rhs / rep.lhs;
  rep.pass = rep.lhs <= rep.rhs;
  return rep;
}

}  // namespace sglab
