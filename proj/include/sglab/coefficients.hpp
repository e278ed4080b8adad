#pragma once

// Hilbert-Schmidt norms of the multiplication-type diffusion B over U_0, the
// linear growth bound ||B(v)||_{HS(U_0,V_alpha)} <= c (1 + ||v||_{V_alpha}),
// and the boundary compatibility condition on b.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sglab/nemytskii.hpp"
#include "sglab/noise_model.hpp"
#include "sglab/rng.hpp"
#include "sglab/sobolev_norms.hpp"
#include "sglab/spectral_space.hpp"

namespace sglab {

/// Grid size used for products b(., v) g_j: twice oversampled, M = 2N + 1.
inline int oversampled_points(int n_modes) { return 2 * n_modes + 1; }

namespace detail {

// v resampled on the M-point grid (band-limited interpolation through the sine basis).
inline GridField resample(const GridField& v, int m_points) {
  if (v.m_points() == m_points) return v;
  const OperatorSpec op{v.dim(), 1.0, 0.0};
  return from_spectral(to_spectral(v, op, v.m_points()), m_points);
}

// Trapezoid weights on the closed grid k/(M+1), k = 0..M+1.
inline double trapezoid_weight(int k, int m) { return (k == 0 || k == m + 1) ? 0.5 : 1.0; }

// sum_j mu_j int c(x)^2 g_j(x)^2 dx by the closed-grid trapezoid rule, where
// c is given at interior nodes and `boundary` evaluates it on the boundary.
template <class BoundaryFn>
inline double hs_h_squared(std::span<const double> interior, int d, int m, const CovarianceSpectrum& spec,
                           BoundaryFn&& boundary) {
  const int n = m + 2;
  const std::size_t total = ipow(static_cast<std::size_t>(n), d);
  const double h = 1.0 / (m + 1);
  std::vector<double> weight_c2(total);
  std::vector<double> x(static_cast<std::size_t>(d));
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat, inner = 0, stride = 1;
    double w = 1.0;
    bool on_boundary = false;
    std::vector<int> k(static_cast<std::size_t>(d));
    for (int a = d - 1; a >= 0; --a) {
      k[static_cast<std::size_t>(a)] = static_cast<int>(rem % static_cast<std::size_t>(n));
      rem /= static_cast<std::size_t>(n);
    }
    for (int a = d - 1; a >= 0; --a) {
      const int c = k[static_cast<std::size_t>(a)];
      w *= trapezoid_weight(c, m) * h;
      x[static_cast<std::size_t>(a)] = c * h;
      if (c == 0 || c == m + 1) on_boundary = true;
      inner += static_cast<std::size_t>(c - 1) * stride;
      stride *= static_cast<std::size_t>(m);
    }
    const double c = on_boundary ? boundary(std::span<const double>(x)) : interior[inner];
    weight_c2[flat] = w * c * c;
  }
  const auto mus = noise_eigenvalues(spec);
  double sum = 0.0;
  for (std::size_t j = 0; j < mus.size(); ++j) {
    if (mus[j] == 0.0) continue;
    double integral = 0.0;
    for (std::size_t flat = 0; flat < total; ++flat) {
      if (weight_c2[flat] == 0.0) continue;
      std::size_t rem = flat;
      for (int a = d - 1; a >= 0; --a) {
        x[static_cast<std::size_t>(a)] = static_cast<double>(rem % static_cast<std::size_t>(n)) * h;
        rem /= static_cast<std::size_t>(n);
      }
      const double g = noise_eigenfunction(spec, j, x);
      integral += weight_c2[flat] * g * g;
    }
    sum += mus[j] * integral;
  }
  return sum;
}

}  // namespace detail

/// ||B(v)||_{HS(U_0, V_r)} = (sum_j mu_j ||Pi_N (b(., v) g_j)||^2_{V_r})^{1/2}.
///
/// The products are formed on the 2N+1 point grid. For r = 0 the H norms are
/// taken without projection, by the closed-grid trapezoid rule (v = 0 on the
/// boundary), so the value is the HS(U_0, H) norm itself.
inline double hs_norm_B(const NemytskiiPair& pair, const GridField& v, const CovarianceSpectrum& spec,
                        const OperatorSpec& op, double r, int n_modes) {
  if (!(r >= 0.0)) throw std::domain_error("hs_norm_B: r must be >= 0");
  if (v.dim() != op.d || spec.d != op.d) throw ShapeError("hs_norm_B: dimension mismatch");
  const int m = oversampled_points(n_modes);
  const GridField vm = detail::resample(v, m);
  const GridField bv = eval_b(pair, vm);
  if (r == 0.0) {
    const double sq = detail::hs_h_squared(bv.values(), op.d, m, spec,
                                           [&](std::span<const double> x) { return pair.b(x, 0.0); });
    return std::sqrt(sq);
  }
  const auto lambda = eigenvalues(op, n_modes);
  const auto mus = noise_eigenvalues(spec);
  double sum = 0.0;
  for (std::size_t j = 0; j < mus.size(); ++j) {
    if (mus[j] == 0.0) continue;
    GridField prod = noise_eigenfunction_on_grid(spec, j, m);
    for (std::size_t k = 0; k < prod.size(); ++k) prod[k] *= bv[k];
    const SpectralField proj = to_spectral(prod, op, n_modes);
    sum += mus[j] * fractional_norm_sq(proj.coeffs(), lambda, r);
  }
  return std::sqrt(sum);
}

inline double hs_norm_B(const NemytskiiPair& pair, const SpectralField& v, const CovarianceSpectrum& spec, double r) {
  return hs_norm_B(pair, from_spectral(v, oversampled_points(v.n_modes())), spec, v.op(), r, v.n_modes());
}

/// ||B(v) - B(w)||_{HS(U_0, H)} by the closed-grid trapezoid rule.
inline double hs_difference_H(const NemytskiiPair& pair, const GridField& v, const GridField& w,
                              const CovarianceSpectrum& spec) {
  if (v.dim() != w.dim() || v.m_points() != w.m_points()) throw ShapeError("hs_difference_H: grid mismatch");
  const GridField bv = eval_b(pair, v), bw = eval_b(pair, w);
  std::vector<double> diff(bv.size());
  for (std::size_t k = 0; k < diff.size(); ++k) diff[k] = bv[k] - bw[k];
  return std::sqrt(detail::hs_h_squared(diff, v.dim(), v.m_points(), spec, [](std::span<const double>) { return 0.0; }));
}

struct BoundaryCompatReport {
  bool applicable = true;   // the diagonal-trace condition is one dimensional
  double lower_limit = 0.0; // b(x, x) at the smallest x probed
  double upper_limit = 0.0; // b(x, x - 1) at the x closest to 1
  bool pass = false;
};

/// Evaluates b(x, x) as x -> 0 and b(x, x - 1) as x -> 1 along x = 10^{-k} and
/// x = 1 - 10^{-k}, k = 1..12; passes iff both ends are within tol of zero and
/// the sequences are not growing.
inline BoundaryCompatReport boundary_compat_check(const NemytskiiPair& pair, int d, double tol = 1e-6) {
  BoundaryCompatReport rep;
  if (d != 1) {
    rep.applicable = false;
    return rep;
  }
  double first_lo = 0.0, first_hi = 0.0;
  for (int k = 1; k <= 12; ++k) {
    const double eps = std::pow(10.0, -k);
    const double lo_x[1] = {eps};
    const double hi_x[1] = {1.0 - eps};
    rep.lower_limit = pair.b(std::span<const double>(lo_x, 1), eps);
    rep.upper_limit = pair.b(std::span<const double>(hi_x, 1), -eps);
    if (k == 1) {
      first_lo = std::abs(rep.lower_limit);
      first_hi = std::abs(rep.upper_limit);
    }
  }
  rep.pass = std::abs(rep.lower_limit) <= tol && std::abs(rep.upper_limit) <= tol &&
             std::abs(rep.lower_limit) <= first_lo + tol && std::abs(rep.upper_limit) <= first_hi + tol;
  return rep;
}

/// True when B(v) g_j vanishes on the boundary for every v: either b respects
/// the Dirichlet condition or every g_j is a Dirichlet eigenfunction.
inline bool boundary_compatible(const NemytskiiPair& pair, const CovarianceSpectrum& spec) {
  if (spec.kind != NoiseKind::cosine) return true;
  return boundary_compat_check(pair, spec.d).pass;
}

/// Largest alpha (exclusive) for which the growth bound is certified.
inline double certified_alpha_limit(const NemytskiiPair& pair, const CovarianceSpectrum& spec) {
  const double half_delta = 0.5 * eigenfunction_delta_supremum(spec);
  return boundary_compatible(pair, spec) ? std::min(0.5, half_delta) : std::min(0.25, half_delta);
}

/// Reference constant c with ||B(v)||_{HS(U_0,V_alpha)} <= c (1 + ||v||_{V_alpha}).
///
/// alpha = 0:  q sqrt(Tr Q) sup_j ||g_j||_C.
/// alpha > 0:  q C_alpha^2 (3d)^{2d} / (delta - 2 alpha)^2 (sum_j mu_j ||g_j||^2_{C^delta})^{1/2},
///             with the empirical C_alpha and delta midway between 2 alpha and
///             its admissible supremum (delta = 1 when the Hoelder sum converges at 1).
/// Returns +inf outside the certified range or at alpha = 1/4.
inline double growth_reference_constant(const NemytskiiPair& pair, const CovarianceSpectrum& spec, double alpha) {
  const double inf = std::numeric_limits<double>::infinity();
  if (alpha == 0.0) {
    const auto tr = trace(spec);
    const auto cond = eigenfunction_condition_check(spec, 1.0);
    return tr.trace_class ? pair.q * std::sqrt(tr.truncated + tr.tail_bound) * cond.sup_norm : inf;
  }
  if (!(alpha > 0.0) || alpha >= certified_alpha_limit(pair, spec) || std::abs(alpha - 0.25) < 1e-9) return inf;
  double delta_sup = 1.0;
  bool closed_at_one = false;
  switch (spec.kind) {
    case NoiseKind::cosine:
      delta_sup = (spec.rho - 1.0) / 2.0;
      break;
    case NoiseKind::commutative:
      delta_sup = (spec.rho - spec.d) / 2.0;
      break;
    case NoiseKind::custom:
      delta_sup = 1.0;
      closed_at_one = true;
      break;
  }
  double delta = 0.0;
  if (delta_sup > 1.0 || closed_at_one) delta = 1.0;
  else delta = 0.5 * (2.0 * alpha + delta_sup);
  if (!(delta > 2.0 * alpha)) return inf;
  const auto cond = eigenfunction_condition_check(spec, delta);
  if (!cond.pass) return inf;
  const double c_alpha = equivalence_constant_estimate(alpha).c_hat;
  const int d = spec.d;
  return pair.q * c_alpha * c_alpha * std::pow(3.0 * d, 2.0 * d) / ((delta - 2.0 * alpha) * (delta - 2.0 * alpha)) *
         std::sqrt(cond.sum_truncated + cond.tail_bound);
}

struct GrowthLevel {
  int n_modes = 0;
  double max_ratio = 0.0;
  double mean_ratio = 0.0;
  std::vector<double> ratios;  // per sample
};

struct GrowthReport {
  double alpha = 0.0;
  std::vector<GrowthLevel> levels;
  double slope = 0.0;     // log max_ratio^2 vs log N over the finest pair of truncations
  double slope_ls = 0.0;  // least squares over all truncations
  double reference_constant = 0.0;
  double certified_limit = 0.0;
  bool within_reference = false;
};

/// Random V_alpha field with a_i = lambda_i^{-alpha-1/2-0.01} Z_i; the normals
/// are keyed by (seed, sample, mode) so truncations are nested.
inline SpectralField random_v_alpha_field(const OperatorSpec& op, int n_modes, double alpha, std::uint64_t seed,
                                          std::uint64_t sample) {
  SpectralField v(op, n_modes);
  const auto lambda = eigenvalues(op, n_modes);
  const RngTuple id{seed, static_cast<std::uint32_t>(Stream::field_sampler), sample, 0};
  const double expo = -alpha - 0.5 - 0.01;
  for (std::size_t k = 0; k < v.size(); ++k) {
    // Key on the multi-index so the coefficient of e_i is the same for every N.
    const auto idx = v.multi_index(k);
    std::uint64_t key = 0;
    for (int c : idx) key = key * 65536u + static_cast<std::uint64_t>(c - 1);
    v[k] = std::pow(lambda[k], expo) * standard_normal(id, key);
  }
  return v;
}

inline double log_slope(double x0, double y0, double x1, double y1) { return std::log(y1 / y0) / std::log(x1 / x0); }

inline double least_squares_slope(std::span<const double> x, std::span<const double> y) {
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sx += x[k];
    sy += y[k];
    sxx += x[k] * x[k];
    sxy += x[k] * y[k];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Ratio ||B(v)||_{HS(U_0,V_alpha)} / (1 + ||v||_{V_alpha}) over random fields,
/// for each truncation N (noise truncation J = N unless fixed_noise > 0).
inline GrowthReport growth_bound_check(const NemytskiiPair& pair, const CovarianceSpectrum& spec,
                                       const OperatorSpec& op, double alpha, int sample_count,
                                       std::span<const int> n_list, std::uint64_t seed = 7,
                                       int fixed_noise = 0) {
  if (n_list.empty()) throw std::invalid_argument("growth_bound_check: empty N list");
  if (!(alpha >= 0.0)) throw std::domain_error("growth_bound_check: alpha must be >= 0");
  if (sample_count < 1) throw std::invalid_argument("growth_bound_check: need at least one sample");
  GrowthReport rep;
  rep.alpha = alpha;
  for (int n : n_list) {
    CovarianceSpectrum s = spec;
    s.n_noise = fixed_noise > 0 ? fixed_noise : n;
    if (s.kind == NoiseKind::custom && s.custom_mu.size() != static_cast<std::size_t>(s.n_noise))
      throw std::invalid_argument("growth_bound_check: custom spectra need a fixed noise truncation");
    GrowthLevel level;
    level.n_modes = n;
    for (int k = 0; k < sample_count; ++k) {
      const SpectralField v = random_v_alpha_field(op, n, alpha, seed, static_cast<std::uint64_t>(k));
      const double hs = hs_norm_B(pair, v, s, alpha);
      const double ratio = hs / (1.0 + fractional_norm(v, alpha));
      level.ratios.push_back(ratio);
      level.max_ratio = std::max(level.max_ratio, ratio);
      level.mean_ratio += ratio / sample_count;
    }
    rep.levels.push_back(std::move(level));
  }
  if (rep.levels.size() >= 2) {
    const auto& a = rep.levels[rep.levels.size() - 2];
    const auto& b = rep.levels.back();
    rep.slope = log_slope(a.n_modes, a.max_ratio * a.max_ratio, b.n_modes, b.max_ratio * b.max_ratio);
    std::vector<double> lx, ly;
    for (const auto& l : rep.levels) {
      lx.push_back(std::log(static_cast<double>(l.n_modes)));
      ly.push_back(2.0 * std::log(l.max_ratio));
    }
    rep.slope_ls = least_squares_slope(lx, ly);
  }
  CovarianceSpectrum s = spec;
  s.n_noise = fixed_noise > 0 ? fixed_noise : n_list.back();
  rep.certified_limit = certified_alpha_limit(pair, s);
  rep.reference_constant = growth_reference_constant(pair, s, alpha);
  double worst = 0.0;
  for (const auto& l : rep.levels) worst = std::max(worst, l.max_ratio);
  rep.within_reference = worst <= rep.reference_constant;
  return rep;
}

struct LipschitzSpotReport {
  double max_ratio = 0.0;  // max |b(x1,y1) - b(x2,y2)| / (q (|x1-x2| + |y1-y2|))
  double b0_l2_sq = 0.0;   // int |b(x, 0)|^2 dx
  bool pass = false;
};

/// Spot check of the joint Lipschitz bound on random pairs and of int |b(x,0)|^2 <= q^2.
inline LipschitzSpotReport lipschitz_spot_check(const NemytskiiPair& pair, int d, int count, std::uint64_t seed) {
  LipschitzSpotReport rep;
  std::vector<double> z(static_cast<std::size_t>(2 * d + 2));
  std::vector<double> x1(static_cast<std::size_t>(d)), x2(static_cast<std::size_t>(d));
  for (int s = 0; s < count; ++s) {
    const RngTuple id{seed, static_cast<std::uint32_t>(Stream::test_fields), static_cast<std::uint64_t>(s), 1};
    fill_standard_normal(id, z);
    double dx = 0.0;
    for (int k = 0; k < d; ++k) {
      // Map normals into (0,1) through the logistic function.
      x1[static_cast<std::size_t>(k)] = 1.0 / (1.0 + std::exp(-z[static_cast<std::size_t>(k)]));
      x2[static_cast<std::size_t>(k)] = 1.0 / (1.0 + std::exp(-z[static_cast<std::size_t>(d + k)]));
      dx += std::pow(x1[static_cast<std::size_t>(k)] - x2[static_cast<std::size_t>(k)], 2);
    }
    const double y1 = 3.0 * z[static_cast<std::size_t>(2 * d)], y2 = 3.0 * z[static_cast<std::size_t>(2 * d + 1)];
    const double denom = pair.q * (std::sqrt(dx) + std::abs(y1 - y2));
    const double num = std::abs(pair.b(x1, y1) - pair.b(x2, y2));
    if (denom > 0.0) rep.max_ratio = std::max(rep.max_ratio, num / denom);
    else if (num > 0.0) rep.max_ratio = std::numeric_limits<double>::infinity();
  }
  const int m = 255;
  const GridField zero(d, m);
  const GridField b0 = eval_b(pair, zero);
  for (double v : b0.values()) rep.b0_l2_sq += v * v;
  rep.b0_l2_sq *= std::pow(1.0 / (m + 1), d);
  rep.pass = rep.max_ratio <= 1.0 + 1e-12 && rep.b0_l2_sq <= pair.q * pair.q * (1.0 + 1e-9);
  return rep;
}

}  // namespace sglab
