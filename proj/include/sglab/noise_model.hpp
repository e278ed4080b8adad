#pragma once

// Covariance spectra (mu_j, g_j) of Q, Wiener increments in U_0 coordinates,
// and the eigenfunction Hoelder-sum condition on the g_j.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sglab/rng.hpp"
#include "sglab/spectral_space.hpp"
#include "sglab/transforms.hpp"

namespace sglab {

/// cosine:      d = 1, g_0 = 1 (mu_0 = 0), g_j = sqrt(2) cos(j pi x), mu_j = nu j^-rho, j = 1..J
/// commutative: g_j = e_j, mu_j = nu (j_1 + ... + j_d)^-rho, j in {1..J}^d
/// custom:      d = 1, g_j = e_j, mu_j listed explicitly, j = 1..J
enum class NoiseKind { cosine, commutative, custom };

inline std::string_view to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::cosine: return "cosine";
    case NoiseKind::commutative: return "commutative";
    case NoiseKind::custom: return "custom";
  }
  return "?";
}

inline NoiseKind noise_kind_from_string(std::string_view s) {
  if (s == "cosine") return NoiseKind::cosine;
  if (s == "commutative") return NoiseKind::commutative;
  if (s == "custom") return NoiseKind::custom;
  throw std::invalid_argument("unknown noise kind '" + std::string(s) + "'");
}

struct CovarianceSpectrum {
  NoiseKind kind = NoiseKind::commutative;
  double nu = 1.0;
  double rho = 2.0;
  int n_noise = 1;  // J, per dimension
  int d = 1;
  std::vector<double> custom_mu;

  /// Structural checks only; trace class is reported by trace().
  void validate() const {
    if (d < 1) throw std::invalid_argument("CovarianceSpectrum: d must be >= 1");
    if (n_noise < 1) throw std::invalid_argument("CovarianceSpectrum: J must be >= 1");
    if (!(nu > 0.0)) throw std::invalid_argument("CovarianceSpectrum: nu must be > 0");
    if (kind != NoiseKind::custom && !(rho > 0.0)) throw std::invalid_argument("CovarianceSpectrum: rho must be > 0");
    if (kind != NoiseKind::commutative && d != 1)
      throw std::invalid_argument("CovarianceSpectrum: cosine and custom kinds are one dimensional");
    if (kind == NoiseKind::custom) {
      if (custom_mu.size() != static_cast<std::size_t>(n_noise))
        throw std::invalid_argument("CovarianceSpectrum: custom kind needs J eigenvalues");
      for (double m : custom_mu)
        if (!(m >= 0.0) || !std::isfinite(m)) throw std::invalid_argument("CovarianceSpectrum: mu_j must be >= 0");
    }
  }

  /// Number of sampled modes: J for one-index kinds, J^d for commutative.
  std::size_t mode_count() const {
    return kind == NoiseKind::commutative ? ipow(static_cast<std::size_t>(n_noise), d)
                                          : static_cast<std::size_t>(n_noise);
  }

  friend bool operator==(const CovarianceSpectrum&, const CovarianceSpectrum&) = default;
};

/// mu_j for one-index kinds; j = 0 is the constant cosine mode.
inline double mu(const CovarianceSpectrum& spec, int j) {
  if (spec.kind == NoiseKind::commutative) {
    if (spec.d != 1) throw std::invalid_argument("mu: commutative kind needs a multi-index");
    if (j < 1 || j > spec.n_noise) throw std::invalid_argument("mu: index outside truncation");
    return spec.nu * std::pow(static_cast<double>(j), -spec.rho);
  }
  if (spec.kind == NoiseKind::cosine) {
    if (j < 0 || j > spec.n_noise) throw std::invalid_argument("mu: index outside truncation");
    return j == 0 ? 0.0 : spec.nu * std::pow(static_cast<double>(j), -spec.rho);
  }
  if (j < 1 || j > spec.n_noise) throw std::invalid_argument("mu: index outside truncation");
  return spec.custom_mu[static_cast<std::size_t>(j - 1)];
}

inline double mu(const CovarianceSpectrum& spec, std::span<const int> j) {
  if (spec.kind != NoiseKind::commutative) {
    if (j.size() != 1) throw ShapeError("mu: one-index kind");
    return mu(spec, j[0]);
  }
  if (static_cast<int>(j.size()) != spec.d) throw ShapeError("mu: index dimension mismatch");
  double sum = 0.0;
  for (int c : j) {
    if (c < 1 || c > spec.n_noise) throw std::invalid_argument("mu: index outside truncation");
    sum += c;
  }
  return spec.nu * std::pow(sum, -spec.rho);
}

/// Eigenvalues of the sampled modes in flat order (row-major for commutative).
inline std::vector<double> noise_eigenvalues(const CovarianceSpectrum& spec) {
  std::vector<double> out(spec.mode_count());
  if (spec.kind != NoiseKind::commutative) {
    for (int j = 1; j <= spec.n_noise; ++j) out[static_cast<std::size_t>(j - 1)] = mu(spec, j);
    return out;
  }
  const auto n = static_cast<std::size_t>(spec.n_noise);
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    std::size_t rem = flat;
    double sum = 0.0;
    for (int k = 0; k < spec.d; ++k) {
      sum += static_cast<double>(rem % n + 1);
      rem /= n;
    }
    out[flat] = spec.nu * std::pow(sum, -spec.rho);
  }
  return out;
}

struct TraceReport {
  double truncated = 0.0;   // sum over sampled modes
  double tail_bound = 0.0;  // integral-comparison bound on the omitted modes
  bool trace_class = false;
};

inline double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

inline TraceReport trace(const CovarianceSpectrum& spec) {
  TraceReport rep;
  for (double m : noise_eigenvalues(spec)) rep.truncated += m;
  const double J = spec.n_noise;
  switch (spec.kind) {
    case NoiseKind::cosine:
      rep.trace_class = spec.rho > 1.0;
      rep.tail_bound = rep.trace_class ? spec.nu * std::pow(J, 1.0 - spec.rho) / (spec.rho - 1.0)
                                       : std::numeric_limits<double>::infinity();
      break;
    case NoiseKind::commutative:
      // #{j : j_1 + ... + j_d = s} <= s^{d-1}/(d-1)!, and every j outside the box has s > J.
      rep.trace_class = spec.rho > spec.d;
      rep.tail_bound = rep.trace_class
                           ? spec.nu * std::pow(J, spec.d - spec.rho) / ((spec.rho - spec.d) * factorial(spec.d - 1))
                           : std::numeric_limits<double>::infinity();
      break;
    case NoiseKind::custom:
      rep.trace_class = true;
      rep.tail_bound = 0.0;
      break;
  }
  return rep;
}

struct WienerIncrement {
  std::vector<double> xi;  // xi_j ~ N(0, mu_j dt), flat order of noise_eigenvalues
  double dt = 0.0;
};

/// Scales standard normals by sqrt(mu_j dt); draws come from the counter-based stream.
inline WienerIncrement sample_increment(std::span<const double> mu_values, double dt, const RngTuple& id) {
  if (!(dt > 0.0)) throw std::domain_error("sample_increment: dt must be > 0");
  WienerIncrement inc;
  inc.dt = dt;
  inc.xi.resize(mu_values.size());
  fill_standard_normal(id, inc.xi);
  for (std::size_t j = 0; j < inc.xi.size(); ++j)
    inc.xi[j] = mu_values[j] > 0.0 ? std::sqrt(mu_values[j] * dt) * inc.xi[j] : 0.0;
  return inc;
}

inline WienerIncrement sample_increment(const CovarianceSpectrum& spec, double dt, const RngTuple& id) {
  return sample_increment(noise_eigenvalues(spec), dt, id);
}

/// g_j at a point; `flat` indexes the sampled set (cosine: j = flat + 1).
inline double noise_eigenfunction(const CovarianceSpectrum& spec, std::size_t flat, std::span<const double> x) {
  if (spec.kind == NoiseKind::cosine)
    return std::sqrt(2.0) * std::cos(static_cast<double>(flat + 1) * pi * x[0]);
  double value = std::pow(2.0, 0.5 * spec.d);
  const auto n = static_cast<std::size_t>(spec.n_noise);
  for (int k = spec.d - 1; k >= 0; --k) {
    value *= std::sin(static_cast<double>(flat % n + 1) * pi * x[static_cast<std::size_t>(k)]);
    flat /= n;
  }
  return value;
}

inline GridField noise_eigenfunction_on_grid(const CovarianceSpectrum& spec, std::size_t flat, int m_points) {
  return GridField::sample(spec.d, m_points,
                           [&](std::span<const double> x) { return noise_eigenfunction(spec, flat, x); });
}

/// Evaluates sum_j c_j g_j on the M-point interior grid with one fast transform.
/// Requires J <= M so no sampled mode aliases.
inline GridField noise_on_grid(const CovarianceSpectrum& spec, std::span<const double> c, int m_points) {
  if (c.size() != spec.mode_count()) throw ShapeError("noise_on_grid: coefficient count mismatch");
  if (spec.n_noise > m_points) throw ShapeError("noise_on_grid: J must not exceed M");
  if (spec.kind == NoiseKind::cosine) {
    // DCT-I on nodes k/(M+1), k = 0..M+1; interior nodes are outputs 1..M.
    const int n = m_points + 2;
    std::vector<double> work(static_cast<std::size_t>(n), 0.0);
    for (std::size_t j = 0; j < c.size(); ++j) work[j + 1] = c[j] / std::sqrt(2.0);
    detail::r2r_inplace(detail::TrigKind::dct1, n, 1, work);
    return GridField(1, m_points, std::vector<double>(work.begin() + 1, work.end() - 1));
  }
  OperatorSpec op{spec.d, 1.0, 0.0};
  SpectralField s(op, spec.n_noise, std::vector<double>(c.begin(), c.end()));
  return from_spectral(s, m_points);
}

/// Upper bound for ||g_j||_{C^delta}.
///   commutative / custom: 2^{d/2+1} pi (sum_k j_k^2)^{delta/2}
///   cosine:               sqrt(2) (1 + 2^{1-delta} (j pi)^delta),  and 1 for g_0
inline double holder_norm_bound(const CovarianceSpectrum& spec, std::span<const int> j, double delta) {
  if (!(delta > 0.0 && delta <= 1.0)) throw std::domain_error("holder_norm_bound: delta must lie in (0,1]");
  if (spec.kind == NoiseKind::cosine) {
    if (j.size() != 1 || j[0] < 0) throw std::invalid_argument("holder_norm_bound: invalid cosine index");
    if (j[0] == 0) return 1.0;
    return std::sqrt(2.0) * (1.0 + std::pow(2.0, 1.0 - delta) * std::pow(j[0] * pi, delta));
  }
  const int d = spec.kind == NoiseKind::commutative ? spec.d : 1;
  if (static_cast<int>(j.size()) != d) throw ShapeError("holder_norm_bound: index dimension mismatch");
  double sq = 0.0;
  for (int c : j) {
    if (c < 1) throw std::invalid_argument("holder_norm_bound: index components must be >= 1");
    sq += static_cast<double>(c) * c;
  }
  return std::pow(2.0, 0.5 * d + 1.0) * pi * std::pow(sq, 0.5 * delta);
}

inline double holder_norm_bound(const CovarianceSpectrum& spec, int j, double delta) {
  const int idx[1] = {j};
  return holder_norm_bound(spec, std::span<const int>(idx, 1), delta);
}

struct EigenfunctionConditionReport {
  double delta = 0.0;
  double sup_norm = 0.0;       // sup_j ||g_j||_C
  double sum_truncated = 0.0;  // sum_{sampled j} mu_j (bound on ||g_j||_{C^delta})^2
  double tail_bound = 0.0;     // bound on the omitted part of the series
  bool pass = false;
};

/// Checks sup_j ||g_j||_C < inf and sum_j mu_j ||g_j||^2_{C^delta} < inf.
inline EigenfunctionConditionReport eigenfunction_condition_check(const CovarianceSpectrum& spec, double delta) {
  if (!(delta > 0.0 && delta <= 1.0)) throw std::domain_error("eigenfunction_condition_check: delta must lie in (0,1]");
  EigenfunctionConditionReport rep;
  rep.delta = delta;
  const double J = spec.n_noise;
  const double inf = std::numeric_limits<double>::infinity();
  switch (spec.kind) {
    case NoiseKind::cosine: {
      rep.sup_norm = std::sqrt(2.0);
      for (int j = 1; j <= spec.n_noise; ++j) {
        const double b = holder_norm_bound(spec, j, delta);
        rep.sum_truncated += mu(spec, j) * b * b;
      }
      // mu_j ||g_j||^2 <= 8 nu pi^2 j^{2 delta - rho}
      const double excess = spec.rho - 1.0 - 2.0 * delta;
      rep.tail_bound = excess > 0.0 ? 8.0 * spec.nu * pi * pi * std::pow(J, -excess) / excess : inf;
      break;
    }
    case NoiseKind::commutative: {
      rep.sup_norm = std::pow(2.0, 0.5 * spec.d);
      const auto mus = noise_eigenvalues(spec);
      const auto n = static_cast<std::size_t>(spec.n_noise);
      std::vector<int> idx(static_cast<std::size_t>(spec.d));
      for (std::size_t flat = 0; flat < mus.size(); ++flat) {
        std::size_t rem = flat;
        for (int k = spec.d - 1; k >= 0; --k) {
          idx[static_cast<std::size_t>(k)] = static_cast<int>(rem % n) + 1;
          rem /= n;
        }
        const double b = holder_norm_bound(spec, idx, delta);
        rep.sum_truncated += mus[flat] * b * b;
      }
      // mu_j ||g_j||^2 <= nu 2^{d+2} pi^2 s^{2 delta - rho} with s = j_1 + ... + j_d.
      const double excess = spec.rho - spec.d - 2.0 * delta;
      rep.tail_bound = excess > 0.0 ? spec.nu * std::pow(2.0, spec.d + 2.0) * pi * pi * std::pow(J, -excess) /
                                          (excess * factorial(spec.d - 1))
                                    : inf;
      break;
    }
    case NoiseKind::custom: {
      rep.sup_norm = std::sqrt(2.0);
      for (int j = 1; j <= spec.n_noise; ++j) {
        const double b = holder_norm_bound(spec, j, delta);
        rep.sum_truncated += mu(spec, j) * b * b;
      }
      rep.tail_bound = 0.0;
      break;
    }
  }
  rep.pass = std::isfinite(rep.sup_norm) && std::isfinite(rep.sum_truncated + rep.tail_bound);
  return rep;
}

/// Largest delta for which the Hoelder sum converges (open bound), capped at 1.
inline double eigenfunction_delta_supremum(const CovarianceSpectrum& spec) {
  switch (spec.kind) {
    case NoiseKind::cosine: return std::min(1.0, (spec.rho - 1.0) / 2.0);
    case NoiseKind::commutative: return std::min(1.0, (spec.rho - spec.d) / 2.0);
    case NoiseKind::custom: return 1.0;
  }
  return 0.0;
}

}  // namespace sglab
