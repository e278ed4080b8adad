#pragma once

// Critical spatial exponent from N-trends of E||Pi_N X||^2_{V_gamma}, temporal
// Hoelder exponents from increment moments, and verdicts against the
// predicted thresholds.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "sglab/coefficients.hpp"
#include "sglab/nemytskii.hpp"
#include "sglab/noise_model.hpp"

namespace sglab {

/// Smallest gamma above which the solution leaves V_gamma.
///   cosine noise:      min(3, rho + 1)/4, or min(4, rho + 1)/4 when b vanishes on the boundary
///   sine-basis noise:  (rho - d + 2)/4, capped at 1
inline double predicted_gamma_star(const NemytskiiPair& pair, const CovarianceSpectrum& spec) {
  switch (spec.kind) {
    case NoiseKind::cosine: {
      const double cap = boundary_compat_check(pair, spec.d).pass ? 4.0 : 3.0;
      return std::min(cap, spec.rho + 1.0) / 4.0;
    }
    case NoiseKind::commutative:
      return std::min(1.0, (spec.rho - spec.d + 2.0) / 4.0);
    case NoiseKind::custom:
      break;
  }
  throw std::invalid_argument("predicted_gamma_star: no threshold formula for custom spectra");
}

/// Exponent of the temporal Hoelder bound for V_r increments.
inline double predicted_temporal_exponent(double gamma_star, double r) { return std::min(gamma_star - r, 0.5); }

struct ScanPoint {
  int N = 0;
  double value = 0.0;
  double se = 0.0;  // zero for exact series
};

struct SlopeEntry {
  double gamma = 0.0;
  double slope = 0.0;     // log(S_N / S_{N/2}) / log 2 over the two largest N
  double se = 0.0;
  double slope_ls = 0.0;  // least squares over all N
};

struct SpatialScan {
  std::vector<SlopeEntry> slopes;
  std::optional<double> gamma_star;  // smallest grid gamma with slope > tol
  double bracket_lo = 0.0;           // largest grid gamma below it
  bool inconclusive = false;
  std::string note;
};

/// data[g] holds the scan over N for gamma_grid[g]; at least 4 distinct N required.
inline SpatialScan spatial_scan(std::span<const double> gamma_grid, const std::vector<std::vector<ScanPoint>>& data,
                                double slope_tol = 0.05) {
  if (gamma_grid.size() != data.size()) throw std::invalid_argument("spatial_scan: one series per gamma required");
  SpatialScan out;
  for (std::size_t g = 0; g < gamma_grid.size(); ++g) {
    std::vector<ScanPoint> pts = data[g];
    std::sort(pts.begin(), pts.end(), [](const ScanPoint& a, const ScanPoint& b) { return a.N < b.N; });
    pts.erase(std::unique(pts.begin(), pts.end(), [](const ScanPoint& a, const ScanPoint& b) { return a.N == b.N; }),
              pts.end());
    if (pts.size() < 4) {
      out.inconclusive = true;
      out.note = "fewer than 4 truncation levels";
      return out;
    }
    SlopeEntry e;
    e.gamma = gamma_grid[g];
    const auto& a = pts[pts.size() - 2];
    const auto& b = pts.back();
    if (!(a.value > 0.0) || !(b.value > 0.0)) throw std::invalid_argument("spatial_scan: moments must be positive");
    const double span_log = std::log(static_cast<double>(b.N) / a.N);
    e.slope = std::log(b.value / a.value) / span_log;
    e.se = std::hypot(a.se / a.value, b.se / b.value) / span_log;
    std::vector<double> lx, ly;
    for (const auto& p : pts) {
      lx.push_back(std::log(static_cast<double>(p.N)));
      ly.push_back(std::log(p.value));
    }
    e.slope_ls = least_squares_slope(lx, ly);
    out.slopes.push_back(e);
  }
  std::sort(out.slopes.begin(), out.slopes.end(), [](const SlopeEntry& a, const SlopeEntry& b) { return a.gamma < b.gamma; });
  for (std::size_t k = 0; k < out.slopes.size(); ++k) {
    if (out.slopes[k].slope > slope_tol) {
      out.gamma_star = out.slopes[k].gamma;
      out.bracket_lo = k > 0 ? out.slopes[k - 1].gamma : out.slopes[k].gamma;
      for (std::size_t m = k + 1; m < out.slopes.size(); ++m)
        if (out.slopes[m].slope <= slope_tol) {
          out.inconclusive = true;
          out.note = "slope profile is not monotone across the threshold";
        }
      break;
    }
  }
  if (!out.gamma_star) out.note = "no divergence on the gamma grid";
  return out;
}

struct IncrementPoint {
  double h = 0.0;
  double value = 0.0;  // E||X_{t+h} - X_t||^p_{V_r}
  double se = 0.0;
};

struct TemporalFit {
  double r = 0.0;
  double beta_hat = 0.0;
  double se = 0.0;
  double max_residual = 0.0;
  int points_used = 0;
};

/// beta_hat = (least-squares slope of log E||.||^p vs log h) / p, dropping h < 8 dt.
inline TemporalFit temporal_fit(double r, std::span<const IncrementPoint> data, double p = 2.0, double dt = 0.0) {
  std::vector<double> lx, ly;
  for (const auto& d : data) {
    if (!(d.value >= 0.0) || !std::isfinite(d.value)) throw std::invalid_argument("temporal_fit: negative or NaN increment");
    if (dt > 0.0 && d.h < 8.0 * dt * (1.0 - 1e-12)) continue;
    if (d.value == 0.0) throw std::invalid_argument("temporal_fit: zero increment moment");
    lx.push_back(std::log(d.h));
    ly.push_back(std::log(d.value));
  }
  if (lx.size() < 5) throw std::invalid_argument("temporal_fit: need at least 5 increments above the dt floor");
  const double slope = least_squares_slope(lx, ly);
  const auto n = static_cast<double>(lx.size());
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    mx += lx[k] / n;
    my += ly[k] / n;
  }
  double sxx = 0, rss = 0, max_res = 0;
  for (std::size_t k = 0; k < lx.size(); ++k) sxx += (lx[k] - mx) * (lx[k] - mx);
  for (std::size_t k = 0; k < lx.size(); ++k) {
    const double res = ly[k] - (my + slope * (lx[k] - mx));
    rss += res * res;
    max_res = std::max(max_res, std::abs(res));
  }
  TemporalFit fit;
  fit.r = r;
  fit.beta_hat = slope / p;
  fit.se = std::sqrt(rss / (n - 2.0) / sxx) / p;
  fit.max_residual = max_res;
  fit.points_used = static_cast<int>(lx.size());
  return fit;
}

struct VerdictCriteria {
  double gamma_halfwidth = 0.05;  // accepted |estimated - predicted|
  double temporal_tol = 0.05;
};

struct RegularityVerdict {
  std::string preset;
  double predicted_gamma_star = 0.0;
  std::optional<double> estimated_gamma_star;
  double bracket_lo = 0.0;
  std::vector<SlopeEntry> slopes;
  std::vector<TemporalFit> temporal;
  bool inconclusive = false;
  std::string note;
  bool pass = false;
};

inline RegularityVerdict make_verdict(std::string preset, double predicted, const SpatialScan& scan,
                                      std::vector<TemporalFit> temporal, const VerdictCriteria& crit = {}) {
  RegularityVerdict v;
  v.preset = std::move(preset);
  v.predicted_gamma_star = predicted;
  v.estimated_gamma_star = scan.gamma_star;
  v.bracket_lo = scan.bracket_lo;
  v.slopes = scan.slopes;
  v.temporal = std::move(temporal);
  v.inconclusive = scan.inconclusive;
  v.note = scan.note;
  bool ok = !scan.inconclusive && !scan.slopes.empty();
  if (ok) {
    // No divergence anywhere on the grid is consistent with gamma* beyond its top.
    if (scan.gamma_star) ok = std::abs(*scan.gamma_star - predicted) <= crit.gamma_halfwidth + 1e-12;
    else ok = predicted > scan.slopes.back().gamma;
  }
  for (const auto& t : v.temporal)
    if (std::abs(t.beta_hat - predicted_temporal_exponent(predicted, t.r)) > crit.temporal_tol + 1e-12) ok = false;
  v.pass = ok;
  return v;
}

inline nlohmann::ordered_json to_json(const RegularityVerdict& v) {
  nlohmann::ordered_json j;
  j["preset"] = v.preset;
  j["predicted_gamma_star"] = v.predicted_gamma_star;
  j["estimated_gamma_star"] = v.estimated_gamma_star ? nlohmann::ordered_json(*v.estimated_gamma_star) : nullptr;
  j["slopes"] = nlohmann::ordered_json::array();
  for (const auto& s : v.slopes) j["slopes"].push_back({{"gamma", s.gamma}, {"slope", s.slope}, {"se", s.se}});
  j["temporal"] = nlohmann::ordered_json::array();
  for (const auto& t : v.temporal) j["temporal"].push_back({{"r", t.r}, {"beta_hat", t.beta_hat}, {"se", t.se}});
  j["pass"] = v.pass;
  if (v.inconclusive || !v.note.empty()) j["note"] = v.note;
  return j;
}

/// One verdict per scanned preset.
struct ThresholdInput {
  std::string preset;
  double predicted = 0.0;
  std::vector<double> gamma_grid;
  std::vector<std::vector<ScanPoint>> scan;
  std::vector<TemporalFit> temporal;
  VerdictCriteria criteria;
};

inline std::vector<RegularityVerdict> threshold_table(const std::vector<ThresholdInput>& inputs, double slope_tol = 0.05) {
  std::vector<RegularityVerdict> out;
  for (const auto& in : inputs) {
    if (in.scan.empty()) {
      RegularityVerdict v;
      v.preset = in.preset;
      v.predicted_gamma_star = in.predicted;
      v.inconclusive = true;
      v.note = "missing scan data";
      out.push_back(v);
      continue;
    }
    out.push_back(make_verdict(in.preset, in.predicted, spatial_scan(in.gamma_grid, in.scan, slope_tol), in.temporal,
                               in.criteria));
  }
  return out;
}

/// gamma grid lo, lo + step, ..., hi (inclusive, rounded to the step).
inline std::vector<double> gamma_grid(double lo, double hi, double step) {
  std::vector<double> g;
  const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
  for (int k = 0; k <= n; ++k) g.push_back(std::round((lo + k * step) * 1e9) / 1e9);
  return g;
}

}  // namespace sglab
