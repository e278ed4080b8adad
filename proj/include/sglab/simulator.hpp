#pragma once

// Exponential Euler integration of dX = (AX + F(X)) dt + B(X) dW over the
// spectral Galerkin space, Monte Carlo moments, and exact series for the
// Ornstein-Uhlenbeck special cases (f = 0, state independent b).
//
// One step, per mode k:
//   X_{n+1,k} = e^{-lambda_k dt} (X_{n,k} + dt F_k(X_n)) + D_k [Pi_N B(X_n) dW_n]_k,
//   D_k = sqrt((1 - e^{-2 lambda_k dt}) / (2 lambda_k dt)).
// D_k makes the noise variance per step exact for state-independent b; the
// plain e^{-lambda dt} factor biases high modes low.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "sglab/coefficients.hpp"
#include "sglab/nemytskii.hpp"
#include "sglab/noise_model.hpp"
#include "sglab/rng.hpp"
#include "sglab/spectral_space.hpp"

namespace sglab {

/// Named initial profiles; coefficients are on e_i with the flat order of SpectralField.
///   zero, first_mode (e_1), parabola (4x(1-x) in d = 1), coefficients (explicit list)
struct InitialCondition {
  std::string profile = "zero";
  std::vector<double> coeffs;

  SpectralField build(const OperatorSpec& op, int n_modes) const {
    SpectralField v(op, n_modes);
    if (profile == "zero") return v;
    if (profile == "first_mode") {
      v[0] = 1.0;
      return v;
    }
    if (profile == "parabola") {
      if (op.d != 1) throw std::invalid_argument("initial profile 'parabola' is one dimensional");
      // <4x(1-x), sqrt2 sin(k pi x)> = 16 sqrt2 / (k pi)^3 for odd k.
      for (int k = 1; k <= n_modes; k += 2) v[static_cast<std::size_t>(k - 1)] = 16.0 * std::sqrt(2.0) / std::pow(k * pi, 3);
      return v;
    }
    if (profile == "coefficients") {
      if (coeffs.size() > v.size()) throw std::invalid_argument("initial coefficients exceed the truncation");
      std::copy(coeffs.begin(), coeffs.end(), v.coeffs().begin());
      return v;
    }
    throw std::invalid_argument("unknown initial profile '" + profile + "'");
  }
};

struct SimulationConfig {
  OperatorSpec op;
  CovarianceSpectrum spec;
  NemytskiiPair pair = make_preset("additive_one");
  InitialCondition initial;
  double T = 1.0;
  int n_steps = 1024;
  int n_modes = 64;
  int n_traj = 100;
  double p = 2.0;
  std::uint64_t seed = 1;
  std::vector<double> checkpoints{1.0};

  double dt() const { return T / n_steps; }

  /// Step index of time t, or -1 when t is off the step grid.
  long step_of(double t) const {
    const double s = t / dt();
    const double r = std::round(s);
    if (std::abs(s - r) > 1e-9 * std::max(1.0, r) || r < 0 || r > n_steps) return -1;
    return static_cast<long>(r);
  }

  void validate() const {
    op.validate();
    spec.validate();
    if (spec.d != op.d) throw std::invalid_argument("simulation: noise and operator dimensions differ");
    if (!(T > 0.0)) throw std::invalid_argument("simulation: T must be > 0");
    if (n_steps < 1) throw std::invalid_argument("simulation: n_steps must be >= 1");
    if (n_modes < 1) throw std::invalid_argument("simulation: N must be >= 1");
    if (n_traj < 1) throw std::invalid_argument("simulation: n_traj must be >= 1");
    if (!(p >= 2.0)) throw std::invalid_argument("simulation: p must be >= 2");
    if (spec.n_noise > oversampled_points(n_modes))
      throw std::invalid_argument("simulation: noise truncation J exceeds the 2N+1 point grid");
    for (double t : checkpoints)
      if (step_of(t) < 0) throw std::invalid_argument("simulation: checkpoint " + std::to_string(t) + " is off the step grid");
  }
};

/// Precomputed per-mode factors and grid sizes for one configuration.
class Stepper {
 public:
  explicit Stepper(const SimulationConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    m_ = oversampled_points(cfg_.n_modes);
    lambda_ = eigenvalues(cfg_.op, cfg_.n_modes);
    const double dt = cfg_.dt();
    decay_.resize(lambda_.size());
    damp_.resize(lambda_.size());
    for (std::size_t k = 0; k < lambda_.size(); ++k) {
      decay_[k] = std::exp(-lambda_[k] * dt);
      const double x = 2.0 * lambda_[k] * dt;
      damp_[k] = std::sqrt(-std::expm1(-x) / x);
    }
    mu_ = noise_eigenvalues(cfg_.spec);
    // With b == 1 and sine-basis noise the projection of dW is read off directly.
    direct_noise_ = cfg_.pair.b_unit && cfg_.spec.kind != NoiseKind::cosine;
  }

  const SimulationConfig& config() const { return cfg_; }

  /// Advances x from step n to n + 1 for trajectory traj.
  void step(SpectralField& x, std::uint64_t traj, std::uint64_t n) const {
    const RngTuple id{cfg_.seed, static_cast<std::uint32_t>(Stream::wiener), traj, n};
    step_with(x, sample_increment(mu_, cfg_.dt(), id).xi);
  }

  /// Same update with a given increment xi_j ~ N(0, mu_j dt) (coupled paths).
  void step_with(SpectralField& x, std::span<const double> xi) const {
    const double dt = cfg_.dt();
    const auto& pair = cfg_.pair;
    const bool need_grid = !pair.f_zero || !direct_noise_;
    GridField u = need_grid ? from_spectral(x, m_) : GridField(cfg_.op.d, 1);

    if (!pair.f_zero) {
      const SpectralField drift = to_spectral(apply_F(pair, u), cfg_.op, cfg_.n_modes);
      for (std::size_t k = 0; k < x.size(); ++k) x[k] += dt * drift[k];
    }
    for (std::size_t k = 0; k < x.size(); ++k) x[k] *= decay_[k];

    if (direct_noise_) {
      SpectralField w(cfg_.op, cfg_.n_modes);
      detail::copy_box(xi, cfg_.spec.n_noise, w.coeffs(), cfg_.n_modes, cfg_.op.d);
      for (std::size_t k = 0; k < x.size(); ++k) x[k] += damp_[k] * w[k];
      return;
    }
    GridField noise = noise_on_grid(cfg_.spec, xi, m_);
    const GridField bv = eval_b(pair, u);
    for (std::size_t k = 0; k < noise.size(); ++k) noise[k] *= bv[k];
    const SpectralField w = to_spectral(noise, cfg_.op, cfg_.n_modes);
    for (std::size_t k = 0; k < x.size(); ++k) x[k] += damp_[k] * w[k];
  }

  std::span<const double> lambda() const { return lambda_; }
  std::span<const double> noise_variances() const { return mu_; }
  int grid_points() const { return m_; }

 private:
  SimulationConfig cfg_;
  int m_ = 0;
  std::vector<double> lambda_, decay_, damp_, mu_;
  bool direct_noise_ = false;
};

/// Single step from step index n (time t_n = n dt).
inline SpectralField step(const SpectralField& state, long n, const SimulationConfig& cfg, std::uint64_t traj) {
  SpectralField x = state;
  Stepper(cfg).step(x, traj, static_cast<std::uint64_t>(n));
  return x;
}

inline bool finite_state(const SpectralField& x) {
  for (double c : x.coeffs())
    if (!std::isfinite(c) || std::abs(c) > 1e150) return false;
  return true;
}

struct TrajectoryResult {
  std::vector<double> times;
  std::vector<SpectralField> states;
  bool diverged = false;
};

/// States at the requested times (sorted, on the step grid). Deterministic in (seed, traj).
inline TrajectoryResult simulate_trajectory(const Stepper& stepper, std::uint64_t traj, std::vector<double> times) {
  const auto& cfg = stepper.config();
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  std::vector<long> at;
  for (double t : times) {
    const long s = cfg.step_of(t);
    if (s < 0) throw std::invalid_argument("simulate_trajectory: time off the step grid");
    at.push_back(s);
  }
  TrajectoryResult res;
  res.times = times;
  SpectralField x = cfg.initial.build(cfg.op, cfg.n_modes);
  std::size_t next = 0;
  const long last = at.empty() ? 0 : at.back();
  for (long n = 0;; ++n) {
    while (next < at.size() && at[next] == n) {
      res.states.push_back(x);
      ++next;
    }
    if (n >= last) break;
    stepper.step(x, traj, static_cast<std::uint64_t>(n));
    if (!finite_state(x)) {
      res.diverged = true;
      while (res.states.size() < times.size()) res.states.push_back(x);
      break;
    }
  }
  return res;
}

inline TrajectoryResult simulate_trajectory(const SimulationConfig& cfg, std::uint64_t traj) {
  return simulate_trajectory(Stepper(cfg), traj, cfg.checkpoints);
}

struct MomentRow {
  double t = 0.0;
  double r = 0.0;
  double p = 2.0;
  double estimate = 0.0;
  double std_error = 0.0;
  int n_traj = 0;
  int N = 0;
  int J = 0;
  double dt = 0.0;
};

struct IncrementRow {
  double t = 0.0;
  double h = 0.0;
  double r = 0.0;
  double p = 2.0;
  double estimate = 0.0;
  double std_error = 0.0;
  int n_traj = 0;
  int N = 0;
  int J = 0;
  double dt = 0.0;
};

using MomentTable = std::vector<MomentRow>;
using IncrementTable = std::vector<IncrementRow>;

struct EnsembleRequest {
  std::vector<double> r_list{0.0};
  std::vector<double> p_list;  // empty: the config's p
  double increment_base = -1.0; // t for E||X_{t+h} - X_t||^p; negative disables increments
  std::vector<double> h_list;
};

struct EnsembleResult {
  MomentTable moments;
  IncrementTable increments;
  int diverged = 0;
  int used = 0;
};

struct EnsembleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Runs `count` independent jobs on up to `workers` threads; job k writes only slot k.
template <class Job>
inline void parallel_for(int count, int workers, Job&& job) {
  workers = std::max(1, std::min(workers, count));
  if (workers == 1) {
    for (int k = 0; k < count; ++k) job(k);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int k = next.fetch_add(1); k < count; k = next.fetch_add(1)) {
        try {
          job(k);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

namespace detail {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

// Index-ordered reduction so the result does not depend on scheduling.
inline MeanSe mean_se(const std::vector<double>& values, const std::vector<char>& keep) {
  double sum = 0.0;
  int n = 0;
  for (std::size_t k = 0; k < values.size(); ++k)
    if (keep[k]) {
      sum += values[k];
      ++n;
    }
  MeanSe out;
  if (n == 0) return out;
  out.mean = sum / n;
  if (n > 1) {
    double ss = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k)
      if (keep[k]) ss += (values[k] - out.mean) * (values[k] - out.mean);
    out.se = std::sqrt(ss / (n - 1) / n);
  }
  return out;
}

}  // namespace detail

/// Monte Carlo moments E||X_t||^p_{V_r} at the checkpoints and, optionally,
/// increment moments E||X_{t+h} - X_t||^p_{V_r}. Diverged trajectories are
/// excluded and counted.
inline EnsembleResult run_ensemble(const SimulationConfig& cfg, const EnsembleRequest& req, int workers = 1) {
  const Stepper stepper(cfg);
  const auto& lambda = stepper.lambda();
  std::vector<double> p_list = req.p_list.empty() ? std::vector<double>{cfg.p} : req.p_list;
  for (double p : p_list)
    if (!(p >= 2.0)) throw std::invalid_argument("run_ensemble: p must be >= 2");

  std::vector<double> times = cfg.checkpoints;
  const bool with_inc = req.increment_base >= 0.0 && !req.h_list.empty();
  if (with_inc) {
    times.push_back(req.increment_base);
    for (double h : req.h_list) times.push_back(req.increment_base + h);
  }
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }),
              times.end());
  auto time_slot = [&](double t) {
    for (std::size_t k = 0; k < times.size(); ++k)
      if (std::abs(times[k] - t) < 1e-12) return k;
    throw std::logic_error("run_ensemble: missing time");
  };

  std::vector<double> checkpoints = cfg.checkpoints;
  std::sort(checkpoints.begin(), checkpoints.end());
  const std::size_t nr = req.r_list.size();
  const std::size_t n_mom = checkpoints.size() * nr;
  const std::size_t n_inc = with_inc ? req.h_list.size() * nr : 0;
  // Squared norms per trajectory; moments of order p are (.)^{p/2}.
  std::vector<std::vector<double>> mom_sq(n_mom, std::vector<double>(static_cast<std::size_t>(cfg.n_traj)));
  std::vector<std::vector<double>> inc_sq(n_inc, std::vector<double>(static_cast<std::size_t>(cfg.n_traj)));
  std::vector<char> keep(static_cast<std::size_t>(cfg.n_traj), 1);

  parallel_for(cfg.n_traj, workers, [&](int traj) {
    const auto res = simulate_trajectory(stepper, static_cast<std::uint64_t>(traj), times);
    const auto k = static_cast<std::size_t>(traj);
    if (res.diverged) {
      keep[k] = 0;
      return;
    }
    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
      const auto& x = res.states[time_slot(checkpoints[c])];
      for (std::size_t ir = 0; ir < nr; ++ir) mom_sq[c * nr + ir][k] = fractional_norm_sq(x.coeffs(), lambda, req.r_list[ir]);
    }
    if (with_inc) {
      const auto& base = res.states[time_slot(req.increment_base)];
      for (std::size_t ih = 0; ih < req.h_list.size(); ++ih) {
        SpectralField diff = res.states[time_slot(req.increment_base + req.h_list[ih])];
        for (std::size_t m = 0; m < diff.size(); ++m) diff[m] -= base[m];
        for (std::size_t ir = 0; ir < nr; ++ir)
          inc_sq[ih * nr + ir][k] = fractional_norm_sq(diff.coeffs(), lambda, req.r_list[ir]);
      }
    }
  });

  EnsembleResult out;
  for (char c : keep) (c ? out.used : out.diverged) += 1;
  if (out.used == 0) throw EnsembleError("run_ensemble: every trajectory diverged");

  auto powered = [](const std::vector<double>& sq, double p) {
    std::vector<double> v(sq.size());
    for (std::size_t k = 0; k < sq.size(); ++k) v[k] = p == 2.0 ? sq[k] : std::pow(sq[k], 0.5 * p);
    return v;
  };
  const double dt = cfg.dt();
  for (std::size_t c = 0; c < checkpoints.size(); ++c)
    for (std::size_t ir = 0; ir < nr; ++ir)
      for (double p : p_list) {
        const auto s = detail::mean_se(powered(mom_sq[c * nr + ir], p), keep);
        out.moments.push_back({checkpoints[c], req.r_list[ir], p, s.mean, s.se, out.used, cfg.n_modes,
                               cfg.spec.n_noise, dt});
      }
  if (with_inc)
    for (std::size_t ih = 0; ih < req.h_list.size(); ++ih)
      for (std::size_t ir = 0; ir < nr; ++ir)
        for (double p : p_list) {
          const auto s = detail::mean_se(powered(inc_sq[ih * nr + ir], p), keep);
          out.increments.push_back({req.increment_base, req.h_list[ih], req.r_list[ir], p, s.mean, s.se, out.used,
                                    cfg.n_modes, cfg.spec.n_noise, dt});
        }
  auto by_t_r = [](const auto& a, const auto& b) {
    if (a.t != b.t) return a.t < b.t;
    return a.r < b.r;
  };
  std::stable_sort(out.moments.begin(), out.moments.end(), by_t_r);
  return out;
}

inline MomentTable ensemble_moments(const SimulationConfig& cfg, const std::vector<double>& r_list, int workers = 1) {
  EnsembleRequest req;
  req.r_list = r_list;
  return run_ensemble(cfg, req, workers).moments;
}

struct BMomentRow {
  double t = 0.0;
  double estimate = 0.0;  // E ||B(X_t)||^p_{HS(U_0, V_alpha)}
  double std_error = 0.0;
};

/// Monte Carlo estimate of E ||B(X_t)||^p_{HS(U_0,V_alpha)} at the checkpoints.
inline std::vector<BMomentRow> b_moment_estimate(const SimulationConfig& cfg, double alpha, int workers = 1) {
  const Stepper stepper(cfg);
  std::vector<double> checkpoints = cfg.checkpoints;
  std::sort(checkpoints.begin(), checkpoints.end());
  std::vector<std::vector<double>> vals(checkpoints.size(), std::vector<double>(static_cast<std::size_t>(cfg.n_traj)));
  std::vector<char> keep(static_cast<std::size_t>(cfg.n_traj), 1);
  parallel_for(cfg.n_traj, workers, [&](int traj) {
    const auto res = simulate_trajectory(stepper, static_cast<std::uint64_t>(traj), checkpoints);
    if (res.diverged) {
      keep[static_cast<std::size_t>(traj)] = 0;
      return;
    }
    for (std::size_t c = 0; c < checkpoints.size(); ++c)
      vals[c][static_cast<std::size_t>(traj)] = std::pow(hs_norm_B(cfg.pair, res.states[c], cfg.spec, alpha), cfg.p);
  });
  std::vector<BMomentRow> out;
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    const auto s = detail::mean_se(vals[c], keep);
    out.push_back({checkpoints[c], s.mean, s.se});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Exact series for the stochastic convolution O_t = int_0^t e^{A(t-s)} b dW_s.

/// commutative:     b == 1, g_j = e_j (any d)
/// cosine_additive: b == 1, cosine noise (d = 1)
/// boundary_sine:   b = sin(pi x), cosine noise (d = 1)
enum class OracleKind { commutative, cosine_additive, boundary_sine };

inline std::string_view to_string(OracleKind k) {
  switch (k) {
    case OracleKind::commutative: return "commutative";
    case OracleKind::cosine_additive: return "cosine_additive";
    case OracleKind::boundary_sine: return "boundary_sine";
  }
  return "?";
}

/// <e_k, g_j> for the sine basis e_k and cosine g_j = sqrt2 cos(j pi x); g_0 = 1.
inline double sine_cosine_product(int k, int j) {
  if ((k + j) % 2 == 0) return 0.0;
  if (j == 0) return 2.0 * std::sqrt(2.0) / (pi * k);
  return 4.0 * k / (pi * (static_cast<double>(k) * k - static_cast<double>(j) * j));
}

/// Per-mode variance rate w_k of the noise b dW projected on e_k, k in {1..K}^d
/// (flat order). Uses the noise modes j <= J of `spec`.
inline std::vector<double> oracle_weights(const CovarianceSpectrum& spec, int K, OracleKind kind) {
  std::vector<double> w;
  switch (kind) {
    case OracleKind::commutative: {
      if (spec.kind == NoiseKind::cosine) throw std::invalid_argument("oracle: commutative kind needs sine-basis noise");
      w.assign(ipow(static_cast<std::size_t>(K), spec.d), 0.0);
      CovarianceSpectrum s = spec;
      const auto mus = noise_eigenvalues(s);
      detail::copy_box(mus, spec.n_noise, w, K, spec.d);
      return w;
    }
    case OracleKind::cosine_additive: {
      if (spec.kind != NoiseKind::cosine) throw std::invalid_argument("oracle: cosine kinds need cosine noise");
      w.assign(static_cast<std::size_t>(K), 0.0);
      std::vector<double> mus(static_cast<std::size_t>(spec.n_noise) + 1, 0.0);
      for (int j = 1; j <= spec.n_noise; ++j) mus[static_cast<std::size_t>(j)] = mu(spec, j);
      for (int k = 1; k <= K; ++k) {
        double s = 0.0;
        // Only k + j odd contributes.
        for (int j = 1 + k % 2; j <= spec.n_noise; j += 2) {
          const double ip = sine_cosine_product(k, j);
          s += mus[static_cast<std::size_t>(j)] * ip * ip;
        }
        w[static_cast<std::size_t>(k - 1)] = s;
      }
      return w;
    }
    case OracleKind::boundary_sine: {
      if (spec.kind != NoiseKind::cosine) throw std::invalid_argument("oracle: cosine kinds need cosine noise");
      // sin(pi x) g_j = (e_{j+1} - e_{j-1}) / 2, so w_k = (mu_{k-1} + mu_{k+1}) / 4 with mu_0 = 0.
      w.assign(static_cast<std::size_t>(K), 0.0);
      for (int k = 1; k <= K; ++k) {
        double s = 0.0;
        if (k - 1 >= 1 && k - 1 <= spec.n_noise) s += mu(spec, k - 1);
        if (k + 1 <= spec.n_noise) s += mu(spec, k + 1);
        w[static_cast<std::size_t>(k - 1)] = 0.25 * s;
      }
      return w;
    }
  }
  return w;
}

/// Noise truncation used with oracle truncation K: J = K for sine-basis
/// noise; 4K for cosine noise, whose j-sums for fixed k decay like j^{-rho-4}.
inline int oracle_noise_modes(OracleKind kind, int K) { return kind == OracleKind::commutative ? K : 4 * K; }

struct OracleValue {
  double value = 0.0;       // partial sum over modes k in {1..K}^d
  double tail = 0.0;        // geometric extrapolation of the omitted modes
  double growth_rate = 0.0; // log2(S_K / S_{K/2})
  bool divergent = false;
};

namespace detail {

inline double ou_variance(double lambda, double t) {
  if (std::isinf(t)) return 1.0 / (2.0 * lambda);
  return -std::expm1(-2.0 * lambda * t) / (2.0 * lambda);
}

// Per-mode E|O_{t+h,k} - O_{t,k}|^2 / w_k.
inline double ou_increment_variance(double lambda, double t, double h) {
  const double a = -std::expm1(-lambda * h);
  return a * a * ou_variance(lambda, t) + ou_variance(lambda, h);
}

// Sums term(k) over the box {1..K}^d by shells max_k = m and diagnoses
// convergence from the last two octaves of shells.
template <class Term>
inline OracleValue shell_series(int d, int K, Term&& term) {
  std::vector<double> shell(static_cast<std::size_t>(K) + 1, 0.0);
  const std::size_t total = ipow(static_cast<std::size_t>(K), d);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    int mx = 0;
    for (int a = 0; a < d; ++a) {
      mx = std::max(mx, static_cast<int>(rem % static_cast<std::size_t>(K)) + 1);
      rem /= static_cast<std::size_t>(K);
    }
    shell[static_cast<std::size_t>(mx)] += term(flat);
  }
  OracleValue out;
  double s_quarter = 0.0, s_half = 0.0;
  for (int m = 1; m <= K; ++m) {
    out.value += shell[static_cast<std::size_t>(m)];
    if (m == K / 4) s_quarter = out.value;
    if (m == K / 2) s_half = out.value;
  }
  if (K >= 8 && s_half > 0.0) {
    const double i1 = s_half - s_quarter, i2 = out.value - s_half;
    out.growth_rate = std::log2(out.value / s_half);
    if (i1 > 0.0 && i2 > 0.0) {
      const double ratio = i2 / i1;  // 2^{e+1} for terms of order k^e per shell
      out.divergent = ratio >= std::pow(2.0, -0.05);
      out.tail = out.divergent ? std::numeric_limits<double>::infinity() : i2 * ratio / (1.0 - ratio);
    }
  }
  return out;
}

}  // namespace detail

/// E||O_t||^2_{V_gamma} = sum_k w_k lambda_k^{2 gamma} (1 - e^{-2 lambda_k t}) / (2 lambda_k),
/// truncated at K modes per direction, for every gamma in the list. t = +inf
/// gives the stationary value.
inline std::vector<OracleValue> ou_oracle_moments(const CovarianceSpectrum& spec, const OperatorSpec& op,
                                                  std::span<const double> gammas, double t, OracleKind kind, int K) {
  if (!(t >= 0.0)) throw std::domain_error("ou_oracle_moment: t must be >= 0");
  std::vector<OracleValue> out(gammas.size());
  const auto w = oracle_weights(spec, K, kind);
  if (t == 0.0) return out;
  const auto lambda = eigenvalues(op, K);
  std::vector<double> base(w.size());
  for (std::size_t k = 0; k < w.size(); ++k) base[k] = w[k] == 0.0 ? 0.0 : w[k] * detail::ou_variance(lambda[k], t);
  for (std::size_t g = 0; g < gammas.size(); ++g)
    out[g] = detail::shell_series(op.d, K, [&](std::size_t k) {
      return base[k] == 0.0 ? 0.0 : base[k] * std::pow(lambda[k], 2.0 * gammas[g]);
    });
  return out;
}

inline OracleValue ou_oracle_moment(const CovarianceSpectrum& spec, const OperatorSpec& op, double gamma, double t,
                                    OracleKind kind, int K) {
  return ou_oracle_moments(spec, op, std::span<const double>(&gamma, 1), t, kind, K).front();
}

/// E||O_{t+h} - O_t||^2_{V_r}, mode by mode, for every h in the list.
inline std::vector<OracleValue> ou_oracle_time_increments(const CovarianceSpectrum& spec, const OperatorSpec& op, double r,
                                                          double t, std::span<const double> h_list, OracleKind kind, int K) {
  if (!(t >= 0.0)) throw std::domain_error("ou_oracle_time_increment: need t, h >= 0");
  for (double h : h_list)
    if (!(h >= 0.0)) throw std::domain_error("ou_oracle_time_increment: need t, h >= 0");
  const auto w = oracle_weights(spec, K, kind);
  const auto lambda = eigenvalues(op, K);
  std::vector<double> weight(w.size());
  for (std::size_t k = 0; k < w.size(); ++k) weight[k] = w[k] == 0.0 ? 0.0 : w[k] * std::pow(lambda[k], 2.0 * r);
  std::vector<OracleValue> out(h_list.size());
  for (std::size_t i = 0; i < h_list.size(); ++i) {
    const double h = h_list[i];
    if (h == 0.0) continue;
    out[i] = detail::shell_series(op.d, K, [&](std::size_t k) {
      return weight[k] == 0.0 ? 0.0 : weight[k] * detail::ou_increment_variance(lambda[k], t, h);
    });
  }
  return out;
}

inline OracleValue ou_oracle_time_increment(const CovarianceSpectrum& spec, const OperatorSpec& op, double r, double t,
                                            double h, OracleKind kind, int K) {
  return ou_oracle_time_increments(spec, op, r, t, std::span<const double>(&h, 1), kind, K).front();
}

/// Partial sums S_K of the moment series, out[g][k] for gammas[g] and K_list[k],
/// with the noise truncation tied to K (oracle_noise_modes).
inline std::vector<std::vector<double>> ou_partial_sums(CovarianceSpectrum spec, const OperatorSpec& op,
                                                        std::span<const double> gammas, double t, OracleKind kind,
                                                        std::span<const int> K_list) {
  std::vector<std::vector<double>> out(gammas.size());
  for (int K : K_list) {
    spec.n_noise = oracle_noise_modes(kind, K);
    const auto vals = ou_oracle_moments(spec, op, gammas, t, kind, K);
    for (std::size_t g = 0; g < gammas.size(); ++g) out[g].push_back(vals[g].value);
  }
  return out;
}

inline std::vector<double> ou_partial_sums(const CovarianceSpectrum& spec, const OperatorSpec& op, double gamma, double t,
                                           OracleKind kind, std::span<const int> K_list) {
  return ou_partial_sums(spec, op, std::span<const double>(&gamma, 1), t, kind, K_list).front();
}

/// Oracle kind matching a configuration, or nullopt-like failure via exception.
inline OracleKind oracle_kind_for(const NemytskiiPair& pair, const CovarianceSpectrum& spec) {
  if (!pair.f_zero) throw std::invalid_argument("oracle: requires f = 0 (nonlinear drift has no closed form)");
  if (pair.tag == "additive_one" || pair.b_unit)
    return spec.kind == NoiseKind::cosine ? OracleKind::cosine_additive : OracleKind::commutative;
  if (pair.tag == "boundary_sine" && spec.kind == NoiseKind::cosine && spec.d == 1) return OracleKind::boundary_sine;
  throw std::invalid_argument("oracle: only b = 1, or b = sin(pi x) with cosine noise, has a closed form");
}

}  // namespace sglab
