#pragma once

// Dirichlet Laplacian eigenbasis on (0,1)^d, fractional power norms,
// the heat semigroup and grid <-> spectrum transforms.
//
// Eigenpairs:  lambda_i = kappa pi^2 (i_1^2 + ... + i_d^2),
//              e_i(x)   = 2^{d/2} sin(i_1 pi x_1) ... sin(i_d pi x_d),  i in {1,2,...}^d.
// Norms use eta = 0, i.e. ||v||_{V_r} = ||(-A)^r v||_H.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sglab/transforms.hpp"

namespace sglab {

inline constexpr double pi = std::numbers::pi;

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct OperatorSpec {
  int d = 1;
  double kappa = 1.0;
  double eta = 0.0;

  void validate() const {
    if (d < 1) throw std::invalid_argument("OperatorSpec: d must be >= 1");
    if (!(kappa > 0.0) || !std::isfinite(kappa)) throw std::invalid_argument("OperatorSpec: kappa must be > 0");
    if (!(eta >= 0.0)) throw std::invalid_argument("OperatorSpec: eta must be >= 0");
  }

  friend bool operator==(const OperatorSpec&, const OperatorSpec&) = default;
};

inline std::size_t ipow(std::size_t base, int exp) {
  std::size_t out = 1;
  for (int k = 0; k < exp; ++k) out *= base;
  return out;
}

/// lambda_i for a multi-index with all components >= 1.
inline double eigenvalue(const OperatorSpec& op, std::span<const int> index) {
  if (static_cast<int>(index.size()) != op.d) throw ShapeError("eigenvalue: index dimension mismatch");
  double sum = 0.0;
  for (int c : index) {
    if (c < 1) throw std::invalid_argument("eigenvalue: index components must be >= 1");
    sum += static_cast<double>(c) * static_cast<double>(c);
  }
  return op.kappa * pi * pi * sum;
}

inline double eigenfunction_eval(const OperatorSpec& op, std::span<const int> index, std::span<const double> x) {
  if (static_cast<int>(index.size()) != op.d || static_cast<int>(x.size()) != op.d)
    throw ShapeError("eigenfunction_eval: dimension mismatch");
  double value = std::pow(2.0, 0.5 * op.d);
  for (int k = 0; k < op.d; ++k) {
    if (index[k] < 1) throw std::invalid_argument("eigenfunction_eval: index components must be >= 1");
    if (!(x[k] > 0.0 && x[k] < 1.0)) throw std::domain_error("eigenfunction_eval: x must lie in (0,1)^d");
    value *= std::sin(index[k] * pi * x[k]);
  }
  return value;
}

/// Galerkin-truncated element of H: coefficients on e_i, i in {1..N}^d,
/// stored row-major with the last index component varying fastest.
class SpectralField {
 public:
  SpectralField(OperatorSpec op, int n_modes) : op_(op), n_(n_modes) {
    op_.validate();
    if (n_modes < 1) throw std::invalid_argument("SpectralField: n_modes must be >= 1");
    coeffs_.assign(ipow(static_cast<std::size_t>(n_), op_.d), 0.0);
  }

  SpectralField(OperatorSpec op, int n_modes, std::vector<double> coeffs) : SpectralField(op, n_modes) {
    if (coeffs.size() != coeffs_.size()) throw ShapeError("SpectralField: expected N^d coefficients");
    for (double c : coeffs)
      if (!std::isfinite(c)) throw std::invalid_argument("SpectralField: coefficients must be finite");
    coeffs_ = std::move(coeffs);
  }

  static SpectralField basis(OperatorSpec op, int n_modes, std::span<const int> index) {
    SpectralField v(op, n_modes);
    v.coeffs_.at(v.flat_index(index)) = 1.0;
    return v;
  }

  const OperatorSpec& op() const { return op_; }
  int dim() const { return op_.d; }
  int n_modes() const { return n_; }
  std::size_t size() const { return coeffs_.size(); }

  std::span<const double> coeffs() const { return coeffs_; }
  std::span<double> coeffs() { return coeffs_; }
  double operator[](std::size_t k) const { return coeffs_[k]; }
  double& operator[](std::size_t k) { return coeffs_[k]; }

  std::size_t flat_index(std::span<const int> index) const {
    if (static_cast<int>(index.size()) != op_.d) throw ShapeError("SpectralField: index dimension mismatch");
    std::size_t flat = 0;
    for (int c : index) {
      if (c < 1 || c > n_) throw std::invalid_argument("SpectralField: index out of range");
      flat = flat * static_cast<std::size_t>(n_) + static_cast<std::size_t>(c - 1);
    }
    return flat;
  }

  std::vector<int> multi_index(std::size_t flat) const {
    std::vector<int> index(static_cast<std::size_t>(op_.d));
    for (int k = op_.d - 1; k >= 0; --k) {
      index[static_cast<std::size_t>(k)] = static_cast<int>(flat % static_cast<std::size_t>(n_)) + 1;
      flat /= static_cast<std::size_t>(n_);
    }
    return index;
  }

 private:
  OperatorSpec op_;
  int n_;
  std::vector<double> coeffs_;
};

/// Eigenvalues in the flat order of SpectralField(op, n_modes).
inline std::vector<double> eigenvalues(const OperatorSpec& op, int n_modes) {
  const std::size_t total = ipow(static_cast<std::size_t>(n_modes), op.d);
  std::vector<double> out(total);
  std::vector<int> index(static_cast<std::size_t>(op.d), 1);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    double sum = 0.0;
    for (int k = op.d - 1; k >= 0; --k) {
      const double c = static_cast<double>(rem % static_cast<std::size_t>(n_modes) + 1);
      rem /= static_cast<std::size_t>(n_modes);
      sum += c * c;
    }
    out[flat] = op.kappa * pi * pi * sum;
  }
  return out;
}

/// sum_i lambda_i^{2r} a_i^2 for precomputed eigenvalues; r = 0 gives the H norm squared.
inline double fractional_norm_sq(std::span<const double> coeffs, std::span<const double> lambda, double r) {
  double sum = 0.0;
  if (r == 0.0) {
    for (double a : coeffs) sum += a * a;
    return sum;
  }
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    if (coeffs[k] == 0.0) continue;
    sum += std::pow(lambda[k], 2.0 * r) * coeffs[k] * coeffs[k];
  }
  return sum;
}

inline double fractional_norm(const SpectralField& v, double r) {
  if (!(r >= 0.0)) throw std::domain_error("fractional_norm: r must be >= 0");
  const auto lambda = eigenvalues(v.op(), v.n_modes());
  return std::sqrt(fractional_norm_sq(v.coeffs(), lambda, r));
}

inline SpectralField semigroup_apply(const SpectralField& v, double t) {
  if (!(t >= 0.0)) throw std::domain_error("semigroup_apply: t must be >= 0");
  SpectralField out = v;
  if (t == 0.0) return out;
  const auto lambda = eigenvalues(v.op(), v.n_modes());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] *= std::exp(-lambda[k] * t);
  return out;
}

struct SemigroupBoundReport {
  double r = 0.0;
  double max_smoothing = 0.0;    // max (t lambda)^r e^{-lambda t}
  double max_increment = 0.0;    // max (t lambda)^{-r} |e^{-lambda t} - 1|
  double reference = 1.0;        // sup_{x >= 0} x^r e^{-x} = (r/e)^r
  bool pass = false;
};

/// Checks the analytic-semigroup estimates with constant 1 on a grid of
/// (t, lambda) pairs.
inline SemigroupBoundReport semigroup_bound_check(double r, std::span<const double> t_grid,
                                                  std::span<const double> lambda_grid) {
  if (!(r >= 0.0 && r <= 1.0)) throw std::domain_error("semigroup_bound_check: r must lie in [0,1]");
  SemigroupBoundReport rep;
  rep.r = r;
  rep.reference = r == 0.0 ? 1.0 : std::pow(r / std::numbers::e, r);
  for (double t : t_grid) {
    if (!(t > 0.0)) throw std::domain_error("semigroup_bound_check: t must be > 0");
    for (double lambda : lambda_grid) {
      const double x = t * lambda;
      rep.max_smoothing = std::max(rep.max_smoothing, std::pow(x, r) * std::exp(-x));
      rep.max_increment = std::max(rep.max_increment, -std::expm1(-x) / std::pow(x, r));
    }
  }
  constexpr double slack = 1e-12;
  rep.pass = rep.max_smoothing <= rep.reference + slack && rep.max_smoothing <= 1.0 + slack &&
             rep.max_increment <= 1.0 + slack;
  return rep;
}

inline SemigroupBoundReport semigroup_bound_check(const OperatorSpec& op, double r, std::span<const double> t_grid,
                                                  std::span<const int> modes) {
  std::vector<double> lambda;
  std::vector<int> index(static_cast<std::size_t>(op.d));
  for (int m : modes) {
    std::fill(index.begin(), index.end(), m);
    lambda.push_back(eigenvalue(op, index));
  }
  return semigroup_bound_check(r, t_grid, lambda);
}

/// Samples on the interior grid x_k = k/(M+1), k = 1..M, in every direction.
class GridField {
 public:
  GridField(int d, int m_points) : d_(d), m_(m_points) {
    if (d < 1 || m_points < 1) throw std::invalid_argument("GridField: d and M must be >= 1");
    values_.assign(ipow(static_cast<std::size_t>(m_), d_), 0.0);
  }

  GridField(int d, int m_points, std::vector<double> values) : GridField(d, m_points) {
    if (values.size() != values_.size()) throw ShapeError("GridField: expected M^d values");
    values_ = std::move(values);
  }

  template <class Fn>
  static GridField sample(int d, int m_points, Fn&& fn) {
    GridField g(d, m_points);
    std::vector<double> x(static_cast<std::size_t>(d));
    for (std::size_t flat = 0; flat < g.size(); ++flat) {
      g.point(flat, x);
      g.values_[flat] = fn(std::span<const double>(x));
    }
    return g;
  }

  int dim() const { return d_; }
  int m_points() const { return m_; }
  std::size_t size() const { return values_.size(); }
  double spacing() const { return 1.0 / (m_ + 1); }
  double node(int k) const { return static_cast<double>(k) / (m_ + 1); }

  /// Coordinates of the flat node index.
  void point(std::size_t flat, std::span<double> x) const {
    for (int k = d_ - 1; k >= 0; --k) {
      x[static_cast<std::size_t>(k)] = node(static_cast<int>(flat % static_cast<std::size_t>(m_)) + 1);
      flat /= static_cast<std::size_t>(m_);
    }
  }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  double operator[](std::size_t k) const { return values_[k]; }
  double& operator[](std::size_t k) { return values_[k]; }

 private:
  int d_;
  int m_;
  std::vector<double> values_;
};

namespace detail {

// Copies the leading min(n_src, n_dst)^d block between row-major boxes.
inline void copy_box(std::span<const double> src, int n_src, std::span<double> dst, int n_dst, int d) {
  const int n = std::min(n_src, n_dst);
  const std::size_t total = ipow(static_cast<std::size_t>(n), d);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat, s = 0, t = 0, ss = 1, ts = 1;
    for (int k = 0; k < d; ++k) {
      const std::size_t c = rem % static_cast<std::size_t>(n);
      rem /= static_cast<std::size_t>(n);
      s += c * ss;
      t += c * ts;
      ss *= static_cast<std::size_t>(n_src);
      ts *= static_cast<std::size_t>(n_dst);
    }
    dst[t] = src[s];
  }
}

}  // namespace detail

/// Sine-transform (type I) of grid samples. Coefficient i equals the interior
/// quadrature (M+1)^{-d} sum_k g(x_k) e_i(x_k), which is exact for sine
/// polynomials of degree <= M. Modes beyond M are zero; modes beyond N are dropped.
inline SpectralField to_spectral(const GridField& g, const OperatorSpec& op, int n_modes) {
  if (g.dim() != op.d) throw ShapeError("to_spectral: dimension mismatch");
  const int m = g.m_points();
  std::vector<double> work(g.values().begin(), g.values().end());
  detail::r2r_inplace(detail::TrigKind::dst1, m, op.d, work);
  const double scale = std::pow(2.0, -0.5 * op.d) / std::pow(static_cast<double>(m + 1), op.d);
  for (double& w : work) w *= scale;
  SpectralField v(op, n_modes);
  detail::copy_box(work, m, v.coeffs(), n_modes, op.d);
  return v;
}

/// Evaluates the sine series at the M-point interior grid. Exact sampling for
/// M >= N; for M < N modes above M are discarded.
inline GridField from_spectral(const SpectralField& v, int m_points) {
  GridField g(v.dim(), m_points);
  detail::copy_box(v.coeffs(), v.n_modes(), g.values(), m_points, v.dim());
  detail::r2r_inplace(detail::TrigKind::dst1, m_points, v.dim(), g.values());
  const double scale = std::pow(2.0, -0.5 * v.dim());
  for (double& x : g.values()) x *= scale;
  return g;
}

}  // namespace sglab
