#pragma once

// Scalar coefficient functions f(x, y), b(x, y) and the induced Nemytskii
// operators (F(v))(x) = f(x, v(x)) and (B(v)u)(x) = b(x, v(x)) u(x).

#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sglab/expression.hpp"
#include "sglab/spectral_space.hpp"

namespace sglab {

using ScalarFn = std::function<double(std::span<const double> x, double y)>;

struct NemytskiiPair {
  std::string tag;       // preset name, or "custom"
  std::string f_text;    // expression text, for reporting and serialization
  std::string b_text;
  ScalarFn f;
  ScalarFn b;
  double q = 0.0;        // joint Lipschitz constant of b in (x, y)
  double lip_f = 0.0;    // Lipschitz constant of f in y
  bool f_zero = false;
  bool b_state_independent = false;
  bool b_unit = false;   // b == 1
};

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"additive_one", "boundary_sine", "linear_state", "nonlinear"};
  return names;
}

namespace detail {
inline double sine_bump(std::span<const double> x) {
  double p = 1.0;
  for (double c : x) p *= std::sin(std::numbers::pi * c);
  return p;
}
}  // namespace detail

/// Named coefficient pairs. `d` only affects the Lipschitz constant of the
/// spatial sine factor, prod_k sin(pi x_k), whose gradient is bounded by pi sqrt(d).
inline NemytskiiPair make_preset(std::string_view name, int d = 1) {
  NemytskiiPair p;
  p.tag = std::string(name);
  const double sine_lip = std::numbers::pi * std::sqrt(static_cast<double>(d));
  auto zero = [](std::span<const double>, double) { return 0.0; };
  if (name == "additive_one") {
    p.f_text = "0";
    p.b_text = "1";
    p.f = zero;
    p.b = [](std::span<const double>, double) { return 1.0; };
    p.q = 1.0;
    p.f_zero = p.b_state_independent = p.b_unit = true;
  } else if (name == "boundary_sine") {
    p.f_text = "0";
    p.b_text = d == 1 ? "sin(pi*x)" : "prod_k sin(pi*x_k)";
    p.f = zero;
    p.b = [](std::span<const double> x, double) { return detail::sine_bump(x); };
    p.q = sine_lip;
    p.f_zero = p.b_state_independent = true;
  } else if (name == "linear_state") {
    p.f_text = "0";
    p.b_text = "y";
    p.f = zero;
    p.b = [](std::span<const double>, double y) { return y; };
    p.q = 1.0;
    p.f_zero = true;
  } else if (name == "nonlinear") {
    p.f_text = "y/(1+y*y)";
    p.b_text = d == 1 ? "sin(y)+sin(pi*x)" : "sin(y)+prod_k sin(pi*x_k)";
    p.f = [](std::span<const double>, double y) { return y / (1.0 + y * y); };
    p.b = [](std::span<const double> x, double y) { return std::sin(y) + detail::sine_bump(x); };
    // |d/dy sin y| <= 1 and |grad_x| <= pi sqrt(d).
    p.q = sine_lip;
    p.lip_f = 1.0;
  } else {
    throw std::invalid_argument("unknown coefficient preset '" + std::string(name) + "'");
  }
  return p;
}

/// Pair from user expressions in the safe arithmetic subset.
inline NemytskiiPair make_custom_pair(std::string_view f_text, std::string_view b_text, double q, double lip_f) {
  NemytskiiPair p;
  p.tag = "custom";
  p.f_text = std::string(f_text);
  p.b_text = std::string(b_text);
  const auto f = Expression::parse(f_text);
  const auto b = Expression::parse(b_text);
  p.f = [f](std::span<const double> x, double y) { return f(x, y); };
  p.b = [b](std::span<const double> x, double y) { return b(x, y); };
  p.q = q;
  p.lip_f = lip_f;
  p.b_state_independent = b.state_independent();
  const double probe[3] = {0.3, 0.6, 0.2};
  auto is_constant = [&](const Expression& e, double value) {
    if (!e.state_independent()) return false;
    for (double a : {0.1, 0.37, 0.8}) {
      const double x[3] = {a, a, a};
      if (e(std::span<const double>(x, 3), 0.0) != value) return false;
    }
    return e(std::span<const double>(probe, 3), 0.0) == value;
  };
  p.f_zero = is_constant(f, 0.0);
  p.b_unit = is_constant(b, 1.0);
  if (!(q >= 0.0) || !(lip_f >= 0.0)) throw std::invalid_argument("custom pair: Lipschitz constants must be >= 0");
  return p;
}

inline GridField apply_F(const NemytskiiPair& pair, const GridField& v) {
  GridField out(v.dim(), v.m_points());
  if (pair.f_zero) return out;
  std::vector<double> x(static_cast<std::size_t>(v.dim()));
  for (std::size_t k = 0; k < v.size(); ++k) {
    v.point(k, x);
    out[k] = pair.f(x, v[k]);
  }
  return out;
}

/// Grid samples of b(x, v(x)).
inline GridField eval_b(const NemytskiiPair& pair, const GridField& v) {
  GridField out(v.dim(), v.m_points());
  std::vector<double> x(static_cast<std::size_t>(v.dim()));
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (pair.b_unit) {
      out[k] = 1.0;
      continue;
    }
    v.point(k, x);
    out[k] = pair.b(x, v[k]);
  }
  return out;
}

inline GridField apply_B(const NemytskiiPair& pair, const GridField& v, const GridField& u) {
  if (v.dim() != u.dim() || v.m_points() != u.m_points()) throw ShapeError("apply_B: grid mismatch");
  GridField out = eval_b(pair, v);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] *= u[k];
  return out;
}

}  // namespace sglab
