#pragma once

// Counter-based Gaussian generator (Philox4x32-10 + Box-Muller).
//
// Every draw is a pure function of (seed, stream, trajectory, step, slot), so
// results never depend on the order in which trajectories are evaluated.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace sglab {

namespace philox {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

inline constexpr std::uint32_t kMul0 = 0xD2511F53u;
inline constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
inline constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline constexpr Counter round(const Counter& c, const Key& k) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
  const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
  const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
  return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

inline constexpr Counter philox4x32_10(Counter c, Key k) {
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      k[0] += kWeyl0;
      k[1] += kWeyl1;
    }
    c = round(c, k);
  }
  return c;
}

}  // namespace philox

/// Identifies one draw slot family. `stream` separates unrelated consumers
/// (Wiener increments, random test fields, ...).
struct RngTuple {
  std::uint64_t seed = 0;
  std::uint32_t stream = 0;
  std::uint64_t trajectory = 0;
  std::uint64_t step = 0;
};

enum class Stream : std::uint32_t { wiener = 0, field_sampler = 1, test_fields = 2 };

/// Pair of independent standard normals for slot pair `pair_index`.
inline std::pair<double, double> normal_pair(const RngTuple& id, std::uint64_t pair_index) {
  // Counter words: (pair_index, step, trajectory, stream); the seed is the key.
  // Each index is used modulo 2^32.
  const philox::Counter ctr{static_cast<std::uint32_t>(pair_index), static_cast<std::uint32_t>(id.step),
                            static_cast<std::uint32_t>(id.trajectory), id.stream};
  const philox::Key key{static_cast<std::uint32_t>(id.seed), static_cast<std::uint32_t>(id.seed >> 32)};
  const auto out = philox::philox4x32_10(ctr, key);
  const std::uint64_t a = (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
  const std::uint64_t b = (static_cast<std::uint64_t>(out[2]) << 32) | out[3];
  constexpr double inv53 = 1.0 / 9007199254740992.0;  // 2^-53
  const double u1 = (static_cast<double>(a >> 11) + 0.5) * inv53;  // (0,1)
  const double u2 = static_cast<double>(b >> 11) * inv53;          // [0,1)
  const double rad = std::sqrt(-2.0 * std::log(u1));
  const double ang = 2.0 * std::numbers::pi * u2;
  return {rad * std::cos(ang), rad * std::sin(ang)};
}

/// Standard normal for slot `slot`.
inline double standard_normal(const RngTuple& id, std::uint64_t slot) {
  const auto [z0, z1] = normal_pair(id, slot / 2);
  return (slot % 2 == 0) ? z0 : z1;
}

/// Fills `out` with standard normals for slots 0..out.size()-1.
template <class Span>
inline void fill_standard_normal(const RngTuple& id, Span&& out) {
  const std::size_t n = out.size();
  for (std::size_t k = 0; k + 1 < n; k += 2) {
    const auto [z0, z1] = normal_pair(id, k / 2);
    out[k] = z0;
    out[k + 1] = z1;
  }
  if (n % 2 == 1) out[n - 1] = normal_pair(id, (n - 1) / 2).first;
}

}  // namespace sglab
