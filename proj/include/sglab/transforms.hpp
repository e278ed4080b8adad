#pragma once

// Type-I sine and cosine transforms on tensor grids, backed by FFTW.

#include <fftw3.h>

#include <map>
#include <mutex>
#include <span>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace sglab::detail {

enum class TrigKind { dst1, dct1 };

/// Process-wide cache of in-place r2r plans keyed by (kind, n, d).
///
/// FFTW planning is not thread safe, so plans are created under a lock.
/// Execution goes through fftw_execute_r2r, which is safe to call
/// concurrently on distinct arrays.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(TrigKind kind, int n, int d) {
    std::lock_guard lock(mutex_);
    const auto key = std::make_tuple(kind, n, d);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;

    std::size_t total = 1;
    for (int k = 0; k < d; ++k) total *= static_cast<std::size_t>(n);
    std::vector<double> scratch(total, 0.0);
    std::vector<int> dims(static_cast<std::size_t>(d), n);
    std::vector<fftw_r2r_kind> kinds(static_cast<std::size_t>(d),
                                     kind == TrigKind::dst1 ? FFTW_RODFT00 : FFTW_REDFT00);
    fftw_plan plan = fftw_plan_r2r(d, dims.data(), scratch.data(), scratch.data(), kinds.data(),
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr) throw std::runtime_error("fftw: failed to create r2r plan");
    plans_.emplace(key, plan);
    return plan;
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

 private:
  PlanCache() = default;

  std::mutex mutex_;
  std::map<std::tuple<TrigKind, int, int>, fftw_plan> plans_;
};

/// Unnormalized FFTW transform, in place, on a row-major n^d array.
///   dst1: Y_k = 2 sum_j X_j sin(pi (j+1)(k+1) / (n+1))           per axis
///   dct1: Y_k = X_0 + (-1)^k X_{n-1} + 2 sum_{j=1}^{n-2} X_j cos(pi j k / (n-1))
inline void r2r_inplace(TrigKind kind, int n, int d, std::span<double> data) {
  std::size_t total = 1;
  for (int k = 0; k < d; ++k) total *= static_cast<std::size_t>(n);
  if (data.size() != total) throw std::invalid_argument("r2r_inplace: size mismatch");
  if (kind == TrigKind::dct1 && n < 2) throw std::invalid_argument("r2r_inplace: dct1 needs n >= 2");
  fftw_plan plan = PlanCache::instance().get(kind, n, d);
  fftw_execute_r2r(plan, data.data(), data.data());
}

}  // namespace sglab::detail
