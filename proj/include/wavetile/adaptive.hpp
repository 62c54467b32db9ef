#pragma once

#include <cstddef>

#include "wavetile/kernels.hpp"
#include "wavetile/runtime.hpp"

namespace wavetile {

constexpr std::size_t kDefaultCacheBudgetBytes = 8ull << 20;  // 8 MiB

struct WorkloadFeatures {
  std::size_t reduction_slot_bytes = 0;  // len * components * 8
  int threads = 1;
  std::size_t cache_budget_bytes = kDefaultCacheBudgetBytes;
};

/// Two-predicate decision tree: one thread runs Serial; otherwise a private
/// copy per thread that fits the cache budget picks Privatized, anything
/// larger picks Atomic. Locked stays a baseline and is never auto-selected.
ReductionStrategy choose_strategy(const WorkloadFeatures& f);

/// Footprint of the scatter-reduction target plus the execution parameters.
WorkloadFeatures measure_features(const SmvpInput& in, const ExecConfig& cfg,
                                  std::size_t cache_budget_bytes);

}  // namespace wavetile
