#include "wavetile/adaptive.hpp"

#include <stdexcept>

namespace wavetile {

ReductionStrategy choose_strategy(const WorkloadFeatures& f) {
  if (f.threads < 1) throw std::invalid_argument("choose_strategy: threads < 1");
  if (f.threads == 1) return ReductionStrategy::Serial;
  if (static_cast<std::size_t>(f.threads) * f.reduction_slot_bytes <=
      f.cache_budget_bytes)
    return ReductionStrategy::Privatized;
  return ReductionStrategy::Atomic;
}

WorkloadFeatures measure_features(const SmvpInput& in, const ExecConfig& cfg,
                                  std::size_t cache_budget_bytes) {
  WorkloadFeatures f;
  f.reduction_slot_bytes = in.matrix.n * in.matrix.block * sizeof(double);
  f.threads = cfg.threads;
  f.cache_budget_bytes = cache_budget_bytes;
  return f;
}

}  // namespace wavetile
