#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <mutex>
#include <span>
#include <vector>

#include "wavetile/schedule.hpp"

namespace wavetile {

struct ExecConfig {
  int threads = 1;
  /// Forces static contiguous partitioning and ordered merges, making
  /// parallel results a pure function of (inputs, thread count).
  bool deterministic = true;
};

/// Runs body(worker, i) for every i in [begin, end). Worker w gets the
/// w-th contiguous block in deterministic mode, dynamic chunks otherwise.
/// With one thread the indices run in ascending order on the caller's
/// thread. Exceptions from the body propagate after all workers stop.
void parallel_for(std::int64_t begin, std::int64_t end, const ExecConfig& cfg,
                  const std::function<void(int, std::int64_t)>& body);

enum class ReductionStrategy { Serial, Locked, Atomic, Privatized };
const char* to_string(ReductionStrategy s);

/// Strategy-parameterized accumulation array of len slots x components.
///
/// Serial adds straight into the bound base array (single-threaded use);
/// Locked adds under one of 1024 stripe locks (slot modulo stripe);
/// Atomic adds with a compare-exchange retry loop on the 64-bit cell;
/// Privatized adds into a per-worker buffer, merged by finalize() in
/// ascending worker order. For the first three strategies the base array
/// always holds the current result and finalize() is a no-op.
class ReductionSlots {
 public:
  ReductionSlots(ReductionStrategy strategy, std::span<double> base,
                 std::size_t len, std::size_t components, int workers);

  void add(int worker, std::size_t slot, std::size_t component, double value);
  void finalize();

  ReductionStrategy strategy() const { return strategy_; }
  std::size_t len() const { return len_; }
  std::size_t components() const { return components_; }
  int workers() const { return workers_; }

  static constexpr std::size_t kStripes = 1024;

 private:
  ReductionStrategy strategy_;
  std::span<double> base_;
  std::size_t len_;
  std::size_t components_;
  int workers_;
  std::vector<std::mutex> stripes_;             // Locked only
  std::vector<std::vector<double>> privates_;   // Privatized only
};

struct MisspecEvent {
  std::int64_t step;
  int wavefront;
};

/// Shared state of one speculative execution: the lowest failing step
/// (atomic minimum), an append-only misspeculation event log, and per-step
/// progress counters recording the last completed inner index.
class SpecController {
 public:
  /// progress[k] starts at k: inner ranges begin at k + 1, so a counter
  /// equal to k means no iteration of that step has completed.
  explicit SpecController(std::size_t steps);

  void report_misspeculation(std::int64_t step, int wavefront);
  bool failed() const { return failed_at_.load(std::memory_order_acquire) != kClean; }
  std::int64_t failed_at() const { return failed_at_.load(std::memory_order_acquire); }
  /// Clears the failure flag for the next speculative round; the event log
  /// and progress counters are kept.
  void reset_failure() { failed_at_.store(kClean, std::memory_order_release); }

  std::int64_t progress(std::size_t step) const {
    return progress_[step].load(std::memory_order_acquire);
  }
  void advance_progress(std::size_t step, std::int64_t last_inner);

  std::vector<MisspecEvent> events() const;
  std::size_t steps() const { return progress_.size(); }

  static constexpr std::int64_t kClean = INT64_MAX;

 private:
  std::atomic<std::int64_t> failed_at_{kClean};
  mutable std::mutex events_mutex_;
  std::vector<MisspecEvent> events_;
  std::vector<std::atomic<std::int64_t>> progress_;
};

struct WavefrontRunStatus {
  bool failed = false;
  std::int64_t failed_at = 0;
  std::int64_t failed_wavefront = -1;
};

/// Executes the plan wavefront by wavefront with a full barrier in between;
/// tiles inside one wavefront may run concurrently (they are independent by
/// schedule legality). When a controller is given and a tile reports a
/// misspeculation, the failing wavefront still completes, later wavefronts
/// are not started, and the returned status carries the failing step. Tile
/// body exceptions propagate after the wavefront's barrier.
WavefrontRunStatus execute_wavefronts(
    const WavefrontPlan& plan, const ExecConfig& cfg, SpecController* ctl,
    const std::function<void(std::int64_t wavefront, TileCoord tile)>& tile_body);

}  // namespace wavetile
