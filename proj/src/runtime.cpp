#include "wavetile/runtime.hpp"

#include <algorithm>
#include <condition_variable>
#include <exception>
#include <stdexcept>
#include <thread>

namespace wavetile {

namespace {

class Barrier {
 public:
  explicit Barrier(int count) : count_(count) {}

  void arrive_and_wait() {
    std::unique_lock lk(m_);
    const std::uint64_t phase = phase_;
    if (++arrived_ == count_) {
      arrived_ = 0;
      ++phase_;
      cv_.notify_all();
    } else {
      cv_.wait(lk, [&] { return phase_ != phase; });
    }
  }

 private:
  std::mutex m_;
  std::condition_variable cv_;
  int count_;
  int arrived_ = 0;
  std::uint64_t phase_ = 0;
};

// Captures the first exception thrown by any worker.
class ExceptionSlot {
 public:
  void capture() {
    if (armed_.exchange(true, std::memory_order_acq_rel)) return;
    ptr_ = std::current_exception();
    ready_.store(true, std::memory_order_release);
  }
  bool armed() const { return armed_.load(std::memory_order_acquire); }
  void rethrow_if_set() {
    if (!armed_.load(std::memory_order_acquire)) return;
    while (!ready_.load(std::memory_order_acquire)) std::this_thread::yield();
    std::rethrow_exception(ptr_);
  }

 private:
  std::atomic<bool> armed_{false};
  std::atomic<bool> ready_{false};
  std::exception_ptr ptr_;
};

void atomic_add(double& cell, double value) {
  std::atomic_ref<double> a(cell);
  double cur = a.load(std::memory_order_relaxed);
  while (!a.compare_exchange_weak(cur, cur + value, std::memory_order_relaxed)) {
  }
}

}  // namespace

void parallel_for(std::int64_t begin, std::int64_t end, const ExecConfig& cfg,
                  const std::function<void(int, std::int64_t)>& body) {
  if (cfg.threads < 1) throw std::invalid_argument("parallel_for: threads < 1");
  const std::int64_t len = end - begin;
  if (len <= 0) return;
  const int threads = static_cast<int>(
      std::min<std::int64_t>(cfg.threads, len));
  if (threads == 1) {
    for (std::int64_t i = begin; i < end; ++i) body(0, i);
    return;
  }

  ExceptionSlot error;
  std::vector<std::thread> pool;
  pool.reserve(threads);

  if (cfg.deterministic) {
    const std::int64_t block = (len + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
      const std::int64_t lo = begin + static_cast<std::int64_t>(w) * block;
      const std::int64_t hi = std::min(end, lo + block);
      pool.emplace_back([&, w, lo, hi] {
        try {
          for (std::int64_t i = lo; i < hi; ++i) {
            if (error.armed()) return;
            body(w, i);
          }
        } catch (...) {
          error.capture();
        }
      });
    }
  } else {
    auto next = std::make_shared<std::atomic<std::int64_t>>(begin);
    const std::int64_t chunk = std::max<std::int64_t>(1, len / (threads * 8));
    for (int w = 0; w < threads; ++w) {
      pool.emplace_back([&, next, chunk, w] {
        try {
          for (;;) {
            const std::int64_t lo = next->fetch_add(chunk, std::memory_order_relaxed);
            if (lo >= end) return;
            const std::int64_t hi = std::min(end, lo + chunk);
            for (std::int64_t i = lo; i < hi; ++i) {
              if (error.armed()) return;
              body(w, i);
            }
          }
        } catch (...) {
          error.capture();
        }
      });
    }
  }

  for (auto& t : pool) t.join();
  error.rethrow_if_set();
}

const char* to_string(ReductionStrategy s) {
  switch (s) {
    case ReductionStrategy::Serial: return "serial";
    case ReductionStrategy::Locked: return "locked";
    case ReductionStrategy::Atomic: return "atomic";
    case ReductionStrategy::Privatized: return "privatized";
  }
  return "?";
}

ReductionSlots::ReductionSlots(ReductionStrategy strategy, std::span<double> base,
                               std::size_t len, std::size_t components,
                               int workers)
    : strategy_(strategy),
      base_(base),
      len_(len),
      components_(components),
      workers_(workers) {
  if (workers < 1) throw std::invalid_argument("ReductionSlots: workers < 1");
  if (base.size() != len * components)
    throw std::invalid_argument("ReductionSlots: base length != len * components");
  if (strategy == ReductionStrategy::Locked)
    stripes_ = std::vector<std::mutex>(kStripes);
  if (strategy == ReductionStrategy::Privatized) {
    privates_.resize(static_cast<std::size_t>(workers));
    for (auto& p : privates_) p.assign(len * components, 0.0);
  }
}

void ReductionSlots::add(int worker, std::size_t slot, std::size_t component,
                         double value) {
  if (slot >= len_ || component >= components_ || worker < 0 || worker >= workers_)
    throw std::invalid_argument("ReductionSlots::add: index out of range");
  const std::size_t x = slot * components_ + component;
  switch (strategy_) {
    case ReductionStrategy::Serial:
      base_[x] += value;
      break;
    case ReductionStrategy::Locked: {
      std::lock_guard lk(stripes_[slot % kStripes]);
      base_[x] += value;
      break;
    }
    case ReductionStrategy::Atomic:
      atomic_add(base_[x], value);
      break;
    case ReductionStrategy::Privatized:
      privates_[static_cast<std::size_t>(worker)][x] += value;
      break;
  }
}

void ReductionSlots::finalize() {
  if (strategy_ != ReductionStrategy::Privatized) return;
  for (auto& buf : privates_) {
    for (std::size_t x = 0; x < buf.size(); ++x) {
      base_[x] += buf[x];
      buf[x] = 0.0;
    }
  }
}

SpecController::SpecController(std::size_t steps) : progress_(steps) {
  for (std::size_t k = 0; k < steps; ++k)
    progress_[k].store(static_cast<std::int64_t>(k), std::memory_order_relaxed);
}

void SpecController::report_misspeculation(std::int64_t step, int wavefront) {
  std::int64_t cur = failed_at_.load(std::memory_order_relaxed);
  while (step < cur &&
         !failed_at_.compare_exchange_weak(cur, step, std::memory_order_acq_rel)) {
  }
  std::lock_guard lk(events_mutex_);
  events_.push_back({step, wavefront});
}

void SpecController::advance_progress(std::size_t step, std::int64_t last_inner) {
  const std::int64_t prev = progress_[step].load(std::memory_order_relaxed);
  if (last_inner < prev)
    throw std::logic_error("SpecController: progress must be nondecreasing");
  progress_[step].store(last_inner, std::memory_order_release);
}

std::vector<MisspecEvent> SpecController::events() const {
  std::lock_guard lk(events_mutex_);
  return events_;
}

WavefrontRunStatus execute_wavefronts(
    const WavefrontPlan& plan, const ExecConfig& cfg, SpecController* ctl,
    const std::function<void(std::int64_t, TileCoord)>& tile_body) {
  if (cfg.threads < 1)
    throw std::invalid_argument("execute_wavefronts: threads < 1");
  WavefrontRunStatus status;
  const std::size_t nw = plan.waves.size();
  if (nw == 0) return status;

  if (cfg.threads == 1) {
    for (std::size_t w = 0; w < nw; ++w) {
      for (const TileCoord& t : plan.waves[w])
        tile_body(static_cast<std::int64_t>(w), t);
      if (ctl && ctl->failed()) {
        status.failed = true;
        status.failed_at = ctl->failed_at();
        status.failed_wavefront = static_cast<std::int64_t>(w);
        return status;
      }
    }
    return status;
  }

  const int threads = cfg.threads;
  Barrier barrier(threads);
  ExceptionSlot error;
  std::vector<std::atomic<std::int64_t>> cursors(nw);
  std::atomic<std::int64_t> stop_wave{-1};
  std::atomic<bool> stop{false};

  auto worker = [&](int w) {
    for (std::size_t wi = 0; wi < nw; ++wi) {
      const auto& tiles = plan.waves[wi];
      const std::int64_t count = static_cast<std::int64_t>(tiles.size());
      try {
        if (cfg.deterministic) {
          const std::int64_t block = (count + threads - 1) / threads;
          const std::int64_t lo = static_cast<std::int64_t>(w) * block;
          const std::int64_t hi = std::min(count, lo + block);
          for (std::int64_t t = lo; t < hi && !error.armed(); ++t)
            tile_body(static_cast<std::int64_t>(wi), tiles[static_cast<std::size_t>(t)]);
        } else {
          for (;;) {
            const std::int64_t t = cursors[wi].fetch_add(1, std::memory_order_relaxed);
            if (t >= count || error.armed()) break;
            tile_body(static_cast<std::int64_t>(wi), tiles[static_cast<std::size_t>(t)]);
          }
        }
      } catch (...) {
        error.capture();
      }
      barrier.arrive_and_wait();
      // Worker 0 publishes one stop verdict per wavefront between two
      // barriers; reading the flags directly here would race with workers
      // that already entered the next wavefront, and a split decision
      // strands the slower workers at the barrier.
      if (w == 0) {
        bool s = error.armed();
        if (ctl && ctl->failed()) {
          s = true;
          stop_wave.store(static_cast<std::int64_t>(wi), std::memory_order_release);
        }
        stop.store(s, std::memory_order_release);
      }
      barrier.arrive_and_wait();
      if (stop.load(std::memory_order_acquire)) break;
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int w = 0; w < threads; ++w) pool.emplace_back(worker, w);
  for (auto& t : pool) t.join();
  error.rethrow_if_set();

  const std::int64_t sw = stop_wave.load(std::memory_order_acquire);
  if (sw >= 0) {
    status.failed = true;
    status.failed_at = ctl->failed_at();
    status.failed_wavefront = sw;
  }
  return status;
}

}  // namespace wavetile
