#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "wavetile/numerics.hpp"
#include "wavetile/runtime.hpp"
#include "wavetile/schedule.hpp"

namespace wavetile {

// ---------------------------------------------------------------------------
// Sparse symmetric block matrix-vector product with a scatter reduction.

struct SmvpInput {
  BlockSparseSym matrix;
  DenseMatrix v;  // n x block
  DenseMatrix w;  // n x block, accumulated in place

  void validate() const;
};

/// Reference order: rows ascending, entries in storage order; per entry the
/// gather add to w[row] happens before the scatter add to w[col].
void smvp_serial(SmvpInput& in);

/// parallel_for over rows. Every add goes through ReductionSlots bound to w
/// for Locked/Atomic (the scatter target row belongs to another worker, so
/// the row-local adds must use the same mechanism); Privatized keeps
/// row-local adds direct and buffers only the scatters. Serial strategy is
/// only valid with one thread.
void smvp_parallel(SmvpInput& in, ReductionStrategy strategy,
                   const ExecConfig& cfg);

/// Sum of absolute values of every term accumulated into each w cell,
/// including the initial |w|: the natural scale for relative-error
/// comparisons between reduction strategies.
DenseMatrix smvp_accumulation_scale(const SmvpInput& in);

// ---------------------------------------------------------------------------
// Guarded argmax update (histogram of best scores per winner).

struct ArgmaxInput {
  std::vector<std::size_t> winners;        // one per trial
  DenseMatrix features;                    // trials x dim
  std::vector<double> weights;             // dim
  std::vector<double> highest_confidence;  // one per slot
  std::vector<std::uint8_t> set_high;      // one per slot, 0/1

  std::size_t trials() const { return winners.size(); }
  void validate() const;
};

enum class ArgmaxStrategy { CriticalSection, Privatized };
const char* to_string(ArgmaxStrategy s);

/// For each trial in order: conf = dot(features, weights); strictly greater
/// confidences replace the slot value and set its flag.
void argmax_update_serial(ArgmaxInput& in);

/// CriticalSection wraps the compare-and-update in a per-winner stripe
/// lock; Privatized keeps per-worker (best, flag) arrays seeded with -inf
/// and merges them in ascending worker order under the same strict-greater
/// rule. Both end states equal the serial one exactly.
void argmax_update_parallel(ArgmaxInput& in, ArgmaxStrategy strategy,
                            const ExecConfig& cfg);

// ---------------------------------------------------------------------------
// Complex rotation elimination sweep (two-row updates down each column).

/// Branch indices: 0 = row swap (next row's column entry is zero),
/// 1 = half rotation (current row's column entry is zero), 2 = full
/// rotation (the hot path). Hooks may be invoked from worker threads.
using GivensBranchHook = std::function<void(std::int64_t k, std::int64_t i, int branch)>;

/// In-place two-row elimination: for k in [0,N), i in [0,M-1-k), pick one of
/// the three branches from the column-k entries and update columns [k,N) of
/// rows i and i+1. Zero norms propagate NaN; the generators avoid them.
void givens_serial(ComplexSplitMatrix& a, const GivensBranchHook* hook = nullptr);

/// Skewed ([[1,0],[1,1]]) and tiled wavefront execution of the same body;
/// every tile runs its (k,i) points in lexicographic order, so the output
/// is bit-identical to givens_serial for any thread count.
void givens_tiled(ComplexSplitMatrix& a, std::int64_t tile, const ExecConfig& cfg,
                  const GivensBranchHook* hook = nullptr);

// ---------------------------------------------------------------------------
// Forward elimination with on-demand pivoting, serial and speculative.

class SingularMatrixError : public std::runtime_error {
 public:
  explicit SingularMatrixError(std::int64_t step)
      : std::runtime_error("singular leading structure at elimination step " +
                           std::to_string(step)),
        step_(step) {}
  std::int64_t step() const { return step_; }

 private:
  std::int64_t step_;
};

struct GaussjSwap {
  std::int64_t step;
  std::int64_t row;
  bool operator==(const GaussjSwap&) const = default;
};

struct GaussjResult {
  DenseMatrix a;  // eliminated; column k below the diagonal left untouched
  DenseMatrix b;  // n x 1
  std::vector<GaussjSwap> swaps;
  std::int64_t misspeculations = 0;
};

struct GaussjTraceEvent {
  enum class Kind { Update, Detect };
  Kind kind;
  std::int64_t k;
  std::int64_t i;  // -1 for Detect
};
using GaussjTraceHook = std::function<void(const GaussjTraceEvent&)>;

/// 0-based forward elimination: when the step-k diagonal is exactly zero,
/// search rows below for the largest |a[i][k]| (strict greater, first
/// maximum wins) and swap; a zero maximum raises SingularMatrixError.
/// Updates touch columns strictly right of k plus the right-hand side.
GaussjResult gaussj_serial(DenseMatrix a, DenseMatrix b);

/// Speculative variant: runs the update domain {k0 <= k < n-1, k < i < n}
/// through the skewed+tiled wavefront schedule assuming no pivoting is
/// needed. The tile owning the first update of step k validates a[k][k]
/// first; a zero pivot is reported, the failing wavefront drains, the
/// runtime returns early, and recovery serially completes all unfinished
/// pre-failure updates (per-step progress counters), performs the pivot
/// search and swap for the failing step, and restarts speculation there.
/// Output (a, b, swaps) is bit-identical to gaussj_serial;
/// misspeculations counts recovery rounds.
GaussjResult gaussj_speculative(DenseMatrix a, DenseMatrix b, std::int64_t tile,
                                const ExecConfig& cfg,
                                const GaussjTraceHook* trace = nullptr);

// ---------------------------------------------------------------------------
// Iteration domains and modeled dependence sets for the two elimination
// kernels, shared by the legality checker presets and the CLI.

Domain2D givens_domain(std::int64_t m, std::int64_t n);
Domain2D gaussj_domain(std::int64_t k0, std::int64_t n);

/// {(0,1), (1,-1), (1,0), (1,1)}, all Always.
std::vector<DistanceVector> givens_dependences();
/// {Always (1,0), Always (1,[1,+inf]), Assumed("no-pivot") (1,[-inf,+inf])}.
std::vector<DistanceVector> gaussj_dependences();

}  // namespace wavetile
