#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wavetile/adaptive.hpp"
#include "wavetile/kernels.hpp"

namespace wavetile {

enum class BenchKernel { Smvp, Argmax, Givens, Gaussj };
const char* to_string(BenchKernel k);
BenchKernel parse_kernel(const std::string& name);

enum class ReportFormat { Csv, Markdown };

/// One benchmark request: kernel, strategy selection, thread counts, input
/// shape or file, schedule and measurement parameters.
struct RunSpec {
  BenchKernel kernel = BenchKernel::Gaussj;
  /// "all", "auto", or a named strategy/variant for the kernel. Empty picks
  /// the kernel's default ("all" for smvp/argmax, the single parallel
  /// variant otherwise).
  std::string strategy;
  std::vector<int> threads{1};
  std::size_t size = 0;
  std::string input_path;  // Matrix Market input (gaussj only)
  std::int64_t tile = 32;
  std::uint64_t seed = 1;
  int reps = 3;
  double tol = 1e-12;
  ReportFormat format = ReportFormat::Csv;
  std::size_t cache_budget = kDefaultCacheBudgetBytes;

  double avg_degree = 8.0;                  // smvp
  std::size_t block = 3;                    // smvp
  std::size_t slots = 1024;                 // argmax
  std::size_t feature_dim = 8;              // argmax
  std::optional<std::size_t> plant_zero;    // gaussj: force a zero pivot
  bool random_rhs = false;                  // gaussj: b random instead of ones
  std::vector<std::size_t> cold_rows;       // givens

  void validate() const;
};

struct VerifyStatus {
  enum class Kind { Exact, WithinTol, Failed };
  Kind kind = Kind::Exact;
  double max_rel_err = 0.0;
  std::string to_string() const;
};

struct RunRow {
  std::string kernel;
  std::string strategy;
  int threads = 1;
  std::string size;
  double median_time_ms = 0.0;
  double speedup = 0.0;
  VerifyStatus verified;
  std::int64_t misspeculations = 0;
  std::int64_t swaps = 0;
};

struct RunReport {
  std::vector<RunRow> rows;
  bool any_failed() const;
};

/// Runs the grid of (strategy, threads) variants, re-measuring the serial
/// baseline in-process on identical input, and verifies every variant
/// against the serial oracle. Deterministic in everything but times.
RunReport run(const RunSpec& spec);

/// CSV header: kernel,strategy,threads,size,median_time_ms,speedup,verified,misspeculations,swaps
std::string emit(const RunReport& report, ReportFormat format);

struct LegalityOutcome {
  Verdict verdict;
  std::string text;
  int exit_code;  // 0 Legal, 3 LegalUnderAssumptions, 4 Illegal
};

LegalityOutcome legality(std::span<const DistanceVector> deps,
                         const SkewTileSchedule& schedule);

class MissingInputError : public std::runtime_error {
 public:
  explicit MissingInputError(const std::string& path)
      : std::runtime_error("cannot open input file: " + path) {}
};

constexpr std::size_t kMaxDenseDim = 20000;

/// Parses a Matrix Market file into a dense matrix, refusing inputs larger
/// than kMaxDenseDim on a side. Missing files raise MissingInputError.
DenseMatrix load_dense_input(const std::string& path);

}  // namespace wavetile
