#include "wavetile/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace wavetile {

const char* to_string(BenchKernel k) {
  switch (k) {
    case BenchKernel::Smvp: return "smvp";
    case BenchKernel::Argmax: return "argmax";
    case BenchKernel::Givens: return "givens";
    case BenchKernel::Gaussj: return "gaussj";
  }
  return "?";
}

BenchKernel parse_kernel(const std::string& name) {
  if (name == "smvp") return BenchKernel::Smvp;
  if (name == "argmax") return BenchKernel::Argmax;
  if (name == "givens") return BenchKernel::Givens;
  if (name == "gaussj") return BenchKernel::Gaussj;
  throw std::invalid_argument("unknown kernel '" + name + "'");
}

void RunSpec::validate() const {
  if (reps < 1) throw std::invalid_argument("reps must be >= 1");
  if (threads.empty()) throw std::invalid_argument("need at least one thread count");
  for (int t : threads)
    if (t < 1) throw std::invalid_argument("thread counts must be >= 1");
  if (tile < 1) throw std::invalid_argument("tile must be >= 1");
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  const bool has_input = !input_path.empty();
  if (kernel == BenchKernel::Gaussj) {
    if (has_input == (size > 0))
      throw std::invalid_argument("gaussj needs exactly one of --size and --input");
  } else {
    if (has_input)
      throw std::invalid_argument("--input is only supported for gaussj");
    if (size == 0) throw std::invalid_argument("--size is required");
  }
}

std::string VerifyStatus::to_string() const {
  switch (kind) {
    case Kind::Exact: return "exact";
    case Kind::WithinTol: return "within_tol(" + format_double(max_rel_err) + ")";
    case Kind::Failed: return "FAILED";
  }
  return "?";
}

bool RunReport::any_failed() const {
  for (const auto& r : rows)
    if (r.verified.kind == VerifyStatus::Kind::Failed) return true;
  return false;
}

DenseMatrix load_dense_input(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw MissingInputError(path);
  DenseMatrix m = parse_matrix_market(f);
  if (m.rows() > kMaxDenseDim || m.cols() > kMaxDenseDim)
    throw std::invalid_argument("input matrix larger than " +
                                std::to_string(kMaxDenseDim) + " on a side");
  return m;
}

namespace {

double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  if (n % 2 == 1) return xs[n / 2];
  return 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

template <typename F>
double time_ms(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

RunRow make_row(const RunSpec& spec, const std::string& strategy, int threads,
                const std::string& size, double med, double serial_med) {
  RunRow row;
  row.kernel = to_string(spec.kernel);
  row.strategy = strategy;
  row.threads = threads;
  row.size = size;
  row.median_time_ms = med;
  row.speedup = med > 0.0 ? serial_med / med : 0.0;
  return row;
}

std::vector<RunRow> run_gaussj(const RunSpec& spec) {
  DenseMatrix a;
  if (!spec.input_path.empty()) {
    a = load_dense_input(spec.input_path);
    if (a.rows() != a.cols())
      throw std::invalid_argument("gaussj input must be square");
  } else {
    Rng rng(spec.seed);
    a = spec.plant_zero ? gen_zero_pivot(spec.size, *spec.plant_zero, rng)
                        : gen_random_dense(spec.size, rng);
  }
  const std::size_t n = a.rows();
  DenseMatrix b(n, 1);
  if (spec.random_rhs) {
    Rng rng(spec.seed ^ 0x9E3779B97F4A7C15ULL);
    for (double& x : b.values()) x = rng.uniform(0.5, 1.5);
  } else {
    for (double& x : b.values()) x = 1.0;
  }
  const std::string size_str = std::to_string(n) + "x" + std::to_string(n);

  std::string strategy = spec.strategy;
  if (strategy.empty() || strategy == "all") strategy = "speculative";
  if (strategy != "speculative")
    throw std::invalid_argument("gaussj strategy must be 'speculative'");

  std::vector<double> serial_times;
  GaussjResult oracle;
  for (int rep = 0; rep < spec.reps; ++rep) {
    GaussjResult r;
    serial_times.push_back(time_ms([&] { r = gaussj_serial(a, b); }));
    if (rep == 0) oracle = std::move(r);
  }
  const double serial_med = median(serial_times);

  std::vector<RunRow> rows;
  for (int th : spec.threads) {
    const ExecConfig cfg{th, true};
    std::vector<double> times;
    GaussjResult out;
    for (int rep = 0; rep < spec.reps; ++rep) {
      GaussjResult r;
      times.push_back(
          time_ms([&] { r = gaussj_speculative(a, b, spec.tile, cfg); }));
      if (rep == 0) out = std::move(r);
    }
    RunRow row = make_row(spec, strategy, th, size_str, median(times), serial_med);
    const bool ok = bitwise_equal(out.a, oracle.a) &&
                    bitwise_equal(out.b, oracle.b) && out.swaps == oracle.swaps;
    row.verified.kind = ok ? VerifyStatus::Kind::Exact : VerifyStatus::Kind::Failed;
    row.misspeculations = out.misspeculations;
    row.swaps = static_cast<std::int64_t>(out.swaps.size());
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<RunRow> run_givens(const RunSpec& spec) {
  Rng rng(spec.seed);
  const ComplexSplitMatrix input =
      gen_complex_random(spec.size, spec.size, rng, spec.cold_rows);
  const std::string size_str =
      std::to_string(spec.size) + "x" + std::to_string(spec.size);

  std::string strategy = spec.strategy;
  if (strategy.empty() || strategy == "all") strategy = "tiled";
  if (strategy != "tiled")
    throw std::invalid_argument("givens strategy must be 'tiled'");

  std::vector<double> serial_times;
  ComplexSplitMatrix oracle;
  for (int rep = 0; rep < spec.reps; ++rep) {
    ComplexSplitMatrix c = input;
    serial_times.push_back(time_ms([&] { givens_serial(c); }));
    if (rep == 0) oracle = std::move(c);
  }
  const double serial_med = median(serial_times);

  std::vector<RunRow> rows;
  for (int th : spec.threads) {
    const ExecConfig cfg{th, true};
    std::vector<double> times;
    ComplexSplitMatrix out;
    for (int rep = 0; rep < spec.reps; ++rep) {
      ComplexSplitMatrix c = input;
      times.push_back(time_ms([&] { givens_tiled(c, spec.tile, cfg); }));
      if (rep == 0) out = std::move(c);
    }
    RunRow row = make_row(spec, strategy, th, size_str, median(times), serial_med);
    row.verified.kind = bitwise_equal(out, oracle) ? VerifyStatus::Kind::Exact
                                                   : VerifyStatus::Kind::Failed;
    rows.push_back(std::move(row));
  }
  return rows;
}

VerifyStatus compare_scaled(const DenseMatrix& out, const DenseMatrix& oracle,
                            const DenseMatrix& scale, double tol) {
  VerifyStatus st;
  if (bitwise_equal(out, oracle)) return st;
  double max_err = 0.0;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t c = 0; c < out.cols(); ++c) {
      const double d = std::fabs(out(i, c) - oracle(i, c));
      if (d == 0.0) continue;
      const double s = scale(i, c);
      max_err = std::max(max_err,
                         s > 0.0 ? d / s : std::numeric_limits<double>::infinity());
    }
  st.max_rel_err = max_err;
  st.kind = max_err <= tol ? VerifyStatus::Kind::WithinTol : VerifyStatus::Kind::Failed;
  return st;
}

std::vector<RunRow> run_smvp(const RunSpec& spec) {
  Rng rng(spec.seed);
  BlockSparseSample sample =
      gen_block_sparse(spec.size, spec.avg_degree, spec.block, rng);
  const SmvpInput base{std::move(sample.matrix), std::move(sample.v),
                       DenseMatrix(spec.size, spec.block)};
  const DenseMatrix scale = smvp_accumulation_scale(base);
  const std::string size_str = std::to_string(spec.size);

  std::vector<double> serial_times;
  DenseMatrix oracle;
  for (int rep = 0; rep < spec.reps; ++rep) {
    SmvpInput c = base;
    serial_times.push_back(time_ms([&] { smvp_serial(c); }));
    if (rep == 0) oracle = std::move(c.w);
  }
  const double serial_med = median(serial_times);

  std::string strategy = spec.strategy.empty() ? "all" : spec.strategy;
  struct Variant {
    std::string label;
    bool automatic;
    ReductionStrategy strat;
  };
  std::vector<Variant> variants;
  if (strategy == "all") {
    variants = {{"locked", false, ReductionStrategy::Locked},
                {"atomic", false, ReductionStrategy::Atomic},
                {"privatized", false, ReductionStrategy::Privatized}};
  } else if (strategy == "auto") {
    variants = {{"auto", true, ReductionStrategy::Atomic}};
  } else if (strategy == "serial") {
    variants = {{"serial", false, ReductionStrategy::Serial}};
  } else if (strategy == "locked") {
    variants = {{"locked", false, ReductionStrategy::Locked}};
  } else if (strategy == "atomic") {
    variants = {{"atomic", false, ReductionStrategy::Atomic}};
  } else if (strategy == "privatized") {
    variants = {{"privatized", false, ReductionStrategy::Privatized}};
  } else {
    throw std::invalid_argument("unknown smvp strategy '" + strategy + "'");
  }

  std::vector<RunRow> rows;
  for (const Variant& var : variants) {
    for (int th : spec.threads) {
      const ExecConfig cfg{th, true};
      ReductionStrategy strat = var.strat;
      std::string label = var.label;
      if (var.automatic) {
        strat = choose_strategy(measure_features(base, cfg, spec.cache_budget));
        label = "auto→" + std::string(to_string(strat));
      }
      std::vector<double> times;
      DenseMatrix out;
      for (int rep = 0; rep < spec.reps; ++rep) {
        SmvpInput c = base;
        times.push_back(time_ms([&] { smvp_parallel(c, strat, cfg); }));
        if (rep == 0) out = std::move(c.w);
      }
      RunRow row = make_row(spec, label, th, size_str, median(times), serial_med);
      row.verified = compare_scaled(out, oracle, scale, spec.tol);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::vector<RunRow> run_argmax(const RunSpec& spec) {
  Rng rng(spec.seed);
  ArgmaxInput base;
  base.winners.resize(spec.size);
  for (auto& w : base.winners) w = static_cast<std::size_t>(rng.below(spec.slots));
  base.features = DenseMatrix(spec.size, spec.feature_dim);
  for (double& x : base.features.values()) x = rng.uniform(0.0, 1.0);
  base.weights.resize(spec.feature_dim);
  for (double& x : base.weights) x = rng.uniform(0.0, 1.0);
  base.highest_confidence.resize(spec.slots);
  for (double& x : base.highest_confidence)
    x = rng.uniform(0.0, 0.5 * static_cast<double>(spec.feature_dim));
  base.set_high.assign(spec.slots, 0);
  const std::string size_str = std::to_string(spec.size);

  std::vector<double> serial_times;
  ArgmaxInput oracle;
  for (int rep = 0; rep < spec.reps; ++rep) {
    ArgmaxInput c = base;
    serial_times.push_back(time_ms([&] { argmax_update_serial(c); }));
    if (rep == 0) oracle = std::move(c);
  }
  const double serial_med = median(serial_times);

  std::string strategy = spec.strategy.empty() ? "all" : spec.strategy;
  std::vector<ArgmaxStrategy> variants;
  if (strategy == "all")
    variants = {ArgmaxStrategy::CriticalSection, ArgmaxStrategy::Privatized};
  else if (strategy == "critical")
    variants = {ArgmaxStrategy::CriticalSection};
  else if (strategy == "privatized")
    variants = {ArgmaxStrategy::Privatized};
  else
    throw std::invalid_argument("unknown argmax strategy '" + strategy + "'");

  std::vector<RunRow> rows;
  for (ArgmaxStrategy var : variants) {
    for (int th : spec.threads) {
      const ExecConfig cfg{th, true};
      std::vector<double> times;
      ArgmaxInput out;
      for (int rep = 0; rep < spec.reps; ++rep) {
        ArgmaxInput c = base;
        times.push_back(time_ms([&] { argmax_update_parallel(c, var, cfg); }));
        if (rep == 0) out = std::move(c);
      }
      RunRow row =
          make_row(spec, to_string(var), th, size_str, median(times), serial_med);
      const bool ok =
          out.highest_confidence.size() == oracle.highest_confidence.size() &&
          std::equal(out.highest_confidence.begin(), out.highest_confidence.end(),
                     oracle.highest_confidence.begin(),
                     [](double x, double y) {
                       return std::memcmp(&x, &y, sizeof(double)) == 0;
                     }) &&
          out.set_high == oracle.set_high;
      row.verified.kind =
          ok ? VerifyStatus::Kind::Exact : VerifyStatus::Kind::Failed;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace

RunReport run(const RunSpec& spec) {
  spec.validate();
  RunReport report;
  switch (spec.kernel) {
    case BenchKernel::Gaussj: report.rows = run_gaussj(spec); break;
    case BenchKernel::Givens: report.rows = run_givens(spec); break;
    case BenchKernel::Smvp: report.rows = run_smvp(spec); break;
    case BenchKernel::Argmax: report.rows = run_argmax(spec); break;
  }
  return report;
}

std::string emit(const RunReport& report, ReportFormat format) {
  const char* names[] = {"kernel",  "strategy", "threads",
                         "size",    "median_time_ms", "speedup",
                         "verified", "misspeculations", "swaps"};
  std::string out;
  if (format == ReportFormat::Csv) {
    for (std::size_t i = 0; i < 9; ++i) {
      out += names[i];
      out += i + 1 < 9 ? "," : "\n";
    }
    for (const RunRow& r : report.rows) {
      out += r.kernel + "," + r.strategy + "," + std::to_string(r.threads) + "," +
             r.size + "," + format_double(r.median_time_ms) + "," +
             format_double(r.speedup) + "," + r.verified.to_string() + "," +
             std::to_string(r.misspeculations) + "," + std::to_string(r.swaps) +
             "\n";
    }
    return out;
  }
  out = "|";
  for (const char* n : names) out += std::string(" ") + n + " |";
  out += "\n|";
  for (std::size_t i = 0; i < 9; ++i) out += " --- |";
  out += "\n";
  for (const RunRow& r : report.rows) {
    out += "| " + r.kernel + " | " + r.strategy + " | " +
           std::to_string(r.threads) + " | " + r.size + " | " +
           format_double(r.median_time_ms) + " | " + format_double(r.speedup) +
           " | " + r.verified.to_string() + " | " +
           std::to_string(r.misspeculations) + " | " + std::to_string(r.swaps) +
           " |\n";
  }
  return out;
}

LegalityOutcome legality(std::span<const DistanceVector> deps,
                         const SkewTileSchedule& schedule) {
  LegalityOutcome out{check_schedule(deps, schedule), "", 0};
  out.text = out.verdict.to_string();
  switch (out.verdict.kind) {
    case Verdict::Kind::Legal: out.exit_code = 0; break;
    case Verdict::Kind::LegalUnderAssumptions: out.exit_code = 3; break;
    case Verdict::Kind::Illegal: out.exit_code = 4; break;
  }
  return out;
}

}  // namespace wavetile
