#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "wavetile/bench.hpp"

namespace {

using namespace wavetile;

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(tok);
  return out;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  for (const auto& tok : split_commas(s)) out.push_back(std::stoi(tok));
  if (out.empty()) throw std::invalid_argument("empty integer list");
  return out;
}

std::vector<std::size_t> parse_size_list(const std::string& s) {
  std::vector<std::size_t> out;
  if (s.empty()) return out;
  for (const auto& tok : split_commas(s))
    out.push_back(static_cast<std::size_t>(std::stoull(tok)));
  return out;
}

SkewTileSchedule parse_schedule(const std::string& skew_str,
                                const std::string& tile_str) {
  std::array<std::array<std::int64_t, 2>, 2> skew{};
  if (skew_str == "identity") {
    skew = {{{1, 0}, {0, 1}}};
  } else {
    const auto parts = split_commas(skew_str);
    if (parts.size() != 4)
      throw std::invalid_argument("--skew expects a,b,c,d or 'identity'");
    skew = {{{std::stoll(parts[0]), std::stoll(parts[1])},
             {std::stoll(parts[2]), std::stoll(parts[3])}}};
  }
  const auto tiles = split_commas(tile_str);
  std::array<std::int64_t, 2> tile{};
  if (tiles.size() == 1) {
    tile = {std::stoll(tiles[0]), std::stoll(tiles[0])};
  } else if (tiles.size() == 2) {
    tile = {std::stoll(tiles[0]), std::stoll(tiles[1])};
  } else {
    throw std::invalid_argument("--tile expects T or T0,T1");
  }
  return SkewTileSchedule(skew, tile);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"skewed+tiled wavefront kernels: benchmark grid and schedule legality"};
  app.require_subcommand(1);

  RunSpec spec;
  std::string kernel, strategy, threads_str = "1", format = "csv";
  std::string cold_rows_str;
  std::int64_t plant_zero = -1;

  CLI::App* runc = app.add_subcommand("run", "run a kernel x strategy x threads grid");
  runc->add_option("--kernel", kernel, "smvp | argmax | givens | gaussj")->required();
  runc->add_option("--strategy", strategy,
                   "strategy/variant, 'auto' (smvp) or 'all' (default)");
  runc->add_option("--threads", threads_str,
                   "comma list, e.g. 1,2,4,8 (env BENCH_THREADS overrides)");
  runc->add_option("--size", spec.size, "generated input size");
  runc->add_option("--input", spec.input_path, "Matrix Market input (gaussj)");
  runc->add_option("--tile", spec.tile, "tile edge length (default 32)");
  runc->add_option("--seed", spec.seed, "generator seed");
  runc->add_option("--reps", spec.reps, "repetitions per variant (median)");
  runc->add_option("--tol", spec.tol, "relative error tolerance for smvp");
  runc->add_option("--format", format, "csv | md")
      ->check(CLI::IsMember({"csv", "md"}));
  runc->add_option("--cache-budget", spec.cache_budget,
                   "per-socket cache budget in bytes for --strategy auto");
  runc->add_option("--degree", spec.avg_degree, "smvp average degree");
  runc->add_option("--block", spec.block, "smvp block edge length");
  runc->add_option("--slots", spec.slots, "argmax slot count");
  runc->add_option("--features", spec.feature_dim, "argmax feature dimension");
  runc->add_option("--plant-zero", plant_zero,
                   "gaussj: plant an exactly-zero pivot at this step");
  runc->add_option("--cold-rows", cold_rows_str,
                   "givens: comma list of rows whose leading entry is zeroed");
  runc->add_flag("--random-rhs", spec.random_rhs,
                 "gaussj: random right-hand side instead of all-ones");

  std::string preset, deps_path, skew_str = "1,0,1,1", tile_str = "32,32";
  CLI::App* legc =
      app.add_subcommand("legality", "check a skew+tile schedule against dependences");
  legc->add_option("--preset", preset, "givens | gaussj")
      ->check(CLI::IsMember({"givens", "gaussj"}));
  legc->add_option("--deps", deps_path, "dependence file: `[lo,hi] [lo,hi] tag weight`");
  legc->add_option("--skew", skew_str, "a,b,c,d row-major or 'identity'");
  legc->add_option("--tile", tile_str, "T or T0,T1");

  CLI11_PARSE(app, argc, argv);

  try {
    if (runc->parsed()) {
      spec.kernel = parse_kernel(kernel);
      spec.strategy = strategy;
      // BENCH_THREADS overrides --threads.
      const char* env = std::getenv("BENCH_THREADS");
      spec.threads = parse_int_list(env && *env ? env : threads_str);
      spec.format = format == "md" ? ReportFormat::Markdown : ReportFormat::Csv;
      if (plant_zero >= 0) spec.plant_zero = static_cast<std::size_t>(plant_zero);
      spec.cold_rows = parse_size_list(cold_rows_str);
      const RunReport report = run(spec);
      std::cout << emit(report, spec.format);
      return report.any_failed() ? 1 : 0;
    }

    std::vector<DistanceVector> deps;
    if (!preset.empty()) {
      deps = preset == "givens" ? givens_dependences() : gaussj_dependences();
    } else if (!deps_path.empty()) {
      std::ifstream f(deps_path);
      if (!f) throw MissingInputError(deps_path);
      deps = parse_dependence_file(f);
    } else {
      throw std::invalid_argument("legality needs --preset or --deps");
    }
    const SkewTileSchedule sched = parse_schedule(skew_str, tile_str);
    const LegalityOutcome out = legality(deps, sched);
    std::cout << out.text << "\n";
    return out.exit_code;
  } catch (const MissingInputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
