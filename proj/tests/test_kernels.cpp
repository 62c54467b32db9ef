#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <atomic>
#include <cmath>
#include <cstring>
#include <mutex>
#include <vector>

#include "oracles.hpp"
#include "wavetile/kernels.hpp"

using namespace wavetile;

namespace {

DenseMatrix ones(std::size_t n) {
  DenseMatrix b(n, 1);
  for (double& x : b.values()) x = 1.0;
  return b;
}

double smvp_max_rel_err(const DenseMatrix& got, const DenseMatrix& want,
                        const DenseMatrix& scale) {
  double max_err = 0.0;
  for (std::size_t i = 0; i < got.rows(); ++i)
    for (std::size_t c = 0; c < got.cols(); ++c) {
      const double d = std::fabs(got(i, c) - want(i, c));
      if (d == 0.0) continue;
      const double s = scale(i, c);
      max_err = std::max(max_err, s > 0.0 ? d / s : 1e300);
    }
  return max_err;
}

}  // namespace

// ---------------------------------------------------------------------------
// smvp

TEST_CASE("smvp_serial: 2x2 example against the dense oracle") {
  BlockSparseSym m;
  m.n = 2;
  m.block = 1;
  m.row_ptr = {0, 2, 3};
  m.col_idx = {0, 1, 1};
  m.blocks = {2.0, 1.0, 3.0};  // diag(0)=2, off(0,1)=1, diag(1)=3
  SmvpInput in{m, DenseMatrix(2, 1), DenseMatrix(2, 1)};
  in.v(0, 0) = 1.0;
  in.v(1, 0) = 1.0;
  smvp_serial(in);
  CHECK(in.w(0, 0) == 3.0);
  CHECK(in.w(1, 0) == 4.0);

  const DenseMatrix dense = oracles::densify(m);
  CHECK(dense(0, 0) == 2.0);
  CHECK(dense(0, 1) == 1.0);
  CHECK(dense(1, 0) == 1.0);
  CHECK(dense(1, 1) == 3.0);
}

TEST_CASE("smvp_serial: diagonal only and zero vector") {
  Rng rng(3);
  BlockSparseSample s = gen_block_sparse(5, 0.0, 3, rng);
  SmvpInput in{std::move(s.matrix), std::move(s.v), DenseMatrix(5, 3)};
  SmvpInput diag_in = in;
  smvp_serial(diag_in);
  // w[i] = D(i) * v[i] only
  for (std::size_t i = 0; i < 5; ++i) {
    const auto d = in.matrix.block_at(static_cast<std::size_t>(in.matrix.row_ptr[i]));
    for (std::size_t c = 0; c < 3; ++c) {
      double want = 0.0;
      for (std::size_t b = 0; b < 3; ++b) want += d[c * 3 + b] * in.v(i, b);
      REQUIRE(diag_in.w(i, c) == want);
    }
  }
  SmvpInput zero_in = in;
  for (double& x : zero_in.v.values()) x = 0.0;
  zero_in.w(0, 0) = 5.0;
  smvp_serial(zero_in);
  CHECK(zero_in.w(0, 0) == 5.0);
  for (std::size_t i = 1; i < 5; ++i) CHECK(zero_in.w(i, 0) == 0.0);
}

TEST_CASE("smvp_serial matches the dense oracle on random inputs") {
  Rng pick(31);
  for (int t = 0; t < 15; ++t) {
    const std::size_t n = 1 + pick.below(40);
    const std::size_t B = 1 + pick.below(3);
    Rng gen(pick.next_u64());
    BlockSparseSample s = gen_block_sparse(n, 4.0, B, gen);
    SmvpInput in{std::move(s.matrix), std::move(s.v), DenseMatrix(n, B)};
    const DenseMatrix dense = oracles::densify(in.matrix);
    DenseMatrix want(n, B);
    oracles::dense_accumulate(dense, in.v, want);
    const DenseMatrix scale = smvp_accumulation_scale(in);
    smvp_serial(in);
    REQUIRE(smvp_max_rel_err(in.w, want, scale) <= 1e-13);
  }
}

TEST_CASE("smvp_parallel: single-thread equivalence per strategy") {
  Rng rng(8);
  BlockSparseSample s = gen_block_sparse(60, 6.0, 3, rng);
  SmvpInput base{std::move(s.matrix), std::move(s.v), DenseMatrix(60, 3)};
  for (double& x : base.w.values()) x = 0.25;  // nonzero initial accumulator
  SmvpInput serial = base;
  smvp_serial(serial);
  const DenseMatrix scale = smvp_accumulation_scale(base);

  for (auto strat : {ReductionStrategy::Serial, ReductionStrategy::Locked,
                     ReductionStrategy::Atomic}) {
    SmvpInput in = base;
    smvp_parallel(in, strat, ExecConfig{1, true});
    REQUIRE(bitwise_equal(in.w, serial.w));
  }
  SmvpInput priv = base;
  smvp_parallel(priv, ReductionStrategy::Privatized, ExecConfig{1, true});
  CHECK(smvp_max_rel_err(priv.w, serial.w, scale) <= 1e-12);
}

TEST_CASE("smvp_parallel: n=2000 all strategies within 1e-12 of serial") {
  Rng rng(12);
  BlockSparseSample s = gen_block_sparse(2000, 8.0, 3, rng);
  SmvpInput base{std::move(s.matrix), std::move(s.v), DenseMatrix(2000, 3)};
  SmvpInput serial = base;
  smvp_serial(serial);
  const DenseMatrix scale = smvp_accumulation_scale(base);

  for (auto strat : {ReductionStrategy::Locked, ReductionStrategy::Atomic,
                     ReductionStrategy::Privatized})
    for (int threads : {2, 4, 8}) {
      SmvpInput in = base;
      smvp_parallel(in, strat, ExecConfig{threads, true});
      REQUIRE(smvp_max_rel_err(in.w, serial.w, scale) <= 1e-12);
    }
}

TEST_CASE("smvp_parallel: privatized runs are bit-reproducible") {
  Rng rng(13);
  BlockSparseSample s = gen_block_sparse(500, 8.0, 3, rng);
  const SmvpInput base{std::move(s.matrix), std::move(s.v), DenseMatrix(500, 3)};
  SmvpInput first = base;
  smvp_parallel(first, ReductionStrategy::Privatized, ExecConfig{4, true});
  for (int rep = 0; rep < 4; ++rep) {
    SmvpInput again = base;
    smvp_parallel(again, ReductionStrategy::Privatized, ExecConfig{4, true});
    REQUIRE(bitwise_equal(again.w, first.w));
  }
}

TEST_CASE("smvp_parallel: Serial strategy rejects multiple threads") {
  Rng rng(2);
  BlockSparseSample s = gen_block_sparse(10, 2.0, 3, rng);
  SmvpInput in{std::move(s.matrix), std::move(s.v), DenseMatrix(10, 3)};
  CHECK_THROWS_AS(smvp_parallel(in, ReductionStrategy::Serial, ExecConfig{2, true}),
                  std::invalid_argument);
}

// ---------------------------------------------------------------------------
// argmax

namespace {

// Trials with confidence exactly conf via one feature and unit weight.
ArgmaxInput simple_argmax(std::vector<std::pair<std::size_t, double>> trials,
                          std::vector<double> initial) {
  ArgmaxInput in;
  in.features = DenseMatrix(trials.size(), 1);
  for (std::size_t t = 0; t < trials.size(); ++t) {
    in.winners.push_back(trials[t].first);
    in.features(t, 0) = trials[t].second;
  }
  in.weights = {1.0};
  in.highest_confidence = std::move(initial);
  in.set_high.assign(in.highest_confidence.size(), 0);
  return in;
}

ArgmaxInput random_argmax(std::size_t trials, std::size_t slots,
                          std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  ArgmaxInput in;
  in.winners.resize(trials);
  for (auto& w : in.winners) w = static_cast<std::size_t>(rng.below(slots));
  in.features = DenseMatrix(trials, dim);
  for (double& x : in.features.values()) x = rng.uniform(0.0, 1.0);
  in.weights.resize(dim);
  for (double& x : in.weights) x = rng.uniform(0.0, 1.0);
  in.highest_confidence.resize(slots);
  for (double& x : in.highest_confidence)
    x = rng.uniform(0.0, 0.5 * static_cast<double>(dim));
  in.set_high.assign(slots, 0);
  return in;
}

bool argmax_equal(const ArgmaxInput& a, const ArgmaxInput& b) {
  return a.set_high == b.set_high &&
         std::memcmp(a.highest_confidence.data(), b.highest_confidence.data(),
                     a.highest_confidence.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("argmax_update_serial examples") {
  ArgmaxInput in = simple_argmax({{0, 5.0}, {0, 3.0}, {1, 7.0}}, {4.0, 9.0});
  argmax_update_serial(in);
  CHECK(in.highest_confidence == std::vector<double>{5.0, 9.0});
  CHECK(in.set_high == std::vector<std::uint8_t>{1, 0});

  ArgmaxInput empty = simple_argmax({}, {1.0, 2.0});
  argmax_update_serial(empty);
  CHECK(empty.highest_confidence == std::vector<double>{1.0, 2.0});
  CHECK(empty.set_high == std::vector<std::uint8_t>{0, 0});

  // equal confidence does not update: the comparison is strict
  ArgmaxInput eq = simple_argmax({{0, 4.0}}, {4.0});
  argmax_update_serial(eq);
  CHECK(eq.set_high == std::vector<std::uint8_t>{0});
}

TEST_CASE("argmax_update_parallel equals serial exactly") {
  {
    for (auto strat : {ArgmaxStrategy::CriticalSection, ArgmaxStrategy::Privatized}) {
      ArgmaxInput in = simple_argmax({{0, 5.0}, {0, 3.0}, {1, 7.0}}, {4.0, 9.0});
      argmax_update_parallel(in, strat, ExecConfig{8, true});
      CHECK(in.highest_confidence == std::vector<double>{5.0, 9.0});
      CHECK(in.set_high == std::vector<std::uint8_t>{1, 0});
    }
  }
  {
    // all trials map to one winner
    ArgmaxInput in = simple_argmax({{0, 1.0}, {0, 9.0}, {0, 2.0}, {0, 9.0}}, {3.0});
    ArgmaxInput ser = in;
    argmax_update_serial(ser);
    argmax_update_parallel(in, ArgmaxStrategy::Privatized, ExecConfig{4, true});
    CHECK(argmax_equal(in, ser));
    CHECK(in.highest_confidence[0] == 9.0);
  }
  {
    ArgmaxInput base = random_argmax(1000000, 512, 8, 99);
    ArgmaxInput ser = base;
    argmax_update_serial(ser);
    for (auto strat :
         {ArgmaxStrategy::CriticalSection, ArgmaxStrategy::Privatized})
      for (int threads : {2, 8}) {
        ArgmaxInput in = base;
        argmax_update_parallel(in, strat, ExecConfig{threads, false});
        REQUIRE(argmax_equal(in, ser));
      }
  }
}

// ---------------------------------------------------------------------------
// givens

namespace {

ComplexSplitMatrix two_by_one(double top, double bottom) {
  ComplexSplitMatrix a(2, 1);
  a.re(0, 0) = top;
  a.re(1, 0) = bottom;
  return a;
}

}  // namespace

TEST_CASE("givens branch 1: swap when the next row's entry is zero") {
  ComplexSplitMatrix a = two_by_one(5.0, 0.0);
  std::array<std::int64_t, 3> counts{0, 0, 0};
  GivensBranchHook hook = [&](std::int64_t, std::int64_t, int b) { counts[b]++; };
  givens_serial(a, &hook);
  CHECK(counts == std::array<std::int64_t, 3>{1, 0, 0});
  CHECK(a.re(0, 0) == 0.0);
  CHECK(a.re(1, 0) == 5.0);
}

TEST_CASE("givens branch 3: rotation moves the norm to the lower row") {
  ComplexSplitMatrix a = two_by_one(3.0, 4.0);
  std::array<std::int64_t, 3> counts{0, 0, 0};
  GivensBranchHook hook = [&](std::int64_t, std::int64_t, int b) { counts[b]++; };
  givens_serial(a, &hook);
  CHECK(counts == std::array<std::int64_t, 3>{0, 0, 1});

  // hand trace: nm = 5, nf = 3, sig = 1, c = 3/5, s = 4/5
  const double nm = std::sqrt(3.0 * 3.0 + 4.0 * 4.0);
  const double nf = std::sqrt(3.0 * 3.0);
  CHECK(nm == 5.0);
  CHECK(nf == 3.0);
  const double sig_r = 3.0 / nf;
  const double c_r = nf / nm;
  const double s_r = (sig_r * 4.0 + 0.0) / nm;
  const double want_top = -s_r * 3.0 - 0.0 + c_r * 4.0;
  const double want_bot = c_r * 3.0 + s_r * 4.0 - 0.0;
  CHECK(a.re(0, 0) == want_top);
  CHECK(a.re(1, 0) == want_bot);
  CHECK(std::fabs(a.re(0, 0)) <= 1e-15);
  CHECK(a.re(1, 0) == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(a.im(0, 0) == 0.0);
}

TEST_CASE("givens branch 2: half rotation when the current row entry is zero") {
  ComplexSplitMatrix a = two_by_one(0.0, 1.0);
  std::array<std::int64_t, 3> counts{0, 0, 0};
  GivensBranchHook hook = [&](std::int64_t, std::int64_t, int b) { counts[b]++; };
  givens_serial(a, &hook);
  CHECK(counts == std::array<std::int64_t, 3>{0, 1, 0});
}

TEST_CASE("givens_tiled: single tile, one thread traces the serial order") {
  Rng rng(5);
  ComplexSplitMatrix a = gen_complex_random(10, 10, rng);
  ComplexSplitMatrix b = a;
  std::vector<std::pair<std::int64_t, std::int64_t>> serial_order, tiled_order;
  GivensBranchHook h1 = [&](std::int64_t k, std::int64_t i, int) {
    serial_order.push_back({k, i});
  };
  GivensBranchHook h2 = [&](std::int64_t k, std::int64_t i, int) {
    tiled_order.push_back({k, i});
  };
  givens_serial(a, &h1);
  givens_tiled(b, 32, ExecConfig{1, true}, &h2);  // 10 <= 32: one tile
  CHECK(serial_order == tiled_order);
  CHECK(bitwise_equal(a, b));
}

TEST_CASE("givens_tiled is bitwise identical to serial") {
  Rng rng(600);
  const ComplexSplitMatrix base = gen_complex_random(300, 300, rng);
  ComplexSplitMatrix serial = base;
  givens_serial(serial);
  for (int threads : {1, 8})
    for (std::int64_t tile : {4, 32}) {
      ComplexSplitMatrix t = base;
      givens_tiled(t, tile, ExecConfig{threads, true});
      REQUIRE(bitwise_equal(t, serial));
    }
}

TEST_CASE("givens_tiled: cold branches exercised and still bitwise exact") {
  const std::size_t cold[] = {0, 1, 150};
  Rng rng(601);
  const ComplexSplitMatrix base = gen_complex_random(300, 300, rng, cold);
  ComplexSplitMatrix serial = base;
  givens_serial(serial);
  std::array<std::atomic<std::int64_t>, 3> counts{};
  GivensBranchHook hook = [&](std::int64_t, std::int64_t, int b) {
    counts[static_cast<std::size_t>(b)].fetch_add(1, std::memory_order_relaxed);
  };
  ComplexSplitMatrix t = base;
  givens_tiled(t, 32, ExecConfig{8, true}, &hook);
  REQUIRE(bitwise_equal(t, serial));
  CHECK(counts[0].load() >= 1);
  CHECK(counts[1].load() >= 1);
  CHECK(counts[2].load() >= 1);
}

// ---------------------------------------------------------------------------
// gaussj

TEST_CASE("gaussj_serial hand traces") {
  {
    const GaussjResult r = gaussj_serial(
        DenseMatrix::from_rows({{2, 1}, {4, 1}}), DenseMatrix::from_rows({{1}, {1}}));
    CHECK(r.a(0, 0) == 2.0);
    CHECK(r.a(0, 1) == 1.0);
    CHECK(r.a(1, 0) == 4.0);  // column below the diagonal is left untouched
    CHECK(r.a(1, 1) == -1.0);
    CHECK(r.b(0, 0) == 1.0);
    CHECK(r.b(1, 0) == -1.0);
    CHECK(r.swaps.empty());
    CHECK(r.misspeculations == 0);
  }
  {
    const GaussjResult r = gaussj_serial(
        DenseMatrix::from_rows({{0, 1}, {1, 0}}), DenseMatrix::from_rows({{1}, {2}}));
    CHECK(r.a(0, 0) == 1.0);
    CHECK(r.a(0, 1) == 0.0);
    CHECK(r.a(1, 1) == 1.0);
    CHECK(r.b(0, 0) == 2.0);
    CHECK(r.b(1, 0) == 1.0);
    REQUIRE(r.swaps.size() == 1);
    CHECK(r.swaps[0] == GaussjSwap{0, 1});
  }
  CHECK_THROWS_AS(gaussj_serial(DenseMatrix::from_rows({{0, 0}, {0, 1}}),
                                DenseMatrix::from_rows({{1}, {1}})),
                  SingularMatrixError);
  CHECK_THROWS_AS(gaussj_serial(DenseMatrix(3, 2), DenseMatrix(3, 1)),
                  std::invalid_argument);
  CHECK_THROWS_AS(gaussj_serial(DenseMatrix(2, 2), DenseMatrix(2, 2)),
                  std::invalid_argument);
}

TEST_CASE("gaussj_speculative: clean input, no misspeculation") {
  Rng rng(42);
  const DenseMatrix a = gen_random_dense(500, rng);
  const DenseMatrix b = ones(500);
  const GaussjResult serial = gaussj_serial(a, b);
  REQUIRE(serial.swaps.empty());
  for (int threads : {1, 2, 4, 8}) {
    const GaussjResult r = gaussj_speculative(a, b, 32, ExecConfig{threads, true});
    REQUIRE(bitwise_equal(r.a, serial.a));
    REQUIRE(bitwise_equal(r.b, serial.b));
    REQUIRE(r.swaps == serial.swaps);
    REQUIRE(r.misspeculations == 0);
  }
}

TEST_CASE("gaussj_speculative: positive definite input never misspeculates") {
  Rng rng(7);
  const DenseMatrix a = gen_spd(300, rng);
  const DenseMatrix b = ones(300);
  const GaussjResult serial = gaussj_serial(a, b);
  REQUIRE(serial.swaps.empty());
  const GaussjResult r = gaussj_speculative(a, b, 32, ExecConfig{4, true});
  CHECK(r.misspeculations == 0);
  CHECK(bitwise_equal(r.a, serial.a));
  CHECK(bitwise_equal(r.b, serial.b));
}

TEST_CASE("gaussj_speculative: planted zero pivot recovers exactly once") {
  Rng rng(3);
  const DenseMatrix a = gen_zero_pivot(100, 37, rng);
  const DenseMatrix b = ones(100);
  const GaussjResult serial = gaussj_serial(a, b);
  REQUIRE(serial.swaps.size() == 1);
  const GaussjResult r = gaussj_speculative(a, b, 32, ExecConfig{8, true});
  CHECK(r.misspeculations == 1);
  CHECK(r.swaps == serial.swaps);
  CHECK(bitwise_equal(r.a, serial.a));
  CHECK(bitwise_equal(r.b, serial.b));
}

TEST_CASE("gaussj_speculative: misspeculations equal the oracle swap count") {
  Rng pick(555);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 20 + pick.below(60);
    const std::size_t k = pick.below(n - 1);
    Rng gen(pick.next_u64());
    const DenseMatrix a = gen_zero_pivot(n, k, gen);
    const DenseMatrix b = ones(n);
    const GaussjResult serial = gaussj_serial(a, b);
    const int threads = 1 + static_cast<int>(pick.below(8));
    const std::int64_t tile = std::array<std::int64_t, 3>{4, 8, 32}[pick.below(3)];
    const GaussjResult r = gaussj_speculative(a, b, tile, ExecConfig{threads, true});
    REQUIRE(r.misspeculations ==
            static_cast<std::int64_t>(serial.swaps.size()));
    REQUIRE(r.swaps == serial.swaps);
    REQUIRE(bitwise_equal(r.a, serial.a));
    REQUIRE(bitwise_equal(r.b, serial.b));
  }
}

TEST_CASE("gaussj_speculative: multi-plant stress input") {
  Rng rng(11);
  DenseMatrix a = gen_random_dense(120, rng);
  for (const std::size_t kp : {20ul, 40ul, 70ul})
    for (std::size_t j = 0; j <= kp; ++j) a(kp, j) = 0.0;
  const DenseMatrix b = ones(120);
  const GaussjResult serial = gaussj_serial(a, b);
  const GaussjResult r = gaussj_speculative(a, b, 8, ExecConfig{4, true});
  CHECK(r.misspeculations >= 1);
  CHECK(r.swaps == serial.swaps);
  CHECK(bitwise_equal(r.a, serial.a));
  CHECK(bitwise_equal(r.b, serial.b));
  for (std::size_t s = 1; s < r.swaps.size(); ++s)
    REQUIRE(r.swaps[s - 1].step < r.swaps[s].step);
}

TEST_CASE("gaussj_speculative: singular input raises like serial") {
  DenseMatrix a(3, 3);
  a(0, 0) = 0.0;  // whole first column zero: pivot search finds nothing
  a(0, 1) = 1.0;
  a(0, 2) = 2.0;
  a(1, 1) = 3.0;
  a(2, 2) = 4.0;
  const DenseMatrix b = ones(3);
  CHECK_THROWS_AS(gaussj_serial(a, b), SingularMatrixError);
  CHECK_THROWS_AS(gaussj_speculative(a, b, 4, ExecConfig{2, true}),
                  SingularMatrixError);
}

TEST_CASE("gaussj_speculative: no consumer runs before its detection") {
  // Instrumented run: for a misspeculation at step k, no update of any step
  // >= k may appear in the log before the detection record.
  Rng rng(3);
  const DenseMatrix a = gen_zero_pivot(100, 37, rng);
  const DenseMatrix b = ones(100);
  std::mutex m;
  std::vector<GaussjTraceEvent> log;
  GaussjTraceHook hook = [&](const GaussjTraceEvent& e) {
    std::lock_guard lk(m);
    log.push_back(e);
  };
  const GaussjResult r = gaussj_speculative(a, b, 8, ExecConfig{8, true}, &hook);
  REQUIRE(r.misspeculations == 1);
  std::vector<std::size_t> detections;
  for (std::size_t t = 0; t < log.size(); ++t)
    if (log[t].kind == GaussjTraceEvent::Kind::Detect) detections.push_back(t);
  REQUIRE(detections.size() == 1);
  const std::int64_t kf = log[detections[0]].k;
  CHECK(kf == 37);
  for (std::size_t t = 0; t < detections[0]; ++t) {
    REQUIRE(log[t].kind == GaussjTraceEvent::Kind::Update);
    REQUIRE(log[t].k < kf);
  }
  // The event log names the failing step once.
  // (Recovery re-runs steps >= kf after the detection record.)
}

TEST_CASE("gaussj_speculative: oracle equivalence sweep") {
  Rng pick(777);
  for (const std::size_t n : {50ul, 130ul, 257ul}) {
    Rng gen(pick.next_u64());
    const DenseMatrix a = gen_random_dense(n, gen);
    const DenseMatrix b = ones(n);
    const GaussjResult serial = gaussj_serial(a, b);
    for (const std::int64_t tile : {4, 32, 64})
      for (const int threads : {2, 8}) {
        const GaussjResult r =
            gaussj_speculative(a, b, tile, ExecConfig{threads, true});
        REQUIRE(bitwise_equal(r.a, serial.a));
        REQUIRE(bitwise_equal(r.b, serial.b));
        REQUIRE(r.swaps == serial.swaps);
      }
  }
}
