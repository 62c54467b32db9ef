#include "wavetile/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>

namespace wavetile {

// ---------------------------------------------------------------------------
// smvp

void SmvpInput::validate() const {
  matrix.validate();
  if (v.rows() != matrix.n || v.cols() != matrix.block)
    throw std::invalid_argument("SmvpInput: v must be n x block");
  if (w.rows() != matrix.n || w.cols() != matrix.block)
    throw std::invalid_argument("SmvpInput: w must be n x block");
}

void smvp_serial(SmvpInput& in) {
  in.validate();
  const BlockSparseSym& m = in.matrix;
  const std::size_t bsz = m.block;
  for (std::size_t i = 0; i < m.n; ++i) {
    const auto diag = m.block_at(static_cast<std::size_t>(m.row_ptr[i]));
    for (std::size_t c = 0; c < bsz; ++c) {
      double s = 0.0;
      for (std::size_t b = 0; b < bsz; ++b) s += diag[c * bsz + b] * in.v(i, b);
      in.w(i, c) += s;
    }
    for (std::int64_t e = m.row_ptr[i] + 1; e < m.row_ptr[i + 1]; ++e) {
      const std::size_t col = static_cast<std::size_t>(m.col_idx[e]);
      const auto blk = m.block_at(static_cast<std::size_t>(e));
      for (std::size_t c = 0; c < bsz; ++c) {
        double s = 0.0;
        for (std::size_t b = 0; b < bsz; ++b) s += blk[c * bsz + b] * in.v(col, b);
        in.w(i, c) += s;
      }
      // Scatter: the transposed block applied to this row's v, accumulated
      // into the neighbor's output row.
      for (std::size_t c = 0; c < bsz; ++c) {
        double s = 0.0;
        for (std::size_t b = 0; b < bsz; ++b) s += blk[b * bsz + c] * in.v(i, b);
        in.w(col, c) += s;
      }
    }
  }
}

void smvp_parallel(SmvpInput& in, ReductionStrategy strategy,
                   const ExecConfig& cfg) {
  in.validate();
  if (strategy == ReductionStrategy::Serial && cfg.threads > 1)
    throw std::invalid_argument("smvp_parallel: Serial strategy requires one thread");
  BlockSparseSym& m = in.matrix;
  const std::size_t bsz = m.block;
  ReductionSlots slots(strategy, std::span<double>(in.w.values()), m.n, bsz,
                       cfg.threads);
  // With Privatized the scatters are buffered per worker, so each output row
  // is only ever touched by its owner and the row-local adds can go straight
  // to w. Locked/Atomic scatter into w itself, so the row-local adds must
  // use the same mechanism or they would race with a neighbor's scatter.
  const bool direct_row_adds = strategy == ReductionStrategy::Privatized;

  parallel_for(0, static_cast<std::int64_t>(m.n), cfg,
               [&](int worker, std::int64_t row) {
                 const std::size_t i = static_cast<std::size_t>(row);
                 const auto diag = m.block_at(static_cast<std::size_t>(m.row_ptr[i]));
                 for (std::size_t c = 0; c < bsz; ++c) {
                   double s = 0.0;
                   for (std::size_t b = 0; b < bsz; ++b)
                     s += diag[c * bsz + b] * in.v(i, b);
                   if (direct_row_adds)
                     in.w(i, c) += s;
                   else
                     slots.add(worker, i, c, s);
                 }
                 for (std::int64_t e = m.row_ptr[i] + 1; e < m.row_ptr[i + 1]; ++e) {
                   const std::size_t col = static_cast<std::size_t>(m.col_idx[e]);
                   const auto blk = m.block_at(static_cast<std::size_t>(e));
                   for (std::size_t c = 0; c < bsz; ++c) {
                     double s = 0.0;
                     for (std::size_t b = 0; b < bsz; ++b)
                       s += blk[c * bsz + b] * in.v(col, b);
                     if (direct_row_adds)
                       in.w(i, c) += s;
                     else
                       slots.add(worker, i, c, s);
                   }
                   for (std::size_t c = 0; c < bsz; ++c) {
                     double s = 0.0;
                     for (std::size_t b = 0; b < bsz; ++b)
                       s += blk[b * bsz + c] * in.v(i, b);
                     slots.add(worker, col, c, s);
                   }
                 }
               });
  slots.finalize();
}

DenseMatrix smvp_accumulation_scale(const SmvpInput& in) {
  in.validate();
  const BlockSparseSym& m = in.matrix;
  const std::size_t bsz = m.block;
  DenseMatrix scale(m.n, bsz);
  for (std::size_t i = 0; i < m.n; ++i)
    for (std::size_t c = 0; c < bsz; ++c) scale(i, c) = std::fabs(in.w(i, c));
  for (std::size_t i = 0; i < m.n; ++i) {
    const auto diag = m.block_at(static_cast<std::size_t>(m.row_ptr[i]));
    for (std::size_t c = 0; c < bsz; ++c)
      for (std::size_t b = 0; b < bsz; ++b)
        scale(i, c) += std::fabs(diag[c * bsz + b] * in.v(i, b));
    for (std::int64_t e = m.row_ptr[i] + 1; e < m.row_ptr[i + 1]; ++e) {
      const std::size_t col = static_cast<std::size_t>(m.col_idx[e]);
      const auto blk = m.block_at(static_cast<std::size_t>(e));
      for (std::size_t c = 0; c < bsz; ++c)
        for (std::size_t b = 0; b < bsz; ++b) {
          scale(i, c) += std::fabs(blk[c * bsz + b] * in.v(col, b));
          scale(col, c) += std::fabs(blk[b * bsz + c] * in.v(i, b));
        }
    }
  }
  return scale;
}

// ---------------------------------------------------------------------------
// argmax

void ArgmaxInput::validate() const {
  if (features.rows() != winners.size())
    throw std::invalid_argument("ArgmaxInput: one feature row per trial");
  if (features.cols() != weights.size())
    throw std::invalid_argument("ArgmaxInput: feature dim != weight dim");
  if (set_high.size() != highest_confidence.size())
    throw std::invalid_argument("ArgmaxInput: flag/value slot counts differ");
  for (std::size_t w : winners)
    if (w >= highest_confidence.size())
      throw std::invalid_argument("ArgmaxInput: winner out of range");
}

const char* to_string(ArgmaxStrategy s) {
  switch (s) {
    case ArgmaxStrategy::CriticalSection: return "critical";
    case ArgmaxStrategy::Privatized: return "privatized";
  }
  return "?";
}

namespace {

double trial_confidence(const ArgmaxInput& in, std::size_t t) {
  double s = 0.0;
  const double* f = in.features.row(t);
  for (std::size_t j = 0; j < in.weights.size(); ++j) s += f[j] * in.weights[j];
  return s;
}

}  // namespace

void argmax_update_serial(ArgmaxInput& in) {
  in.validate();
  for (std::size_t t = 0; t < in.trials(); ++t) {
    const double conf = trial_confidence(in, t);
    const std::size_t w = in.winners[t];
    if (conf > in.highest_confidence[w]) {
      in.highest_confidence[w] = conf;
      in.set_high[w] = 1;
    }
  }
}

void argmax_update_parallel(ArgmaxInput& in, ArgmaxStrategy strategy,
                            const ExecConfig& cfg) {
  in.validate();
  const std::int64_t trials = static_cast<std::int64_t>(in.trials());
  if (strategy == ArgmaxStrategy::CriticalSection) {
    std::vector<std::mutex> stripes(ReductionSlots::kStripes);
    parallel_for(0, trials, cfg, [&](int, std::int64_t t) {
      const double conf = trial_confidence(in, static_cast<std::size_t>(t));
      const std::size_t w = in.winners[static_cast<std::size_t>(t)];
      std::lock_guard lk(stripes[w % stripes.size()]);
      if (conf > in.highest_confidence[w]) {
        in.highest_confidence[w] = conf;
        in.set_high[w] = 1;
      }
    });
    return;
  }

  const std::size_t slots = in.highest_confidence.size();
  const int workers = cfg.threads;
  std::vector<std::vector<double>> best(
      workers, std::vector<double>(slots, -std::numeric_limits<double>::infinity()));
  std::vector<std::vector<std::uint8_t>> touched(
      workers, std::vector<std::uint8_t>(slots, 0));
  parallel_for(0, trials, cfg, [&](int worker, std::int64_t t) {
    const double conf = trial_confidence(in, static_cast<std::size_t>(t));
    const std::size_t w = in.winners[static_cast<std::size_t>(t)];
    auto& mine = best[static_cast<std::size_t>(worker)];
    if (conf > mine[w]) {
      mine[w] = conf;
      touched[static_cast<std::size_t>(worker)][w] = 1;
    }
  });
  // Ordered merge; max is order-insensitive, so the end state is exact.
  for (int w = 0; w < workers; ++w)
    for (std::size_t s = 0; s < slots; ++s)
      if (best[static_cast<std::size_t>(w)][s] > in.highest_confidence[s]) {
        in.highest_confidence[s] = best[static_cast<std::size_t>(w)][s];
        in.set_high[s] = in.set_high[s] || touched[static_cast<std::size_t>(w)][s];
      }
}

// ---------------------------------------------------------------------------
// givens

namespace {

// One (k, i) elimination step. Shared verbatim by the serial and tiled
// variants so both produce identical scalar operation sequences. The four
// row pointers (two rows, real and imaginary parts) never alias.
inline void givens_step(DenseMatrix& ar, DenseMatrix& ai, std::int64_t ncols,
                        std::int64_t k, std::int64_t i,
                        const GivensBranchHook* hook) {
  double* __restrict r0 = ar.row(static_cast<std::size_t>(i));
  double* __restrict r1 = ar.row(static_cast<std::size_t>(i + 1));
  double* __restrict m0 = ai.row(static_cast<std::size_t>(i));
  double* __restrict m1 = ai.row(static_cast<std::size_t>(i + 1));
  if (r1[k] == 0.0 && m1[k] == 0.0) {
    if (hook) (*hook)(k, i, 0);
    for (std::int64_t j = k; j < ncols; ++j) {
      const double t1_r = r1[j];
      const double t1_i = m1[j];
      const double t2_r = r0[j];
      const double t2_i = m0[j];
      r0[j] = t1_r;
      m0[j] = t1_i;
      r1[j] = t2_r;
      m1[j] = t2_i;
    }
  } else if (r0[k] == 0.0 && m0[k] == 0.0) {
    if (hook) (*hook)(k, i, 1);
    const double ng = std::sqrt(r1[k] * r1[k] + m1[k] * m1[k]);
    const double s_r = r1[k] / ng;
    const double s_i = -m1[k] / ng;
    for (std::int64_t j = k; j < ncols; ++j) {
      const double t1_r = -s_r * r0[j] - s_i * m0[j];
      const double t1_i = -s_r * m0[j] + s_i * r0[j];
      const double t2_r = s_r * r1[j] - s_i * m1[j];
      const double t2_i = s_r * m1[j] + s_i * r1[j];
      r0[j] = t1_r;
      m0[j] = t1_i;
      r1[j] = t2_r;
      m1[j] = t2_i;
    }
  } else {
    if (hook) (*hook)(k, i, 2);
    const double nm = std::sqrt(r0[k] * r0[k] + m0[k] * m0[k] +
                                r1[k] * r1[k] + m1[k] * m1[k]);
    const double nf = std::sqrt(r0[k] * r0[k] + m0[k] * m0[k]);
    const double sig_r = r0[k] / nf;
    const double sig_i = m0[k] / nf;
    const double c_r = nf / nm;
    const double s_r = (sig_r * r1[k] + sig_i * m1[k]) / nm;
    const double s_i = (sig_i * r1[k] - sig_r * -m1[k]) / nm;
    for (std::int64_t j = k; j < ncols; ++j) {
      const double t1_r = -s_r * r0[j] - s_i * m0[j] + c_r * r1[j];
      const double t1_i = -s_r * m0[j] + s_i * r0[j] + c_r * m1[j];
      const double t2_r = c_r * r0[j] + s_r * r1[j] - s_i * m1[j];
      const double t2_i = c_r * m0[j] + s_r * m1[j] + s_i * r1[j];
      r0[j] = t1_r;
      m0[j] = t1_i;
      r1[j] = t2_r;
      m1[j] = t2_i;
    }
  }
}

void check_givens_input(const ComplexSplitMatrix& a) {
  a.validate();
  if (a.rows() < 2)
    throw std::invalid_argument("givens: need at least 2 rows");
  if (a.cols() < 1)
    throw std::invalid_argument("givens: need at least 1 column");
}

}  // namespace

void givens_serial(ComplexSplitMatrix& a, const GivensBranchHook* hook) {
  check_givens_input(a);
  const std::int64_t m = static_cast<std::int64_t>(a.rows());
  const std::int64_t n = static_cast<std::int64_t>(a.cols());
  for (std::int64_t k = 0; k < n; ++k)
    for (std::int64_t i = 0; i < m - 1 - k; ++i)
      givens_step(a.re, a.im, n, k, i, hook);
}

Domain2D givens_domain(std::int64_t m, std::int64_t n) {
  Domain2D d;
  d.lo0 = 0;
  d.hi0 = n;
  d.lo1 = 0;
  d.hi1 = std::max<std::int64_t>(m - 1, 0);
  d.member = [m](std::int64_t k, std::int64_t i) { return i < m - 1 - k; };
  return d;
}

void givens_tiled(ComplexSplitMatrix& a, std::int64_t tile, const ExecConfig& cfg,
                  const GivensBranchHook* hook) {
  check_givens_input(a);
  if (tile < 1) throw std::invalid_argument("givens_tiled: tile must be >= 1");
  const std::int64_t m = static_cast<std::int64_t>(a.rows());
  const std::int64_t n = static_cast<std::int64_t>(a.cols());
  const SkewTileSchedule sched = SkewTileSchedule::forward_skew(tile, tile);
  const WavefrontPlan plan = wavefronts(givens_domain(m, n), sched);
  DenseMatrix& ar = a.re;
  DenseMatrix& ai = a.im;
  execute_wavefronts(
      plan, cfg, nullptr, [&](std::int64_t, TileCoord t) {
        const std::int64_t k_lo = std::max<std::int64_t>(0, t.t0 * tile);
        const std::int64_t k_hi = std::min(n - 1, t.t0 * tile + tile - 1);
        for (std::int64_t k = k_lo; k <= k_hi; ++k) {
          const std::int64_t i_lo = std::max<std::int64_t>(0, t.t1 * tile - k);
          const std::int64_t i_hi = std::min(m - 2 - k, t.t1 * tile + tile - 1 - k);
          for (std::int64_t i = i_lo; i <= i_hi; ++i)
            givens_step(ar, ai, n, k, i, hook);
        }
      });
}

// ---------------------------------------------------------------------------
// gaussj

namespace {

inline void gaussj_update(DenseMatrix& a, DenseMatrix& b, std::int64_t n,
                          std::int64_t k, std::int64_t i) {
  // Rows k and i are distinct (i > k), so the two row pointers never alias.
  double* __restrict ri = a.row(static_cast<std::size_t>(i));
  const double* __restrict rk = a.row(static_cast<std::size_t>(k));
  const double xfac = ri[k] / rk[k];
  for (std::int64_t j = k + 1; j < n; ++j) ri[j] -= xfac * rk[j];
  b(i, 0) -= xfac * b(k, 0);
}

// Pivot search for a step whose diagonal is exactly zero: largest |a[i][k]|
// strictly below the diagonal, first maximum wins.
void gaussj_pivot(DenseMatrix& a, DenseMatrix& b, std::int64_t n, std::int64_t k,
                  std::vector<GaussjSwap>& swaps) {
  double amax = std::fabs(a(k, k));
  std::int64_t m = k;
  for (std::int64_t i = k + 1; i < n; ++i) {
    const double aabs = std::fabs(a(i, k));
    if (aabs > amax) {
      amax = aabs;
      m = i;
    }
  }
  if (amax == 0.0) throw SingularMatrixError(k);
  if (m != k) {
    std::swap(b(m, 0), b(k, 0));
    for (std::int64_t j = k; j < n; ++j) std::swap(a(k, j), a(m, j));
    swaps.push_back({k, m});
  }
}

std::int64_t check_gaussj_input(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != a.cols()) throw std::invalid_argument("gaussj: a must be square");
  if (a.rows() < 2) throw std::invalid_argument("gaussj: need n >= 2");
  if (b.rows() != a.rows() || b.cols() != 1)
    throw std::invalid_argument("gaussj: b must be n x 1");
  return static_cast<std::int64_t>(a.rows());
}

}  // namespace

GaussjResult gaussj_serial(DenseMatrix a, DenseMatrix b) {
  const std::int64_t n = check_gaussj_input(a, b);
  GaussjResult res{std::move(a), std::move(b), {}, 0};
  for (std::int64_t k = 0; k < n - 1; ++k) {
    if (res.a(k, k) == 0.0) gaussj_pivot(res.a, res.b, n, k, res.swaps);
    for (std::int64_t i = k + 1; i < n; ++i) gaussj_update(res.a, res.b, n, k, i);
  }
  return res;
}

Domain2D gaussj_domain(std::int64_t k0, std::int64_t n) {
  Domain2D d;
  d.lo0 = k0;
  d.hi0 = n - 1;
  d.lo1 = k0 + 1;
  d.hi1 = n;
  d.member = [](std::int64_t k, std::int64_t i) { return i >= k + 1; };
  return d;
}

GaussjResult gaussj_speculative(DenseMatrix a, DenseMatrix b, std::int64_t tile,
                                const ExecConfig& cfg,
                                const GaussjTraceHook* trace) {
  const std::int64_t n = check_gaussj_input(a, b);
  if (tile < 1) throw std::invalid_argument("gaussj_speculative: tile must be >= 1");
  GaussjResult res{std::move(a), std::move(b), {}, 0};
  DenseMatrix& A = res.a;
  DenseMatrix& B = res.b;
  const SkewTileSchedule sched = SkewTileSchedule::forward_skew(tile, tile);
  SpecController ctl(static_cast<std::size_t>(n - 1));

  std::int64_t k0 = 0;
  while (k0 < n - 1) {
    ctl.reset_failure();
    const WavefrontPlan plan = wavefronts(gaussj_domain(k0, n), sched);
    auto body = [&](std::int64_t wf, TileCoord t) {
      const std::int64_t k_lo = std::max(k0, t.t0 * tile);
      const std::int64_t k_hi = std::min(n - 2, t.t0 * tile + tile - 1);
      for (std::int64_t k = k_lo; k <= k_hi; ++k) {
        if (ctl.failed_at() <= k) continue;  // step is beyond a failed pivot
        const std::int64_t i_lo = std::max(k + 1, t.t1 * tile - k);
        const std::int64_t i_hi = std::min(n - 1, t.t1 * tile + tile - 1 - k);
        if (i_lo > i_hi) continue;
        if (i_lo == k + 1 && A(k, k) == 0.0) {
          // This tile owns the first update of step k and validates the
          // pivot before any consumer of it can have run.
          if (trace) (*trace)({GaussjTraceEvent::Kind::Detect, k, -1});
          ctl.report_misspeculation(k, static_cast<int>(wf));
          continue;
        }
        for (std::int64_t i = i_lo; i <= i_hi; ++i) {
          if (trace) (*trace)({GaussjTraceEvent::Kind::Update, k, i});
          gaussj_update(A, B, n, k, i);
        }
        ctl.advance_progress(static_cast<std::size_t>(k), i_hi);
      }
    };
    const WavefrontRunStatus st = execute_wavefronts(plan, cfg, &ctl, body);
    if (!st.failed) break;

    const std::int64_t kf = st.failed_at;
    // Recovery: serially complete every unfinished pre-failure update in
    // ascending (k, i) order, then pivot the failing step and respeculate
    // from there. Nothing at or beyond step kf has run, so no rollback.
    for (std::int64_t k = k0; k < kf; ++k) {
      for (std::int64_t i = ctl.progress(static_cast<std::size_t>(k)) + 1; i < n; ++i) {
        if (trace) (*trace)({GaussjTraceEvent::Kind::Update, k, i});
        gaussj_update(A, B, n, k, i);
      }
      ctl.advance_progress(static_cast<std::size_t>(k), n - 1);
    }
    gaussj_pivot(A, B, n, kf, res.swaps);
    res.misspeculations += 1;
    k0 = kf;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Modeled dependence sets.

std::vector<DistanceVector> givens_dependences() {
  using I = IntervalInt;
  return {
      DistanceVector::always({I::point(0), I::point(1)}),
      DistanceVector::always({I::point(1), I::point(-1)}),
      DistanceVector::always({I::point(1), I::point(0)}),
      DistanceVector::always({I::point(1), I::point(1)}),
  };
}

std::vector<DistanceVector> gaussj_dependences() {
  using I = IntervalInt;
  return {
      DistanceVector::always({I::point(1), I::point(0)}),
      DistanceVector::always({I::point(1), I::at_least(1)}),
      DistanceVector::assumed("no-pivot", 0.01, {I::point(1), I::all()}),
  };
}

}  // namespace wavetile
