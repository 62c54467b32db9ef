#pragma once

// Test-side oracles. Everything here recomputes expectations by brute force,
// independently of the library code paths under test.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <set>
#include <utility>
#include <vector>

#include "wavetile/numerics.hpp"
#include "wavetile/schedule.hpp"

namespace wavetile::oracles {

/// Expands a symmetric block-sparse matrix into a dense (n*B) x (n*B) one.
inline DenseMatrix densify(const BlockSparseSym& s) {
  const std::size_t B = s.block;
  DenseMatrix d(s.n * B, s.n * B);
  for (std::size_t i = 0; i < s.n; ++i) {
    for (std::int64_t e = s.row_ptr[i]; e < s.row_ptr[i + 1]; ++e) {
      const std::size_t col = static_cast<std::size_t>(s.col_idx[e]);
      const auto blk = s.block_at(static_cast<std::size_t>(e));
      for (std::size_t r = 0; r < B; ++r)
        for (std::size_t c = 0; c < B; ++c) {
          d(i * B + r, col * B + c) = blk[r * B + c];
          if (col != i) d(col * B + c, i * B + r) = blk[r * B + c];
        }
    }
  }
  return d;
}

/// w += A * v with v and w read as flattened n*B vectors.
inline void dense_accumulate(const DenseMatrix& a, const DenseMatrix& v,
                             DenseMatrix& w) {
  const std::size_t n = a.rows();
  for (std::size_t r = 0; r < n; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < n; ++c) s += a(r, c) * v.values()[c];
    w.values()[r] += s;
  }
}

// ---------------------------------------------------------------------------
// Dependence extraction by read/write-set intersection.

/// Memory cells touched by one macro-iteration. Cells are opaque encodings.
struct IterationAccess {
  std::vector<std::int64_t> reads;
  std::vector<std::int64_t> writes;
};
using AccessFn = std::function<IterationAccess(std::int64_t, std::int64_t)>;

/// Footprint of one rotation iteration (k, i): both parts of rows i and i+1
/// over columns [k, N) are read and written.
inline IterationAccess givens_access(std::int64_t n_cols, std::int64_t k,
                                     std::int64_t i) {
  IterationAccess a;
  for (std::int64_t r : {i, i + 1})
    for (std::int64_t j = k; j < n_cols; ++j)
      a.reads.push_back(r * (n_cols + 1) + j);
  a.writes = a.reads;
  return a;
}

/// Footprint of one elimination update U(k, i): reads pivot row k and row i
/// over columns [k, n) plus both right-hand-side cells (encoded as column
/// n); writes row i over columns (k, n) and its right-hand-side cell.
inline IterationAccess gaussj_access(std::int64_t n, std::int64_t k,
                                     std::int64_t i) {
  IterationAccess a;
  for (std::int64_t r : {k, i}) {
    for (std::int64_t j = k; j < n; ++j) a.reads.push_back(r * (n + 1) + j);
    a.reads.push_back(r * (n + 1) + n);
  }
  for (std::int64_t j = k + 1; j < n; ++j) a.writes.push_back(i * (n + 1) + j);
  a.writes.push_back(i * (n + 1) + n);
  return a;
}

struct ExtractedDeps {
  /// Distinct conflict distances with outer component 0 or 1.
  std::set<std::pair<std::int64_t, std::int64_t>> window;
  /// Whether every observed longer distance decomposes into a nonnegative
  /// integer combination of window vectors (verified, not assumed).
  bool long_range_covered = true;
  std::set<std::pair<std::int64_t, std::int64_t>> uncovered;
};

namespace detail {

inline bool intersects(const std::vector<std::int64_t>& a,
                       const std::vector<std::int64_t>& b) {
  // Both are built sorted by construction order; sort defensively once here.
  for (std::int64_t x : a)
    if (std::binary_search(b.begin(), b.end(), x)) return true;
  return false;
}

inline bool covered_by_window(
    std::pair<std::int64_t, std::int64_t> d,
    const std::set<std::pair<std::int64_t, std::int64_t>>& window,
    std::int64_t extent) {
  std::vector<std::int64_t> zero_steps, one_steps;
  for (const auto& w : window)
    (w.first == 0 ? zero_steps : one_steps).push_back(w.second);
  // Reachable inner sums after composing exactly d.first unit outer steps.
  std::set<std::int64_t> reach{0};
  for (std::int64_t t = 0; t < d.first; ++t) {
    std::set<std::int64_t> next;
    for (std::int64_t x : reach)
      for (std::int64_t s : one_steps)
        if (std::llabs(x + s) <= 2 * extent) next.insert(x + s);
    reach = std::move(next);
    if (reach.empty()) return false;
  }
  for (std::int64_t x : reach) {
    std::int64_t rem = d.second - x;
    if (rem == 0) return true;
    if (rem < 0) continue;
    // Pad with zero-outer steps (all have positive inner component).
    std::vector<char> can(static_cast<std::size_t>(rem) + 1, 0);
    can[0] = 1;
    for (std::int64_t v = 1; v <= rem; ++v)
      for (std::int64_t s : zero_steps)
        if (s <= v && can[static_cast<std::size_t>(v - s)]) can[static_cast<std::size_t>(v)] = 1;
    if (can[static_cast<std::size_t>(rem)]) return true;
  }
  return false;
}

}  // namespace detail

/// Brute-force pairwise read/write-set intersection over every ordered pair
/// of domain iterations. Distances with outer component <= 1 form the
/// reported set; the live column range of every row is rewritten at each
/// outer step that touches it, so longer conflicts are transitive - which
/// this oracle verifies per observed distance instead of assuming.
inline ExtractedDeps extract_dependences(const Domain2D& dom,
                                         const AccessFn& access) {
  std::vector<std::pair<std::int64_t, std::int64_t>> pts;
  for (std::int64_t p0 = dom.lo0; p0 < dom.hi0; ++p0)
    for (std::int64_t p1 = dom.lo1; p1 < dom.hi1; ++p1)
      if (dom.contains(p0, p1)) pts.emplace_back(p0, p1);

  std::vector<IterationAccess> acc(pts.size());
  for (std::size_t t = 0; t < pts.size(); ++t) {
    acc[t] = access(pts[t].first, pts[t].second);
    std::sort(acc[t].reads.begin(), acc[t].reads.end());
    std::sort(acc[t].writes.begin(), acc[t].writes.end());
  }

  ExtractedDeps out;
  std::set<std::pair<std::int64_t, std::int64_t>> longer;
  for (std::size_t p = 0; p < pts.size(); ++p)
    for (std::size_t q = p + 1; q < pts.size(); ++q) {
      const bool conflict =
          detail::intersects(acc[p].writes, acc[q].writes) ||
          detail::intersects(acc[p].writes, acc[q].reads) ||
          detail::intersects(acc[p].reads, acc[q].writes);
      if (!conflict) continue;
      const std::pair<std::int64_t, std::int64_t> d{
          pts[q].first - pts[p].first, pts[q].second - pts[p].second};
      (d.first <= 1 ? out.window : longer).insert(d);
    }

  const std::int64_t extent =
      std::max(dom.hi0 - dom.lo0, dom.hi1 - dom.lo1);
  for (const auto& d : longer)
    if (!detail::covered_by_window(d, out.window, extent)) {
      out.long_range_covered = false;
      out.uncovered.insert(d);
    }
  return out;
}

}  // namespace wavetile::oracles
