#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wavetile/numerics.hpp"

namespace wavetile {

/// Closed integer interval; an absent bound means -inf / +inf.
struct IntervalInt {
  std::optional<std::int64_t> lo;  // nullopt = -inf
  std::optional<std::int64_t> hi;  // nullopt = +inf

  static IntervalInt point(std::int64_t v) { return {v, v}; }
  static IntervalInt range(std::int64_t lo, std::int64_t hi) { return {lo, hi}; }
  static IntervalInt at_least(std::int64_t lo) { return {lo, std::nullopt}; }
  static IntervalInt at_most(std::int64_t hi) { return {std::nullopt, hi}; }
  static IntervalInt all() { return {std::nullopt, std::nullopt}; }

  bool is_point() const { return lo && hi && *lo == *hi; }
  void validate() const;
  bool operator==(const IntervalInt&) const = default;
};

IntervalInt operator+(const IntervalInt& a, const IntervalInt& b);
/// k * [lo, hi] with sign-aware bound swap; k == 0 collapses to [0, 0].
IntervalInt scale_interval(std::int64_t k, const IntervalInt& iv);

enum class DepTag { Always, Assumed };

/// Dependence distance over a 2-deep loop nest, one interval per level.
/// Assumed vectors carry the id of the speculative assumption that removes
/// them and a weight in [0,1] giving how likely the dependence is to
/// manifest at runtime. Always vectors have weight 1.
struct DistanceVector {
  std::vector<IntervalInt> components;
  DepTag tag = DepTag::Always;
  std::string assumption;  // nonempty iff tag == Assumed
  double weight = 1.0;

  static DistanceVector always(std::vector<IntervalInt> comps);
  static DistanceVector assumed(std::string id, double weight,
                                std::vector<IntervalInt> comps);

  void validate() const;
  bool operator==(const DistanceVector&) const = default;
};

/// `[lo,hi] [lo,hi] tag weight` with inf/-inf literals; tag is `always`
/// or `assumed:<id>`.
std::string format_distance_vector(const DistanceVector& d);
std::vector<DistanceVector> parse_dependence_file(std::istream& in);

/// Unimodular 2x2 skew plus per-dimension tile sizes.
struct SkewTileSchedule {
  std::array<std::array<std::int64_t, 2>, 2> skew;
  std::array<std::int64_t, 2> tile;

  SkewTileSchedule(std::array<std::array<std::int64_t, 2>, 2> skew_,
                   std::array<std::int64_t, 2> tile_);

  std::int64_t det() const {
    return skew[0][0] * skew[1][1] - skew[0][1] * skew[1][0];
  }
  static SkewTileSchedule identity(std::int64_t t0 = 32, std::int64_t t1 = 32);
  /// The canonical [[1,0],[1,1]] skew used by the elimination kernels.
  static SkewTileSchedule forward_skew(std::int64_t t0 = 32, std::int64_t t1 = 32);
};

struct Verdict {
  enum class Kind { Legal, LegalUnderAssumptions, Illegal };
  Kind kind = Kind::Legal;
  std::set<std::string> assumptions;          // nonempty iff LegalUnderAssumptions
  std::optional<DistanceVector> violating;    // present iff Illegal

  bool legal() const { return kind == Kind::Legal; }
  std::string to_string() const;
};

/// Applies the skew to a distance vector with interval arithmetic;
/// tag and weight are preserved.
DistanceVector apply_skew(const SkewTileSchedule& s, const DistanceVector& d);

/// A dependence is satisfied when every component of its skewed image has a
/// finite lower bound >= 0 (full permutability), which makes rectangular
/// tiling plus tile-wavefront parallelism legal. Unsatisfied Always
/// dependences make the schedule Illegal (first one in input order is
/// reported); otherwise the unsatisfied Assumed dependences name the
/// assumptions the schedule needs.
Verdict check_schedule(std::span<const DistanceVector> deps,
                       const SkewTileSchedule& s);

/// Splits deps into (kept, speculated): Assumed vectors with weight
/// strictly below the threshold are speculated away, order preserved.
std::pair<std::vector<DistanceVector>, std::vector<DistanceVector>>
speculative_partition(std::span<const DistanceVector> deps, double threshold);

/// Two-dimensional iteration domain: a half-open bounding box plus an
/// optional membership predicate for triangular shapes.
struct Domain2D {
  std::int64_t lo0 = 0, hi0 = 0;  // dimension 0, half-open
  std::int64_t lo1 = 0, hi1 = 0;  // dimension 1, half-open
  std::function<bool(std::int64_t, std::int64_t)> member;  // null = whole box

  bool contains(std::int64_t p0, std::int64_t p1) const {
    if (p0 < lo0 || p0 >= hi0 || p1 < lo1 || p1 >= hi1) return false;
    return !member || member(p0, p1);
  }
};

struct TileCoord {
  std::int64_t t0 = 0, t1 = 0;
  auto operator<=>(const TileCoord&) const = default;
};

/// Tiles of the skewed iteration space grouped into wavefronts by ascending
/// tile-coordinate sum; within a wavefront tiles are sorted by t1. The
/// wavefront index of tile t is (t0 + t1) - min_sum; sums with no tiles keep
/// an empty wavefront so the formula stays exact.
struct WavefrontPlan {
  std::vector<std::vector<TileCoord>> waves;
  Domain2D domain;
  std::array<std::array<std::int64_t, 2>, 2> skew{};
  std::array<std::int64_t, 2> tile{1, 1};
  std::int64_t min_sum = 0;

  std::size_t tile_count() const;
  TileCoord tile_of(std::int64_t p0, std::int64_t p1) const;
  std::int64_t wave_of(TileCoord t) const { return t.t0 + t.t1 - min_sum; }
};

/// Enumerates every domain point, maps it through the schedule and groups
/// the resulting tiles into wavefronts. Empty domain gives an empty plan.
WavefrontPlan wavefronts(const Domain2D& domain, const SkewTileSchedule& s);

/// Brute-force check that no dependence connects two distinct tiles of the
/// same wavefront: every (point, dependence instance) pair inside the
/// domain is tested. Interval components are concretized up to the domain
/// extent. Intended for small domains.
bool assert_wavefront_independence(std::span<const DistanceVector> deps,
                                   const WavefrontPlan& plan,
                                   const SkewTileSchedule& s);

}  // namespace wavetile
