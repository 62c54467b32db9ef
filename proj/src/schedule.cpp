#include "wavetile/schedule.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace wavetile {

void IntervalInt::validate() const {
  if (lo && hi && *lo > *hi)
    throw std::invalid_argument("IntervalInt: lo > hi");
}

IntervalInt operator+(const IntervalInt& a, const IntervalInt& b) {
  IntervalInt out;
  if (a.lo && b.lo) out.lo = *a.lo + *b.lo;
  if (a.hi && b.hi) out.hi = *a.hi + *b.hi;
  return out;
}

IntervalInt scale_interval(std::int64_t k, const IntervalInt& iv) {
  if (k == 0) return IntervalInt::point(0);
  IntervalInt out;
  if (k > 0) {
    if (iv.lo) out.lo = k * *iv.lo;
    if (iv.hi) out.hi = k * *iv.hi;
  } else {
    if (iv.hi) out.lo = k * *iv.hi;
    if (iv.lo) out.hi = k * *iv.lo;
  }
  return out;
}

DistanceVector DistanceVector::always(std::vector<IntervalInt> comps) {
  DistanceVector d;
  d.components = std::move(comps);
  d.tag = DepTag::Always;
  d.weight = 1.0;
  d.validate();
  return d;
}

DistanceVector DistanceVector::assumed(std::string id, double weight,
                                       std::vector<IntervalInt> comps) {
  DistanceVector d;
  d.components = std::move(comps);
  d.tag = DepTag::Assumed;
  d.assumption = std::move(id);
  d.weight = weight;
  d.validate();
  return d;
}

void DistanceVector::validate() const {
  if (components.empty())
    throw std::invalid_argument("DistanceVector: no components");
  for (const auto& c : components) c.validate();
  if (weight < 0.0 || weight > 1.0)
    throw std::invalid_argument("DistanceVector: weight outside [0,1]");
  if (tag == DepTag::Always && weight != 1.0)
    throw std::invalid_argument("DistanceVector: Always dependence must have weight 1");
  if (tag == DepTag::Assumed && assumption.empty())
    throw std::invalid_argument("DistanceVector: Assumed dependence needs an id");
  if (tag == DepTag::Always && !assumption.empty())
    throw std::invalid_argument("DistanceVector: Always dependence cannot carry an id");
}

namespace {

std::string format_bound(const std::optional<std::int64_t>& b, bool is_lo) {
  if (!b) return is_lo ? "-inf" : "inf";
  return std::to_string(*b);
}

std::optional<std::int64_t> parse_bound(const std::string& tok, long line) {
  if (tok == "inf" || tok == "+inf" || tok == "-inf") return std::nullopt;
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size())
    throw ParseError("bad interval bound '" + tok + "'", line);
  return v;
}

IntervalInt parse_interval(const std::string& tok, long line) {
  if (tok.size() < 5 || tok.front() != '[' || tok.back() != ']')
    throw ParseError("expected [lo,hi], got '" + tok + "'", line);
  const std::string body = tok.substr(1, tok.size() - 2);
  const auto comma = body.find(',');
  if (comma == std::string::npos)
    throw ParseError("expected [lo,hi], got '" + tok + "'", line);
  const std::string lo_tok = body.substr(0, comma);
  const std::string hi_tok = body.substr(comma + 1);
  IntervalInt iv;
  iv.lo = parse_bound(lo_tok, line);
  iv.hi = parse_bound(hi_tok, line);
  if (lo_tok == "inf" || lo_tok == "+inf")
    throw ParseError("lower bound cannot be +inf", line);
  if (hi_tok == "-inf") throw ParseError("upper bound cannot be -inf", line);
  try {
    iv.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what(), line);
  }
  return iv;
}

}  // namespace

std::string format_distance_vector(const DistanceVector& d) {
  std::string out;
  for (const auto& c : d.components) {
    out += "[" + format_bound(c.lo, true) + "," + format_bound(c.hi, false) + "] ";
  }
  if (d.tag == DepTag::Always)
    out += "always";
  else
    out += "assumed:" + d.assumption;
  out += " " + format_double(d.weight);
  return out;
}

std::vector<DistanceVector> parse_dependence_file(std::istream& in) {
  std::vector<DistanceVector> out;
  std::string raw;
  long line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    std::istringstream ss(raw);
    std::vector<std::string> toks;
    std::string t;
    while (ss >> t) toks.push_back(t);
    if (toks.empty()) continue;
    if (toks.size() < 3)
      throw ParseError("expected `[lo,hi] ... tag weight`", line_no);
    DistanceVector d;
    for (std::size_t i = 0; i + 2 < toks.size(); ++i)
      d.components.push_back(parse_interval(toks[i], line_no));
    const std::string& tag = toks[toks.size() - 2];
    if (tag == "always") {
      d.tag = DepTag::Always;
    } else if (tag.rfind("assumed:", 0) == 0) {
      d.tag = DepTag::Assumed;
      d.assumption = tag.substr(8);
      if (d.assumption.empty())
        throw ParseError("assumed tag needs an id", line_no);
    } else {
      throw ParseError("unknown tag '" + tag + "'", line_no);
    }
    const std::string& wtok = toks.back();
    double w = 0;
    auto [p, ec] = std::from_chars(wtok.data(), wtok.data() + wtok.size(), w);
    if (ec != std::errc() || p != wtok.data() + wtok.size())
      throw ParseError("bad weight '" + wtok + "'", line_no);
    d.weight = w;
    try {
      d.validate();
    } catch (const std::invalid_argument& e) {
      throw ParseError(e.what(), line_no);
    }
    out.push_back(std::move(d));
  }
  return out;
}

SkewTileSchedule::SkewTileSchedule(
    std::array<std::array<std::int64_t, 2>, 2> skew_,
    std::array<std::int64_t, 2> tile_)
    : skew(skew_), tile(tile_) {
  if (det() != 1 && det() != -1)
    throw std::invalid_argument("SkewTileSchedule: skew must be unimodular");
  if (tile[0] < 1 || tile[1] < 1)
    throw std::invalid_argument("SkewTileSchedule: tile sizes must be >= 1");
}

SkewTileSchedule SkewTileSchedule::identity(std::int64_t t0, std::int64_t t1) {
  return SkewTileSchedule({{{1, 0}, {0, 1}}}, {t0, t1});
}

SkewTileSchedule SkewTileSchedule::forward_skew(std::int64_t t0, std::int64_t t1) {
  return SkewTileSchedule({{{1, 0}, {1, 1}}}, {t0, t1});
}

std::string Verdict::to_string() const {
  switch (kind) {
    case Kind::Legal:
      return "Legal";
    case Kind::LegalUnderAssumptions: {
      std::string out = "LegalUnderAssumptions:";
      for (const auto& a : assumptions) out += " " + a;
      return out;
    }
    case Kind::Illegal:
      return "Illegal: violated by " + format_distance_vector(*violating);
  }
  return {};
}

DistanceVector apply_skew(const SkewTileSchedule& s, const DistanceVector& d) {
  if (d.components.size() != 2)
    throw std::invalid_argument("apply_skew: expected a 2-deep distance vector");
  DistanceVector out = d;
  for (int r = 0; r < 2; ++r) {
    IntervalInt acc = scale_interval(s.skew[r][0], d.components[0]);
    acc = acc + scale_interval(s.skew[r][1], d.components[1]);
    out.components[r] = acc;
  }
  return out;
}

namespace {

bool satisfied(const SkewTileSchedule& s, const DistanceVector& d) {
  const DistanceVector img = apply_skew(s, d);
  for (const auto& c : img.components)
    if (!c.lo || *c.lo < 0) return false;
  return true;
}

}  // namespace

Verdict check_schedule(std::span<const DistanceVector> deps,
                       const SkewTileSchedule& s) {
  Verdict v;
  for (const auto& d : deps) {
    if (satisfied(s, d)) continue;
    if (d.tag == DepTag::Always) {
      v.kind = Verdict::Kind::Illegal;
      v.violating = d;
      v.assumptions.clear();
      return v;
    }
    v.assumptions.insert(d.assumption);
  }
  v.kind = v.assumptions.empty() ? Verdict::Kind::Legal
                                 : Verdict::Kind::LegalUnderAssumptions;
  return v;
}

std::pair<std::vector<DistanceVector>, std::vector<DistanceVector>>
speculative_partition(std::span<const DistanceVector> deps, double threshold) {
  if (threshold < 0.0 || threshold > 1.0)
    throw std::invalid_argument("speculative_partition: threshold outside [0,1]");
  std::vector<DistanceVector> kept, speculated;
  for (const auto& d : deps) {
    if (d.tag == DepTag::Assumed && d.weight < threshold)
      speculated.push_back(d);
    else
      kept.push_back(d);
  }
  return {std::move(kept), std::move(speculated)};
}

std::size_t WavefrontPlan::tile_count() const {
  std::size_t n = 0;
  for (const auto& w : waves) n += w.size();
  return n;
}

TileCoord WavefrontPlan::tile_of(std::int64_t p0, std::int64_t p1) const {
  const std::int64_t c0 = skew[0][0] * p0 + skew[0][1] * p1;
  const std::int64_t c1 = skew[1][0] * p0 + skew[1][1] * p1;
  return {floord(c0, tile[0]), floord(c1, tile[1])};
}

WavefrontPlan wavefronts(const Domain2D& domain, const SkewTileSchedule& s) {
  WavefrontPlan plan;
  plan.domain = domain;
  plan.skew = s.skew;
  plan.tile = s.tile;

  std::set<TileCoord> tiles;
  for (std::int64_t p0 = domain.lo0; p0 < domain.hi0; ++p0)
    for (std::int64_t p1 = domain.lo1; p1 < domain.hi1; ++p1) {
      if (domain.member && !domain.member(p0, p1)) continue;
      tiles.insert(plan.tile_of(p0, p1));
    }
  if (tiles.empty()) return plan;

  std::map<std::int64_t, std::vector<TileCoord>> by_sum;
  for (const TileCoord& t : tiles) by_sum[t.t0 + t.t1].push_back(t);
  plan.min_sum = by_sum.begin()->first;
  const std::int64_t max_sum = by_sum.rbegin()->first;
  plan.waves.resize(static_cast<std::size_t>(max_sum - plan.min_sum + 1));
  for (auto& [sum, ts] : by_sum) {
    std::sort(ts.begin(), ts.end(),
              [](const TileCoord& a, const TileCoord& b) { return a.t1 < b.t1; });
    plan.waves[static_cast<std::size_t>(sum - plan.min_sum)] = std::move(ts);
  }
  return plan;
}

bool assert_wavefront_independence(std::span<const DistanceVector> deps,
                                   const WavefrontPlan& plan,
                                   const SkewTileSchedule& s) {
  if (s.skew != plan.skew || s.tile != plan.tile)
    throw std::invalid_argument(
        "assert_wavefront_independence: schedule does not match the plan");
  const Domain2D& dom = plan.domain;
  const std::int64_t ext0 = dom.hi0 - dom.lo0;
  const std::int64_t ext1 = dom.hi1 - dom.lo1;
  if (ext0 <= 0 || ext1 <= 0) return true;

  auto clamp_range = [](const IntervalInt& iv, std::int64_t ext) {
    const std::int64_t lo = iv.lo ? std::max(*iv.lo, -ext) : -ext;
    const std::int64_t hi = iv.hi ? std::min(*iv.hi, ext) : ext;
    return std::pair<std::int64_t, std::int64_t>(lo, hi);
  };

  for (std::int64_t p0 = dom.lo0; p0 < dom.hi0; ++p0)
    for (std::int64_t p1 = dom.lo1; p1 < dom.hi1; ++p1) {
      if (!dom.contains(p0, p1)) continue;
      const TileCoord tp = plan.tile_of(p0, p1);
      for (const auto& d : deps) {
        if (d.components.size() != 2)
          throw std::invalid_argument("assert_wavefront_independence: 2-D deps only");
        const auto [d0lo, d0hi] = clamp_range(d.components[0], ext0);
        const auto [d1lo, d1hi] = clamp_range(d.components[1], ext1);
        for (std::int64_t d0 = d0lo; d0 <= d0hi; ++d0)
          for (std::int64_t d1 = d1lo; d1 <= d1hi; ++d1) {
            if (d0 == 0 && d1 == 0) continue;
            const std::int64_t q0 = p0 + d0, q1 = p1 + d1;
            if (!dom.contains(q0, q1)) continue;
            const TileCoord tq = plan.tile_of(q0, q1);
            if (tq != tp && plan.wave_of(tq) == plan.wave_of(tp)) return false;
          }
      }
    }
  return true;
}

}  // namespace wavetile
