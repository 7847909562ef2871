#pragma once

// Integer interval domain used by the online check and the solver's
// narrowing pass. Bounds saturate at +/-inf; arithmetic goes through
// __int128 to dodge overflow.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>

namespace shapecheck {

struct Interval {
  static constexpr long long kNegInf = INT64_MIN;
  static constexpr long long kPosInf = INT64_MAX;

  long long lo = kNegInf;
  long long hi = kPosInf;

  static Interval top() { return {}; }
  static Interval point(long long v) { return {v, v}; }
  static Interval range(long long lo, long long hi) { return {lo, hi}; }

  bool isTop() const { return lo == kNegInf && hi == kPosInf; }
  bool isPoint() const { return lo == hi && lo != kNegInf && hi != kPosInf; }
  bool boundedBelow() const { return lo != kNegInf; }
  bool boundedAbove() const { return hi != kPosInf; }
  bool finite() const { return boundedBelow() && boundedAbove(); }
  bool contains(long long v) const { return lo <= v && v <= hi; }

  /// Domain size; nullopt when unbounded.
  std::optional<unsigned long long> width() const {
    if (!finite()) return std::nullopt;
    return static_cast<unsigned long long>(static_cast<__int128>(hi) - lo + 1);
  }

  bool operator==(const Interval&) const = default;
};

namespace ivl {

inline long long clamp128(__int128 v) {
  if (v <= static_cast<__int128>(Interval::kNegInf)) return Interval::kNegInf;
  if (v >= static_cast<__int128>(Interval::kPosInf)) return Interval::kPosInf;
  return static_cast<long long>(v);
}

/// Intersection; nullopt when empty.
inline std::optional<Interval> meet(Interval a, Interval b) {
  Interval r{std::max(a.lo, b.lo), std::min(a.hi, b.hi)};
  if (r.lo > r.hi) return std::nullopt;
  return r;
}

inline Interval add(Interval a, Interval b) {
  long long lo = (a.lo == Interval::kNegInf || b.lo == Interval::kNegInf)
                     ? Interval::kNegInf
                     : clamp128(static_cast<__int128>(a.lo) + b.lo);
  long long hi = (a.hi == Interval::kPosInf || b.hi == Interval::kPosInf)
                     ? Interval::kPosInf
                     : clamp128(static_cast<__int128>(a.hi) + b.hi);
  return {lo, hi};
}

inline Interval neg(Interval a) {
  long long lo = a.hi == Interval::kPosInf ? Interval::kNegInf : clamp128(-static_cast<__int128>(a.hi));
  long long hi = a.lo == Interval::kNegInf ? Interval::kPosInf : clamp128(-static_cast<__int128>(a.lo));
  return {lo, hi};
}

inline Interval sub(Interval a, Interval b) { return add(a, neg(b)); }

inline Interval mul(Interval a, Interval b) {
  // Any infinite endpoint with a possibly-nonzero other side gives top.
  if (!a.finite() || !b.finite()) {
    if (a.lo == 0 && a.hi == 0) return Interval::point(0);
    if (b.lo == 0 && b.hi == 0) return Interval::point(0);
    return Interval::top();
  }
  __int128 c[4] = {static_cast<__int128>(a.lo) * b.lo, static_cast<__int128>(a.lo) * b.hi,
                   static_cast<__int128>(a.hi) * b.lo, static_cast<__int128>(a.hi) * b.hi};
  __int128 lo = c[0], hi = c[0];
  for (int i = 1; i < 4; ++i) {
    lo = std::min(lo, c[i]);
    hi = std::max(hi, c[i]);
  }
  return {clamp128(lo), clamp128(hi)};
}

inline Interval mul_const(Interval a, long long k) { return mul(a, Interval::point(k)); }

/// Floor division by a constant nonzero divisor.
inline Interval fdiv_const(Interval a, long long k) {
  if (k == 0) return Interval::top();
  auto fd = [k](long long v) -> long long {
    if (v == Interval::kNegInf || v == Interval::kPosInf) return v;
    long long q = v / k;
    if ((v % k) != 0 && ((v < 0) != (k < 0))) --q;
    return q;
  };
  long long c0 = fd(a.lo), c1 = fd(a.hi);
  if (k < 0) {
    std::swap(c0, c1);
    if (c0 == Interval::kPosInf) c0 = Interval::kNegInf;  // -inf/-k flips
    if (c1 == Interval::kNegInf) c1 = Interval::kPosInf;
  }
  return {c0, c1};
}

/// Floor modulo: result sign follows the divisor.
inline Interval fmod_range(Interval divisor) {
  if (divisor.lo >= 1) {
    long long hi = divisor.hi == Interval::kPosInf ? Interval::kPosInf : divisor.hi - 1;
    return {0, hi};
  }
  if (divisor.hi <= -1) {
    long long lo = divisor.lo == Interval::kNegInf ? Interval::kNegInf : divisor.lo + 1;
    return {lo, 0};
  }
  return Interval::top();
}

}  // namespace ivl

/// Per-symbol interval context; absent symbols are unconstrained.
using IntervalCtx = std::map<int32_t, Interval>;

}  // namespace shapecheck
