#include "cantor/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "cantor/kernels.hpp"

namespace cantor {
namespace {

using boost::multiprecision::int256_t;

// ---------------------------------------------------------------------------
// Exact point fractions.  Distribution points are fractions num/den with
// den <= 2^63: digit-ratio points are a_i/q_i, orbit points are quantized
// tail units on the 2^-63 grid.  All comparisons are exact integer
// cross-multiplications; nothing in the discrepancy path touches floating
// point.

struct Frac {
  std::uint64_t num;
  std::uint64_t den;
};

bool frac_less(const Frac& a, const Frac& b) {
  return static_cast<unsigned __int128>(a.num) * b.den <
         static_cast<unsigned __int128>(b.num) * a.den;
}

bool frac_eq(const Frac& a, const Frac& b) {
  return static_cast<unsigned __int128>(a.num) * b.den ==
         static_cast<unsigned __int128>(b.num) * a.den;
}

BigInt bigint_from_u128(unsigned __int128 v) {
  BigInt out = static_cast<std::uint64_t>(v >> 64);
  out <<= 64;
  out += static_cast<std::uint64_t>(v);
  return out;
}

BigInt bigint_from_i128(__int128 v) {
  if (v < 0) return -bigint_from_u128(static_cast<unsigned __int128>(-v));
  return bigint_from_u128(static_cast<unsigned __int128>(v));
}

Rational frac_to_rational(const Frac& f) {
  return Rational(BigInt(f.num), BigInt(f.den));
}

// A star-scan candidate p / q with q = N * den.  With N < 2^33 and
// den <= 2^63 the numerator stays below 2^98 in magnitude and the
// denominator below 2^96, so cross products need at most 194 bits.
struct ScanFrac {
  __int128 p;
  unsigned __int128 q;
};

int256_t i256_from_u128(unsigned __int128 v) {
  int256_t out = static_cast<std::uint64_t>(v >> 64);
  out <<= 64;
  out += static_cast<std::uint64_t>(v);
  return out;
}

int256_t i256_from_i128(__int128 v) {
  if (v < 0) return -i256_from_u128(static_cast<unsigned __int128>(-v));
  return i256_from_u128(static_cast<unsigned __int128>(v));
}

// sign of a.p/a.q - b.p/b.q
int cmp_scan(const ScanFrac& a, const ScanFrac& b) {
  const int256_t lhs = i256_from_i128(a.p) * i256_from_u128(b.q);
  const int256_t rhs = i256_from_i128(b.p) * i256_from_u128(a.q);
  if (lhs < rhs) return -1;
  return lhs > rhs ? 1 : 0;
}

// Exact star discrepancy of an ascending point list by the sorted-sample
// formula max_i max(i/N - u_(i), u_(i) - (i-1)/N).
Rational star_sorted(const std::vector<Frac>& u) {
  const std::uint64_t n = u.size();
  ScanFrac best{-1, 1};
  for (std::uint64_t i = 1; i <= n; ++i) {
    const Frac& f = u[i - 1];
    const auto q = static_cast<unsigned __int128>(n) * f.den;
    const auto iden =
        static_cast<__int128>(static_cast<unsigned __int128>(i) * f.den);
    const auto num_n =
        static_cast<__int128>(static_cast<unsigned __int128>(f.num) * n);
    const ScanFrac right{iden - num_n, q};                  // i/N - u_i
    const ScanFrac left{num_n - (iden - static_cast<__int128>(f.den)),
                        q};                                 // u_i - (i-1)/N
    if (cmp_scan(right, best) > 0) best = right;
    if (cmp_scan(left, best) > 0) best = left;
  }
  return Rational(bigint_from_i128(best.p), bigint_from_u128(best.q));
}

// ---------------------------------------------------------------------------
// Extreme discrepancy.  Candidate interval endpoints are the distinct point
// values plus the sentinels 0 and 1; endpoint membership is resolved toward
// the larger deviation, so the count-rich side of a pair includes points on
// its endpoints and the length-rich side excludes them.  One left-to-right
// scan with two prefix maxima covers every pair exactly.

struct ValEntry {
  Rational w;              // candidate endpoint value
  std::uint64_t cstrict;   // #points with value <  w
  std::uint64_t cincl;     // #points with value <= w
};

struct ExtremeOut {
  Rational value;
  Rational a;
  Rational b;
};

ExtremeOut extreme_over_values(const std::vector<ValEntry>& w, std::uint64_t n) {
  // Count-rich pair (s < t):  (cincl_t - cstrict_s)/N - (w_t - w_s)
  //   = [cincl_t/N - w_t] + [w_s - cstrict_s/N]
  // Length-rich pair (s < t): (w_t - w_s) - (cstrict_t - cincl_s)/N
  //   = [w_t - cstrict_t/N] + [cincl_s/N - w_s]
  Rational bcnt = w[0].w - Rational(w[0].cstrict, n);
  Rational blen = Rational(w[0].cincl, n) - w[0].w;
  std::size_t bcnt_arg = 0, blen_arg = 0;
  Rational best = -1;
  std::size_t best_s = 0, best_t = 1;
  for (std::size_t t = 1; t < w.size(); ++t) {
    const Rational acnt = Rational(w[t].cincl, n) - w[t].w;
    const Rational alen = w[t].w - Rational(w[t].cstrict, n);
    if (Rational c = acnt + bcnt; c > best) {
      best = std::move(c);
      best_s = bcnt_arg;
      best_t = t;
    }
    if (Rational c = alen + blen; c > best) {
      best = std::move(c);
      best_s = blen_arg;
      best_t = t;
    }
    if (alen > bcnt) {
      bcnt = alen;
      bcnt_arg = t;
    }
    if (acnt > blen) {
      blen = acnt;
      blen_arg = t;
    }
  }
  return ExtremeOut{best, w[best_s].w, w[best_t].w};
}

// Distinct-value runs with prefix counts and sentinels, from sorted points.
template <class Point, class Eq, class ToRational>
std::vector<ValEntry> value_runs(const std::vector<Point>& sorted, Eq eq,
                                 ToRational to_rational) {
  const std::uint64_t n = sorted.size();
  std::vector<ValEntry> w;
  w.reserve(n + 2);
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i + 1;
    while (j < sorted.size() && eq(sorted[i], sorted[j])) ++j;
    w.push_back(ValEntry{to_rational(sorted[i]), i, j});
    i = j;
  }
  if (w.empty() || w.front().w != 0)
    w.insert(w.begin(), ValEntry{Rational(0), 0, 0});
  w.push_back(ValEntry{Rational(1), n, n});
  return w;
}

std::vector<ValEntry> value_runs_frac(const std::vector<Frac>& sorted) {
  return value_runs(sorted, frac_eq, frac_to_rational);
}

// ---------------------------------------------------------------------------
// Distribution point construction.

constexpr std::uint64_t kGridDen = std::uint64_t(1) << 63;

std::vector<Frac> distribution_points(const DigitStream& d, std::uint64_t n,
                                      DistributionMode mode,
                                      const Rational& tol) {
  if (n == 0) throw std::invalid_argument("distribution: need at least one point");
  if (n >= (std::uint64_t(1) << 33))
    throw std::invalid_argument("distribution: point count above 2^33 unsupported");
  std::vector<Frac> pts(n);
  if (mode == DistributionMode::digit_ratio) {
    if (!d.seq().traits().infinite_in_limit)
      throw ConfigError(
          "digit-ratio distribution mode requires an infinite-in-limit "
          "sequence; use true-orbit mode instead");
    std::vector<std::uint64_t> bases(n);
    d.seq().fill_bases(1, bases);
    for (std::uint64_t i = 0; i < n; ++i) {
      if (bases[i] > kGridDen)
        throw std::overflow_error("distribution: base above 2^63 unsupported");
      pts[i] = Frac{d.digit(i + 1), bases[i]};
    }
  } else {
    if (tol <= 0) throw std::invalid_argument("distribution: tol must be positive");
    if (tol < Rational(1, BigInt(1) << 60))
      throw PrecisionError(
          "true-orbit points are computed from 64-digit windows at absolute "
          "error below 2^-60; the requested tolerance is finer than that",
          n + kTailWindow);
    const auto units = tail_units(d, n);
    for (std::uint64_t i = 0; i < n; ++i)
      pts[i] = Frac{units[i] >> 1, kGridDen};
  }
  return pts;
}

struct OrderedPoint {
  Frac f;
  std::uint64_t arrival;  // 1-based point index
};

std::vector<OrderedPoint> sort_points(const std::vector<Frac>& pts) {
  std::vector<OrderedPoint> out(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i)
    out[i] = OrderedPoint{pts[i], i + 1};
  std::sort(out.begin(), out.end(),
            [](const OrderedPoint& a, const OrderedPoint& b) {
              if (frac_less(a.f, b.f)) return true;
              if (frac_less(b.f, a.f)) return false;
              return a.arrival < b.arrival;
            });
  return out;
}

std::vector<Frac> sorted_prefix(const std::vector<OrderedPoint>& global,
                                std::uint64_t n) {
  std::vector<Frac> out;
  out.reserve(n);
  for (const auto& p : global)
    if (p.arrival <= n) out.push_back(p.f);
  return out;
}

// ---------------------------------------------------------------------------
// Counting estimators.

std::vector<std::uint64_t> unique_sorted_checkpoints(
    const std::vector<std::uint64_t>& cps) {
  if (cps.empty())
    throw std::invalid_argument("at least one checkpoint is required");
  for (std::uint64_t c : cps)
    if (c == 0) throw std::invalid_argument("checkpoints must be >= 1");
  std::vector<std::uint64_t> out = cps;
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::uint64_t> first_seen_order(
    const std::vector<std::uint64_t>& cps) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t c : cps)
    if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
  return out;
}

struct BlockSeries {
  std::vector<std::uint64_t> counts;   // per sorted checkpoint
  std::vector<Rational> expectations;  // per sorted checkpoint
};

BlockSeries series_for_block(const DigitStream& d, const Block& b,
                             const std::vector<std::uint64_t>& cps_sorted,
                             const StatOptions& opt) {
  BlockSeries s;
  s.counts.resize(cps_sorted.size());
  s.expectations.resize(cps_sorted.size());
  std::size_t next = 0;
  scan_block_profile(d, b, cps_sorted.back(),
                     [&](std::uint64_t m, std::uint64_t cnt, const U256& e) {
                       if (next < cps_sorted.size() && m == cps_sorted[next]) {
                         s.counts[next] = cnt;
                         if (m > opt.exact_cutoff)
                           s.expectations[next] = Rational(
                               to_bigint(e), BigInt(1) << kExpScaleBits);
                         ++next;
                       }
                     });
  for (std::size_t i = 0; i < cps_sorted.size(); ++i)
    if (cps_sorted[i] <= opt.exact_cutoff)
      s.expectations[i] = expectation(b, 1, cps_sorted[i], d.seq());
  return s;
}

void require_resolved(const Block& b, Goodness g, const StatOptions& opt) {
  if (g == Goodness::unknown)
    throw ConfigError("goodness of block " + b.literal() +
                      " could not be resolved at horizon " +
                      std::to_string(opt.goodness_horizon) +
                      "; declare divergence metadata or raise the horizon");
}

std::vector<Block> resolve_good(const std::vector<Block>& cands,
                                const BasicSequence& seq,
                                const StatOptions& opt) {
  std::vector<Block> good;
  for (const Block& b : cands) {
    const Goodness g =
        is_good(b, seq, opt.goodness_horizon, opt.goodness_threshold);
    require_resolved(b, g, opt);
    if (g == Goodness::good) good.push_back(b);
  }
  return good;
}

std::vector<Block> blocks_up_to_weight(std::uint64_t max_weight) {
  if (max_weight > 20)
    throw std::invalid_argument(
        "max block weight above 20 enumerates over a million blocks; use an "
        "explicit collection instead");
  if (max_weight == 0) return {};
  return enumerate_blocks((std::uint64_t(1) << max_weight) - 1);
}

void finalize_report(DeviationReport& r) {
  r.max_deviation = Deviation{};
  for (const DeviationRow& row : r.rows)
    if (r.max_deviation < row.deviation) r.max_deviation = row.deviation;
  std::vector<double> xs, ys;
  for (std::uint64_t cp : r.checkpoints) {
    bool any = false;
    Rational best = 0;
    for (const DeviationRow& row : r.rows) {
      if (row.checkpoint != cp || row.deviation.infinite) continue;
      if (!any || row.deviation.value > best) best = row.deviation.value;
      any = true;
    }
    if (any) {
      xs.push_back(std::log10(static_cast<double>(cp)));
      ys.push_back(best.convert_to<double>());
    }
  }
  r.trend_slope = 0.0;
  if (xs.size() >= 2) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      mx += xs[i];
      my += ys[i];
    }
    mx /= static_cast<double>(xs.size());
    my /= static_cast<double>(xs.size());
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxx += (xs[i] - mx) * (xs[i] - mx);
      sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx > 0) r.trend_slope = sxy / sxx;
  }
}

DeviationReport build_count_report(const DigitStream& d,
                                   const std::vector<Block>& good,
                                   const std::vector<std::uint64_t>& cps,
                                   const StatOptions& opt) {
  DeviationReport r;
  r.checkpoints = first_seen_order(cps);
  const auto cps_sorted = unique_sorted_checkpoints(cps);
  std::vector<BlockSeries> series;
  series.reserve(good.size());
  for (const Block& b : good) series.push_back(series_for_block(d, b, cps_sorted, opt));
  for (std::uint64_t cp : r.checkpoints) {
    const std::size_t ci = static_cast<std::size_t>(
        std::lower_bound(cps_sorted.begin(), cps_sorted.end(), cp) -
        cps_sorted.begin());
    for (std::size_t bi = 0; bi < good.size(); ++bi) {
      const Rational& q = series[bi].expectations[ci];
      if (q == 0) continue;  // vacuous: no admissible position yet
      const std::uint64_t cnt = series[bi].counts[ci];
      const Rational dev = abs(Rational(cnt) / q - 1);
      r.rows.push_back(DeviationRow{cp, good[bi].literal(), cnt, q,
                                    Deviation::of(dev)});
    }
  }
  finalize_report(r);
  return r;
}

DeviationReport build_ratio_report(const DigitStream& d,
                                   const std::vector<Block>& good,
                                   const std::vector<std::uint64_t>& cps,
                                   const StatOptions& opt) {
  DeviationReport r;
  r.checkpoints = first_seen_order(cps);
  const auto cps_sorted = unique_sorted_checkpoints(cps);
  std::vector<BlockSeries> series;
  series.reserve(good.size());
  for (const Block& b : good) series.push_back(series_for_block(d, b, cps_sorted, opt));
  for (std::uint64_t cp : r.checkpoints) {
    const std::size_t ci = static_cast<std::size_t>(
        std::lower_bound(cps_sorted.begin(), cps_sorted.end(), cp) -
        cps_sorted.begin());
    for (std::size_t i = 0; i < good.size(); ++i) {
      for (std::size_t j = 0; j < good.size(); ++j) {
        if (i == j || good[i].length() != good[j].length()) continue;
        const Rational& q1 = series[i].expectations[ci];
        const Rational& q2 = series[j].expectations[ci];
        if (q1 == 0 || q2 == 0) continue;  // vacuous at this checkpoint
        const std::uint64_t n1 = series[i].counts[ci];
        const std::uint64_t n2 = series[j].counts[ci];
        const std::string label = good[i].literal() + "~" + good[j].literal();
        if (n2 == 0) {
          r.rows.push_back(
              DeviationRow{cp, label, n1, Rational(0), Deviation::inf()});
          continue;
        }
        const Rational implied = Rational(n2) * q1 / q2;
        const Rational dev = abs(Rational(n1) / implied - 1);
        r.rows.push_back(
            DeviationRow{cp, label, n1, implied, Deviation::of(dev)});
      }
    }
  }
  finalize_report(r);
  return r;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------

DeviationReport test_normal(const DigitStream& d, std::uint64_t max_weight,
                            const std::vector<std::uint64_t>& checkpoints,
                            const StatOptions& opt) {
  const auto good = resolve_good(blocks_up_to_weight(max_weight), d.seq(), opt);
  return build_count_report(d, good, checkpoints, opt);
}

DeviationReport test_ratio_normal(const DigitStream& d, std::uint64_t max_weight,
                                  const std::vector<std::uint64_t>& checkpoints,
                                  const StatOptions& opt) {
  const auto good = resolve_good(blocks_up_to_weight(max_weight), d.seq(), opt);
  return build_ratio_report(d, good, checkpoints, opt);
}

DeviationReport test_collection(const DigitStream& d, const BlockCollection& coll,
                                CollectionVariant variant,
                                const std::vector<std::uint64_t>& checkpoints,
                                const StatOptions& opt) {
  const auto good = resolve_good(coll.blocks, d.seq(), opt);
  return variant == CollectionVariant::counts
             ? build_count_report(d, good, checkpoints, opt)
             : build_ratio_report(d, good, checkpoints, opt);
}

Rational star_discrepancy(const std::vector<Rational>& points) {
  if (points.empty()) throw std::domain_error("star_discrepancy: empty point set");
  for (const Rational& p : points)
    if (p < 0 || p >= 1)
      throw std::domain_error("star_discrepancy: points must lie in [0,1)");
  std::vector<Rational> u = points;
  std::sort(u.begin(), u.end());
  const std::uint64_t n = u.size();
  Rational best = 0;
  for (std::uint64_t i = 1; i <= n; ++i) {
    const Rational right = Rational(i, n) - u[i - 1];
    const Rational left = u[i - 1] - Rational(i - 1, n);
    if (right > best) best = right;
    if (left > best) best = left;
  }
  return best;
}

Rational extreme_discrepancy(const std::vector<Rational>& points) {
  if (points.empty())
    throw std::domain_error("extreme_discrepancy: empty point set");
  for (const Rational& p : points)
    if (p < 0 || p >= 1)
      throw std::domain_error("extreme_discrepancy: points must lie in [0,1)");
  std::vector<Rational> u = points;
  std::sort(u.begin(), u.end());
  const auto w = value_runs(
      u, [](const Rational& a, const Rational& b) { return a == b; },
      [](const Rational& v) { return v; });
  return extreme_over_values(w, u.size()).value;
}

DeviationReport test_distribution_normal(
    const DigitStream& d, const std::vector<std::uint64_t>& checkpoints,
    DistributionMode mode, const Rational& tol) {
  DeviationReport r;
  r.checkpoints = first_seen_order(checkpoints);
  const auto cps_sorted = unique_sorted_checkpoints(checkpoints);
  const auto pts = distribution_points(d, cps_sorted.back(), mode, tol);
  const auto global = sort_points(pts);
  struct Bundle {
    Rational dstar;
    ExtremeOut dext;
    std::uint64_t bin_counts[4];  // #{u < 1/k} for k = 2..5
  };
  std::vector<Bundle> bundles(cps_sorted.size());
  for (std::size_t ci = 0; ci < cps_sorted.size(); ++ci) {
    const std::uint64_t n = cps_sorted[ci];
    const auto prefix = sorted_prefix(global, n);
    Bundle& b = bundles[ci];
    b.dstar = star_sorted(prefix);
    b.dext = extreme_over_values(value_runs_frac(prefix), n);
    for (std::uint64_t k = 2; k <= 5; ++k) {
      const Frac bound{1, k};
      const auto it = std::lower_bound(prefix.begin(), prefix.end(), bound,
                                       frac_less);
      b.bin_counts[k - 2] = static_cast<std::uint64_t>(it - prefix.begin());
    }
  }
  for (std::uint64_t cp : r.checkpoints) {
    const std::size_t ci = static_cast<std::size_t>(
        std::lower_bound(cps_sorted.begin(), cps_sorted.end(), cp) -
        cps_sorted.begin());
    const Bundle& b = bundles[ci];
    r.rows.push_back(
        DeviationRow{cp, "Dstar", cp, Rational(0), Deviation::of(b.dstar)});
    r.rows.push_back(DeviationRow{cp, "Dext", cp, Rational(0),
                                  Deviation::of(b.dext.value)});
    for (std::uint64_t k = 2; k <= 5; ++k) {
      const std::uint64_t cnt = b.bin_counts[k - 2];
      const Rational dev = abs(Rational(cnt, cp) - Rational(1, k));
      r.rows.push_back(DeviationRow{cp, "bin[1/" + std::to_string(k) + "]",
                                    cnt, Rational(1, k), Deviation::of(dev)});
    }
  }
  finalize_report(r);
  return r;
}

WdnResult test_wdn(const DigitStream& d, const Rational& eps,
                   std::uint64_t first_n, std::uint64_t last_n,
                   DistributionMode mode, const Rational& tol) {
  if (first_n == 0 || first_n > last_n)
    throw std::invalid_argument("test_wdn: need 1 <= first_n <= last_n");
  const auto pts = distribution_points(d, last_n, mode, tol);
  WdnResult res;
  if (eps >= 1) return res;  // every discrepancy is at most 1
  const auto global = sort_points(pts);
  std::uint64_t n = first_n;
  for (;;) {
    const auto prefix = sorted_prefix(global, n);
    const ExtremeOut ex = extreme_over_values(value_runs_frac(prefix), n);
    if (ex.value > eps) {
      res.pass = false;
      res.violating_n = n;
      res.interval_a = ex.a;
      res.interval_b = ex.b;
      res.deviation = ex.value;
      return res;
    }
    // The unnormalized discrepancy V(m) = m * D(m) moves by at most 1 per
    // added point, so every m with m <= (n - V(n)) / (1 - eps) still has
    // D(m) <= eps.  Jumping to the first uncertified index keeps the
    // fail-side answer the *first* violating N.
    const Rational bound = (Rational(n) - ex.value * n) / (1 - eps);
    const BigInt certified = numerator(bound) / denominator(bound);
    if (certified >= last_n) return res;
    const std::uint64_t m = certified.convert_to<std::uint64_t>();
    n = std::max(n + 1, m + 1);
  }
}

std::vector<std::pair<Block, std::optional<std::uint64_t>>> richness_scan(
    const DigitStream& d, std::uint64_t max_weight) {
  std::vector<std::pair<Block, std::optional<std::uint64_t>>> out;
  for (const Block& b : blocks_up_to_weight(max_weight)) {
    const std::uint64_t k = b.length();
    std::optional<std::uint64_t> first;
    if (k <= d.length()) {
      for (std::uint64_t i = 1; i + k - 1 <= d.length(); ++i) {
        bool hit = true;
        for (std::uint64_t t = 1; t <= k && hit; ++t)
          hit = d.digit(i + t - 1) == b.at(t);
        if (hit) {
          first = i;
          break;
        }
      }
    }
    out.emplace_back(b, first);
  }
  return out;
}

std::string report_to_csv(const DeviationReport& report) {
  std::string out =
      "checkpoint,block,count,expectation_num,expectation_den,deviation\n";
  for (const DeviationRow& row : report.rows) {
    out += std::to_string(row.checkpoint);
    out += ",\"";
    out += row.label;
    out += "\",";
    out += std::to_string(row.count);
    out += ',';
    out += numerator(row.expectation).str();
    out += ',';
    out += denominator(row.expectation).str();
    out += ',';
    out += row.deviation.infinite ? "inf" : format_rational(row.deviation.value);
    out += '\n';
  }
  return out;
}

std::string report_plot_series(const DeviationReport& report,
                               const std::string& label) {
  std::string out;
  for (const DeviationRow& row : report.rows) {
    if (row.label != label) continue;
    out += std::to_string(row.checkpoint);
    out += '\t';
    out += row.deviation.infinite
               ? "inf"
               : format_double(row.deviation.value.convert_to<double>());
    out += '\n';
  }
  return out;
}

std::string report_to_text(const DeviationReport& report) {
  std::vector<std::array<std::string, 5>> cells;
  cells.push_back({"checkpoint", "block", "count", "expectation", "deviation"});
  for (const DeviationRow& row : report.rows)
    cells.push_back({std::to_string(row.checkpoint), row.label,
                     std::to_string(row.count), format_rational(row.expectation),
                     row.deviation.infinite
                         ? "inf"
                         : format_rational(row.deviation.value)});
  std::size_t width[5] = {0, 0, 0, 0, 0};
  for (const auto& row : cells)
    for (int c = 0; c < 5; ++c) width[c] = std::max(width[c], row[c].size());
  std::ostringstream os;
  for (const auto& row : cells) {
    for (int c = 0; c < 5; ++c) {
      os << row[c];
      if (c < 4) os << std::string(width[c] - row[c].size() + 2, ' ');
    }
    os << '\n';
  }
  os << "max deviation: "
     << (report.max_deviation.infinite
             ? std::string("inf")
             : format_rational(report.max_deviation.value))
     << '\n';
  os << "trend slope (deviation per log10 n): " << format_double(report.trend_slope)
     << '\n';
  return os.str();
}

}  // namespace cantor
