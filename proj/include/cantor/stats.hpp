#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cantor/blocks.hpp"
#include "cantor/digits.hpp"
#include "cantor/numeric.hpp"
#include "cantor/sequences.hpp"

namespace cantor {

// A deviation magnitude that may be infinite (a ratio test divides by a zero
// count).  Finite values are exact rationals.
struct Deviation {
  bool infinite = false;
  Rational value = 0;

  static Deviation of(Rational v) { return Deviation{false, std::move(v)}; }
  static Deviation inf() { return Deviation{true, 0}; }

  bool operator<(const Deviation& o) const {
    if (infinite != o.infinite) return !infinite;
    if (infinite) return false;
    return value < o.value;
  }
};

// One measured quantity at one checkpoint.  `label` is a block literal
// ("[0,3]"), a pair label ("[0]~[1]"), or a pseudo-label for distribution
// rows ("Dstar", "Dext", "bin[1/2]").
struct DeviationRow {
  std::uint64_t checkpoint = 0;
  std::string label;
  std::uint64_t count = 0;      // occurrences observed (or N for Dstar/Dext)
  Rational expectation = 0;     // reference value the count is compared to
  Deviation deviation;
};

struct DeviationReport {
  std::vector<std::uint64_t> checkpoints;
  std::vector<DeviationRow> rows;
  Deviation max_deviation;  // over all rows
  // Least-squares slope of max finite deviation per checkpoint against
  // log10(checkpoint); negative slope indicates deviations are shrinking.
  double trend_slope = 0.0;
};

// Options shared by the counting estimators.  Expectations are exact
// rationals up to `exact_cutoff` digits; beyond that they come from the
// round-down fixed-point accumulator (denominator 2^192, absolute error
// below checkpoint/2^192), which keeps large runs deterministic and fast.
struct StatOptions {
  std::uint64_t exact_cutoff = 20000;
  std::uint64_t goodness_horizon = 100000;
  Rational goodness_threshold = Rational(50);
};

// Block-occurrence normality: for every good block of weight at most
// `max_weight`, compare the occurrence count against the expected count at
// each checkpoint.  Rows with zero expected count are vacuous and omitted.
// Blocks whose goodness cannot be resolved raise ConfigError; blocks that
// are definitely not good are excluded.
DeviationReport test_normal(const DigitStream& d, std::uint64_t max_weight,
                            const std::vector<std::uint64_t>& checkpoints,
                            const StatOptions& opt = {});

// Ratio normality: for every ordered pair of distinct good blocks of equal
// length (weights at most `max_weight`), compare N(B1)/N(B2) against
// Q(B1)/Q(B2).  A zero denominator count with a nonzero target ratio is
// reported as an infinite deviation row -- kept distinguishable rather than
// clamped.  Row labels are "B1~B2"; `count` is N(B1) and `expectation` is
// the count of B1 implied by B2's rate.
DeviationReport test_ratio_normal(const DigitStream& d,
                                  std::uint64_t max_weight,
                                  const std::vector<std::uint64_t>& checkpoints,
                                  const StatOptions& opt = {});

// Same two estimators restricted to an explicit block collection.
enum class CollectionVariant { counts, ratios };
DeviationReport test_collection(const DigitStream& d,
                                const BlockCollection& coll,
                                CollectionVariant variant,
                                const std::vector<std::uint64_t>& checkpoints,
                                const StatOptions& opt = {});

// Exact star discrepancy of a finite point set in [0,1): the maximum over
// prefixes [0,t) of |empirical mass - t|, computed by the sorted-sample
// formula.  Input order is irrelevant; the input vector is not modified.
Rational star_discrepancy(const std::vector<Rational>& points);

// Exact extreme (interval) discrepancy: the maximum over candidate
// intervals (a,b), 0 <= a < b <= 1 with endpoints drawn from the point
// values plus {0,1}, of |#points in (a,b)/N - (b-a)|.  Endpoint membership
// is measure-zero, so ties are resolved toward the larger deviation: the
// count-rich side includes points sitting on the endpoints, the length-rich
// side excludes them.
Rational extreme_discrepancy(const std::vector<Rational>& points);

// How distribution points are produced from a digit stream.
//   digit_ratio: u_i = a_i / q_i.  Requires the infinite-in-limit trait on
//     the stream's sequence (otherwise the points cannot equidistribute and
//     the mode is rejected with ConfigError).
//   true_orbit: u_i = value of the tail beginning at digit i, computed from
//     a 64-digit window at absolute error below 2^-61.  `tol` must be at
//     least 2^-50 (PrecisionError otherwise) and the stream must extend 63
//     digits past the last checkpoint.
enum class DistributionMode { digit_ratio, true_orbit };

// Distribution normality: star and extreme discrepancy of the first N
// points at each checkpoint N, plus bin rows |#{u < 1/k}/N - 1/k| for
// k = 2..5.  Row labels: "Dstar", "Dext", "bin[1/k]".
DeviationReport test_distribution_normal(
    const DigitStream& d, const std::vector<std::uint64_t>& checkpoints,
    DistributionMode mode,
    const Rational& tol = Rational(1, std::uint64_t(1) << 50));

struct WdnResult {
  bool pass = true;
  // Populated on failure: the first N in [first_n, last_n] whose extreme
  // discrepancy exceeds eps, together with a witnessing interval.
  std::uint64_t violating_n = 0;
  Rational interval_a = 0;
  Rational interval_b = 0;
  Rational deviation = 0;
};

// Window-uniformity test: pass iff the extreme discrepancy of the first N
// points stays at most eps for every N in [first_n, last_n].  Certified
// exactly: between explicit evaluations the unnormalized discrepancy can
// change by at most 1 per added point, which bounds the skipped range; any
// reported violation is re-scanned to the first violating N.
WdnResult test_wdn(const DigitStream& d, const Rational& eps,
                   std::uint64_t first_n, std::uint64_t last_n,
                   DistributionMode mode,
                   const Rational& tol = Rational(1, std::uint64_t(1) << 50));

// First-occurrence scan: for every block of weight at most `max_weight`, the
// smallest start index at which it occurs in d, or nullopt if it never does.
std::vector<std::pair<Block, std::optional<std::uint64_t>>> richness_scan(
    const DigitStream& d, std::uint64_t max_weight);

// CSV serialization: header line
//   checkpoint,block,count,expectation_num,expectation_den,deviation
// with the block label double-quoted (literals contain commas) and the
// deviation as an exact rational string or "inf".
std::string report_to_csv(const DeviationReport& report);

// Human-readable table with the summary lines.
std::string report_to_text(const DeviationReport& report);

// Two-column plot series "(checkpoint, deviation-as-double)" for one row
// label; infinite deviations are written as "inf".
std::string report_plot_series(const DeviationReport& report,
                               const std::string& label);

}  // namespace cantor
