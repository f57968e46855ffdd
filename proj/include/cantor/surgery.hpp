#pragma once

// Digit surgery: the constructive layer that turns a reference digit stream
// into witness streams with prescribed asymptotic statistics.  It provides
//   * input rules x and their per-construction clamps,
//   * the three local digit operations (zero-block thinning, high-digit
//     saturation, pivot shifting),
//   * seeded reference-stream generation,
//   * growth schedules b_0 < b_1 < ... with per-boundary certificates, and
//   * the four interval-by-interval reduction constructions.
//
// Every construction is deterministic: identical inputs (including seeds)
// give identical outputs, and each returns a replayable edit log.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cantor/blocks.hpp"
#include "cantor/digits.hpp"
#include "cantor/numeric.hpp"
#include "cantor/sequences.hpp"
#include "cantor/stats.hpp"

namespace cantor {

// Raised when a construction step cannot be carried out on the given data
// (e.g. no qualifying replacement digit exists, or no good pivot block).
class ConstructionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Input rules.  A rule defines x(n) for n >= 1.  The two-track constructions
// read even positions x(2n) and odd positions x(2n+1) as independent control
// tracks ("track goes to infinity" vs "track stays bounded").
class ReductionInput {
 public:
  // One track of a two-track rule: either the position itself or a constant.
  struct Track {
    bool is_constant = false;
    std::uint64_t value = 0;
    std::uint64_t at(std::uint64_t n) const { return is_constant ? value : n; }
    bool operator==(const Track&) const = default;
  };

  static ReductionInput tabulated(std::vector<std::uint64_t> values);
  static ReductionInput identity();                        // x(n) = n
  static ReductionInput constant_on_evens(std::uint64_t c);  // evens c, odds n
  static ReductionInput constant_on_odds(std::uint64_t c);   // odds c, evens n
  static ReductionInput custom(Track even, Track odd);

  // x(n).  Tabulated rules throw std::out_of_range past the stored list.
  std::uint64_t at(std::uint64_t n) const;

  // Canonical spec string ("id", "evens=3", "odds=2", "tracks:even=...,odd=...",
  // "table:v1,v2,...").  parse(describe()) reproduces the rule.
  std::string describe() const;
  static ReductionInput parse(std::string_view spec);

  bool operator==(const ReductionInput& o) const = default;

 private:
  ReductionInput() = default;
  bool tabulated_ = false;
  std::vector<std::uint64_t> values_;
  Track even_{}, odd_{};
};

// Per-construction clamp x'(n) of the raw value x(n).
enum class ClampMode {
  dn,        // min(x(n), n)            (also the glued construction's clamp)
  normal,    // max(27, min(x(n), n))
  two_track  // max(2, min(x(n), n))
};

std::uint64_t clamp_input(const ReductionInput& x, std::uint64_t n, ClampMode mode);

// ---------------------------------------------------------------------------
// Edit logs.  Every surgery records its digit changes; replaying a log over
// the original stream must reproduce the output bit-for-bit.
struct SurgeryEdit {
  std::uint64_t index = 0;      // 1-based digit index
  std::uint64_t old_digit = 0;  // always != new_digit
  std::uint64_t new_digit = 0;
  std::string reason;           // "theta" | "xi" | "r" | "dn-threshold"
};

struct SurgeryLog {
  std::vector<SurgeryEdit> edits;      // index-sorted within each interval
  std::vector<std::string> warnings;   // degeneracies, clips, recount notes
};

// CSV serialization: header "index,old,new,reason", one edit per line, LF
// endings.  Warnings are not part of the CSV (they travel in certificates).
void write_surgery_log(const std::string& path, const SurgeryLog& log);
SurgeryLog read_surgery_log(const std::string& path);

// Applies the log to `z` (checking each edit's old digit matches) and returns
// the edited stream.  Throws ConstructionError on any mismatch.
DigitStream replay_surgery(const DigitStream& z, const SurgeryLog& log);

// ---------------------------------------------------------------------------
// Local digit operations on a window.  The window is a mutable slice of
// digits starting at 1-based absolute position `first_index`, with matching
// per-position bases; logged edit indices are absolute.
struct DigitWindow {
  std::uint64_t first_index = 1;
  std::span<std::uint64_t> digits;
  std::span<const std::uint64_t> bases;
};

// Zero-block thinning: A = starts of all-zero length-k occurrences lying
// fully inside the window; the last floor(|A|/ell) of them get their leading
// digit raised 0 -> 1.  Requires k >= 1 and ell >= 1.
SurgeryLog theta_op(DigitWindow w, std::uint64_t k, std::uint64_t ell);

// High-digit saturation: every digit with d >= (k/(k+1)) * q (inclusive,
// compared exactly) becomes q - 1.  Idempotent; requires k >= 1.
SurgeryLog xi_op(DigitWindow w, std::uint64_t k);

// Pivot shift: the digit remap derived from a pivot block's first entry.
// Maps 0 -> 1 when the entry is 0, otherwise entry -> entry - 1; fixes all
// other values.  Applying it to a valid digit keeps it valid.
struct PivotShift {
  std::uint64_t from = 0;
  std::uint64_t to = 0;
  std::uint64_t operator()(std::uint64_t d) const { return d == from ? to : d; }
};

PivotShift r_func(const Block& pivot);

// ---------------------------------------------------------------------------
// Reference streams: digit i drawn independently and uniformly from
// {0, ..., q_i - 1} by a seeded deterministic generator (identical
// (seq, seed, n) give identical streams on every platform).
DigitStream make_reference(const BasicSequence& seq, std::uint64_t seed,
                           std::uint64_t n);

// Stable per-stream seed derivation: one master seed drives the whole family
// of reference streams used by the glued construction.
std::uint64_t derived_seed(std::uint64_t master, std::uint64_t m);

// m -> seed for every squeezed reference stream the glued construction may
// request; missing entries are a configuration error at use time.
using SeedSet = std::map<std::uint64_t, std::uint64_t>;
SeedSet make_seed_set(std::uint64_t master, std::uint64_t max_m);

// ---------------------------------------------------------------------------
// Schedules.  A schedule is the boundary sequence b_0 = 0 < b_1 < ... < b_J
// partitioning digit positions into intervals I_n = [b_{n-1}+1, b_n], plus a
// certificate per boundary recording which growth/deviation conditions were
// checked and with what margins.
enum class ScheduleProfile { dn, normal, two_track, glue };

std::string profile_name(ScheduleProfile p);
ScheduleProfile parse_profile(std::string_view name);

struct CertRecord {
  std::string condition;   // machine-readable id, e.g. "growth(k=2)"
  bool greater = true;     // relation that was checked: lhs > rhs or lhs < rhs
  bool windowed = false;   // suffix condition, checked over the data range only
  bool satisfied = true;
  std::string lhs;         // exact rational string; for ">" records this is a
                           // certified lower bound on the left-hand quantity
  std::string rhs;
  std::uint64_t worst_index = 0;  // index attaining the minimum margin (0: n/a)
  double margin = 0.0;            // relative slack at the worst index
};

struct BoundaryCertificate {
  std::uint64_t boundary = 0;
  bool clamped = false;     // boundary forced to the data end; margins may be unmet
  std::vector<CertRecord> records;
  std::vector<std::string> notes;
};

struct Schedule {
  ScheduleProfile profile = ScheduleProfile::dn;
  std::vector<std::uint64_t> boundaries;           // starts with b_0 = 0
  std::vector<BoundaryCertificate> certificates;   // one per boundary
  std::uint64_t horizon = 0;  // last index windowed conditions were checked to
  std::uint64_t intervals() const { return boundaries.size() - 1; }
};

struct ScheduleParams {
  StatOptions stats;             // goodness resolution for block sets
  std::uint64_t master_seed = 0;  // glue profile: drives the w_m streams
  std::optional<SeedSet> seeds;   // glue profile: explicit per-m seeds
};

// Greedy smallest boundaries satisfying the profile's conditions as far as
// they are checkable on the given reference stream.  Boundary-local growth
// conditions are certified exactly (round-down fixed point gives one-sided
// bounds); suffix conditions are checked for every index from the boundary to
// the data horizon and carry `windowed = true`.  The glue profile derives its
// own squeezed reference streams from the seeds in `params` and uses `z` only
// to fix the horizon.  Throws PrecisionError (naming a stream length that
// would let the search continue) when `count` boundaries cannot be certified
// within the data, and ConfigError when sequence metadata is insufficient.
Schedule build_schedule(const BasicSequence& seq, const DigitStream& z,
                        ScheduleProfile profile, std::uint64_t count,
                        const ScheduleParams& params = {});

// Auto-sized variant for construction runs over a fixed stream length: grows
// boundaries while certifiable, then closes the schedule with a final
// boundary clamped to `target_n` whose certificate is marked `clamped`
// (recorded margins may be unmet).  Never throws for want of data.
Schedule build_schedule_clamped(const BasicSequence& seq, const DigitStream& z,
                                ScheduleProfile profile, std::uint64_t target_n,
                                const ScheduleParams& params = {});

// JSON certificate document for a schedule (schedule conditions + margins).
std::string schedule_to_json(const Schedule& sched);

// ---------------------------------------------------------------------------
// Reductions.  Each walks the schedule's intervals in order, modifies the
// interval's digits per its rule, and returns the new stream plus the edit
// log.  The input stream must cover the last boundary (plus the overhang the
// construction needs); its sequence is taken from the stream itself.
struct ReductionResult {
  DigitStream output;
  SurgeryLog log;
};

// Tail-threshold surgery: in interval I_n, every position whose digit-tail
// value provably lies below 1/(x'(n)+2) gets the least digit a >= z_i with
// a/q_i > 1/(x'(n)+2); ties at the threshold are left untouched.  Requires a
// dn-profile schedule; clamp mode dn.
ReductionResult reduce_dn(const ReductionInput& x, const DigitStream& z,
                          const Schedule& sched);

// Pivot-count surgery: per interval, enumerates the good blocks among the
// first floor(x'(n)^(1/6)) canonical blocks, finds each block's late-count
// split index, picks the pivot maximizing it, filters pivot occurrences that
// collide with sparse blocks (or their preimages under the pivot shift), and
// applies the pivot shift to the tail of the surviving occurrence list.
// Requires a normal-profile schedule; clamp mode normal.
ReductionResult reduce_normal(const ReductionInput& x, const DigitStream& z,
                              const Schedule& sched, const StatOptions& opt = {});

// Two-track surgery: per interval, zero-block thinning driven by the even
// track followed by high-digit saturation driven by the odd track.  The
// thinned block length is x'(2n) when the sequence is divergent at every
// order, else the declared maximal divergence order.  Requires a
// two_track-profile schedule; clamp mode two_track.
ReductionResult reduce_diff4(const ReductionInput& x, const DigitStream& z,
                             const Schedule& sched);

// Glued construction: interval I_n copies the squeezed reference stream
// w_{x'(2n+1)} (generated from `seeds`), then thins zero blocks per the even
// track.  Returns the output stream (over the original sequence), the edit
// log, and the assembled composite base for diagnostic expectation ratios.
struct GlueResult {
  DigitStream output;
  SurgeryLog log;
  BasicSequence glued_seq;
};

GlueResult reduce_rn_not_n(const ReductionInput& x, const BasicSequence& seq,
                           const Schedule& sched, const SeedSet& seeds);

}  // namespace cantor
