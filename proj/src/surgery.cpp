#include "cantor/surgery.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "cantor/kernels.hpp"

namespace cantor {

namespace {

std::uint64_t parse_u64_field(std::string_view text, const char* what) {
  std::uint64_t v = 0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [p, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || p != last || text.empty())
    throw ParseError(std::string(what) + ": expected an unsigned integer, got \"" +
                     std::string(text) + "\"");
  return v;
}

std::string join_u64(const std::vector<std::uint64_t>& vs) {
  std::string out;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(vs[i]);
  }
  return out;
}

std::vector<std::uint64_t> split_u64_list(std::string_view text, const char* what) {
  std::vector<std::uint64_t> vs;
  if (text.empty()) return vs;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = text.find(',', pos);
    const std::string_view field =
        text.substr(pos, comma == std::string_view::npos ? std::string_view::npos
                                                         : comma - pos);
    vs.push_back(parse_u64_field(field, what));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return vs;
}

}  // namespace

// ---------------------------------------------------------------------------
// ReductionInput

ReductionInput ReductionInput::tabulated(std::vector<std::uint64_t> values) {
  ReductionInput r;
  r.tabulated_ = true;
  r.values_ = std::move(values);
  return r;
}

ReductionInput ReductionInput::identity() {
  ReductionInput r;
  r.even_ = Track{false, 0};
  r.odd_ = Track{false, 0};
  return r;
}

ReductionInput ReductionInput::constant_on_evens(std::uint64_t c) {
  ReductionInput r;
  r.even_ = Track{true, c};
  r.odd_ = Track{false, 0};
  return r;
}

ReductionInput ReductionInput::constant_on_odds(std::uint64_t c) {
  ReductionInput r;
  r.even_ = Track{false, 0};
  r.odd_ = Track{true, c};
  return r;
}

ReductionInput ReductionInput::custom(Track even, Track odd) {
  ReductionInput r;
  r.even_ = even;
  r.odd_ = odd;
  return r;
}

std::uint64_t ReductionInput::at(std::uint64_t n) const {
  if (n == 0) throw std::out_of_range("input rule positions start at 1");
  if (tabulated_) {
    if (n > values_.size())
      throw std::out_of_range("input rule tabulated to " +
                              std::to_string(values_.size()) +
                              " positions; x(" + std::to_string(n) + ") requested");
    return values_[n - 1];
  }
  return n % 2 == 0 ? even_.at(n) : odd_.at(n);
}

std::string ReductionInput::describe() const {
  if (tabulated_) return "table:" + join_u64(values_);
  if (!even_.is_constant && !odd_.is_constant) return "id";
  if (even_.is_constant && !odd_.is_constant)
    return "evens=" + std::to_string(even_.value);
  if (!even_.is_constant && odd_.is_constant)
    return "odds=" + std::to_string(odd_.value);
  return "tracks:even=" + std::to_string(even_.value) +
         ",odd=" + std::to_string(odd_.value);
}

ReductionInput ReductionInput::parse(std::string_view spec) {
  if (spec == "id") return identity();
  if (spec.rfind("evens=", 0) == 0)
    return constant_on_evens(parse_u64_field(spec.substr(6), "input rule evens"));
  if (spec.rfind("odds=", 0) == 0)
    return constant_on_odds(parse_u64_field(spec.substr(5), "input rule odds"));
  if (spec.rfind("table:", 0) == 0)
    return tabulated(split_u64_list(spec.substr(6), "input rule table"));
  if (spec.rfind("tracks:even=", 0) == 0) {
    const std::string_view rest = spec.substr(12);
    const std::size_t comma = rest.find(",odd=");
    if (comma == std::string_view::npos)
      throw ParseError("input rule: expected \"tracks:even=A,odd=B\", got \"" +
                       std::string(spec) + "\"");
    return custom(Track{true, parse_u64_field(rest.substr(0, comma), "input rule even track")},
                  Track{true, parse_u64_field(rest.substr(comma + 5), "input rule odd track")});
  }
  throw ParseError("unrecognized input rule \"" + std::string(spec) + "\"");
}

std::uint64_t clamp_input(const ReductionInput& x, std::uint64_t n, ClampMode mode) {
  const std::uint64_t clipped = std::min(x.at(n), n);
  switch (mode) {
    case ClampMode::dn:
      return clipped;
    case ClampMode::normal:
      return std::max<std::uint64_t>(27, clipped);
    case ClampMode::two_track:
      return std::max<std::uint64_t>(2, clipped);
  }
  return clipped;
}

// ---------------------------------------------------------------------------
// Edit logs

void write_surgery_log(const std::string& path, const SurgeryLog& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "index,old,new,reason\n";
  for (const auto& e : log.edits)
    out << e.index << ',' << e.old_digit << ',' << e.new_digit << ',' << e.reason
        << '\n';
  if (!out) throw std::runtime_error("write failed on " + path);
}

SurgeryLog read_surgery_log(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  SurgeryLog log;
  std::string line;
  std::uint64_t lineno = 0;
  if (!std::getline(in, line))
    throw ParseError(path + ":1: empty surgery log (missing header)");
  ++lineno;
  if (line == "index,old,new,reason\r") line.pop_back();
  if (line != "index,old,new,reason")
    throw ParseError(path + ":1: bad header \"" + line + "\"");
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty())
      throw ParseError(path + ":" + std::to_string(lineno) + ": blank line");
    const std::size_t c1 = line.find(',');
    const std::size_t c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    const std::size_t c3 = c2 == std::string::npos ? c2 : line.find(',', c2 + 1);
    if (c3 == std::string::npos)
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": expected 4 comma-separated fields");
    try {
      SurgeryEdit e;
      e.index = parse_u64_field(std::string_view(line).substr(0, c1), "index");
      e.old_digit =
          parse_u64_field(std::string_view(line).substr(c1 + 1, c2 - c1 - 1), "old");
      e.new_digit =
          parse_u64_field(std::string_view(line).substr(c2 + 1, c3 - c2 - 1), "new");
      e.reason = line.substr(c3 + 1);
      log.edits.push_back(std::move(e));
    } catch (const ParseError& err) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + err.what());
    }
  }
  return log;
}

DigitStream replay_surgery(const DigitStream& z, const SurgeryLog& log) {
  std::vector<std::uint64_t> out(z.raw().begin(), z.raw().end());
  for (const auto& e : log.edits) {
    if (e.index == 0 || e.index > out.size())
      throw ConstructionError("replay: edit index " + std::to_string(e.index) +
                              " outside the stream (length " +
                              std::to_string(out.size()) + ")");
    if (out[e.index - 1] != e.old_digit)
      throw ConstructionError("replay: index " + std::to_string(e.index) +
                              " holds digit " + std::to_string(out[e.index - 1]) +
                              ", log expects " + std::to_string(e.old_digit));
    if (e.new_digit >= z.seq().base_at(e.index))
      throw ConstructionError("replay: index " + std::to_string(e.index) +
                              ": new digit " + std::to_string(e.new_digit) +
                              " is not below the base");
    out[e.index - 1] = e.new_digit;
  }
  return DigitStream(z.seq(), std::move(out));
}

// ---------------------------------------------------------------------------
// Local digit operations

SurgeryLog theta_op(DigitWindow w, std::uint64_t k, std::uint64_t ell) {
  if (k == 0 || ell == 0)
    throw std::invalid_argument("theta_op: k and ell must be >= 1");
  if (w.bases.size() < w.digits.size())
    throw std::invalid_argument("theta_op: bases shorter than digits");
  SurgeryLog log;
  std::vector<std::uint64_t> starts;  // window offsets of all-zero k-windows
  std::uint64_t run = 0;
  for (std::uint64_t off = 0; off < w.digits.size(); ++off) {
    run = w.digits[off] == 0 ? run + 1 : 0;
    if (run >= k) starts.push_back(off + 1 - k);
  }
  const std::uint64_t take = starts.size() / ell;
  for (std::uint64_t t = starts.size() - take; t < starts.size(); ++t) {
    const std::uint64_t off = starts[t];
    log.edits.push_back({w.first_index + off, 0, 1, "theta"});
    w.digits[off] = 1;
  }
  return log;
}

SurgeryLog xi_op(DigitWindow w, std::uint64_t k) {
  if (k == 0) throw std::invalid_argument("xi_op: k must be >= 1");
  if (w.bases.size() < w.digits.size())
    throw std::invalid_argument("xi_op: bases shorter than digits");
  SurgeryLog log;
  for (std::uint64_t off = 0; off < w.digits.size(); ++off) {
    const std::uint64_t q = w.bases[off];
    const std::uint64_t d = w.digits[off];
    const bool saturating = (static_cast<unsigned __int128>(k) + 1) * d >=
                            static_cast<unsigned __int128>(k) * q;
    if (saturating && d != q - 1) {
      log.edits.push_back({w.first_index + off, d, q - 1, "xi"});
      w.digits[off] = q - 1;
    }
  }
  return log;
}

PivotShift r_func(const Block& pivot) {
  const std::uint64_t e = pivot.at(1);
  return e == 0 ? PivotShift{0, 1} : PivotShift{e, e - 1};
}

// ---------------------------------------------------------------------------
// Reference streams and seeds

DigitStream make_reference(const BasicSequence& seq, std::uint64_t seed,
                           std::uint64_t n) {
  std::mt19937_64 rng(seed);
  std::vector<std::uint64_t> digits(n);
  constexpr std::uint64_t kChunk = std::uint64_t(1) << 16;
  std::vector<std::uint64_t> bases(std::min<std::uint64_t>(
      kChunk, std::max<std::uint64_t>(n, 1)));
  for (std::uint64_t lo = 0; lo < n; lo += kChunk) {
    const std::uint64_t cnt = std::min(kChunk, n - lo);
    const std::span<std::uint64_t> bs(bases.data(), cnt);
    seq.fill_bases(lo + 1, bs);
    for (std::uint64_t t = 0; t < cnt; ++t) digits[lo + t] = uniform_below(rng, bs[t]);
  }
  return DigitStream(seq, std::move(digits));
}

std::uint64_t derived_seed(std::uint64_t master, std::uint64_t m) {
  return splitmix64(master ^ (0x9E3779B97F4A7C15ULL * (m + 1)));
}

SeedSet make_seed_set(std::uint64_t master, std::uint64_t max_m) {
  SeedSet s;
  for (std::uint64_t m = 0; m <= max_m; ++m) s.emplace(m, derived_seed(master, m));
  return s;
}

// ---------------------------------------------------------------------------
// Profiles

std::string profile_name(ScheduleProfile p) {
  switch (p) {
    case ScheduleProfile::dn:
      return "dn";
    case ScheduleProfile::normal:
      return "normal";
    case ScheduleProfile::two_track:
      return "two_track";
    case ScheduleProfile::glue:
      return "glue";
  }
  return "unknown";
}

ScheduleProfile parse_profile(std::string_view name) {
  if (name == "dn") return ScheduleProfile::dn;
  if (name == "normal") return ScheduleProfile::normal;
  if (name == "two_track") return ScheduleProfile::two_track;
  if (name == "glue") return ScheduleProfile::glue;
  throw ParseError("unknown schedule profile \"" + std::string(name) + "\"");
}

// ---------------------------------------------------------------------------
// reduce_dn

ReductionResult reduce_dn(const ReductionInput& x, const DigitStream& z,
                          const Schedule& sched) {
  if (sched.profile != ScheduleProfile::dn)
    throw ConfigError("reduce_dn requires a dn-profile schedule, got " +
                      profile_name(sched.profile));
  SurgeryLog log;
  if (!z.seq().traits().infinite_in_limit)
    log.warnings.push_back(
        "sequence is not declared infinite-in-limit; the distribution target "
        "is not guaranteed by the construction");
  std::vector<std::uint64_t> out(z.raw().begin(), z.raw().end());
  if (sched.intervals() == 0)
    return {DigitStream(z.seq(), std::move(out)), std::move(log)};

  const std::uint64_t b_last = sched.boundaries.back();
  const std::uint64_t need = b_last + kTailWindow - 1;
  if (z.length() < need)
    throw PrecisionError("reduce_dn: the tail at the last boundary reads " +
                             std::to_string(need) + " digits; stream has " +
                             std::to_string(z.length()),
                         need);
  // Decisions are taken on the original stream's tails.  Edits only raise
  // digits, hence only raise tails, so every certified-below-threshold
  // position is lifted strictly above the threshold and every untouched
  // position already sat at or above it.
  const std::vector<std::uint64_t> tau = tail_units(z, b_last);
  std::vector<std::uint64_t> bases(b_last);
  z.seq().fill_bases(1, bases);

  for (std::uint64_t n = 1; n <= sched.intervals(); ++n) {
    const std::uint64_t xp = clamp_input(x, n, ClampMode::dn);
    const unsigned __int128 threshold_den = static_cast<unsigned __int128>(xp) + 2;
    const unsigned __int128 one = static_cast<unsigned __int128>(1) << kTailScaleBits;
    for (std::uint64_t i = sched.boundaries[n - 1] + 1; i <= sched.boundaries[n];
         ++i) {
      const unsigned __int128 certified_tail =
          static_cast<unsigned __int128>(tau[i - 1]) + kTailSlackUnits;
      if (certified_tail * threshold_den >= one) continue;  // ties stay untouched
      const std::uint64_t q = bases[i - 1];
      const std::uint64_t lifted = q / (xp + 2) + 1;  // least a with a/q > 1/(xp+2)
      const std::uint64_t astar = std::max(out[i - 1], lifted);
      if (astar >= q)
        throw ConstructionError(
            "interval " + std::to_string(n) + ": base " + std::to_string(q) +
            " admits no digit with ratio above 1/" +
            std::to_string(xp + 2));
      if (astar != out[i - 1]) {
        log.edits.push_back({i, out[i - 1], astar, "dn-threshold"});
        out[i - 1] = astar;
      }
    }
  }
  return {DigitStream(z.seq(), std::move(out)), std::move(log)};
}

// ---------------------------------------------------------------------------
// reduce_normal

namespace {

// E units (scale 2^-kExpScaleBits) of the expectation of B over starts [1, n].
U256 expectation_units_upto(const BasicSequence& seq, const Block& B,
                            std::uint64_t n) {
  constexpr std::uint64_t kChunk = std::uint64_t(1) << 16;
  std::vector<TermUnits> terms(std::min<std::uint64_t>(
      kChunk, std::max<std::uint64_t>(n, 1)));
  U256 e = 0;
  for (std::uint64_t lo = 1; lo <= n; lo += kChunk) {
    const std::uint64_t hi = std::min(n, lo + kChunk - 1);
    const std::span<TermUnits> chunk(terms.data(), hi - lo + 1);
    expectation_terms(seq, B, lo, chunk);
    for (auto& t : chunk) e += to_u256(t);
  }
  return e;
}

// Largest c >= 0 with c^3 * mul <= bound; mul >= 1.
std::uint64_t largest_cube_root_scaled(const BigInt& bound, const BigInt& mul) {
  if (bound < mul) return 0;
  std::uint64_t lo = 1;
  while (ipow(BigInt(lo) * 2, 3) * mul <= bound) lo *= 2;
  std::uint64_t hi = lo * 2;  // lo admissible, hi not
  while (lo + 1 < hi) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (ipow(BigInt(mid), 3) * mul <= bound)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

std::uint64_t count_in_span(std::span<const std::uint64_t> digits,
                            const std::vector<std::uint64_t>& word,
                            std::uint64_t from, std::uint64_t to) {
  std::uint64_t c = 0;
  for (std::uint64_t s = from; s <= to; ++s) {
    bool hit = true;
    for (std::size_t t = 0; t < word.size(); ++t)
      if (digits[s - 1 + t] != word[t]) {
        hit = false;
        break;
      }
    c += hit;
  }
  return c;
}

}  // namespace

ReductionResult reduce_normal(const ReductionInput& x, const DigitStream& z,
                              const Schedule& sched, const StatOptions& opt) {
  if (sched.profile != ScheduleProfile::normal)
    throw ConfigError("reduce_normal requires a normal-profile schedule, got " +
                      profile_name(sched.profile));
  SurgeryLog log;
  std::vector<std::uint64_t> out(z.raw().begin(), z.raw().end());
  const BasicSequence& seq = z.seq();
  const std::span<const std::uint64_t> orig = z.raw();
  const BigInt scale3 = ipow(BigInt(1) << kExpScaleBits, 3);

  for (std::uint64_t n = 1; n <= sched.intervals(); ++n) {
    const std::uint64_t b_lo = sched.boundaries[n - 1];
    const std::uint64_t b_hi = sched.boundaries[n];
    const std::uint64_t xp = clamp_input(x, n, ClampMode::normal);
    const std::uint64_t p_limit = iroot_floor(xp, 6);

    // Candidate pivots: the good blocks among the first p_limit canonical ones.
    std::vector<Block> good;
    for (Block& B : enumerate_blocks(p_limit)) {
      const Goodness g =
          is_good(B, seq, opt.goodness_horizon, opt.goodness_threshold);
      if (g == Goodness::unknown)
        throw ConfigError("goodness of block " + B.literal() +
                          " is unresolved; declare divergence metadata");
      if (g == Goodness::good) good.push_back(std::move(B));
    }
    if (good.empty())
      throw ConstructionError("interval " + std::to_string(n) +
                              ": no good block among the first " +
                              std::to_string(p_limit) + " canonical blocks");
    std::uint64_t maxlen = 0;
    for (const Block& B : good) maxlen = std::max(maxlen, B.length());
    const std::uint64_t need = b_hi + maxlen - 1;
    if (z.length() < need)
      throw PrecisionError("reduce_normal: counting to boundary " +
                               std::to_string(b_hi) + " reads " +
                               std::to_string(need) + " digits; stream has " +
                               std::to_string(z.length()),
                           need);

    // Decisions below are functions of the original stream and the schedule
    // only; the working copy receives the edits at the end of the interval.
    struct Candidate {
      const Block* block = nullptr;
      U256 e_units{};                  // E at b_hi
      std::vector<std::uint64_t> cnt;  // prefix occurrence counts on orig
      std::uint64_t split = 0;         // least late-count split index m
      bool degenerate = false;
    };
    std::vector<Candidate> cands(good.size());
    for (std::size_t i = 0; i < good.size(); ++i) {
      Candidate& c = cands[i];
      c.block = &good[i];
      c.e_units = expectation_units_upto(seq, good[i], b_hi);
      c.cnt = prefix_counts(match_mask(z, good[i], b_hi));

      // Late-count threshold: N <= 2 Q / x'^(1/3), i.e. N^3 x' <= 8 Q^3.
      // c_lo/c_hi bracket the integer threshold through the one-sided unit
      // bounds E <= 2^S Q < E + b_hi; a mismatch falls back to the exact Q.
      const BigInt e_big = to_bigint(c.e_units);
      const BigInt mul = BigInt(xp) * scale3;
      const std::uint64_t c_lo = largest_cube_root_scaled(8 * ipow(e_big, 3), mul);
      const std::uint64_t c_hi =
          largest_cube_root_scaled(8 * ipow(e_big + b_hi, 3), mul);
      std::uint64_t c_star = c_lo;
      if (c_lo != c_hi) {
        const Rational q_exact = expectation(good[i], 1, b_hi, seq);
        c_star = largest_cube_root_scaled(
            8 * ipow(BigInt(boost::multiprecision::numerator(q_exact)), 3),
            BigInt(xp) *
                ipow(BigInt(boost::multiprecision::denominator(q_exact)), 3));
      }

      const auto late_count = [&](std::uint64_t m) {
        const std::uint64_t start = std::max<std::uint64_t>(m, 1);
        return c.cnt[b_hi - 1] - (start >= 2 ? c.cnt[start - 2] : 0);
      };
      if (late_count(b_hi - 1) > c_star) {
        c.split = b_hi - 1;
        c.degenerate = true;
        log.warnings.push_back("interval " + std::to_string(n) + ": block " +
                               good[i].literal() +
                               " has no split index meeting the late-count "
                               "bound; using the boundary itself");
      } else {
        std::uint64_t lo = b_lo, hi = b_hi - 1;  // hi admissible
        while (lo < hi) {
          const std::uint64_t mid = lo + (hi - lo) / 2;
          if (late_count(mid) <= c_star)
            hi = mid;
          else
            lo = mid + 1;
        }
        c.split = lo;
      }
    }

    // Pivot: the candidate with the largest split index (ties: first in
    // canonical order).
    std::size_t pivot_at = 0;
    for (std::size_t i = 1; i < cands.size(); ++i)
      if (cands[i].split > cands[pivot_at].split) pivot_at = i;
    const Block& pivot = *cands[pivot_at].block;
    const PivotShift shift = r_func(pivot);
    const BigInt e_pivot = to_bigint(cands[pivot_at].e_units);

    // Sparse blocks: Q(B_j) < Q(pivot) / (4 L 4^L sqrt(x')), certified on
    // squared units with an exact-rational fallback when the unit bounds
    // disagree.
    std::vector<const Block*> sparse;
    for (std::size_t j = 0; j < cands.size(); ++j) {
      if (j == pivot_at) continue;
      const Block& Bj = *cands[j].block;
      const std::uint64_t L = Bj.length();
      const BigInt k_factor = BigInt(4) * L * ipow(BigInt(4), L);
      const BigInt k2x = k_factor * k_factor * xp;
      const BigInt e_j = to_bigint(cands[j].e_units);
      const bool certainly_sparse =
          k2x * ipow(e_j + b_hi, 2) <= ipow(e_pivot, 2);
      const bool certainly_not =
          k2x * ipow(e_j, 2) >= ipow(e_pivot + b_hi, 2);
      bool is_sparse = certainly_sparse;
      if (!certainly_sparse && !certainly_not) {
        const Rational qj = expectation(Bj, 1, b_hi, seq);
        const Rational qp = expectation(pivot, 1, b_hi, seq);
        is_sparse = k2x * ipow(BigInt(boost::multiprecision::numerator(qj)), 2) *
                        ipow(BigInt(boost::multiprecision::denominator(qp)), 2) <
                    ipow(BigInt(boost::multiprecision::numerator(qp)), 2) *
                        ipow(BigInt(boost::multiprecision::denominator(qj)), 2);
      }
      if (is_sparse) sparse.push_back(&Bj);
    }

    // A: pivot occurrences (on the original stream) from the split on.
    const std::uint64_t a_from = std::max<std::uint64_t>(cands[pivot_at].split, 1);
    std::vector<std::uint64_t> occ;
    const std::vector<std::uint64_t>& pword = pivot.word();
    for (std::uint64_t s = a_from; s <= b_hi; ++s) {
      bool hit = true;
      for (std::size_t t = 0; t < pword.size(); ++t)
        if (orig[s - 1 + t] != pword[t]) {
          hit = false;
          break;
        }
      if (hit) occ.push_back(s);
    }

    // A': drop occurrences whose edited position could sit inside an
    // occurrence of a sparse block after the shift.  The edit changes only
    // position i, so a post-edit occurrence through i matches the sparse
    // word exactly away from i and matches the shift preimage at i.
    std::vector<std::uint64_t> safe;
    for (const std::uint64_t i : occ) {
      bool excluded = false;
      for (const Block* Bj : sparse) {
        const std::vector<std::uint64_t>& w = Bj->word();
        const std::uint64_t L = w.size();
        for (std::uint64_t s = 0; s < L && !excluded; ++s) {
          if (i <= s) continue;  // window would start before index 1
          const std::uint64_t w0 = i - s;
          if (w0 + L - 1 > z.length()) continue;
          bool match = true;
          for (std::uint64_t t = 1; t <= L && match; ++t) {
            const std::uint64_t d = orig[w0 + t - 2];
            if (w0 + t - 1 == i)
              match = d == w[t - 1] || (w[t - 1] == shift.to && d == shift.from);
            else
              match = d == w[t - 1];
          }
          excluded = match;
        }
        if (excluded) break;
      }
      if (!excluded) safe.push_back(i);
    }

    // Removal quota floor(Q(pivot)/x'): the unit brackets agree except within
    // b_hi/2^192 of an integer; the exact value settles any mismatch.
    const BigInt denom = BigInt(xp) << kExpScaleBits;
    const BigInt t_lo = e_pivot / denom;
    const BigInt t_hi = (e_pivot + b_hi) / denom;
    BigInt quota = t_lo;
    if (t_lo != t_hi) {
      const Rational qp = expectation(pivot, 1, b_hi, seq);
      quota = BigInt(boost::multiprecision::numerator(qp)) /
              (BigInt(boost::multiprecision::denominator(qp)) * xp);
    }
    std::uint64_t take = quota > safe.size()
                             ? static_cast<std::uint64_t>(safe.size())
                             : static_cast<std::uint64_t>(quota);
    if (quota > safe.size())
      log.warnings.push_back("interval " + std::to_string(n) +
                             ": removal quota " + quota.str() +
                             " exceeds the " + std::to_string(safe.size()) +
                             " surviving occurrences; clipped");

    // The construction wants |A'| >= Q(pivot)/x'^(1/3); warn when the
    // certified form |A'|^3 x' 2^(3S) >= (E + b_hi)^3 cannot confirm it.
    if (ipow(BigInt(safe.size()), 3) * xp * scale3 < ipow(e_pivot + b_hi, 3))
      log.warnings.push_back(
          "interval " + std::to_string(n) + ": surviving occurrences |A'| = " +
          std::to_string(safe.size()) +
          " fall below the certified pivot-count lower bound (E units " +
          to_bigint(cands[pivot_at].e_units).str() + " at scale 2^-192)");

    // Apply the shift to the last `take` survivors on the working copy.
    const std::uint64_t before = count_in_span(out, pword, 1, b_hi);
    std::uint64_t applied = 0;
    for (std::uint64_t t = safe.size() - take; t < safe.size(); ++t) {
      const std::uint64_t i = safe[t];
      const std::uint64_t d = out[i - 1];
      const std::uint64_t nd = shift(d);
      if (nd != d) {
        log.edits.push_back({i, d, nd, "r"});
        out[i - 1] = nd;
        ++applied;
      }
    }
    const std::uint64_t after = count_in_span(out, pword, 1, b_hi);
    std::string note = "interval " + std::to_string(n) + ": pivot " +
                       pivot.literal() + " recount before=" +
                       std::to_string(before) + " after=" + std::to_string(after) +
                       " removed=" + std::to_string(applied);
    if (after != before - applied)
      note += " (overlap correction: net change " +
              std::to_string(static_cast<std::int64_t>(after) -
                             static_cast<std::int64_t>(before)) +
              ")";
    log.warnings.push_back(std::move(note));
  }
  return {DigitStream(seq, std::move(out)), std::move(log)};
}

// ---------------------------------------------------------------------------
// reduce_diff4

ReductionResult reduce_diff4(const ReductionInput& x, const DigitStream& z,
                             const Schedule& sched) {
  if (sched.profile != ScheduleProfile::two_track)
    throw ConfigError("reduce_diff4 requires a two_track-profile schedule, got " +
                      profile_name(sched.profile));
  const SeqTraits& tr = z.seq().traits();
  SurgeryLog log;
  if (!tr.infinite_in_limit)
    log.warnings.push_back(
        "sequence is not declared infinite-in-limit; the saturation pass "
        "controls distribution behaviour only in that regime");
  std::uint64_t k0 = 0;
  if (!tr.div_all) {
    k0 = tr.div_k;
    if (k0 == 0)
      throw ConfigError(
          "sequence is declared 1-convergent: no divergent zero-block length "
          "to thin");
  }
  std::vector<std::uint64_t> out(z.raw().begin(), z.raw().end());
  if (sched.intervals() == 0)
    return {DigitStream(z.seq(), std::move(out)), std::move(log)};
  const std::uint64_t b_last = sched.boundaries.back();
  if (z.length() < b_last)
    throw PrecisionError("reduce_diff4: schedule reaches boundary " +
                             std::to_string(b_last) + "; stream has " +
                             std::to_string(z.length()),
                         b_last);

  std::vector<std::uint64_t> bases;
  for (std::uint64_t n = 1; n <= sched.intervals(); ++n) {
    const std::uint64_t b_lo = sched.boundaries[n - 1];
    const std::uint64_t b_hi = sched.boundaries[n];
    const std::uint64_t xe = clamp_input(x, 2 * n, ClampMode::two_track);
    const std::uint64_t xo = clamp_input(x, 2 * n + 1, ClampMode::two_track);
    const std::uint64_t k = tr.div_all ? xe : k0;
    const std::uint64_t width = b_hi - b_lo;
    bases.resize(width);
    z.seq().fill_bases(b_lo + 1, bases);
    const DigitWindow win{b_lo + 1,
                          std::span<std::uint64_t>(out).subspan(b_lo, width),
                          bases};
    SurgeryLog thinned = theta_op(win, k, xe);
    SurgeryLog saturated = xi_op(win, xo);
    const std::size_t first = log.edits.size();
    log.edits.insert(log.edits.end(), thinned.edits.begin(), thinned.edits.end());
    log.edits.insert(log.edits.end(), saturated.edits.begin(),
                     saturated.edits.end());
    std::stable_sort(log.edits.begin() + first, log.edits.end(),
                     [](const SurgeryEdit& a, const SurgeryEdit& b) {
                       return a.index < b.index;
                     });
  }
  return {DigitStream(z.seq(), std::move(out)), std::move(log)};
}

// ---------------------------------------------------------------------------
// reduce_rn_not_n

GlueResult reduce_rn_not_n(const ReductionInput& x, const BasicSequence& seq,
                           const Schedule& sched, const SeedSet& seeds) {
  if (sched.profile != ScheduleProfile::glue)
    throw ConfigError("reduce_rn_not_n requires a glue-profile schedule, got " +
                      profile_name(sched.profile));
  const SeqTraits& tr = seq.traits();
  SurgeryLog log;
  if (!tr.infinite_in_limit)
    log.warnings.push_back(
        "sequence is not declared infinite-in-limit; the glued construction's "
        "distribution side is not guaranteed");
  std::uint64_t k0 = 0;
  if (!tr.div_all) {
    k0 = tr.div_k;
    if (k0 == 0)
      throw ConfigError(
          "sequence is declared 1-convergent: the glued construction needs a "
          "divergent zero-block length");
  }
  if (sched.intervals() == 0)
    return {DigitStream(seq, {}), std::move(log), seq};

  const std::uint64_t b_last = sched.boundaries.back();
  const std::uint64_t out_len = b_last + kTailWindow - 1;
  std::vector<std::uint64_t> out(out_len, 0);

  struct RefState {
    std::mt19937_64 rng;
    BasicSequence pm;
    std::vector<std::uint64_t> digits;
  };
  std::map<std::uint64_t, RefState> refs;
  const auto stream_of = [&](std::uint64_t m, std::uint64_t len) -> RefState& {
    auto it = refs.find(m);
    if (it == refs.end()) {
      const auto s = seeds.find(m);
      if (s == seeds.end())
        throw ConfigError("no seed for squeezed reference stream m=" +
                          std::to_string(m));
      it = refs
               .emplace(m, RefState{std::mt19937_64(s->second),
                                    derive_Pm(seq, m),
                                    {}})
               .first;
    }
    RefState& rc = it->second;
    constexpr std::uint64_t kChunk = std::uint64_t(1) << 16;
    std::vector<std::uint64_t> bases(kChunk);
    while (rc.digits.size() < len) {
      const std::uint64_t lo = rc.digits.size();
      const std::uint64_t cnt = std::min(kChunk, len - lo);
      const std::span<std::uint64_t> bs(bases.data(), cnt);
      rc.pm.fill_bases(lo + 1, bs);
      for (std::uint64_t t = 0; t < cnt; ++t)
        rc.digits.push_back(uniform_below(rc.rng, bs[t]));
    }
    return rc;
  };

  std::vector<std::pair<std::uint64_t, std::uint64_t>> segments;
  std::vector<std::uint64_t> bases;
  for (std::uint64_t n = 1; n <= sched.intervals(); ++n) {
    const std::uint64_t b_lo = sched.boundaries[n - 1];
    const std::uint64_t b_hi = sched.boundaries[n];
    const std::uint64_t m_n = clamp_input(x, 2 * n + 1, ClampMode::dn);
    segments.emplace_back(b_hi, m_n);
    const std::uint64_t fill_to = n == sched.intervals() ? out_len : b_hi;
    RefState& rc = stream_of(m_n, fill_to);
    std::copy(rc.digits.begin() + b_lo, rc.digits.begin() + fill_to,
              out.begin() + b_lo);

    const std::uint64_t xe = clamp_input(x, 2 * n, ClampMode::dn);
    const std::uint64_t ell = std::max<std::uint64_t>(1, xe);
    const std::uint64_t g = tr.div_all ? ell : k0;
    const std::uint64_t width = b_hi - b_lo;
    bases.resize(width);
    rc.pm.fill_bases(b_lo + 1, bases);
    const DigitWindow win{b_lo + 1,
                          std::span<std::uint64_t>(out).subspan(b_lo, width),
                          bases};
    SurgeryLog thinned = theta_op(win, g, ell);
    log.edits.insert(log.edits.end(), thinned.edits.begin(), thinned.edits.end());
  }
  return {DigitStream(seq, std::move(out)), std::move(log),
          BasicSequence::piecewise_squeezed(std::move(segments), seq)};
}

}  // namespace cantor
