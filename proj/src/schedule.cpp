// Schedule construction: greedy boundary search per profile, with exact
// fixed-point certification of every growth and deviation condition, plus the
// JSON certificate document.
//
// All inequality checks run in integer arithmetic on round-down expectation
// units (scale 2^-kExpScaleBits, with E <= 2^S Q < E + m) or tail units
// (scale 2^-kTailScaleBits), so a recorded "satisfied" is a proof, never a
// float comparison.  Suffix ("windowed") conditions are enforced from each
// boundary to the data horizon via failure tables: one ascending pass per
// condition records, for every index, the minimal instance it fails (failing
// instances are upward-closed), and a prefix-max merge yields lf[n] = the
// last index failing instance n.  The greedy candidate for a boundary is then
// max(previous+1, growth crossings, lf[instance]+1).

#include "cantor/surgery.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "cantor/blocks.hpp"
#include "cantor/digits.hpp"
#include "cantor/kernels.hpp"
#include "cantor/numeric.hpp"
#include "cantor/sequences.hpp"

namespace cantor {
namespace {

using u128 = unsigned __int128;

// Deepest instance table kept per profile.  The bin-frequency profile grows
// boundaries roughly quadratically, so deep tables are cheap and useful; the
// block profiles double their gaps and exhaust 64-bit indices long before 72.
constexpr std::uint64_t kDnInstanceCap = 4096;
constexpr std::uint64_t kBlockInstanceCap = 72;

std::uint64_t sat_u64(u128 v) {
  return v > std::numeric_limits<std::uint64_t>::max()
             ? std::numeric_limits<std::uint64_t>::max()
             : static_cast<std::uint64_t>(v);
}

std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) {
  return sat_u64(static_cast<u128>(a) + b);
}

unsigned bit_width_u64(std::uint64_t v) {
  return v == 0 ? 0 : 64 - static_cast<unsigned>(__builtin_clzll(v));
}

// ceil(v / 2^bits); v stays below 2^224 so the reconstruction cannot wrap.
U256 ceil_div_pow2(const U256& v, std::uint64_t bits) {
  if (bits >= 256) return v == 0 ? U256(0) : U256(1);
  U256 q = v >> static_cast<unsigned>(bits);
  if ((q << static_cast<unsigned>(bits)) != v) ++q;
  return q;
}

Rational units_to_rational(const U256& units) {
  return Rational(to_bigint(units), BigInt(1) << kExpScaleBits);
}

double to_double(const Rational& r) { return r.convert_to<double>(); }

// Relative slack of "lhs > rhs" (resp. "lhs < rhs") at the recorded point:
// positive means satisfied with room, negative means violated.
double rel_margin(bool greater, const Rational& lhs, const Rational& rhs) {
  if (greater) {
    if (lhs == 0) return rhs == 0 ? 0.0 : -1.0;
    const Rational m = (lhs - rhs) / lhs;
    return to_double(m);
  }
  if (rhs == 0) return lhs == 0 ? 0.0 : -1.0;
  const Rational m = (rhs - lhs) / rhs;
  return to_double(m);
}

// --------------------------------------------------------------------------
// Failure tables.  A pass over one condition family calls record(nm, i) for
// every index i that fails its minimal applicable instance nm; because a
// failure at instance n implies failure at every instance >= n, the merged
// lf[n] = max over passes of the last index whose minimal failing instance
// is <= n.
struct FailureTable {
  std::vector<std::uint64_t> last;
  explicit FailureTable(std::uint64_t cap) : last(cap + 2, 0) {}
  void record(std::uint64_t minimal_n, std::uint64_t index) {
    if (minimal_n < last.size()) last[minimal_n] = index;
  }
};

void merge_failures(std::vector<std::uint64_t>& lf, const FailureTable& t) {
  std::uint64_t run = 0;
  for (std::size_t n = 1; n < lf.size(); ++n) {
    if (n < t.last.size()) run = std::max(run, t.last[n]);
    lf[n] = std::max(lf[n], run);
  }
}

// --------------------------------------------------------------------------
// Block enumeration by exact weight, canonical order (length, then lex).
void fill_words(std::uint64_t remaining, std::size_t pos,
                std::vector<std::uint64_t>& word, std::vector<Block>& out) {
  if (pos + 1 == word.size()) {
    word[pos] = remaining;
    out.emplace_back(word);
    return;
  }
  for (std::uint64_t e = 0; e <= remaining; ++e) {
    word[pos] = e;
    fill_words(remaining - e, pos + 1, word, out);
  }
}

std::vector<Block> blocks_of_weight(std::uint64_t w) {
  std::vector<Block> out;
  for (std::uint64_t len = 1; len <= w; ++len) {
    std::vector<std::uint64_t> word(len, 0);
    fill_words(w - len, 0, word, out);
  }
  return out;
}

// --------------------------------------------------------------------------
// Expectation-unit accumulation over start indices [first, last].
U256 expectation_units(const BasicSequence& seq, const Block& B,
                       std::uint64_t first, std::uint64_t last) {
  U256 acc = 0;
  if (last < first) return acc;
  constexpr std::uint64_t kChunk = std::uint64_t(1) << 16;
  std::vector<TermUnits> terms(
      static_cast<std::size_t>(std::min(kChunk, last - first + 1)));
  for (std::uint64_t lo = first; lo <= last; lo += kChunk) {
    const std::uint64_t hi = std::min(last, lo + kChunk - 1);
    const std::span<TermUnits> chunk(terms.data(),
                                     static_cast<std::size_t>(hi - lo + 1));
    expectation_terms(seq, B, lo, chunk);
    for (const TermUnits& t : chunk) acc += to_u256(t);
  }
  return acc;
}

// threshold = bound * 2^(shift + kExpScaleBits), or nullopt when that exceeds
// what the 256-bit accumulator can ever reach (then no data can cross it).
std::optional<U256> growth_threshold(std::uint64_t bound, std::uint64_t shift) {
  if (bound == 0) return U256(0);
  if (shift + kExpScaleBits + bit_width_u64(bound) > 250) return std::nullopt;
  U256 t = bound;
  t <<= static_cast<unsigned>(shift + kExpScaleBits);
  return t;
}

// Least index i in [from, to] where the running expectation units of B
// (accumulated from `from`) strictly exceed `threshold`.
std::optional<std::uint64_t> first_crossing(const BasicSequence& seq,
                                            const Block& B, std::uint64_t from,
                                            std::uint64_t to,
                                            const U256& threshold) {
  if (from > to || from == 0) return std::nullopt;
  constexpr std::uint64_t kChunk = std::uint64_t(1) << 16;
  std::vector<TermUnits> terms(
      static_cast<std::size_t>(std::min(kChunk, to - from + 1)));
  U256 acc = 0;
  for (std::uint64_t lo = from; lo <= to; lo += kChunk) {
    const std::uint64_t hi = std::min(to, lo + kChunk - 1);
    const std::span<TermUnits> chunk(terms.data(),
                                     static_cast<std::size_t>(hi - lo + 1));
    expectation_terms(seq, B, lo, chunk);
    for (std::uint64_t i = lo; i <= hi; ++i) {
      acc += to_u256(chunk[i - lo]);
      if (acc > threshold) return i;
    }
  }
  return std::nullopt;
}

// --------------------------------------------------------------------------
// Windowed count-deviation scan: X_m = |N_m 2^S - E_m| + m over [from, M],
// tracking the worst relative deviation X/E and an exact all-indices verdict
// supplied by `fails(X, E)`.
struct TubeScanResult {
  bool any = false;
  bool ok = true;
  double worst = -1.0;
  std::uint64_t worst_m = 0;
  U256 worst_x = 0;
  U256 worst_e = 0;
};

template <class FailFn>
TubeScanResult tube_scan(const DigitStream& d, const Block& B,
                         std::uint64_t from, std::uint64_t M, FailFn&& fails) {
  TubeScanResult r;
  if (from == 0 || from > M) return r;
  scan_block_profile(d, B, M,
                     [&](std::uint64_t m, std::uint64_t cnt, const U256& e) {
                       if (m < from) return;
                       U256 n2s = cnt;
                       n2s <<= kExpScaleBits;
                       const U256 diff = n2s >= e ? U256(n2s - e) : U256(e - n2s);
                       const U256 x = diff + m;
                       if (fails(x, e)) r.ok = false;
                       const double ratio =
                           e == 0 ? std::numeric_limits<double>::infinity()
                                  : x.convert_to<double>() / e.convert_to<double>();
                       if (!r.any || ratio > r.worst) {
                         r.any = true;
                         r.worst = ratio;
                         r.worst_m = m;
                         r.worst_x = x;
                         r.worst_e = e;
                       }
                     });
  return r;
}

constexpr const char* kEmptyWindowNote =
    "windowed records at this boundary had no data range (window empty at "
    "this data length)";

// "lhs < bound" record from a deviation scan; empty windows record as
// satisfied with a certificate note added by the caller.
CertRecord deviation_record(std::string condition, const TubeScanResult& s,
                            const Rational& bound) {
  CertRecord r;
  r.condition = std::move(condition);
  r.greater = false;
  r.windowed = true;
  r.rhs = format_rational(bound);
  if (!s.any) {
    r.satisfied = true;
    r.lhs = "0";
    return r;
  }
  r.worst_index = s.worst_m;
  if (s.worst_e == 0) {
    r.satisfied = false;
    r.lhs = "inf";
    r.margin = -1.0;
    return r;
  }
  const Rational lhs(to_bigint(s.worst_x), to_bigint(s.worst_e));
  r.satisfied = s.ok;
  r.lhs = format_rational(lhs);
  r.margin = rel_margin(false, lhs, bound);
  return r;
}

// "lhs > rhs" record where lhs is a certified lower bound in expectation
// units (round-down: units > rhs*2^S proves the true quantity exceeds rhs).
CertRecord growth_record(std::string condition, const U256& units,
                         const BigInt& rhs_int, std::uint64_t at_index) {
  CertRecord r;
  r.condition = std::move(condition);
  r.greater = true;
  r.windowed = false;
  const Rational lhs = units_to_rational(units);
  const Rational rhs(rhs_int);
  r.satisfied = to_bigint(units) > (rhs_int << kExpScaleBits);
  r.lhs = format_rational(lhs);
  r.rhs = format_rational(rhs);
  r.worst_index = at_index;
  r.margin = rel_margin(true, lhs, rhs);
  return r;
}

// --------------------------------------------------------------------------
// Cross-stream expectation comparison: at each index i, the largest running
// expectation (plus the round-down slack i) must stay within a 2^(|B|+1)
// factor of the smallest one.
struct CrossScanResult {
  bool any = false;
  bool ok = true;
  std::uint64_t last_fail = 0;
  double worst = -1.0;
  std::uint64_t worst_i = 0;
  BigInt worst_lhs;
  U256 worst_emin = 0;
};

CrossScanResult cross_scan(const std::vector<const BasicSequence*>& seqs,
                           const Block& B, std::uint64_t from, std::uint64_t M,
                           unsigned lshift) {
  CrossScanResult r;
  if (seqs.empty() || M == 0) return r;
  const std::size_t S = seqs.size();
  constexpr std::uint64_t kChunk = std::uint64_t(1) << 16;
  const std::size_t chunk_cap = static_cast<std::size_t>(std::min(kChunk, M));
  std::vector<U256> acc(S, U256(0));
  std::vector<std::vector<TermUnits>> chunk(S);
  for (auto& c : chunk) c.resize(chunk_cap);
  for (std::uint64_t lo = 1; lo <= M; lo += kChunk) {
    const std::uint64_t hi = std::min(M, lo + kChunk - 1);
    for (std::size_t s = 0; s < S; ++s)
      expectation_terms(*seqs[s], B, lo,
                        std::span<TermUnits>(chunk[s].data(),
                                             static_cast<std::size_t>(hi - lo + 1)));
    for (std::uint64_t i = lo; i <= hi; ++i) {
      U256 emax = 0, emin = 0;
      for (std::size_t s = 0; s < S; ++s) {
        acc[s] += to_u256(chunk[s][i - lo]);
        if (s == 0 || acc[s] > emax) emax = acc[s];
        if (s == 0 || acc[s] < emin) emin = acc[s];
      }
      const U256 lhs = emax + i;
      bool fail;
      if (emin == 0) {
        fail = true;
      } else {
        const unsigned bits = boost::multiprecision::msb(emin) + 1;
        if (bits + lshift <= 255)
          fail = lhs > (emin << lshift);
        else
          fail = to_bigint(lhs) > (to_bigint(emin) << lshift);
      }
      if (fail) r.last_fail = i;
      if (i < from) continue;
      if (fail) r.ok = false;
      const double ratio = emin == 0
                               ? std::numeric_limits<double>::infinity()
                               : lhs.convert_to<double>() / emin.convert_to<double>();
      if (!r.any || ratio > r.worst) {
        r.any = true;
        r.worst = ratio;
        r.worst_i = i;
        r.worst_lhs = to_bigint(lhs);
        r.worst_emin = emin;
      }
    }
  }
  return r;
}

// --------------------------------------------------------------------------
// Profile builder: distribution bins.  The suffix condition of instance n,
// anchored at boundary b_{n-1}, requires every prefix length b >= b_{n-1} to
// put a fraction within 1/(2n) of 1/k of the digit tails into [0, 1/k), for
// every k <= n+2.  Tail membership is decided on the certified 2^-64 grid.
class DnBuilder {
 public:
  DnBuilder(const DigitStream& z, std::uint64_t cap)
      : cap_(cap), lf_(cap + 2, 0) {
    horizon_ = z.length() >= kTailWindow ? z.length() - (kTailWindow - 1) : 0;
    if (horizon_ > 0) tau_ = tail_units(z, horizon_);
  }

  std::uint64_t instance_cap() const { return cap_; }
  std::uint64_t horizon() const { return horizon_; }
  std::uint64_t overhang() const { return kTailWindow - 1; }

  void prepare(std::uint64_t j) {
    const std::uint64_t inst = std::min(j + 1, cap_ + 1);
    while (bins_done_ < inst + 2) run_bin_pass(++bins_done_);
  }

  std::optional<std::uint64_t> candidate(std::uint64_t j,
                                         std::uint64_t b_prev) const {
    const std::uint64_t inst = j + 1;
    return std::max(b_prev + 1, sat_add(lf_[inst], 1));
  }

  void begin_certificates(const std::vector<std::uint64_t>& bs) {
    boundaries_ = bs;
    worst_.assign(bs.size(), {});
    if (bs.size() <= 1 || horizon_ == 0) {
      for (std::size_t t = 1; t < bs.size(); ++t)
        worst_[t].assign(bin_count(t), WorstDev{});
      return;
    }
    std::uint64_t kmax = 0;
    for (std::size_t t = 1; t < bs.size(); ++t) {
      worst_[t].assign(bin_count(t), WorstDev{});
      kmax = std::max<std::uint64_t>(kmax, bin_count(t));
    }
    for (std::uint64_t k = 1; k <= kmax; ++k) run_worst_pass(k);
  }

  BoundaryCertificate certify(std::size_t t, std::uint64_t b, std::uint64_t) {
    BoundaryCertificate cert;
    cert.boundary = b;
    const std::uint64_t inst = std::min<std::uint64_t>(t + 1, cap_ + 1);
    const Rational bound(BigInt(1), BigInt(2) * inst);
    bool empty_window = false;
    for (std::uint64_t k = 1; k <= inst + 2; ++k) {
      const WorstDev& w = worst_.at(t).at(k - 1);
      CertRecord r;
      r.condition = "bin-frequency(k=" + std::to_string(k) + ")";
      r.greater = false;
      r.windowed = true;
      r.rhs = format_rational(bound);
      if (!w.any) {
        r.satisfied = true;
        r.lhs = "0";
        empty_window = true;
      } else {
        const Rational lhs(BigInt(w.diff), BigInt(k) * w.b);
        r.satisfied =
            static_cast<u128>(2) * inst * w.diff < static_cast<u128>(k) * w.b;
        r.lhs = format_rational(lhs);
        r.worst_index = w.b;
        r.margin = rel_margin(false, lhs, bound);
      }
      cert.records.push_back(std::move(r));
    }
    if (empty_window) cert.notes.push_back(kEmptyWindowNote);
    return cert;
  }

  BoundaryCertificate anchor_certificate() const {
    BoundaryCertificate cert;
    cert.boundary = 0;
    cert.notes.push_back("anchor boundary b_0 = 0; no conditions are evaluated here");
    cert.notes.push_back(
        "the instance-1 suffix condition anchored at b_0 is not certified: its "
        "k=1 bin deviates by 1 at prefix length 1, so no prefix satisfies it; "
        "each instance is instead certified from its own boundary onward");
    return cert;
  }

 private:
  struct WorstDev {
    bool any = false;
    std::uint64_t diff = 0;
    std::uint64_t b = 1;
  };

  std::uint64_t bin_count(std::size_t t) const {
    return std::min<std::uint64_t>(t + 1, cap_ + 1) + 2;
  }

  bool member(std::uint64_t i, std::uint64_t k) const {
    return static_cast<u128>(tau_[i - 1]) * k < (static_cast<u128>(1) << kTailScaleBits);
  }

  // Ascending pass: at prefix length b the bin count is c = #{i < b}; a
  // nonzero deviation d = |k c - b| fails instance n iff 2 n d >= k b.
  void run_bin_pass(std::uint64_t k) {
    FailureTable t(cap_);
    std::uint64_t c = 0;
    for (std::uint64_t b = 1; b <= horizon_; ++b) {
      const u128 kc = static_cast<u128>(k) * c;
      const u128 d = kc >= b ? kc - b : static_cast<u128>(b) - kc;
      if (d != 0) {
        const u128 nmin = (static_cast<u128>(k) * b + 2 * d - 1) / (2 * d);
        std::uint64_t nm =
            nmin > cap_ + 1 ? cap_ + 2 : static_cast<std::uint64_t>(nmin);
        nm = std::max<std::uint64_t>(nm, k > 2 ? k - 2 : 1);
        t.record(nm, b);
      }
      if (member(b, k)) ++c;
    }
    merge_failures(lf_, t);
  }

  // Descending pass per k: maintains the bin count decrementally, keeps the
  // worst deviation seen so far (i.e. over the suffix), and snapshots it at
  // every boundary that quantifies this k.
  void run_worst_pass(std::uint64_t k) {
    std::vector<std::size_t> anchors;
    for (std::size_t t = 1; t < boundaries_.size(); ++t)
      if (k <= worst_[t].size() && boundaries_[t] >= 1 &&
          boundaries_[t] <= horizon_)
        anchors.push_back(t);
    if (anchors.empty()) return;
    std::uint64_t c = 0;
    for (std::uint64_t i = 1; i <= horizon_; ++i)
      if (member(i, k)) ++c;
    WorstDev w;
    std::size_t ai = anchors.size();
    for (std::uint64_t b = horizon_; b >= 1; --b) {
      if (member(b, k)) --c;  // c is now the count over [1, b)
      const u128 kc = static_cast<u128>(k) * c;
      const u128 d = kc >= b ? kc - b : static_cast<u128>(b) - kc;
      if (!w.any || d * w.b > static_cast<u128>(w.diff) * b) {
        w.any = true;
        w.diff = static_cast<std::uint64_t>(d);
        w.b = b;
      }
      while (ai > 0 && boundaries_[anchors[ai - 1]] == b) {
        --ai;
        worst_[anchors[ai]][k - 1] = w;
      }
      if (ai == 0 || b == 1) break;
    }
  }

  std::uint64_t cap_;
  std::uint64_t horizon_ = 0;
  std::uint64_t bins_done_ = 0;
  std::vector<std::uint64_t> tau_;
  std::vector<std::uint64_t> lf_;
  std::vector<std::uint64_t> boundaries_;
  std::vector<std::vector<WorstDev>> worst_;
};

// --------------------------------------------------------------------------
// Profile builder: block counts.  Boundary b_j must open a gap larger than
// 2^j b_{j-1}, every good block of weight <= j must have accumulated
// expectation above 4^j b_{j-1} by b_j, and from b_j on every good block of
// weight <= j+1 must keep |N_m - Q_m| below Q_m/(j+1).
class NormalBuilder {
 public:
  NormalBuilder(const BasicSequence& seq, const DigitStream& z,
                std::uint64_t cap, const StatOptions& opt)
      : seq_(seq), z_(z), cap_(cap), opt_(opt), lf_(cap + 2, 0) {
    horizon_ = z.length();
  }

  std::uint64_t instance_cap() const { return cap_; }
  std::uint64_t horizon() const { return horizon_; }
  std::uint64_t overhang() const { return maxlen_ - 1; }

  void prepare(std::uint64_t j) { ensure_weight(std::min(j + 1, cap_ + 1)); }

  std::optional<std::uint64_t> candidate(std::uint64_t j,
                                         std::uint64_t b_prev) {
    const std::uint64_t inst = j + 1;
    if (uncertifiable_from_ <= inst) return std::nullopt;
    u128 cand = static_cast<u128>(b_prev) + 1;
    if (b_prev > 0) {
      if (j + bit_width_u64(b_prev) > 126) return std::nullopt;
      cand = std::max(cand, (static_cast<u128>(b_prev) << j) + b_prev + 1);
    }
    const auto thr = growth_threshold(b_prev, 2 * j);
    for (const Block& B : good_) {
      if (B.weight() > j) continue;
      if (!thr) return std::nullopt;
      const auto cross = first_crossing(seq_, B, 1, horizon_, *thr);
      if (!cross) return std::nullopt;
      cand = std::max(cand, static_cast<u128>(*cross));
    }
    cand = std::max(cand, static_cast<u128>(lf_[inst]) + 1);
    return sat_u64(cand);
  }

  void begin_certificates(const std::vector<std::uint64_t>&) {}

  BoundaryCertificate certify(std::size_t t, std::uint64_t b,
                              std::uint64_t b_prev) {
    BoundaryCertificate cert;
    cert.boundary = b;
    const std::uint64_t j = t;
    const std::uint64_t inst = std::min<std::uint64_t>(t + 1, cap_ + 1);
    bool empty_window = false;
    {
      CertRecord r;
      r.condition = "interval-gap";
      r.greater = true;
      r.windowed = false;
      const Rational lhs(BigInt(b - b_prev));
      const Rational rhs(BigInt(b_prev) << static_cast<unsigned>(j));
      r.satisfied = lhs > rhs;
      r.lhs = format_rational(lhs);
      r.rhs = format_rational(rhs);
      r.worst_index = b;
      r.margin = rel_margin(true, lhs, rhs);
      cert.records.push_back(std::move(r));
    }
    for (const Block& B : good_) {
      if (B.weight() > j) continue;
      const U256 e = expectation_units(seq_, B, 1, b);
      cert.records.push_back(
          growth_record("prefix-vs-expectation(" + B.literal() + ")", e,
                        BigInt(b_prev) << static_cast<unsigned>(2 * j), b));
    }
    const Rational bound(BigInt(1), BigInt(inst));
    for (const Block& B : good_) {
      if (B.weight() > inst) continue;
      const auto s = tube_scan(z_, B, b, window(B.length()),
                               [&](const U256& x, const U256& e) {
                                 return U256(inst) * x >= e;
                               });
      if (!s.any) empty_window = true;
      cert.records.push_back(
          deviation_record("count-deviation(" + B.literal() + ")", s, bound));
    }
    if (empty_window) cert.notes.push_back(kEmptyWindowNote);
    return cert;
  }

  BoundaryCertificate anchor_certificate() const {
    BoundaryCertificate cert;
    cert.boundary = 0;
    cert.notes.push_back("anchor boundary b_0 = 0; no conditions are evaluated here");
    cert.notes.push_back(
        "the instance-1 suffix condition anchored at b_0 is not certified: the "
        "count tube fails on the first indices while the expectation "
        "accumulator is still near zero; each instance is instead certified "
        "from its own boundary onward");
    return cert;
  }

 private:
  std::uint64_t window(std::uint64_t len) const {
    return z_.length() >= len ? z_.length() - len + 1 : 0;
  }

  void ensure_weight(std::uint64_t w) {
    while (weight_done_ < w) {
      ++weight_done_;
      for (Block& B : blocks_of_weight(weight_done_)) {
        const Goodness g =
            is_good(B, seq_, opt_.goodness_horizon, opt_.goodness_threshold);
        if (g == Goodness::unknown)
          throw ConfigError(
              "normal schedule: goodness of block " + B.literal() +
              " is unresolved at the configured horizon; declare divergence "
              "metadata on the sequence");
        if (g != Goodness::good) continue;
        run_tube_pass(B);
        good_.push_back(std::move(B));
      }
    }
  }

  // Failure pass for the suffix count tube of one good block: the deviation
  // X_m = |N_m 2^S - E_m| + m fails instance n iff n X_m >= E_m, i.e. from
  // n = ceil(E/X); the block participates from instance ||B|| on.
  void run_tube_pass(const Block& B) {
    const std::uint64_t M = window(B.length());
    maxlen_ = std::max(maxlen_, B.length());
    horizon_ = std::min(horizon_, M);
    if (M == 0) {
      uncertifiable_from_ =
          std::min(uncertifiable_from_, std::max<std::uint64_t>(B.weight(), 1));
      return;
    }
    FailureTable t(cap_);
    const std::uint64_t w = B.weight();
    scan_block_profile(z_, B, M,
                       [&](std::uint64_t m, std::uint64_t cnt, const U256& e) {
                         U256 n2s = cnt;
                         n2s <<= kExpScaleBits;
                         const U256 diff =
                             n2s >= e ? U256(n2s - e) : U256(e - n2s);
                         const U256 x = diff + m;
                         const U256 q = (e + x - 1) / x;
                         std::uint64_t nm =
                             q > U256(cap_ + 1)
                                 ? cap_ + 2
                                 : q.convert_to<std::uint64_t>();
                         nm = std::max<std::uint64_t>(std::max(nm, w), 1);
                         t.record(nm, m);
                       });
    merge_failures(lf_, t);
  }

  const BasicSequence& seq_;
  const DigitStream& z_;
  std::uint64_t cap_;
  StatOptions opt_;
  std::uint64_t horizon_;
  std::uint64_t maxlen_ = 1;
  std::uint64_t weight_done_ = 0;
  std::uint64_t uncertifiable_from_ = std::numeric_limits<std::uint64_t>::max();
  std::vector<Block> good_;
  std::vector<std::uint64_t> lf_;
};

// --------------------------------------------------------------------------
// Profile builder: two-track thinning.  At boundary b_j, for every divergent
// zero-run length k <= 2j, the accumulated expectation of the k-zero block
// must exceed 2^j b_{j-1}, and from b_j on its count deviation must stay
// below 2^-j relative.
class TwoTrackBuilder {
 public:
  TwoTrackBuilder(const BasicSequence& seq, const DigitStream& z,
                  std::uint64_t cap)
      : seq_(seq), z_(z), cap_(cap), lf_(cap + 2, 0) {
    const SeqTraits& t = seq.traits();
    if (!t.div_all && t.div_k == 0)
      throw ConfigError(
          "two_track schedule: the sequence is declared 1-convergent; no "
          "divergent zero-block length exists to certify");
    horizon_ = z.length();
  }

  std::uint64_t instance_cap() const { return cap_; }
  std::uint64_t horizon() const { return horizon_; }
  std::uint64_t overhang() const { return maxlen_ - 1; }

  void prepare(std::uint64_t j) {
    const std::uint64_t kmax = 2 * std::min(j, cap_ + 1);
    while (k_done_ < kmax) {
      ++k_done_;
      if (!seq_.traits().divergent_at(k_done_)) continue;
      run_tube_pass(k_done_);
      ks_.push_back(k_done_);
    }
  }

  std::optional<std::uint64_t> candidate(std::uint64_t j,
                                         std::uint64_t b_prev) {
    if (uncertifiable_from_ <= j) return std::nullopt;
    u128 cand = static_cast<u128>(b_prev) + 1;
    const auto thr = growth_threshold(b_prev, j);
    for (std::uint64_t k : ks_) {
      if (k > 2 * j) break;
      if (!thr) return std::nullopt;
      const auto cross =
          first_crossing(seq_, Block::zeros(k), 1, horizon_, *thr);
      if (!cross) return std::nullopt;
      cand = std::max(cand, static_cast<u128>(*cross));
    }
    cand = std::max(cand, static_cast<u128>(lf_[std::min(j, cap_ + 1)]) + 1);
    return sat_u64(cand);
  }

  void begin_certificates(const std::vector<std::uint64_t>&) {}

  BoundaryCertificate certify(std::size_t t, std::uint64_t b,
                              std::uint64_t b_prev) {
    BoundaryCertificate cert;
    cert.boundary = b;
    const std::uint64_t j = std::min<std::uint64_t>(t, cap_ + 1);
    bool empty_window = false;
    const Rational bound(BigInt(1), BigInt(1) << static_cast<unsigned>(j));
    for (std::uint64_t k : ks_) {
      if (k > 2 * j) break;
      const Block B = Block::zeros(k);
      const U256 e = expectation_units(seq_, B, 1, b);
      cert.records.push_back(
          growth_record("growth(k=" + std::to_string(k) + ")", e,
                        BigInt(b_prev) << static_cast<unsigned>(j), b));
      const auto s = tube_scan(z_, B, b, window(k),
                               [&](const U256& x, const U256& e2) {
                                 return x >= ceil_div_pow2(e2, j);
                               });
      if (!s.any) empty_window = true;
      cert.records.push_back(
          deviation_record("count-deviation(" + B.literal() + ")", s, bound));
    }
    if (empty_window) cert.notes.push_back(kEmptyWindowNote);
    return cert;
  }

  BoundaryCertificate anchor_certificate() const {
    BoundaryCertificate cert;
    cert.boundary = 0;
    cert.notes.push_back("anchor boundary b_0 = 0; no conditions are evaluated here");
    cert.notes.push_back(
        "instance 0 carries no conditions (its zero-run lengths range over "
        "the empty set)");
    return cert;
  }

 private:
  std::uint64_t window(std::uint64_t len) const {
    return z_.length() >= len ? z_.length() - len + 1 : 0;
  }

  // Failure pass for the zero-block count tube: X_m fails instance n iff
  // 2^n X_m >= E_m, i.e. from n = ceil(log2(ceil(E/X))); the length-k block
  // participates from instance ceil(k/2) on.
  void run_tube_pass(std::uint64_t k) {
    const Block B = Block::zeros(k);
    const std::uint64_t M = window(k);
    maxlen_ = std::max(maxlen_, k);
    horizon_ = std::min(horizon_, M);
    const std::uint64_t applicable = std::max<std::uint64_t>((k + 1) / 2, 1);
    if (M == 0) {
      uncertifiable_from_ = std::min(uncertifiable_from_, applicable);
      return;
    }
    FailureTable t(cap_);
    scan_block_profile(z_, B, M,
                       [&](std::uint64_t m, std::uint64_t cnt, const U256& e) {
                         U256 n2s = cnt;
                         n2s <<= kExpScaleBits;
                         const U256 diff =
                             n2s >= e ? U256(n2s - e) : U256(e - n2s);
                         const U256 x = diff + m;
                         const U256 q = (e + x - 1) / x;
                         std::uint64_t nmin = 0;
                         if (q > 1)
                           nmin = boost::multiprecision::msb(U256(q - 1)) + 1;
                         t.record(std::max(nmin, applicable), m);
                       });
    merge_failures(lf_, t);
  }

  const BasicSequence& seq_;
  const DigitStream& z_;
  std::uint64_t cap_;
  std::uint64_t horizon_;
  std::uint64_t maxlen_ = 1;
  std::uint64_t k_done_ = 0;
  std::uint64_t uncertifiable_from_ = std::numeric_limits<std::uint64_t>::max();
  std::vector<std::uint64_t> ks_;
  std::vector<std::uint64_t> lf_;
};

// --------------------------------------------------------------------------
// Profile builder: glued squeezed streams.  Boundary b_j needs the interval
// expectation of the 2j-zero block under each squeezed base family P_m
// (m <= j) to exceed 2^j b_{j-1}; from b_j on, every stream w_m (m <= j+2)
// must hold each good block's count deviation below 2^-(j+1)/(3 + 2^(|B|+2)),
// and the running expectations across the streams must stay within a
// 2^(|B|+1) factor of each other.  Goodness is classified under the base
// sequence; the squeezed families inherit its divergence traits, so the
// classification transfers.
class GlueBuilder {
 public:
  GlueBuilder(const BasicSequence& seq, std::uint64_t data_length,
              std::uint64_t cap, const ScheduleParams& params)
      : seq_(seq), len_(data_length), cap_(cap), params_(params) {
    lf_tube_.assign(cap + 2, 0);
    horizon_ = data_length;
  }

  std::uint64_t instance_cap() const { return cap_; }
  std::uint64_t horizon() const { return horizon_; }
  std::uint64_t overhang() const { return maxlen_ - 1; }

  void prepare(std::uint64_t j) {
    const std::uint64_t inst = std::min(j + 1, cap_ + 1);
    ensure_streams(inst + 1);
    ensure_weight(inst + 1);
    ensure_tubes();
    ensure_cross(inst);
  }

  std::optional<std::uint64_t> candidate(std::uint64_t j,
                                         std::uint64_t b_prev) {
    const std::uint64_t inst = j + 1;
    if (uncertifiable_from_ <= inst) return std::nullopt;
    u128 cand = static_cast<u128>(b_prev) + 1;
    const Block zero_block = Block::zeros(2 * j);
    const auto thr = growth_threshold(b_prev, j);
    for (std::uint64_t m = 0; m <= j; ++m) {
      if (!thr) return std::nullopt;
      const auto cross =
          first_crossing(pm_[m], zero_block, b_prev + 1, horizon_, *thr);
      if (!cross) return std::nullopt;
      cand = std::max(cand, static_cast<u128>(*cross));
    }
    cand = std::max(cand, static_cast<u128>(lf_tube_[inst]) + 1);
    cand = std::max(cand, static_cast<u128>(lf_cross_.at(inst)) + 1);
    return sat_u64(cand);
  }

  void begin_certificates(const std::vector<std::uint64_t>&) {}

  BoundaryCertificate certify(std::size_t t, std::uint64_t b,
                              std::uint64_t b_prev) {
    BoundaryCertificate cert;
    cert.boundary = b;
    const std::uint64_t j = t;
    const std::uint64_t inst = std::min<std::uint64_t>(t + 1, cap_ + 1);
    bool empty_window = false;
    if (j >= 1) {
      const Block zero_block = Block::zeros(2 * j);
      for (std::uint64_t m = 0; m <= j && m < pm_.size(); ++m) {
        const U256 e = expectation_units(pm_[m], zero_block, b_prev + 1, b);
        cert.records.push_back(growth_record(
            "interval-expectation(m=" + std::to_string(m) +
                ",len=" + std::to_string(2 * j) + ")",
            e, BigInt(b_prev) << static_cast<unsigned>(j), b));
      }
    }
    for (std::uint64_t m = 0; m <= inst + 1 && m < wm_.size(); ++m) {
      for (const Block& B : good_) {
        if (B.weight() > inst + 1) continue;
        const std::uint64_t L = B.length();
        const Rational bound(
            BigInt(1), (BigInt(1) << static_cast<unsigned>(inst)) *
                           (BigInt(3) + (BigInt(1) << static_cast<unsigned>(L + 2))));
        const auto s =
            tube_scan(wm_[m], B, b, window(L),
                      [&](const U256& x, const U256& e) {
                        return tube_fails(x, e, L, inst);
                      });
        if (!s.any) empty_window = true;
        cert.records.push_back(deviation_record(
            "glue-deviation(m=" + std::to_string(m) + "," + B.literal() + ")",
            s, bound));
      }
    }
    std::vector<const BasicSequence*> seqs;
    for (std::uint64_t m = 0; m <= inst + 1 && m < pm_.size(); ++m)
      seqs.push_back(&pm_[m]);
    for (const Block& B : good_) {
      if (B.weight() > inst + 1) continue;
      const unsigned lshift = static_cast<unsigned>(B.length() + 1);
      const auto s = cross_scan(seqs, B, b, window(B.length()), lshift);
      CertRecord r;
      r.condition = "cross-expectation(" + B.literal() + ")";
      r.greater = false;
      r.windowed = true;
      const Rational rhs(BigInt(1) << lshift);
      r.rhs = format_rational(rhs);
      if (!s.any) {
        r.satisfied = true;
        r.lhs = "0";
        empty_window = true;
      } else if (s.worst_emin == 0) {
        r.satisfied = false;
        r.lhs = "inf";
        r.worst_index = s.worst_i;
        r.margin = -1.0;
      } else {
        const Rational lhs(s.worst_lhs, to_bigint(s.worst_emin));
        r.satisfied = s.ok;
        r.lhs = format_rational(lhs);
        r.worst_index = s.worst_i;
        r.margin = rel_margin(false, lhs, rhs);
      }
      cert.records.push_back(std::move(r));
    }
    if (empty_window) cert.notes.push_back(kEmptyWindowNote);
    return cert;
  }

  BoundaryCertificate anchor_certificate() const {
    BoundaryCertificate cert;
    cert.boundary = 0;
    cert.notes.push_back("anchor boundary b_0 = 0; no conditions are evaluated here");
    cert.notes.push_back(
        "the instance-1 suffix conditions anchored at b_0 are not certified: "
        "the per-stream deviation tubes fail on the first indices while the "
        "expectation accumulators are still near zero; each instance is "
        "instead certified from its own boundary onward");
    return cert;
  }

  const BasicSequence& family(std::uint64_t m) const { return pm_.at(m); }

 private:
  std::uint64_t window(std::uint64_t len) const {
    return len_ >= len ? len_ - len + 1 : 0;
  }

  // Exact failure check for one stream's deviation tube at instance n:
  // (3 + 2^(L+2)) X 2^n >= E, with a wide-integer fallback for long blocks.
  static bool tube_fails(const U256& x, const U256& e, std::uint64_t L,
                         std::uint64_t inst) {
    const U256 ceil_e = ceil_div_pow2(e, inst);
    if (L <= 24) {
      const U256 ck = U256(3) + (U256(1) << static_cast<unsigned>(L + 2));
      return ck * x >= ceil_e;
    }
    const BigInt ck = BigInt(3) + (BigInt(1) << static_cast<unsigned>(L + 2));
    return ck * to_bigint(x) >= to_bigint(ceil_e);
  }

  std::uint64_t seed_for(std::uint64_t m) const {
    if (params_.seeds) {
      const auto it = params_.seeds->find(m);
      if (it == params_.seeds->end())
        throw ConfigError(
            "glue schedule: no seed for squeezed reference stream m=" +
            std::to_string(m));
      return it->second;
    }
    return derived_seed(params_.master_seed, m);
  }

  void ensure_streams(std::uint64_t max_m) {
    while (streams_done_ <= max_m) {
      const std::uint64_t m = streams_done_;
      pm_.push_back(derive_Pm(seq_, m));
      wm_.push_back(make_reference(pm_.back(), seed_for(m), len_));
      tube_done_.push_back(0);
      ++streams_done_;
    }
  }

  void ensure_weight(std::uint64_t w) {
    while (weight_done_ < w) {
      ++weight_done_;
      for (Block& B : blocks_of_weight(weight_done_)) {
        const Goodness g = is_good(B, seq_, params_.stats.goodness_horizon,
                                   params_.stats.goodness_threshold);
        if (g == Goodness::unknown)
          throw ConfigError(
              "glue schedule: goodness of block " + B.literal() +
              " is unresolved at the configured horizon; declare divergence "
              "metadata on the sequence");
        if (g != Goodness::good) continue;
        good_.push_back(std::move(B));
      }
    }
  }

  void ensure_tubes() {
    for (std::size_t m = 0; m < wm_.size(); ++m) {
      for (std::size_t idx = tube_done_[m]; idx < good_.size(); ++idx)
        run_tube_pass(static_cast<std::uint64_t>(m), good_[idx]);
      tube_done_[m] = good_.size();
    }
  }

  // Failure pass for stream w_m and block B; the pair participates in
  // instance n iff m <= n+1 and ||B|| <= n+1.
  void run_tube_pass(std::uint64_t m, const Block& B) {
    const std::uint64_t L = B.length();
    const std::uint64_t M = window(L);
    maxlen_ = std::max(maxlen_, L);
    horizon_ = std::min(horizon_, M);
    const std::uint64_t applicable = std::max<std::uint64_t>(
        {B.weight() > 0 ? B.weight() - 1 : 1, m > 0 ? m - 1 : 1, 1});
    if (M == 0) {
      uncertifiable_from_ = std::min(uncertifiable_from_, applicable);
      return;
    }
    FailureTable t(cap_);
    scan_block_profile(
        wm_[m], B, M, [&](std::uint64_t i, std::uint64_t cnt, const U256& e) {
          U256 n2s = cnt;
          n2s <<= kExpScaleBits;
          const U256 diff = n2s >= e ? U256(n2s - e) : U256(e - n2s);
          const U256 x = diff + i;
          std::uint64_t nmin = 0;
          bool fits = true;
          if (L <= 24) {
            const U256 denom = (U256(3) + (U256(1) << static_cast<unsigned>(L + 2))) * x;
            if (denom >= e) {
              nmin = 0;
            } else {
              const U256 q = (e + denom - 1) / denom;
              nmin = q > 1 ? boost::multiprecision::msb(U256(q - 1)) + 1 : 0;
            }
            (void)fits;
          } else {
            const BigInt denom =
                (BigInt(3) + (BigInt(1) << static_cast<unsigned>(L + 2))) * to_bigint(x);
            const BigInt eb = to_bigint(e);
            if (denom >= eb) {
              nmin = 0;
            } else {
              const BigInt q = (eb + denom - 1) / denom;
              nmin = q > 1
                         ? static_cast<std::uint64_t>(
                               boost::multiprecision::msb(BigInt(q - 1)) + 1)
                         : 0;
            }
          }
          t.record(std::max(nmin, applicable), i);
        });
    merge_failures(lf_tube_, t);
  }

  void ensure_cross(std::uint64_t inst) {
    if (lf_cross_.count(inst)) return;
    std::uint64_t last_fail = 0;
    std::vector<const BasicSequence*> seqs;
    for (std::uint64_t m = 0; m <= inst + 1 && m < pm_.size(); ++m)
      seqs.push_back(&pm_[m]);
    for (const Block& B : good_) {
      if (B.weight() > inst + 1) continue;
      const std::uint64_t M = window(B.length());
      if (M == 0) {
        uncertifiable_from_ = std::min(
            uncertifiable_from_,
            std::max<std::uint64_t>(B.weight() > 0 ? B.weight() - 1 : 1, 1));
        continue;
      }
      const auto s = cross_scan(seqs, B, 1, M,
                                static_cast<unsigned>(B.length() + 1));
      last_fail = std::max(last_fail, s.last_fail);
    }
    lf_cross_[inst] = last_fail;
  }

  const BasicSequence& seq_;
  std::uint64_t len_;
  std::uint64_t cap_;
  const ScheduleParams& params_;
  std::uint64_t horizon_;
  std::uint64_t maxlen_ = 1;
  std::uint64_t weight_done_ = 0;
  std::uint64_t streams_done_ = 0;
  std::uint64_t uncertifiable_from_ = std::numeric_limits<std::uint64_t>::max();
  std::vector<Block> good_;
  std::vector<BasicSequence> pm_;
  std::vector<DigitStream> wm_;
  std::vector<std::size_t> tube_done_;
  std::vector<std::uint64_t> lf_tube_;
  std::map<std::uint64_t, std::uint64_t> lf_cross_;
};

// --------------------------------------------------------------------------
// Greedy driver shared by the exact-count and clamped modes.
template <class Builder>
Schedule run_greedy(Builder& prof, ScheduleProfile tag,
                    std::optional<std::uint64_t> count, std::uint64_t target) {
  Schedule sched;
  sched.profile = tag;
  sched.boundaries = {0};
  const std::string label = profile_name(tag);
  const bool clamp = !count.has_value();
  std::uint64_t j = 0;
  while (clamp || j < *count) {
    const std::uint64_t next = j + 1;
    if (next > prof.instance_cap()) {
      if (clamp) break;
      throw ConfigError(label +
                        " schedule: requested interval count exceeds the "
                        "supported instance table (" +
                        std::to_string(prof.instance_cap()) + ")");
    }
    prof.prepare(next);
    const std::uint64_t b_prev = sched.boundaries.back();
    const auto cand = prof.candidate(next, b_prev);
    if (!cand || *cand > prof.horizon()) {
      if (clamp) break;
      const std::uint64_t base =
          std::max(cand.value_or(prof.horizon() + 1), prof.horizon() + 1);
      const std::uint64_t need = sat_add(base, prof.overhang());
      throw PrecisionError(
          label + " schedule: boundary " + std::to_string(next) + " of " +
              std::to_string(*count) +
              " cannot be certified within the stream; need at least " +
              std::to_string(need) + " digits",
          need);
    }
    if (clamp && *cand >= target) break;
    sched.boundaries.push_back(*cand);
    j = next;
  }
  if (clamp) sched.boundaries.push_back(target);
  prof.begin_certificates(sched.boundaries);
  sched.certificates.push_back(prof.anchor_certificate());
  for (std::size_t t = 1; t < sched.boundaries.size(); ++t) {
    prof.prepare(t);
    BoundaryCertificate cert =
        prof.certify(t, sched.boundaries[t], sched.boundaries[t - 1]);
    if (clamp && t + 1 == sched.boundaries.size()) {
      cert.clamped = true;
      cert.notes.push_back(
          "boundary clamped to the requested target; records are "
          "measurements, not certifications");
    }
    sched.certificates.push_back(std::move(cert));
  }
  sched.horizon = prof.horizon();
  return sched;
}

void check_stream_matches(const BasicSequence& seq, const DigitStream& z,
                          const char* label) {
  if (z.seq().canonical() != seq.canonical())
    throw ConfigError(std::string(label) +
                      " schedule: the reference stream's sequence (" +
                      z.seq().canonical() +
                      ") does not match the schedule sequence (" +
                      seq.canonical() + ")");
}

Schedule build_any(const BasicSequence& seq, const DigitStream& z,
                   ScheduleProfile profile, std::optional<std::uint64_t> count,
                   std::uint64_t target, const ScheduleParams& params) {
  switch (profile) {
    case ScheduleProfile::dn: {
      check_stream_matches(seq, z, "dn");
      DnBuilder b(z, count ? std::max<std::uint64_t>(*count + 1, 2)
                           : kDnInstanceCap);
      return run_greedy(b, profile, count, target);
    }
    case ScheduleProfile::normal: {
      check_stream_matches(seq, z, "normal");
      NormalBuilder b(seq, z,
                      count ? std::max<std::uint64_t>(*count + 1, 2)
                            : kBlockInstanceCap,
                      params.stats);
      return run_greedy(b, profile, count, target);
    }
    case ScheduleProfile::two_track: {
      check_stream_matches(seq, z, "two_track");
      TwoTrackBuilder b(seq, z,
                        count ? std::max<std::uint64_t>(*count + 1, 2)
                              : kBlockInstanceCap);
      return run_greedy(b, profile, count, target);
    }
    case ScheduleProfile::glue: {
      GlueBuilder b(seq, z.length(),
                    count ? std::max<std::uint64_t>(*count + 1, 2)
                          : kBlockInstanceCap,
                    params);
      return run_greedy(b, profile, count, target);
    }
  }
  throw ConfigError("unknown schedule profile");
}

}  // namespace

Schedule build_schedule(const BasicSequence& seq, const DigitStream& z,
                        ScheduleProfile profile, std::uint64_t count,
                        const ScheduleParams& params) {
  return build_any(seq, z, profile, count, 0, params);
}

Schedule build_schedule_clamped(const BasicSequence& seq, const DigitStream& z,
                                ScheduleProfile profile, std::uint64_t target_n,
                                const ScheduleParams& params) {
  if (target_n == 0)
    throw ConfigError("clamped schedule: the target boundary must be at least 1");
  return build_any(seq, z, profile, std::nullopt, target_n, params);
}

std::string schedule_to_json(const Schedule& sched) {
  nlohmann::ordered_json doc;
  doc["profile"] = profile_name(sched.profile);
  doc["horizon"] = sched.horizon;
  doc["scale_bits"] = kExpScaleBits;
  doc["boundaries"] = sched.boundaries;
  nlohmann::ordered_json certs = nlohmann::ordered_json::array();
  for (const BoundaryCertificate& c : sched.certificates) {
    nlohmann::ordered_json jc;
    jc["boundary"] = c.boundary;
    jc["clamped"] = c.clamped;
    jc["notes"] = c.notes;
    nlohmann::ordered_json recs = nlohmann::ordered_json::array();
    for (const CertRecord& r : c.records) {
      nlohmann::ordered_json jr;
      jr["condition"] = r.condition;
      jr["relation"] = r.greater ? ">" : "<";
      jr["windowed"] = r.windowed;
      jr["satisfied"] = r.satisfied;
      jr["lhs"] = r.lhs;
      jr["rhs"] = r.rhs;
      jr["worst_index"] = r.worst_index;
      jr["margin"] = r.margin;
      recs.push_back(std::move(jr));
    }
    jc["records"] = std::move(recs);
    certs.push_back(std::move(jc));
  }
  doc["certificates"] = std::move(certs);
  return doc.dump(2) + "\n";
}

}  // namespace cantor
