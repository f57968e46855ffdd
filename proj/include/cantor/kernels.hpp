#pragma once

// Streaming kernels shared by the estimators, schedules, and constructions:
// block match masks, prefix occurrence counts, round-down fixed-point
// expectation terms, and windowed digit-tail values.  Every kernel has an
// OpenMP-parallel entry point and a serial reference implementation with
// bit-identical output; the benchmark target compares the two.

#include <cstdint>
#include <span>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "cantor/blocks.hpp"
#include "cantor/digits.hpp"
#include "cantor/numeric.hpp"
#include "cantor/sequences.hpp"

namespace cantor {

// Unsigned 256-bit accumulator for expectation units (scale 2^-kExpScaleBits).
// Fixed width: no allocation on the hot path.  Largest value handled is
// n * 2^191 < 2^224 for n up to 2^33, far below the 2^256 ceiling.
using U256 = boost::multiprecision::number<boost::multiprecision::cpp_int_backend<
    256, 256, boost::multiprecision::unsigned_magnitude,
    boost::multiprecision::unchecked, void>>;

BigInt to_bigint(const U256& v);

// ---------------------------------------------------------------------------
// Match masks: mask[i-1] = 1 iff B starts at digit index i, for i in [1, n].
// Requires d.length() >= n + |B| - 1.
std::vector<std::uint8_t> match_mask_serial(const DigitStream& d, const Block& B,
                                            std::uint64_t n);
std::vector<std::uint8_t> match_mask(const DigitStream& d, const Block& B,
                                     std::uint64_t n);

// Prefix occurrence counts from a mask: out[m-1] = sum of mask[0..m-1].
// The parallel variant merges per-chunk integer sums, which is deterministic.
std::vector<std::uint64_t> prefix_counts_serial(std::span<const std::uint8_t> mask);
std::vector<std::uint64_t> prefix_counts(std::span<const std::uint8_t> mask);

// ---------------------------------------------------------------------------
// Fixed-point expectation terms.  For m in [first, first + out.size()):
//   term_m = floor(2^kExpScaleBits / (q_m ... q_{m+k-1}))  if I_{B,m} = 1,
//            0                                             otherwise.
// Since every window product is >= 2, each term fits in three 64-bit limbs.
// Summing terms round-down gives E_m with  E_m <= 2^S Q_m(B) < E_m + m.
struct TermUnits {
  std::uint64_t limb[3];  // little-endian
};

void expectation_terms_serial(const BasicSequence& seq, const Block& B,
                              std::uint64_t first, std::span<TermUnits> out);
void expectation_terms(const BasicSequence& seq, const Block& B, std::uint64_t first,
                       std::span<TermUnits> out);

inline U256 to_u256(const TermUnits& t) {
  U256 v = t.limb[2];
  v <<= 64;
  v |= t.limb[1];
  v <<= 64;
  v |= t.limb[0];
  return v;
}

// ---------------------------------------------------------------------------
// Windowed digit-tail values.  For i in [1, n]:
//   tau_units[i-1] = round-down fixed-point value (scale 2^-64) of the digit
//   tail a_i, a_{i+1}, ... computed over exactly the 64-digit window
//   [i, i+63] by the backward recurrence t = floor((a_j * 2^64 + t) / q_j).
// The windowed definition makes the result independent of chunking, so the
// serial and parallel kernels agree bit-for-bit.  With true tail value tau_i:
//   tau_units[i-1] <= 2^64 tau_i < tau_units[i-1] + kTailSlackUnits.
// Requires d.length() >= n + 63.
std::vector<std::uint64_t> tail_units_serial(const DigitStream& d, std::uint64_t n);
std::vector<std::uint64_t> tail_units(const DigitStream& d, std::uint64_t n);

// Number of digits the windowed tail reads past position n.
inline constexpr std::uint64_t kTailWindow = 64;

// ---------------------------------------------------------------------------
// Streaming profile scan: walks m = 1..n once in order, maintaining the
// occurrence count N_m (starts <= m) and the round-down expectation
// accumulator E_m in units of 2^-kExpScaleBits, and calls
//   visit(m, N_m, E_m)
// for every m.  Deterministic regardless of the `parallel` flag: parallelism
// only accelerates the per-index term and mask computations.
template <class Visitor>
void scan_block_profile(const DigitStream& d, const Block& B, std::uint64_t n,
                        Visitor&& visit, bool parallel = true) {
  if (n == 0) return;
  const auto mask = parallel ? match_mask(d, B, n) : match_mask_serial(d, B, n);
  constexpr std::uint64_t kChunk = std::uint64_t(1) << 16;
  std::vector<TermUnits> terms(std::min(kChunk, n));
  U256 e = 0;
  std::uint64_t count = 0;
  for (std::uint64_t lo = 1; lo <= n; lo += kChunk) {
    const std::uint64_t hi = std::min(n, lo + kChunk - 1);
    const std::span<TermUnits> chunk(terms.data(), hi - lo + 1);
    if (parallel)
      expectation_terms(d.seq(), B, lo, chunk);
    else
      expectation_terms_serial(d.seq(), B, lo, chunk);
    for (std::uint64_t m = lo; m <= hi; ++m) {
      count += mask[m - 1];
      e += to_u256(chunk[m - lo]);
      visit(m, count, e);
    }
  }
}

}  // namespace cantor
