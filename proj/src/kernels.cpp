#include "cantor/kernels.hpp"

#include <algorithm>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cantor {

namespace {

// floor(2^192 / q) for a single-word q >= 2, by schoolbook long division of
// the limbs (1,0,0,0) high-to-low.  Quotient always fits three limbs.
TermUnits div_pow192_by_u64(std::uint64_t q) {
  TermUnits out{};
  unsigned __int128 cur = 1;  // the 2^192 leading limb
  for (int limb = 2; limb >= 0; --limb) {
    cur <<= 64;
    out.limb[limb] = static_cast<std::uint64_t>(cur / q);
    cur = cur % q;
  }
  return out;
}

TermUnits term_from_bigint(const BigInt& prod) {
  static const BigInt kScale = BigInt(1) << kExpScaleBits;
  TermUnits out{};
  if (prod > kScale) return out;  // floor is zero
  BigInt t = kScale / prod;
  for (int limb = 0; limb < 3; ++limb) {
    out.limb[limb] = static_cast<std::uint64_t>(t & 0xffffffffffffffffull);
    t >>= 64;
  }
  return out;
}

void expectation_terms_range(const BasicSequence& seq, const Block& B,
                             std::uint64_t first, std::span<TermUnits> out) {
  if (out.empty()) return;
  const std::uint64_t k = B.length();
  const std::uint64_t n = out.size();
  // Bases q_first .. q_{first+n-1+k-1} once, shared by indicators and products.
  std::vector<std::uint64_t> bases(n + k - 1);
  seq.fill_bases(first, bases);
  auto base = [&](std::uint64_t m) { return bases[m - first]; };

  BigInt prod = 1;
  bool fits_u64 = true;
  std::uint64_t prod64 = 1;
  for (std::uint64_t j = first; j < first + k; ++j) {
    prod *= base(j);
    if (fits_u64) {
      unsigned __int128 wide = static_cast<unsigned __int128>(prod64) * base(j);
      if (wide >> 64) {
        fits_u64 = false;
      } else {
        prod64 = static_cast<std::uint64_t>(wide);
      }
    }
  }

  for (std::uint64_t m = first;; ++m) {
    bool ind = true;
    for (std::uint64_t t = 1; t <= k; ++t)
      if (B.at(t) >= base(m + t - 1)) {
        ind = false;
        break;
      }
    if (ind) {
      out[m - first] =
          fits_u64 ? div_pow192_by_u64(prod64) : term_from_bigint(prod);
    } else {
      out[m - first] = TermUnits{};
    }
    if (m - first + 1 == n) break;
    // Slide the window product.
    prod /= base(m);
    prod *= base(m + k);
    if (fits_u64) {
      prod64 /= base(m);
      unsigned __int128 wide = static_cast<unsigned __int128>(prod64) * base(m + k);
      fits_u64 = !(wide >> 64);
      prod64 = fits_u64 ? static_cast<std::uint64_t>(wide) : 0;
    } else if (prod <= (std::numeric_limits<std::uint64_t>::max)()) {
      prod64 = prod.convert_to<std::uint64_t>();
      fits_u64 = true;
    }
  }
}

}  // namespace

BigInt to_bigint(const U256& v) {
  BigInt out = 0;
  for (int limb = 3; limb >= 0; --limb) {
    out <<= 64;
    out |= static_cast<std::uint64_t>((v >> (64 * limb)) & 0xffffffffffffffffull);
  }
  return out;
}

std::vector<std::uint8_t> match_mask_serial(const DigitStream& d, const Block& B,
                                            std::uint64_t n) {
  const std::uint64_t k = B.length();
  if (n + k - 1 > d.length())
    throw std::out_of_range("match_mask: needs digits up to " + std::to_string(n + k - 1) +
                            " but only " + std::to_string(d.length()) + " are stored");
  const auto digits = d.raw();
  const auto& word = B.word();
  std::vector<std::uint8_t> mask(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    bool match = true;
    for (std::uint64_t t = 0; t < k; ++t)
      if (digits[i + t] != word[t]) {
        match = false;
        break;
      }
    mask[i] = match;
  }
  return mask;
}

std::vector<std::uint8_t> match_mask(const DigitStream& d, const Block& B,
                                     std::uint64_t n) {
  const std::uint64_t k = B.length();
  if (n + k - 1 > d.length())
    throw std::out_of_range("match_mask: needs digits up to " + std::to_string(n + k - 1) +
                            " but only " + std::to_string(d.length()) + " are stored");
  const auto digits = d.raw();
  const auto& word = B.word();
  std::vector<std::uint8_t> mask(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
    bool match = true;
    for (std::uint64_t t = 0; t < k; ++t)
      if (digits[i + t] != word[t]) {
        match = false;
        break;
      }
    mask[i] = match;
  }
  return mask;
}

std::vector<std::uint64_t> prefix_counts_serial(std::span<const std::uint8_t> mask) {
  std::vector<std::uint64_t> out(mask.size());
  std::uint64_t running = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    running += mask[i];
    out[i] = running;
  }
  return out;
}

std::vector<std::uint64_t> prefix_counts(std::span<const std::uint8_t> mask) {
  const std::size_t n = mask.size();
  std::vector<std::uint64_t> out(n);
  if (n == 0) return out;
#ifdef _OPENMP
  const int threads = omp_get_max_threads();
#else
  const int threads = 1;
#endif
  const std::size_t chunk = (n + threads - 1) / threads;
  std::vector<std::uint64_t> sums(threads, 0);
  // Pass 1: per-chunk totals.
#pragma omp parallel for schedule(static, 1)
  for (int c = 0; c < threads; ++c) {
    const std::size_t lo = c * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    std::uint64_t s = 0;
    for (std::size_t i = lo; i < hi; ++i) s += mask[i];
    sums[c] = s;
  }
  // Pass 2: exclusive offsets (integer addition: order-independent result).
  std::vector<std::uint64_t> offset(threads, 0);
  for (int c = 1; c < threads; ++c) offset[c] = offset[c - 1] + sums[c - 1];
  // Pass 3: per-chunk prefix fill.
#pragma omp parallel for schedule(static, 1)
  for (int c = 0; c < threads; ++c) {
    const std::size_t lo = c * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    std::uint64_t running = offset[c];
    for (std::size_t i = lo; i < hi; ++i) {
      running += mask[i];
      out[i] = running;
    }
  }
  return out;
}

void expectation_terms_serial(const BasicSequence& seq, const Block& B,
                              std::uint64_t first, std::span<TermUnits> out) {
  expectation_terms_range(seq, B, first, out);
}

void expectation_terms(const BasicSequence& seq, const Block& B, std::uint64_t first,
                       std::span<TermUnits> out) {
  const std::uint64_t n = out.size();
  constexpr std::uint64_t kChunk = 8192;
  const std::uint64_t chunks = (n + kChunk - 1) / kChunk;
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t c = 0; c < static_cast<std::int64_t>(chunks); ++c) {
    const std::uint64_t lo = c * kChunk;
    const std::uint64_t hi = std::min<std::uint64_t>(n, lo + kChunk);
    expectation_terms_range(seq, B, first + lo, out.subspan(lo, hi - lo));
  }
}

namespace {

inline std::uint64_t windowed_tail(std::span<const std::uint64_t> digits,
                                   std::span<const std::uint64_t> bases,
                                   std::uint64_t i0) {
  // Backward over the 64-digit window starting at 0-based index i0.
  std::uint64_t t = 0;
  for (std::uint64_t off = kTailWindow; off-- > 0;) {
    const unsigned __int128 num =
        (static_cast<unsigned __int128>(digits[i0 + off]) << 64) | t;
    t = static_cast<std::uint64_t>(num / bases[i0 + off]);
  }
  return t;
}

}  // namespace

std::vector<std::uint64_t> tail_units_serial(const DigitStream& d, std::uint64_t n) {
  if (n + kTailWindow - 1 > d.length())
    throw std::out_of_range("tail_units: needs digits up to " +
                            std::to_string(n + kTailWindow - 1) + " but only " +
                            std::to_string(d.length()) + " are stored");
  std::vector<std::uint64_t> bases(n + kTailWindow - 1);
  d.seq().fill_bases(1, bases);
  std::vector<std::uint64_t> out(n);
  for (std::uint64_t i = 0; i < n; ++i) out[i] = windowed_tail(d.raw(), bases, i);
  return out;
}

std::vector<std::uint64_t> tail_units(const DigitStream& d, std::uint64_t n) {
  if (n + kTailWindow - 1 > d.length())
    throw std::out_of_range("tail_units: needs digits up to " +
                            std::to_string(n + kTailWindow - 1) + " but only " +
                            std::to_string(d.length()) + " are stored");
  std::vector<std::uint64_t> bases(n + kTailWindow - 1);
  d.seq().fill_bases(1, bases);
  std::vector<std::uint64_t> out(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i)
    out[i] = windowed_tail(d.raw(), bases, i);
  return out;
}

}  // namespace cantor
