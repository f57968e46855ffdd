#pragma once

// Shared arbitrary-precision aliases and small integer helpers.
//
// Two arithmetic tiers are used throughout the library:
//   * exact rationals (cpp_rational) for definitions, oracles, and small-n
//     work where the spec demands bit-exact equality;
//   * deterministic round-down fixed point (integer units at a power-of-two
//     scale) for million-digit streaming statistics, where exact rational
//     denominators would grow without bound.  Every fixed-point comparison in
//     the library is written so that a certified inequality on units implies
//     the true inequality on reals.

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cantor {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

// Scale used for streaming expectation accumulators (units of 2^-kExpScaleBits).
inline constexpr unsigned kExpScaleBits = 192;
// Scale used for digit-tail values (units of 2^-64, stored in unsigned __int128).
inline constexpr unsigned kTailScaleBits = 64;
// Certified bound on the tail-value error in units of 2^-kTailScaleBits
// (two units of per-step floor error plus end-truncation, with margin).
inline constexpr unsigned kTailSlackUnits = 4;

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when inputs are structurally fine but the requested operation is not
// meaningful for them (wrong mode, missing metadata, unresolvable goodness).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parses "p/q" or a plain integer as an exact rational.  Throws ParseError on
// malformed input or a zero denominator.
Rational parse_rational(std::string_view text);

// Formats as "p/q" (or "p" when the denominator is 1).
std::string format_rational(const Rational& value);

// Floor of the r-th root of a nonnegative integer (r >= 1).
std::uint64_t iroot_floor(std::uint64_t value, unsigned r);

// SplitMix64 step; used to derive per-stream seeds from a master seed.
std::uint64_t splitmix64(std::uint64_t state);

// value^exp for BigInt base and machine exponent.
BigInt ipow(const BigInt& base, std::uint64_t exp);

// Uniform draw from {0, ..., q-1} (q >= 1) by rejection from the generator's
// full 64-bit range, so every residue is exactly equally likely.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t q);

// Exact sum of fractions, merged pairwise (binary counter) so that gcd
// normalization happens once at the end instead of per term.  Keeps long
// sums of small-denominator terms far cheaper than repeated Rational +=.
class PairwiseRationalSum {
 public:
  void add(BigInt num, BigInt den);
  void add_reciprocal(const BigInt& den) { add(BigInt(1), den); }
  // Collapses the counter and returns the normalized total.
  Rational value() const;

 private:
  struct Level {
    BigInt num, den;
    bool used = false;
  };
  std::vector<Level> levels_;
};

}  // namespace cantor
