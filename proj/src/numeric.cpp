#include "cantor/numeric.hpp"

#include <cctype>

namespace cantor {

Rational parse_rational(std::string_view text) {
  auto is_int = [](std::string_view s) {
    if (!s.empty() && (s.front() == '+' || s.front() == '-')) s.remove_prefix(1);
    if (s.empty()) return false;
    for (char c : s)
      if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    return true;
  };
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) {
    if (!is_int(text)) throw ParseError("not a rational: '" + std::string(text) + "'");
    return Rational(BigInt(std::string(text)));
  }
  const auto num = text.substr(0, slash);
  const auto den = text.substr(slash + 1);
  if (!is_int(num) || !is_int(den))
    throw ParseError("not a rational: '" + std::string(text) + "'");
  BigInt d{std::string(den)};
  if (d == 0) throw ParseError("zero denominator in '" + std::string(text) + "'");
  return Rational(BigInt(std::string(num)), d);
}

std::string format_rational(const Rational& value) {
  std::string out = numerator(value).str();
  if (denominator(value) != 1) {
    out += '/';
    out += denominator(value).str();
  }
  return out;
}

std::uint64_t iroot_floor(std::uint64_t value, unsigned r) {
  if (r == 0) throw std::invalid_argument("iroot_floor: r must be >= 1");
  if (r == 1 || value < 2) return value;
  // Monotone search; the ranges involved are tiny, so exactness beats speed.
  auto pow_le = [&](std::uint64_t base) {
    unsigned __int128 acc = 1;
    for (unsigned i = 0; i < r; ++i) {
      acc *= base;
      if (acc > value) return false;
    }
    return true;
  };
  std::uint64_t lo = 1, hi = 2;
  while (pow_le(hi)) {
    lo = hi;
    if (hi > (1ull << 32)) break;
    hi *= 2;
  }
  while (lo + 1 < hi) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (pow_le(mid))
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

std::uint64_t splitmix64(std::uint64_t state) {
  std::uint64_t z = state + 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

BigInt ipow(const BigInt& base, std::uint64_t exp) {
  BigInt acc = 1, b = base;
  while (exp != 0) {
    if (exp & 1) acc *= b;
    b *= b;
    exp >>= 1;
  }
  return acc;
}

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t q) {
  if (q == 0) throw std::invalid_argument("uniform_below: q >= 1");
  if (q == 1) return 0;
  // Accept r only from the top part of the range whose size is a multiple of
  // q; (2^64 - q) mod q computed without 128-bit arithmetic.
  const std::uint64_t min = (-q) % q;
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= min) return r % q;
  }
}

void PairwiseRationalSum::add(BigInt num, BigInt den) {
  std::size_t i = 0;
  for (;;) {
    if (i == levels_.size()) levels_.emplace_back();
    Level& lvl = levels_[i];
    if (!lvl.used) {
      lvl.num = std::move(num);
      lvl.den = std::move(den);
      lvl.used = true;
      return;
    }
    BigInt merged_num = num * lvl.den + lvl.num * den;
    BigInt merged_den = den * lvl.den;
    lvl.used = false;
    num = std::move(merged_num);
    den = std::move(merged_den);
    ++i;
  }
}

Rational PairwiseRationalSum::value() const {
  BigInt num = 0, den = 1;
  for (const auto& lvl : levels_) {
    if (!lvl.used) continue;
    num = num * lvl.den + lvl.num * den;
    den *= lvl.den;
  }
  return Rational(num, den);
}

}  // namespace cantor
