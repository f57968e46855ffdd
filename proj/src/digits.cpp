#include "cantor/digits.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace cantor {

namespace {

// Exact value of digits l..r (1-based, inclusive) scaled so that position l
// has weight 1/q_l: returns sum_{i=l}^{r} a_i / (q_l...q_i) as (num, den),
// along with den = q_l...q_r.  Divide-and-conquer keeps the big-number work
// near the top of the recursion.
struct ScaledValue {
  BigInt num;
  BigInt den;  // product of the covered bases
};

ScaledValue ranged_value(const DigitStream& d, std::uint64_t l, std::uint64_t r) {
  if (l == r) {
    return ScaledValue{BigInt(d.digit(l)), BigInt(d.seq().base_at(l))};
  }
  const std::uint64_t mid = l + (r - l) / 2;
  ScaledValue left = ranged_value(d, l, mid);
  ScaledValue right = ranged_value(d, mid + 1, r);
  // left.num/left.den + (1/left.den) * right.num/right.den
  ScaledValue out;
  out.num = left.num * right.den + right.num;
  out.den = left.den * right.den;
  return out;
}

}  // namespace

DigitStream digits_of_rational(const Rational& x, const BasicSequence& seq,
                               std::uint64_t n) {
  if (x < 0 || x >= 1)
    throw std::domain_error("digits_of_rational: x must lie in [0,1), got " +
                            format_rational(x));
  std::vector<std::uint64_t> digits;
  digits.reserve(n);
  // Greedy extraction on the exact remainder: a_i = floor(rem * q_i).
  // Numerator/denominator stay bounded by x's reduced denominator.
  BigInt num = boost::multiprecision::numerator(x);
  const BigInt den = boost::multiprecision::denominator(x);
  for (std::uint64_t i = 1; i <= n; ++i) {
    if (num == 0) {
      digits.insert(digits.end(), n - digits.size(), 0);
      break;
    }
    num *= seq.base_at(i);
    const BigInt a = num / den;
    num -= a * den;
    digits.push_back(static_cast<std::uint64_t>(a));
  }
  return DigitStream(seq, std::move(digits));
}

Rational prefix_value(const DigitStream& d, std::uint64_t n) {
  if (n > d.length())
    throw std::out_of_range("prefix_value: n=" + std::to_string(n) +
                            " exceeds stored length " + std::to_string(d.length()));
  if (n == 0) return Rational(0);
  const ScaledValue v = ranged_value(d, 1, n);
  return Rational(v.num, v.den);
}

Rational tail_value(const DigitStream& d, std::uint64_t n, const Rational& tol) {
  if (tol <= 0) throw std::invalid_argument("tail_value: tol must be positive");
  if (n >= d.length())
    throw std::out_of_range("tail_value: n=" + std::to_string(n) +
                            " leaves no stored digits (length " +
                            std::to_string(d.length()) + ")");
  // Find the least j with 1/(q_{n+1}...q_{n+j}) < tol.
  const BigInt tol_num = boost::multiprecision::numerator(tol);
  const BigInt tol_den = boost::multiprecision::denominator(tol);
  BigInt prod = 1;
  std::uint64_t j = 0;
  while (prod * tol_num <= tol_den) {
    ++j;
    if (n + j > d.length())
      throw PrecisionError(
          "tail_value: tolerance " + format_rational(tol) + " needs digits up to " +
              std::to_string(n + j) + " but only " + std::to_string(d.length()) +
              " are stored",
          n + j);
    prod *= d.seq().base_at(n + j);
  }
  if (j == 0) return Rational(0);  // tol > 1: the empty sum already qualifies
  const ScaledValue v = ranged_value(d, n + 1, n + j);
  return Rational(v.num, v.den);
}

DigitStream psi_map(const DigitStream& d, const BasicSequence& target) {
  std::vector<std::uint64_t> out(d.length());
  for (std::uint64_t i = 1; i <= d.length(); ++i)
    out[i - 1] = std::min(d.digit(i), target.base_at(i) - 1);
  return DigitStream(target, std::move(out));
}

ValidityReport validate(const DigitStream& d, std::uint64_t window) {
  ValidityReport report;
  std::uint64_t maxed_run = 0;
  bool warned = false;
  for (std::uint64_t i = 1; i <= d.length(); ++i) {
    const std::uint64_t q = d.seq().base_at(i);
    const std::uint64_t a = d.digit(i);
    if (a >= q) report.violations.push_back({i, a, q});
    maxed_run = (a == q - 1) ? maxed_run + 1 : 0;
    if (!warned && window > 0 && maxed_run >= window) {
      report.warnings.push_back(
          std::to_string(window) + " consecutive digits equal q_i - 1 starting at index " +
          std::to_string(i - window + 1) +
          "; a valid expansion must violate this infinitely often");
      warned = true;
    }
  }
  return report;
}

void write_digit_file(const std::string& path, const DigitStream& d) {
  std::ofstream out(path, std::ios::binary);  // binary: keep LF endings everywhere
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "#cantor-digits v1 seq=" << d.seq().canonical() << "\n";
  for (std::uint64_t i = 1; i <= d.length(); ++i) out << d.digit(i) << "\n";
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path);
}

DigitStream read_digit_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::string header;
  if (!std::getline(in, header)) throw ParseError(path + ": empty digit file");
  constexpr std::string_view magic = "#cantor-digits v1 seq=";
  if (header.size() < magic.size() || std::string_view(header).substr(0, magic.size()) != magic)
    throw ParseError(path + ": missing '#cantor-digits v1 seq=' header");
  if (!header.empty() && header.back() == '\r')
    throw ParseError(path + ": CRLF line endings; the format requires LF");
  BasicSequence seq = BasicSequence::parse(std::string_view(header).substr(magic.size()));

  std::vector<std::uint64_t> digits;
  std::string line;
  std::uint64_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r')
      throw ParseError(path + ": CRLF line endings; the format requires LF");
    if (line.empty()) {
      if (in.peek() == std::ifstream::traits_type::eof())
        throw ParseError(path + ": trailing blank line");
      throw ParseError(path + ": blank line " + std::to_string(lineno));
    }
    std::uint64_t value = 0;
    const char* first = line.data();
    const char* last = line.data() + line.size();
    const auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc{} || res.ptr != last)
      throw ParseError(path + ": line " + std::to_string(lineno) +
                       " is not an unsigned decimal digit value");
    digits.push_back(value);
  }

  DigitStream stream(std::move(seq), std::move(digits));
  // The format carries the invariant 0 <= a_i < q_i; enforce it on ingest.
  for (std::uint64_t i = 1; i <= stream.length(); ++i) {
    if (stream.digit(i) >= stream.seq().base_at(i))
      throw ParseError(path + ": digit at index " + std::to_string(i) +
                       " is >= its base");
  }
  return stream;
}

}  // namespace cantor
