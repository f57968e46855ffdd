#pragma once

// Digit streams relative to a basic sequence: greedy expansion of rationals,
// prefix/tail evaluation, validity checks, the digit-projection map, and the
// bit-exact digit file format.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cantor/numeric.hpp"
#include "cantor/sequences.hpp"

namespace cantor {

// Raised when a stored prefix is too short for a requested tolerance; carries
// the length that would have sufficed.
class PrecisionError : public std::runtime_error {
 public:
  PrecisionError(const std::string& what, std::uint64_t required)
      : std::runtime_error(what), required_length(required) {}
  std::uint64_t required_length;
};

// A finite prefix a_1..a_N of digits with 0 <= a_i < q_i relative to seq.
// Immutable once built; all operations on it are pure.
class DigitStream {
 public:
  DigitStream(BasicSequence seq, std::vector<std::uint64_t> digits)
      : seq_(std::move(seq)), digits_(std::move(digits)) {}

  const BasicSequence& seq() const { return seq_; }
  std::uint64_t length() const { return digits_.size(); }
  // 1-based digit access.
  std::uint64_t digit(std::uint64_t i) const { return digits_.at(i - 1); }
  // Raw 0-based storage (digit a_i lives at index i-1).
  std::span<const std::uint64_t> raw() const { return digits_; }

 private:
  BasicSequence seq_;
  std::vector<std::uint64_t> digits_;
};

// Greedy expansion of a rational x in [0,1) to n digits.  Exact; produces the
// terminating form when one exists.  Throws std::domain_error for x outside
// [0,1).
DigitStream digits_of_rational(const Rational& x, const BasicSequence& seq,
                               std::uint64_t n);

// Exact value of the first n digits: sum_{i<=n} a_i / (q_1...q_i).
// Throws std::out_of_range when n exceeds the stored length.
Rational prefix_value(const DigitStream& d, std::uint64_t n);

// Approximation of the shifted tail T_{Q,n} from the stored digits: the exact
// value of digits n+1..n+j where j is minimal with 1/(q_{n+1}...q_{n+j}) < tol.
// Throws std::out_of_range for n >= length, std::invalid_argument for tol <= 0,
// and PrecisionError (naming the required length) when the prefix is too short.
Rational tail_value(const DigitStream& d, std::uint64_t n, const Rational& tol);

// Digit projection onto a target sequence: output digit i is
// min(a_i, base_at(target, i) - 1).  Always yields a valid stream w.r.t. target.
DigitStream psi_map(const DigitStream& d, const BasicSequence& target);

struct ValidityViolation {
  std::uint64_t index;  // 1-based
  std::uint64_t digit;
  std::uint64_t base;
};

struct ValidityReport {
  std::vector<ValidityViolation> violations;  // digits with a_i >= q_i
  std::vector<std::string> warnings;          // windowed all-(q_i - 1) advisories
  bool valid() const { return violations.empty(); }
};

// Reports any index with a_i >= q_i, plus an advisory warning when some
// window of `window` consecutive digits are all equal to q_i - 1 (a finite
// prefix can only approximate "a_i != q_i - 1 infinitely often").
ValidityReport validate(const DigitStream& d, std::uint64_t window = 64);

// Digit-stream file format (bit-exact):
//   line 1: "#cantor-digits v1 seq=<sequence spec string>"
//   then one digit per line as unsigned decimal, LF endings, no trailing
//   blank line.
void write_digit_file(const std::string& path, const DigitStream& d);
DigitStream read_digit_file(const std::string& path);

}  // namespace cantor
