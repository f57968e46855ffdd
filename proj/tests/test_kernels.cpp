#include "doctest.h"

#include <random>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "cantor/kernels.hpp"

using cantor::BasicSequence;
using cantor::BigInt;
using cantor::Block;
using cantor::DigitStream;
using cantor::Rational;
using cantor::TermUnits;

namespace {

DigitStream random_stream(const BasicSequence& seq, std::uint64_t n,
                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::uint64_t> digits;
  digits.reserve(n);
  for (std::uint64_t i = 1; i <= n; ++i)
    digits.push_back(cantor::uniform_below(rng, seq.base_at(i)));
  return DigitStream(seq, std::move(digits));
}

void force_threads() {
#ifdef _OPENMP
  // The sandbox exposes one core; force several threads anyway so the merge
  // logic of every parallel kernel is actually exercised.
  omp_set_num_threads(3);
#endif
}

}  // namespace

TEST_CASE("match masks: parallel equals serial and sums match count") {
  force_threads();
  const auto seq = BasicSequence::linear(1, 1);
  const auto d = random_stream(seq, 100000, 41);
  for (const auto& B : cantor::enumerate_blocks(8)) {
    const std::uint64_t n = d.length() - B.length() + 1;
    const auto serial = cantor::match_mask_serial(d, B, n);
    const auto parallel = cantor::match_mask(d, B, n);
    CHECK(serial == parallel);
    std::uint64_t total = 0;
    for (auto m : serial) total += m;
    CHECK(total == cantor::count(d, B, 1, n));
  }
  CHECK_THROWS_AS(cantor::match_mask(d, Block({0}), d.length() + 1),
                  std::out_of_range);
}

TEST_CASE("prefix counts: parallel equals serial") {
  force_threads();
  std::mt19937_64 rng(43);
  for (const std::size_t n : {0u, 1u, 7u, 1000u, 100001u}) {
    std::vector<std::uint8_t> mask(n);
    for (auto& m : mask) m = rng() % 2;
    const auto serial = cantor::prefix_counts_serial(mask);
    const auto parallel = cantor::prefix_counts(mask);
    CHECK(serial == parallel);
    if (n > 0) {
      std::uint64_t total = 0;
      for (auto m : mask) total += m;
      CHECK(serial.back() == total);
    }
  }
}

TEST_CASE("expectation terms: parallel equals serial bit-for-bit") {
  force_threads();
  const std::vector<BasicSequence> seqs = {
      BasicSequence::constant(2),
      BasicSequence::linear(1, 1),
      BasicSequence::explicit_then({7, 2, 19}, BasicSequence::linear(2, 0)),
  };
  for (const auto& seq : seqs) {
    for (const auto& B : {Block({0}), Block({1, 0}), Block::zeros(3), Block({4})}) {
      std::vector<TermUnits> serial(30000), parallel(30000);
      cantor::expectation_terms_serial(seq, B, 1, serial);
      cantor::expectation_terms(seq, B, 1, parallel);
      for (std::size_t i = 0; i < serial.size(); ++i) {
        REQUIRE(serial[i].limb[0] == parallel[i].limb[0]);
        REQUIRE(serial[i].limb[1] == parallel[i].limb[1]);
        REQUIRE(serial[i].limb[2] == parallel[i].limb[2]);
      }
      // Offset start: terms are per-index, not per-buffer.
      std::vector<TermUnits> offset(100);
      cantor::expectation_terms(seq, B, 501, offset);
      for (std::size_t i = 0; i < offset.size(); ++i) {
        CHECK(offset[i].limb[0] == serial[500 + i].limb[0]);
        CHECK(offset[i].limb[1] == serial[500 + i].limb[1]);
        CHECK(offset[i].limb[2] == serial[500 + i].limb[2]);
      }
    }
  }
}

TEST_CASE("round-down term sums bracket the exact expectation") {
  const Rational scale = Rational(BigInt(1) << cantor::kExpScaleBits);
  const std::vector<BasicSequence> seqs = {
      BasicSequence::constant(2),
      BasicSequence::linear(1, 1),
      BasicSequence::constant(10),
  };
  for (const auto& seq : seqs) {
    for (const auto& B : {Block({0}), Block({1}), Block({0, 0}), Block({2, 1})}) {
      const std::uint64_t n = 2000;
      std::vector<TermUnits> terms(n);
      cantor::expectation_terms_serial(seq, B, 1, terms);
      BigInt e = 0;
      for (const auto& t : terms) e += cantor::to_bigint(cantor::to_u256(t));
      const Rational exact = cantor::expectation(B, 1, n, seq) * scale;
      CHECK(Rational(e) <= exact);
      CHECK(exact < Rational(e + n));
    }
  }
}

TEST_CASE("profile scan streams counts and expectations consistently") {
  force_threads();
  const auto seq = BasicSequence::linear(1, 1);
  const auto d = random_stream(seq, 20000, 47);
  const Block B({0, 1});
  const std::uint64_t n = 10000;

  const auto mask = cantor::match_mask_serial(d, B, n);
  const auto counts = cantor::prefix_counts_serial(mask);
  std::vector<TermUnits> terms(n);
  cantor::expectation_terms_serial(seq, B, 1, terms);

  std::uint64_t visited = 0;
  BigInt running = 0;
  std::uint64_t idx = 0;
  cantor::U256 last_e = 0;
  cantor::scan_block_profile(d, B, n, [&](std::uint64_t m, std::uint64_t c,
                                          const cantor::U256& e) {
    ++visited;
    REQUIRE(m == visited);
    REQUIRE(c == counts[m - 1]);
    running += cantor::to_bigint(cantor::to_u256(terms[idx++]));
    REQUIRE(cantor::to_bigint(e) == running);
    REQUIRE(e >= last_e);
    last_e = e;
  });
  CHECK(visited == n);

  // Serial and parallel scans produce identical visit streams.
  std::vector<std::pair<std::uint64_t, std::uint64_t>> a, b;
  cantor::scan_block_profile(
      d, B, n, [&](std::uint64_t m, std::uint64_t c, const cantor::U256&) {
        a.emplace_back(m, c);
      },
      true);
  cantor::scan_block_profile(
      d, B, n, [&](std::uint64_t m, std::uint64_t c, const cantor::U256&) {
        b.emplace_back(m, c);
      },
      false);
  CHECK(a == b);
}

TEST_CASE("windowed tail units: parallel equals serial") {
  force_threads();
  for (const auto& seq : {BasicSequence::constant(2), BasicSequence::linear(1, 1)}) {
    const auto d = random_stream(seq, 50000 + cantor::kTailWindow, 53);
    const auto serial = cantor::tail_units_serial(d, 50000);
    const auto parallel = cantor::tail_units(d, 50000);
    CHECK(serial == parallel);
    CHECK_THROWS_AS(cantor::tail_units(d, d.length()), std::out_of_range);
  }
}

TEST_CASE("windowed tail units bracket the exact tail value") {
  const auto seq = BasicSequence::linear(1, 1);
  const std::uint64_t n = 300;
  const auto d = random_stream(seq, n + cantor::kTailWindow + 200, 59);
  const auto units = cantor::tail_units_serial(d, n);
  const Rational scale = Rational(BigInt(1) << cantor::kTailScaleBits);

  for (std::uint64_t i : {1ull, 2ull, 17ull, 100ull, 299ull}) {
    // Exact tail of everything stored from digit i on; the true tail of the
    // underlying point exceeds this by < 2^-400, far below one unit.
    cantor::PairwiseRationalSum sum;
    BigInt prod = 1;
    for (std::uint64_t j = i; j <= d.length(); ++j) {
      prod *= seq.base_at(j);
      sum.add(BigInt(d.digit(j)), prod);
    }
    const Rational exact_units = sum.value() * scale;
    CHECK(Rational(units[i - 1]) <= exact_units);
    CHECK(exact_units < Rational(units[i - 1] + cantor::kTailSlackUnits));
  }
}

TEST_CASE("tail units of an all-zero tail are zero") {
  const auto seq = BasicSequence::constant(3);
  const DigitStream d(seq, std::vector<std::uint64_t>(200, 0));
  const auto units = cantor::tail_units_serial(d, 100);
  for (auto u : units) CHECK(u == 0);
}
