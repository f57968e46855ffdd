#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <random>
#include <vector>

#include "cantor/blocks.hpp"

using cantor::BasicSequence;
using cantor::Block;
using cantor::BlockCollection;
using cantor::DigitStream;
using cantor::Goodness;
using cantor::ParseError;
using cantor::Rational;

TEST_CASE("canonical block enumeration oracles") {
  auto blocks = cantor::enumerate_blocks(7);
  const std::vector<Block> expected = {
      Block({0}),    Block({1}),    Block({0, 0}), Block({2}),
      Block({0, 1}), Block({1, 0}), Block({0, 0, 0}),
  };
  CHECK(blocks == expected);
  CHECK(cantor::enumerate_blocks(1) == std::vector<Block>{Block({0})});
  CHECK_THROWS_AS(cantor::enumerate_blocks(0), std::invalid_argument);
}

TEST_CASE("canonical block enumeration properties") {
  const auto blocks = cantor::enumerate_blocks(1000);
  REQUIRE(blocks.size() == 1000);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    // The i-th block (0-indexed) has length <= i+1.
    CHECK(blocks[i].length() <= i + 1);
    if (i > 0) {
      // Weight ascends; within one weight tier length ascends; within one
      // length tier the order is lexicographic.
      const auto &prev = blocks[i - 1], &cur = blocks[i];
      const bool ordered =
          prev.weight() < cur.weight() ||
          (prev.weight() == cur.weight() &&
           (prev.length() < cur.length() ||
            (prev.length() == cur.length() && prev.word() < cur.word())));
      CHECK(ordered);
    }
    for (std::size_t j = i + 1; j < std::min(blocks.size(), i + 50); ++j)
      CHECK(blocks[i] != blocks[j]);
  }
}

TEST_CASE("block weight and accessors") {
  const Block b({0, 3});
  CHECK(b.length() == 2);
  CHECK(b.weight() == 5);  // (0+1) + (3+1)
  CHECK(b.at(1) == 0);
  CHECK(b.at(2) == 3);
  CHECK(Block::zeros(3) == Block({0, 0, 0}));
  CHECK(Block::ones(2) == Block({1, 1}));
  CHECK(Block::zeros(4).weight() == 4);
  CHECK_THROWS_AS(Block({}), std::invalid_argument);
}

TEST_CASE("indicator oracles") {
  const auto lin = BasicSequence::linear(1, 1);  // 2,3,4,...
  CHECK(cantor::indicator(Block({0}), 1, lin));
  CHECK(cantor::indicator(Block({0}), 17, BasicSequence::constant(2)));
  CHECK_FALSE(cantor::indicator(Block({0, 3}), 1, lin));  // 3 < q_2 = 3 fails
  CHECK(cantor::indicator(Block({0, 3}), 3, lin));        // 0 < 4, 3 < 5
}

TEST_CASE("expectation oracles") {
  const auto lin = BasicSequence::linear(1, 1);
  CHECK(cantor::expectation(Block({1}), 1, 3, lin) == Rational(13, 12));
  // B=(2): j=1 has q_1 = 2 so the indicator vanishes; only j=2 contributes.
  CHECK(cantor::expectation(Block({2}), 1, 2, lin) == Rational(1, 3));
  // Entry above every base in range: zero.
  CHECK(cantor::expectation(Block({9}), 1, 50, BasicSequence::constant(3)) ==
        Rational(0));
  CHECK_THROWS_AS(cantor::expectation(Block({0}), 0, 3, lin), std::invalid_argument);
  CHECK_THROWS_AS(cantor::expectation(Block({0}), 4, 3, lin), std::invalid_argument);
}

TEST_CASE("expectation additivity and zero-block domination") {
  std::mt19937_64 rng(23);
  const auto seq = BasicSequence::linear(1, 1);
  const auto pool = cantor::enumerate_blocks(12);
  for (int trial = 0; trial < 40; ++trial) {
    const Block& B = pool[rng() % pool.size()];
    const std::uint64_t n = 2 + rng() % 60;
    const std::uint64_t m = 2 + rng() % (n - 1);
    CHECK(cantor::expectation(B, 1, n, seq) ==
          cantor::expectation(B, 1, m - 1, seq) + cantor::expectation(B, m, n, seq));
    // Termwise domination by the all-zero block of the same length.
    const auto dom = cantor::partial_expectation_0k(
        seq, static_cast<std::uint32_t>(B.length()), n);
    CHECK(cantor::expectation(B, 1, n, seq) <= dom);
  }
  // Equality iff every indicator in range is 1: blocks of zeros always match.
  CHECK(cantor::expectation(Block::zeros(3), 1, 40, seq) ==
        cantor::partial_expectation_0k(seq, 3, 40));
  // Strict once one indicator vanishes.
  CHECK(cantor::expectation(Block({2}), 1, 40, seq) <
        cantor::partial_expectation_0k(seq, 1, 40));
}

TEST_CASE("count oracles") {
  const auto two = BasicSequence::constant(2);
  const DigitStream d(two, {0, 1, 0, 0, 1, 0});
  CHECK(cantor::count(d, Block({0, 0}), 1, 5) == 1);
  CHECK(cantor::count(d, Block({0}), 1, 6) == 4);
  CHECK(cantor::count(d, Block({1}), 2, 2) == 1);
  CHECK(cantor::count(d, Block({0}), 5, 4) == 0);  // empty start range
  CHECK_THROWS_AS(cantor::count(d, Block({0, 0}), 1, 6), std::out_of_range);
  CHECK_THROWS_AS(cantor::count(d, Block({0}), 0, 3), std::invalid_argument);

  // Overlapping occurrences all count (starts are what is counted).
  const DigitStream zzz(two, {0, 0, 0});
  CHECK(cantor::count(zzz, Block({0, 0}), 1, 2) == 2);
}

TEST_CASE("count equals an independent rescan on random streams") {
  std::mt19937_64 rng(29);
  const auto seq = BasicSequence::linear(1, 1);
  std::vector<std::uint64_t> digits;
  for (std::uint64_t i = 1; i <= 10000; ++i)
    digits.push_back(cantor::uniform_below(rng, seq.base_at(i)));
  const DigitStream d(seq, digits);

  const auto pool = cantor::enumerate_blocks(10);
  for (const auto& B : pool) {
    const std::uint64_t n = d.length() - B.length() + 1;
    // Independent oracle: compare against the raw vector with std::equal.
    std::uint64_t naive = 0;
    for (std::uint64_t i = 1; i <= n; ++i)
      naive += std::equal(B.word().begin(), B.word().end(), digits.begin() + (i - 1));
    CHECK(cantor::count(d, B, 1, n) == naive);
    // Count additivity over a start-index partition.
    const std::uint64_t m = 2 + (rng() % (n - 2));
    CHECK(cantor::count(d, B, 1, n) ==
          cantor::count(d, B, 1, m - 1) + cantor::count(d, B, m, n));
  }
}

TEST_CASE("goodness classification oracles") {
  CHECK(cantor::is_good(Block({0}), BasicSequence::constant(2)) == Goodness::good);
  // Indicator identically zero: never occurs, finite (zero) expectation.
  CHECK(cantor::is_good(Block({5}), BasicSequence::constant(3)) == Goodness::not_good);
  // Declared only 1-divergent: every length-2 block has finite expectation.
  CHECK(cantor::is_good(Block({1, 1}), BasicSequence::linear(1, 1)) ==
        Goodness::not_good);
  // Infinite-in-limit reduces goodness to declared divergence, even when the
  // indicator vanishes far beyond any probe horizon.
  CHECK(cantor::is_good(Block({10000000}), BasicSequence::linear(1, 1)) ==
        Goodness::good);
  // Metadata override: declared 2-divergent makes length-2 blocks good.
  const auto declared = BasicSequence::parse("linear:1:1@div=2@iil=1");
  CHECK(cantor::is_good(Block({1, 1}), declared) == Goodness::good);
  // Bounded bases, indicator flips on within the horizon: good.
  CHECK(cantor::is_good(Block({7}), BasicSequence::constant(9)) == Goodness::good);
}

TEST_CASE("goodness fallback on sequences with giant irregular prefixes") {
  // The irregular prefix extends past the probe horizon, forcing the numeric
  // fallback path.
  const std::uint64_t horizon = 1000;
  const auto big = BasicSequence::explicit_then(
      std::vector<std::uint64_t>(2 * horizon, 10000), BasicSequence::constant(2));

  // Q_horizon((0)) = horizon/10^4 = 0.1: below the default threshold, tail
  // still contributing -> unknown.
  CHECK(cantor::is_good(Block({0}), big, horizon) == Goodness::unknown);
  // A lowered threshold turns the same data into good.
  CHECK(cantor::is_good(Block({0}), big, horizon, Rational(1, 100)) == Goodness::good);
  // Entry above every base: indicator-zero tail -> not_good.
  CHECK(cantor::is_good(Block({20000}), big, horizon) == Goodness::not_good);
}

TEST_CASE("separation hypothesis oracles") {
  const auto five = BasicSequence::constant(5);

  const BlockCollection sep{"", {Block({0, 0}), Block({3, 3})}};
  const auto ok = cantor::star_condition_check(sep, five);
  CHECK(ok.satisfied);
  REQUIRE(ok.entries.size() == 2);
  CHECK(ok.entries[0].satisfied);
  CHECK(ok.entries[0].partner == Block({3, 3}));
  CHECK(ok.entries[0].witness_t == 1);
  CHECK(ok.entries[1].partner == Block({0, 0}));

  const BlockCollection singleton{"", {Block({0})}};
  CHECK_FALSE(cantor::star_condition_check(singleton, five).satisfied);

  // Adjacent values differ by exactly 1 everywhere: no qualifying t.
  const BlockCollection close{"", {Block({0, 0}), Block({1, 1})}};
  CHECK_FALSE(cantor::star_condition_check(close, five).satisfied);

  // Not-good blocks are skipped: they neither need nor provide partners.
  const auto three = BasicSequence::constant(3);
  const BlockCollection mixed{"", {Block({0}), Block({9})}};
  const auto rep = cantor::star_condition_check(mixed, three);
  CHECK_FALSE(rep.satisfied);  // (0) is good but (9) is not good, so no partner
  CHECK(rep.entries[1].goodness == Goodness::not_good);

  // A far-apart good partner fixes it.
  const BlockCollection fixed{"", {Block({0}), Block({2})}};
  CHECK(cantor::star_condition_check(fixed, three).satisfied);
}

TEST_CASE("block literals parse and print") {
  CHECK(Block::parse("[0,3]") == Block({0, 3}));
  CHECK(Block::parse("[7]") == Block({7}));
  CHECK(Block({0, 3}).literal() == "[0,3]");
  for (const auto& text : {"", "[]", "[1,]", "[,1]", "(1)", "[a]", "[-1]", "[1 2]"}) {
    CAPTURE(text);
    CHECK_THROWS_AS(Block::parse(text), ParseError);
  }
  // Round trip through the literal form.
  for (const auto& b : cantor::enumerate_blocks(50))
    CHECK(Block::parse(b.literal()) == b);
}

TEST_CASE("block collection files round-trip and reject malformed input") {
  const std::string path = "blocks_io.tmp";
  const BlockCollection C{path, {Block({0}), Block({0, 3}), Block({2})}};
  cantor::write_block_collection(path, C);
  {
    std::ifstream in(path, std::ios::binary);
    std::string content((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
    CHECK(content == "[0]\n[0,3]\n[2]\n");
  }
  const auto back = cantor::read_block_collection(path);
  CHECK(back.blocks == C.blocks);

  auto write_raw = [&](const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
  };
  write_raw("[0]\n[0]\n");
  CHECK_THROWS_AS(cantor::read_block_collection(path), ParseError);
  write_raw("");
  CHECK_THROWS_AS(cantor::read_block_collection(path), ParseError);
  write_raw("[0]\n\n[1]\n");
  CHECK_THROWS_AS(cantor::read_block_collection(path), ParseError);
  write_raw("[0]\r\n[1]\r\n");
  CHECK_THROWS_AS(cantor::read_block_collection(path), ParseError);
  std::remove(path.c_str());
}

TEST_CASE("digit projection preserves block counts up to a frozen constant") {
  // P has p_i = q_i + 1 termwise; projection onto Q changes only digits that
  // equal q_i, whose values outgrow every small block entry.  The running
  // count difference must stop growing over the last 90% of the range.
  const auto q = BasicSequence::linear(1, 1);
  const auto p = BasicSequence::linear(1, 2);
  const std::uint64_t n_max = 100000;

  std::mt19937_64 rng(31);
  std::vector<std::uint64_t> pdigits;
  for (std::uint64_t i = 1; i <= n_max + 8; ++i)
    pdigits.push_back(cantor::uniform_below(rng, p.base_at(i)));
  const DigitStream x(p, pdigits);
  const auto projected = cantor::psi_map(x, q);

  std::vector<Block> small;
  for (const auto& b : cantor::enumerate_blocks(64))
    if (b.weight() <= 4) small.push_back(b);
  REQUIRE(small.size() == 15);  // 1 + 2 + 4 + 8 compositions of weight <= 4

  for (const auto& B : small) {
    CAPTURE(B.literal());
    const auto& w = B.word();
    std::int64_t diff = 0;
    std::uint64_t sup_all = 0, sup_early = 0;
    for (std::uint64_t i = 1; i <= n_max; ++i) {
      const bool in_p = std::equal(w.begin(), w.end(), pdigits.begin() + (i - 1));
      const bool in_q = std::equal(w.begin(), w.end(), projected.raw().begin() + (i - 1));
      diff += static_cast<std::int64_t>(in_q) - static_cast<std::int64_t>(in_p);
      const auto mag = static_cast<std::uint64_t>(diff < 0 ? -diff : diff);
      sup_all = std::max(sup_all, mag);
      if (i <= n_max / 10) sup_early = std::max(sup_early, mag);
    }
    CHECK(sup_all == sup_early);
  }
}
