#include "doctest.h"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cantor/blocks.hpp"
#include "cantor/digits.hpp"
#include "cantor/numeric.hpp"
#include "cantor/sequences.hpp"
#include "cantor/stats.hpp"
#include "cantor/surgery.hpp"

using cantor::BasicSequence;
using cantor::Block;
using cantor::ClampMode;
using cantor::ConstructionError;
using cantor::DigitStream;
using cantor::DigitWindow;
using cantor::ParseError;
using cantor::PivotShift;
using cantor::ReductionInput;
using cantor::SurgeryLog;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spit(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

DigitWindow window_of(std::vector<std::uint64_t>& digits,
                      const std::vector<std::uint64_t>& bases,
                      std::uint64_t first_index = 1) {
  return DigitWindow{first_index, std::span<std::uint64_t>(digits),
                     std::span<const std::uint64_t>(bases)};
}

}  // namespace

TEST_CASE("input rules: evaluation and describe/parse round-trips") {
  const auto id = ReductionInput::identity();
  CHECK(id.at(1) == 1);
  CHECK(id.at(6) == 6);
  CHECK(id.describe() == "id");
  CHECK(ReductionInput::parse("id") == id);
  CHECK_THROWS_AS(id.at(0), std::out_of_range);

  const auto evens = ReductionInput::constant_on_evens(5);
  CHECK(evens.at(2) == 5);
  CHECK(evens.at(4) == 5);
  CHECK(evens.at(3) == 3);
  CHECK(evens.describe() == "evens=5");
  CHECK(ReductionInput::parse(evens.describe()) == evens);

  const auto odds = ReductionInput::constant_on_odds(4);
  CHECK(odds.at(3) == 4);
  CHECK(odds.at(2) == 2);
  CHECK(odds.describe() == "odds=4");
  CHECK(ReductionInput::parse(odds.describe()) == odds);

  const auto both = ReductionInput::custom(ReductionInput::Track{true, 7},
                                           ReductionInput::Track{true, 9});
  CHECK(both.at(2) == 7);
  CHECK(both.at(1) == 9);
  CHECK(both.describe() == "tracks:even=7,odd=9");
  CHECK(ReductionInput::parse(both.describe()) == both);

  const auto table = ReductionInput::tabulated({3, 1, 4});
  CHECK(table.at(1) == 3);
  CHECK(table.at(2) == 1);
  CHECK(table.at(3) == 4);
  CHECK(table.describe() == "table:3,1,4");
  CHECK(ReductionInput::parse(table.describe()) == table);
  CHECK_THROWS_AS(table.at(4), std::out_of_range);
  CHECK_THROWS_AS(table.at(0), std::out_of_range);

  CHECK_THROWS_AS(ReductionInput::parse("bogus"), ParseError);
  CHECK_THROWS_AS(ReductionInput::parse("evens=x"), ParseError);
  CHECK_THROWS_AS(ReductionInput::parse("tracks:even=1"), ParseError);
}

TEST_CASE("clamp_input: mode floors") {
  const auto c100 = ReductionInput::custom(ReductionInput::Track{true, 100},
                                           ReductionInput::Track{true, 100});
  CHECK(cantor::clamp_input(c100, 5, ClampMode::normal) == 27);
  CHECK(cantor::clamp_input(c100, 40, ClampMode::normal) == 40);

  const auto c3 = ReductionInput::custom(ReductionInput::Track{true, 3},
                                         ReductionInput::Track{true, 3});
  CHECK(cantor::clamp_input(c3, 7, ClampMode::dn) == 3);
  CHECK(cantor::clamp_input(ReductionInput::identity(), 7, ClampMode::dn) == 7);

  const auto c0 = ReductionInput::custom(ReductionInput::Track{true, 0},
                                         ReductionInput::Track{true, 0});
  CHECK(cantor::clamp_input(c0, 1, ClampMode::two_track) == 2);
  CHECK(cantor::clamp_input(c0, 9, ClampMode::dn) == 0);
  CHECK(cantor::clamp_input(ReductionInput::identity(), 1, ClampMode::normal) == 27);
}

TEST_CASE("theta_op: thinning oracle") {
  std::vector<std::uint64_t> digits{0, 7, 0, 0, 3, 0};
  const std::vector<std::uint64_t> bases(6, 10);
  const SurgeryLog log = cantor::theta_op(window_of(digits, bases, 11), 1, 2);
  CHECK(digits == std::vector<std::uint64_t>{0, 7, 0, 1, 3, 1});
  REQUIRE(log.edits.size() == 2);
  CHECK(log.edits[0].index == 14);
  CHECK(log.edits[0].old_digit == 0);
  CHECK(log.edits[0].new_digit == 1);
  CHECK(log.edits[0].reason == "theta");
  CHECK(log.edits[1].index == 16);
  CHECK(log.edits[1].reason == "theta");
}

TEST_CASE("theta_op: no zero runs and oversize ell leave the window unchanged") {
  std::vector<std::uint64_t> digits{1, 2, 3};
  const std::vector<std::uint64_t> bases(3, 4);
  CHECK(cantor::theta_op(window_of(digits, bases), 1, 1).edits.empty());
  CHECK(digits == std::vector<std::uint64_t>{1, 2, 3});

  std::vector<std::uint64_t> two{0, 1, 0};
  const std::vector<std::uint64_t> b2(3, 4);
  CHECK(cantor::theta_op(window_of(two, b2), 1, 3).edits.empty());
  CHECK(two == std::vector<std::uint64_t>{0, 1, 0});
}

TEST_CASE("theta_op: overlapping occurrences all count as starts") {
  std::vector<std::uint64_t> digits{0, 0, 0, 1};
  const std::vector<std::uint64_t> bases(4, 4);
  const SurgeryLog log = cantor::theta_op(window_of(digits, bases), 2, 1);
  // Starts of all-zero length-2 occurrences: {1, 2}; both leading digits rise.
  CHECK(digits == std::vector<std::uint64_t>{1, 1, 0, 1});
  CHECK(log.edits.size() == 2);
}

TEST_CASE("theta_op: edit count equals floor(|A|/ell) on random windows") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 60; ++trial) {
    const std::uint64_t n = 40 + rng() % 80;
    std::vector<std::uint64_t> digits(n);
    const std::vector<std::uint64_t> bases(n, 3);
    for (auto& d : digits) d = rng() % 3 == 0 ? (rng() % 3) : 0;  // zero-rich
    const std::uint64_t k = 1 + rng() % 3;
    const std::uint64_t ell = 1 + rng() % 4;
    std::uint64_t occurrences = 0;
    for (std::uint64_t i = 0; i + k <= n; ++i) {
      bool all_zero = true;
      for (std::uint64_t t = 0; t < k; ++t) all_zero &= digits[i + t] == 0;
      occurrences += all_zero;
    }
    auto work = digits;
    const SurgeryLog log = cantor::theta_op(window_of(work, bases), k, ell);
    CHECK(log.edits.size() == occurrences / ell);
    for (const auto& e : log.edits) {
      CHECK(digits[e.index - 1] == 0);
      CHECK(work[e.index - 1] == 1);
    }
  }
}

TEST_CASE("theta_op: argument validation") {
  std::vector<std::uint64_t> digits{0, 0};
  const std::vector<std::uint64_t> bases(2, 4);
  CHECK_THROWS_AS(cantor::theta_op(window_of(digits, bases), 0, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(cantor::theta_op(window_of(digits, bases), 1, 0),
                  std::invalid_argument);
  const std::vector<std::uint64_t> short_bases(1, 4);
  CHECK_THROWS_AS(
      cantor::theta_op(DigitWindow{1, std::span<std::uint64_t>(digits),
                                   std::span<const std::uint64_t>(short_bases)},
                       1, 1),
      std::invalid_argument);
}

TEST_CASE("xi_op: saturation oracle and idempotence") {
  std::vector<std::uint64_t> digits{7, 8, 9, 2};
  const std::vector<std::uint64_t> bases(4, 10);
  const SurgeryLog log = cantor::xi_op(window_of(digits, bases, 5), 3);
  CHECK(digits == std::vector<std::uint64_t>{7, 9, 9, 2});
  REQUIRE(log.edits.size() == 1);
  CHECK(log.edits[0].index == 6);
  CHECK(log.edits[0].old_digit == 8);
  CHECK(log.edits[0].new_digit == 9);
  CHECK(log.edits[0].reason == "xi");

  CHECK(cantor::xi_op(window_of(digits, bases, 5), 3).edits.empty());
  CHECK(digits == std::vector<std::uint64_t>{7, 9, 9, 2});
}

TEST_CASE("xi_op: no digit can fire when the base is below 2k+2") {
  std::vector<std::uint64_t> digits{0, 1, 2, 3, 4, 5, 6};
  const std::vector<std::uint64_t> bases(7, 7);  // q = 7 < 2*3+2
  CHECK(cantor::xi_op(window_of(digits, bases), 3).edits.empty());
  CHECK(digits == std::vector<std::uint64_t>{0, 1, 2, 3, 4, 5, 6});
}

TEST_CASE("xi_op: exact threshold is inclusive and q-1 is skipped") {
  std::vector<std::uint64_t> digits{6, 7, 5};
  const std::vector<std::uint64_t> bases(3, 8);  // k=3: fires iff 4d >= 24
  const SurgeryLog log = cantor::xi_op(window_of(digits, bases), 3);
  CHECK(digits == std::vector<std::uint64_t>{7, 7, 5});
  REQUIRE(log.edits.size() == 1);
  CHECK(log.edits[0].index == 1);
}

TEST_CASE("r_func: both pivot branches") {
  const PivotShift up = cantor::r_func(Block({0, 2}));
  CHECK(up.from == 0);
  CHECK(up.to == 1);
  CHECK(up(0) == 1);
  CHECK(up(2) == 2);

  const PivotShift down = cantor::r_func(Block({3}));
  CHECK(down.from == 3);
  CHECK(down.to == 2);
  CHECK(down(3) == 2);
  CHECK(down(0) == 0);
  CHECK(down(4) == 4);
}

TEST_CASE("make_reference: deterministic, valid, and uniform enough") {
  const auto seq = BasicSequence::parse("const:4");
  const DigitStream a = cantor::make_reference(seq, 123, 1000);
  const DigitStream b = cantor::make_reference(seq, 123, 1000);
  REQUIRE(a.length() == 1000);
  CHECK(std::equal(a.raw().begin(), a.raw().end(), b.raw().begin()));
  CHECK_NOTHROW(cantor::validate(a));
  for (std::uint64_t i = 1; i <= a.length(); ++i) CHECK(a.digit(i) < 4);

  const DigitStream c = cantor::make_reference(seq, 124, 1000);
  CHECK(!std::equal(a.raw().begin(), a.raw().end(), c.raw().begin()));

  // A fresh uniform stream should sit close to its expected block counts.
  const auto two = BasicSequence::parse("const:2");
  const DigitStream d = cantor::make_reference(two, 2024, 1000000);
  const auto report = cantor::test_normal(d, 2, {999999});
  REQUIRE(!report.max_deviation.infinite);
  CHECK(report.max_deviation.value < cantor::Rational(1, 20));
}

TEST_CASE("derived seeds: stable and spread") {
  const std::uint64_t s0 = cantor::derived_seed(42, 0);
  const std::uint64_t s1 = cantor::derived_seed(42, 1);
  CHECK(s0 == cantor::derived_seed(42, 0));
  CHECK(s0 != s1);
  const auto set = cantor::make_seed_set(42, 3);
  REQUIRE(set.size() == 4);
  CHECK(set.at(0) == s0);
  CHECK(set.at(1) == s1);
  CHECK(set.at(3) == cantor::derived_seed(42, 3));
}

TEST_CASE("surgery log: CSV round-trip, commas in reasons, replay") {
  SurgeryLog log;
  log.edits.push_back({2, 2, 3, "xi"});
  log.edits.push_back({5, 3, 1, "r"});
  log.edits.push_back({7, 0, 1, "theta, pass 2"});
  log.warnings.push_back("not serialized");

  const std::string path = "surgery_roundtrip.tmp";
  cantor::write_surgery_log(path, log);
  CHECK(slurp(path) ==
        "index,old,new,reason\n2,2,3,xi\n5,3,1,r\n7,0,1,theta, pass 2\n");
  const SurgeryLog back = cantor::read_surgery_log(path);
  REQUIRE(back.edits.size() == 3);
  CHECK(back.warnings.empty());
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.edits[i].index == log.edits[i].index);
    CHECK(back.edits[i].old_digit == log.edits[i].old_digit);
    CHECK(back.edits[i].new_digit == log.edits[i].new_digit);
    CHECK(back.edits[i].reason == log.edits[i].reason);
  }
  std::remove(path.c_str());

  const auto seq = BasicSequence::parse("const:4");
  const DigitStream z(seq, {0, 2, 1, 3, 3, 0, 0});
  SurgeryLog ok;
  ok.edits.push_back({2, 2, 3, "xi"});
  ok.edits.push_back({5, 3, 1, "r"});
  const DigitStream out = cantor::replay_surgery(z, ok);
  CHECK(out.digit(2) == 3);
  CHECK(out.digit(5) == 1);
  CHECK(out.digit(1) == 0);

  SurgeryLog wrong_old;
  wrong_old.edits.push_back({2, 1, 3, "xi"});
  CHECK_THROWS_AS(cantor::replay_surgery(z, wrong_old), ConstructionError);
  SurgeryLog too_big;
  too_big.edits.push_back({2, 2, 4, "xi"});
  CHECK_THROWS_AS(cantor::replay_surgery(z, too_big), ConstructionError);
  SurgeryLog out_of_range;
  out_of_range.edits.push_back({8, 0, 1, "theta"});
  CHECK_THROWS_AS(cantor::replay_surgery(z, out_of_range), ConstructionError);
  SurgeryLog zero_index;
  zero_index.edits.push_back({0, 0, 1, "theta"});
  CHECK_THROWS_AS(cantor::replay_surgery(z, zero_index), ConstructionError);
}

TEST_CASE("surgery log: malformed files carry path and line number") {
  const std::string path = "surgery_bad.tmp";
  const auto message_of = [&]() -> std::string {
    try {
      cantor::read_surgery_log(path);
    } catch (const ParseError& e) {
      return e.what();
    }
    return {};
  };
  spit(path, "wrong,header\n1,0,1,theta\n");
  CHECK(message_of().find("surgery_bad.tmp:1:") != std::string::npos);
  spit(path, "index,old,new,reason\n1,0,1,theta\n\n2,0,1,theta\n");
  CHECK(message_of().find(":3:") != std::string::npos);
  spit(path, "index,old,new,reason\n1,0,one,theta\n");
  CHECK(message_of().find(":2:") != std::string::npos);
  spit(path, "index,old,new,reason\n1,0,1\n");
  CHECK(message_of().find(":2:") != std::string::npos);
  std::remove(path.c_str());
}
