#include "doctest.h"

#include <string>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "cantor/sequences.hpp"

using cantor::BasicSequence;
using cantor::ParseError;
using cantor::Rational;
using cantor::SeqTraits;

TEST_CASE("base_at evaluates each rule kind") {
  CHECK(BasicSequence::constant(2).base_at(7) == 2);
  CHECK(BasicSequence::constant(10).base_at(1) == 10);
  CHECK(BasicSequence::linear(1, 1).base_at(3) == 4);  // q_i = i + 1
  CHECK(BasicSequence::linear(2, 0).base_at(5) == 10);
  CHECK(BasicSequence::linear(0, 6).base_at(123) == 6);

  const auto tail = BasicSequence::constant(9);
  const auto e = BasicSequence::explicit_then({5, 7}, tail);
  CHECK(e.base_at(1) == 5);
  CHECK(e.base_at(2) == 7);
  CHECK(e.base_at(3) == 9);

  // The tail rule is evaluated at the absolute index, not re-based.
  const auto e2 = BasicSequence::explicit_then({5, 7}, BasicSequence::linear(1, 1));
  CHECK(e2.base_at(3) == 4);
  CHECK(e2.base_at(10) == 11);
}

TEST_CASE("base_at rejects index zero and overflow") {
  CHECK_THROWS_AS(BasicSequence::constant(2).base_at(0), std::out_of_range);
  const auto big = BasicSequence::linear(2, 0);
  CHECK_THROWS_AS(big.base_at(std::uint64_t(1) << 63), std::overflow_error);
}

TEST_CASE("bases and fill_bases agree with base_at") {
  const auto seq = BasicSequence::explicit_then({3, 5}, BasicSequence::linear(1, 1));
  const auto v = seq.bases(6);
  REQUIRE(v.size() == 6);
  for (std::uint64_t i = 1; i <= 6; ++i) CHECK(v[i - 1] == seq.base_at(i));
  std::vector<std::uint64_t> window(4);
  seq.fill_bases(3, window);
  CHECK(window == std::vector<std::uint64_t>{4, 5, 6, 7});
}

TEST_CASE("every evaluated base is >= 2 across rule kinds") {
  const std::vector<BasicSequence> seqs = {
      BasicSequence::constant(2),
      BasicSequence::linear(1, 1),
      BasicSequence::linear(3, -1),
      BasicSequence::explicit_then({2, 2, 100}, BasicSequence::linear(0, 2)),
      cantor::derive_Pm(BasicSequence::constant(2), 0),
      cantor::derive_Pm(BasicSequence::linear(1, 1), 3),
  };
  for (const auto& seq : seqs) {
    std::vector<std::uint64_t> chunk(100000);
    seq.fill_bases(1, chunk);
    std::uint64_t min_q = ~std::uint64_t(0);
    for (auto q : chunk) min_q = std::min(min_q, q);
    CAPTURE(seq.canonical());
    CHECK(min_q >= 2);
  }
}

TEST_CASE("linear rule accepts negative offsets only when q_1 >= 2") {
  CHECK(BasicSequence::parse("linear:3:-1").base_at(1) == 2);
  CHECK_THROWS_AS(BasicSequence::parse("linear:2:-1"), ParseError);
  CHECK_THROWS_AS(BasicSequence::linear(1, 0), ParseError);
}

TEST_CASE("squeezed rule oracle values") {
  const auto q10 = BasicSequence::constant(10);
  CHECK(cantor::derive_Pm(q10, 0).base_at(4) == 5);   // floor(1*10/2)
  CHECK(cantor::derive_Pm(q10, 8).base_at(4) == 9);   // floor(9*10/10)
  CHECK(cantor::derive_Pm(BasicSequence::constant(2), 0).base_at(1) == 2);  // clamped
  CHECK(cantor::derive_Pm(BasicSequence::constant(2), 50).base_at(9) == 2);

  // P_m(i) <= q_i and P_m(i) >= 2 pointwise.
  const auto base = BasicSequence::linear(1, 1);
  for (std::uint64_t m : {0ull, 1ull, 7ull}) {
    const auto pm = cantor::derive_Pm(base, m);
    for (std::uint64_t i = 1; i <= 2000; ++i) {
      CHECK(pm.base_at(i) <= base.base_at(i));
      CHECK(pm.base_at(i) >= 2);
    }
  }
  // Larger m hugs the base sequence more closely.
  const auto p1 = cantor::derive_Pm(base, 1);
  const auto p9 = cantor::derive_Pm(base, 9);
  for (std::uint64_t i = 1; i <= 2000; ++i) CHECK(p1.base_at(i) <= p9.base_at(i));
}

TEST_CASE("piecewise squeeze: segment lookup, persistence, and round trip") {
  const auto base = BasicSequence::linear(1, 1);  // q_i = i + 1
  const auto px = BasicSequence::piecewise_squeezed({{4, 0}, {10, 3}}, base);

  // Segment 1 = positions 1..4 at squeeze 0, segment 2 = 5..10 at squeeze 3,
  // and the final squeeze index persists past the last boundary.
  const auto p0 = cantor::derive_Pm(base, 0);
  const auto p3 = cantor::derive_Pm(base, 3);
  for (std::uint64_t i = 1; i <= 4; ++i) CHECK(px.base_at(i) == p0.base_at(i));
  for (std::uint64_t i = 5; i <= 10; ++i) CHECK(px.base_at(i) == p3.base_at(i));
  for (std::uint64_t i = 11; i <= 40; ++i) CHECK(px.base_at(i) == p3.base_at(i));

  CHECK(px.canonical() == "glue:4:0,10:3;linear:1:1");
  CHECK(BasicSequence::parse(px.canonical()) == px);
  CHECK(px.irregular_prefix() == 10);

  // Traits are inherited from the base (p_i <= q_i termwise).
  CHECK(px.traits() == base.traits());

  // Malformed forms are rejected.
  CHECK_THROWS_AS(BasicSequence::parse("glue:4:0,4:1;const:10"), cantor::ParseError);
  CHECK_THROWS_AS(BasicSequence::parse("glue:0:2;const:10"), cantor::ParseError);
  CHECK_THROWS_AS(BasicSequence::parse("glue:;const:10"), cantor::ParseError);
  CHECK_THROWS_AS(BasicSequence::parse("glue:7:1"), cantor::ParseError);
  CHECK_THROWS_AS(
      BasicSequence::piecewise_squeezed({{5, 1}, {3, 2}}, base), cantor::ParseError);
  CHECK_THROWS_AS(BasicSequence::piecewise_squeezed({}, base), cantor::ParseError);

  // fill_bases agrees with base_at across a segment boundary.
  std::vector<std::uint64_t> got(12);
  px.fill_bases(1, got);
  for (std::uint64_t i = 1; i <= 12; ++i) CHECK(got[i - 1] == px.base_at(i));
}

TEST_CASE("traits defaults per rule kind") {
  const auto c = BasicSequence::constant(3);
  CHECK(c.traits().div_all);
  CHECK_FALSE(c.traits().infinite_in_limit);
  CHECK(c.traits().divergent_at(17));

  const auto lin = BasicSequence::linear(1, 1);
  CHECK_FALSE(lin.traits().div_all);
  CHECK(lin.traits().div_k == 1);
  CHECK(lin.traits().infinite_in_limit);
  CHECK(lin.traits().divergent_at(1));
  CHECK_FALSE(lin.traits().divergent_at(2));

  const auto flat = BasicSequence::linear(0, 5);
  CHECK(flat.traits().div_all);
  CHECK_FALSE(flat.traits().infinite_in_limit);

  // ExplicitThen and Squeezed inherit from the continuation rule.
  const auto e = BasicSequence::explicit_then({7}, lin);
  CHECK(e.traits() == lin.traits());
  CHECK(cantor::derive_Pm(c, 4).traits() == c.traits());
}

TEST_CASE("declared 1-convergence means no divergence at any k") {
  const auto seq = BasicSequence::parse("const:2@div=0@iil=0");
  CHECK_FALSE(seq.traits().div_all);
  CHECK(seq.traits().div_k == 0);
  CHECK_FALSE(seq.traits().divergent_at(1));
}

TEST_CASE("irregular prefix length") {
  CHECK(BasicSequence::constant(2).irregular_prefix() == 0);
  CHECK(BasicSequence::linear(1, 1).irregular_prefix() == 0);
  const auto e = BasicSequence::explicit_then({5, 7}, BasicSequence::constant(9));
  CHECK(e.irregular_prefix() == 2);
  CHECK(cantor::derive_Pm(e, 3).irregular_prefix() == 2);
  const auto nested =
      BasicSequence::explicit_then({2}, BasicSequence::explicit_then({3, 3, 3}, e));
  CHECK(nested.irregular_prefix() == 3);
}

TEST_CASE("parse/canonical round trips and metadata elision") {
  // Rule-derived metadata is elided from the canonical form.
  CHECK(BasicSequence::parse("const:2").canonical() == "const:2");
  CHECK(BasicSequence::parse("const:2@div=all@iil=0").canonical() == "const:2");
  CHECK(BasicSequence::parse("linear:1:1@div=1@iil=1").canonical() == "linear:1:1");

  // Non-default metadata is kept, with @div normalized to the largest k.
  CHECK(BasicSequence::parse("linear:1:1@div=2@iil=1").canonical() ==
        "linear:1:1@div=2@iil=1");
  CHECK(BasicSequence::parse("const:2@div=1,2@iil=0").canonical() ==
        "const:2@div=2@iil=0");
  CHECK(BasicSequence::parse("const:2@div=0@iil=0").canonical() ==
        "const:2@div=0@iil=0");
  CHECK(BasicSequence::parse("linear:1:1@div=all@iil=1").canonical() ==
        "linear:1:1@div=all@iil=1");

  const std::vector<std::string> already_canonical = {
      "const:2",
      "linear:1:1",
      "linear:0:7",
      "explicit:5,7;const:9",
      "pm:3;linear:2:0",
      "explicit:2;pm:1;explicit:3,3;const:4",
      "pm:0;pm:1;const:10",
      "explicit:17;linear:1:1@div=2@iil=1",
  };
  for (const auto& s : already_canonical) {
    CAPTURE(s);
    const auto seq = BasicSequence::parse(s);
    CHECK(seq.canonical() == s);
    CHECK(BasicSequence::parse(seq.canonical()) == seq);
  }
}

TEST_CASE("parse rejects malformed specs") {
  const std::vector<std::string> bad = {
      "",
      "const",
      "const:",
      "const:1",
      "const:x",
      "const:2:3x",
      "bogus:3",
      "linear:1",
      "linear:0:1",
      "linear:a:b",
      "explicit:;const:2",
      "explicit:2",
      "explicit:2,;const:2",
      "explicit:1;const:2",
      "pm:2",
      "pm:;const:2",
      "const:2@div=",
      "const:2@div=x@iil=0",
      "const:2@iil=5",
      "const:2@foo=1",
      "const:2@div",
      "const:2@",
  };
  for (const auto& s : bad) {
    CAPTURE(s);
    CHECK_THROWS_AS(BasicSequence::parse(s), ParseError);
  }
}

TEST_CASE("with_traits overrides survive the canonical round trip") {
  auto seq = BasicSequence::constant(2);
  SeqTraits t{.div_all = false, .div_k = 3, .infinite_in_limit = false};
  seq = seq.with_traits(t);
  CHECK(seq.canonical() == "const:2@div=3@iil=0");
  CHECK(BasicSequence::parse(seq.canonical()).traits() == t);
}

TEST_CASE("partial expectation of the zero block: oracles") {
  using cantor::partial_expectation_0k;
  // q = (2,3,4): 1/2 + 1/3 + 1/4 = 13/12.
  CHECK(partial_expectation_0k(BasicSequence::linear(1, 1), 1, 3) == Rational(13, 12));
  // Constant base 3, pairs: 9 * (1/9) = 1.
  CHECK(partial_expectation_0k(BasicSequence::constant(3), 2, 9) == Rational(1));
  CHECK(partial_expectation_0k(BasicSequence::constant(3), 2, 0) == Rational(0));
  // Closed form n / b^k for constant sequences.
  for (std::uint32_t k = 1; k <= 4; ++k)
    for (std::uint64_t n : {1ull, 5ull, 31ull})
      CHECK(partial_expectation_0k(BasicSequence::constant(2), k, n) ==
            Rational(n, std::uint64_t(1) << k));
  // Mixed bases, by hand: q=(5,7,9,...), k=2, n=2: 1/35 + 1/63 = 14/315 = 2/45.
  const auto e = BasicSequence::explicit_then({5, 7}, BasicSequence::constant(9));
  CHECK(partial_expectation_0k(e, 2, 2) == Rational(2, 45));
}

TEST_CASE("partial expectation increments match the window product") {
  using cantor::partial_expectation_0k;
  const auto seq = BasicSequence::linear(1, 1);
  for (std::uint32_t k = 1; k <= 3; ++k) {
    for (std::uint64_t n = 1; n <= 40; ++n) {
      cantor::BigInt prod = 1;
      for (std::uint64_t j = n; j < n + k; ++j) prod *= seq.base_at(j);
      CHECK(partial_expectation_0k(seq, k, n) - partial_expectation_0k(seq, k, n - 1) ==
            Rational(1, prod));
    }
  }
}

TEST_CASE("salat average oracles") {
  using cantor::salat_average;
  CHECK(salat_average(BasicSequence::constant(2), 4) == Rational(1, 2));
  CHECK(salat_average(BasicSequence::linear(1, 1), 2) == Rational(5, 12));
  CHECK_THROWS_AS(salat_average(BasicSequence::constant(2), 0), std::invalid_argument);

  // For q_i = i+1 the average of reciprocals decays like log(N)/N.
  const auto v = salat_average(BasicSequence::linear(1, 1), 10000);
  const double d = static_cast<double>(boost::multiprecision::cpp_bin_float_50(v));
  CHECK(d < 1e-3);
  CHECK(d > 8e-4);
}

TEST_CASE("trait validation heuristics") {
  // Constant sequences: declared metadata is confirmed quickly.
  CHECK(cantor::validate_traits(BasicSequence::constant(2)).empty());

  // Truthful linear metadata: the 1-divergent partial sum grows only like
  // log(horizon), so the threshold heuristic reports it as inconclusive.
  const auto lin_warn = cantor::validate_traits(BasicSequence::linear(1, 1));
  REQUIRE(lin_warn.size() == 1);
  CHECK(lin_warn[0].find("1-divergence") != std::string::npos);
  CHECK(lin_warn[0].find("inconclusive") != std::string::npos);

  // A lowered threshold lets the same sum clear the bar.
  CHECK(cantor::validate_traits(BasicSequence::linear(1, 1), 10.0).empty());

  // Overclaimed divergence on a linear rule is reported for the claimed k.
  const auto over = cantor::validate_traits(
      BasicSequence::parse("linear:1:1@div=2@iil=1"), 10.0);
  REQUIRE(over.size() == 1);
  CHECK(over[0].find("2-divergence") != std::string::npos);

  // Underclaimed divergence: constant base declared 1-convergent.
  const auto under =
      cantor::validate_traits(BasicSequence::parse("const:2@div=0@iil=0"), 10.0);
  REQUIRE(under.size() == 1);
  CHECK(under[0].find("k=1") != std::string::npos);

  // Growth mismatch: linear bases declared not-infinite-in-limit.
  const auto growth =
      cantor::validate_traits(BasicSequence::parse("linear:1:1@div=1@iil=0"), 10.0);
  REQUIRE(growth.size() == 1);
  CHECK(growth[0].find("infinite-in-limit") != std::string::npos);
}
