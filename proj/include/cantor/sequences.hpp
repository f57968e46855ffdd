#pragma once

// Basic sequences: the per-position bases (q_i), q_i >= 2, of a Cantor
// series, represented by closed-form rules.
//
// Rules:
//   Constant(b)              q_i = b
//   Linear(slope, offset)    q_i = slope*i + offset
//   ExplicitThen(prefix, T)  q_i = prefix[i-1] for i <= len, else T(i)
//                            (the tail rule is evaluated at the absolute
//                            index i, so a prefix is an override of the
//                            first values, not a shift of the tail)
//   Squeezed(m, base)        q_i = max(2, floor((m+1)/(m+2) * base(i)))
//   Piecewise(segs, base)    per-position squeeze whose index switches at
//                            given boundaries: for i in (b_{j-1}, b_j] the
//                            squeeze index is m_j; past the last boundary the
//                            final index persists (glued composite bases)
//
// Divergence metadata: whether Q_n^(k) = sum_j 1/(q_j...q_{j+k-1}) tends to
// infinity is undecidable for arbitrary rules, so every sequence carries a
// declaration.  k-divergence is downward closed in k (all bases are >= 2),
// hence a declaration is normalized to either "all k" or a maximal k0
// ("div_k"); div_k = 0 declares 1-convergence.  The "infinite in limit"
// flag declares q_i -> infinity.  Rule constructors derive truthful
// defaults; parse/with_traits may override them, and validate_traits
// checks declarations against partial sums heuristically.

#include "cantor/numeric.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cantor {

struct SeqTraits {
  bool div_all = false;
  std::uint32_t div_k = 0;  // meaningful when !div_all; 0 = declared 1-convergent
  bool infinite_in_limit = false;

  bool divergent_at(std::uint32_t k) const { return div_all || k <= div_k; }
  bool operator==(const SeqTraits&) const = default;
};

class BasicSequence {
 public:
  static BasicSequence constant(std::uint64_t b);
  static BasicSequence linear(std::uint64_t slope, std::uint64_t offset);
  static BasicSequence explicit_then(std::vector<std::uint64_t> prefix,
                                     const BasicSequence& tail);
  static BasicSequence squeezed(std::uint64_t m, const BasicSequence& base);
  // segments = (boundary, squeeze index) pairs with strictly increasing
  // boundaries >= 1; segment j covers positions (b_{j-1}, b_j], the last
  // index persists beyond b_last.
  static BasicSequence piecewise_squeezed(
      std::vector<std::pair<std::uint64_t, std::uint64_t>> segments,
      const BasicSequence& base);

  // q_i for i >= 1.  Total for every rule; throws std::overflow_error if the
  // value would not fit in 64 bits.
  std::uint64_t base_at(std::uint64_t i) const;

  // out[t] = q_{first_i + t}; the bulk accessor used by streaming kernels.
  void fill_bases(std::uint64_t first_i, std::span<std::uint64_t> out) const;
  std::vector<std::uint64_t> bases(std::uint64_t n) const;  // q_1..q_n

  const SeqTraits& traits() const { return traits_; }
  // Returns a copy with explicitly declared metadata (overrides defaults).
  BasicSequence with_traits(SeqTraits t) const;

  // Number of leading positions that may precede the rule's eventually
  // monotone-nondecreasing regime (explicit prefixes).  Indicator checks of
  // "eventually" properties probe past this point.
  std::uint64_t irregular_prefix() const;

  // Canonical spec string; metadata suffix appears only when it differs from
  // the rule-derived default.  parse(canonical()) reproduces the sequence.
  std::string canonical() const;
  static BasicSequence parse(std::string_view spec);

  bool operator==(const BasicSequence& other) const {
    return canonical() == other.canonical();
  }

  struct Node;  // opaque rule tree; defined in sequences.cpp

 private:
  std::shared_ptr<const Node> node_;
  SeqTraits traits_;

  static SeqTraits derived_traits(const Node& node);
  BasicSequence(std::shared_ptr<const Node> node, SeqTraits t);
};

// P_m: the squeezed sequence max(2, floor((m+1)/(m+2) q_i)).
BasicSequence derive_Pm(const BasicSequence& seq, std::uint64_t m);

// Q_n^(k): exact expected number of occurrences of the all-zero block of
// length k with a start in [1, n].
Rational partial_expectation_0k(const BasicSequence& seq, std::uint32_t k,
                                std::uint64_t n);

// (1/N) * sum_{i<=N} 1/q_i — the averaging diagnostic.
Rational salat_average(const BasicSequence& seq, std::uint64_t n);

// Heuristic metadata validation: declared k-divergence is probed by partial
// sums of Q^(k) against `threshold` at `horizon` (early exit on success);
// declared limit behaviour is probed by comparing bases at two horizons.
// Returns human-readable warnings; empty means no mismatch was detected.
std::vector<std::string> validate_traits(const BasicSequence& seq,
                                         double threshold = 50.0,
                                         std::uint64_t horizon = 1000000);

}  // namespace cantor
