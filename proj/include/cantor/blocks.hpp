#pragma once

// Blocks of digit values, their canonical enumeration, occurrence indicators,
// exact expectations, occurrence counts, goodness classification, and the
// separation hypothesis check for block collections.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cantor/digits.hpp"
#include "cantor/numeric.hpp"
#include "cantor/sequences.hpp"

namespace cantor {

// A nonempty finite word of digit values e_1..e_k.
class Block {
 public:
  explicit Block(std::vector<std::uint64_t> word);

  std::uint64_t length() const { return word_.size(); }
  // The weight sum_t (e_t + 1); blocks are enumerated by ascending weight.
  std::uint64_t weight() const;
  // 1-based entry access: B(t).
  std::uint64_t at(std::uint64_t t) const { return word_.at(t - 1); }
  const std::vector<std::uint64_t>& word() const { return word_; }

  static Block zeros(std::uint64_t k);
  static Block ones(std::uint64_t k);

  // Literal syntax "[e1,e2,...]".
  static Block parse(std::string_view text);
  std::string literal() const;

  bool operator==(const Block& other) const = default;

 private:
  std::vector<std::uint64_t> word_;
};

// Ordered list of distinct blocks.
struct BlockCollection {
  std::string name;
  std::vector<Block> blocks;
};

// I_{B,j}: 1 iff e_t < base_at(seq, j+t-1) for every t.
bool indicator(const Block& B, std::uint64_t j, const BasicSequence& seq);

// Q_{m,n}(B): exact expected number of occurrences with a start in [m,n].
Rational expectation(const Block& B, std::uint64_t m, std::uint64_t n,
                     const BasicSequence& seq);

// N_{m,n}(B, d): occurrences of B with a start in [m,n].  The block must fit
// for every candidate start: requires n + |B| - 1 <= d.length().
std::uint64_t count(const DigitStream& d, const Block& B, std::uint64_t m,
                    std::uint64_t n);

// First p blocks in canonical order: ascending weight, then ascending length,
// then lexicographic.  The i-th block (1-based) has length <= i.
std::vector<Block> enumerate_blocks(std::uint64_t p);

enum class Goodness { good, not_good, unknown };

// Classifies whether B has infinite expectation under seq.
//  * declared convergence at k = |B| (metadata) forces not_good;
//  * declared k-divergence plus indicator eventually 1 gives good; for
//    infinite-in-limit sequences the indicator clause always holds;
//  * otherwise falls back to comparing Q_horizon(B) against threshold, with
//    a strong negative signal mapping to not_good and the rest to unknown.
Goodness is_good(const Block& B, const BasicSequence& seq,
                 std::uint64_t horizon = 100000,
                 const Rational& threshold = Rational(50));

struct StarEntry {
  Block block;
  Goodness goodness;
  bool satisfied = false;                // only meaningful for good blocks
  std::optional<Block> partner;          // witness B'
  std::uint64_t witness_t = 0;           // position t in B with the gap
};

struct StarReport {
  bool satisfied = true;  // all good blocks found a partner
  std::vector<StarEntry> entries;
};

// Separation hypothesis over a collection: every good B in C needs a good
// B' in C of the same length and some t with |B(t) - B'(t')| > 1 for all t'.
StarReport star_condition_check(const BlockCollection& C, const BasicSequence& seq,
                                std::uint64_t horizon = 100000,
                                const Rational& threshold = Rational(50));

// Collection files: one block literal per line, LF endings.
BlockCollection read_block_collection(const std::string& path);
void write_block_collection(const std::string& path, const BlockCollection& C);

}  // namespace cantor
