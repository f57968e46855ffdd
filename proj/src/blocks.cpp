#include "cantor/blocks.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>

namespace cantor {

namespace {

template <typename Int>
Int parse_uint(std::string_view text, const char* what) {
  Int out{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
    throw ParseError(std::string("invalid ") + what + ": '" + std::string(text) + "'");
  return out;
}

}  // namespace

Block::Block(std::vector<std::uint64_t> word) : word_(std::move(word)) {
  if (word_.empty()) throw std::invalid_argument("blocks are nonempty");
}

std::uint64_t Block::weight() const {
  std::uint64_t s = 0;
  for (auto e : word_) s += e + 1;
  return s;
}

Block Block::zeros(std::uint64_t k) {
  return Block(std::vector<std::uint64_t>(k, 0));
}

Block Block::ones(std::uint64_t k) {
  return Block(std::vector<std::uint64_t>(k, 1));
}

Block Block::parse(std::string_view text) {
  if (text.size() < 3 || text.front() != '[' || text.back() != ']')
    throw ParseError("block literal must look like [e1,e2,...]: '" +
                     std::string(text) + "'");
  auto body = text.substr(1, text.size() - 2);
  std::vector<std::uint64_t> word;
  while (true) {
    const auto comma = body.find(',');
    word.push_back(parse_uint<std::uint64_t>(body.substr(0, comma), "block entry"));
    if (comma == std::string_view::npos) break;
    body.remove_prefix(comma + 1);
  }
  return Block(std::move(word));
}

std::string Block::literal() const {
  std::string out = "[";
  for (std::size_t t = 0; t < word_.size(); ++t) {
    if (t) out += ',';
    out += std::to_string(word_[t]);
  }
  out += ']';
  return out;
}

bool indicator(const Block& B, std::uint64_t j, const BasicSequence& seq) {
  if (j == 0) throw std::out_of_range("indicator: start indices begin at 1");
  for (std::uint64_t t = 1; t <= B.length(); ++t)
    if (B.at(t) >= seq.base_at(j + t - 1)) return false;
  return true;
}

Rational expectation(const Block& B, std::uint64_t m, std::uint64_t n,
                     const BasicSequence& seq) {
  if (m == 0 || m > n)
    throw std::invalid_argument("expectation: requires 1 <= m <= n");
  const std::uint64_t k = B.length();
  // Bases q_m .. q_{n+k-1} feed both the indicators and the window products.
  std::vector<std::uint64_t> bases(n + k - m);
  seq.fill_bases(m, bases);
  auto base = [&](std::uint64_t i) { return bases[i - m]; };

  BigInt prod = 1;
  for (std::uint64_t i = m; i < m + k; ++i) prod *= base(i);
  PairwiseRationalSum sum;
  bool nonempty = false;
  for (std::uint64_t j = m;; ++j) {
    bool ind = true;
    for (std::uint64_t t = 1; t <= k; ++t)
      if (B.at(t) >= base(j + t - 1)) {
        ind = false;
        break;
      }
    if (ind) {
      sum.add_reciprocal(prod);
      nonempty = true;
    }
    if (j == n) break;
    prod /= base(j);
    prod *= base(j + k);
  }
  return nonempty ? sum.value() : Rational(0);
}

std::uint64_t count(const DigitStream& d, const Block& B, std::uint64_t m,
                    std::uint64_t n) {
  if (m == 0) throw std::invalid_argument("count: start indices begin at 1");
  if (m > n) return 0;
  const std::uint64_t k = B.length();
  if (n + k - 1 > d.length())
    throw std::out_of_range("count: needs digits up to " + std::to_string(n + k - 1) +
                            " but only " + std::to_string(d.length()) + " are stored");
  const auto digits = d.raw();
  const auto& word = B.word();
  std::uint64_t total = 0;
  for (std::uint64_t i = m; i <= n; ++i) {
    bool match = true;
    for (std::uint64_t t = 0; t < k; ++t)
      if (digits[i - 1 + t] != word[t]) {
        match = false;
        break;
      }
    total += match;
  }
  return total;
}

std::vector<Block> enumerate_blocks(std::uint64_t p) {
  if (p == 0) throw std::invalid_argument("enumerate_blocks: p >= 1");
  std::vector<Block> out;
  out.reserve(p);
  // Weight tier s holds the e-vectors with sum_t (e_t + 1) = s: for each
  // length k <= s, the compositions of s - k into k parts >= 0, in
  // lexicographic order.
  for (std::uint64_t s = 1; out.size() < p; ++s) {
    for (std::uint64_t k = 1; k <= s && out.size() < p; ++k) {
      const std::uint64_t rest = s - k;
      // Lex-first composition: everything in the final slot.
      std::vector<std::uint64_t> e(k, 0);
      e[k - 1] = rest;
      for (;;) {
        out.emplace_back(e);
        if (out.size() == p) break;
        // Advance to the lex-next composition with the same sum: move one
        // unit from the tail block onto the slot left of its first element.
        std::uint64_t t = k;
        while (t > 0 && e[t - 1] == 0) --t;
        if (t <= 1) break;  // (rest,0,...,0) is lex-last
        const std::uint64_t tail = e[t - 1];
        e[t - 1] = 0;
        e[t - 2] += 1;
        e[k - 1] = tail - 1;
      }
    }
  }
  return out;
}

Goodness is_good(const Block& B, const BasicSequence& seq, std::uint64_t horizon,
                 const Rational& threshold) {
  const std::uint64_t k = B.length();
  const auto& traits = seq.traits();
  if (k > std::uint64_t(std::numeric_limits<std::uint32_t>::max()))
    return Goodness::not_good;

  // Declared convergence at k bounds the expectation of every length-k block.
  if (!traits.divergent_at(static_cast<std::uint32_t>(k))) return Goodness::not_good;

  // Declared k-divergence: goodness now rides on "indicator eventually 1".
  if (traits.infinite_in_limit) return Goodness::good;

  // Bases are eventually monotone nondecreasing for every rule kind, so an
  // indicator seen at 1 past the irregular prefix stays 1.
  const std::uint64_t start = seq.irregular_prefix() + 1;
  if (start <= horizon) {
    for (std::uint64_t j = start; j <= horizon;) {
      if (indicator(B, j, seq)) return Goodness::good;
      if (j == horizon) break;
      j = std::min(horizon, j * 2 + 1);
    }
    // Indicator 0 on the whole eventual (monotone) regime up to the horizon:
    // with bases not going to infinity this pins the expectation down.
    return Goodness::not_good;
  }

  // Irregular prefix extends past the horizon: fall back to the numeric
  // threshold heuristic on Q_horizon(B).
  const double thr = threshold.convert_to<double>();
  double sum = 0;
  double prod = 1;
  std::vector<std::uint64_t> window(k);
  seq.fill_bases(1, window);
  for (std::uint64_t t = 0; t < k; ++t) prod *= static_cast<double>(window[t]);
  double last_decade_gain = 0;
  bool tail_indicator_zero = true;
  for (std::uint64_t j = 1; j <= horizon; ++j) {
    bool ind = true;
    for (std::uint64_t t = 1; t <= k; ++t)
      if (B.at(t) >= seq.base_at(j + t - 1)) {
        ind = false;
        break;
      }
    if (ind && prod < 1e300) {
      const double gain = 1.0 / prod;
      sum += gain;
      if (10 * j >= 9 * horizon) last_decade_gain += gain;
    }
    if (ind && 10 * j >= 9 * horizon) tail_indicator_zero = false;
    if (sum >= thr) return Goodness::good;
    prod /= static_cast<double>(seq.base_at(j));
    prod *= static_cast<double>(seq.base_at(j + k));
  }
  if (tail_indicator_zero || last_decade_gain < 1e-9) return Goodness::not_good;
  return Goodness::unknown;
}

StarReport star_condition_check(const BlockCollection& C, const BasicSequence& seq,
                                std::uint64_t horizon, const Rational& threshold) {
  StarReport report;
  std::vector<Goodness> good(C.blocks.size());
  for (std::size_t i = 0; i < C.blocks.size(); ++i)
    good[i] = is_good(C.blocks[i], seq, horizon, threshold);

  for (std::size_t i = 0; i < C.blocks.size(); ++i) {
    const Block& B = C.blocks[i];
    StarEntry entry{B, good[i], false, std::nullopt, 0};
    if (good[i] == Goodness::good) {
      for (std::size_t j = 0; j < C.blocks.size() && !entry.satisfied; ++j) {
        if (good[j] != Goodness::good) continue;
        const Block& Bp = C.blocks[j];
        if (Bp.length() != B.length()) continue;
        for (std::uint64_t t = 1; t <= B.length() && !entry.satisfied; ++t) {
          bool separated = true;
          for (std::uint64_t tp = 1; tp <= Bp.length(); ++tp) {
            const std::uint64_t a = B.at(t), b = Bp.at(tp);
            const std::uint64_t gap = a > b ? a - b : b - a;
            if (gap <= 1) {
              separated = false;
              break;
            }
          }
          if (separated) {
            entry.satisfied = true;
            entry.partner = Bp;
            entry.witness_t = t;
          }
        }
      }
      if (!entry.satisfied) report.satisfied = false;
    }
    report.entries.push_back(std::move(entry));
  }
  return report;
}

BlockCollection read_block_collection(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  BlockCollection C;
  C.name = path;
  std::string line;
  std::uint64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r')
      throw ParseError(path + ": CRLF line endings; the format requires LF");
    if (line.empty())
      throw ParseError(path + ": blank line " + std::to_string(lineno));
    Block b = Block::parse(line);
    if (std::find(C.blocks.begin(), C.blocks.end(), b) != C.blocks.end())
      throw ParseError(path + ": duplicate block " + b.literal() + " at line " +
                       std::to_string(lineno));
    C.blocks.push_back(std::move(b));
  }
  if (C.blocks.empty()) throw ParseError(path + ": empty block collection");
  return C;
}

void write_block_collection(const std::string& path, const BlockCollection& C) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const auto& b : C.blocks) out << b.literal() << "\n";
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace cantor
