#include "cantor/sequences.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <limits>

namespace cantor {

struct BasicSequence::Node {
  enum class Kind { Constant, Linear, ExplicitThen, Squeezed, Piecewise } kind;
  std::uint64_t value = 0;  // Constant: b; Linear: slope; Squeezed: m
  std::int64_t offset = 0;  // Linear only
  std::vector<std::uint64_t> prefix;    // ExplicitThen values / Piecewise boundaries
  std::vector<std::uint64_t> segments;  // Piecewise per-segment squeeze indices
  std::shared_ptr<const Node> child;  // ExplicitThen tail / Squeezed, Piecewise base
};

namespace {

using Node = BasicSequence::Node;
using Kind = Node::Kind;

std::uint64_t squeeze_base(std::uint64_t m, std::uint64_t q) {
  const unsigned __int128 scaled =
      static_cast<unsigned __int128>(m + 1) * q / (m + 2);
  return std::max<std::uint64_t>(2, static_cast<std::uint64_t>(scaled));
}

std::uint64_t node_base_at(const Node& node, std::uint64_t i) {
  switch (node.kind) {
    case Kind::Constant:
      return node.value;
    case Kind::Linear: {
      const __int128 v =
          static_cast<__int128>(node.value) * static_cast<__int128>(i) + node.offset;
      if (v < 2 || v > static_cast<__int128>(std::numeric_limits<std::uint64_t>::max()))
        throw std::overflow_error("linear base out of range at i=" + std::to_string(i));
      return static_cast<std::uint64_t>(v);
    }
    case Kind::ExplicitThen:
      if (i <= node.prefix.size()) return node.prefix[i - 1];
      return node_base_at(*node.child, i);
    case Kind::Squeezed:
      return squeeze_base(node.value, node_base_at(*node.child, i));
    case Kind::Piecewise: {
      // Segment j covers (boundary[j-1], boundary[j]]; indices beyond the
      // last boundary keep the final segment's squeeze index.
      const auto& bs = node.prefix;
      const auto it = std::lower_bound(bs.begin(), bs.end(), i);
      const std::size_t seg =
          it == bs.end() ? node.segments.size() - 1
                         : static_cast<std::size_t>(it - bs.begin());
      return squeeze_base(node.segments[seg], node_base_at(*node.child, i));
    }
  }
  throw std::logic_error("unreachable");
}

std::uint64_t node_irregular_prefix(const Node& node) {
  switch (node.kind) {
    case Kind::Constant:
    case Kind::Linear:
      return 0;
    case Kind::ExplicitThen:
      return std::max<std::uint64_t>(node.prefix.size(),
                                     node_irregular_prefix(*node.child));
    case Kind::Squeezed:
      return node_irregular_prefix(*node.child);
    case Kind::Piecewise:
      // The squeeze index varies up to (and including) the last boundary.
      return std::max(node.prefix.back(), node_irregular_prefix(*node.child));
  }
  throw std::logic_error("unreachable");
}

std::string node_canonical(const Node& node) {
  switch (node.kind) {
    case Kind::Constant:
      return "const:" + std::to_string(node.value);
    case Kind::Linear:
      return "linear:" + std::to_string(node.value) + ":" + std::to_string(node.offset);
    case Kind::ExplicitThen: {
      std::string out = "explicit:";
      for (std::size_t t = 0; t < node.prefix.size(); ++t) {
        if (t) out += ',';
        out += std::to_string(node.prefix[t]);
      }
      out += ';';
      out += node_canonical(*node.child);
      return out;
    }
    case Kind::Squeezed:
      return "pm:" + std::to_string(node.value) + ";" + node_canonical(*node.child);
    case Kind::Piecewise: {
      std::string out = "glue:";
      for (std::size_t t = 0; t < node.prefix.size(); ++t) {
        if (t) out += ',';
        out += std::to_string(node.prefix[t]);
        out += ':';
        out += std::to_string(node.segments[t]);
      }
      out += ';';
      out += node_canonical(*node.child);
      return out;
    }
  }
  throw std::logic_error("unreachable");
}

template <typename Int>
Int parse_int(std::string_view text, const char* what) {
  Int out{};
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  const auto res = std::from_chars(first, last, out);
  if (res.ec != std::errc{} || res.ptr != last)
    throw ParseError(std::string("invalid ") + what + ": '" + std::string(text) + "'");
  return out;
}

std::shared_ptr<const Node> parse_rule(std::string_view text);

std::shared_ptr<const Node> parse_rule(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos)
    throw ParseError("sequence rule missing ':' in '" + std::string(text) + "'");
  const auto kind = text.substr(0, colon);
  auto rest = text.substr(colon + 1);
  auto node = std::make_shared<Node>();
  if (kind == "const") {
    node->kind = Kind::Constant;
    node->value = parse_int<std::uint64_t>(rest, "constant base");
    if (node->value < 2) throw ParseError("constant base must be >= 2");
  } else if (kind == "linear") {
    const auto sep = rest.find(':');
    if (sep == std::string_view::npos)
      throw ParseError("linear rule needs slope and offset");
    node->kind = Kind::Linear;
    node->value = parse_int<std::uint64_t>(rest.substr(0, sep), "linear slope");
    node->offset = parse_int<std::int64_t>(rest.substr(sep + 1), "linear offset");
    if (static_cast<__int128>(node->value) + node->offset < 2)
      throw ParseError("linear rule must have slope + offset >= 2 so q_1 >= 2");
  } else if (kind == "explicit") {
    const auto sep = rest.find(';');
    if (sep == std::string_view::npos)
      throw ParseError("explicit rule needs ';<tail-spec>'");
    node->kind = Kind::ExplicitThen;
    auto list = rest.substr(0, sep);
    if (list.empty()) throw ParseError("explicit rule needs at least one value");
    while (!list.empty()) {
      const auto comma = list.find(',');
      const auto item = list.substr(0, comma);
      const auto v = parse_int<std::uint64_t>(item, "explicit base");
      if (v < 2) throw ParseError("explicit bases must be >= 2");
      node->prefix.push_back(v);
      if (comma == std::string_view::npos) break;
      list.remove_prefix(comma + 1);
      if (list.empty()) throw ParseError("trailing comma in explicit base list");
    }
    node->child = parse_rule(rest.substr(sep + 1));
  } else if (kind == "pm") {
    const auto sep = rest.find(';');
    if (sep == std::string_view::npos) throw ParseError("pm rule needs ';<base-spec>'");
    node->kind = Kind::Squeezed;
    node->value = parse_int<std::uint64_t>(rest.substr(0, sep), "pm index");
    node->child = parse_rule(rest.substr(sep + 1));
  } else if (kind == "glue") {
    const auto sep = rest.find(';');
    if (sep == std::string_view::npos)
      throw ParseError("glue rule needs ';<base-spec>'");
    node->kind = Kind::Piecewise;
    auto list = rest.substr(0, sep);
    if (list.empty()) throw ParseError("glue rule needs at least one segment");
    while (!list.empty()) {
      const auto comma = list.find(',');
      const auto item = list.substr(0, comma);
      const auto mid = item.find(':');
      if (mid == std::string_view::npos)
        throw ParseError("glue segment needs '<boundary>:<index>'");
      const auto b = parse_int<std::uint64_t>(item.substr(0, mid), "glue boundary");
      const auto m = parse_int<std::uint64_t>(item.substr(mid + 1), "glue index");
      if (!node->prefix.empty() && b <= node->prefix.back())
        throw ParseError("glue boundaries must be strictly increasing");
      if (b == 0) throw ParseError("glue boundaries must be >= 1");
      node->prefix.push_back(b);
      node->segments.push_back(m);
      if (comma == std::string_view::npos) break;
      list.remove_prefix(comma + 1);
      if (list.empty()) throw ParseError("trailing comma in glue segment list");
    }
    node->child = parse_rule(rest.substr(sep + 1));
  } else {
    throw ParseError("unknown sequence rule '" + std::string(kind) + "'");
  }
  return node;
}

SeqTraits parse_metadata(std::string_view meta, SeqTraits traits) {
  // meta = "@key=value[@key=value...]"
  while (!meta.empty()) {
    if (meta.front() != '@') throw ParseError("malformed metadata suffix");
    meta.remove_prefix(1);
    const auto next = meta.find('@');
    auto item = meta.substr(0, next);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos)
      throw ParseError("metadata item missing '=': '" + std::string(item) + "'");
    const auto key = item.substr(0, eq);
    auto value = item.substr(eq + 1);
    if (key == "div") {
      if (value == "all") {
        traits.div_all = true;
        traits.div_k = 0;
      } else {
        traits.div_all = false;
        std::uint32_t max_k = 0;
        if (value.empty()) throw ParseError("empty @div= list");
        while (!value.empty()) {
          const auto comma = value.find(',');
          max_k = std::max(max_k,
                           parse_int<std::uint32_t>(value.substr(0, comma), "@div entry"));
          if (comma == std::string_view::npos) break;
          value.remove_prefix(comma + 1);
        }
        traits.div_k = max_k;  // k-divergence is downward closed
      }
    } else if (key == "iil") {
      if (value == "0")
        traits.infinite_in_limit = false;
      else if (value == "1")
        traits.infinite_in_limit = true;
      else
        throw ParseError("@iil= must be 0 or 1");
    } else {
      throw ParseError("unknown metadata key '" + std::string(key) + "'");
    }
    if (next == std::string_view::npos) break;
    meta.remove_prefix(next);
  }
  return traits;
}

}  // namespace

BasicSequence::BasicSequence(std::shared_ptr<const Node> node, SeqTraits t)
    : node_(std::move(node)), traits_(t) {}

SeqTraits BasicSequence::derived_traits(const Node& node) {
  switch (node.kind) {
    case Kind::Constant:
      return SeqTraits{.div_all = true, .div_k = 0, .infinite_in_limit = false};
    case Kind::Linear:
      if (node.value == 0)
        return SeqTraits{.div_all = true, .div_k = 0, .infinite_in_limit = false};
      // sum 1/q_i diverges (harmonic-type); sum 1/(q_i q_{i+1}) converges.
      return SeqTraits{.div_all = false, .div_k = 1, .infinite_in_limit = true};
    case Kind::ExplicitThen:
      return derived_traits(*node.child);
    case Kind::Squeezed:
    case Kind::Piecewise:
      // Squeezed bases satisfy p_i <= q_i termwise, so every expectation sum
      // is at least the base's and k-divergence is inherited; the squeeze
      // factor is bounded below by 1/2 (and fixed past the last boundary),
      // so the limit behaviour is inherited as well.
      return derived_traits(*node.child);
  }
  throw std::logic_error("unreachable");
}

BasicSequence BasicSequence::constant(std::uint64_t b) {
  if (b < 2) throw ParseError("constant base must be >= 2");
  auto node = std::make_shared<Node>();
  node->kind = Kind::Constant;
  node->value = b;
  return BasicSequence(node, derived_traits(*node));
}

BasicSequence BasicSequence::linear(std::uint64_t slope, std::uint64_t offset) {
  auto node = std::make_shared<Node>();
  node->kind = Kind::Linear;
  node->value = slope;
  node->offset = static_cast<std::int64_t>(offset);
  if (static_cast<__int128>(slope) + node->offset < 2)
    throw ParseError("linear rule must have slope + offset >= 2 so q_1 >= 2");
  return BasicSequence(node, derived_traits(*node));
}

BasicSequence BasicSequence::explicit_then(std::vector<std::uint64_t> prefix,
                                           const BasicSequence& tail) {
  if (prefix.empty()) throw ParseError("explicit rule needs at least one value");
  for (auto v : prefix)
    if (v < 2) throw ParseError("explicit bases must be >= 2");
  auto node = std::make_shared<Node>();
  node->kind = Kind::ExplicitThen;
  node->prefix = std::move(prefix);
  node->child = tail.node_;
  auto t = tail.traits();  // prefix does not affect divergence or the limit
  return BasicSequence(node, t);
}

BasicSequence BasicSequence::squeezed(std::uint64_t m, const BasicSequence& base) {
  auto node = std::make_shared<Node>();
  node->kind = Kind::Squeezed;
  node->value = m;
  node->child = base.node_;
  return BasicSequence(node, base.traits());
}

BasicSequence BasicSequence::piecewise_squeezed(
    std::vector<std::pair<std::uint64_t, std::uint64_t>> segments,
    const BasicSequence& base) {
  if (segments.empty())
    throw ParseError("piecewise rule needs at least one segment");
  auto node = std::make_shared<Node>();
  node->kind = Kind::Piecewise;
  for (const auto& [b, m] : segments) {
    if (b == 0) throw ParseError("glue boundaries must be >= 1");
    if (!node->prefix.empty() && b <= node->prefix.back())
      throw ParseError("glue boundaries must be strictly increasing");
    node->prefix.push_back(b);
    node->segments.push_back(m);
  }
  node->child = base.node_;
  return BasicSequence(node, base.traits());
}

std::uint64_t BasicSequence::base_at(std::uint64_t i) const {
  if (i == 0) throw std::out_of_range("base_at: indices start at 1");
  return node_base_at(*node_, i);
}

void BasicSequence::fill_bases(std::uint64_t first_i, std::span<std::uint64_t> out) const {
  for (std::size_t t = 0; t < out.size(); ++t) out[t] = node_base_at(*node_, first_i + t);
}

std::vector<std::uint64_t> BasicSequence::bases(std::uint64_t n) const {
  std::vector<std::uint64_t> out(n);
  fill_bases(1, out);
  return out;
}

BasicSequence BasicSequence::with_traits(SeqTraits t) const {
  return BasicSequence(node_, t);
}

std::uint64_t BasicSequence::irregular_prefix() const {
  return node_irregular_prefix(*node_);
}

std::string BasicSequence::canonical() const {
  std::string out = node_canonical(*node_);
  if (!(traits_ == derived_traits(*node_))) {
    out += "@div=";
    out += traits_.div_all ? "all" : std::to_string(traits_.div_k);
    out += "@iil=";
    out += traits_.infinite_in_limit ? "1" : "0";
  }
  return out;
}

BasicSequence BasicSequence::parse(std::string_view spec) {
  const auto at = spec.find('@');
  const auto rule_text = spec.substr(0, at);
  auto node = parse_rule(rule_text);
  SeqTraits traits = derived_traits(*node);
  if (at != std::string_view::npos) traits = parse_metadata(spec.substr(at), traits);
  return BasicSequence(std::move(node), traits);
}

BasicSequence derive_Pm(const BasicSequence& seq, std::uint64_t m) {
  return BasicSequence::squeezed(m, seq);
}

Rational partial_expectation_0k(const BasicSequence& seq, std::uint32_t k,
                                std::uint64_t n) {
  if (k == 0) throw std::invalid_argument("partial_expectation_0k: k >= 1");
  if (n == 0) return Rational(0);
  // Incremental window product q_j...q_{j+k-1}; exact division keeps the
  // product small (k machine-word factors).
  BigInt prod = 1;
  for (std::uint64_t j = 1; j <= k; ++j) prod *= seq.base_at(j);
  PairwiseRationalSum sum;
  for (std::uint64_t j = 1;; ++j) {
    sum.add_reciprocal(prod);
    if (j == n) break;
    prod /= seq.base_at(j);
    prod *= seq.base_at(j + k);
  }
  return sum.value();
}

Rational salat_average(const BasicSequence& seq, std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("salat_average: N >= 1");
  PairwiseRationalSum sum;
  for (std::uint64_t i = 1; i <= n; ++i) sum.add_reciprocal(BigInt(seq.base_at(i)));
  return sum.value() / n;
}

std::vector<std::string> validate_traits(const BasicSequence& seq, double threshold,
                                         std::uint64_t horizon) {
  std::vector<std::string> warnings;
  const auto& t = seq.traits();
  char buf[256];

  // Partial sum of Q^(k) in doubles with early exit at the threshold.
  auto partial_sum_reaches = [&](std::uint32_t k, double* out_sum) {
    double sum = 0;
    double prod = 1;
    std::uint64_t left = 1;
    for (std::uint64_t j = 1; j <= k; ++j) prod *= static_cast<double>(seq.base_at(j));
    for (std::uint64_t j = 1; j <= horizon; ++j) {
      if (prod < 1e300) sum += 1.0 / prod;
      if (sum >= threshold) {
        *out_sum = sum;
        return true;
      }
      prod /= static_cast<double>(seq.base_at(left));
      prod *= static_cast<double>(seq.base_at(j + k));
      ++left;
    }
    *out_sum = sum;
    return false;
  };

  const std::uint32_t probe_max = 8;
  const std::uint32_t declared_max = t.div_all ? probe_max : std::min(t.div_k, probe_max);
  for (std::uint32_t k = 1; k <= declared_max; ++k) {
    double sum = 0;
    if (!partial_sum_reaches(k, &sum)) {
      std::snprintf(buf, sizeof buf,
                    "declared %u-divergence: partial sum %.4g stays below threshold %.4g "
                    "at horizon %llu (heuristic inconclusive or metadata wrong)",
                    k, sum, threshold, static_cast<unsigned long long>(horizon));
      warnings.emplace_back(buf);
      break;  // higher k only gets smaller
    }
  }
  if (!t.div_all && t.div_k < probe_max) {
    double sum = 0;
    if (partial_sum_reaches(t.div_k + 1, &sum)) {
      std::snprintf(buf, sizeof buf,
                    "partial sum for k=%u exceeds threshold %.4g but divergence is only "
                    "declared up to k=%u",
                    t.div_k + 1, threshold, t.div_k);
      warnings.emplace_back(buf);
    }
  }

  const std::uint64_t early = std::min<std::uint64_t>(1000, horizon);
  const std::uint64_t q_early = seq.base_at(early);
  const std::uint64_t q_late = seq.base_at(horizon);
  if (t.infinite_in_limit && q_late <= q_early && horizon > early) {
    std::snprintf(buf, sizeof buf,
                  "declared infinite-in-limit but q_%llu = %llu <= q_%llu = %llu",
                  static_cast<unsigned long long>(horizon),
                  static_cast<unsigned long long>(q_late),
                  static_cast<unsigned long long>(early),
                  static_cast<unsigned long long>(q_early));
    warnings.emplace_back(buf);
  }
  if (!t.infinite_in_limit && q_late >= 100 * std::max<std::uint64_t>(q_early, 2)) {
    std::snprintf(buf, sizeof buf,
                  "bases grow by 100x over the horizon but metadata declares "
                  "not-infinite-in-limit");
    warnings.emplace_back(buf);
  }
  return warnings;
}

}  // namespace cantor
