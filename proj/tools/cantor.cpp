// Command-line surface for the Cantor-series toolkit: expand rationals,
// inspect sequences and block statistics, run estimator reports over digit
// files, build certificate schedules, and execute the witness constructions.
//
// Exit codes: 0 success, 2 usage, 3 data, 4 precondition.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cantor/blocks.hpp"
#include "cantor/digits.hpp"
#include "cantor/numeric.hpp"
#include "cantor/sequences.hpp"
#include "cantor/stats.hpp"
#include "cantor/surgery.hpp"

namespace {

using cantor::BasicSequence;
using cantor::DigitStream;
using cantor::Rational;
using cantor::ReductionInput;
using cantor::Schedule;
using cantor::ScheduleParams;
using cantor::ScheduleProfile;

double approx(const Rational& r) { return r.convert_to<double>(); }

std::vector<std::uint64_t> parse_u64_list(const std::string& text,
                                          const std::string& what) {
  std::vector<std::uint64_t> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string_view item(text.data() + pos, comma - pos);
    std::uint64_t v = 0;
    const auto [ptr, ec] =
        std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || ptr != item.data() + item.size())
      throw cantor::ParseError(what + ": expected a comma-separated list of " +
                               "unsigned integers, got \"" + text + "\"");
    out.push_back(v);
    pos = comma + 1;
  }
  return out;
}

std::string sanitize_label(const std::string& label) {
  std::string out;
  for (char c : label)
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-') ? c : '_';
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

int data_error(const std::string& message) {
  std::cerr << "data error: " << message << "\n";
  return 3;
}

int usage_error(const std::string& message) {
  std::cerr << "usage error: " << message << "\n";
  return 2;
}

// Reads a digit file, mapping malformed content and I/O failures to exit
// code 3 via the returned optional.
std::optional<DigitStream> read_stream_or_report(const std::string& path,
                                                 int& rc) {
  try {
    return cantor::read_digit_file(path);
  } catch (const cantor::ParseError& e) {
    rc = data_error(e.what());
  } catch (const std::runtime_error& e) {
    rc = data_error(e.what());
  }
  return std::nullopt;
}

std::string traits_line(const cantor::SeqTraits& t) {
  std::string div;
  if (t.div_all)
    div = "all k";
  else if (t.div_k == 0)
    div = "none (declared 1-convergent)";
  else
    div = "up to k=" + std::to_string(t.div_k);
  return "divergence: " + div + "; infinite-in-limit: " +
         (t.infinite_in_limit ? "yes" : "no");
}

const char* goodness_name(cantor::Goodness g) {
  switch (g) {
    case cantor::Goodness::good:
      return "good";
    case cantor::Goodness::not_good:
      return "not-good";
    default:
      return "unknown";
  }
}

// ---------------------------------------------------------------------------
// seq: parse a spec string, echo the canonical form and metadata.

struct SeqOpts {
  std::string spec;
  std::uint64_t n = 10;
  bool validate = false;
  std::uint64_t horizon = 100000;
  bool dump_config = false;
};

int run_seq(const SeqOpts& o, CLI::App* sub) {
  if (o.dump_config) {
    std::cout << sub->config_to_str(true, false);
    return 0;
  }
  const BasicSequence seq = BasicSequence::parse(o.spec);
  std::cout << "canonical: " << seq.canonical() << "\n";
  std::cout << traits_line(seq.traits()) << "\n";
  if (seq.irregular_prefix() > 0)
    std::cout << "irregular-prefix: " << seq.irregular_prefix() << "\n";
  std::cout << "bases[1.." << o.n << "]:";
  for (std::uint64_t i = 1; i <= o.n; ++i) std::cout << " " << seq.base_at(i);
  std::cout << "\n";
  if (o.validate) {
    const auto warnings = cantor::validate_traits(seq, 50.0, o.horizon);
    if (warnings.empty())
      std::cout << "metadata: no mismatch detected (horizon " << o.horizon
                << ")\n";
    for (const auto& w : warnings) std::cout << "metadata warning: " << w << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// expand: greedy expansion of a rational to a digit file.

struct ExpandOpts {
  std::string seq;
  std::string x;
  std::uint64_t n = 0;
  std::string out = "digits.out";
  bool dump_config = false;
};

int run_expand(const ExpandOpts& o, CLI::App* sub) {
  if (o.dump_config) {
    std::cout << sub->config_to_str(true, false);
    return 0;
  }
  const BasicSequence seq = BasicSequence::parse(o.seq);
  const Rational x = cantor::parse_rational(o.x);
  const DigitStream d = cantor::digits_of_rational(x, seq, o.n);
  cantor::write_digit_file(o.out, d);
  std::cout << "wrote " << o.out << " (" << d.length() << " digits over "
            << seq.canonical() << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// stats: exact sequence/block diagnostics (no digit stream involved).

struct StatsOpts {
  std::string seq;
  std::uint64_t n = 1000;
  std::uint64_t zeros_k = 3;
  std::vector<std::string> blocks;
  std::string collection;
  bool dump_config = false;
};

int run_stats(const StatsOpts& o, CLI::App* sub) {
  if (o.dump_config) {
    std::cout << sub->config_to_str(true, false);
    return 0;
  }
  const BasicSequence seq = BasicSequence::parse(o.seq);
  std::cout << "sequence: " << seq.canonical() << "\n";
  std::cout << traits_line(seq.traits()) << "\n";
  const Rational avg = cantor::salat_average(seq, o.n);
  std::cout << "salat-average[n=" << o.n << "]: " << cantor::format_rational(avg)
            << " (~" << approx(avg) << ")\n";
  for (std::uint32_t k = 1; k <= o.zeros_k; ++k) {
    const Rational q = cantor::partial_expectation_0k(seq, k, o.n);
    const auto good = cantor::is_good(cantor::Block::zeros(k), seq);
    std::cout << "Q^(" << k << ")[n=" << o.n
              << "]: " << cantor::format_rational(q) << " (~" << approx(q)
              << "), zero-block goodness: " << goodness_name(good) << "\n";
  }
  for (const auto& text : o.blocks) {
    const cantor::Block B = cantor::Block::parse(text);
    const Rational q = cantor::expectation(B, 1, o.n, seq);
    std::cout << "block " << B.literal() << ": expectation[1.." << o.n
              << "]=" << cantor::format_rational(q) << " (~" << approx(q)
              << "), goodness: " << goodness_name(cantor::is_good(B, seq))
              << "\n";
  }
  if (!o.collection.empty()) {
    cantor::BlockCollection coll;
    try {
      coll = cantor::read_block_collection(o.collection);
    } catch (const cantor::ParseError& e) {
      return data_error(e.what());
    } catch (const std::runtime_error& e) {
      return data_error(e.what());
    }
    const auto star = cantor::star_condition_check(coll, seq);
    std::cout << "collection " << (coll.name.empty() ? o.collection : coll.name)
              << ": separation condition "
              << (star.satisfied ? "satisfied" : "violated") << "\n";
    for (const auto& entry : star.entries) {
      std::cout << "  " << entry.block.literal() << " ("
                << goodness_name(entry.goodness) << ")";
      if (entry.goodness == cantor::Goodness::good) {
        if (entry.satisfied)
          std::cout << ": partner " << entry.partner->literal() << " at t="
                    << entry.witness_t;
        else
          std::cout << ": no partner";
      }
      std::cout << "\n";
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------
// test: estimator reports over a digit file.  Reports, not judgments: exit 0
// regardless of how large the deviations are.

struct TestOpts {
  std::string in;
  std::string seq;
  std::string mode = "normal";
  std::uint64_t max_weight = 4;
  std::string checkpoints;
  std::string dist_mode = "digit-ratio";
  std::string tol;
  std::string eps = "1/10";
  std::uint64_t first = 1;
  std::uint64_t last = 0;
  std::string collection;
  std::string variant = "counts";
  std::string csv = "report.csv";
  std::string plots_dir;
  bool dump_config = false;
};

int run_test(const TestOpts& o, CLI::App* sub) {
  if (o.dump_config) {
    std::cout << sub->config_to_str(true, false);
    return 0;
  }
  int rc = 0;
  const auto maybe = read_stream_or_report(o.in, rc);
  if (!maybe) return rc;
  const DigitStream& d = *maybe;
  if (d.length() == 0) return data_error(o.in + ": empty stream");
  if (!o.seq.empty()) {
    const BasicSequence expect = BasicSequence::parse(o.seq);
    if (expect.canonical() != d.seq().canonical())
      return data_error(o.in + ": sequence header " + d.seq().canonical() +
                        " does not match --seq " + expect.canonical());
  }

  const bool orbit = o.dist_mode == "true-orbit";
  const cantor::DistributionMode dmode = orbit
                                             ? cantor::DistributionMode::true_orbit
                                             : cantor::DistributionMode::digit_ratio;
  const Rational tol = o.tol.empty() ? Rational(1, std::uint64_t(1) << 50)
                                     : cantor::parse_rational(o.tol);

  std::vector<std::uint64_t> cps;
  if (!o.checkpoints.empty()) {
    cps = parse_u64_list(o.checkpoints, "checkpoints");
    std::sort(cps.begin(), cps.end());
    cps.erase(std::unique(cps.begin(), cps.end()), cps.end());
  } else if (o.mode == "distribution") {
    const std::uint64_t overhang = orbit ? 63 : 0;
    if (d.length() <= overhang)
      return data_error(o.in + ": stream too short for the true-orbit window");
    cps = {d.length() - overhang};
  } else {
    // Leave room for the longest block a weight bound admits.
    if (d.length() < o.max_weight)
      return data_error(o.in + ": stream shorter than the weight bound");
    cps = {d.length() - o.max_weight + 1};
  }

  if (o.mode == "wdn") {
    const std::uint64_t last =
        o.last != 0 ? o.last : d.length() - (orbit ? 63 : 0);
    const auto res = cantor::test_wdn(d, cantor::parse_rational(o.eps), o.first,
                                      last, dmode, tol);
    if (res.pass) {
      std::cout << "window-uniformity: PASS (eps=" << o.eps << ", N=" << o.first
                << ".." << last << ")\n";
    } else {
      std::cout << "window-uniformity: VIOLATION at N=" << res.violating_n
                << " interval (" << cantor::format_rational(res.interval_a)
                << ", " << cantor::format_rational(res.interval_b)
                << ") deviation " << cantor::format_rational(res.deviation)
                << " (~" << approx(res.deviation) << ")\n";
    }
    return 0;
  }

  cantor::DeviationReport report;
  if (o.mode == "normal") {
    report = cantor::test_normal(d, o.max_weight, cps);
  } else if (o.mode == "ratio") {
    report = cantor::test_ratio_normal(d, o.max_weight, cps);
  } else if (o.mode == "distribution") {
    report = cantor::test_distribution_normal(d, cps, dmode, tol);
  } else if (o.mode == "collection") {
    cantor::BlockCollection coll;
    try {
      coll = cantor::read_block_collection(o.collection);
    } catch (const cantor::ParseError& e) {
      return data_error(e.what());
    } catch (const std::runtime_error& e) {
      return data_error(e.what());
    }
    const auto variant = o.variant == "ratios"
                             ? cantor::CollectionVariant::ratios
                             : cantor::CollectionVariant::counts;
    report = cantor::test_collection(d, coll, variant, cps);
  }

  std::cout << cantor::report_to_text(report);
  if (!o.csv.empty()) {
    write_text_file(o.csv, cantor::report_to_csv(report));
    std::cout << "wrote " << o.csv << "\n";
  }
  if (!o.plots_dir.empty()) {
    std::filesystem::create_directories(o.plots_dir);
    std::vector<std::string> labels;
    for (const auto& row : report.rows)
      if (std::find(labels.begin(), labels.end(), row.label) == labels.end())
        labels.push_back(row.label);
    for (const auto& label : labels) {
      const std::string path =
          o.plots_dir + "/" + sanitize_label(label) + ".dat";
      write_text_file(path, cantor::report_plot_series(report, label));
    }
    std::cout << "wrote " << labels.size() << " plot series to " << o.plots_dir
              << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// schedule: build a certificate schedule over a reference stream.

struct ScheduleOpts {
  std::string seq;
  std::string profile;
  std::string in;
  std::uint64_t seed = 1;
  std::uint64_t len = 0;
  std::uint64_t count = 0;
  std::uint64_t target = 0;
  std::uint64_t master_seed = 0;
  std::string out;
  bool dump_config = false;
};

int run_schedule(const ScheduleOpts& o, CLI::App* sub) {
  if (o.dump_config) {
    std::cout << sub->config_to_str(true, false);
    return 0;
  }
  const bool count_mode = sub->count("--count") > 0;
  const bool target_mode = sub->count("--target") > 0;
  if (count_mode == target_mode)
    return usage_error("exactly one of --count and --target is required");

  std::optional<DigitStream> stream;
  BasicSequence seq = BasicSequence::constant(2);
  if (!o.in.empty()) {
    int rc = 0;
    stream = read_stream_or_report(o.in, rc);
    if (!stream) return rc;
    if (!o.seq.empty()) {
      seq = BasicSequence::parse(o.seq);
      if (seq.canonical() != stream->seq().canonical())
        return data_error(o.in + ": sequence header " +
                          stream->seq().canonical() + " does not match --seq " +
                          seq.canonical());
    } else {
      seq = stream->seq();
    }
  } else {
    if (o.seq.empty()) return usage_error("--seq is required without --in");
    seq = BasicSequence::parse(o.seq);
    std::uint64_t len = o.len;
    if (len == 0) {
      if (count_mode)
        return usage_error("count mode needs --len (or --in) to fix the data");
      len = o.target + 63;
    }
    stream = cantor::make_reference(seq, o.seed, len);
  }

  ScheduleParams params;
  params.master_seed =
      sub->count("--master-seed") > 0 ? o.master_seed : o.seed;

  const ScheduleProfile profile = cantor::parse_profile(o.profile);
  const Schedule sched =
      count_mode
          ? cantor::build_schedule(seq, *stream, profile, o.count, params)
          : cantor::build_schedule_clamped(seq, *stream, profile, o.target,
                                           params);
  const std::string json = cantor::schedule_to_json(sched);
  if (o.out.empty()) {
    std::cout << json;
  } else {
    write_text_file(o.out, json);
    std::cout << "wrote " << o.out << " (" << sched.intervals()
              << " intervals, horizon " << sched.horizon << ")\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// construct: run a witness construction end to end.

struct ConstructOpts {
  std::string target;
  std::string seq;
  std::uint64_t seed = 0;
  std::uint64_t n = 0;
  std::uint64_t c = 2;
  std::string x;
  std::string out_prefix = "witness";
  std::uint64_t master_seed = 0;
  bool dump_config = false;
};

bool even_track_unbounded(const std::string& desc) {
  return desc == "id" || desc.rfind("odds=", 0) == 0;
}
bool odd_track_unbounded(const std::string& desc) {
  return desc == "id" || desc.rfind("evens=", 0) == 0;
}

int run_construct(const ConstructOpts& o, CLI::App* sub) {
  if (o.dump_config) {
    std::cout << sub->config_to_str(true, false);
    return 0;
  }
  const BasicSequence seq = BasicSequence::parse(o.seq);

  ReductionInput x = ReductionInput::identity();
  if (!o.x.empty()) {
    x = ReductionInput::parse(o.x);
  } else if (o.target == "dn-not-n" || o.target == "dn-not-rn") {
    x = ReductionInput::constant_on_evens(o.c);
  } else if (o.target == "n-not-dn" || o.target == "rn-not-dn" ||
             o.target == "rn-not-n") {
    x = ReductionInput::constant_on_odds(o.c);
  }

  // Operator-error surface: each difference target derives its witness
  // property from one bounded control track.  An unbounded rule still runs
  // (the complementary regime is a legitimate measurement), but the output
  // is flagged.
  std::vector<std::string> warnings;
  const std::string desc = x.describe();
  if ((o.target == "dn-not-n" || o.target == "dn-not-rn") &&
      even_track_unbounded(desc))
    warnings.push_back("target " + o.target +
                       " expects a bounded even control track; rule \"" + desc +
                       "\" leaves it unbounded, so the output is a "
                       "measurement run, not a witness for this target");
  if ((o.target == "n-not-dn" || o.target == "rn-not-dn" ||
       o.target == "rn-not-n") &&
      odd_track_unbounded(desc))
    warnings.push_back("target " + o.target +
                       " expects a bounded odd control track; rule \"" + desc +
                       "\" leaves it unbounded, so the output is a "
                       "measurement run, not a witness for this target");

  ScheduleProfile profile = ScheduleProfile::dn;
  if (o.target == "n")
    profile = ScheduleProfile::normal;
  else if (o.target == "dn-not-n" || o.target == "n-not-dn" ||
           o.target == "rn-not-dn" || o.target == "dn-not-rn")
    profile = ScheduleProfile::two_track;
  else if (o.target == "rn-not-n")
    profile = ScheduleProfile::glue;

  const std::uint64_t master =
      sub->count("--master-seed") > 0 ? o.master_seed : o.seed;
  const DigitStream z = cantor::make_reference(seq, o.seed, o.n + 63);
  ScheduleParams params;
  params.master_seed = master;
  const Schedule sched =
      cantor::build_schedule_clamped(seq, z, profile, o.n, params);

  DigitStream output(seq, {});
  cantor::SurgeryLog log;
  std::optional<std::string> glued;
  if (o.target == "dn") {
    auto res = cantor::reduce_dn(x, z, sched);
    output = std::move(res.output);
    log = std::move(res.log);
  } else if (o.target == "n") {
    auto res = cantor::reduce_normal(x, z, sched);
    output = std::move(res.output);
    log = std::move(res.log);
  } else if (o.target == "rn-not-n") {
    std::uint64_t max_m = 0;
    for (std::uint64_t t = 1; t <= sched.intervals(); ++t)
      max_m = std::max(
          max_m, cantor::clamp_input(x, 2 * t + 1, cantor::ClampMode::dn));
    const auto seeds = cantor::make_seed_set(master, max_m);
    auto res = cantor::reduce_rn_not_n(x, seq, sched, seeds);
    output = std::move(res.output);
    log = std::move(res.log);
    glued = res.glued_seq.canonical();
  } else {
    auto res = cantor::reduce_diff4(x, z, sched);
    output = std::move(res.output);
    log = std::move(res.log);
  }

  const std::string digits_path = o.out_prefix + ".digits";
  const std::string log_path = o.out_prefix + ".log.csv";
  const std::string cert_path = o.out_prefix + ".cert.json";
  cantor::write_digit_file(digits_path, output);
  cantor::write_surgery_log(log_path, log);

  nlohmann::ordered_json cert =
      nlohmann::ordered_json::parse(cantor::schedule_to_json(sched));
  cert["target"] = o.target;
  cert["sequence"] = seq.canonical();
  cert["input_rule"] = desc;
  cert["seed"] = o.seed;
  cert["length"] = o.n;
  if (glued) cert["glued_sequence"] = *glued;
  nlohmann::ordered_json warn = nlohmann::ordered_json::array();
  for (const auto& w : warnings) warn.push_back(w);
  for (const auto& w : log.warnings) warn.push_back(w);
  cert["warnings"] = warn;
  write_text_file(cert_path, cert.dump(2) + "\n");

  for (const auto& w : warnings) std::cout << "warning: " << w << "\n";
  for (const auto& w : log.warnings) std::cout << "warning: " << w << "\n";
  std::cout << "wrote " << digits_path << " (" << output.length()
            << " digits)\n";
  std::cout << "wrote " << log_path << " (" << log.edits.size() << " edits)\n";
  std::cout << "wrote " << cert_path << " (" << sched.intervals()
            << " intervals, horizon " << sched.horizon << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cantor-series numeration toolkit"};
  app.require_subcommand(1);
  // Canonical config round-trips: defaults are part of the dumped config.
  app.option_defaults()->always_capture_default();

  SeqOpts seq_o;
  auto* seq_cmd = app.add_subcommand("seq", "parse and describe a sequence");
  seq_cmd->add_option("spec", seq_o.spec, "sequence spec string")->required();
  seq_cmd->add_option("--n", seq_o.n, "bases to print");
  seq_cmd->add_flag("--validate", seq_o.validate,
                    "probe declared metadata against partial sums");
  seq_cmd->add_option("--horizon", seq_o.horizon, "validation horizon");
  seq_cmd->add_flag("--dump-config", seq_o.dump_config,
                    "print the canonical config and exit");
  seq_cmd->set_config("--config", "", "key=value config file");

  ExpandOpts exp_o;
  auto* exp_cmd =
      app.add_subcommand("expand", "greedy expansion of a rational");
  exp_cmd->add_option("--seq", exp_o.seq, "sequence spec")->required();
  exp_cmd->add_option("--x", exp_o.x, "rational in [0,1), as p/q")->required();
  exp_cmd->add_option("--n", exp_o.n, "number of digits")->required();
  exp_cmd->add_option("--out", exp_o.out, "output digit file");
  exp_cmd->add_flag("--dump-config", exp_o.dump_config,
                    "print the canonical config and exit");
  exp_cmd->set_config("--config", "", "key=value config file");

  StatsOpts stats_o;
  auto* stats_cmd =
      app.add_subcommand("stats", "exact sequence and block diagnostics");
  stats_cmd->add_option("--seq", stats_o.seq, "sequence spec")->required();
  stats_cmd->add_option("--n", stats_o.n, "horizon for partial sums");
  stats_cmd->add_option("--zeros-k", stats_o.zeros_k,
                        "report Q^(k) for k = 1..K");
  stats_cmd->add_option("--block", stats_o.blocks,
                        "block literal [e1,e2,...] (repeatable)");
  stats_cmd->add_option("--collection", stats_o.collection,
                        "block collection file for the separation check");
  stats_cmd->add_flag("--dump-config", stats_o.dump_config,
                      "print the canonical config and exit");
  stats_cmd->set_config("--config", "", "key=value config file");

  TestOpts test_o;
  auto* test_cmd =
      app.add_subcommand("test", "estimator reports over a digit file");
  test_cmd->add_option("--in", test_o.in, "digit file")->required();
  test_cmd->add_option("--seq", test_o.seq,
                       "expected sequence spec (consistency check)");
  test_cmd
      ->add_option("--mode", test_o.mode,
                   "normal | ratio | distribution | wdn | collection")
      ->check(CLI::IsMember(
          {"normal", "ratio", "distribution", "wdn", "collection"}));
  test_cmd->add_option("--max-weight", test_o.max_weight,
                       "block weight bound");
  test_cmd->add_option("--checkpoints", test_o.checkpoints,
                       "comma-separated prefix lengths");
  test_cmd
      ->add_option("--dist-mode", test_o.dist_mode,
                   "digit-ratio | true-orbit")
      ->check(CLI::IsMember({"digit-ratio", "true-orbit"}));
  test_cmd->add_option("--tol", test_o.tol,
                       "true-orbit tail tolerance (rational)");
  test_cmd->add_option("--eps", test_o.eps, "wdn deviation bound (rational)");
  test_cmd->add_option("--first", test_o.first, "wdn first N");
  test_cmd->add_option("--last", test_o.last, "wdn last N (default: data end)");
  test_cmd->add_option("--collection", test_o.collection,
                       "block collection file");
  test_cmd->add_option("--variant", test_o.variant, "counts | ratios")
      ->check(CLI::IsMember({"counts", "ratios"}));
  test_cmd->add_option("--csv", test_o.csv,
                       "report CSV path (empty to skip)");
  test_cmd->add_option("--plots-dir", test_o.plots_dir,
                       "directory for per-label plot series");
  test_cmd->add_flag("--dump-config", test_o.dump_config,
                     "print the canonical config and exit");
  test_cmd->set_config("--config", "", "key=value config file");

  ScheduleOpts sched_o;
  auto* sched_cmd =
      app.add_subcommand("schedule", "build a certificate schedule");
  sched_cmd->add_option("--seq", sched_o.seq, "sequence spec");
  sched_cmd
      ->add_option("--profile", sched_o.profile,
                   "dn | normal | two_track | glue")
      ->required();
  sched_cmd->add_option("--in", sched_o.in, "digit file (reference stream)");
  sched_cmd->add_option("--seed", sched_o.seed, "reference stream seed");
  sched_cmd->add_option("--len", sched_o.len,
                        "generated reference stream length");
  auto* count_opt =
      sched_cmd->add_option("--count", sched_o.count, "certified intervals");
  auto* target_opt = sched_cmd->add_option(
      "--target", sched_o.target, "clamped final boundary (measurement mode)");
  count_opt->excludes(target_opt);
  sched_cmd->add_option("--master-seed", sched_o.master_seed,
                        "glue profile: master seed for squeezed streams");
  sched_cmd->add_option("--out", sched_o.out,
                        "certificate JSON path (default: stdout)");
  sched_cmd->add_flag("--dump-config", sched_o.dump_config,
                      "print the canonical config and exit");
  sched_cmd->set_config("--config", "", "key=value config file");

  ConstructOpts con_o;
  auto* con_cmd =
      app.add_subcommand("construct", "run a witness construction");
  con_cmd
      ->add_option("--target", con_o.target,
                   "dn | n | dn-not-n | n-not-dn | rn-not-dn | dn-not-rn | "
                   "rn-not-n")
      ->required()
      ->check(CLI::IsMember({"dn", "n", "dn-not-n", "n-not-dn", "rn-not-dn",
                             "dn-not-rn", "rn-not-n"}));
  con_cmd->add_option("--seq", con_o.seq, "sequence spec")->required();
  con_cmd->add_option("--seed", con_o.seed, "reference stream seed")
      ->required();
  con_cmd->add_option("--n", con_o.n, "target length (final boundary)")
      ->required();
  con_cmd->add_option("--c", con_o.c, "bounded-track constant");
  con_cmd->add_option("--x", con_o.x,
                      "input rule override (id, evens=N, odds=N, "
                      "tracks:even=A,odd=B, table:v1,v2,...)");
  con_cmd->add_option("--out-prefix", con_o.out_prefix,
                      "output path prefix (.digits, .log.csv, .cert.json)");
  con_cmd->add_option("--master-seed", con_o.master_seed,
                      "glued construction: master seed (default: --seed)");
  con_cmd->add_flag("--dump-config", con_o.dump_config,
                    "print the canonical config and exit");
  con_cmd->set_config("--config", "", "key=value config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (seq_cmd->parsed()) return run_seq(seq_o, seq_cmd);
    if (exp_cmd->parsed()) return run_expand(exp_o, exp_cmd);
    if (stats_cmd->parsed()) return run_stats(stats_o, stats_cmd);
    if (test_cmd->parsed()) return run_test(test_o, test_cmd);
    if (sched_cmd->parsed()) return run_schedule(sched_o, sched_cmd);
    if (con_cmd->parsed()) return run_construct(con_o, con_cmd);
  } catch (const cantor::PrecisionError& e) {
    std::cerr << "precondition failed: " << e.what() << "\n";
    return 4;
  } catch (const cantor::ConfigError& e) {
    std::cerr << "precondition failed: " << e.what() << "\n";
    return 4;
  } catch (const cantor::ConstructionError& e) {
    std::cerr << "precondition failed: " << e.what() << "\n";
    return 4;
  } catch (const cantor::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::out_of_range& e) {
    std::cerr << "precondition failed: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
