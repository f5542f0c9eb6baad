#include "mbrd/cli.hpp"

#include <atomic>
#include <cstdio>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "mbrd/engine.hpp"
#include "mbrd/errors.hpp"
#include "mbrd/eval.hpp"
#include "mbrd/io.hpp"
#include "mbrd/oracle.hpp"

namespace mbrd {

namespace {

struct CommonOpts {
  std::string metric = "chrf";
  double beta = 2.0;
  int max_order = 6;
  double scale = 100.0;
  std::string embeddings;
  std::string scorer;
  std::uint64_t seed = 0;
  int jobs = 1;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--metric", opts.metric, "Utility metric (chrf | embedding)")
      ->capture_default_str();
  cmd->add_option("--beta", opts.beta, "chrF beta (recall weight)")
      ->capture_default_str();
  cmd->add_option("--max-order", opts.max_order, "chrF maximum n-gram order")
      ->capture_default_str();
  cmd->add_option("--scale", opts.scale, "chrF score scale")->capture_default_str();
  cmd->add_option("--embeddings", opts.embeddings,
                  "JSONL embedding table (embedding metric)");
  cmd->add_option("--scorer", opts.scorer,
                  "JSON scorer definition (embedding metric; default cosine)");
  cmd->add_option("--seed", opts.seed, "Base seed for randomized strategies")
      ->capture_default_str();
  cmd->add_option("--jobs", opts.jobs, "Worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

// Owns the metric instances a command needs; proxies reuse the target when
// the names coincide.
struct MetricContext {
  explicit MetricContext(const CommonOpts& opts) : opts_(opts) {
    chrf_params_.beta = opts.beta;
    chrf_params_.max_order = opts.max_order;
    chrf_params_.scale = opts.scale;
  }

  UtilityMetric& get(std::string_view name) {
    for (const auto& metric : owned_) {
      if (metric->name() == name) return *metric;
    }
    if (name == "chrf") {
      owned_.push_back(std::make_unique<ChrfMetric>(chrf_params_));
    } else if (name == "embedding") {
      if (opts_.embeddings.empty()) {
        throw ConfigError("the embedding metric needs --embeddings");
      }
      if (!store_.has_value()) {
        store_ = EmbeddingStore::load(opts_.embeddings);
        scorer_spec_ = opts_.scorer.empty() ? ScorerSpec{}
                                            : ScorerSpec::load(opts_.scorer);
      }
      owned_.push_back(std::make_unique<EmbeddingMetric>(*store_, *scorer_spec_));
    } else {
      throw ConfigError("unknown metric \"" + std::string(name) + "\"");
    }
    return *owned_.back();
  }

  UtilityMetric& target() { return get(opts_.metric); }

 private:
  CommonOpts opts_;
  ChrfParams chrf_params_;
  std::optional<EmbeddingStore> store_;
  std::optional<ScorerSpec> scorer_spec_;
  std::vector<std::unique_ptr<UtilityMetric>> owned_;
};

struct SelectArgs {
  CommonOpts common;
  std::string strategy = "standard";
  std::string input;
  std::string output;
  bool dedup = false;
  bool emit_utilities = false;
};

int cmd_select(const SelectArgs& args, std::ostream& out) {
  MetricContext metrics(args.common);
  UtilityMetric& metric = metrics.target();
  const Strategy strategy = Strategy::parse(args.strategy);

  SelectOptions options;
  options.dedup = args.dedup;
  if (strategy.kind == Strategy::Kind::coarse_to_fine &&
      !strategy.proxy_metric.empty() && strategy.proxy_metric != metric.name()) {
    options.proxy_metric = &metrics.get(strategy.proxy_metric);
  }

  const std::vector<CandidateSet> sets = io::read_candidate_sets(args.input);
  if (sets.empty()) throw DataError(args.input + ": no candidate sets found");

  // One worker per segment when there are several segments; otherwise the
  // scoring loops of the single segment are parallelized instead.
  std::size_t pool = std::min<std::size_t>(
      static_cast<std::size_t>(args.common.jobs), sets.size());
  if (pool < 1) pool = 1;
  options.jobs = sets.size() == 1 ? args.common.jobs : 1;

  std::vector<SelectionReport> reports(sets.size());
  const auto worker_body = [&](std::size_t index) {
    Strategy seeded = strategy;
    seeded.seed = args.common.seed ^ static_cast<std::uint64_t>(index);
    reports[index] = select(sets[index], metric, seeded, options);
  };
  if (pool <= 1) {
    for (std::size_t i = 0; i < sets.size(); ++i) worker_body(i);
  } else {
    std::atomic<std::size_t> cursor{0};
    std::vector<std::exception_ptr> failures(pool);
    std::vector<std::thread> threads;
    threads.reserve(pool);
    for (std::size_t w = 0; w < pool; ++w) {
      threads.emplace_back([&, w] {
        try {
          for (;;) {
            const std::size_t index = cursor.fetch_add(1);
            if (index >= sets.size()) break;
            worker_body(index);
          }
        } catch (...) {
          failures[w] = std::current_exception();
        }
      });
    }
    for (std::thread& t : threads) t.join();
    for (const std::exception_ptr& failure : failures) {
      if (failure) std::rethrow_exception(failure);
    }
  }

  // Serialize only after every segment succeeded, so failures leave no
  // partial output behind.
  io::WriteOptions write_options;
  write_options.utilities = args.emit_utilities;
  std::ostringstream buffer;
  io::write_selection_reports(buffer, reports, write_options);
  if (args.output.empty()) {
    out << buffer.str();
  } else {
    std::ofstream file(args.output);
    if (!file) throw DataError("cannot write " + args.output);
    file << buffer.str();
  }
  return 0;
}

struct SweepArgs {
  CommonOpts common;
  std::string input;
  std::string output;
  std::vector<std::string> methods{"partial", "nbys"};
  std::vector<std::size_t> s_values;
  std::vector<std::size_t> k_values{1, 20};
  bool timing = false;
};

int cmd_sweep(const SweepArgs& args, std::ostream& out) {
  MetricContext metrics(args.common);
  UtilityMetric& metric = metrics.target();
  const std::vector<CandidateSet> sets = io::read_candidate_sets(args.input);
  if (sets.empty()) throw DataError(args.input + ": no candidate sets found");

  std::vector<SweepMethod> methods;
  for (const std::string& name : args.methods) {
    SweepMethod method;
    if (name == "partial") {
      method.kind = SweepMethod::Kind::partial;
    } else if (name == "nbys") {
      method.kind = SweepMethod::Kind::n_by_s;
    } else if (name.rfind("proxy:", 0) == 0) {
      method.kind = SweepMethod::Kind::proxy_standard;
      method.proxy_metric = &metrics.get(name.substr(6));
    } else {
      throw ConfigError("unknown sweep method \"" + name +
                        "\"; expected partial, nbys, or proxy:METRIC");
    }
    methods.push_back(method);
  }

  SweepOptions options;
  options.s_values = args.s_values;
  options.k_values = args.k_values;
  options.seed = args.common.seed;
  options.jobs = args.common.jobs;
  const std::vector<AccuracyReport> reports =
      run_sweep(sets, metric, methods, options);

  out << io::format_sweep_table(reports, args.timing);
  if (!args.output.empty()) {
    std::ofstream file(args.output);
    if (!file) throw DataError("cannot write " + args.output);
    io::write_sweep_reports(file, reports, args.timing);
  }
  return 0;
}

struct BenchArgs {
  CommonOpts common;
  std::size_t hypotheses = 1024;
  std::size_t references = 0;  // 0: same as hypotheses
  std::vector<std::string> strategies{"standard", "aggregate"};
  int repetitions = 5;
  std::string output;
  TextGenConfig gen;
};

int cmd_bench(const BenchArgs& args, std::ostream& out) {
  MetricContext metrics(args.common);
  UtilityMetric& metric = metrics.target();
  std::vector<Strategy> strategies;
  strategies.reserve(args.strategies.size());
  for (const std::string& text : args.strategies) {
    strategies.push_back(Strategy::parse(text));
  }
  const std::size_t references =
      args.references == 0 ? args.hypotheses : args.references;
  const std::vector<BenchRun> runs =
      bench_utility(args.hypotheses, references, metric, strategies,
                    args.repetitions, args.gen, args.common.seed, args.common.jobs);
  out << io::format_bench_table(runs);
  if (!args.output.empty()) {
    std::ofstream file(args.output);
    if (!file) throw DataError("cannot write " + args.output);
    io::write_bench_records(file, runs);
  }
  return 0;
}

struct OracleArgs {
  std::uint64_t seed = 42;
  std::size_t pairs = 10000;
  std::size_t overlap_instances = 2000;
  std::size_t mbr_instances = 400;
  bool inject_fault = false;
};

int cmd_oracle_check(const OracleArgs& args, std::ostream& out) {
  const double inject = args.inject_fault ? 5e-9 : 0.0;
  const oracle::SuiteResult results[] = {
      oracle::check_overlap_suite(args.overlap_instances, args.seed, inject),
      oracle::check_chrf_suite(args.pairs, args.seed, inject),
      oracle::check_standard_mbr_suite(args.mbr_instances, args.seed, inject),
  };
  char header[120];
  std::snprintf(header, sizeof header, "%-24s %10s %18s %10s %8s", "suite",
                "instances", "max_abs_deviation", "budget", "status");
  out << header << '\n';
  bool all_passed = true;
  for (const oracle::SuiteResult& result : results) {
    char row[160];
    std::snprintf(row, sizeof row, "%-24s %10zu %18.3e %10.0e %8s",
                  result.name.c_str(), result.instances, result.max_abs_deviation,
                  result.budget, result.passed ? "ok" : "FAIL");
    out << row << '\n';
    all_passed = all_passed && result.passed;
  }
  out << (all_passed ? "oracle-check: OK" : "oracle-check: FAILED") << '\n';
  return all_passed ? 0 : 1;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Minimum Bayes risk decoding over sampled hypotheses, with "
               "aggregated-reference utility estimation"};
  app.name("mbrdec");
  app.require_subcommand(1);

  SelectArgs select_args;
  CLI::App* select_cmd =
      app.add_subcommand("select", "Decode candidate sets from a JSONL file");
  add_common(select_cmd, select_args.common);
  select_cmd->add_option("--strategy", select_args.strategy,
                         "standard | aggregate | partial:S | nbys:S | "
                         "agg2fine:T | coarse2fine:T[:METRIC[:PROXY]] with "
                         "PROXY one of standard, aggregate, partial:S, nbys:S")
      ->capture_default_str();
  select_cmd->add_option("--input", select_args.input, "Candidate JSONL file")
      ->required();
  select_cmd->add_option("--output", select_args.output,
                         "Output JSONL path (default: stdout)");
  select_cmd->add_flag("--dedup", select_args.dedup,
                       "Fold duplicate references into weighted entries");
  select_cmd->add_flag("--emit-utilities", select_args.emit_utilities,
                       "Include per-hypothesis utilities in the output");

  SweepArgs sweep_args;
  CLI::App* sweep_cmd = app.add_subcommand(
      "sweep", "Top-k agreement of approximate strategies with the standard "
               "estimator across effective reference counts");
  add_common(sweep_cmd, sweep_args.common);
  sweep_cmd->add_option("--input", sweep_args.input, "Candidate JSONL file")
      ->required();
  sweep_cmd->add_option("--output", sweep_args.output, "Record JSONL path");
  sweep_cmd->add_option("--methods", sweep_args.methods,
                        "partial, nbys, proxy:METRIC")
      ->delimiter(',')
      ->capture_default_str();
  sweep_cmd->add_option("--s-values", sweep_args.s_values,
                        "Effective reference counts (default: full pool, then "
                        "descending powers of two)")
      ->delimiter(',');
  sweep_cmd->add_option("--k", sweep_args.k_values, "Top-k accuracy levels")
      ->delimiter(',')
      ->capture_default_str();
  sweep_cmd->add_flag("--timing", sweep_args.timing,
                      "Include wall-clock fields (breaks byte-for-byte "
                      "reproducibility of the report)");

  BenchArgs bench_args;
  CLI::App* bench_cmd = app.add_subcommand(
      "bench", "Time utility estimation strategies on synthetic candidates");
  add_common(bench_cmd, bench_args.common);
  bench_cmd->add_option("--n", bench_args.hypotheses, "Hypothesis count")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench_cmd->add_option("--m", bench_args.references,
                        "Reference count (default: same as --n)");
  bench_cmd->add_option("--strategies", bench_args.strategies,
                        "Strategies to time")
      ->delimiter(',')
      ->capture_default_str();
  bench_cmd->add_option("--repetitions", bench_args.repetitions,
                        "Timed repetitions per strategy")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench_cmd->add_option("--output", bench_args.output, "Record JSONL path");
  bench_cmd->add_option("--min-words", bench_args.gen.min_words, "Words per sentence, lower bound")
      ->capture_default_str();
  bench_cmd->add_option("--max-words", bench_args.gen.max_words, "Words per sentence, upper bound")
      ->capture_default_str();
  bench_cmd->add_option("--vocabulary", bench_args.gen.vocabulary,
                        "Lexicon size (0: fresh random words)")
      ->capture_default_str();
  bench_cmd->add_option("--alphabet", bench_args.gen.alphabet, "Word alphabet")
      ->capture_default_str();

  OracleArgs oracle_args;
  CLI::App* oracle_cmd = app.add_subcommand(
      "oracle-check", "Cross-check fast paths against naive reference "
                      "implementations on randomized inputs");
  oracle_cmd->add_option("--seed", oracle_args.seed, "Suite seed")
      ->capture_default_str();
  oracle_cmd->add_option("--pairs", oracle_args.pairs, "chrF pairs to check")
      ->capture_default_str();
  oracle_cmd->add_option("--overlap-instances", oracle_args.overlap_instances,
                         "Overlap instances to check")
      ->capture_default_str();
  oracle_cmd->add_option("--mbr-instances", oracle_args.mbr_instances,
                         "Standard-estimator instances to check")
      ->capture_default_str();
  oracle_cmd->add_flag("--inject-fault", oracle_args.inject_fault,
                       "Perturb one value per suite; every suite must then fail");

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("mbrdec");
  for (const std::string& arg : args) argv.push_back(arg.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    // Normalize parser failures to the documented usage-error code; --help
    // and --version exit 0 through here as well.
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (select_cmd->parsed()) return cmd_select(select_args, out);
    if (sweep_cmd->parsed()) return cmd_sweep(sweep_args, out);
    if (bench_cmd->parsed()) return cmd_bench(bench_args, out);
    if (oracle_cmd->parsed()) return cmd_oracle_check(oracle_args, out);
  } catch (const ConfigError& e) {
    err << "mbrdec: error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "mbrdec: error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "mbrdec: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace mbrd
