#include "mbrd/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>

#include "mbrd/errors.hpp"
#include "mbrd/text.hpp"

namespace mbrd {

namespace {

std::uint64_t now_nanos_since(const std::chrono::steady_clock::time_point& start) {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(
          std::chrono::steady_clock::now() - start)
          .count());
}

std::uint64_t median_of(std::vector<std::uint64_t> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n == 0) return 0;
  if (n % 2 == 1) return values[n / 2];
  return (values[n / 2 - 1] + values[n / 2]) / 2;
}

}  // namespace

bool topk_accuracy(const SelectionReport& baseline,
                   const SelectionReport& candidate, std::size_t k) {
  if (baseline.id != candidate.id) {
    throw ConfigError("topk_accuracy comparing segment \"" + baseline.id +
                      "\" against \"" + candidate.id + "\"");
  }
  if (baseline.ranking.size() != candidate.ranking.size()) {
    throw ConfigError("topk_accuracy comparing rankings of different size for \"" +
                      baseline.id + "\"");
  }
  if (k < 1) throw ConfigError("topk_accuracy needs k >= 1");
  const std::size_t take = std::min(k, candidate.ranking.size());
  const std::size_t target = baseline.selected_index;
  for (std::size_t r = 0; r < take; ++r) {
    if (candidate.ranking[r] == target) return true;
  }
  return false;
}

std::string SweepMethod::label() const {
  switch (kind) {
    case Kind::partial:
      return "partial";
    case Kind::n_by_s:
      return "nbys";
    case Kind::proxy_standard:
      return std::string("proxy:") +
             (proxy_metric != nullptr ? std::string(proxy_metric->name()) : "target");
  }
  return "unknown";
}

std::vector<std::size_t> default_effective_reference_grid(std::size_t max_refs) {
  std::vector<std::size_t> grid;
  if (max_refs == 0) return grid;
  grid.push_back(max_refs);
  std::size_t power = 1;
  while (power * 2 < max_refs) power *= 2;
  for (; power >= 1; power /= 2) {
    if (power < max_refs) grid.push_back(power);
    if (power == 1) break;
  }
  return grid;
}

std::vector<AccuracyReport> run_sweep(std::span<const CandidateSet> dataset,
                                      const UtilityMetric& metric,
                                      std::span<const SweepMethod> methods,
                                      const SweepOptions& options) {
  if (dataset.empty()) throw ConfigError("sweep needs at least one segment");
  if (options.k_values.empty()) throw ConfigError("sweep needs at least one k");
  for (std::size_t k : options.k_values) {
    if (k < 1) throw ConfigError("sweep needs k >= 1");
  }

  std::size_t max_refs = 0;
  for (const CandidateSet& set : dataset) {
    max_refs = std::max(max_refs, effective_references(set).size());
  }
  std::vector<std::size_t> grid = options.s_values;
  if (grid.empty()) {
    grid = default_effective_reference_grid(max_refs);
  } else {
    for (std::size_t s : grid) {
      if (s < 1) throw ConfigError("sweep effective reference counts must be >= 1");
    }
    std::sort(grid.begin(), grid.end(), std::greater<>());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  }

  // The agreement target: exhaustive pairwise estimation, computed once.
  std::vector<SelectionReport> baseline;
  baseline.reserve(dataset.size());
  SelectOptions select_options;
  select_options.jobs = options.jobs;
  for (const CandidateSet& set : dataset) {
    baseline.push_back(select_standard(set, metric, select_options));
  }

  std::vector<AccuracyReport> reports;
  for (const SweepMethod& method : methods) {
    if (method.kind == SweepMethod::Kind::proxy_standard &&
        method.proxy_metric == nullptr) {
      throw ConfigError("proxy_standard sweep method needs a proxy metric");
    }
    const std::vector<std::size_t> points =
        method.kind == SweepMethod::Kind::proxy_standard
            ? std::vector<std::size_t>{max_refs}
            : grid;

    // hits[point][k index], plus per-point cost accumulators
    std::vector<std::vector<std::size_t>> hits(
        points.size(), std::vector<std::size_t>(options.k_values.size(), 0));
    std::vector<double> calls(points.size(), 0.0);
    std::vector<double> nanos(points.size(), 0.0);

    for (std::size_t p = 0; p < points.size(); ++p) {
      for (std::size_t seg = 0; seg < dataset.size(); ++seg) {
        const CandidateSet& set = dataset[seg];
        const std::size_t pool = effective_references(set).size();
        SelectionReport report;
        if (method.kind == SweepMethod::Kind::proxy_standard) {
          report = select_standard(set, *method.proxy_metric, select_options);
        } else {
          Strategy strategy;
          strategy.kind = method.kind == SweepMethod::Kind::partial
                              ? Strategy::Kind::partial
                              : Strategy::Kind::n_by_s;
          strategy.effective_refs = std::min(points[p], pool);
          strategy.seed = options.seed ^ static_cast<std::uint64_t>(seg);
          report = select(set, metric, strategy, select_options);
        }
        for (std::size_t ki = 0; ki < options.k_values.size(); ++ki) {
          if (topk_accuracy(baseline[seg], report, options.k_values[ki])) {
            ++hits[p][ki];
          }
        }
        calls[p] += static_cast<double>(report.stats.metric_calls);
        nanos[p] += static_cast<double>(report.stats.wall_nanos);
      }
    }

    for (std::size_t ki = 0; ki < options.k_values.size(); ++ki) {
      AccuracyReport report;
      report.method = method.label();
      report.metric = std::string(metric.name());
      report.k = options.k_values[ki];
      report.segments = dataset.size();
      for (std::size_t p = 0; p < points.size(); ++p) {
        SweepPoint point;
        point.effective_refs = points[p];
        point.accuracy = static_cast<double>(hits[p][ki]) /
                         static_cast<double>(dataset.size());
        point.mean_metric_calls = calls[p] / static_cast<double>(dataset.size());
        point.mean_wall_nanos = nanos[p] / static_cast<double>(dataset.size());
        report.points.push_back(point);
      }
      reports.push_back(std::move(report));
    }
  }
  return reports;
}

TextGenerator::TextGenerator(const TextGenConfig& config, std::uint64_t seed)
    : config_(config), rng_(seed) {
  if (config.min_words < 1 || config.max_words < config.min_words) {
    throw ConfigError("text generator needs 1 <= min_words <= max_words");
  }
  if (config.min_word_len < 1 || config.max_word_len < config.min_word_len) {
    throw ConfigError("text generator needs 1 <= min_word_len <= max_word_len");
  }
  code_points_ = utf8_decode(config.alphabet);
  if (code_points_.empty()) throw ConfigError("text generator needs a non-empty alphabet");
  lexicon_.reserve(config.vocabulary);
  for (std::size_t i = 0; i < config.vocabulary; ++i) {
    lexicon_.push_back(random_word());
  }
}

std::string TextGenerator::random_word() {
  const std::size_t len =
      config_.min_word_len +
      static_cast<std::size_t>(
          rng_.below(config_.max_word_len - config_.min_word_len + 1));
  std::u32string word;
  word.reserve(len);
  for (std::size_t i = 0; i < len; ++i) {
    word.push_back(code_points_[static_cast<std::size_t>(rng_.below(code_points_.size()))]);
  }
  return utf8_encode(word);
}

std::string TextGenerator::sentence() {
  const std::size_t words =
      config_.min_words +
      static_cast<std::size_t>(rng_.below(config_.max_words - config_.min_words + 1));
  std::string out;
  for (std::size_t w = 0; w < words; ++w) {
    if (w > 0) out.push_back(' ');
    if (lexicon_.empty()) {
      out += random_word();
    } else {
      out += lexicon_[static_cast<std::size_t>(rng_.below(lexicon_.size()))];
    }
  }
  return out;
}

std::vector<CandidateSet> synthetic_dataset(std::size_t segments, std::size_t samples,
                                            const TextGenConfig& config,
                                            std::uint64_t seed) {
  if (segments < 1 || samples < 1) {
    throw ConfigError("synthetic dataset needs at least one segment and one sample");
  }
  TextGenerator generator(config, seed);
  std::vector<CandidateSet> dataset;
  dataset.reserve(segments);
  for (std::size_t seg = 0; seg < segments; ++seg) {
    CandidateSet set;
    char id[32];
    std::snprintf(id, sizeof id, "seg-%04zu", seg);
    set.id = id;
    set.source = generator.sentence();
    set.hypotheses.reserve(samples);
    for (std::size_t h = 0; h < samples; ++h) {
      set.hypotheses.push_back(generator.sentence());
    }
    dataset.push_back(std::move(set));
  }
  return dataset;
}

std::vector<BenchRun> bench_utility(std::size_t hypotheses, std::size_t references,
                                    const UtilityMetric& metric,
                                    std::span<const Strategy> strategies,
                                    int repetitions, const TextGenConfig& config,
                                    std::uint64_t seed, int jobs) {
  if (hypotheses < 1 || references < 1) {
    throw ConfigError("benchmark needs at least one hypothesis and one reference");
  }
  if (repetitions < 1) throw ConfigError("benchmark needs at least one repetition");

  TextGenerator generator(config, seed);
  CandidateSet set;
  set.id = "bench";
  set.source = generator.sentence();
  set.hypotheses.reserve(hypotheses);
  for (std::size_t h = 0; h < hypotheses; ++h) {
    set.hypotheses.push_back(generator.sentence());
  }
  if (references != hypotheses) {
    // Distinct pool; equal sizes reuse the hypotheses as references so
    // feature extraction is shared, the usual sampling setup.
    set.references.reserve(references);
    for (std::size_t r = 0; r < references; ++r) {
      set.references.push_back(generator.sentence());
    }
  }

  const auto extraction_started = std::chrono::steady_clock::now();
  std::unique_ptr<SegmentScorer> scorer = metric.prepare(set);
  const std::uint64_t extraction_nanos = now_nanos_since(extraction_started);

  std::vector<BenchRun> runs;
  runs.reserve(strategies.size());
  for (const Strategy& strategy : strategies) {
    if (strategy.kind == Strategy::Kind::coarse_to_fine &&
        !strategy.proxy_metric.empty() && strategy.proxy_metric != metric.name()) {
      throw ConfigError("benchmark runs a single metric; coarse-to-fine proxy \"" +
                        strategy.proxy_metric + "\" is not available");
    }
    BenchRun run;
    run.strategy = strategy.label();
    run.extraction_nanos = extraction_nanos;
    for (int rep = 0; rep < repetitions; ++rep) {
      const auto started = std::chrono::steady_clock::now();
      const UtilityEstimate est = estimate_utilities(*scorer, strategy, jobs);
      run.estimation_nanos.push_back(now_nanos_since(started));
      if (rep == 0) {
        run.metric_calls = est.metric_calls;
        run.aggregation_ops = est.aggregation_ops;
      } else if (run.metric_calls != est.metric_calls ||
                 run.aggregation_ops != est.aggregation_ops) {
        throw Error("benchmark operation counts changed between repetitions");
      }
    }
    run.median_nanos = median_of(run.estimation_nanos);
    runs.push_back(std::move(run));
  }
  return runs;
}

}  // namespace mbrd
