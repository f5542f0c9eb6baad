#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mbrd/engine.hpp"
#include "mbrd/rng.hpp"

namespace mbrd {

// True when the hypothesis picked by `baseline` appears among the first k
// entries of `candidate`'s ranking. Both reports must describe the same
// segment (matching id and hypothesis count).
bool topk_accuracy(const SelectionReport& baseline,
                   const SelectionReport& candidate, std::size_t k);

// An approximation whose agreement with the standard estimator is measured
// across a sweep of effective reference counts.
//   partial         partial aggregation with s groups
//   n_by_s          pairwise against s sampled references
//   proxy_standard  standard estimation under a cheaper metric; independent
//                   of s, reported as a single point at the full pool size
struct SweepMethod {
  enum class Kind { partial, n_by_s, proxy_standard };
  Kind kind = Kind::partial;
  const UtilityMetric* proxy_metric = nullptr;  // proxy_standard only

  std::string label() const;
};

struct SweepPoint {
  std::size_t effective_refs = 0;  // clamped per segment to its pool size
  double accuracy = 0.0;
  double mean_metric_calls = 0.0;
  double mean_wall_nanos = 0.0;
};

struct AccuracyReport {
  std::string method;
  std::string metric;
  std::size_t k = 0;
  std::size_t segments = 0;
  std::vector<SweepPoint> points;  // descending effective_refs
};

struct SweepOptions {
  // Effective reference counts to test; empty selects the full pool size
  // followed by descending powers of two.
  std::vector<std::size_t> s_values;
  std::vector<std::size_t> k_values{1, 20};
  std::uint64_t seed = 0;
  int jobs = 1;
};

// Full pool size, then each power of two below it, down to 1.
std::vector<std::size_t> default_effective_reference_grid(std::size_t max_refs);

// Runs every method over the grid and reports top-k agreement with the
// standard estimator under `metric`. The baseline is computed once per
// segment; per-segment seeds are options.seed XOR the segment index.
std::vector<AccuracyReport> run_sweep(std::span<const CandidateSet> dataset,
                                      const UtilityMetric& metric,
                                      std::span<const SweepMethod> methods,
                                      const SweepOptions& options);

// Synthetic text for benchmarks and self-checks: seeded sentences of random
// words. With a nonzero vocabulary, words are drawn from a fixed seeded
// lexicon so sampled sentences share n-grams the way real samples do;
// vocabulary 0 generates fresh random words every time.
struct TextGenConfig {
  std::string alphabet = "abcdefghijklmnopqrstuvwxyz";
  std::size_t min_words = 10;
  std::size_t max_words = 40;
  std::size_t min_word_len = 2;
  std::size_t max_word_len = 9;
  std::size_t vocabulary = 1000;
};

class TextGenerator {
 public:
  TextGenerator(const TextGenConfig& config, std::uint64_t seed);
  std::string sentence();

 private:
  std::string random_word();

  TextGenConfig config_;
  Rng rng_;
  std::u32string code_points_;
  std::vector<std::string> lexicon_;
};

// `segments` candidate sets of `samples` hypotheses each; hypotheses double
// as references.
std::vector<CandidateSet> synthetic_dataset(std::size_t segments,
                                            std::size_t samples,
                                            const TextGenConfig& config,
                                            std::uint64_t seed);

// One timed strategy execution over a prepared segment. Feature extraction
// is shared by all strategies and timed separately, so estimation_nanos
// isolates the utility estimation phase.
struct BenchRun {
  std::string strategy;
  std::uint64_t metric_calls = 0;
  std::uint64_t aggregation_ops = 0;
  std::vector<std::uint64_t> estimation_nanos;  // one entry per repetition
  std::uint64_t median_nanos = 0;
  std::uint64_t extraction_nanos = 0;
};

std::vector<BenchRun> bench_utility(std::size_t hypotheses, std::size_t references,
                                    const UtilityMetric& metric,
                                    std::span<const Strategy> strategies,
                                    int repetitions, const TextGenConfig& config,
                                    std::uint64_t seed, int jobs = 1);

}  // namespace mbrd
