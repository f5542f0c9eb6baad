#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mbrd/metric.hpp"

namespace mbrd {

// How the expected utility of each hypothesis is estimated.
//
//   standard        mean of pairwise scores against every reference
//   aggregate       one score against the mean reference representation
//   partial         references shuffled into s groups, each aggregated;
//                   utility is the mean score over the s group aggregates
//   n_by_s          mean of pairwise scores against s references sampled
//                   without replacement
//   coarse_to_fine  a cheap proxy utility ranks all hypotheses, the top T
//                   are re-scored with the standard pairwise estimator
//
// With m references, partial:m matches standard and partial:1 matches
// aggregate. coarse_to_fine with T = n matches standard.
struct Strategy {
  enum class Kind { standard, aggregate, partial, n_by_s, coarse_to_fine };

  Kind kind = Kind::standard;
  std::size_t effective_refs = 0;  // s for partial / n_by_s
  std::size_t keep_top = 0;        // T for coarse_to_fine
  // coarse_to_fine proxy: any of the four base estimators, run under the
  // proxy metric when one is configured.
  Kind proxy_kind = Kind::aggregate;
  std::size_t proxy_effective_refs = 0;  // s when the proxy is partial / n_by_s
  // Metric name for the proxy stage, e.g. "chrf". Resolved by the caller to
  // a UtilityMetric in SelectOptions::proxy_metric; empty means the target
  // metric is reused.
  std::string proxy_metric;
  std::uint64_t seed = 0;  // drives partial grouping and n_by_s sampling

  // Parses a textual descriptor:
  //   "standard" | "aggregate" | "partial:S" | "nbys:S" |
  //   "agg2fine:T" | "coarse2fine:T[:METRIC[:PROXY]]"
  // where PROXY is "standard", "aggregate", "partial:S", or "nbys:S".
  // agg2fine uses the aggregate estimator under the target metric as proxy;
  // coarse2fine defaults to a standard pairwise proxy under METRIC.
  static Strategy parse(std::string_view text);

  // Canonical descriptor in the syntax accepted by parse().
  std::string label() const;
};

struct SelectionStats {
  std::uint64_t metric_calls = 0;     // score_pair + score_aggregate invocations
  std::uint64_t aggregation_ops = 0;  // references folded into aggregates
  std::uint64_t wall_nanos = 0;
};

struct SelectionReport {
  std::string id;
  std::string selected;             // text of the winning hypothesis
  std::size_t selected_index = 0;   // index into CandidateSet::hypotheses
  std::vector<double> utilities;    // one per hypothesis
  std::vector<std::size_t> ranking; // hypothesis indices, best first
  SelectionStats stats;
};

struct SelectOptions {
  // Fold duplicate references into one weighted entry before scoring.
  bool dedup = false;
  // Worker threads for the per-hypothesis scoring loops. Results and stats
  // are identical for any value.
  int jobs = 1;
  // Metric for the coarse_to_fine proxy stage; null reuses the target metric
  // (and its extracted features).
  const UtilityMetric* proxy_metric = nullptr;
};

// Deduplicated reference pool: unique texts in first-occurrence order plus
// their multiplicities.
struct DedupResult {
  CandidateSet candidates;               // references replaced by unique list
  std::vector<double> weights;           // multiplicity per unique reference
  std::vector<std::size_t> position_map; // original position -> unique index
};

DedupResult dedup_references(const CandidateSet& set);

// Hypothesis indices sorted by utility, highest first; ties broken toward
// the lowest index. Comparisons are exact.
std::vector<std::size_t> rank_utilities(std::span<const double> utilities);

// Utility estimation on an already prepared scorer. For coarse_to_fine,
// `scorer` runs the proxy stage and `fine_scorer` (default: scorer itself)
// the pairwise re-scoring. Counters are accumulated where calls happen.
struct UtilityEstimate {
  std::vector<double> utilities;
  std::vector<std::size_t> ranking;
  std::uint64_t metric_calls = 0;
  std::uint64_t aggregation_ops = 0;
};

UtilityEstimate estimate_utilities(SegmentScorer& scorer, const Strategy& strategy,
                                   int jobs = 1, SegmentScorer* fine_scorer = nullptr);

// Full decoding of one segment: prepare features, estimate utilities, rank.
// Errors are rethrown with the segment id prepended.
SelectionReport select(const CandidateSet& set, const UtilityMetric& metric,
                       const Strategy& strategy, const SelectOptions& options = {});

SelectionReport select_standard(const CandidateSet& set, const UtilityMetric& metric,
                                const SelectOptions& options = {});
SelectionReport select_aggregate(const CandidateSet& set, const UtilityMetric& metric,
                                 const SelectOptions& options = {});
SelectionReport select_partial(const CandidateSet& set, const UtilityMetric& metric,
                               std::size_t effective_refs, std::uint64_t seed,
                               const SelectOptions& options = {});
SelectionReport select_n_by_s(const CandidateSet& set, const UtilityMetric& metric,
                              std::size_t effective_refs, std::uint64_t seed,
                              const SelectOptions& options = {});
// Aggregate proxy under the target metric, then pairwise on the top keep_top.
SelectionReport select_coarse_to_fine(const CandidateSet& set,
                                      const UtilityMetric& metric,
                                      std::size_t keep_top,
                                      const SelectOptions& options = {});
// Explicit proxy stage: any base strategy (standard, aggregate, partial,
// n_by_s), run under options.proxy_metric when given.
SelectionReport select_coarse_to_fine(const CandidateSet& set,
                                      const Strategy& proxy_strategy,
                                      const UtilityMetric& metric,
                                      std::size_t keep_top,
                                      const SelectOptions& options = {});

}  // namespace mbrd
