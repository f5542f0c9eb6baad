#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"
#include "mbrd/engine.hpp"
#include "mbrd/oracle.hpp"
#include "mbrd/rng.hpp"
#include "mbrd/text.hpp"

using mbrd::CandidateSet;
using mbrd::ChrfMetric;
using mbrd::ChrfParams;
using mbrd::ConfigError;
using mbrd::DedupResult;
using mbrd::SelectionReport;
using mbrd::SelectOptions;
using mbrd::Strategy;

namespace {

CandidateSet make_set(std::vector<std::string> hyps,
                      std::vector<std::string> refs = {},
                      std::string id = "seg") {
  CandidateSet set;
  set.id = std::move(id);
  set.hypotheses = std::move(hyps);
  set.references = std::move(refs);
  return set;
}

std::string random_text(mbrd::Rng& rng, std::size_t max_len) {
  static const std::u32string alphabet = U"abcd e";
  const std::size_t len = rng.below(max_len + 1);
  std::u32string points;
  for (std::size_t i = 0; i < len; ++i) {
    points.push_back(alphabet[rng.below(alphabet.size())]);
  }
  return mbrd::utf8_encode(points);
}

CandidateSet random_set(mbrd::Rng& rng, std::size_t n, std::size_t m,
                        std::string id = "seg") {
  CandidateSet set;
  set.id = std::move(id);
  for (std::size_t i = 0; i < n; ++i) set.hypotheses.push_back(random_text(rng, 8));
  for (std::size_t i = 0; i < m; ++i) set.references.push_back(random_text(rng, 8));
  return set;
}

void check_close(std::span<const double> a, std::span<const double> b,
                 double tol) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(std::abs(a[i] - b[i]) <= tol);
  }
}

// Scorer that records every call so estimator bookkeeping (grouping, weights,
// sampled indices) can be observed directly. Only valid with jobs = 1.
class RecordingScorer final : public mbrd::SegmentScorer {
 public:
  RecordingScorer(std::size_t hyps, std::size_t refs) : hyps_(hyps), refs_(refs) {}

  std::size_t hypothesis_count() const noexcept override { return hyps_; }
  std::size_t reference_count() const noexcept override { return refs_; }

  double score_pair(std::size_t hyp, std::size_t ref) override {
    pair_calls.emplace_back(hyp, ref);
    return static_cast<double>(hyp * 100 + ref);
  }

  std::size_t add_aggregate(std::span<const std::size_t> refs,
                            std::span<const double> weights) override {
    groups.emplace_back(std::vector<std::size_t>(refs.begin(), refs.end()),
                        std::vector<double>(weights.begin(), weights.end()));
    return groups.size() - 1;
  }

  double score_aggregate(std::size_t hyp, std::size_t aggregate) override {
    aggregate_calls.emplace_back(hyp, aggregate);
    return static_cast<double>(hyp) + 0.125 * static_cast<double>(aggregate);
  }

  std::vector<std::pair<std::size_t, std::size_t>> pair_calls;
  std::vector<std::pair<std::size_t, std::size_t>> aggregate_calls;
  std::vector<std::pair<std::vector<std::size_t>, std::vector<double>>> groups;

 private:
  std::size_t hyps_;
  std::size_t refs_;
};

// Metric whose scorer returns a non-finite utility, for the validation path.
class NanMetric final : public mbrd::UtilityMetric {
  class Scorer final : public mbrd::SegmentScorer {
   public:
    explicit Scorer(const CandidateSet& set)
        : hyps_(set.hypotheses.size()),
          refs_(mbrd::effective_references(set).size()) {}
    std::size_t hypothesis_count() const noexcept override { return hyps_; }
    std::size_t reference_count() const noexcept override { return refs_; }
    double score_pair(std::size_t, std::size_t) override {
      return std::numeric_limits<double>::quiet_NaN();
    }
    std::size_t add_aggregate(std::span<const std::size_t>,
                              std::span<const double>) override {
      return 0;
    }
    double score_aggregate(std::size_t, std::size_t) override {
      return std::numeric_limits<double>::quiet_NaN();
    }

   private:
    std::size_t hyps_;
    std::size_t refs_;
  };

 public:
  std::string_view name() const noexcept override { return "nan"; }
  std::unique_ptr<mbrd::SegmentScorer> prepare(const CandidateSet& set) const override {
    return std::make_unique<Scorer>(set);
  }
};

}  // namespace

TEST_CASE("strategy descriptors parse and print canonically") {
  const std::vector<std::string> round_trips{
      "standard",
      "aggregate",
      "partial:4",
      "nbys:8",
      "agg2fine:16",
      "coarse2fine:8:chrf",
      "coarse2fine:8:chrf:aggregate",
      "coarse2fine:8:chrf:partial:4",
      "coarse2fine:8:chrf:nbys:2",
      "coarse2fine:8::partial:4",
  };
  for (const std::string& text : round_trips) {
    CAPTURE(text);
    CHECK(Strategy::parse(text).label() == text);
  }

  const Strategy partial = Strategy::parse("partial:4");
  CHECK(partial.kind == Strategy::Kind::partial);
  CHECK(partial.effective_refs == 4);

  const Strategy agg2fine = Strategy::parse("agg2fine:16");
  CHECK(agg2fine.kind == Strategy::Kind::coarse_to_fine);
  CHECK(agg2fine.keep_top == 16);
  CHECK(agg2fine.proxy_kind == Strategy::Kind::aggregate);
  CHECK(agg2fine.proxy_metric.empty());
  CHECK(agg2fine.label() == "agg2fine:16");

  const Strategy c2f = Strategy::parse("coarse2fine:8");
  CHECK(c2f.proxy_kind == Strategy::Kind::standard);
  CHECK(c2f.label() == "coarse2fine:8");

  const Strategy proxied = Strategy::parse("coarse2fine:8:chrf:partial:4");
  CHECK(proxied.proxy_kind == Strategy::Kind::partial);
  CHECK(proxied.proxy_effective_refs == 4);
  CHECK(proxied.proxy_metric == "chrf");
}

TEST_CASE("strategy parse rejects malformed descriptors") {
  const std::vector<std::string> bad{
      "unknown",
      "",
      "standard:1",
      "aggregate:",
      "partial",
      "partial:",
      "partial:0",
      "partial:x",
      "partial:-1",
      "nbys",
      "nbys:0",
      "agg2fine",
      "agg2fine:0",
      "agg2fine:2:chrf",
      "coarse2fine",
      "coarse2fine:0",
      "coarse2fine:2:chrf:bogus",
      "coarse2fine:2:chrf:partial",
      "coarse2fine:2:chrf:nbys:0",
      "coarse2fine:2:chrf:standard:3",
      "coarse2fine:2:chrf:aggregate:3",
      "coarse2fine:2:chrf:partial:4:extra",
  };
  for (const std::string& text : bad) {
    CAPTURE(text);
    CHECK_THROWS_AS(Strategy::parse(text), ConfigError);
  }
}

TEST_CASE("rank_utilities sorts descending with lowest-index ties") {
  const std::vector<double> utilities{1.0, 3.0, 3.0, 2.0, 3.0};
  const std::vector<std::size_t> ranking =
      mbrd::rank_utilities(std::span<const double>(utilities));
  CHECK(ranking == std::vector<std::size_t>{1, 2, 4, 3, 0});
  const std::vector<double> empty;
  CHECK(mbrd::rank_utilities(std::span<const double>(empty)).empty());
}

TEST_CASE("dedup_references folds duplicates in first-occurrence order") {
  const CandidateSet set =
      make_set({"h"}, {"alpha", "beta", "alpha", "gamma", "beta", "alpha"});
  const DedupResult dedup = mbrd::dedup_references(set);
  CHECK(dedup.candidates.references ==
        std::vector<std::string>{"alpha", "beta", "gamma"});
  CHECK(dedup.weights == std::vector<double>{3.0, 2.0, 1.0});
  CHECK(dedup.position_map == std::vector<std::size_t>{0, 1, 0, 2, 1, 0});

  const CandidateSet unique = make_set({"h"}, {"a", "b"});
  const DedupResult none = mbrd::dedup_references(unique);
  CHECK(none.candidates.references == unique.references);
  CHECK(none.weights == std::vector<double>{1.0, 1.0});
}

TEST_CASE("standard estimator reproduces the naive pairwise mean exactly") {
  const ChrfMetric metric;
  mbrd::Rng rng(4242);
  for (int instance = 0; instance < 40; ++instance) {
    const std::size_t n = 1 + rng.below(8);
    const std::size_t m = 1 + rng.below(8);
    const CandidateSet set = random_set(rng, n, m);
    const SelectionReport report = mbrd::select_standard(set, metric);
    const std::vector<double> expected =
        mbrd::oracle::naive_standard_utilities(set.hypotheses, set.references);
    REQUIRE(report.utilities.size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
      CHECK(report.utilities[i] == expected[i]);  // bitwise
    }
    CHECK(report.stats.metric_calls == n * m);
    CHECK(report.stats.aggregation_ops == 0);
    CHECK(report.ranking == mbrd::rank_utilities(report.utilities));
    CHECK(report.selected_index == report.ranking.front());
    CHECK(report.selected == set.hypotheses[report.selected_index]);
  }
}

TEST_CASE("missing references reuse the hypothesis list") {
  const ChrfMetric metric;
  CandidateSet implicit = make_set({"aa", "ab", "cc"});
  CandidateSet explicit_set = make_set({"aa", "ab", "cc"}, {"aa", "ab", "cc"});
  const SelectionReport a = mbrd::select_standard(implicit, metric);
  const SelectionReport b = mbrd::select_standard(explicit_set, metric);
  CHECK(a.utilities == b.utilities);
  CHECK(a.selected_index == b.selected_index);
}

TEST_CASE("aggregate estimator scores one mean reference") {
  ChrfParams params;
  params.max_order = 2;
  const ChrfMetric metric(params);
  const CandidateSet set = make_set({"ab"}, {"ab", "ac"});
  const SelectionReport report = mbrd::select_aggregate(set, metric);
  REQUIRE(report.utilities.size() == 1);
  CHECK(report.utilities[0] == doctest::Approx(62.5).epsilon(1e-12));
  CHECK(report.stats.metric_calls == 1);
  CHECK(report.stats.aggregation_ops == 2);
}

TEST_CASE("aggregate groups every reference with uniform weights") {
  RecordingScorer scorer(3, 5);
  Strategy strategy;
  strategy.kind = Strategy::Kind::aggregate;
  const mbrd::UtilityEstimate est = mbrd::estimate_utilities(scorer, strategy);
  REQUIRE(scorer.groups.size() == 1);
  CHECK(scorer.groups[0].first == std::vector<std::size_t>{0, 1, 2, 3, 4});
  for (double w : scorer.groups[0].second) CHECK(w == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(scorer.aggregate_calls.size() == 3);
  CHECK(est.metric_calls == 3);
  CHECK(est.aggregation_ops == 5);
}

TEST_CASE("partial splits shuffled references into near-equal groups") {
  RecordingScorer scorer(2, 5);
  Strategy strategy;
  strategy.kind = Strategy::Kind::partial;
  strategy.effective_refs = 2;
  strategy.seed = 11;
  const mbrd::UtilityEstimate est = mbrd::estimate_utilities(scorer, strategy);

  REQUIRE(scorer.groups.size() == 2);
  // 5 references in 2 groups: the first takes the extra one.
  CHECK(scorer.groups[0].first.size() == 3);
  CHECK(scorer.groups[1].first.size() == 2);
  std::set<std::size_t> seen;
  for (const auto& [refs, weights] : scorer.groups) {
    double total = 0.0;
    for (double w : weights) total += w;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    for (double w : weights) {
      CHECK(w == doctest::Approx(1.0 / refs.size()).epsilon(1e-12));
    }
    seen.insert(refs.begin(), refs.end());
  }
  CHECK(seen == std::set<std::size_t>{0, 1, 2, 3, 4});

  // Each hypothesis is scored once per group.
  CHECK(est.metric_calls == 2 * 2);
  CHECK(est.aggregation_ops == 5);
}

TEST_CASE("n_by_s samples one sorted reference subset for all hypotheses") {
  RecordingScorer scorer(3, 8);
  Strategy strategy;
  strategy.kind = Strategy::Kind::n_by_s;
  strategy.effective_refs = 3;
  strategy.seed = 5;
  const mbrd::UtilityEstimate est = mbrd::estimate_utilities(scorer, strategy);
  CHECK(est.metric_calls == 9);
  CHECK(est.aggregation_ops == 0);
  REQUIRE(scorer.pair_calls.size() == 9);

  std::vector<std::size_t> first_sample;
  for (std::size_t i = 0; i < 3; ++i) first_sample.push_back(scorer.pair_calls[i].second);
  CHECK(std::is_sorted(first_sample.begin(), first_sample.end()));
  CHECK(std::set<std::size_t>(first_sample.begin(), first_sample.end()).size() == 3);
  for (std::size_t hyp = 0; hyp < 3; ++hyp) {
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(scorer.pair_calls[hyp * 3 + i].first == hyp);
      CHECK(scorer.pair_calls[hyp * 3 + i].second == first_sample[i]);
    }
  }
}

TEST_CASE("partial with s=m matches standard, s=1 matches aggregate") {
  const ChrfMetric metric;
  mbrd::Rng rng(77);
  for (int instance = 0; instance < 25; ++instance) {
    const std::size_t n = 1 + rng.below(6);
    const std::size_t m = 1 + rng.below(10);
    const CandidateSet set = random_set(rng, n, m);
    const SelectionReport standard = mbrd::select_standard(set, metric);
    const SelectionReport aggregate = mbrd::select_aggregate(set, metric);
    const std::uint64_t seed = rng.next();

    const SelectionReport as_standard = mbrd::select_partial(set, metric, m, seed);
    check_close(as_standard.utilities, standard.utilities, 1e-9);
    CHECK(as_standard.ranking == standard.ranking);
    CHECK(as_standard.selected_index == standard.selected_index);

    const SelectionReport as_aggregate = mbrd::select_partial(set, metric, 1, seed);
    check_close(as_aggregate.utilities, aggregate.utilities, 1e-9);
    CHECK(as_aggregate.ranking == aggregate.ranking);
  }
}

TEST_CASE("n_by_s with s=m is bitwise identical to standard") {
  const ChrfMetric metric;
  mbrd::Rng rng(88);
  for (int instance = 0; instance < 25; ++instance) {
    const std::size_t n = 1 + rng.below(6);
    const std::size_t m = 1 + rng.below(10);
    const CandidateSet set = random_set(rng, n, m);
    const SelectionReport standard = mbrd::select_standard(set, metric);
    const SelectionReport sampled = mbrd::select_n_by_s(set, metric, m, rng.next());
    CHECK(sampled.utilities == standard.utilities);  // bitwise
    CHECK(sampled.ranking == standard.ranking);
    CHECK(sampled.stats.metric_calls == standard.stats.metric_calls);
  }
}

TEST_CASE("seeded approximations are deterministic and seed-sensitive") {
  const ChrfMetric metric;
  mbrd::Rng rng(123);
  const CandidateSet set = random_set(rng, 6, 12);

  const SelectionReport p1 = mbrd::select_partial(set, metric, 3, 42);
  const SelectionReport p2 = mbrd::select_partial(set, metric, 3, 42);
  CHECK(p1.utilities == p2.utilities);
  CHECK(p1.ranking == p2.ranking);

  const SelectionReport n1 = mbrd::select_n_by_s(set, metric, 4, 42);
  const SelectionReport n2 = mbrd::select_n_by_s(set, metric, 4, 42);
  CHECK(n1.utilities == n2.utilities);

  // Other seeds regroup/resample; across several the utilities must move.
  bool partial_moved = false;
  bool nbys_moved = false;
  for (std::uint64_t seed = 43; seed < 49; ++seed) {
    partial_moved |= mbrd::select_partial(set, metric, 3, seed).utilities != p1.utilities;
    nbys_moved |= mbrd::select_n_by_s(set, metric, 4, seed).utilities != n1.utilities;
  }
  CHECK(partial_moved);
  CHECK(nbys_moved);
}

TEST_CASE("estimator call counts follow the complexity contract") {
  const ChrfMetric metric;
  mbrd::Rng rng(55);
  const std::size_t n = 7;
  const std::size_t m = 9;
  const CandidateSet set = random_set(rng, n, m);

  CHECK(mbrd::select_standard(set, metric).stats.metric_calls == n * m);
  CHECK(mbrd::select_standard(set, metric).stats.aggregation_ops == 0);

  const SelectionReport agg = mbrd::select_aggregate(set, metric);
  CHECK(agg.stats.metric_calls == n);
  CHECK(agg.stats.aggregation_ops == m);

  for (const std::size_t s : {1ul, 3ul, 9ul}) {
    const SelectionReport partial = mbrd::select_partial(set, metric, s, 1);
    CHECK(partial.stats.metric_calls == n * s);
    CHECK(partial.stats.aggregation_ops == m);
    const SelectionReport nbys = mbrd::select_n_by_s(set, metric, s, 1);
    CHECK(nbys.stats.metric_calls == n * s);
    CHECK(nbys.stats.aggregation_ops == 0);
  }

  for (const std::size_t T : {1ul, 4ul, 7ul}) {
    Strategy strategy = Strategy::parse("agg2fine:" + std::to_string(T));
    const SelectionReport c2f = mbrd::select(set, metric, strategy);
    CHECK(c2f.stats.metric_calls == n + T * m);
    CHECK(c2f.stats.aggregation_ops == m);
  }
}

TEST_CASE("out-of-range strategy parameters are rejected with the segment id") {
  const ChrfMetric metric;
  const CandidateSet set = make_set({"a", "b"}, {"x", "y"}, "seg-X");
  auto expect = [&](const Strategy& strategy, const char* needle) {
    try {
      mbrd::select(set, metric, strategy);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      const std::string what = e.what();
      CHECK(what.find("segment \"seg-X\"") != std::string::npos);
      CHECK(what.find(needle) != std::string::npos);
    }
  };
  Strategy partial;
  partial.kind = Strategy::Kind::partial;
  partial.effective_refs = 10;
  expect(partial, "partial aggregation");

  Strategy nbys;
  nbys.kind = Strategy::Kind::n_by_s;
  nbys.effective_refs = 3;
  expect(nbys, "n-by-s");

  Strategy c2f;
  c2f.kind = Strategy::Kind::coarse_to_fine;
  c2f.keep_top = 5;
  expect(c2f, "keep_top");

  const CandidateSet empty_hyps = make_set({}, {"x"}, "seg-X");
  CHECK_THROWS_AS(mbrd::select_standard(empty_hyps, metric), ConfigError);
}

TEST_CASE("non-finite utilities are detected") {
  const NanMetric metric;
  const CandidateSet set = make_set({"a"}, {"b"}, "seg-nan");
  try {
    mbrd::select_standard(set, metric);
    FAIL("expected Error");
  } catch (const mbrd::Error& e) {
    const std::string what = e.what();
    CHECK(what.find("non-finite utility") != std::string::npos);
    CHECK(what.find("seg-nan") != std::string::npos);
  }
}

TEST_CASE("coarse-to-fine with T=n reproduces the standard result") {
  const ChrfMetric metric;
  mbrd::Rng rng(31);
  for (int instance = 0; instance < 25; ++instance) {
    const std::size_t n = 1 + rng.below(8);
    const CandidateSet set = random_set(rng, n, 1 + rng.below(8));
    const SelectionReport standard = mbrd::select_standard(set, metric);
    const SelectionReport refined = mbrd::select_coarse_to_fine(set, metric, n);
    CHECK(refined.selected_index == standard.selected_index);
    CHECK(refined.ranking == standard.ranking);
    CHECK(refined.utilities == standard.utilities);  // all hypotheses re-scored
  }
}

TEST_CASE("coarse-to-fine with T=1 selects the proxy argmax") {
  const ChrfMetric metric;
  mbrd::Rng rng(32);
  for (int instance = 0; instance < 25; ++instance) {
    const CandidateSet set = random_set(rng, 2 + rng.below(6), 1 + rng.below(8));
    const SelectionReport proxy = mbrd::select_aggregate(set, metric);
    const SelectionReport refined = mbrd::select_coarse_to_fine(set, metric, 1);
    CHECK(refined.selected_index == proxy.selected_index);
    CHECK(refined.ranking.front() == proxy.ranking.front());
  }
}

TEST_CASE("coarse-to-fine ranks survivors before pruned hypotheses") {
  const ChrfMetric metric;
  mbrd::Rng rng(33);
  const std::size_t n = 8;
  const std::size_t T = 3;
  const CandidateSet set = random_set(rng, n, 6);
  const SelectionReport proxy = mbrd::select_aggregate(set, metric);
  const SelectionReport standard = mbrd::select_standard(set, metric);
  const SelectionReport refined = mbrd::select_coarse_to_fine(set, metric, T);

  // Survivors: T best under the proxy, re-ranked by their standard utility.
  std::vector<std::size_t> survivors(proxy.ranking.begin(), proxy.ranking.begin() + T);
  std::sort(survivors.begin(), survivors.end(), [&](std::size_t a, std::size_t b) {
    if (standard.utilities[a] != standard.utilities[b]) {
      return standard.utilities[a] > standard.utilities[b];
    }
    return a < b;
  });
  const std::vector<std::size_t> head(refined.ranking.begin(),
                                      refined.ranking.begin() + T);
  CHECK(head == survivors);
  // Pruned tail keeps the proxy order.
  const std::vector<std::size_t> tail(refined.ranking.begin() + T,
                                      refined.ranking.end());
  const std::vector<std::size_t> proxy_tail(proxy.ranking.begin() + T,
                                            proxy.ranking.end());
  CHECK(tail == proxy_tail);
  // Survivor utilities are the standard ones; pruned keep proxy utilities.
  for (std::size_t idx : head) {
    CHECK(refined.utilities[idx] == standard.utilities[idx]);
  }
  for (std::size_t idx : tail) {
    CHECK(refined.utilities[idx] == proxy.utilities[idx]);
  }
}

TEST_CASE("coarse-to-fine under a cheaper proxy metric still refines correctly") {
  const ChrfMetric target;  // order-6 chrF
  ChrfParams cheap;
  cheap.max_order = 1;
  const ChrfMetric proxy_metric(cheap);

  // Under unigrams the reversed string ties with the exact match; order-6
  // chrF separates them.
  const CandidateSet set = make_set({"fedcba", "abcdef"}, {"abcdef", "abcdXf"});
  SelectOptions options;
  options.proxy_metric = &proxy_metric;

  Strategy c2f;
  c2f.kind = Strategy::Kind::coarse_to_fine;
  c2f.proxy_kind = Strategy::Kind::standard;
  c2f.keep_top = 1;
  const SelectionReport coarse = mbrd::select(set, target, c2f, options);
  CHECK(coarse.selected_index == 0);  // proxy tie resolves to the lower index
  CHECK(coarse.stats.metric_calls == 2 * 2 + 1 * 2);

  c2f.keep_top = 2;
  const SelectionReport fine = mbrd::select(set, target, c2f, options);
  const SelectionReport standard = mbrd::select_standard(set, target);
  CHECK(fine.selected_index == standard.selected_index);
  CHECK(fine.selected_index == 1);
  CHECK(fine.utilities == standard.utilities);
}

TEST_CASE("coarse-to-fine accepts any base strategy as proxy") {
  const ChrfMetric metric;
  mbrd::Rng rng(34);
  const std::size_t n = 6;
  const std::size_t m = 10;
  const CandidateSet set = random_set(rng, n, m);
  const SelectionReport standard = mbrd::select_standard(set, metric);

  for (const std::string proxy : {"partial:4", "nbys:4"}) {
    Strategy proxy_strategy = Strategy::parse(proxy);
    proxy_strategy.seed = 9;
    const SelectionReport report =
        mbrd::select_coarse_to_fine(set, proxy_strategy, metric, n);
    CHECK(report.selected_index == standard.selected_index);
    CHECK(report.ranking == standard.ranking);
    CHECK(report.utilities == standard.utilities);
    CHECK(report.stats.metric_calls == n * 4 + n * m);

    // The wrapper matches the parsed descriptor end to end.
    Strategy parsed =
        Strategy::parse("coarse2fine:" + std::to_string(n) + "::" + proxy);
    parsed.seed = 9;
    const SelectionReport direct = mbrd::select(set, metric, parsed);
    CHECK(direct.utilities == report.utilities);
    CHECK(direct.ranking == report.ranking);
    CHECK(direct.stats.metric_calls == report.stats.metric_calls);
  }

  Strategy nested;
  nested.kind = Strategy::Kind::coarse_to_fine;
  nested.keep_top = 1;
  CHECK_THROWS_AS(mbrd::select_coarse_to_fine(set, nested, metric, 2), ConfigError);
}

TEST_CASE("aggregate-proxy refinement agrees with standard when the winner survives") {
  const ChrfMetric metric;
  mbrd::Rng rng(35);
  int agreements = 0;
  for (int instance = 0; instance < 30; ++instance) {
    const std::size_t n = 4 + rng.below(8);
    const std::size_t T = 2;
    const CandidateSet set = random_set(rng, n, 6);
    const SelectionReport standard = mbrd::select_standard(set, metric);
    const SelectionReport proxy = mbrd::select_aggregate(set, metric);
    const bool winner_survives =
        std::find(proxy.ranking.begin(), proxy.ranking.begin() + T,
                  standard.selected_index) != proxy.ranking.begin() + T;
    const SelectionReport refined = mbrd::select_coarse_to_fine(set, metric, T);
    if (winner_survives) {
      CHECK(refined.selected_index == standard.selected_index);
      ++agreements;
    }
  }
  CHECK(agreements > 0);  // the conditional branch was actually exercised
}

TEST_CASE("reference order does not change standard or aggregate utilities") {
  const ChrfMetric metric;
  mbrd::Rng rng(66);
  CandidateSet set = random_set(rng, 5, 8);
  const SelectionReport standard = mbrd::select_standard(set, metric);
  const SelectionReport aggregate = mbrd::select_aggregate(set, metric);

  CandidateSet permuted = set;
  for (int round = 0; round < 5; ++round) {
    rng.shuffle(permuted.references);
    check_close(mbrd::select_standard(permuted, metric).utilities,
                standard.utilities, 1e-9);
    check_close(mbrd::select_aggregate(permuted, metric).utilities,
                aggregate.utilities, 1e-9);
  }
}

TEST_CASE("dedup folds duplicate references without changing utilities") {
  const ChrfMetric metric;
  const CandidateSet set = make_set(
      {"the cat", "a cat", "the bat"},
      {"the cat", "a cat", "the cat", "the rat", "a cat", "the cat"}, "dup");
  SelectOptions dedup;
  dedup.dedup = true;

  const SelectionReport plain = mbrd::select_standard(set, metric);
  const SelectionReport folded = mbrd::select_standard(set, metric, dedup);
  check_close(folded.utilities, plain.utilities, 1e-9);
  CHECK(folded.ranking == plain.ranking);
  CHECK(plain.stats.metric_calls == 3 * 6);
  CHECK(folded.stats.metric_calls == 3 * 3);  // three unique references

  const SelectionReport agg_plain = mbrd::select_aggregate(set, metric);
  const SelectionReport agg_folded = mbrd::select_aggregate(set, metric, dedup);
  check_close(agg_folded.utilities, agg_plain.utilities, 1e-9);
  CHECK(agg_folded.stats.aggregation_ops == 3);
  CHECK(agg_plain.stats.aggregation_ops == 6);

  // Seeded strategies shuffle expanded positions, so grouping is unchanged.
  const SelectionReport part_plain = mbrd::select_partial(set, metric, 2, 7);
  const SelectionReport part_folded = mbrd::select_partial(set, metric, 2, 7, dedup);
  check_close(part_folded.utilities, part_plain.utilities, 1e-9);
  const SelectionReport nbys_plain = mbrd::select_n_by_s(set, metric, 3, 7);
  const SelectionReport nbys_folded = mbrd::select_n_by_s(set, metric, 3, 7, dedup);
  check_close(nbys_folded.utilities, nbys_plain.utilities, 1e-9);
}

TEST_CASE("dedup on all-unique references is bitwise inert") {
  const ChrfMetric metric;
  const CandidateSet set =
      make_set({"cab", "dab", "ace", "bed"},
               {"cab a", "dab b", "ace c", "bed d", "cad e", "fee f"}, "uniq");
  SelectOptions dedup;
  dedup.dedup = true;
  for (const char* descriptor : {"standard", "aggregate", "partial:3", "nbys:2"}) {
    Strategy strategy = Strategy::parse(descriptor);
    strategy.seed = 3;
    const SelectionReport plain = mbrd::select(set, metric, strategy);
    const SelectionReport folded = mbrd::select(set, metric, strategy, dedup);
    CHECK(plain.utilities == folded.utilities);  // bitwise
    CHECK(plain.ranking == folded.ranking);
    CHECK(plain.stats.metric_calls == folded.stats.metric_calls);
    CHECK(plain.stats.aggregation_ops == folded.stats.aggregation_ops);
  }
}

TEST_CASE("worker threads never change results or statistics") {
  const ChrfMetric metric;
  mbrd::Rng rng(14);
  const CandidateSet set = random_set(rng, 9, 7);
  for (const char* descriptor :
       {"standard", "aggregate", "partial:3", "nbys:4", "agg2fine:3"}) {
    Strategy strategy = Strategy::parse(descriptor);
    strategy.seed = 21;
    const SelectionReport serial = mbrd::select(set, metric, strategy);
    for (int jobs : {2, 3, 8}) {
      SelectOptions options;
      options.jobs = jobs;
      const SelectionReport threaded = mbrd::select(set, metric, strategy, options);
      CHECK(threaded.utilities == serial.utilities);  // bitwise
      CHECK(threaded.ranking == serial.ranking);
      CHECK(threaded.stats.metric_calls == serial.stats.metric_calls);
      CHECK(threaded.stats.aggregation_ops == serial.stats.aggregation_ops);
    }
  }
}

TEST_CASE("duplicate hypotheses tie toward the lower index") {
  const ChrfMetric metric;
  const CandidateSet set = make_set({"zzz", "same", "same"}, {"same", "samey"});
  const SelectionReport report = mbrd::select_standard(set, metric);
  CHECK(report.utilities[1] == report.utilities[2]);
  CHECK(report.selected_index == 1);
  const auto pos1 = std::find(report.ranking.begin(), report.ranking.end(), 1);
  const auto pos2 = std::find(report.ranking.begin(), report.ranking.end(), 2);
  CHECK(pos1 < pos2);
}
