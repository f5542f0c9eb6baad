#include "mbrd/engine.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>
#include <unordered_map>
#include <utility>

#include "mbrd/errors.hpp"
#include "mbrd/rng.hpp"

namespace mbrd {

namespace {

std::size_t parse_count(std::string_view text, std::string_view what,
                        std::string_view full) {
  std::size_t value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || value == 0) {
    throw ConfigError("invalid strategy \"" + std::string(full) + "\": " +
                      std::string(what) + " must be a positive integer");
  }
  return value;
}

std::vector<std::string_view> split_tokens(std::string_view text) {
  std::vector<std::string_view> tokens;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t colon = text.find(':', start);
    if (colon == std::string_view::npos) {
      tokens.push_back(text.substr(start));
      break;
    }
    tokens.push_back(text.substr(start, colon - start));
    start = colon + 1;
  }
  return tokens;
}

// Reference bookkeeping shared by all estimators. `slots` lists the scorer
// reference indices to touch (first-occurrence order after deduplication)
// and `multiplicity` how many expanded references each one stands for;
// `expanded` is m, the nominal reference count.
struct RefPlan {
  std::size_t expanded = 0;
  std::vector<std::size_t> slot_of;      // expanded position -> scorer slot
  std::vector<std::size_t> slots;
  std::vector<double> multiplicity;
};

RefPlan identity_plan(std::size_t m) {
  RefPlan plan;
  plan.expanded = m;
  plan.slot_of.resize(m);
  std::iota(plan.slot_of.begin(), plan.slot_of.end(), std::size_t{0});
  plan.slots = plan.slot_of;
  plan.multiplicity.assign(m, 1.0);
  return plan;
}

// Folds expanded positions to (slot, occurrence count) pairs, preserving the
// order in which slots first appear.
void fold_positions(std::span<const std::size_t> positions, const RefPlan& plan,
                    std::vector<std::size_t>& slots, std::vector<double>& counts) {
  slots.clear();
  counts.clear();
  std::unordered_map<std::size_t, std::size_t> seen;
  seen.reserve(positions.size());
  for (const std::size_t pos : positions) {
    const std::size_t slot = plan.slot_of[pos];
    const auto [it, inserted] = seen.emplace(slot, slots.size());
    if (inserted) {
      slots.push_back(slot);
      counts.push_back(1.0);
    } else {
      counts[it->second] += 1.0;
    }
  }
}

// Runs fn(hyp) for every hypothesis index, optionally across threads, and
// returns the summed call counts. fn must be safe to run concurrently for
// distinct indices; the result does not depend on the number of workers.
template <typename Fn>
std::uint64_t for_each_hypothesis(std::size_t n, int jobs, Fn&& fn) {
  std::size_t workers = jobs < 1 ? 1 : static_cast<std::size_t>(jobs);
  workers = std::min(workers, n);
  if (workers <= 1) {
    std::uint64_t calls = 0;
    for (std::size_t i = 0; i < n; ++i) calls += fn(i);
    return calls;
  }
  std::vector<std::uint64_t> calls(workers, 0);
  std::vector<std::exception_ptr> failures(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      const std::size_t lo = w * chunk;
      const std::size_t hi = std::min(n, lo + chunk);
      try {
        for (std::size_t i = lo; i < hi; ++i) calls[w] += fn(i);
      } catch (...) {
        failures[w] = std::current_exception();
      }
    });
  }
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& failure : failures) {
    if (failure) std::rethrow_exception(failure);
  }
  std::uint64_t total = 0;
  for (const std::uint64_t c : calls) total += c;
  return total;
}

UtilityEstimate estimate_standard(SegmentScorer& scorer, const RefPlan& plan,
                                  int jobs) {
  const std::size_t n = scorer.hypothesis_count();
  UtilityEstimate est;
  est.utilities.resize(n);
  est.metric_calls = for_each_hypothesis(n, jobs, [&](std::size_t hyp) {
    double acc = 0.0;
    for (std::size_t u = 0; u < plan.slots.size(); ++u) {
      acc += plan.multiplicity[u] * scorer.score_pair(hyp, plan.slots[u]);
    }
    est.utilities[hyp] = acc / static_cast<double>(plan.expanded);
    return static_cast<std::uint64_t>(plan.slots.size());
  });
  return est;
}

UtilityEstimate estimate_aggregate(SegmentScorer& scorer, const RefPlan& plan,
                                   int jobs) {
  const std::size_t n = scorer.hypothesis_count();
  std::vector<double> weights(plan.multiplicity);
  for (double& w : weights) w /= static_cast<double>(plan.expanded);
  const std::size_t handle = scorer.add_aggregate(plan.slots, weights);
  UtilityEstimate est;
  est.aggregation_ops = plan.slots.size();
  est.utilities.resize(n);
  est.metric_calls = for_each_hypothesis(n, jobs, [&](std::size_t hyp) {
    est.utilities[hyp] = scorer.score_aggregate(hyp, handle);
    return std::uint64_t{1};
  });
  return est;
}

UtilityEstimate estimate_partial(SegmentScorer& scorer, const RefPlan& plan,
                                 std::size_t s, std::uint64_t seed, int jobs) {
  const std::size_t n = scorer.hypothesis_count();
  const std::size_t m = plan.expanded;
  if (s < 1 || s > m) {
    throw ConfigError("partial aggregation with s=" + std::to_string(s) +
                      " but " + std::to_string(m) + " references");
  }
  std::vector<std::size_t> positions(m);
  std::iota(positions.begin(), positions.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(positions);

  // First (m mod s) groups take one extra reference so sizes differ by at
  // most one. Positions inside a group are restored to index order and the
  // per-group scores are accumulated in ascending first-position order, so
  // the s = m and s = 1 endpoints are bitwise identical to the standard and
  // full-aggregation estimators (not merely equal up to summation order).
  const std::size_t base = m / s;
  const std::size_t extra = m % s;
  UtilityEstimate est;
  std::vector<std::size_t> handles(s);
  std::vector<std::size_t> leads(s);
  std::vector<std::size_t> group_slots;
  std::vector<double> group_counts;
  std::size_t offset = 0;
  for (std::size_t g = 0; g < s; ++g) {
    const std::size_t size = base + (g < extra ? 1 : 0);
    std::sort(positions.data() + offset, positions.data() + offset + size);
    leads[g] = positions[offset];
    fold_positions(std::span<const std::size_t>(positions.data() + offset, size),
                   plan, group_slots, group_counts);
    for (double& c : group_counts) c /= static_cast<double>(size);
    handles[g] = scorer.add_aggregate(group_slots, group_counts);
    est.aggregation_ops += group_slots.size();
    offset += size;
  }
  std::vector<std::size_t> order(s);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return leads[a] < leads[b]; });

  est.utilities.resize(n);
  est.metric_calls = for_each_hypothesis(n, jobs, [&](std::size_t hyp) {
    double acc = 0.0;
    for (const std::size_t g : order) acc += scorer.score_aggregate(hyp, handles[g]);
    est.utilities[hyp] = acc / static_cast<double>(s);
    return static_cast<std::uint64_t>(s);
  });
  return est;
}

UtilityEstimate estimate_n_by_s(SegmentScorer& scorer, const RefPlan& plan,
                                std::size_t s, std::uint64_t seed, int jobs) {
  const std::size_t n = scorer.hypothesis_count();
  const std::size_t m = plan.expanded;
  if (s < 1 || s > m) {
    throw ConfigError("n-by-s estimation with s=" + std::to_string(s) + " but " +
                      std::to_string(m) + " references");
  }
  Rng rng(seed);
  std::vector<std::size_t> sample = rng.sample_without_replacement(m, s);
  // Index order makes s = m coincide with the standard estimator exactly.
  std::sort(sample.begin(), sample.end());
  std::vector<std::size_t> slots;
  std::vector<double> counts;
  fold_positions(sample, plan, slots, counts);

  UtilityEstimate est;
  est.utilities.resize(n);
  est.metric_calls = for_each_hypothesis(n, jobs, [&](std::size_t hyp) {
    double acc = 0.0;
    for (std::size_t u = 0; u < slots.size(); ++u) {
      acc += counts[u] * scorer.score_pair(hyp, slots[u]);
    }
    est.utilities[hyp] = acc / static_cast<double>(s);
    return static_cast<std::uint64_t>(slots.size());
  });
  return est;
}

UtilityEstimate estimate_coarse_to_fine(SegmentScorer& proxy_scorer,
                                        SegmentScorer& fine_scorer,
                                        const RefPlan& plan,
                                        const Strategy& strategy, int jobs) {
  const std::size_t n = fine_scorer.hypothesis_count();
  const std::size_t keep = strategy.keep_top;
  if (keep < 1 || keep > n) {
    throw ConfigError("coarse-to-fine keep_top=" + std::to_string(keep) +
                      " outside 1.." + std::to_string(n));
  }

  UtilityEstimate est;
  switch (strategy.proxy_kind) {
    case Strategy::Kind::standard:
      est = estimate_standard(proxy_scorer, plan, jobs);
      break;
    case Strategy::Kind::aggregate:
      est = estimate_aggregate(proxy_scorer, plan, jobs);
      break;
    case Strategy::Kind::partial:
      est = estimate_partial(proxy_scorer, plan, strategy.proxy_effective_refs,
                             strategy.seed, jobs);
      break;
    case Strategy::Kind::n_by_s:
      est = estimate_n_by_s(proxy_scorer, plan, strategy.proxy_effective_refs,
                            strategy.seed, jobs);
      break;
    case Strategy::Kind::coarse_to_fine:
      throw ConfigError("coarse-to-fine proxy must be a base strategy");
  }

  const std::vector<std::size_t> proxy_ranking = rank_utilities(est.utilities);
  std::vector<char> survives(n, 0);
  for (std::size_t r = 0; r < keep; ++r) survives[proxy_ranking[r]] = 1;

  // Re-score the surviving hypotheses with the standard pairwise estimator
  // over the full reference pool; the rest keep their proxy utilities.
  est.metric_calls += for_each_hypothesis(n, jobs, [&](std::size_t hyp) -> std::uint64_t {
    if (!survives[hyp]) return 0;
    double acc = 0.0;
    for (std::size_t u = 0; u < plan.slots.size(); ++u) {
      acc += plan.multiplicity[u] * fine_scorer.score_pair(hyp, plan.slots[u]);
    }
    est.utilities[hyp] = acc / static_cast<double>(plan.expanded);
    return static_cast<std::uint64_t>(plan.slots.size());
  });

  // Survivors first, ordered by their re-scored utilities; pruned hypotheses
  // follow in proxy order. Ties break toward the lower index.
  std::vector<std::size_t> survivors;
  std::vector<std::size_t> pruned;
  survivors.reserve(keep);
  pruned.reserve(n - keep);
  for (std::size_t i = 0; i < n; ++i) (survives[i] ? survivors : pruned).push_back(i);
  const auto by_utility = [&est](std::size_t a, std::size_t b) {
    if (est.utilities[a] != est.utilities[b]) return est.utilities[a] > est.utilities[b];
    return a < b;
  };
  std::sort(survivors.begin(), survivors.end(), by_utility);
  std::sort(pruned.begin(), pruned.end(), by_utility);
  est.ranking = std::move(survivors);
  est.ranking.insert(est.ranking.end(), pruned.begin(), pruned.end());
  return est;
}

UtilityEstimate dispatch(SegmentScorer& scorer, SegmentScorer& fine_scorer,
                         const Strategy& strategy, const RefPlan& plan, int jobs) {
  UtilityEstimate est;
  switch (strategy.kind) {
    case Strategy::Kind::standard:
      est = estimate_standard(scorer, plan, jobs);
      break;
    case Strategy::Kind::aggregate:
      est = estimate_aggregate(scorer, plan, jobs);
      break;
    case Strategy::Kind::partial:
      est = estimate_partial(scorer, plan, strategy.effective_refs, strategy.seed, jobs);
      break;
    case Strategy::Kind::n_by_s:
      est = estimate_n_by_s(scorer, plan, strategy.effective_refs, strategy.seed, jobs);
      break;
    case Strategy::Kind::coarse_to_fine:
      est = estimate_coarse_to_fine(scorer, fine_scorer, plan, strategy, jobs);
      break;
  }
  for (std::size_t i = 0; i < est.utilities.size(); ++i) {
    if (!std::isfinite(est.utilities[i])) {
      throw Error("non-finite utility for hypothesis " + std::to_string(i));
    }
  }
  if (est.ranking.empty()) est.ranking = rank_utilities(est.utilities);
  return est;
}

}  // namespace

Strategy Strategy::parse(std::string_view text) {
  const std::vector<std::string_view> tokens = split_tokens(text);
  Strategy strategy;
  const std::string_view head = tokens[0];
  if (head == "standard" || head == "aggregate") {
    if (tokens.size() != 1) {
      throw ConfigError("invalid strategy \"" + std::string(text) +
                        "\": unexpected \":\" suffix");
    }
    strategy.kind = head == "standard" ? Kind::standard : Kind::aggregate;
    return strategy;
  }
  if (head == "partial" || head == "nbys") {
    if (tokens.size() != 2) {
      throw ConfigError("invalid strategy \"" + std::string(text) +
                        "\": expected " + std::string(head) + ":S");
    }
    strategy.kind = head == "partial" ? Kind::partial : Kind::n_by_s;
    strategy.effective_refs = parse_count(tokens[1], "S", text);
    return strategy;
  }
  if (head == "agg2fine") {
    if (tokens.size() != 2) {
      throw ConfigError("invalid strategy \"" + std::string(text) +
                        "\": expected agg2fine:T");
    }
    strategy.kind = Kind::coarse_to_fine;
    strategy.keep_top = parse_count(tokens[1], "T", text);
    strategy.proxy_kind = Kind::aggregate;
    return strategy;
  }
  if (head == "coarse2fine") {
    if (tokens.size() < 2 || tokens.size() > 5) {
      throw ConfigError("invalid strategy \"" + std::string(text) +
                        "\": expected coarse2fine:T[:METRIC[:PROXY]]");
    }
    strategy.kind = Kind::coarse_to_fine;
    strategy.keep_top = parse_count(tokens[1], "T", text);
    strategy.proxy_kind = Kind::standard;
    if (tokens.size() >= 3) strategy.proxy_metric = std::string(tokens[2]);
    if (tokens.size() >= 4) {
      const std::string_view proxy = tokens[3];
      if (proxy == "standard" || proxy == "aggregate") {
        if (tokens.size() == 5) {
          throw ConfigError("invalid strategy \"" + std::string(text) +
                            "\": proxy " + std::string(proxy) + " takes no S");
        }
        strategy.proxy_kind = proxy == "standard" ? Kind::standard : Kind::aggregate;
      } else if (proxy == "partial" || proxy == "nbys") {
        if (tokens.size() != 5) {
          throw ConfigError("invalid strategy \"" + std::string(text) +
                            "\": proxy " + std::string(proxy) + " needs :S");
        }
        strategy.proxy_kind = proxy == "partial" ? Kind::partial : Kind::n_by_s;
        strategy.proxy_effective_refs = parse_count(tokens[4], "S", text);
      } else {
        throw ConfigError("invalid strategy \"" + std::string(text) +
                          "\": unknown proxy \"" + std::string(proxy) + "\"");
      }
    }
    return strategy;
  }
  throw ConfigError("unknown strategy \"" + std::string(text) + "\"");
}

std::string Strategy::label() const {
  switch (kind) {
    case Kind::standard:
      return "standard";
    case Kind::aggregate:
      return "aggregate";
    case Kind::partial:
      return "partial:" + std::to_string(effective_refs);
    case Kind::n_by_s:
      return "nbys:" + std::to_string(effective_refs);
    case Kind::coarse_to_fine: {
      if (proxy_kind == Kind::aggregate && proxy_metric.empty()) {
        return "agg2fine:" + std::to_string(keep_top);
      }
      std::string proxy;
      switch (proxy_kind) {
        case Kind::standard:
          break;
        case Kind::aggregate:
          proxy = ":aggregate";
          break;
        case Kind::partial:
          proxy = ":partial:" + std::to_string(proxy_effective_refs);
          break;
        case Kind::n_by_s:
          proxy = ":nbys:" + std::to_string(proxy_effective_refs);
          break;
        case Kind::coarse_to_fine:
          proxy = ":?";
          break;
      }
      std::string label = "coarse2fine:" + std::to_string(keep_top);
      if (!proxy_metric.empty() || !proxy.empty()) label += ":" + proxy_metric;
      return label + proxy;
    }
  }
  return "unknown";
}

DedupResult dedup_references(const CandidateSet& set) {
  const std::vector<std::string>& refs = effective_references(set);
  DedupResult result;
  result.candidates.id = set.id;
  result.candidates.source = set.source;
  result.candidates.hypotheses = set.hypotheses;
  result.position_map.reserve(refs.size());
  std::unordered_map<std::string_view, std::size_t> seen;
  seen.reserve(refs.size());
  for (const std::string& text : refs) {
    const auto [it, inserted] = seen.emplace(text, result.candidates.references.size());
    if (inserted) {
      result.candidates.references.push_back(text);
      result.weights.push_back(1.0);
    } else {
      result.weights[it->second] += 1.0;
    }
    result.position_map.push_back(it->second);
  }
  return result;
}

std::vector<std::size_t> rank_utilities(std::span<const double> utilities) {
  std::vector<std::size_t> order(utilities.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&utilities](std::size_t a, std::size_t b) {
    if (utilities[a] != utilities[b]) return utilities[a] > utilities[b];
    return a < b;
  });
  return order;
}

UtilityEstimate estimate_utilities(SegmentScorer& scorer, const Strategy& strategy,
                                   int jobs, SegmentScorer* fine_scorer) {
  const RefPlan plan = identity_plan(scorer.reference_count());
  return dispatch(scorer, fine_scorer != nullptr ? *fine_scorer : scorer, strategy,
                  plan, jobs);
}

SelectionReport select(const CandidateSet& set, const UtilityMetric& metric,
                       const Strategy& strategy, const SelectOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  try {
    if (set.hypotheses.empty()) {
      throw ConfigError("candidate set needs at least one hypothesis");
    }
    const CandidateSet* work = &set;
    DedupResult deduped;
    RefPlan plan;
    if (options.dedup) {
      deduped = dedup_references(set);
      work = &deduped.candidates;
      plan.expanded = deduped.position_map.size();
      plan.slot_of = std::move(deduped.position_map);
      plan.slots.resize(deduped.weights.size());
      std::iota(plan.slots.begin(), plan.slots.end(), std::size_t{0});
      plan.multiplicity = std::move(deduped.weights);
    } else {
      plan = identity_plan(effective_references(set).size());
    }
    if (plan.expanded == 0) {
      throw ConfigError("candidate set needs at least one reference");
    }

    std::unique_ptr<SegmentScorer> scorer = metric.prepare(*work);
    std::unique_ptr<SegmentScorer> proxy_scorer;
    if (strategy.kind == Strategy::Kind::coarse_to_fine &&
        options.proxy_metric != nullptr && options.proxy_metric != &metric) {
      proxy_scorer = options.proxy_metric->prepare(*work);
    }

    UtilityEstimate est =
        dispatch(proxy_scorer != nullptr ? *proxy_scorer : *scorer, *scorer,
                 strategy, plan, options.jobs);

    SelectionReport report;
    report.id = set.id;
    report.selected_index = est.ranking[0];
    report.selected = set.hypotheses[report.selected_index];
    report.utilities = std::move(est.utilities);
    report.ranking = std::move(est.ranking);
    report.stats.metric_calls = est.metric_calls;
    report.stats.aggregation_ops = est.aggregation_ops;
    report.stats.wall_nanos = static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(
            std::chrono::steady_clock::now() - started)
            .count());
    return report;
  } catch (const ConfigError& e) {
    throw ConfigError("segment \"" + set.id + "\": " + e.what());
  } catch (const DataError& e) {
    throw DataError("segment \"" + set.id + "\": " + e.what());
  } catch (const Error& e) {
    throw Error("segment \"" + set.id + "\": " + e.what());
  }
}

SelectionReport select_standard(const CandidateSet& set, const UtilityMetric& metric,
                                const SelectOptions& options) {
  Strategy strategy;
  strategy.kind = Strategy::Kind::standard;
  return select(set, metric, strategy, options);
}

SelectionReport select_aggregate(const CandidateSet& set, const UtilityMetric& metric,
                                 const SelectOptions& options) {
  Strategy strategy;
  strategy.kind = Strategy::Kind::aggregate;
  return select(set, metric, strategy, options);
}

SelectionReport select_partial(const CandidateSet& set, const UtilityMetric& metric,
                               std::size_t effective_refs, std::uint64_t seed,
                               const SelectOptions& options) {
  Strategy strategy;
  strategy.kind = Strategy::Kind::partial;
  strategy.effective_refs = effective_refs;
  strategy.seed = seed;
  return select(set, metric, strategy, options);
}

SelectionReport select_n_by_s(const CandidateSet& set, const UtilityMetric& metric,
                              std::size_t effective_refs, std::uint64_t seed,
                              const SelectOptions& options) {
  Strategy strategy;
  strategy.kind = Strategy::Kind::n_by_s;
  strategy.effective_refs = effective_refs;
  strategy.seed = seed;
  return select(set, metric, strategy, options);
}

SelectionReport select_coarse_to_fine(const CandidateSet& set,
                                      const UtilityMetric& metric,
                                      std::size_t keep_top,
                                      const SelectOptions& options) {
  Strategy strategy;
  strategy.kind = Strategy::Kind::coarse_to_fine;
  strategy.keep_top = keep_top;
  strategy.proxy_kind = Strategy::Kind::aggregate;
  return select(set, metric, strategy, options);
}

SelectionReport select_coarse_to_fine(const CandidateSet& set,
                                      const Strategy& proxy_strategy,
                                      const UtilityMetric& metric,
                                      std::size_t keep_top,
                                      const SelectOptions& options) {
  if (proxy_strategy.kind == Strategy::Kind::coarse_to_fine) {
    throw ConfigError("coarse-to-fine proxy must be a base strategy");
  }
  Strategy strategy;
  strategy.kind = Strategy::Kind::coarse_to_fine;
  strategy.keep_top = keep_top;
  strategy.proxy_kind = proxy_strategy.kind;
  strategy.proxy_effective_refs = proxy_strategy.effective_refs;
  strategy.seed = proxy_strategy.seed;
  return select(set, metric, strategy, options);
}

}  // namespace mbrd
