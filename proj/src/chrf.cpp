#include "mbrd/chrf.hpp"

#include <string>
#include <vector>

#include "mbrd/errors.hpp"

namespace mbrd {

namespace {

void check_params(const ChrfParams& params) {
  if (!(params.beta > 0.0)) throw ConfigError("chrF beta must be positive");
  if (params.max_order < 1) throw ConfigError("chrF max_order must be at least 1");
  if (!(params.scale > 0.0)) throw ConfigError("chrF scale must be positive");
}

void check_bag(const NGramBag& bag, const ChrfParams& params, const char* role) {
  if (bag.max_order() != params.max_order) {
    throw ConfigError(std::string("chrF configured for max order ") +
                      std::to_string(params.max_order) + " but " + role +
                      " bag has max order " + std::to_string(bag.max_order()));
  }
}

}  // namespace

double chrf_score(const NGramBag& hyp, const NGramBag& ref, const ChrfParams& params) {
  check_params(params);
  check_bag(hyp, params, "hypothesis");
  check_bag(ref, params, "reference");

  const std::vector<double> shared = overlap(hyp, ref);
  double precision_sum = 0.0;
  double recall_sum = 0.0;
  int counted = 0;
  for (int order = 1; order <= params.max_order; ++order) {
    const double hyp_total = hyp.total(order);
    const double ref_total = ref.total(order);
    if (hyp_total == 0.0 && ref_total == 0.0) {
      if (params.effective_order) continue;
      ++counted;  // order stays in the means, contributing zero to both
      continue;
    }
    ++counted;
    const double ov = shared[static_cast<std::size_t>(order - 1)];
    if (hyp_total > 0.0) precision_sum += ov / hyp_total;
    if (ref_total > 0.0) recall_sum += ov / ref_total;
  }
  if (counted == 0) return params.scale;  // two empty texts match perfectly
  const double precision = precision_sum / counted;
  const double recall = recall_sum / counted;
  if (precision == 0.0 && recall == 0.0) return 0.0;
  const double beta2 = params.beta * params.beta;
  return params.scale * (1.0 + beta2) * precision * recall /
         (beta2 * precision + recall);
}

double pairwise_mean_chrf(const NGramBag& hyp, std::span<const NGramBag> refs,
                          const ChrfParams& params) {
  if (refs.empty()) throw ConfigError("pairwise_mean_chrf needs at least one reference");
  double acc = 0.0;
  for (const NGramBag& ref : refs) acc += chrf_score(hyp, ref, params);
  return acc / static_cast<double>(refs.size());
}

double pairwise_mean_chrf(const NGramBag& hyp, std::span<const NGramBag* const> refs,
                          const ChrfParams& params) {
  if (refs.empty()) throw ConfigError("pairwise_mean_chrf needs at least one reference");
  double acc = 0.0;
  for (const NGramBag* ref : refs) acc += chrf_score(hyp, *ref, params);
  return acc / static_cast<double>(refs.size());
}

double aggregate_chrf(const NGramBag& hyp, const NGramBag& aggregate_ref,
                      const ChrfParams& params) {
  return chrf_score(hyp, aggregate_ref, params);
}

}  // namespace mbrd
