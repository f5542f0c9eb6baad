#pragma once

#include <span>

#include "mbrd/ngram_bag.hpp"

namespace mbrd {

// Character F-score parameters. Defaults follow the common chrF2
// configuration: beta = 2 (recall weighted twice as high as precision),
// character n-grams up to order 6, whitespace stripped before extraction,
// scores scaled to 0..100.
struct ChrfParams {
  double beta = 2.0;
  int max_order = 6;
  // When set, orders where both sides have no grams are excluded from the
  // precision/recall means instead of contributing zero.
  bool effective_order = true;
  double scale = 100.0;
};

// chrF between one hypothesis bag and one reference bag:
//   scale * (1 + beta^2) * P * R / (beta^2 * P + R)
// where P and R are arithmetic means over orders of per-order precision
// overlap_i / hyp_total_i and recall overlap_i / ref_total_i. An order with an
// empty side contributes zero to that side's mean; if every order is excluded
// (effective_order with two empty bags) the score is `scale` since the texts
// match; P = R = 0 yields 0.
double chrf_score(const NGramBag& hyp, const NGramBag& ref,
                  const ChrfParams& params = {});

// Mean of chrf_score over all references; the standard pairwise utility of
// one hypothesis.
double pairwise_mean_chrf(const NGramBag& hyp, std::span<const NGramBag> refs,
                          const ChrfParams& params = {});
double pairwise_mean_chrf(const NGramBag& hyp,
                          std::span<const NGramBag* const> refs,
                          const ChrfParams& params = {});

// chrF against an aggregated reference bag. Identical math to chrf_score on
// fractional counts; a separate entry point so call sites distinguish the
// aggregate path from true pairwise scoring.
double aggregate_chrf(const NGramBag& hyp, const NGramBag& aggregate_ref,
                      const ChrfParams& params = {});

}  // namespace mbrd
