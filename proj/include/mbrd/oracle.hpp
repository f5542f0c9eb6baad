#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mbrd/chrf.hpp"

namespace mbrd::oracle {

// Deliberately naive reference implementations, kept independent of the fast
// paths: their own UTF-8 handling, tree-map multisets instead of hash maps,
// and direct transcriptions of the defining formulas. They exist only to
// cross-check the production code.

// Per-order overlap between the character n-gram multisets of two texts.
std::vector<double> naive_overlap(std::string_view a_utf8, std::string_view b_utf8,
                                  int max_order, bool strip_whitespace = true);

// chrF computed from scratch over both texts.
double naive_chrf(std::string_view hyp_utf8, std::string_view ref_utf8,
                  const ChrfParams& params = {}, bool strip_whitespace = true);

// Expected-utility vector of the exhaustive pairwise estimator: for each
// hypothesis, the plain mean of chrf_score over all references. Uses the
// production chrF on purpose — it validates the estimation bookkeeping, and
// chrF itself is validated separately against naive_chrf.
std::vector<double> naive_standard_utilities(const std::vector<std::string>& hyps,
                                             const std::vector<std::string>& refs,
                                             const ChrfParams& params = {});

// Randomized agreement suites used by `mbrdec oracle-check` and the
// acceptance gate. `inject` perturbs the production-side value of the first
// instance; a nonzero value must make the suite fail, proving the check can
// detect regressions.
struct SuiteResult {
  std::string name;
  std::size_t instances = 0;
  double max_abs_deviation = 0.0;
  double budget = 0.0;
  bool passed = false;
};

SuiteResult check_overlap_suite(std::size_t instances, std::uint64_t seed,
                                double inject = 0.0);
SuiteResult check_chrf_suite(std::size_t pairs, std::uint64_t seed,
                             double inject = 0.0);
SuiteResult check_standard_mbr_suite(std::size_t instances, std::uint64_t seed,
                                     double inject = 0.0);

}  // namespace mbrd::oracle
