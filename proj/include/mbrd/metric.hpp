#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mbrd/chrf.hpp"
#include "mbrd/embedding.hpp"

namespace mbrd {

// One decoding instance: a set of sampled hypotheses and the pseudo-reference
// pool they are scored against. An empty `references` vector means the
// hypotheses double as references, the usual sampling-based setup.
struct CandidateSet {
  std::string id;
  std::string source;
  std::vector<std::string> hypotheses;
  std::vector<std::string> references;
};

inline const std::vector<std::string>& effective_references(const CandidateSet& set) {
  return set.references.empty() ? set.hypotheses : set.references;
}

// Per-segment scoring state: features are extracted once in prepare() and
// reused for every pair and every aggregate afterwards.
class SegmentScorer {
 public:
  virtual ~SegmentScorer() = default;

  virtual std::size_t hypothesis_count() const noexcept = 0;
  virtual std::size_t reference_count() const noexcept = 0;

  // Utility of hypothesis `hyp` measured against reference `ref`.
  virtual double score_pair(std::size_t hyp, std::size_t ref) = 0;

  // Folds the given references into one aggregate reference and returns its
  // handle. `weights` aligns with `refs` and must sum to 1.
  virtual std::size_t add_aggregate(std::span<const std::size_t> refs,
                                    std::span<const double> weights) = 0;

  // Utility of hypothesis `hyp` against a previously built aggregate.
  virtual double score_aggregate(std::size_t hyp, std::size_t aggregate) = 0;
};

// Factory for per-segment scorers. Implementations are stateless beyond their
// configuration and may be shared across threads; each SegmentScorer is used
// by one segment at a time.
class UtilityMetric {
 public:
  virtual ~UtilityMetric() = default;
  virtual std::string_view name() const noexcept = 0;
  virtual std::unique_ptr<SegmentScorer> prepare(const CandidateSet& set) const = 0;
};

// chrF over character n-gram bags. When the reference list is the hypothesis
// list, extraction work is shared between the two roles.
class ChrfMetric final : public UtilityMetric {
 public:
  explicit ChrfMetric(ChrfParams params = {}, bool strip_whitespace = true);

  std::string_view name() const noexcept override { return "chrf"; }
  std::unique_ptr<SegmentScorer> prepare(const CandidateSet& set) const override;
  const ChrfParams& params() const noexcept { return params_; }

 private:
  ChrfParams params_;
  bool strip_whitespace_;
};

// Embedding similarity; vectors come from an external store keyed by text.
// The store must outlive the metric.
class EmbeddingMetric final : public UtilityMetric {
 public:
  EmbeddingMetric(const EmbeddingStore& store, ScorerSpec scorer);

  std::string_view name() const noexcept override { return "embedding"; }
  std::unique_ptr<SegmentScorer> prepare(const CandidateSet& set) const override;
  const ScorerSpec& scorer() const noexcept { return scorer_; }

 private:
  const EmbeddingStore* store_;
  ScorerSpec scorer_;
};

}  // namespace mbrd
