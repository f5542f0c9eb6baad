#include "mbrd/metric.hpp"

#include <utility>

#include "mbrd/errors.hpp"

namespace mbrd {

namespace {

void check_counts(const CandidateSet& set) {
  if (set.hypotheses.empty()) {
    throw ConfigError("candidate set needs at least one hypothesis");
  }
  if (effective_references(set).empty()) {
    throw ConfigError("candidate set needs at least one reference");
  }
}

class ChrfSegmentScorer final : public SegmentScorer {
 public:
  ChrfSegmentScorer(const CandidateSet& set, const ChrfParams& params,
                    bool strip_whitespace)
      : params_(params) {
    check_counts(set);
    const std::vector<std::string>& refs = effective_references(set);
    hyp_bags_.reserve(set.hypotheses.size());
    for (const std::string& text : set.hypotheses) {
      hyp_bags_.push_back(
          NGramBag::extract(text, params.max_order, strip_whitespace));
    }
    const bool shared = &refs == &set.hypotheses || refs == set.hypotheses;
    if (shared) {
      ref_bags_ = &hyp_bags_;
    } else {
      own_ref_bags_.reserve(refs.size());
      for (const std::string& text : refs) {
        own_ref_bags_.push_back(
            NGramBag::extract(text, params.max_order, strip_whitespace));
      }
      ref_bags_ = &own_ref_bags_;
    }
  }

  std::size_t hypothesis_count() const noexcept override { return hyp_bags_.size(); }
  std::size_t reference_count() const noexcept override { return ref_bags_->size(); }

  double score_pair(std::size_t hyp, std::size_t ref) override {
    return chrf_score(hyp_bags_[hyp], (*ref_bags_)[ref], params_);
  }

  std::size_t add_aggregate(std::span<const std::size_t> refs,
                            std::span<const double> weights) override {
    std::vector<const NGramBag*> bags;
    bags.reserve(refs.size());
    for (std::size_t r : refs) bags.push_back(&(*ref_bags_)[r]);
    aggregates_.push_back(
        weighted_sum(std::span<const NGramBag* const>(bags), weights));
    return aggregates_.size() - 1;
  }

  double score_aggregate(std::size_t hyp, std::size_t aggregate) override {
    return aggregate_chrf(hyp_bags_[hyp], aggregates_[aggregate], params_);
  }

 private:
  ChrfParams params_;
  std::vector<NGramBag> hyp_bags_;
  std::vector<NGramBag> own_ref_bags_;
  const std::vector<NGramBag>* ref_bags_ = nullptr;
  std::vector<NGramBag> aggregates_;
};

class EmbeddingSegmentScorer final : public SegmentScorer {
 public:
  EmbeddingSegmentScorer(const CandidateSet& set, const EmbeddingStore& store,
                         const ScorerSpec& spec)
      : spec_(&spec) {
    check_counts(set);
    hyp_vecs_.reserve(set.hypotheses.size());
    for (const std::string& text : set.hypotheses) {
      hyp_vecs_.push_back(&store.lookup(text));
    }
    const std::vector<std::string>& refs = effective_references(set);
    ref_vecs_.reserve(refs.size());
    for (const std::string& text : refs) ref_vecs_.push_back(&store.lookup(text));
    source_ = store.find(set.source);  // optional; built-in scorers ignore it
  }

  std::size_t hypothesis_count() const noexcept override { return hyp_vecs_.size(); }
  std::size_t reference_count() const noexcept override { return ref_vecs_.size(); }

  double score_pair(std::size_t hyp, std::size_t ref) override {
    return score_embeddings(*hyp_vecs_[hyp], *ref_vecs_[ref], source_, *spec_);
  }

  std::size_t add_aggregate(std::span<const std::size_t> refs,
                            std::span<const double> weights) override {
    std::vector<const EmbeddingVector*> vecs;
    vecs.reserve(refs.size());
    for (std::size_t r : refs) vecs.push_back(ref_vecs_[r]);
    aggregates_.push_back(aggregate_embedding(
        std::span<const EmbeddingVector* const>(vecs), weights));
    return aggregates_.size() - 1;
  }

  double score_aggregate(std::size_t hyp, std::size_t aggregate) override {
    return score_embeddings(*hyp_vecs_[hyp], aggregates_[aggregate], source_, *spec_);
  }

 private:
  const ScorerSpec* spec_;
  std::vector<const EmbeddingVector*> hyp_vecs_;
  std::vector<const EmbeddingVector*> ref_vecs_;
  const EmbeddingVector* source_ = nullptr;
  std::vector<EmbeddingVector> aggregates_;
};

}  // namespace

ChrfMetric::ChrfMetric(ChrfParams params, bool strip_whitespace)
    : params_(params), strip_whitespace_(strip_whitespace) {
  if (!(params.beta > 0.0)) throw ConfigError("chrF beta must be positive");
  if (params.max_order < 1) throw ConfigError("chrF max_order must be at least 1");
  if (!(params.scale > 0.0)) throw ConfigError("chrF scale must be positive");
}

std::unique_ptr<SegmentScorer> ChrfMetric::prepare(const CandidateSet& set) const {
  return std::make_unique<ChrfSegmentScorer>(set, params_, strip_whitespace_);
}

EmbeddingMetric::EmbeddingMetric(const EmbeddingStore& store, ScorerSpec scorer)
    : store_(&store), scorer_(std::move(scorer)) {
  if (scorer_.kind == ScorerSpec::Kind::bilinear &&
      (scorer_.dim < 1 ||
       scorer_.matrix.size() !=
           static_cast<std::size_t>(scorer_.dim) * static_cast<std::size_t>(scorer_.dim))) {
    throw ConfigError("bilinear scorer needs a square matrix matching its dimension");
  }
}

std::unique_ptr<SegmentScorer> EmbeddingMetric::prepare(const CandidateSet& set) const {
  return std::make_unique<EmbeddingSegmentScorer>(set, *store_, scorer_);
}

}  // namespace mbrd
