#pragma once

#include <cstddef>
#include <istream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mbrd/errors.hpp"

namespace mbrd {

using EmbeddingVector = std::vector<double>;

// Text -> vector table loaded from JSONL ({"text": ..., "vector": [...]}).
// All vectors must share one dimension; lookups are by exact string match.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;

  // Reads one JSONL file. Errors mention the file path and 1-based line.
  static EmbeddingStore load(const std::string& path);
  static EmbeddingStore parse(std::istream& in, const std::string& origin);

  void insert(std::string text, EmbeddingVector vector);

  // Throws DataError naming the text when no embedding is stored for it.
  const EmbeddingVector& lookup(std::string_view text) const;
  const EmbeddingVector* find(std::string_view text) const;

  std::size_t size() const noexcept { return vectors_.size(); }
  bool empty() const noexcept { return vectors_.empty(); }
  // -1 until the first vector is inserted.
  int dimension() const noexcept { return dimension_; }

 private:
  std::unordered_map<std::string, EmbeddingVector> vectors_;
  int dimension_ = -1;
};

// Configuration of the embedding comparison function.
struct ScorerSpec {
  enum class Kind { cosine_hyp_ref, dot_hyp_ref, bilinear };

  Kind kind = Kind::cosine_hyp_ref;
  int dim = 0;                 // required for bilinear, informational otherwise
  std::vector<double> matrix;  // bilinear form, row-major dim x dim
  double bias = 0.0;

  // Reads a JSON object {"kind": ..., "dim": ..., "matrix": [[...]], "bias": ...}.
  static ScorerSpec load(const std::string& path);
  static ScorerSpec parse(std::istream& in, const std::string& origin);

  static Kind kind_from_name(std::string_view name);
  std::string_view kind_name() const noexcept;
};

// Weighted mean of embedding vectors. Uses centered summation
// (first vector plus the weighted mean of deviations from it), so averaging
// identical vectors reproduces the vector exactly.
EmbeddingVector aggregate_embedding(std::span<const EmbeddingVector* const> vectors,
                                    std::span<const double> weights);

// Uniform mean of the given vectors.
EmbeddingVector aggregate_embedding(std::span<const EmbeddingVector> vectors);

// Scores one hypothesis vector against one (possibly aggregated) reference
// vector. The source vector is accepted for scorers that condition on the
// source segment; the built-in kinds ignore it and it may be null.
// cosine returns 0 when either side has zero norm.
double score_embeddings(const EmbeddingVector& hyp, const EmbeddingVector& ref,
                        const EmbeddingVector* source, const ScorerSpec& spec);

}  // namespace mbrd
