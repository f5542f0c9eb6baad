#include "mbrd/embedding.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace mbrd {

namespace {

using nlohmann::json;

std::string at_line(const std::string& origin, std::size_t line) {
  return origin + ":" + std::to_string(line) + ": ";
}

EmbeddingVector parse_vector(const json& value, const std::string& context) {
  if (!value.is_array() || value.empty()) {
    throw DataError(context + "\"vector\" must be a non-empty array of numbers");
  }
  EmbeddingVector vec;
  vec.reserve(value.size());
  for (const json& item : value) {
    if (!item.is_number()) {
      throw DataError(context + "\"vector\" must contain numbers only");
    }
    const double x = item.get<double>();
    if (!std::isfinite(x)) {
      throw DataError(context + "\"vector\" contains a non-finite value");
    }
    vec.push_back(x);
  }
  return vec;
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return in;
}

}  // namespace

EmbeddingStore EmbeddingStore::load(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  return parse(in, path);
}

EmbeddingStore EmbeddingStore::parse(std::istream& in, const std::string& origin) {
  EmbeddingStore store;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(at_line(origin, line_no) + "malformed JSON: " + e.what());
    }
    if (!record.is_object() || !record.contains("text") ||
        !record["text"].is_string() || !record.contains("vector")) {
      throw DataError(at_line(origin, line_no) +
                      "expected an object with \"text\" and \"vector\"");
    }
    std::string text = record["text"].get<std::string>();
    EmbeddingVector vec = parse_vector(record["vector"], at_line(origin, line_no));
    if (store.dimension_ != -1 &&
        static_cast<int>(vec.size()) != store.dimension_) {
      throw DataError(at_line(origin, line_no) + "vector of dimension " +
                      std::to_string(vec.size()) + ", expected " +
                      std::to_string(store.dimension_));
    }
    if (store.vectors_.count(text) != 0) {
      throw DataError(at_line(origin, line_no) + "duplicate text key \"" + text + "\"");
    }
    store.insert(std::move(text), std::move(vec));
  }
  return store;
}

void EmbeddingStore::insert(std::string text, EmbeddingVector vector) {
  if (vector.empty()) throw DataError("cannot store an empty embedding vector");
  if (dimension_ == -1) {
    dimension_ = static_cast<int>(vector.size());
  } else if (static_cast<int>(vector.size()) != dimension_) {
    throw DataError("embedding for \"" + text + "\" has dimension " +
                    std::to_string(vector.size()) + ", expected " +
                    std::to_string(dimension_));
  }
  vectors_[std::move(text)] = std::move(vector);
}

const EmbeddingVector& EmbeddingStore::lookup(std::string_view text) const {
  const EmbeddingVector* vec = find(text);
  if (vec == nullptr) {
    throw DataError("no embedding stored for text \"" + std::string(text) + "\"");
  }
  return *vec;
}

const EmbeddingVector* EmbeddingStore::find(std::string_view text) const {
  const auto it = vectors_.find(std::string(text));
  return it == vectors_.end() ? nullptr : &it->second;
}

ScorerSpec::Kind ScorerSpec::kind_from_name(std::string_view name) {
  if (name == "cosine_hyp_ref" || name == "cosine") return Kind::cosine_hyp_ref;
  if (name == "dot_hyp_ref" || name == "dot") return Kind::dot_hyp_ref;
  if (name == "bilinear") return Kind::bilinear;
  throw DataError("unknown scorer kind \"" + std::string(name) + "\"");
}

std::string_view ScorerSpec::kind_name() const noexcept {
  switch (kind) {
    case Kind::cosine_hyp_ref: return "cosine_hyp_ref";
    case Kind::dot_hyp_ref: return "dot_hyp_ref";
    case Kind::bilinear: return "bilinear";
  }
  return "unknown";
}

ScorerSpec ScorerSpec::load(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  return parse(in, path);
}

ScorerSpec ScorerSpec::parse(std::istream& in, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(origin + ": malformed JSON: " + e.what());
  }
  if (!doc.is_object() || !doc.contains("kind") || !doc["kind"].is_string()) {
    throw DataError(origin + ": expected an object with a \"kind\" string");
  }
  ScorerSpec spec;
  spec.kind = kind_from_name(doc["kind"].get<std::string>());
  if (doc.contains("dim")) {
    if (!doc["dim"].is_number_integer() || doc["dim"].get<int>() < 1) {
      throw DataError(origin + ": \"dim\" must be a positive integer");
    }
    spec.dim = doc["dim"].get<int>();
  }
  if (doc.contains("bias")) {
    if (!doc["bias"].is_number()) throw DataError(origin + ": \"bias\" must be a number");
    spec.bias = doc["bias"].get<double>();
    if (!std::isfinite(spec.bias)) throw DataError(origin + ": \"bias\" is not finite");
  }
  if (spec.kind == Kind::bilinear) {
    if (!doc.contains("matrix") || !doc["matrix"].is_array()) {
      throw DataError(origin + ": bilinear scorer needs a \"matrix\" array");
    }
    const json& rows = doc["matrix"];
    const auto n = rows.size();
    if (spec.dim == 0) spec.dim = static_cast<int>(n);
    if (n == 0 || static_cast<int>(n) != spec.dim) {
      throw DataError(origin + ": matrix must have dim=" + std::to_string(spec.dim) +
                      " rows, got " + std::to_string(n));
    }
    spec.matrix.reserve(n * n);
    for (const json& row : rows) {
      if (!row.is_array() || row.size() != n) {
        throw DataError(origin + ": matrix rows must all have length " +
                        std::to_string(n));
      }
      for (const json& item : row) {
        if (!item.is_number()) throw DataError(origin + ": matrix entries must be numbers");
        const double x = item.get<double>();
        if (!std::isfinite(x)) throw DataError(origin + ": matrix entry is not finite");
        spec.matrix.push_back(x);
      }
    }
  }
  return spec;
}

EmbeddingVector aggregate_embedding(std::span<const EmbeddingVector* const> vectors,
                                    std::span<const double> weights) {
  if (vectors.empty()) throw ConfigError("aggregate_embedding needs at least one vector");
  if (vectors.size() != weights.size()) {
    throw ConfigError("aggregate_embedding got " + std::to_string(vectors.size()) +
                      " vectors but " + std::to_string(weights.size()) + " weights");
  }
  const std::size_t dim = vectors[0]->size();
  for (const EmbeddingVector* vec : vectors) {
    if (vec->size() != dim) {
      throw ConfigError("aggregate_embedding over mixed dimensions " +
                        std::to_string(dim) + " and " + std::to_string(vec->size()));
    }
  }
  // base + sum_k w_k * (v_k - base): deviations from the first vector vanish
  // exactly when all vectors are equal, so the mean reproduces that vector
  // bit for bit regardless of weight rounding.
  const EmbeddingVector& base = *vectors[0];
  EmbeddingVector out(base);
  for (std::size_t d = 0; d < dim; ++d) {
    double delta = 0.0;
    for (std::size_t k = 0; k < vectors.size(); ++k) {
      delta += weights[k] * ((*vectors[k])[d] - base[d]);
    }
    out[d] += delta;
  }
  return out;
}

EmbeddingVector aggregate_embedding(std::span<const EmbeddingVector> vectors) {
  std::vector<const EmbeddingVector*> ptrs;
  ptrs.reserve(vectors.size());
  for (const EmbeddingVector& vec : vectors) ptrs.push_back(&vec);
  const std::vector<double> weights(vectors.size(),
                                    1.0 / static_cast<double>(vectors.size()));
  return aggregate_embedding(std::span<const EmbeddingVector* const>(ptrs), weights);
}

double score_embeddings(const EmbeddingVector& hyp, const EmbeddingVector& ref,
                        const EmbeddingVector* source, const ScorerSpec& spec) {
  (void)source;  // built-in scorers condition on hypothesis and reference only
  if (hyp.size() != ref.size()) {
    throw ConfigError("embedding dimension mismatch: " + std::to_string(hyp.size()) +
                      " vs " + std::to_string(ref.size()));
  }
  const std::size_t dim = hyp.size();
  switch (spec.kind) {
    case ScorerSpec::Kind::dot_hyp_ref: {
      double acc = 0.0;
      for (std::size_t d = 0; d < dim; ++d) acc += hyp[d] * ref[d];
      return acc;
    }
    case ScorerSpec::Kind::cosine_hyp_ref: {
      double dot = 0.0, hh = 0.0, rr = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        dot += hyp[d] * ref[d];
        hh += hyp[d] * hyp[d];
        rr += ref[d] * ref[d];
      }
      if (hh == 0.0 || rr == 0.0) return 0.0;
      return dot / (std::sqrt(hh) * std::sqrt(rr));
    }
    case ScorerSpec::Kind::bilinear: {
      if (static_cast<std::size_t>(spec.dim) != dim ||
          spec.matrix.size() != dim * dim) {
        throw ConfigError("bilinear scorer of dimension " + std::to_string(spec.dim) +
                          " applied to vectors of dimension " + std::to_string(dim));
      }
      // hyp^T W ref + bias
      double acc = spec.bias;
      for (std::size_t r = 0; r < dim; ++r) {
        double row = 0.0;
        const double* w = spec.matrix.data() + r * dim;
        for (std::size_t c = 0; c < dim; ++c) row += w[c] * ref[c];
        acc += hyp[r] * row;
      }
      return acc;
    }
  }
  throw ConfigError("unhandled scorer kind");
}

}  // namespace mbrd
