#pragma once

#include <cstdint>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

namespace mbrd {

// Deterministic random source for all seeded behavior. Draws go through
// next()/below() only, so sequences depend on the mt19937_64 stream alone and
// never on the standard library's distribution or shuffle implementations,
// which are not portable across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform integer in [0, bound). Rejection sampling keeps it unbiased.
  std::uint64_t below(std::uint64_t bound) {
    // (0 - bound) wraps to 2^64 - bound, whose remainder is 2^64 mod bound.
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t draw = engine_();
      if (draw >= threshold) return draw % bound;
    }
  }

  // In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  // First `take` positions of a partial Fisher-Yates over [0, population):
  // a uniform sample without replacement, in draw order.
  std::vector<std::size_t> sample_without_replacement(std::size_t population,
                                                      std::size_t take) {
    std::vector<std::size_t> indices(population);
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    for (std::size_t i = 0; i < take && i + 1 < population; ++i) {
      const auto j = i + static_cast<std::size_t>(below(population - i));
      std::swap(indices[i], indices[j]);
    }
    indices.resize(take);
    return indices;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace mbrd
