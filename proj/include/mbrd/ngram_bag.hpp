#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "mbrd/errors.hpp"

namespace mbrd {

// Multiset of character n-grams with real-valued counts, one hash map per
// order. Bags extracted from text hold integral counts; weighted sums of bags
// hold fractional counts. Grams are stored contiguously per order (all grams
// of order k have exactly k code points), so a map entry is an offset into the
// key arena plus a count and a cached hash.
class NGramBag {
 public:
  NGramBag() = default;
  explicit NGramBag(int max_order);

  // Counts every character n-gram of orders 1..max_order. Whitespace removal
  // uses the Unicode White_Space property and happens before windowing.
  static NGramBag extract(std::string_view utf8_text, int max_order,
                          bool strip_whitespace = true);

  int max_order() const noexcept { return max_order_; }

  // Total gram mass for one order. For a freshly extracted text of length L
  // (after stripping) this is max(0, L - order + 1).
  double total(int order) const;

  // Number of distinct grams stored for one order.
  std::size_t distinct(int order) const;

  // Count of one gram; zero when absent. gram.size() must equal order.
  double count(int order, std::u32string_view gram) const;

  // Visits (gram, count) pairs of one order in insertion order.
  template <typename Fn>
  void for_each(int order, Fn&& fn) const {
    const OrderMap& map = orders_[check_order(order)];
    for (std::size_t e = 0; e < map.counts.size(); ++e) {
      fn(std::u32string_view(map.keys.data() + e * static_cast<std::size_t>(map.gram_len),
                             static_cast<std::size_t>(map.gram_len)),
         map.counts[e]);
    }
  }

  friend NGramBag weighted_sum(std::span<const NGramBag* const> bags,
                               std::span<const double> weights);
  friend std::vector<double> overlap(const NGramBag& a, const NGramBag& b);

 private:
  // Open-addressing map for one order: power-of-two table of entry indices
  // (-1 empty), linear probing, load factor capped at 0.7. Keys live in a
  // shared arena; hashes are cached so rehashing and cross-bag probes never
  // touch key bytes again.
  struct OrderMap {
    int gram_len = 0;
    std::vector<char32_t> keys;
    std::vector<double> counts;
    std::vector<std::uint64_t> hashes;
    std::vector<std::int32_t> table;

    double find(const char32_t* gram, std::uint64_t hash) const;
    void add(const char32_t* gram, std::uint64_t hash, double delta);
    void reserve_entries(std::size_t expected);
    void grow_table(std::size_t min_entries);
    const char32_t* key_at(std::size_t entry) const {
      return keys.data() + entry * static_cast<std::size_t>(gram_len);
    }
  };

  std::size_t check_order(int order) const;

  int max_order_ = 0;
  std::vector<OrderMap> orders_;
  std::vector<double> totals_;
};

// Weighted elementwise sum of bags: count(g) = sum_k w_k * count_k(g).
// Weights must be non-negative; zero-weight bags are skipped entirely. All
// bags must share one max_order.
NGramBag weighted_sum(std::span<const NGramBag* const> bags,
                      std::span<const double> weights);
NGramBag weighted_sum(std::span<const NGramBag> bags,
                      std::span<const double> weights);

// Per-order overlap: sum over grams of min(count_a, count_b). Index i holds
// order i+1. Iterates the side with fewer distinct grams per order.
std::vector<double> overlap(const NGramBag& a, const NGramBag& b);

}  // namespace mbrd
