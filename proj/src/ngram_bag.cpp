#include "mbrd/ngram_bag.hpp"

#include <cstring>
#include <string>

#include "mbrd/text.hpp"

namespace mbrd {

namespace {

constexpr std::int32_t kEmptySlot = -1;

std::uint64_t hash_gram(const char32_t* gram, int length) {
  // FNV-1a over code points.
  std::uint64_t h = 1469598103934665603ull;
  for (int i = 0; i < length; ++i) {
    h ^= static_cast<std::uint64_t>(gram[i]);
    h *= 1099511628211ull;
  }
  return h;
}

bool keys_equal(const char32_t* a, const char32_t* b, int length) {
  return std::memcmp(a, b, static_cast<std::size_t>(length) * sizeof(char32_t)) == 0;
}

}  // namespace

double NGramBag::OrderMap::find(const char32_t* gram, std::uint64_t hash) const {
  if (table.empty()) return 0.0;
  const std::size_t mask = table.size() - 1;
  std::size_t pos = static_cast<std::size_t>(hash) & mask;
  while (table[pos] != kEmptySlot) {
    const auto entry = static_cast<std::size_t>(table[pos]);
    if (hashes[entry] == hash && keys_equal(key_at(entry), gram, gram_len)) {
      return counts[entry];
    }
    pos = (pos + 1) & mask;
  }
  return 0.0;
}

void NGramBag::OrderMap::add(const char32_t* gram, std::uint64_t hash, double delta) {
  if (table.empty() || (counts.size() + 1) * 10 > table.size() * 7) {
    grow_table(counts.size() + 1);
  }
  const std::size_t mask = table.size() - 1;
  std::size_t pos = static_cast<std::size_t>(hash) & mask;
  while (table[pos] != kEmptySlot) {
    const auto entry = static_cast<std::size_t>(table[pos]);
    if (hashes[entry] == hash && keys_equal(key_at(entry), gram, gram_len)) {
      counts[entry] += delta;
      return;
    }
    pos = (pos + 1) & mask;
  }
  const auto entry = static_cast<std::int32_t>(counts.size());
  keys.insert(keys.end(), gram, gram + gram_len);
  counts.push_back(delta);
  hashes.push_back(hash);
  table[pos] = entry;
}

void NGramBag::OrderMap::reserve_entries(std::size_t expected) {
  keys.reserve(expected * static_cast<std::size_t>(gram_len));
  counts.reserve(expected);
  hashes.reserve(expected);
  if (expected > 0) grow_table(expected);
}

void NGramBag::OrderMap::grow_table(std::size_t min_entries) {
  std::size_t capacity = 16;
  while (capacity * 7 < min_entries * 10) capacity <<= 1;
  if (capacity <= table.size()) return;
  table.assign(capacity, kEmptySlot);
  const std::size_t mask = capacity - 1;
  for (std::size_t entry = 0; entry < hashes.size(); ++entry) {
    std::size_t pos = static_cast<std::size_t>(hashes[entry]) & mask;
    while (table[pos] != kEmptySlot) pos = (pos + 1) & mask;
    table[pos] = static_cast<std::int32_t>(entry);
  }
}

NGramBag::NGramBag(int max_order) : max_order_(max_order) {
  if (max_order < 1) {
    throw ConfigError("max n-gram order must be at least 1, got " +
                      std::to_string(max_order));
  }
  orders_.resize(static_cast<std::size_t>(max_order));
  for (int i = 0; i < max_order; ++i) orders_[static_cast<std::size_t>(i)].gram_len = i + 1;
  totals_.assign(static_cast<std::size_t>(max_order), 0.0);
}

std::size_t NGramBag::check_order(int order) const {
  if (order < 1 || order > max_order_) {
    throw ConfigError("n-gram order " + std::to_string(order) +
                      " out of range 1.." + std::to_string(max_order_));
  }
  return static_cast<std::size_t>(order - 1);
}

NGramBag NGramBag::extract(std::string_view utf8_text, int max_order,
                           bool strip_whitespace) {
  NGramBag bag(max_order);
  std::u32string chars = utf8_decode(utf8_text);
  if (strip_whitespace) {
    std::size_t kept = 0;
    for (char32_t cp : chars) {
      if (!is_unicode_whitespace(cp)) chars[kept++] = cp;
    }
    chars.resize(kept);
  }
  const std::size_t len = chars.size();
  for (int order = 1; order <= max_order; ++order) {
    const auto width = static_cast<std::size_t>(order);
    if (len < width) break;
    const std::size_t windows = len - width + 1;
    OrderMap& map = bag.orders_[static_cast<std::size_t>(order - 1)];
    map.reserve_entries(windows);
    for (std::size_t pos = 0; pos < windows; ++pos) {
      const char32_t* gram = chars.data() + pos;
      map.add(gram, hash_gram(gram, order), 1.0);
    }
    bag.totals_[static_cast<std::size_t>(order - 1)] = static_cast<double>(windows);
  }
  return bag;
}

double NGramBag::total(int order) const { return totals_[check_order(order)]; }

std::size_t NGramBag::distinct(int order) const {
  return orders_[check_order(order)].counts.size();
}

double NGramBag::count(int order, std::u32string_view gram) const {
  const OrderMap& map = orders_[check_order(order)];
  if (gram.size() != static_cast<std::size_t>(order)) {
    throw ConfigError("gram of length " + std::to_string(gram.size()) +
                      " queried at order " + std::to_string(order));
  }
  return map.find(gram.data(), hash_gram(gram.data(), order));
}

NGramBag weighted_sum(std::span<const NGramBag* const> bags,
                      std::span<const double> weights) {
  if (bags.empty()) throw ConfigError("weighted_sum needs at least one bag");
  if (bags.size() != weights.size()) {
    throw ConfigError("weighted_sum got " + std::to_string(bags.size()) +
                      " bags but " + std::to_string(weights.size()) + " weights");
  }
  const int max_order = bags[0]->max_order();
  for (const NGramBag* bag : bags) {
    if (bag->max_order() != max_order) {
      throw ConfigError("weighted_sum over bags with max orders " +
                        std::to_string(max_order) + " and " +
                        std::to_string(bag->max_order()));
    }
  }
  for (double w : weights) {
    if (!(w >= 0.0)) throw ConfigError("weighted_sum weights must be non-negative");
  }

  NGramBag out(max_order);
  for (int order = 1; order <= max_order; ++order) {
    const auto idx = static_cast<std::size_t>(order - 1);
    std::size_t expected = 0;
    for (std::size_t k = 0; k < bags.size(); ++k) {
      if (weights[k] > 0.0) expected += bags[k]->orders_[idx].counts.size();
    }
    NGramBag::OrderMap& dst = out.orders_[idx];
    if (expected > 0) dst.reserve_entries(expected);
    for (std::size_t k = 0; k < bags.size(); ++k) {
      const double w = weights[k];
      if (w == 0.0) continue;
      const NGramBag::OrderMap& src = bags[k]->orders_[idx];
      for (std::size_t e = 0; e < src.counts.size(); ++e) {
        dst.add(src.key_at(e), src.hashes[e], w * src.counts[e]);
      }
    }
    double total = 0.0;
    for (double c : dst.counts) total += c;
    out.totals_[idx] = total;
  }
  return out;
}

NGramBag weighted_sum(std::span<const NGramBag> bags, std::span<const double> weights) {
  std::vector<const NGramBag*> ptrs;
  ptrs.reserve(bags.size());
  for (const NGramBag& bag : bags) ptrs.push_back(&bag);
  return weighted_sum(std::span<const NGramBag* const>(ptrs), weights);
}

std::vector<double> overlap(const NGramBag& a, const NGramBag& b) {
  if (a.max_order() != b.max_order()) {
    throw ConfigError("overlap between bags with max orders " +
                      std::to_string(a.max_order()) + " and " +
                      std::to_string(b.max_order()));
  }
  std::vector<double> shared(static_cast<std::size_t>(a.max_order()), 0.0);
  for (std::size_t idx = 0; idx < shared.size(); ++idx) {
    const NGramBag::OrderMap& ma = a.orders_[idx];
    const NGramBag::OrderMap& mb = b.orders_[idx];
    const NGramBag::OrderMap& small = ma.counts.size() <= mb.counts.size() ? ma : mb;
    const NGramBag::OrderMap& large = ma.counts.size() <= mb.counts.size() ? mb : ma;
    double acc = 0.0;
    for (std::size_t e = 0; e < small.counts.size(); ++e) {
      const double other = large.find(small.key_at(e), small.hashes[e]);
      if (other > 0.0) {
        const double own = small.counts[e];
        acc += own < other ? own : other;
      }
    }
    shared[idx] = acc;
  }
  return shared;
}

}  // namespace mbrd
