#include "mbrd/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "mbrd/engine.hpp"
#include "mbrd/ngram_bag.hpp"
#include "mbrd/rng.hpp"
#include "mbrd/text.hpp"

namespace mbrd::oracle {

namespace {

// Own UTF-8 handling; the production decoder in text.cpp is not reused.
std::u32string decode(std::string_view utf8) {
  std::u32string out;
  std::size_t i = 0;
  while (i < utf8.size()) {
    const auto b0 = static_cast<unsigned char>(utf8[i]);
    std::size_t need;
    if (b0 < 0x80) {
      need = 0;
    } else if (b0 >= 0xC0 && b0 < 0xE0) {
      need = 1;
    } else if (b0 >= 0xE0 && b0 < 0xF0) {
      need = 2;
    } else if (b0 >= 0xF0 && b0 < 0xF8) {
      need = 3;
    } else {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    char32_t cp = need == 0   ? b0
                  : need == 1 ? static_cast<char32_t>(b0 & 0x1F)
                  : need == 2 ? static_cast<char32_t>(b0 & 0x0F)
                              : static_cast<char32_t>(b0 & 0x07);
    bool ok = i + need < utf8.size();
    for (std::size_t k = 1; ok && k <= need; ++k) {
      const auto bk = static_cast<unsigned char>(utf8[i + k]);
      if (bk < 0x80 || bk >= 0xC0) {
        ok = false;
      } else {
        cp = (cp << 6) | (bk & 0x3F);
      }
    }
    if (!ok) {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    static constexpr char32_t kFloor[4] = {0, 0x80, 0x800, 0x10000};
    if (cp < kFloor[need] || cp > 0x10FFFF || (0xD800 <= cp && cp <= 0xDFFF)) {
      cp = 0xFFFD;
    }
    out.push_back(cp);
    i += need + 1;
  }
  return out;
}

bool white_space(char32_t cp) {
  static constexpr char32_t kList[] = {
      0x0009, 0x000A, 0x000B, 0x000C, 0x000D, 0x0020, 0x0085, 0x00A0, 0x1680,
      0x2000, 0x2001, 0x2002, 0x2003, 0x2004, 0x2005, 0x2006, 0x2007, 0x2008,
      0x2009, 0x200A, 0x2028, 0x2029, 0x202F, 0x205F, 0x3000};
  return std::binary_search(std::begin(kList), std::end(kList), cp);
}

std::u32string prepare(std::string_view utf8, bool strip_whitespace) {
  std::u32string chars = decode(utf8);
  if (!strip_whitespace) return chars;
  std::u32string kept;
  kept.reserve(chars.size());
  for (const char32_t cp : chars) {
    if (!white_space(cp)) kept.push_back(cp);
  }
  return kept;
}

using GramCounts = std::map<std::u32string, long long>;

std::vector<GramCounts> profile(const std::u32string& chars, int max_order) {
  std::vector<GramCounts> out(static_cast<std::size_t>(max_order));
  for (int order = 1; order <= max_order; ++order) {
    const auto width = static_cast<std::size_t>(order);
    for (std::size_t pos = 0; pos + width <= chars.size(); ++pos) {
      ++out[width - 1][chars.substr(pos, width)];
    }
  }
  return out;
}

long long total_of(const GramCounts& counts) {
  long long total = 0;
  for (const auto& [gram, count] : counts) total += count;
  return total;
}

long long overlap_of(const GramCounts& a, const GramCounts& b) {
  long long shared = 0;
  for (const auto& [gram, count] : a) {
    const auto it = b.find(gram);
    if (it != b.end()) shared += std::min(count, it->second);
  }
  return shared;
}

}  // namespace

std::vector<double> naive_overlap(std::string_view a_utf8, std::string_view b_utf8,
                                  int max_order, bool strip_whitespace) {
  const std::vector<GramCounts> pa = profile(prepare(a_utf8, strip_whitespace), max_order);
  const std::vector<GramCounts> pb = profile(prepare(b_utf8, strip_whitespace), max_order);
  std::vector<double> shared(static_cast<std::size_t>(max_order), 0.0);
  for (int order = 1; order <= max_order; ++order) {
    shared[static_cast<std::size_t>(order - 1)] =
        static_cast<double>(overlap_of(pa[order - 1], pb[order - 1]));
  }
  return shared;
}

double naive_chrf(std::string_view hyp_utf8, std::string_view ref_utf8,
                  const ChrfParams& params, bool strip_whitespace) {
  const std::vector<GramCounts> hyp =
      profile(prepare(hyp_utf8, strip_whitespace), params.max_order);
  const std::vector<GramCounts> ref =
      profile(prepare(ref_utf8, strip_whitespace), params.max_order);

  double precision_sum = 0.0;
  double recall_sum = 0.0;
  int orders_used = 0;
  for (int order = 1; order <= params.max_order; ++order) {
    const long long hyp_total = total_of(hyp[order - 1]);
    const long long ref_total = total_of(ref[order - 1]);
    if (hyp_total == 0 && ref_total == 0) {
      if (params.effective_order) continue;
      ++orders_used;
      continue;
    }
    ++orders_used;
    const long long shared = overlap_of(hyp[order - 1], ref[order - 1]);
    if (hyp_total > 0) {
      precision_sum += static_cast<double>(shared) / static_cast<double>(hyp_total);
    }
    if (ref_total > 0) {
      recall_sum += static_cast<double>(shared) / static_cast<double>(ref_total);
    }
  }
  if (orders_used == 0) return params.scale;
  const double precision = precision_sum / orders_used;
  const double recall = recall_sum / orders_used;
  if (precision == 0.0 && recall == 0.0) return 0.0;
  const double beta2 = params.beta * params.beta;
  return params.scale * (1.0 + beta2) * precision * recall /
         (beta2 * precision + recall);
}

std::vector<double> naive_standard_utilities(const std::vector<std::string>& hyps,
                                             const std::vector<std::string>& refs,
                                             const ChrfParams& params) {
  std::vector<NGramBag> hyp_bags;
  hyp_bags.reserve(hyps.size());
  for (const std::string& text : hyps) {
    hyp_bags.push_back(NGramBag::extract(text, params.max_order));
  }
  std::vector<NGramBag> ref_bags;
  ref_bags.reserve(refs.size());
  for (const std::string& text : refs) {
    ref_bags.push_back(NGramBag::extract(text, params.max_order));
  }
  std::vector<double> utilities;
  utilities.reserve(hyps.size());
  for (const NGramBag& hyp : hyp_bags) {
    double acc = 0.0;
    for (const NGramBag& ref : ref_bags) acc += chrf_score(hyp, ref, params);
    utilities.push_back(acc / static_cast<double>(ref_bags.size()));
  }
  return utilities;
}

namespace {

std::string random_text(Rng& rng, std::u32string_view alphabet,
                        std::size_t max_len) {
  const auto len = static_cast<std::size_t>(rng.below(max_len + 1));
  std::u32string text;
  text.reserve(len);
  for (std::size_t i = 0; i < len; ++i) {
    text.push_back(alphabet[static_cast<std::size_t>(rng.below(alphabet.size()))]);
  }
  return utf8_encode(text);
}

// Latin, Cyrillic, Greek, CJK, digits, punctuation, and several kinds of
// whitespace, so multi-byte decoding and stripping are both exercised.
constexpr std::u32string_view kMixedAlphabet =
    U"abcdefghij ABCDE абвгдежзий αβγδε 一二三 0123456789,.!?  \t 　";

constexpr std::u32string_view kSmallAlphabet = U"abc d";

}  // namespace

SuiteResult check_overlap_suite(std::size_t instances, std::uint64_t seed,
                                double inject) {
  SuiteResult result;
  result.name = "overlap-vs-bruteforce";
  result.instances = instances;
  result.budget = 1e-9;
  Rng rng(seed);
  double worst = 0.0;
  for (std::size_t i = 0; i < instances; ++i) {
    const int max_order = 1 + static_cast<int>(rng.below(4));
    const std::string a = random_text(rng, kSmallAlphabet, 12);
    const std::string b = random_text(rng, kSmallAlphabet, 12);
    const NGramBag ba = NGramBag::extract(a, max_order);
    const NGramBag bb = NGramBag::extract(b, max_order);
    std::vector<double> fast = overlap(ba, bb);
    const std::vector<double> slow = naive_overlap(a, b, max_order);
    if (i == 0 && inject != 0.0) fast[0] += inject;
    for (int order = 0; order < max_order; ++order) {
      const double dev = std::abs(fast[order] - slow[order]);
      worst = std::max(worst, dev);
    }
  }
  result.max_abs_deviation = worst;
  result.passed = worst <= result.budget;
  return result;
}

SuiteResult check_chrf_suite(std::size_t pairs, std::uint64_t seed, double inject) {
  SuiteResult result;
  result.name = "chrf-vs-naive";
  result.instances = pairs;
  result.budget = 1e-9;
  const ChrfParams params;
  Rng rng(seed);
  double worst = 0.0;
  for (std::size_t i = 0; i < pairs; ++i) {
    const std::string hyp = random_text(rng, kMixedAlphabet, 40);
    const std::string ref = random_text(rng, kMixedAlphabet, 40);
    double fast = chrf_score(NGramBag::extract(hyp, params.max_order),
                             NGramBag::extract(ref, params.max_order), params);
    if (i == 0 && inject != 0.0) fast += inject;
    const double slow = naive_chrf(hyp, ref, params);
    worst = std::max(worst, std::abs(fast - slow));
  }
  result.max_abs_deviation = worst;
  result.passed = worst <= result.budget;
  return result;
}

SuiteResult check_standard_mbr_suite(std::size_t instances, std::uint64_t seed,
                                     double inject) {
  SuiteResult result;
  result.name = "standard-mbr-vs-naive";
  result.instances = instances;
  result.budget = 1e-9;
  const ChrfParams params;
  const ChrfMetric metric(params);
  Rng rng(seed);
  double worst = 0.0;
  for (std::size_t i = 0; i < instances; ++i) {
    CandidateSet set;
    set.id = "oracle-" + std::to_string(i);
    const auto n = static_cast<std::size_t>(1 + rng.below(8));
    const auto m = static_cast<std::size_t>(1 + rng.below(8));
    for (std::size_t h = 0; h < n; ++h) {
      set.hypotheses.push_back(random_text(rng, kSmallAlphabet, 6));
    }
    for (std::size_t r = 0; r < m; ++r) {
      set.references.push_back(random_text(rng, kSmallAlphabet, 6));
    }
    SelectionReport report = select_standard(set, metric);
    if (i == 0 && inject != 0.0) report.utilities[0] += inject;
    const std::vector<double> expected =
        naive_standard_utilities(set.hypotheses, set.references, params);
    for (std::size_t h = 0; h < n; ++h) {
      worst = std::max(worst, std::abs(report.utilities[h] - expected[h]));
    }
  }
  result.max_abs_deviation = worst;
  result.passed = worst <= result.budget;
  return result;
}

}  // namespace mbrd::oracle
