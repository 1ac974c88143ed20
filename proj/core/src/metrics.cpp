#include "gcap/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>

#include "gcap/common.hpp"

namespace gcap {

namespace {

using NgramMap = std::map<std::vector<std::string>, long long>;

NgramMap count_ngrams(const std::vector<std::string>& tokens, int n) {
  NgramMap counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (size_t i = 0; i + n <= tokens.size(); ++i) {
    std::vector<std::string> gram(tokens.begin() + i, tokens.begin() + i + n);
    ++counts[std::move(gram)];
  }
  return counts;
}

}  // namespace

NgramCounts ngram_precision(std::span<const EvalPair> pairs, int n) {
  if (n < 1) throw ValidationError("ngram_precision: n must be >= 1");
  NgramCounts out;
  for (const auto& pair : pairs) {
    const NgramMap cand = count_ngrams(pair.candidate, n);
    NgramMap max_ref;
    for (const auto& ref : pair.references) {
      for (const auto& [gram, cnt] : count_ngrams(ref, n)) {
        auto& m = max_ref[gram];
        m = std::max(m, cnt);
      }
    }
    for (const auto& [gram, cnt] : cand) {
      out.total += cnt;
      auto it = max_ref.find(gram);
      if (it != max_ref.end()) out.clipped += std::min(cnt, it->second);
    }
  }
  return out;
}

std::vector<double> bleu(std::span<const EvalPair> pairs, int max_n) {
  if (pairs.empty()) throw ValidationError("bleu: empty pair list");
  if (max_n < 1) throw ValidationError("bleu: max_n must be >= 1");
  for (const auto& p : pairs) {
    if (p.references.empty()) throw ValidationError("bleu: a pair has no references");
  }

  long long cand_len = 0, ref_len = 0;
  for (const auto& pair : pairs) {
    const long long c = static_cast<long long>(pair.candidate.size());
    cand_len += c;
    long long best = static_cast<long long>(pair.references[0].size());
    for (const auto& ref : pair.references) {
      const long long r = static_cast<long long>(ref.size());
      const long long d_new = std::llabs(r - c), d_best = std::llabs(best - c);
      if (d_new < d_best || (d_new == d_best && r < best)) best = r;
    }
    ref_len += best;
  }
  const double bp =
      cand_len == 0 ? 0.0
                    : std::min(1.0, std::exp(1.0 - static_cast<double>(ref_len) /
                                                       static_cast<double>(cand_len)));

  std::vector<double> precisions(static_cast<size_t>(max_n));
  for (int n = 1; n <= max_n; ++n) {
    const NgramCounts c = ngram_precision(pairs, n);
    precisions[static_cast<size_t>(n - 1)] =
        c.total > 0 ? static_cast<double>(c.clipped) / static_cast<double>(c.total) : 0.0;
  }

  std::vector<double> scores(static_cast<size_t>(max_n), 0.0);
  double log_sum = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    const double p = precisions[static_cast<size_t>(n - 1)];
    if (p <= 0.0) {
      // this and every higher order include a zero precision
      for (int k = n; k <= max_n; ++k) scores[static_cast<size_t>(k - 1)] = 0.0;
      break;
    }
    log_sum += std::log(p);
    scores[static_cast<size_t>(n - 1)] = bp * std::exp(log_sum / n);
  }
  return scores;
}

}  // namespace gcap
