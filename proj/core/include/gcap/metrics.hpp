#ifndef GCAP_METRICS_HPP_
#define GCAP_METRICS_HPP_

#include <span>
#include <string>
#include <vector>

namespace gcap {

struct EvalPair {
  std::vector<std::string> candidate;
  std::vector<std::vector<std::string>> references;  // at least one
};

// Corpus-level clipped n-gram counts: per candidate n-gram the match count
// is clipped at the maximum count over any single reference.
struct NgramCounts {
  long long clipped = 0;
  long long total = 0;
};
NgramCounts ngram_precision(std::span<const EvalPair> pairs, int n);

// Corpus BLEU@1..max_n with brevity penalty. BP uses the closest reference
// length per pair (length ties resolved toward the shorter reference).
// Any zero n-gram precision zeroes BLEU@n.
std::vector<double> bleu(std::span<const EvalPair> pairs, int max_n = 4);

}  // namespace gcap

#endif  // GCAP_METRICS_HPP_
