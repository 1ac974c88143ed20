#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "gcap/common.hpp"
#include "gcap/metrics.hpp"
#include "gcap/vocab.hpp"

using namespace gcap;

namespace {

EvalPair pair_of(const std::string& cand, const std::vector<std::string>& refs) {
  EvalPair p;
  p.candidate = tokenize(cand);
  for (const auto& r : refs) p.references.push_back(tokenize(r));
  return p;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("clipped n-gram counting by hand") {
  const std::vector<EvalPair> clip = {pair_of("the the the", {"the cat"})};
  const NgramCounts c1 = ngram_precision(clip, 1);
  CHECK(c1.clipped == 1);  // three "the", clipped at the single reference occurrence
  CHECK(c1.total == 3);

  const std::vector<EvalPair> sub = {pair_of("the cat sat", {"the cat sat down"})};
  for (int n = 1; n <= 3; ++n) {
    const NgramCounts c = ngram_precision(sub, n);
    CHECK(c.clipped == c.total);  // every candidate n-gram appears in the reference
    CHECK(c.total == 4 - n);
  }
  const NgramCounts c4 = ngram_precision(sub, 4);
  CHECK(c4.total == 0);  // candidate too short for 4-grams
}

TEST_CASE("brevity penalty fixture: the cat sat") {
  const std::vector<EvalPair> pairs = {pair_of("the cat sat", {"the cat sat down"})};
  const std::vector<double> scores = bleu(pairs, 4);
  const double bp = std::exp(1.0 - 4.0 / 3.0);
  CHECK(std::abs(scores[0] - bp) < 1e-9);
  CHECK(scores[0] == doctest::Approx(0.71653131057378925).epsilon(1e-9));
  CHECK(std::abs(scores[1] - bp) < 1e-9);  // all precisions are 1
  CHECK(std::abs(scores[2] - bp) < 1e-9);
  CHECK(scores[3] == 0.0);  // no 4-grams -> zero precision zeroes BLEU@4
}

TEST_CASE("unigram clipping fixture: the the the") {
  const std::vector<EvalPair> pairs = {pair_of("the the the", {"the cat"})};
  const std::vector<double> scores = bleu(pairs, 4);
  // candidate longer than the reference, no penalty; p1 = 1/3
  CHECK(std::abs(scores[0] - 1.0 / 3.0) < 1e-9);
  CHECK(scores[1] == 0.0);
}

TEST_CASE("self-match scores 1.0 at every order") {
  const std::vector<EvalPair> pairs = {
      pair_of("a man is playing a guitar", {"a man is playing a guitar", "a man plays"}),
      pair_of("the dog runs fast today", {"the dog runs fast today"})};
  for (double s : bleu(pairs, 4)) CHECK(std::abs(s - 1.0) < 1e-12);
}

TEST_CASE("corpus-level pooling fixture") {
  // counts pool across pairs before the geometric mean
  const std::vector<EvalPair> pairs = {pair_of("a b c d", {"a b c d"}),
                                       pair_of("a b", {"a b c"})};
  const std::vector<double> scores = bleu(pairs, 4);
  const double bp = std::exp(1.0 - 7.0 / 6.0);  // r = 4 + 3, c = 4 + 2
  for (int n = 0; n < 4; ++n) CHECK(std::abs(scores[n] - bp) < 1e-9);
  CHECK(scores[3] == doctest::Approx(0.84648172489061413).epsilon(1e-9));
}

TEST_CASE("multi-reference clipping fixture") {
  const std::vector<EvalPair> pairs = {
      pair_of("the cat the cat", {"the cat", "cat the cat"})};
  const std::vector<double> scores = bleu(pairs, 2);
  // closest reference length is 3 -> BP = 1; p1 = 3/4, p2 = 2/3
  CHECK(std::abs(scores[0] - 3.0 / 4.0) < 1e-9);
  CHECK(std::abs(scores[1] - std::sqrt(0.5)) < 1e-9);
  CHECK(scores[1] == doctest::Approx(0.70710678118654757).epsilon(1e-9));
}

TEST_CASE("closest-reference ties resolve toward the shorter reference") {
  // reference lengths 2 and 4 are both one away from the 3-token candidate;
  // choosing 2 keeps BP at 1, choosing 4 would shrink it
  const std::vector<EvalPair> pairs = {pair_of("x y z", {"x y", "x y z d"})};
  const std::vector<double> scores = bleu(pairs, 3);
  CHECK(scores[2] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("permuting the corpus leaves BLEU unchanged") {
  std::vector<EvalPair> pairs = {
      pair_of("a man is playing a guitar", {"a man is playing the guitar"}),
      pair_of("the dog chases a ball", {"a dog is chasing a ball", "the dog chases a ball"}),
      pair_of("x y", {"x y z"})};
  const std::vector<double> base = bleu(pairs, 4);
  std::rotate(pairs.begin(), pairs.begin() + 1, pairs.end());
  const std::vector<double> rotated = bleu(pairs, 4);
  for (int n = 0; n < 4; ++n) CHECK(std::abs(base[n] - rotated[n]) < 1e-12);
}

TEST_CASE("empty candidates and bad input") {
  const std::vector<EvalPair> empty_cand = {pair_of("", {"a b"})};
  for (double s : bleu(empty_cand, 4)) CHECK(s == 0.0);

  const std::vector<EvalPair> none;
  CHECK_THROWS_AS(bleu(none, 4), ValidationError);
  std::vector<EvalPair> no_refs(1);
  no_refs[0].candidate = {"a"};
  CHECK_THROWS_AS(bleu(no_refs, 4), ValidationError);
}

TEST_CASE("scores stay in the unit interval") {
  RandomStream rng(3);
  const std::vector<std::string> words = {"a", "b", "c", "d", "e"};
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<EvalPair> pairs;
    for (int p = 0; p < 3; ++p) {
      auto sentence = [&rng, &words]() {
        std::string s;
        const size_t len = 1 + rng.next_index(8);
        for (size_t i = 0; i < len; ++i) {
          if (i) s += ' ';
          s += words[rng.next_index(words.size())];
        }
        return s;
      };
      pairs.push_back(pair_of(sentence(), {sentence(), sentence()}));
    }
    for (double s : bleu(pairs, 4)) {
      CHECK(s >= 0.0);
      CHECK(s <= 1.0);
    }
  }
}

}  // TEST_SUITE
