#ifndef GCAP_TEST_ORACLES_HPP_
#define GCAP_TEST_ORACLES_HPP_

// Independent oracles used by both the unit tests and the acceptance suite.
// These deliberately avoid the library's search/closed-form code paths: the
// decoder oracle enumerates every sequence, the LOO oracle retrains from
// scratch.

#include "gcap/captioner.hpp"
#include "gcap/semantics.hpp"

namespace gcap::testing {

// Exhaustive enumeration over all token sequences up to max_len, with the
// same emission rules as the beam (no BOS/PAD, EOS masked under min_len,
// finished hypotheses preferred over length-capped ones).
struct BruteForceResult {
  std::vector<int> tokens;
  double log_prob = 0;
  bool finished = false;
};

template <typename T>
BruteForceResult brute_force_decode(const CaptionModel<T>& model,
                                    const ProposalFeatureSet<T>& features, const Vec<T>* semantic,
                                    size_t min_len, size_t max_len) {
  std::vector<int> emittable;
  for (int tok = 0; tok < static_cast<int>(model.vocab_size); ++tok) {
    if (tok == Vocabulary::kBos || tok == Vocabulary::kPad || tok == Vocabulary::kEos) continue;
    emittable.push_back(tok);
  }

  BruteForceResult best_finished, best_frozen;
  bool have_finished = false, have_frozen = false;

  struct Frame {
    std::vector<int> tokens;
    double lp;
    RuntimeState<T> state;
  };
  std::vector<Frame> stack = {{{}, 0.0, RuntimeState<T>::zero(model)}};
  while (!stack.empty()) {
    Frame f = stack.back();
    stack.pop_back();
    const int prev = f.tokens.empty() ? Vocabulary::kBos : f.tokens.back();
    const StepOutput<T> out = step_logits(model, f.state, prev, features, semantic);

    if (f.tokens.size() >= min_len) {
      BruteForceResult r;
      r.tokens = f.tokens;
      r.log_prob = f.lp + static_cast<double>(out.log_probs[Vocabulary::kEos]);
      r.finished = true;
      if (!have_finished || r.log_prob > best_finished.log_prob ||
          (r.log_prob == best_finished.log_prob && r.tokens < best_finished.tokens)) {
        best_finished = r;
        have_finished = true;
      }
    }
    for (int tok : emittable) {
      Frame child;
      child.tokens = f.tokens;
      child.tokens.push_back(tok);
      child.lp = f.lp + static_cast<double>(out.log_probs[tok]);
      child.state = out.next;
      if (child.tokens.size() >= max_len) {
        BruteForceResult r;
        r.tokens = child.tokens;
        r.log_prob = child.lp;
        r.finished = false;
        if (!have_frozen || r.log_prob > best_frozen.log_prob ||
            (r.log_prob == best_frozen.log_prob && r.tokens < best_frozen.tokens)) {
          best_frozen = r;
          have_frozen = true;
        }
      } else {
        stack.push_back(std::move(child));
      }
    }
  }
  return have_finished ? best_finished : best_frozen;
}

// Leave-one-out by explicit retraining without point `drop`.
inline double loo_by_retraining(const Matrix<double>& k, const Vec<double>& y, size_t drop,
                                double lambda, bool use_bias) {
  const size_t n = k.rows;
  Matrix<double> kk(n - 1, n - 1);
  Vec<double> yy(n - 1);
  Vec<double> cross(n - 1);
  size_t r = 0;
  for (size_t i = 0; i < n; ++i) {
    if (i == drop) continue;
    size_t c = 0;
    for (size_t j = 0; j < n; ++j) {
      if (j == drop) continue;
      kk.at(r, c++) = k.at(i, j);
    }
    yy[r] = y[i];
    cross[r] = k.at(drop, i);
    ++r;
  }
  const LsSvmModel m = lssvm_train(kk, yy, lambda, {}, use_bias);
  return lssvm_predict(m, cross);
}

}  // namespace gcap::testing

#endif  // GCAP_TEST_ORACLES_HPP_
