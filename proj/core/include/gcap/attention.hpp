#ifndef GCAP_ATTENTION_HPP_
#define GCAP_ATTENTION_HPP_

#include "gcap/proposals.hpp"
#include "gcap/tensor.hpp"

namespace gcap {

// Soft attention over the proposal pool. For each valid proposal p_i and the
// previous hidden state:
//   eps_i  = w_ph . tanh(W_p p_i + W_h h_prev + b_ph)
//   beta   = softmax over valid eps (masked entries exactly 0)
//   z      = sum_i beta_i p_i
template <typename T>
struct AttentionParams {
  Matrix<T> w_p;  // att x D
  Matrix<T> w_h;  // att x hidden
  Vec<T> b_ph;    // att
  Vec<T> w_ph;    // att (the final 1 x att projection)

  size_t attention_dim() const { return b_ph.size(); }
  size_t feature_dim() const { return w_p.cols; }
  size_t hidden_dim() const { return w_h.cols; }

  static AttentionParams init(size_t att, size_t feature, size_t hidden, RandomStream& rng,
                              double scale = 0.08);
};

// Per-timestep attention record; the grounding trace is a sequence of these.
template <typename T>
struct AttentionStep {
  Vec<T> epsilon;  // m raw scores (0 at masked slots)
  Vec<T> beta;     // m weights on the simplex, exactly 0 at masked slots
  size_t argmax = 0;
  bool uniform = false;  // set by the mean-pool degenerate mode
};

template <typename T>
struct AttentionCache {
  Matrix<T> features;               // borrowed copy of P (m x D)
  std::vector<uint8_t> valid_mask;  // m
  Vec<T> h_prev;
  std::vector<Vec<T>> tanh_act;  // per valid proposal: tanh(W_p p + W_h h + b)
  Vec<T> beta;                   // m
  bool mean_pool = false;
};

template <typename T>
struct AttendResult {
  Vec<T> z;
  AttentionStep<T> step;
};

template <typename T>
struct AttentionGrads {
  Matrix<T> w_p, w_h;
  Vec<T> b_ph, w_ph;

  static AttentionGrads zero_like(const AttentionParams<T>& p);
};

template <typename T>
AttendResult<T> attend(const AttentionParams<T>& params, const ProposalFeatureSet<T>& pool,
                       const Vec<T>& h_prev, AttentionCache<T>* cache = nullptr);

// Mean-pool baseline: beta fixed uniform over the valid proposals.
template <typename T>
AttendResult<T> attend_mean_pool(const ProposalFeatureSet<T>& pool, AttentionCache<T>* cache = nullptr);

template <typename T>
struct AttendInputGrads {
  Matrix<T> features;  // m x D, exactly zero on padded rows
  Vec<T> h_prev;
};

template <typename T>
AttendInputGrads<T> attend_backward(const AttentionParams<T>& params,
                                    const AttentionCache<T>& cache, const Vec<T>& grad_z,
                                    AttentionGrads<T>& acc);

// Backward of the mean-pool mode (no parameters, no h dependence).
template <typename T>
AttendInputGrads<T> attend_mean_pool_backward(const AttentionCache<T>& cache,
                                              const Vec<T>& grad_z);

}  // namespace gcap

#endif  // GCAP_ATTENTION_HPP_
