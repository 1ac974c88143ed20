#include "gcap/attention.hpp"

#include <cmath>

#include "gcap/common.hpp"

namespace gcap {

template <typename T>
AttentionParams<T> AttentionParams<T>::init(size_t att, size_t feature, size_t hidden,
                                            RandomStream& rng, double scale) {
  AttentionParams<T> p;
  p.w_p = Matrix<T>(att, feature);
  p.w_h = Matrix<T>(att, hidden);
  p.b_ph = Vec<T>(att, T(0));
  p.w_ph = Vec<T>(att, T(0));
  fill_uniform(p.w_p.data, rng, -scale, scale);
  fill_uniform(p.w_h.data, rng, -scale, scale);
  fill_uniform(p.w_ph, rng, -scale, scale);
  return p;
}

template <typename T>
AttentionGrads<T> AttentionGrads<T>::zero_like(const AttentionParams<T>& p) {
  AttentionGrads<T> g;
  g.w_p = Matrix<T>(p.w_p.rows, p.w_p.cols);
  g.w_h = Matrix<T>(p.w_h.rows, p.w_h.cols);
  g.b_ph = Vec<T>(p.b_ph.size(), T(0));
  g.w_ph = Vec<T>(p.w_ph.size(), T(0));
  return g;
}

namespace {

template <typename T>
size_t checked_valid_count(const ProposalFeatureSet<T>& pool) {
  const size_t k = pool.valid_count();
  if (k == 0) throw ValidationError("attend: proposal pool has zero valid entries");
  return k;
}

template <typename T>
size_t beta_argmax(const Vec<T>& beta, const std::vector<uint8_t>& mask) {
  size_t best = 0;
  bool seen = false;
  for (size_t i = 0; i < beta.size(); ++i) {
    if (!mask[i]) continue;
    if (!seen || beta[i] > beta[best]) {
      best = i;
      seen = true;
    }
  }
  return best;
}

}  // namespace

template <typename T>
AttendResult<T> attend(const AttentionParams<T>& params, const ProposalFeatureSet<T>& pool,
                       const Vec<T>& h_prev, AttentionCache<T>* cache) {
  checked_valid_count(pool);
  const size_t m = pool.features.rows;
  const size_t d = pool.features.cols;
  if (d != params.feature_dim() || h_prev.size() != params.hidden_dim()) {
    throw ValidationError("attend: feature/hidden dimensions do not match parameters");
  }

  Vec<T> h_term = params.b_ph;
  affine_accum(params.w_h, h_prev, h_term);

  Vec<T> eps(m, T(0));
  std::vector<Vec<T>> tanh_act(m);
  for (size_t i = 0; i < m; ++i) {
    if (!pool.valid_mask[i]) continue;
    Vec<T> q = h_term;
    Vec<T> p_i(pool.features.row(i).begin(), pool.features.row(i).end());
    affine_accum(params.w_p, p_i, q);
    for (auto& v : q) v = std::tanh(v);
    eps[i] = dot(params.w_ph, q);
    tanh_act[i] = std::move(q);
  }

  Vec<T> beta = softmax_masked(eps, pool.valid_mask);

  Vec<T> z(d, T(0));
  for (size_t i = 0; i < m; ++i) {
    if (!pool.valid_mask[i]) continue;
    const T w = beta[i];
    auto row = pool.features.row(i);
    for (size_t c = 0; c < d; ++c) z[c] += w * row[c];
  }

  AttendResult<T> out;
  out.z = std::move(z);
  out.step.epsilon = eps;
  out.step.beta = beta;
  out.step.argmax = beta_argmax(beta, pool.valid_mask);

  if (cache) {
    cache->features = pool.features;
    cache->valid_mask = pool.valid_mask;
    cache->h_prev = h_prev;
    cache->tanh_act = std::move(tanh_act);
    cache->beta = std::move(beta);
    cache->mean_pool = false;
  }
  return out;
}

template <typename T>
AttendResult<T> attend_mean_pool(const ProposalFeatureSet<T>& pool, AttentionCache<T>* cache) {
  const size_t k = checked_valid_count(pool);
  const size_t m = pool.features.rows;
  const size_t d = pool.features.cols;
  const T w = T(1) / static_cast<T>(k);

  AttendResult<T> out;
  out.z.assign(d, T(0));
  out.step.epsilon.assign(m, T(0));
  out.step.beta.assign(m, T(0));
  out.step.uniform = true;
  for (size_t i = 0; i < m; ++i) {
    if (!pool.valid_mask[i]) continue;
    out.step.beta[i] = w;
    auto row = pool.features.row(i);
    for (size_t c = 0; c < d; ++c) out.z[c] += w * row[c];
  }
  out.step.argmax = beta_argmax(out.step.beta, pool.valid_mask);

  if (cache) {
    cache->features = pool.features;
    cache->valid_mask = pool.valid_mask;
    cache->h_prev.clear();
    cache->tanh_act.clear();
    cache->beta = out.step.beta;
    cache->mean_pool = true;
  }
  return out;
}

template <typename T>
AttendInputGrads<T> attend_backward(const AttentionParams<T>& params,
                                    const AttentionCache<T>& cache, const Vec<T>& grad_z,
                                    AttentionGrads<T>& acc) {
  if (cache.mean_pool || cache.tanh_act.empty()) {
    throw ValidationError("attend_backward: cache missing or from a mean-pool forward");
  }
  const size_t m = cache.features.rows;
  const size_t d = cache.features.cols;
  if (grad_z.size() != d) throw ValidationError("attend_backward: grad_z dimension mismatch");

  AttendInputGrads<T> in;
  in.features = Matrix<T>(m, d);
  in.h_prev.assign(cache.h_prev.size(), T(0));

  // z = sum beta_i p_i
  Vec<T> dbeta(m, T(0));
  for (size_t i = 0; i < m; ++i) {
    if (!cache.valid_mask[i]) continue;
    auto row = cache.features.row(i);
    T acc_dot = T(0);
    for (size_t c = 0; c < d; ++c) {
      acc_dot += grad_z[c] * row[c];
      in.features.at(i, c) += cache.beta[i] * grad_z[c];
    }
    dbeta[i] = acc_dot;
  }

  // softmax backward restricted to valid entries
  T mix = T(0);
  for (size_t i = 0; i < m; ++i) {
    if (cache.valid_mask[i]) mix += cache.beta[i] * dbeta[i];
  }
  for (size_t i = 0; i < m; ++i) {
    if (!cache.valid_mask[i]) continue;
    const T deps = cache.beta[i] * (dbeta[i] - mix);
    if (deps == T(0)) continue;

    // eps_i = w_ph . tanh_act_i
    const Vec<T>& r = cache.tanh_act[i];
    Vec<T> dq(r.size());
    for (size_t a = 0; a < r.size(); ++a) {
      acc.w_ph[a] += deps * r[a];
      dq[a] = deps * params.w_ph[a] * (T(1) - r[a] * r[a]);
    }
    Vec<T> p_i(cache.features.row(i).begin(), cache.features.row(i).end());
    outer_accum(acc.w_p, dq, p_i);
    outer_accum(acc.w_h, dq, cache.h_prev);
    for (size_t a = 0; a < dq.size(); ++a) acc.b_ph[a] += dq[a];

    Vec<T> dp(d, T(0));
    matvec_transpose_accum(params.w_p, dq, dp);
    for (size_t c = 0; c < d; ++c) in.features.at(i, c) += dp[c];
    matvec_transpose_accum(params.w_h, dq, in.h_prev);
  }
  return in;
}

template <typename T>
AttendInputGrads<T> attend_mean_pool_backward(const AttentionCache<T>& cache,
                                              const Vec<T>& grad_z) {
  if (!cache.mean_pool) {
    throw ValidationError("attend_mean_pool_backward: cache is not from a mean-pool forward");
  }
  const size_t m = cache.features.rows;
  const size_t d = cache.features.cols;
  if (grad_z.size() != d) {
    throw ValidationError("attend_mean_pool_backward: grad_z dimension mismatch");
  }
  AttendInputGrads<T> in;
  in.features = Matrix<T>(m, d);
  in.h_prev.clear();
  for (size_t i = 0; i < m; ++i) {
    if (!cache.valid_mask[i]) continue;
    const T w = cache.beta[i];
    for (size_t c = 0; c < d; ++c) in.features.at(i, c) = w * grad_z[c];
  }
  return in;
}

#define GCAP_INSTANTIATE_ATTENTION(T)                                                         \
  template struct AttentionParams<T>;                                                        \
  template struct AttentionGrads<T>;                                                         \
  template AttendResult<T> attend<T>(const AttentionParams<T>&, const ProposalFeatureSet<T>&, \
                                     const Vec<T>&, AttentionCache<T>*);                      \
  template AttendResult<T> attend_mean_pool<T>(const ProposalFeatureSet<T>&,                  \
                                               AttentionCache<T>*);                          \
  template AttendInputGrads<T> attend_backward<T>(const AttentionParams<T>&,                 \
                                                  const AttentionCache<T>&, const Vec<T>&,    \
                                                  AttentionGrads<T>&);                        \
  template AttendInputGrads<T> attend_mean_pool_backward<T>(const AttentionCache<T>&,         \
                                                            const Vec<T>&);

GCAP_INSTANTIATE_ATTENTION(float)
GCAP_INSTANTIATE_ATTENTION(double)

}  // namespace gcap
