#include "gcap/lstm.hpp"

#include <cmath>

#include "gcap/common.hpp"

namespace gcap {

template <typename T>
LstmParams<T> LstmParams<T>::init(size_t hidden, size_t input, size_t visual, RandomStream& rng,
                                  double scale, bool forget_bias_one) {
  LstmParams<T> p;
  for (int g = 0; g < 4; ++g) {
    p.w_x[g] = Matrix<T>(hidden, input);
    p.w_h[g] = Matrix<T>(hidden, hidden);
    p.w_z[g] = Matrix<T>(hidden, visual);
    p.b[g] = Vec<T>(hidden, T(0));
    fill_uniform(p.w_x[g].data, rng, -scale, scale);
    fill_uniform(p.w_h[g].data, rng, -scale, scale);
    fill_uniform(p.w_z[g].data, rng, -scale, scale);
  }
  if (forget_bias_one) {
    for (auto& v : p.b[kGateF]) v = T(1);
  }
  return p;
}

template <typename T>
LstmGrads<T> LstmGrads<T>::zero_like(const LstmParams<T>& p) {
  LstmGrads<T> g;
  for (int k = 0; k < 4; ++k) {
    g.w_x[k] = Matrix<T>(p.w_x[k].rows, p.w_x[k].cols);
    g.w_h[k] = Matrix<T>(p.w_h[k].rows, p.w_h[k].cols);
    g.w_z[k] = Matrix<T>(p.w_z[k].rows, p.w_z[k].cols);
    g.b[k] = Vec<T>(p.b[k].size(), T(0));
  }
  return g;
}

template <typename T>
LstmState<T> lstm_step(const LstmParams<T>& p, const Vec<T>& u, const Vec<T>& z,
                       const LstmState<T>& prev, LstmCache<T>* cache) {
  const size_t hidden = p.hidden_dim();
  if (u.size() != p.input_dim() || z.size() != p.visual_dim() || prev.h.size() != hidden ||
      prev.c.size() != hidden) {
    throw ValidationError("lstm_step: input dimensions do not match parameters");
  }

  std::array<Vec<T>, 4> pre;
  for (int g = 0; g < 4; ++g) {
    pre[g] = p.b[g];
    affine_accum(p.w_x[g], u, pre[g]);
    affine_accum(p.w_h[g], prev.h, pre[g]);
    if (p.visual_dim() > 0) affine_accum(p.w_z[g], z, pre[g]);
  }

  std::array<Vec<T>, 4> gate;
  gate[kGateI] = activate(Activation::Sigmoid, pre[kGateI]);
  gate[kGateF] = activate(Activation::Sigmoid, pre[kGateF]);
  gate[kGateO] = activate(Activation::Sigmoid, pre[kGateO]);
  gate[kGateG] = activate(Activation::Tanh, pre[kGateG]);

  LstmState<T> next;
  next.c.resize(hidden);
  next.h.resize(hidden);
  Vec<T> tanh_c(hidden);
  for (size_t k = 0; k < hidden; ++k) {
    next.c[k] = gate[kGateF][k] * prev.c[k] + gate[kGateI][k] * gate[kGateG][k];
    tanh_c[k] = std::tanh(next.c[k]);
    next.h[k] = gate[kGateO][k] * tanh_c[k];
  }
  check_finite<T>(next.c, "lstm cell state");

  if (cache) {
    cache->u = u;
    cache->z = z;
    cache->h_prev = prev.h;
    cache->c_prev = prev.c;
    cache->gate = gate;
    cache->c = next.c;
    cache->tanh_c = tanh_c;
  }
  return next;
}

template <typename T>
LstmInputGrads<T> lstm_step_backward(const LstmParams<T>& p, const LstmCache<T>& cache,
                                     const Vec<T>& grad_h, const Vec<T>& grad_c,
                                     LstmGrads<T>& acc) {
  const size_t hidden = p.hidden_dim();
  if (cache.c.size() != hidden) {
    throw ValidationError("lstm_step_backward: cache does not match parameters");
  }
  if (grad_h.size() != hidden || grad_c.size() != hidden) {
    throw ValidationError("lstm_step_backward: upstream gradient dimension mismatch");
  }

  const auto& i = cache.gate[kGateI];
  const auto& f = cache.gate[kGateF];
  const auto& o = cache.gate[kGateO];
  const auto& g = cache.gate[kGateG];

  std::array<Vec<T>, 4> dpre;
  for (auto& v : dpre) v.assign(hidden, T(0));
  LstmInputGrads<T> in;
  in.u.assign(cache.u.size(), T(0));
  in.z.assign(cache.z.size(), T(0));
  in.h_prev.assign(hidden, T(0));
  in.c_prev.assign(hidden, T(0));

  for (size_t k = 0; k < hidden; ++k) {
    const T dh = grad_h[k];
    const T dc = grad_c[k] + dh * o[k] * (T(1) - cache.tanh_c[k] * cache.tanh_c[k]);
    const T d_o = dh * cache.tanh_c[k];
    dpre[kGateO][k] = d_o * o[k] * (T(1) - o[k]);
    dpre[kGateF][k] = dc * cache.c_prev[k] * f[k] * (T(1) - f[k]);
    dpre[kGateI][k] = dc * g[k] * i[k] * (T(1) - i[k]);
    dpre[kGateG][k] = dc * i[k] * (T(1) - g[k] * g[k]);
    in.c_prev[k] = dc * f[k];
  }

  for (int gi = 0; gi < 4; ++gi) {
    outer_accum(acc.w_x[gi], dpre[gi], cache.u);
    outer_accum(acc.w_h[gi], dpre[gi], cache.h_prev);
    if (p.visual_dim() > 0) outer_accum(acc.w_z[gi], dpre[gi], cache.z);
    for (size_t k = 0; k < hidden; ++k) acc.b[gi][k] += dpre[gi][k];
    matvec_transpose_accum(p.w_x[gi], dpre[gi], in.u);
    matvec_transpose_accum(p.w_h[gi], dpre[gi], in.h_prev);
    if (p.visual_dim() > 0) matvec_transpose_accum(p.w_z[gi], dpre[gi], in.z);
  }
  return in;
}

#define GCAP_INSTANTIATE_LSTM(T)                                                        \
  template struct LstmParams<T>;                                                        \
  template struct LstmGrads<T>;                                                         \
  template LstmState<T> lstm_step<T>(const LstmParams<T>&, const Vec<T>&, const Vec<T>&, \
                                     const LstmState<T>&, LstmCache<T>*);               \
  template LstmInputGrads<T> lstm_step_backward<T>(const LstmParams<T>&, const LstmCache<T>&, \
                                                   const Vec<T>&, const Vec<T>&, LstmGrads<T>&);

GCAP_INSTANTIATE_LSTM(float)
GCAP_INSTANTIATE_LSTM(double)

}  // namespace gcap
