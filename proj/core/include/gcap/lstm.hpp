#ifndef GCAP_LSTM_HPP_
#define GCAP_LSTM_HPP_

#include <array>

#include "gcap/tensor.hpp"

namespace gcap {

// Gate order used throughout params, grads and caches.
enum LstmGate { kGateI = 0, kGateF = 1, kGateO = 2, kGateG = 3 };

// One LSTM unit. Each gate sees the textual input u, the previous hidden
// state and the visual input z:
//   i = sigmoid(W_xi u + W_hi h_prev + W_zi z + b_i)      (f, o alike)
//   g = tanh   (W_xg u + W_hg h_prev + W_zg z + b_g)
//   c = f . c_prev + i . g
//   h = o . tanh(c)
// A unit with no visual input is expressed with visual_dim() == 0.
template <typename T>
struct LstmParams {
  std::array<Matrix<T>, 4> w_x;  // hidden x input
  std::array<Matrix<T>, 4> w_h;  // hidden x hidden
  std::array<Matrix<T>, 4> w_z;  // hidden x visual (cols may be 0)
  std::array<Vec<T>, 4> b;       // hidden

  size_t hidden_dim() const { return w_h[0].rows; }
  size_t input_dim() const { return w_x[0].cols; }
  size_t visual_dim() const { return w_z[0].cols; }

  // uniform(-scale, scale); forget-gate bias optionally starts at 1 to ease
  // memory retention early in training
  static LstmParams init(size_t hidden, size_t input, size_t visual, RandomStream& rng,
                         double scale = 0.08, bool forget_bias_one = true);
};

template <typename T>
struct LstmState {
  Vec<T> h;
  Vec<T> c;

  static LstmState zero(size_t hidden) { return {Vec<T>(hidden, T(0)), Vec<T>(hidden, T(0))}; }
};

// Activations retained by the forward pass for the exact backward pass.
template <typename T>
struct LstmCache {
  Vec<T> u, z, h_prev, c_prev;
  std::array<Vec<T>, 4> gate;  // post-activation i, f, o, g
  Vec<T> c, tanh_c;
};

template <typename T>
struct LstmGrads {
  std::array<Matrix<T>, 4> w_x, w_h, w_z;
  std::array<Vec<T>, 4> b;

  static LstmGrads zero_like(const LstmParams<T>& p);
};

template <typename T>
struct LstmInputGrads {
  Vec<T> u, z;
  Vec<T> h_prev, c_prev;
};

template <typename T>
LstmState<T> lstm_step(const LstmParams<T>& p, const Vec<T>& u, const Vec<T>& z,
                       const LstmState<T>& prev, LstmCache<T>* cache = nullptr);

// Exact gradients of a scalar loss through (h, c) of one step. Parameter
// gradients accumulate additively into `acc` so timesteps can be chained.
template <typename T>
LstmInputGrads<T> lstm_step_backward(const LstmParams<T>& p, const LstmCache<T>& cache,
                                     const Vec<T>& grad_h, const Vec<T>& grad_c,
                                     LstmGrads<T>& acc);

}  // namespace gcap

#endif  // GCAP_LSTM_HPP_
