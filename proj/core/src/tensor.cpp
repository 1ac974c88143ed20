#include "gcap/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace gcap {

template <typename T>
void check_finite(std::span<const T> v, const std::string& what) {
  for (size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(static_cast<double>(v[i]))) {
      std::ostringstream os;
      os << what << ": non-finite value at index " << i;
      throw NumericalError(os.str());
    }
  }
}

template <typename T>
Vec<T> affine(const Matrix<T>& w, const Vec<T>& x, const Vec<T>& b) {
  if (w.cols != x.size() || w.rows != b.size()) {
    std::ostringstream os;
    os << "affine: shape mismatch, W is " << w.rows << "x" << w.cols << ", x has " << x.size()
       << " entries, b has " << b.size();
    throw ValidationError(os.str());
  }
  Vec<T> out(b);
  const T* wp = w.data.data();
  for (size_t r = 0; r < w.rows; ++r) {
    T acc = T(0);
    const T* row = wp + r * w.cols;
    for (size_t c = 0; c < w.cols; ++c) acc += row[c] * x[c];
    out[r] += acc;
  }
  check_finite<T>(out, "affine output");
  return out;
}

template <typename T>
void affine_accum(const Matrix<T>& w, const Vec<T>& x, Vec<T>& y) {
  if (w.cols != x.size() || w.rows != y.size()) {
    throw ValidationError("affine_accum: shape mismatch");
  }
  for (size_t r = 0; r < w.rows; ++r) {
    T acc = T(0);
    const T* row = w.data.data() + r * w.cols;
    for (size_t c = 0; c < w.cols; ++c) acc += row[c] * x[c];
    y[r] += acc;
  }
}

template <typename T>
void matvec_transpose_accum(const Matrix<T>& w, const Vec<T>& g, Vec<T>& y) {
  if (w.rows != g.size() || w.cols != y.size()) {
    throw ValidationError("matvec_transpose_accum: shape mismatch");
  }
  for (size_t r = 0; r < w.rows; ++r) {
    const T gr = g[r];
    if (gr == T(0)) continue;
    const T* row = w.data.data() + r * w.cols;
    for (size_t c = 0; c < w.cols; ++c) y[c] += row[c] * gr;
  }
}

template <typename T>
void outer_accum(Matrix<T>& a, const Vec<T>& g, const Vec<T>& x) {
  if (a.rows != g.size() || a.cols != x.size()) {
    throw ValidationError("outer_accum: shape mismatch");
  }
  for (size_t r = 0; r < a.rows; ++r) {
    const T gr = g[r];
    if (gr == T(0)) continue;
    T* row = a.data.data() + r * a.cols;
    for (size_t c = 0; c < a.cols; ++c) row[c] += gr * x[c];
  }
}

template <typename T>
Vec<T> activate(Activation kind, const Vec<T>& x) {
  Vec<T> out(x.size());
  if (kind == Activation::Sigmoid) {
    for (size_t i = 0; i < x.size(); ++i) out[i] = sigmoid_scalar(x[i]);
  } else {
    for (size_t i = 0; i < x.size(); ++i) out[i] = std::tanh(x[i]);
  }
  return out;
}

template <typename T>
Vec<T> softmax_masked(const Vec<T>& x, const std::vector<uint8_t>& mask) {
  if (x.size() != mask.size()) {
    throw ValidationError("softmax_masked: score/mask length mismatch");
  }
  T max_valid = -std::numeric_limits<T>::infinity();
  size_t valid = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    if (mask[i]) {
      ++valid;
      max_valid = std::max(max_valid, x[i]);
    }
  }
  if (valid == 0) throw ValidationError("softmax_masked: all entries masked out");

  Vec<T> out(x.size(), T(0));
  T denom = T(0);
  for (size_t i = 0; i < x.size(); ++i) {
    if (!mask[i]) continue;  // masked entries stay exactly zero
    out[i] = std::exp(x[i] - max_valid);
    denom += out[i];
  }
  for (size_t i = 0; i < x.size(); ++i) {
    if (mask[i]) out[i] /= denom;
  }
  check_finite<T>(out, "softmax output");
  return out;
}

template <typename T>
Vec<T> log_softmax(const Vec<T>& x) {
  if (x.empty()) throw ValidationError("log_softmax: empty input");
  T mx = x[0];
  for (T v : x) mx = std::max(mx, v);
  T lse = T(0);
  for (T v : x) lse += std::exp(v - mx);
  lse = std::log(lse) + mx;
  Vec<T> out(x.size());
  for (size_t i = 0; i < x.size(); ++i) out[i] = x[i] - lse;
  return out;
}

template <typename T>
Vec<T> finite_diff_grad(const std::function<T(const Vec<T>&)>& f, const Vec<T>& x, T eps) {
  if (!(eps > T(0))) throw ValidationError("finite_diff_grad: eps must be positive");
  Vec<T> grad(x.size());
  Vec<T> probe = x;
  for (size_t i = 0; i < x.size(); ++i) {
    const T keep = probe[i];
    probe[i] = keep + eps;
    const T fp = f(probe);
    probe[i] = keep - eps;
    const T fm = f(probe);
    probe[i] = keep;
    if (!std::isfinite(static_cast<double>(fp)) || !std::isfinite(static_cast<double>(fm))) {
      throw NumericalError("finite_diff_grad: objective returned non-finite value");
    }
    grad[i] = (fp - fm) / (T(2) * eps);
  }
  return grad;
}

template <typename T>
T dot(const Vec<T>& a, const Vec<T>& b) {
  if (a.size() != b.size()) throw ValidationError("dot: length mismatch");
  T acc = T(0);
  for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

template <typename T>
void fill_uniform(std::vector<T>& v, RandomStream& rng, double lo, double hi) {
  for (auto& x : v) x = static_cast<T>(rng.next_uniform(lo, hi));
}

template <typename T>
Matrix<T> cholesky(const Matrix<T>& a) {
  if (a.rows != a.cols) throw ValidationError("cholesky: matrix not square");
  const size_t n = a.rows;
  Matrix<T> l(n, n);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j <= i; ++j) {
      T s = a.at(i, j);
      for (size_t k = 0; k < j; ++k) s -= l.at(i, k) * l.at(j, k);
      if (i == j) {
        if (!(s > T(0)) || !std::isfinite(static_cast<double>(s))) {
          throw NumericalError("cholesky: matrix not positive definite");
        }
        l.at(i, i) = std::sqrt(s);
      } else {
        l.at(i, j) = s / l.at(j, j);
      }
    }
  }
  return l;
}

template <typename T>
Vec<T> cholesky_solve(const Matrix<T>& chol_l, const Vec<T>& b) {
  const size_t n = chol_l.rows;
  if (b.size() != n) throw ValidationError("cholesky_solve: rhs length mismatch");
  Vec<T> y(n);
  for (size_t i = 0; i < n; ++i) {
    T s = b[i];
    for (size_t k = 0; k < i; ++k) s -= chol_l.at(i, k) * y[k];
    y[i] = s / chol_l.at(i, i);
  }
  Vec<T> x(n);
  for (size_t ii = n; ii-- > 0;) {
    T s = y[ii];
    for (size_t k = ii + 1; k < n; ++k) s -= chol_l.at(k, ii) * x[k];
    x[ii] = s / chol_l.at(ii, ii);
  }
  return x;
}

template <typename T>
Matrix<T> cholesky_inverse(const Matrix<T>& chol_l) {
  const size_t n = chol_l.rows;
  Matrix<T> inv(n, n);
  Vec<T> e(n, T(0));
  for (size_t j = 0; j < n; ++j) {
    e[j] = T(1);
    Vec<T> col = cholesky_solve(chol_l, e);
    for (size_t i = 0; i < n; ++i) inv.at(i, j) = col[i];
    e[j] = T(0);
  }
  return inv;
}

#define GCAP_INSTANTIATE_TENSOR(T)                                                              \
  template struct Matrix<T>;                                                                    \
  template void check_finite<T>(std::span<const T>, const std::string&);                        \
  template Vec<T> affine<T>(const Matrix<T>&, const Vec<T>&, const Vec<T>&);                    \
  template void affine_accum<T>(const Matrix<T>&, const Vec<T>&, Vec<T>&);                      \
  template void matvec_transpose_accum<T>(const Matrix<T>&, const Vec<T>&, Vec<T>&);            \
  template void outer_accum<T>(Matrix<T>&, const Vec<T>&, const Vec<T>&);                       \
  template Vec<T> activate<T>(Activation, const Vec<T>&);                                       \
  template Vec<T> softmax_masked<T>(const Vec<T>&, const std::vector<uint8_t>&);                \
  template Vec<T> log_softmax<T>(const Vec<T>&);                                                \
  template Vec<T> finite_diff_grad<T>(const std::function<T(const Vec<T>&)>&, const Vec<T>&,    \
                                      T);                                                       \
  template T dot<T>(const Vec<T>&, const Vec<T>&);                                              \
  template void fill_uniform<T>(std::vector<T>&, RandomStream&, double, double);                \
  template Matrix<T> cholesky<T>(const Matrix<T>&);                                             \
  template Vec<T> cholesky_solve<T>(const Matrix<T>&, const Vec<T>&);                           \
  template Matrix<T> cholesky_inverse<T>(const Matrix<T>&);

GCAP_INSTANTIATE_TENSOR(float)
GCAP_INSTANTIATE_TENSOR(double)

}  // namespace gcap
