#ifndef GCAP_TENSOR_HPP_
#define GCAP_TENSOR_HPP_

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gcap/common.hpp"

namespace gcap {

template <typename T>
using Vec = std::vector<T>;

// Dense row-major matrix. The whole engine runs either in float (training)
// or double (gradient-check suites); modules are templated on the scalar.
template <typename T>
struct Matrix {
  size_t rows = 0;
  size_t cols = 0;
  std::vector<T> data;  // rows * cols, row-major

  Matrix() = default;
  Matrix(size_t r, size_t c, T fill = T(0)) : rows(r), cols(c), data(r * c, fill) {}

  T& at(size_t r, size_t c) { return data[r * cols + c]; }
  const T& at(size_t r, size_t c) const { return data[r * cols + c]; }

  std::span<T> row(size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const T> row(size_t r) const { return {data.data() + r * cols, cols}; }

  size_t size() const { return data.size(); }

  static Matrix identity(size_t n) {
    Matrix m(n, n);
    for (size_t i = 0; i < n; ++i) m.at(i, i) = T(1);
    return m;
  }
};

enum class Activation { Sigmoid, Tanh };

// Throws NumericalError if any entry of v is NaN/Inf.
template <typename T>
void check_finite(std::span<const T> v, const std::string& what);

// out[r] = sum_c W[r,c] * x[c] + b[r]
template <typename T>
Vec<T> affine(const Matrix<T>& w, const Vec<T>& x, const Vec<T>& b);

// y += W x (no bias), y must have w.rows entries
template <typename T>
void affine_accum(const Matrix<T>& w, const Vec<T>& x, Vec<T>& y);

// y += W^T g
template <typename T>
void matvec_transpose_accum(const Matrix<T>& w, const Vec<T>& g, Vec<T>& y);

// A += g x^T   (outer-product accumulation for weight gradients)
template <typename T>
void outer_accum(Matrix<T>& a, const Vec<T>& g, const Vec<T>& x);

template <typename T>
T sigmoid_scalar(T x) {
  return x >= T(0) ? T(1) / (T(1) + std::exp(-x)) : T(1) - T(1) / (T(1) + std::exp(x));
}

template <typename T>
Vec<T> activate(Activation kind, const Vec<T>& x);

// Masked, max-shifted softmax. Masked-out entries come out exactly zero;
// rejects the all-masked case.
template <typename T>
Vec<T> softmax_masked(const Vec<T>& x, const std::vector<uint8_t>& mask);

template <typename T>
Vec<T> log_softmax(const Vec<T>& x);

// Central finite differences, (f(x+eps e_i) - f(x-eps e_i)) / (2 eps).
// The gradient oracle every analytic backward pass is checked against.
template <typename T>
Vec<T> finite_diff_grad(const std::function<T(const Vec<T>&)>& f, const Vec<T>& x, T eps);

template <typename T>
T dot(const Vec<T>& a, const Vec<T>& b);

template <typename T>
void fill_uniform(std::vector<T>& v, RandomStream& rng, double lo, double hi);

// Cholesky factorization / solve for symmetric positive definite systems,
// used by the LS-SVM closed forms. Throws NumericalError when not SPD.
template <typename T>
Matrix<T> cholesky(const Matrix<T>& a);

template <typename T>
Vec<T> cholesky_solve(const Matrix<T>& chol_l, const Vec<T>& b);

template <typename T>
Matrix<T> cholesky_inverse(const Matrix<T>& chol_l);

}  // namespace gcap

#endif  // GCAP_TENSOR_HPP_
