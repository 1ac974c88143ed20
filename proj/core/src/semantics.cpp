#include "gcap/semantics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "gcap/common.hpp"

namespace gcap {

SvoVocabulary mine_svo_vocabulary(std::span<const VideoAnnotations> annotations) {
  if (annotations.empty()) return {};
  std::set<std::string> qualified[3];
  for (const auto& video : annotations) {
    std::map<std::string, int> count[3];
    for (const auto& t : video.triplets) {
      if (t.subject) ++count[kSubject][*t.subject];
      if (t.verb) ++count[kVerb][*t.verb];
      if (t.object) ++count[kObject][*t.object];
    }
    for (int p = 0; p < 3; ++p) {
      for (const auto& [token, n] : count[p]) {
        if (n >= 2) qualified[p].insert(token);
      }
    }
  }
  SvoVocabulary v;
  v.subjects.assign(qualified[kSubject].begin(), qualified[kSubject].end());
  v.verbs.assign(qualified[kVerb].begin(), qualified[kVerb].end());
  v.objects.assign(qualified[kObject].begin(), qualified[kObject].end());
  return v;
}

Matrix<double> gram_matrix(const Matrix<double>& x, const KernelSpec& kernel) {
  const size_t n = x.rows;
  Matrix<double> k(n, n);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j <= i; ++j) {
      double v;
      if (kernel.kind == KernelKind::Linear) {
        v = 0;
        for (size_t c = 0; c < x.cols; ++c) v += x.at(i, c) * x.at(j, c);
      } else {
        double d2 = 0;
        for (size_t c = 0; c < x.cols; ++c) {
          const double d = x.at(i, c) - x.at(j, c);
          d2 += d * d;
        }
        v = std::exp(-kernel.gamma * d2);
      }
      k.at(i, j) = v;
      k.at(j, i) = v;
    }
  }
  return k;
}

Vec<double> kernel_row(const Matrix<double>& x, std::span<const double> x_test,
                       const KernelSpec& kernel) {
  if (x_test.size() != x.cols) throw ValidationError("kernel_row: feature width mismatch");
  Vec<double> k(x.rows);
  for (size_t i = 0; i < x.rows; ++i) {
    if (kernel.kind == KernelKind::Linear) {
      double v = 0;
      for (size_t c = 0; c < x.cols; ++c) v += x.at(i, c) * x_test[c];
      k[i] = v;
    } else {
      double d2 = 0;
      for (size_t c = 0; c < x.cols; ++c) {
        const double d = x.at(i, c) - x_test[c];
        d2 += d * d;
      }
      k[i] = std::exp(-kernel.gamma * d2);
    }
  }
  return k;
}

namespace {

void check_gram(const Matrix<double>& k, const Vec<double>& y, double lambda) {
  if (k.rows != k.cols) throw ValidationError("lssvm_train: Gram matrix not square");
  if (k.rows < 2) throw ValidationError("lssvm_train: need at least 2 training points");
  if (y.size() != k.rows) throw ValidationError("lssvm_train: label length mismatch");
  if (!(lambda > 0)) throw ValidationError("lssvm_train: lambda must be positive");
  for (size_t i = 0; i < k.rows; ++i) {
    for (size_t j = 0; j < k.cols; ++j) {
      const double v = k.at(i, j);
      if (!std::isfinite(v)) throw ValidationError("lssvm_train: non-finite Gram entry");
      if (std::abs(v - k.at(j, i)) > 1e-9 * std::max(1.0, std::abs(v))) {
        throw ValidationError("lssvm_train: Gram matrix not symmetric");
      }
    }
  }
}

}  // namespace

LsSvmModel lssvm_train(const Matrix<double>& k, const Vec<double>& y, double lambda,
                       const KernelSpec& kernel, bool use_bias) {
  check_gram(k, y, lambda);
  const size_t n = k.rows;

  Matrix<double> a = k;
  for (size_t i = 0; i < n; ++i) a.at(i, i) += lambda;
  const Matrix<double> l = cholesky(a);
  const Matrix<double> a_inv = cholesky_inverse(l);

  LsSvmModel model;
  model.lambda = lambda;
  model.kernel = kernel;
  model.use_bias = use_bias;
  model.y = y;
  model.inv_diag.resize(n);

  if (!use_bias) {
    model.alpha = cholesky_solve(l, y);
    for (size_t i = 0; i < n; ++i) model.inv_diag[i] = a_inv.at(i, i);
  } else {
    // Bordered system [[A, 1],[1^T, 0]]; solved through the Schur
    // complement of A, whose inverse diagonal feeds the LOO identity.
    Vec<double> ones(n, 1.0);
    const Vec<double> v = cholesky_solve(l, ones);      // A^-1 1
    const Vec<double> ay = cholesky_solve(l, y);        // A^-1 y
    double s = 0, vy = 0;
    for (size_t i = 0; i < n; ++i) {
      s += v[i];
      vy += v[i] * y[i];
    }
    if (std::abs(s) < 1e-14) throw NumericalError("lssvm_train: singular bordered system");
    model.bias = vy / s;
    model.alpha.resize(n);
    for (size_t i = 0; i < n; ++i) model.alpha[i] = ay[i] - model.bias * v[i];
    for (size_t i = 0; i < n; ++i) model.inv_diag[i] = a_inv.at(i, i) - v[i] * v[i] / s;
  }
  return model;
}

Vec<double> lssvm_loo(const LsSvmModel& model) {
  const size_t n = model.alpha.size();
  if (n == 0 || model.inv_diag.size() != n) {
    throw ValidationError("lssvm_loo: model missing retained inverse diagonal");
  }
  Vec<double> out(n);
  for (size_t i = 0; i < n; ++i) {
    if (!(std::abs(model.inv_diag[i]) > 1e-300)) {
      throw NumericalError("lssvm_loo: singular system at point " + std::to_string(i));
    }
    out[i] = model.y[i] - model.alpha[i] / model.inv_diag[i];
  }
  return out;
}

double lssvm_predict(const LsSvmModel& model, const Vec<double>& k_test) {
  if (k_test.size() != model.alpha.size()) {
    throw ValidationError("lssvm_predict: kernel vector length " + std::to_string(k_test.size()) +
                          " does not match training size " + std::to_string(model.alpha.size()));
  }
  double s = dot(k_test, model.alpha);
  if (model.use_bias) s += model.bias;
  return s;
}

Vec<double> lssvm_train_predictions(const Matrix<double>& k, const LsSvmModel& model) {
  const size_t n = model.alpha.size();
  if (k.rows != n || k.cols != n) throw ValidationError("lssvm_train_predictions: bad Gram");
  Vec<double> out(n, model.use_bias ? model.bias : 0.0);
  for (size_t i = 0; i < n; ++i) {
    double s = 0;
    for (size_t j = 0; j < n; ++j) s += k.at(i, j) * model.alpha[j];
    out[i] += s;
  }
  return out;
}

LambdaSelection select_lambda(const Matrix<double>& k, const Vec<double>& y,
                              std::span<const double> grid, const KernelSpec& kernel,
                              bool use_bias) {
  if (grid.empty()) throw ValidationError("select_lambda: empty grid");
  LambdaSelection best;
  bool first = true;
  for (double lambda : grid) {
    const LsSvmModel m = lssvm_train(k, y, lambda, kernel, use_bias);
    const Vec<double> loo = lssvm_loo(m);
    double press = 0;
    for (size_t i = 0; i < loo.size(); ++i) {
      const double r = loo[i] - y[i];
      press += r * r;
    }
    if (first || press < best.press) {
      best = {lambda, press};
      first = false;
    }
  }
  return best;
}

Vec<double> pool_cls_scores(std::span<const Vec<double>> per_frame) {
  if (per_frame.empty()) throw ValidationError("pool_cls_scores: no frames");
  const size_t d = per_frame[0].size();
  Vec<double> mean(d, 0.0);
  for (const auto& frame : per_frame) {
    if (frame.size() != d) throw ValidationError("pool_cls_scores: ragged frame widths");
    for (size_t c = 0; c < d; ++c) mean[c] += frame[c];
  }
  for (auto& v : mean) v /= static_cast<double>(per_frame.size());
  return mean;
}

Vec<double> pool_det_scores(const Matrix<double>& per_frame_class_max, size_t window) {
  const size_t frames = per_frame_class_max.rows;
  const size_t classes = per_frame_class_max.cols;
  if (frames == 0) throw ValidationError("pool_det_scores: no frames");
  if (window < 1) throw ValidationError("pool_det_scores: window must be >= 1");
  const size_t w = std::min(window, frames);
  Vec<double> out(classes, 0.0);
  for (size_t c = 0; c < classes; ++c) {
    // running sum over the first window, then slide
    double sum = 0;
    for (size_t f = 0; f < w; ++f) sum += per_frame_class_max.at(f, c);
    double best = sum / static_cast<double>(w);
    for (size_t start = 1; start + w <= frames; ++start) {
      sum += per_frame_class_max.at(start + w - 1, c) - per_frame_class_max.at(start - 1, c);
      best = std::max(best, sum / static_cast<double>(w));
    }
    out[c] = best;
  }
  return out;
}

SemanticFeature assemble_semantic(const Vec<double>* svo, const Vec<double>* cls,
                                  const Vec<double>* det, const SemanticSubset& subset) {
  SemanticFeature f;
  f.active = subset;
  auto append = [&f](const Vec<double>* block, const char* name, size_t& width) {
    if (!block) {
      throw ValidationError(std::string("assemble_semantic: active block '") + name +
                            "' missing");
    }
    width = block->size();
    f.values.insert(f.values.end(), block->begin(), block->end());
  };
  if (subset.svo) append(svo, "svo", f.svo_width);
  if (subset.cls) append(cls, "cls", f.cls_width);
  if (subset.det) append(det, "det", f.det_width);
  check_finite<double>(f.values, "semantic feature");
  return f;
}

std::string mode_label(std::span<const std::string> labels) {
  if (labels.empty()) throw ValidationError("mode_label: no labels");
  std::map<std::string, int> count;
  for (const auto& l : labels) ++count[l];
  std::string best;
  int best_n = -1;
  for (const auto& [token, n] : count) {  // map order = lexicographic, ties keep the smaller
    if (n > best_n) {
      best = token;
      best_n = n;
    }
  }
  return best;
}

double binary_svo_accuracy(std::span<const Vec<double>> class_scores,
                           std::span<const std::string> mode_labels,
                           std::span<const std::string> class_tokens) {
  if (class_scores.size() != mode_labels.size()) {
    throw ValidationError("binary_svo_accuracy: scores/labels count mismatch");
  }
  if (class_scores.empty()) return 0.0;
  size_t hits = 0;
  for (size_t v = 0; v < class_scores.size(); ++v) {
    const auto& s = class_scores[v];
    if (s.size() != class_tokens.size()) {
      throw ValidationError("binary_svo_accuracy: score width does not match class count");
    }
    size_t arg = 0;
    for (size_t c = 1; c < s.size(); ++c) {
      if (s[c] > s[arg]) arg = c;
    }
    if (class_tokens[arg] == mode_labels[v]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(class_scores.size());
}

}  // namespace gcap
