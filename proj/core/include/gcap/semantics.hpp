#ifndef GCAP_SEMANTICS_HPP_
#define GCAP_SEMANTICS_HPP_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gcap/tensor.hpp"

namespace gcap {

// (subject, verb, object) summary of one caption sentence; any field may be
// absent but not all three.
struct SvoTriplet {
  std::optional<std::string> subject;
  std::optional<std::string> verb;
  std::optional<std::string> object;
};

struct VideoAnnotations {
  std::string video_id;
  std::vector<SvoTriplet> triplets;  // one per sentence
};

enum SvoPart { kSubject = 0, kVerb = 1, kObject = 2 };

struct SvoVocabulary {
  std::vector<std::string> subjects, verbs, objects;

  const std::vector<std::string>& part(SvoPart p) const {
    return p == kSubject ? subjects : (p == kVerb ? verbs : objects);
  }
  size_t total() const { return subjects.size() + verbs.size() + objects.size(); }
};

// A token enters its part's vocabulary iff it appears in at least two
// different sentences of one single video. Tokens are kept verbatim, no
// grouping or normalization; each part is sorted lexicographically so the
// result is independent of video order.
SvoVocabulary mine_svo_vocabulary(std::span<const VideoAnnotations> annotations);

enum class KernelKind { Linear, Rbf };

struct KernelSpec {
  KernelKind kind = KernelKind::Linear;
  double gamma = 1.0;  // rbf only
};

// Gram matrix of the training rows of X under the kernel.
Matrix<double> gram_matrix(const Matrix<double>& x, const KernelSpec& kernel);
// k(x_test, x_i) against every training row.
Vec<double> kernel_row(const Matrix<double>& x, std::span<const double> x_test,
                       const KernelSpec& kernel);

// Least-squares SVM: alpha solves (K + lambda I) alpha = y. The diagonal of
// the system inverse is retained so leave-one-out predictions come in closed
// form without retraining. The bias term is off by default (centered-label
// formulation); with bias the bordered system [[K+lambda I, 1],[1^T, 0]] is
// solved instead.
struct LsSvmModel {
  Vec<double> alpha;
  double bias = 0.0;
  bool use_bias = false;
  double lambda = 1.0;
  KernelSpec kernel;
  Vec<double> y;         // training labels, retained for LOO
  Vec<double> inv_diag;  // [(system)^-1]_ii per training point
};

LsSvmModel lssvm_train(const Matrix<double>& k, const Vec<double>& y, double lambda,
                       const KernelSpec& kernel = {}, bool use_bias = false);

// Closed-form leave-one-out predictions: y_i - alpha_i / inv_diag_i.
Vec<double> lssvm_loo(const LsSvmModel& model);

// Prediction for a point with kernel vector k_test against the training set.
double lssvm_predict(const LsSvmModel& model, const Vec<double>& k_test);

// Training-set predictions (K alpha + bias).
Vec<double> lssvm_train_predictions(const Matrix<double>& k, const LsSvmModel& model);

// Per-class lambda selection: minimizes the LOO squared prediction error
// over the grid; ties resolved toward the smaller lambda.
struct LambdaSelection {
  double lambda = 0;
  double press = 0;  // sum of squared LOO residuals at the chosen lambda
};
LambdaSelection select_lambda(const Matrix<double>& k, const Vec<double>& y,
                              std::span<const double> grid, const KernelSpec& kernel = {},
                              bool use_bias = false);

inline std::vector<double> default_lambda_grid() {
  return {1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3};
}

// Coordinatewise mean over frames.
Vec<double> pool_cls_scores(std::span<const Vec<double>> per_frame);

// Per class: mean over every full sliding window of `window` frames (the
// whole video when shorter), then the maximum over window positions.
Vec<double> pool_det_scores(const Matrix<double>& per_frame_class_max, size_t window);

struct SemanticSubset {
  bool svo = false;
  bool cls = false;
  bool det = false;

  bool any() const { return svo || cls || det; }
};

// Concatenated semantic descriptor s in fixed order [SVO | CLS | DET];
// inactive blocks are omitted entirely.
struct SemanticFeature {
  SemanticSubset active;
  size_t svo_width = 0, cls_width = 0, det_width = 0;
  Vec<double> values;

  size_t width() const { return values.size(); }
};

SemanticFeature assemble_semantic(const Vec<double>* svo, const Vec<double>* cls,
                                  const Vec<double>* det, const SemanticSubset& subset);

// Table-style protocol: a video counts as correct iff the argmax class
// equals the most common human label (mode; ties toward the
// lexicographically smaller token).
std::string mode_label(std::span<const std::string> labels);
double binary_svo_accuracy(std::span<const Vec<double>> class_scores,
                           std::span<const std::string> mode_labels,
                           std::span<const std::string> class_tokens);

}  // namespace gcap

#endif  // GCAP_SEMANTICS_HPP_
