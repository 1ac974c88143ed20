#ifndef GCAP_CAPTIONER_HPP_
#define GCAP_CAPTIONER_HPP_

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "gcap/attention.hpp"
#include "gcap/lstm.hpp"
#include "gcap/proposals.hpp"
#include "gcap/semantics.hpp"
#include "gcap/vocab.hpp"

namespace gcap {

enum class Variant { MeanPool, Att, AttSem, StackedAttSem };

std::string variant_name(Variant v);
Variant parse_variant(const std::string& name);

struct ModelConfig {
  Variant variant = Variant::Att;
  SemanticSubset semantic_subset;
  size_t hidden = 128;
  size_t embedding = 128;
  size_t attention = 0;  // 0 -> same as hidden
  double dropout = 0.5;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double grad_clip = 5.0;
  size_t batch_size = 32;
  size_t max_epochs = 128;
  uint64_t seed = 1;
  double init_scale = 0.08;
  bool forget_bias_one = true;

  size_t attention_dim() const { return attention ? attention : hidden; }
};

// The assembled caption model. Wiring per variant:
//   MeanPool        lstm1(u, z=mean of valid proposals), no attention params
//   Att             lstm1(u, z=attend(P, h1_prev))
//   AttSem          lstm1([u ; s], z=attend(...))
//   StackedAttSem   lstm1(u, z=attend(...)); lstm2([s ; h1], no visual);
//                   word distribution reads the top LSTM's hidden state
template <typename T>
struct CaptionModel {
  ModelConfig cfg;
  size_t vocab_size = 0;
  size_t feature_dim = 0;
  size_t semantic_dim = 0;

  Matrix<T> embedding;  // vocab x emb
  LstmParams<T> lstm1;
  std::optional<LstmParams<T>> lstm2;
  std::optional<AttentionParams<T>> attention;
  Matrix<T> w_out;  // vocab x hidden
  Vec<T> b_out;

  bool uses_attention() const { return cfg.variant != Variant::MeanPool; }
  bool uses_semantics() const {
    return cfg.variant == Variant::AttSem || cfg.variant == Variant::StackedAttSem;
  }
  bool stacked() const { return cfg.variant == Variant::StackedAttSem; }
};

// Deterministic seeded initialization; identical seed and dims give a
// bit-identical model. Rejects variant/subset/dimension inconsistencies.
template <typename T>
CaptionModel<T> build_model(const ModelConfig& cfg, size_t vocab_size, size_t feature_dim,
                            size_t semantic_dim);

// Named flat views over every parameter tensor, in a stable order shared by
// the optimizer, the checkpoint writer and the gradient checker.
template <typename T>
struct ParamView {
  std::string name;
  T* data = nullptr;
  size_t size = 0;
};

template <typename T>
std::vector<ParamView<T>> param_views(CaptionModel<T>& model);

template <typename T>
struct ModelGrads {
  Matrix<T> embedding;
  LstmGrads<T> lstm1;
  std::optional<LstmGrads<T>> lstm2;
  std::optional<AttentionGrads<T>> attention;
  Matrix<T> w_out;
  Vec<T> b_out;

  static ModelGrads zero_like(const CaptionModel<T>& m);
};

template <typename T>
std::vector<ParamView<T>> grad_views(ModelGrads<T>& grads);

template <typename T>
struct TrainingExample {
  std::string video_id;
  ProposalFeatureSet<T> features;
  std::optional<Vec<T>> semantic;
  std::vector<int> target;  // BOS ... EOS, 2..22 ids
};

template <typename T>
struct StepCache {
  int input_token = 0;
  int target_token = 0;
  Vec<T> x1;
  AttentionCache<T> att;
  LstmCache<T> lstm1;
  std::optional<Vec<T>> x2;
  std::optional<LstmCache<T>> lstm2;
  Vec<T> h_top;
  Vec<T> dropout_mask;  // empty when inactive
  Vec<T> probs;
};

template <typename T>
struct SentenceForward {
  double loss = 0;  // mean softmax cross-entropy over counted steps
  size_t counted_steps = 0;
  std::vector<StepCache<T>> steps;
  std::vector<AttentionStep<T>> trace;
};

// Teacher-forced pass over one example. Dropout (inverted scaling) is
// applied to the top hidden state only, and only in train mode.
template <typename T>
SentenceForward<T> forward_sentence(const CaptionModel<T>& model,
                                    const TrainingExample<T>& example, bool train_mode,
                                    RandomStream* dropout_rng);

template <typename T>
struct ExampleInputGrads {
  Matrix<T> features;  // zero on padded rows
  Vec<T> semantic;     // empty when the model takes none
};

// Exact gradients of forward_sentence's loss; parameter gradients accumulate
// into `acc` so a minibatch can share one buffer.
template <typename T>
ExampleInputGrads<T> backward_sentence(const CaptionModel<T>& model,
                                       const TrainingExample<T>& example,
                                       const SentenceForward<T>& fwd, ModelGrads<T>& acc);

// One inference step (dropout off): log-probabilities over the vocabulary,
// the advanced recurrent state and the attention weights of this step.
template <typename T>
struct RuntimeState {
  LstmState<T> s1;
  std::optional<LstmState<T>> s2;

  static RuntimeState zero(const CaptionModel<T>& m);
};

template <typename T>
struct StepOutput {
  Vec<T> log_probs;
  RuntimeState<T> next;
  AttentionStep<T> att;
};

template <typename T>
StepOutput<T> step_logits(const CaptionModel<T>& model, const RuntimeState<T>& state,
                          int prev_token, const ProposalFeatureSet<T>& features,
                          const Vec<T>* semantic);

struct EpochLog {
  size_t epoch = 0;
  double train_loss = 0;
  double val_loss = 0;   // NaN without a validation set
  double val_bleu4 = 0;  // NaN without a scorer
};

template <typename T>
struct TrainOptions {
  size_t epochs = 128;
  std::function<double(const CaptionModel<T>&)> val_bleu_scorer;  // optional
  std::function<void(const EpochLog&)> on_epoch;                  // optional
};

template <typename T>
struct TrainResult {
  CaptionModel<T> final_model;
  CaptionModel<T> best_by_loss;
  CaptionModel<T> best_by_bleu;
  size_t best_loss_epoch = 0;
  size_t best_bleu_epoch = 0;
  std::vector<EpochLog> log;
};

// Minibatch Adam with global-norm clipping. Deterministic under a fixed
// config seed: shuffling, dropout and update order are all serial.
template <typename T>
TrainResult<T> train(CaptionModel<T> model, std::span<const TrainingExample<T>> corpus,
                     std::span<const TrainingExample<T>> val, const TrainOptions<T>& opts);

// Checkpoint: GCAP container of named flat tensors + JSON sidecar with the
// full ModelConfig and dimensions. `prefix` gains ".gcap" and ".json".
template <typename T>
void save_checkpoint(const CaptionModel<T>& model, const std::filesystem::path& prefix);

template <typename T>
CaptionModel<T> load_checkpoint(const std::filesystem::path& prefix);

}  // namespace gcap

#endif  // GCAP_CAPTIONER_HPP_
