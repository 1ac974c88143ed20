#include "gcap/captioner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "json.hpp"

#include "gcap/container.hpp"

namespace gcap {

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::MeanPool: return "meanpool";
    case Variant::Att: return "att";
    case Variant::AttSem: return "att-sem";
    case Variant::StackedAttSem: return "stacked";
  }
  throw ValidationError("variant_name: unknown variant");
}

Variant parse_variant(const std::string& name) {
  if (name == "meanpool") return Variant::MeanPool;
  if (name == "att") return Variant::Att;
  if (name == "att-sem") return Variant::AttSem;
  if (name == "stacked") return Variant::StackedAttSem;
  throw ValidationError("unknown variant '" + name +
                        "' (expected meanpool|att|att-sem|stacked)");
}

template <typename T>
CaptionModel<T> build_model(const ModelConfig& cfg, size_t vocab_size, size_t feature_dim,
                            size_t semantic_dim) {
  if (cfg.hidden == 0 || cfg.embedding == 0) {
    throw ValidationError("build_model: hidden and embedding sizes must be positive");
  }
  if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0)) {
    throw ValidationError("build_model: dropout must lie in [0, 1)");
  }
  if (vocab_size < 5) {
    throw ValidationError("build_model: vocabulary must contain at least one real word");
  }
  if (feature_dim == 0) throw ValidationError("build_model: feature dimension must be positive");

  const bool wants_sem =
      cfg.variant == Variant::AttSem || cfg.variant == Variant::StackedAttSem;
  if (wants_sem && (!cfg.semantic_subset.any() || semantic_dim == 0)) {
    throw ValidationError("build_model: " + variant_name(cfg.variant) +
                          " needs an active semantic subset and a nonzero semantic width");
  }
  if (!wants_sem && (cfg.semantic_subset.any() || semantic_dim != 0)) {
    throw ValidationError("build_model: " + variant_name(cfg.variant) +
                          " must not carry semantic features");
  }

  CaptionModel<T> m;
  m.cfg = cfg;
  m.vocab_size = vocab_size;
  m.feature_dim = feature_dim;
  m.semantic_dim = semantic_dim;

  RandomStream rng(cfg.seed);
  m.embedding = Matrix<T>(vocab_size, cfg.embedding);
  fill_uniform(m.embedding.data, rng, -cfg.init_scale, cfg.init_scale);

  const size_t lstm1_input =
      cfg.embedding + (cfg.variant == Variant::AttSem ? semantic_dim : 0);
  m.lstm1 = LstmParams<T>::init(cfg.hidden, lstm1_input, feature_dim, rng, cfg.init_scale,
                                cfg.forget_bias_one);
  if (cfg.variant == Variant::StackedAttSem) {
    m.lstm2 = LstmParams<T>::init(cfg.hidden, semantic_dim + cfg.hidden, 0, rng, cfg.init_scale,
                                  cfg.forget_bias_one);
  }
  if (cfg.variant != Variant::MeanPool) {
    m.attention =
        AttentionParams<T>::init(cfg.attention_dim(), feature_dim, cfg.hidden, rng,
                                 cfg.init_scale);
  }
  m.w_out = Matrix<T>(vocab_size, cfg.hidden);
  fill_uniform(m.w_out.data, rng, -cfg.init_scale, cfg.init_scale);
  m.b_out = Vec<T>(vocab_size, T(0));
  return m;
}

namespace {

constexpr const char* kGateSuffix[4] = {"i", "f", "o", "g"};

template <typename T>
void push_matrix(std::vector<ParamView<T>>& out, const std::string& name, Matrix<T>& m) {
  out.push_back({name, m.data.data(), m.data.size()});
}

template <typename T>
void push_vec(std::vector<ParamView<T>>& out, const std::string& name, Vec<T>& v) {
  out.push_back({name, v.data(), v.size()});
}

template <typename T>
void push_lstm(std::vector<ParamView<T>>& out, const std::string& prefix,
               std::array<Matrix<T>, 4>& w_x, std::array<Matrix<T>, 4>& w_h,
               std::array<Matrix<T>, 4>& w_z, std::array<Vec<T>, 4>& b, bool has_visual) {
  for (int g = 0; g < 4; ++g) push_matrix(out, prefix + ".w_x" + kGateSuffix[g], w_x[g]);
  for (int g = 0; g < 4; ++g) push_matrix(out, prefix + ".w_h" + kGateSuffix[g], w_h[g]);
  if (has_visual) {
    for (int g = 0; g < 4; ++g) push_matrix(out, prefix + ".w_z" + kGateSuffix[g], w_z[g]);
  }
  for (int g = 0; g < 4; ++g) push_vec(out, prefix + ".b_" + kGateSuffix[g], b[g]);
}

}  // namespace

template <typename T>
std::vector<ParamView<T>> param_views(CaptionModel<T>& m) {
  std::vector<ParamView<T>> out;
  push_matrix(out, "embedding", m.embedding);
  push_lstm(out, "lstm1", m.lstm1.w_x, m.lstm1.w_h, m.lstm1.w_z, m.lstm1.b,
            m.lstm1.visual_dim() > 0);
  if (m.lstm2) {
    push_lstm(out, "lstm2", m.lstm2->w_x, m.lstm2->w_h, m.lstm2->w_z, m.lstm2->b,
              m.lstm2->visual_dim() > 0);
  }
  if (m.attention) {
    push_matrix(out, "att.w_p", m.attention->w_p);
    push_matrix(out, "att.w_h", m.attention->w_h);
    push_vec(out, "att.b_ph", m.attention->b_ph);
    push_vec(out, "att.w_ph", m.attention->w_ph);
  }
  push_matrix(out, "out.w", m.w_out);
  push_vec(out, "out.b", m.b_out);
  return out;
}

template <typename T>
ModelGrads<T> ModelGrads<T>::zero_like(const CaptionModel<T>& m) {
  ModelGrads<T> g;
  g.embedding = Matrix<T>(m.embedding.rows, m.embedding.cols);
  g.lstm1 = LstmGrads<T>::zero_like(m.lstm1);
  if (m.lstm2) g.lstm2 = LstmGrads<T>::zero_like(*m.lstm2);
  if (m.attention) g.attention = AttentionGrads<T>::zero_like(*m.attention);
  g.w_out = Matrix<T>(m.w_out.rows, m.w_out.cols);
  g.b_out = Vec<T>(m.b_out.size(), T(0));
  return g;
}

template <typename T>
std::vector<ParamView<T>> grad_views(ModelGrads<T>& g) {
  std::vector<ParamView<T>> out;
  push_matrix(out, "embedding", g.embedding);
  push_lstm(out, "lstm1", g.lstm1.w_x, g.lstm1.w_h, g.lstm1.w_z, g.lstm1.b,
            g.lstm1.w_z[0].cols > 0);
  if (g.lstm2) {
    push_lstm(out, "lstm2", g.lstm2->w_x, g.lstm2->w_h, g.lstm2->w_z, g.lstm2->b,
              g.lstm2->w_z[0].cols > 0);
  }
  if (g.attention) {
    push_matrix(out, "att.w_p", g.attention->w_p);
    push_matrix(out, "att.w_h", g.attention->w_h);
    push_vec(out, "att.b_ph", g.attention->b_ph);
    push_vec(out, "att.w_ph", g.attention->w_ph);
  }
  push_matrix(out, "out.w", g.w_out);
  push_vec(out, "out.b", g.b_out);
  return out;
}

namespace {

template <typename T>
void validate_example(const CaptionModel<T>& m, const TrainingExample<T>& e) {
  if (e.target.size() < 2 || e.target.size() > kMaxSentenceLen + 2) {
    throw ValidationError("example '" + e.video_id + "': target length " +
                          std::to_string(e.target.size()) + " outside [2, " +
                          std::to_string(kMaxSentenceLen + 2) + "]");
  }
  if (e.target.front() != Vocabulary::kBos) {
    throw ValidationError("example '" + e.video_id + "': target must start with BOS");
  }
  for (int id : e.target) {
    if (id < 0 || static_cast<size_t>(id) >= m.vocab_size) {
      throw ValidationError("example '" + e.video_id + "': token id out of range");
    }
  }
  if (e.features.features.cols != m.feature_dim) {
    throw ValidationError("example '" + e.video_id + "': proposal feature width " +
                          std::to_string(e.features.features.cols) + " != model " +
                          std::to_string(m.feature_dim));
  }
  if (m.uses_semantics()) {
    if (!e.semantic || e.semantic->size() != m.semantic_dim) {
      throw ValidationError("example '" + e.video_id +
                            "': semantic feature missing or of wrong width");
    }
  } else if (e.semantic) {
    throw ValidationError("example '" + e.video_id + "': variant " +
                          variant_name(m.cfg.variant) + " takes no semantic feature");
  }
}

// Shared single-step forward used by teacher forcing and by decoding.
template <typename T>
void run_step(const CaptionModel<T>& m, int input_token, const ProposalFeatureSet<T>& features,
              const Vec<T>* semantic, const LstmState<T>& prev1, const LstmState<T>* prev2,
              bool train_mode, RandomStream* dropout_rng, StepCache<T>& cache,
              AttentionStep<T>& att_step, LstmState<T>& next1, LstmState<T>* next2) {
  cache.input_token = input_token;

  auto emb_row = m.embedding.row(static_cast<size_t>(input_token));
  cache.x1.assign(emb_row.begin(), emb_row.end());
  if (m.cfg.variant == Variant::AttSem) {
    cache.x1.insert(cache.x1.end(), semantic->begin(), semantic->end());
  }

  AttendResult<T> att = m.uses_attention() ? attend(*m.attention, features, prev1.h, &cache.att)
                                           : attend_mean_pool(features, &cache.att);
  att_step = std::move(att.step);

  next1 = lstm_step(m.lstm1, cache.x1, att.z, prev1, &cache.lstm1);

  if (m.stacked()) {
    cache.x2 = Vec<T>();
    cache.x2->reserve(m.semantic_dim + m.cfg.hidden);
    cache.x2->insert(cache.x2->end(), semantic->begin(), semantic->end());
    cache.x2->insert(cache.x2->end(), next1.h.begin(), next1.h.end());
    cache.lstm2.emplace();
    *next2 = lstm_step(*m.lstm2, *cache.x2, Vec<T>{}, *prev2, &*cache.lstm2);
    cache.h_top = next2->h;
  } else {
    cache.h_top = next1.h;
  }

  Vec<T> h_drop = cache.h_top;
  if (train_mode && m.cfg.dropout > 0.0) {
    const T keep_scale = T(1.0 / (1.0 - m.cfg.dropout));
    cache.dropout_mask.resize(h_drop.size());
    for (size_t k = 0; k < h_drop.size(); ++k) {
      cache.dropout_mask[k] = dropout_rng->next_uniform() < m.cfg.dropout ? T(0) : keep_scale;
      h_drop[k] *= cache.dropout_mask[k];
    }
  }

  const Vec<T> logits = affine(m.w_out, h_drop, m.b_out);
  const Vec<T> logp = log_softmax(logits);
  cache.probs.resize(logp.size());
  for (size_t k = 0; k < logp.size(); ++k) cache.probs[k] = std::exp(logp[k]);
}

}  // namespace

template <typename T>
SentenceForward<T> forward_sentence(const CaptionModel<T>& model,
                                    const TrainingExample<T>& example, bool train_mode,
                                    RandomStream* dropout_rng) {
  validate_example(model, example);
  if (train_mode && model.cfg.dropout > 0.0 && !dropout_rng) {
    throw ValidationError("forward_sentence: train mode with dropout needs a random stream");
  }
  const Vec<T>* semantic = example.semantic ? &*example.semantic : nullptr;

  SentenceForward<T> out;
  LstmState<T> s1 = LstmState<T>::zero(model.cfg.hidden);
  LstmState<T> s2 = LstmState<T>::zero(model.cfg.hidden);

  double loss_sum = 0;
  for (size_t t = 1; t < example.target.size(); ++t) {
    const int target = example.target[t];
    if (target == Vocabulary::kPad) break;  // padding only trails a sentence

    StepCache<T> cache;
    AttentionStep<T> att_step;
    LstmState<T> n1, n2;
    run_step(model, example.target[t - 1], example.features, semantic, s1,
             model.stacked() ? &s2 : nullptr, train_mode, dropout_rng, cache, att_step, n1,
             model.stacked() ? &n2 : nullptr);
    cache.target_token = target;

    const T p = cache.probs[static_cast<size_t>(target)];
    loss_sum += -std::log(std::max(static_cast<double>(p), 1e-300));
    out.steps.push_back(std::move(cache));
    out.trace.push_back(std::move(att_step));
    s1 = std::move(n1);
    if (model.stacked()) s2 = std::move(n2);
  }
  if (out.steps.empty()) {
    throw ValidationError("forward_sentence: example '" + example.video_id +
                          "' has no trainable steps");
  }
  out.counted_steps = out.steps.size();
  out.loss = loss_sum / static_cast<double>(out.counted_steps);
  if (!std::isfinite(out.loss)) {
    throw NumericalError("forward_sentence: non-finite loss on '" + example.video_id + "'");
  }
  return out;
}

template <typename T>
ExampleInputGrads<T> backward_sentence(const CaptionModel<T>& model,
                                       const TrainingExample<T>& example,
                                       const SentenceForward<T>& fwd, ModelGrads<T>& acc) {
  if (fwd.steps.empty()) throw ValidationError("backward_sentence: empty forward cache");
  const size_t hidden = model.cfg.hidden;
  const T scale = T(1) / static_cast<T>(fwd.counted_steps);

  ExampleInputGrads<T> in;
  in.features = Matrix<T>(example.features.features.rows, example.features.features.cols);
  if (model.uses_semantics()) in.semantic.assign(model.semantic_dim, T(0));

  Vec<T> dh1_next(hidden, T(0)), dc1_next(hidden, T(0));
  Vec<T> dh2_next(hidden, T(0)), dc2_next(hidden, T(0));

  for (size_t ti = fwd.steps.size(); ti-- > 0;) {
    const StepCache<T>& step = fwd.steps[ti];

    // softmax cross-entropy
    Vec<T> dlogits = step.probs;
    dlogits[static_cast<size_t>(step.target_token)] -= T(1);
    for (auto& v : dlogits) v *= scale;

    Vec<T> h_drop = step.h_top;
    if (!step.dropout_mask.empty()) {
      for (size_t k = 0; k < hidden; ++k) h_drop[k] *= step.dropout_mask[k];
    }
    outer_accum(acc.w_out, dlogits, h_drop);
    for (size_t k = 0; k < dlogits.size(); ++k) acc.b_out[k] += dlogits[k];

    Vec<T> dh_top(hidden, T(0));
    matvec_transpose_accum(model.w_out, dlogits, dh_top);
    if (!step.dropout_mask.empty()) {
      for (size_t k = 0; k < hidden; ++k) dh_top[k] *= step.dropout_mask[k];
    }

    Vec<T> dh1(hidden, T(0));
    if (model.stacked()) {
      Vec<T> dh2 = dh_top;
      for (size_t k = 0; k < hidden; ++k) dh2[k] += dh2_next[k];
      const LstmInputGrads<T> in2 =
          lstm_step_backward(*model.lstm2, *step.lstm2, dh2, dc2_next, *acc.lstm2);
      dh2_next = in2.h_prev;
      dc2_next = in2.c_prev;
      for (size_t k = 0; k < model.semantic_dim; ++k) in.semantic[k] += in2.u[k];
      for (size_t k = 0; k < hidden; ++k) dh1[k] = in2.u[model.semantic_dim + k];
      for (size_t k = 0; k < hidden; ++k) dh1[k] += dh1_next[k];
    } else {
      dh1 = dh_top;
      for (size_t k = 0; k < hidden; ++k) dh1[k] += dh1_next[k];
    }

    const LstmInputGrads<T> in1 =
        lstm_step_backward(model.lstm1, step.lstm1, dh1, dc1_next, acc.lstm1);

    dh1_next = in1.h_prev;
    dc1_next = in1.c_prev;

    // attention consumed h1_{t-1} as well
    AttendInputGrads<T> datt =
        model.uses_attention()
            ? attend_backward(*model.attention, step.att, in1.z, *acc.attention)
            : attend_mean_pool_backward(step.att, in1.z);
    for (size_t r = 0; r < in.features.rows; ++r) {
      for (size_t c = 0; c < in.features.cols; ++c) {
        in.features.at(r, c) += datt.features.at(r, c);
      }
    }
    if (model.uses_attention()) {
      for (size_t k = 0; k < hidden; ++k) dh1_next[k] += datt.h_prev[k];
    }

    // embedding (and AttSem semantic) gradient through x1
    auto emb_grad = acc.embedding.row(static_cast<size_t>(step.input_token));
    for (size_t k = 0; k < model.cfg.embedding; ++k) emb_grad[k] += in1.u[k];
    if (model.cfg.variant == Variant::AttSem) {
      for (size_t k = 0; k < model.semantic_dim; ++k) {
        in.semantic[k] += in1.u[model.cfg.embedding + k];
      }
    }
  }
  return in;
}

template <typename T>
RuntimeState<T> RuntimeState<T>::zero(const CaptionModel<T>& m) {
  RuntimeState<T> s;
  s.s1 = LstmState<T>::zero(m.cfg.hidden);
  if (m.stacked()) s.s2 = LstmState<T>::zero(m.cfg.hidden);
  return s;
}

template <typename T>
StepOutput<T> step_logits(const CaptionModel<T>& model, const RuntimeState<T>& state,
                          int prev_token, const ProposalFeatureSet<T>& features,
                          const Vec<T>* semantic) {
  if (prev_token < 0 || static_cast<size_t>(prev_token) >= model.vocab_size) {
    throw ValidationError("step_logits: token id " + std::to_string(prev_token) +
                          " out of range");
  }
  if (model.uses_semantics() && (!semantic || semantic->size() != model.semantic_dim)) {
    throw ValidationError("step_logits: semantic feature missing or of wrong width");
  }

  StepCache<T> cache;
  StepOutput<T> out;
  LstmState<T> n1, n2;
  run_step(model, prev_token, features, semantic, state.s1,
           model.stacked() ? &*state.s2 : nullptr, /*train_mode=*/false, nullptr, cache, out.att,
           n1, model.stacked() ? &n2 : nullptr);
  out.next.s1 = std::move(n1);
  if (model.stacked()) out.next.s2 = std::move(n2);
  out.log_probs.resize(cache.probs.size());
  for (size_t k = 0; k < cache.probs.size(); ++k) {
    out.log_probs[k] = std::log(std::max(static_cast<double>(cache.probs[k]), 1e-300));
  }
  return out;
}

namespace {

template <typename T>
struct AdamState {
  std::vector<Vec<T>> m, v;
  size_t t = 0;

  static AdamState zero_like(std::vector<ParamView<T>>& views) {
    AdamState s;
    for (auto& view : views) {
      s.m.emplace_back(view.size, T(0));
      s.v.emplace_back(view.size, T(0));
    }
    return s;
  }
};

template <typename T>
void adam_update(std::vector<ParamView<T>>& params, std::vector<ParamView<T>>& grads,
                 AdamState<T>& adam, const ModelConfig& cfg) {
  // global norm clip
  double norm_sq = 0;
  for (auto& g : grads) {
    for (size_t k = 0; k < g.size; ++k) {
      norm_sq += static_cast<double>(g.data[k]) * static_cast<double>(g.data[k]);
    }
  }
  const double norm = std::sqrt(norm_sq);
  const double clip_scale =
      (cfg.grad_clip > 0 && norm > cfg.grad_clip) ? cfg.grad_clip / norm : 1.0;

  ++adam.t;
  const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(adam.t));
  const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(adam.t));
  for (size_t i = 0; i < params.size(); ++i) {
    T* p = params[i].data;
    T* g = grads[i].data;
    Vec<T>& m = adam.m[i];
    Vec<T>& v = adam.v[i];
    for (size_t k = 0; k < params[i].size; ++k) {
      const double gk = static_cast<double>(g[k]) * clip_scale;
      const double mk = cfg.adam_beta1 * static_cast<double>(m[k]) + (1.0 - cfg.adam_beta1) * gk;
      const double vk =
          cfg.adam_beta2 * static_cast<double>(v[k]) + (1.0 - cfg.adam_beta2) * gk * gk;
      m[k] = static_cast<T>(mk);
      v[k] = static_cast<T>(vk);
      const double step =
          cfg.learning_rate * (mk / bc1) / (std::sqrt(vk / bc2) + cfg.adam_eps);
      p[k] = static_cast<T>(static_cast<double>(p[k]) - step);
    }
  }
}

template <typename T>
double eval_loss(const CaptionModel<T>& model, std::span<const TrainingExample<T>> set) {
  double sum = 0;
  for (const auto& e : set) sum += forward_sentence(model, e, false, nullptr).loss;
  return set.empty() ? std::numeric_limits<double>::quiet_NaN()
                     : sum / static_cast<double>(set.size());
}

}  // namespace

template <typename T>
TrainResult<T> train(CaptionModel<T> model, std::span<const TrainingExample<T>> corpus,
                     std::span<const TrainingExample<T>> val, const TrainOptions<T>& opts) {
  if (corpus.empty()) throw ValidationError("train: empty corpus");
  for (const auto& e : corpus) validate_example(model, e);

  auto views = param_views(model);
  AdamState<T> adam = AdamState<T>::zero_like(views);
  RandomStream rng(model.cfg.seed ^ 0x7261696e65724aULL);

  TrainResult<T> result;
  double best_loss = std::numeric_limits<double>::infinity();
  double best_bleu = -std::numeric_limits<double>::infinity();

  std::vector<size_t> order(corpus.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  const size_t batch = std::max<size_t>(1, model.cfg.batch_size);
  for (size_t epoch = 1; epoch <= opts.epochs; ++epoch) {
    // Fisher-Yates with the training stream
    for (size_t i = order.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(rng.next_index(i));
      std::swap(order[i - 1], order[j]);
    }

    double loss_sum = 0;
    for (size_t start = 0; start < order.size(); start += batch) {
      const size_t stop = std::min(order.size(), start + batch);
      ModelGrads<T> grads = ModelGrads<T>::zero_like(model);
      auto gviews = grad_views(grads);
      for (size_t bi = start; bi < stop; ++bi) {
        const auto& example = corpus[order[bi]];
        SentenceForward<T> fwd;
        try {
          fwd = forward_sentence(model, example, true, &rng);
        } catch (const NumericalError& e) {
          throw NumericalError("training diverged at epoch " + std::to_string(epoch) +
                               ", example '" + example.video_id + "': " + e.what());
        }
        loss_sum += fwd.loss;
        backward_sentence(model, example, fwd, grads);
      }
      const T inv = T(1) / static_cast<T>(stop - start);
      for (auto& gv : gviews) {
        for (size_t k = 0; k < gv.size; ++k) gv.data[k] *= inv;
      }
      adam_update(views, gviews, adam, model.cfg);
    }

    EpochLog row;
    row.epoch = epoch;
    row.train_loss = loss_sum / static_cast<double>(corpus.size());
    row.val_loss = eval_loss(model, val);
    row.val_bleu4 = opts.val_bleu_scorer ? opts.val_bleu_scorer(model)
                                         : std::numeric_limits<double>::quiet_NaN();
    if (!std::isfinite(row.train_loss)) {
      throw NumericalError("training diverged at epoch " + std::to_string(epoch));
    }
    result.log.push_back(row);
    if (opts.on_epoch) opts.on_epoch(row);

    if (!val.empty() && row.val_loss < best_loss) {
      best_loss = row.val_loss;
      result.best_by_loss = model;
      result.best_loss_epoch = epoch;
    }
    if (opts.val_bleu_scorer && row.val_bleu4 > best_bleu) {
      best_bleu = row.val_bleu4;
      result.best_by_bleu = model;
      result.best_bleu_epoch = epoch;
    }
  }

  result.final_model = std::move(model);
  if (val.empty()) {
    result.best_by_loss = result.final_model;
    result.best_loss_epoch = opts.epochs;
  }
  if (!opts.val_bleu_scorer) {
    result.best_by_bleu = result.best_by_loss;
    result.best_bleu_epoch = result.best_loss_epoch;
  }
  return result;
}

namespace {

nlohmann::json subset_to_json(const SemanticSubset& s) {
  nlohmann::json arr = nlohmann::json::array();
  if (s.svo) arr.push_back("svo");
  if (s.cls) arr.push_back("cls");
  if (s.det) arr.push_back("det");
  return arr;
}

SemanticSubset subset_from_json(const nlohmann::json& arr) {
  SemanticSubset s;
  for (const auto& v : arr) {
    const std::string name = v.get<std::string>();
    if (name == "svo") s.svo = true;
    else if (name == "cls") s.cls = true;
    else if (name == "det") s.det = true;
    else throw ValidationError("checkpoint: unknown semantic block '" + name + "'");
  }
  return s;
}

}  // namespace

template <typename T>
void save_checkpoint(const CaptionModel<T>& model, const std::filesystem::path& prefix) {
  CaptionModel<T>& mutable_model = const_cast<CaptionModel<T>&>(model);
  auto views = param_views(mutable_model);

  FeatureContainer c(1);
  std::vector<float> column;
  for (const auto& view : views) {
    column.resize(view.size);
    for (size_t k = 0; k < view.size; ++k) column[k] = static_cast<float>(view.data[k]);
    c.add_tensor(view.name, column, static_cast<uint32_t>(view.size));
  }
  c.save(prefix.string() + ".gcap");

  const ModelConfig& cfg = model.cfg;
  nlohmann::json j;
  j["format_version"] = 1;
  j["variant"] = variant_name(cfg.variant);
  j["semantic_subset"] = subset_to_json(cfg.semantic_subset);
  j["hidden"] = cfg.hidden;
  j["embedding"] = cfg.embedding;
  j["attention"] = cfg.attention;
  j["dropout"] = cfg.dropout;
  j["learning_rate"] = cfg.learning_rate;
  j["adam_beta1"] = cfg.adam_beta1;
  j["adam_beta2"] = cfg.adam_beta2;
  j["adam_eps"] = cfg.adam_eps;
  j["grad_clip"] = cfg.grad_clip;
  j["batch_size"] = cfg.batch_size;
  j["max_epochs"] = cfg.max_epochs;
  j["seed"] = cfg.seed;
  j["init_scale"] = cfg.init_scale;
  j["forget_bias_one"] = cfg.forget_bias_one;
  j["vocab_size"] = model.vocab_size;
  j["feature_dim"] = model.feature_dim;
  j["semantic_dim"] = model.semantic_dim;

  std::ofstream os(prefix.string() + ".json");
  if (!os) throw ValidationError("save_checkpoint: cannot open " + prefix.string() + ".json");
  os << j.dump(2) << "\n";
}

template <typename T>
CaptionModel<T> load_checkpoint(const std::filesystem::path& prefix) {
  std::ifstream is(prefix.string() + ".json");
  if (!is) throw ValidationError("load_checkpoint: cannot open " + prefix.string() + ".json");
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("load_checkpoint: bad JSON sidecar: " + std::string(e.what()));
  }

  ModelConfig cfg;
  cfg.variant = parse_variant(j.at("variant").get<std::string>());
  cfg.semantic_subset = subset_from_json(j.at("semantic_subset"));
  cfg.hidden = j.at("hidden").get<size_t>();
  cfg.embedding = j.at("embedding").get<size_t>();
  cfg.attention = j.at("attention").get<size_t>();
  cfg.dropout = j.at("dropout").get<double>();
  cfg.learning_rate = j.at("learning_rate").get<double>();
  cfg.adam_beta1 = j.at("adam_beta1").get<double>();
  cfg.adam_beta2 = j.at("adam_beta2").get<double>();
  cfg.adam_eps = j.at("adam_eps").get<double>();
  cfg.grad_clip = j.at("grad_clip").get<double>();
  cfg.batch_size = j.at("batch_size").get<size_t>();
  cfg.max_epochs = j.at("max_epochs").get<size_t>();
  cfg.seed = j.at("seed").get<uint64_t>();
  cfg.init_scale = j.at("init_scale").get<double>();
  cfg.forget_bias_one = j.at("forget_bias_one").get<bool>();

  CaptionModel<T> model = build_model<T>(cfg, j.at("vocab_size").get<size_t>(),
                                         j.at("feature_dim").get<size_t>(),
                                         j.at("semantic_dim").get<size_t>());
  const FeatureContainer c = FeatureContainer::load(prefix.string() + ".gcap");
  for (auto& view : param_views(model)) {
    const auto span = c.tensor(view.name);
    if (span.size() != view.size) {
      throw ValidationError("load_checkpoint: tensor '" + view.name + "' has " +
                            std::to_string(span.size()) + " values, expected " +
                            std::to_string(view.size));
    }
    for (size_t k = 0; k < view.size; ++k) view.data[k] = static_cast<T>(span[k]);
  }
  return model;
}

#define GCAP_INSTANTIATE_CAPTIONER(T)                                                          \
  template CaptionModel<T> build_model<T>(const ModelConfig&, size_t, size_t, size_t);         \
  template std::vector<ParamView<T>> param_views<T>(CaptionModel<T>&);                         \
  template struct ModelGrads<T>;                                                               \
  template std::vector<ParamView<T>> grad_views<T>(ModelGrads<T>&);                            \
  template SentenceForward<T> forward_sentence<T>(const CaptionModel<T>&,                      \
                                                  const TrainingExample<T>&, bool,             \
                                                  RandomStream*);                              \
  template ExampleInputGrads<T> backward_sentence<T>(const CaptionModel<T>&,                   \
                                                     const TrainingExample<T>&,                \
                                                     const SentenceForward<T>&,                \
                                                     ModelGrads<T>&);                          \
  template struct RuntimeState<T>;                                                             \
  template StepOutput<T> step_logits<T>(const CaptionModel<T>&, const RuntimeState<T>&, int,   \
                                        const ProposalFeatureSet<T>&, const Vec<T>*);          \
  template TrainResult<T> train<T>(CaptionModel<T>, std::span<const TrainingExample<T>>,       \
                                   std::span<const TrainingExample<T>>,                        \
                                   const TrainOptions<T>&);                                    \
  template void save_checkpoint<T>(const CaptionModel<T>&, const std::filesystem::path&);      \
  template CaptionModel<T> load_checkpoint<T>(const std::filesystem::path&);

GCAP_INSTANTIATE_CAPTIONER(float)
GCAP_INSTANTIATE_CAPTIONER(double)

}  // namespace gcap
