#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "gcap/grad_check.hpp"
#include "test_helpers.hpp"

using namespace gcap;
using gcap::testing::tiny_setup;
using gcap::testing::TinySetup;

namespace {

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-3});
}

}  // namespace

TEST_SUITE("captioner") {

TEST_CASE("variant wiring") {
  const TinySetup mp = tiny_setup(Variant::MeanPool, 1);
  CHECK(!mp.model.attention.has_value());
  CHECK(!mp.model.lstm2.has_value());
  CHECK(mp.model.lstm1.input_dim() == 5);
  CHECK(mp.model.lstm1.visual_dim() == 7);

  const TinySetup att = tiny_setup(Variant::Att, 1);
  CHECK(att.model.attention.has_value());
  CHECK(att.model.attention->attention_dim() == 5);

  const TinySetup att_sem = tiny_setup(Variant::AttSem, 1);
  CHECK(att_sem.model.lstm1.input_dim() == 5 + 6);  // embedding + semantic
  CHECK(!att_sem.model.lstm2.has_value());

  const TinySetup stacked = tiny_setup(Variant::StackedAttSem, 1);
  CHECK(stacked.model.lstm2.has_value());
  CHECK(stacked.model.lstm2->input_dim() == 6 + 6);  // semantic + hidden
  CHECK(stacked.model.lstm2->visual_dim() == 0);
  CHECK(stacked.model.lstm1.input_dim() == 5);  // the stacked variant keeps plain embeddings
}

TEST_CASE("inconsistent variant and semantic flags are rejected") {
  ModelConfig cfg;
  cfg.variant = Variant::AttSem;
  CHECK_THROWS_AS(build_model<double>(cfg, 11, 7, 0), ValidationError);
  cfg.variant = Variant::Att;
  cfg.semantic_subset.svo = true;
  CHECK_THROWS_AS(build_model<double>(cfg, 11, 7, 6), ValidationError);
  cfg.semantic_subset.svo = false;
  cfg.dropout = 1.0;
  CHECK_THROWS_AS(build_model<double>(cfg, 11, 7, 0), ValidationError);
}

TEST_CASE("identical seeds build bit-identical models") {
  TinySetup a = tiny_setup(Variant::StackedAttSem, 9);
  TinySetup b = tiny_setup(Variant::StackedAttSem, 9);
  auto va = param_views(a.model);
  auto vb = param_views(b.model);
  REQUIRE(va.size() == vb.size());
  for (size_t i = 0; i < va.size(); ++i) {
    CHECK(va[i].name == vb[i].name);
    REQUIRE(va[i].size == vb[i].size);
    for (size_t k = 0; k < va[i].size; ++k) CHECK(va[i].data[k] == vb[i].data[k]);
  }
  TinySetup c = tiny_setup(Variant::StackedAttSem, 10);
  auto vc = param_views(c.model);
  bool any_diff = false;
  for (size_t k = 0; k < va[0].size; ++k) any_diff |= va[0].data[k] != vc[0].data[k];
  CHECK(any_diff);
}

TEST_CASE("uniform logits give ln(vocab) loss") {
  TinySetup s = tiny_setup(Variant::Att, 2);
  for (auto& v : s.model.w_out.data) v = 0;
  for (auto& v : s.model.b_out) v = 0;
  const SentenceForward<double> fwd = forward_sentence(s.model, s.example, false, nullptr);
  CHECK(fwd.loss == doctest::Approx(std::log(11.0)).epsilon(1e-12));

  // small random init stays within 5% of the uniform entropy
  const TinySetup fresh = tiny_setup(Variant::Att, 3);
  const double loss = forward_sentence(fresh.model, fresh.example, false, nullptr).loss;
  CHECK(std::abs(loss - std::log(11.0)) / std::log(11.0) < 0.05);
}

TEST_CASE("gradients match finite differences on every variant (smoke)") {
  // the acceptance suite runs the full 5-seed sweep
  for (Variant v :
       {Variant::MeanPool, Variant::Att, Variant::AttSem, Variant::StackedAttSem}) {
    const GradCheckReport r = gradient_check_variant(v, 1, 5);
    CHECK(r.max_rel_err < 1e-6);
  }
}

TEST_CASE("input gradients match finite differences and respect padding") {
  TinySetup s = tiny_setup(Variant::AttSem, 4);
  const SentenceForward<double> fwd = forward_sentence(s.model, s.example, false, nullptr);
  ModelGrads<double> grads = ModelGrads<double>::zero_like(s.model);
  const ExampleInputGrads<double> in = backward_sentence(s.model, s.example, fwd, grads);

  auto loss_now = [&]() { return forward_sentence(s.model, s.example, false, nullptr).loss; };
  for (size_t i = 0; i < 3; ++i) {
    for (size_t c = 0; c < 7; ++c) {
      double& x = s.example.features.features.at(i, c);
      const double keep = x;
      x = keep + 1e-5;
      const double fp = loss_now();
      x = keep - 1e-5;
      const double fm = loss_now();
      x = keep;
      CHECK(rel_err(in.features.at(i, c), (fp - fm) / 2e-5) < 1e-6);
    }
  }
  for (size_t c = 0; c < 7; ++c) CHECK(in.features.at(3, c) == 0.0);  // padded row
  for (size_t k = 0; k < 6; ++k) {
    double& x = (*s.example.semantic)[k];
    const double keep = x;
    x = keep + 1e-5;
    const double fp = loss_now();
    x = keep - 1e-5;
    const double fm = loss_now();
    x = keep;
    CHECK(rel_err(in.semantic[k], (fp - fm) / 2e-5) < 1e-6);
  }
}

TEST_CASE("attention forced uniform reproduces the mean-pool variant") {
  TinySetup att = tiny_setup(Variant::Att, 5);
  TinySetup mp = tiny_setup(Variant::MeanPool, 5);
  mp.example = att.example;

  // identical non-attention parameters, then flatten the attention scores
  mp.model.embedding = att.model.embedding;
  mp.model.lstm1 = att.model.lstm1;
  mp.model.w_out = att.model.w_out;
  mp.model.b_out = att.model.b_out;
  for (auto& v : att.model.attention->w_ph) v = 0;  // eps == 0 -> uniform beta

  const double att_loss = forward_sentence(att.model, att.example, false, nullptr).loss;
  const double mp_loss = forward_sentence(mp.model, mp.example, false, nullptr).loss;
  CHECK(std::abs(att_loss - mp_loss) < 1e-9);
}

TEST_CASE("train mode with dropout zero equals eval mode exactly") {
  TinySetup s = tiny_setup(Variant::StackedAttSem, 6);
  RandomStream rng(1);
  const double train_loss = forward_sentence(s.model, s.example, true, &rng).loss;
  const double eval_loss = forward_sentence(s.model, s.example, false, nullptr).loss;
  CHECK(train_loss == eval_loss);
}

TEST_CASE("dropout perturbs the forward pass but never the eval path") {
  TinySetup s = tiny_setup(Variant::Att, 7);
  s.model.cfg.dropout = 0.5;
  RandomStream rng(2);
  const double a = forward_sentence(s.model, s.example, true, &rng).loss;
  const double b = forward_sentence(s.model, s.example, true, &rng).loss;
  CHECK(a != b);  // different masks
  const double e1 = forward_sentence(s.model, s.example, false, nullptr).loss;
  const double e2 = forward_sentence(s.model, s.example, false, nullptr).loss;
  CHECK(e1 == e2);
}

TEST_CASE("PAD targets truncate the unrolled loss") {
  TinySetup s = tiny_setup(Variant::Att, 8);
  TrainingExample<double> padded = s.example;
  padded.target.pop_back();
  padded.target.push_back(Vocabulary::kPad);
  padded.target.push_back(Vocabulary::kPad);
  const SentenceForward<double> full = forward_sentence(s.model, s.example, false, nullptr);
  const SentenceForward<double> part = forward_sentence(s.model, padded, false, nullptr);
  CHECK(part.counted_steps == full.counted_steps - 1);  // EOS step replaced by padding
}

TEST_CASE("malformed examples are rejected") {
  TinySetup s = tiny_setup(Variant::Att, 9);
  TrainingExample<double> bad = s.example;
  bad.target = {Vocabulary::kBos};
  CHECK_THROWS_AS(forward_sentence(s.model, bad, false, nullptr), ValidationError);
  bad = s.example;
  bad.target[0] = Vocabulary::kEos;
  CHECK_THROWS_AS(forward_sentence(s.model, bad, false, nullptr), ValidationError);
  bad = s.example;
  bad.target.assign(30, 5);
  bad.target[0] = Vocabulary::kBos;
  CHECK_THROWS_AS(forward_sentence(s.model, bad, false, nullptr), ValidationError);
  bad = s.example;
  bad.semantic = Vec<double>(6, 0.0);  // semantics on a plain Att model
  CHECK_THROWS_AS(forward_sentence(s.model, bad, false, nullptr), ValidationError);

  TinySetup sem = tiny_setup(Variant::AttSem, 9);
  TrainingExample<double> missing = sem.example;
  missing.semantic.reset();
  CHECK_THROWS_AS(forward_sentence(sem.model, missing, false, nullptr), ValidationError);
}

TEST_CASE("zero learning rate leaves parameters untouched") {
  TinySetup s = tiny_setup(Variant::Att, 10);
  s.model.cfg.learning_rate = 0.0;
  s.model.cfg.batch_size = 1;
  const std::vector<TrainingExample<double>> corpus = {s.example};

  CaptionModel<double> before = s.model;
  TrainOptions<double> opts;
  opts.epochs = 3;
  const TrainResult<double> r =
      train(std::move(s.model), std::span<const TrainingExample<double>>(corpus), {}, opts);
  auto va = param_views(before);
  CaptionModel<double> after = r.final_model;
  auto vb = param_views(after);
  for (size_t i = 0; i < va.size(); ++i) {
    for (size_t k = 0; k < va[i].size; ++k) CHECK(va[i].data[k] == vb[i].data[k]);
  }
  CHECK(r.log[0].train_loss == doctest::Approx(r.log[2].train_loss).epsilon(1e-12));
}

TEST_CASE("training is deterministic under a fixed seed") {
  auto run = []() {
    TinySetup s = tiny_setup(Variant::Att, 11);
    s.model.cfg.dropout = 0.5;
    s.model.cfg.batch_size = 2;
    std::vector<TrainingExample<double>> corpus = {s.example, s.example, s.example};
    TrainOptions<double> opts;
    opts.epochs = 5;
    return train(std::move(s.model), std::span<const TrainingExample<double>>(corpus), {}, opts);
  };
  TrainResult<double> a = run();
  TrainResult<double> b = run();
  REQUIRE(a.log.size() == b.log.size());
  for (size_t e = 0; e < a.log.size(); ++e) {
    CHECK(a.log[e].train_loss == b.log[e].train_loss);
  }
  auto va = param_views(a.final_model);
  auto vb = param_views(b.final_model);
  for (size_t i = 0; i < va.size(); ++i) {
    for (size_t k = 0; k < va[i].size; ++k) CHECK(va[i].data[k] == vb[i].data[k]);
  }
}

TEST_CASE("a single example is memorized within 500 steps") {
  TinySetup s = tiny_setup(Variant::Att, 12);
  s.model.cfg.learning_rate = 0.05;
  s.model.cfg.batch_size = 1;
  s.model.cfg.dropout = 0.0;
  const std::vector<TrainingExample<double>> corpus = {s.example};
  TrainOptions<double> opts;
  opts.epochs = 500;
  const TrainResult<double> r =
      train(std::move(s.model), std::span<const TrainingExample<double>>(corpus), {}, opts);
  CHECK(forward_sentence(r.final_model, corpus[0], false, nullptr).loss < 0.01);
}

TEST_CASE("divergence aborts with an epoch report") {
  TinySetup s = tiny_setup(Variant::Att, 13);
  s.model.cfg.learning_rate = 0.01;
  s.model.cfg.batch_size = 1;
  for (auto& v : s.model.w_out.data) v = 1e308;  // overflows the logits
  const std::vector<TrainingExample<double>> corpus = {s.example};
  TrainOptions<double> opts;
  opts.epochs = 2;
  CHECK_THROWS_WITH_AS(
      train(std::move(s.model), std::span<const TrainingExample<double>>(corpus), {}, opts),
      doctest::Contains("epoch"), NumericalError);
}

TEST_CASE("step_logits normalizes and replays the teacher-forced pass") {
  TinySetup s = tiny_setup(Variant::StackedAttSem, 14);
  const SentenceForward<double> fwd = forward_sentence(s.model, s.example, false, nullptr);

  RuntimeState<double> state = RuntimeState<double>::zero(s.model);
  const Vec<double>* sem = s.example.semantic ? &*s.example.semantic : nullptr;
  for (size_t t = 1; t < s.example.target.size(); ++t) {
    const StepOutput<double> out =
        step_logits(s.model, state, s.example.target[t - 1], s.example.features, sem);
    double total = 0;
    for (double lp : out.log_probs) total += std::exp(lp);
    CHECK(std::abs(total - 1.0) < 1e-6);

    const StepCache<double>& cache = fwd.steps[t - 1];
    for (size_t k = 0; k < out.log_probs.size(); ++k) {
      CHECK(std::abs(std::exp(out.log_probs[k]) - cache.probs[k]) < 1e-12);
    }
    const AttentionStep<double>& att = fwd.trace[t - 1];
    for (size_t i = 0; i < att.beta.size(); ++i) {
      CHECK(out.att.beta[i] == doctest::Approx(att.beta[i]).epsilon(1e-12));
    }
    state = out.next;
  }
}

TEST_CASE("the stacked variant is sensitive to its semantic input") {
  TinySetup s = tiny_setup(Variant::StackedAttSem, 15);
  const RuntimeState<double> state = RuntimeState<double>::zero(s.model);
  const StepOutput<double> with_sem =
      step_logits(s.model, state, Vocabulary::kBos, s.example.features, &*s.example.semantic);
  const Vec<double> zeros(s.model.semantic_dim, 0.0);
  const StepOutput<double> without =
      step_logits(s.model, state, Vocabulary::kBos, s.example.features, &zeros);
  double max_delta = 0;
  for (size_t k = 0; k < with_sem.log_probs.size(); ++k) {
    max_delta = std::max(max_delta, std::abs(with_sem.log_probs[k] - without.log_probs[k]));
  }
  CHECK(max_delta > 1e-6);
}

TEST_CASE("checkpoints round-trip float models exactly") {
  ModelConfig cfg;
  cfg.variant = Variant::StackedAttSem;
  cfg.semantic_subset.svo = true;
  cfg.hidden = 6;
  cfg.embedding = 5;
  cfg.seed = 16;
  CaptionModel<float> model = build_model<float>(cfg, 11, 7, 6);
  const std::filesystem::path prefix = std::filesystem::temp_directory_path() / "gcap_ckpt_test";
  save_checkpoint(model, prefix);
  CaptionModel<float> loaded = load_checkpoint<float>(prefix);
  CHECK(loaded.cfg.variant == cfg.variant);
  CHECK(loaded.vocab_size == 11);
  auto va = param_views(model);
  auto vb = param_views(loaded);
  REQUIRE(va.size() == vb.size());
  for (size_t i = 0; i < va.size(); ++i) {
    for (size_t k = 0; k < va[i].size; ++k) CHECK(va[i].data[k] == vb[i].data[k]);
  }
  std::filesystem::remove(std::filesystem::path(prefix.string() + ".gcap"));
  std::filesystem::remove(std::filesystem::path(prefix.string() + ".json"));
}

}  // TEST_SUITE
