#include "gcap/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace gcap {

double gradient_rel_err(double analytic, double numeric, double floor) {
  const double denom = std::max(std::abs(analytic) + std::abs(numeric), floor);
  return std::abs(analytic - numeric) / denom;
}

namespace {

TrainingExample<double> make_example(const CaptionModel<double>& model, RandomStream& rng,
                                     size_t interior_tokens, size_t pool_size,
                                     size_t valid_count) {
  TrainingExample<double> e;
  e.video_id = "gradcheck";
  e.features.features = Matrix<double>(pool_size, model.feature_dim);
  e.features.valid_mask.assign(pool_size, 0);
  for (size_t i = 0; i < valid_count; ++i) {
    e.features.valid_mask[i] = 1;
    e.features.source_ids.push_back(static_cast<int64_t>(i));
    for (size_t c = 0; c < model.feature_dim; ++c) {
      e.features.features.at(i, c) = rng.next_uniform(-1.0, 1.0);
    }
  }
  if (model.uses_semantics()) {
    Vec<double> s(model.semantic_dim);
    for (auto& v : s) v = rng.next_uniform(-1.0, 1.0);
    e.semantic = std::move(s);
  }
  e.target.push_back(Vocabulary::kBos);
  for (size_t t = 0; t < interior_tokens; ++t) {
    e.target.push_back(4 + static_cast<int>(rng.next_index(model.vocab_size - 4)));
  }
  e.target.push_back(Vocabulary::kEos);
  return e;
}

}  // namespace

GradCheckReport gradient_check_variant(Variant variant, uint64_t seed, size_t interior_tokens,
                                       double eps) {
  ModelConfig cfg;
  cfg.variant = variant;
  cfg.hidden = 6;
  cfg.embedding = 5;
  cfg.attention = 5;
  cfg.dropout = 0.0;
  cfg.seed = seed;
  const bool sem = variant == Variant::AttSem || variant == Variant::StackedAttSem;
  if (sem) cfg.semantic_subset.svo = true;

  const size_t vocab_size = 11;
  const size_t feature_dim = 7;
  const size_t semantic_dim = sem ? 6 : 0;
  CaptionModel<double> model = build_model<double>(cfg, vocab_size, feature_dim, semantic_dim);

  RandomStream rng(seed ^ 0x67726164ULL);
  const TrainingExample<double> example =
      make_example(model, rng, interior_tokens, /*pool_size=*/4, /*valid_count=*/3);

  const SentenceForward<double> fwd = forward_sentence(model, example, false, nullptr);
  ModelGrads<double> grads = ModelGrads<double>::zero_like(model);
  backward_sentence(model, example, fwd, grads);

  auto pviews = param_views(model);
  auto gviews = grad_views(grads);

  GradCheckReport report;
  report.variant = variant;
  report.seed = seed;
  for (size_t vi = 0; vi < pviews.size(); ++vi) {
    for (size_t k = 0; k < pviews[vi].size; ++k) {
      double& p = pviews[vi].data[k];
      const double keep = p;
      p = keep + eps;
      const double fp = forward_sentence(model, example, false, nullptr).loss;
      p = keep - eps;
      const double fm = forward_sentence(model, example, false, nullptr).loss;
      p = keep;
      const double numeric = (fp - fm) / (2.0 * eps);
      const double rel = gradient_rel_err(gviews[vi].data[k], numeric);
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = pviews[vi].name + "[" + std::to_string(k) + "]";
      }
    }
  }
  return report;
}

std::vector<GradCheckReport> gradient_check_suite(std::span<const Variant> variants,
                                                  size_t seeds, size_t interior_tokens) {
  std::vector<GradCheckReport> out;
  for (Variant v : variants) {
    for (size_t s = 1; s <= seeds; ++s) {
      out.push_back(gradient_check_variant(v, s, interior_tokens));
    }
  }
  return out;
}

}  // namespace gcap
