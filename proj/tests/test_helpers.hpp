#ifndef GCAP_TEST_HELPERS_HPP_
#define GCAP_TEST_HELPERS_HPP_

#include "gcap/captioner.hpp"

namespace gcap::testing {

inline ProposalFeatureSet<double> random_pool(size_t m, size_t valid, size_t d,
                                              RandomStream& rng) {
  ProposalFeatureSet<double> pool;
  pool.features = Matrix<double>(m, d);
  pool.valid_mask.assign(m, 0);
  for (size_t i = 0; i < valid; ++i) {
    pool.valid_mask[i] = 1;
    pool.source_ids.push_back(static_cast<int64_t>(i) + 100);
    for (size_t c = 0; c < d; ++c) pool.features.at(i, c) = rng.next_uniform(-1, 1);
  }
  return pool;
}

struct TinySetup {
  CaptionModel<double> model;
  TrainingExample<double> example;
};

inline TinySetup tiny_setup(Variant variant, uint64_t seed, size_t interior = 4) {
  ModelConfig cfg;
  cfg.variant = variant;
  cfg.hidden = 6;
  cfg.embedding = 5;
  cfg.attention = 5;
  cfg.dropout = 0.0;
  cfg.seed = seed;
  const bool sem = variant == Variant::AttSem || variant == Variant::StackedAttSem;
  if (sem) cfg.semantic_subset.svo = true;

  TinySetup s{build_model<double>(cfg, 11, 7, sem ? 6 : 0), {}};
  RandomStream rng(seed * 1013);
  s.example.video_id = "tiny";
  s.example.features = random_pool(4, 3, 7, rng);
  if (sem) {
    Vec<double> v(6);
    fill_uniform(v, rng, -1, 1);
    s.example.semantic = std::move(v);
  }
  s.example.target.push_back(Vocabulary::kBos);
  for (size_t t = 0; t < interior; ++t) {
    s.example.target.push_back(4 + static_cast<int>(rng.next_index(7)));
  }
  s.example.target.push_back(Vocabulary::kEos);
  return s;
}

}  // namespace gcap::testing

#endif  // GCAP_TEST_HELPERS_HPP_
