#include <benchmark/benchmark.h>

#include "gcap/attention.hpp"
#include "gcap/captioner.hpp"
#include "gcap/decoder.hpp"
#include "gcap/lstm.hpp"
#include "gcap/metrics.hpp"
#include "gcap/vocab.hpp"

using namespace gcap;

namespace {

template <typename T>
ProposalFeatureSet<T> bench_pool(size_t m, size_t d, RandomStream& rng) {
  ProposalFeatureSet<T> pool;
  pool.features = Matrix<T>(m, d);
  pool.valid_mask.assign(m, 1);
  for (size_t i = 0; i < m; ++i) {
    pool.source_ids.push_back(static_cast<int64_t>(i));
    for (size_t c = 0; c < d; ++c) {
      pool.features.at(i, c) = static_cast<T>(rng.next_uniform(-1, 1));
    }
  }
  return pool;
}

template <typename T>
void bm_lstm_step(benchmark::State& state) {
  const size_t hidden = static_cast<size_t>(state.range(0));
  RandomStream rng(1);
  const auto params = LstmParams<T>::init(hidden, hidden, hidden / 2, rng);
  Vec<T> u(hidden), z(hidden / 2);
  fill_uniform(u, rng, -1, 1);
  fill_uniform(z, rng, -1, 1);
  LstmState<T> s = LstmState<T>::zero(hidden);
  for (auto _ : state) {
    s = lstm_step(params, u, z, s);
    benchmark::DoNotOptimize(s.h.data());
  }
}

template <typename T>
void bm_lstm_backward(benchmark::State& state) {
  const size_t hidden = static_cast<size_t>(state.range(0));
  RandomStream rng(2);
  const auto params = LstmParams<T>::init(hidden, hidden, hidden / 2, rng);
  Vec<T> u(hidden), z(hidden / 2);
  fill_uniform(u, rng, -1, 1);
  fill_uniform(z, rng, -1, 1);
  LstmCache<T> cache;
  lstm_step(params, u, z, LstmState<T>::zero(hidden), &cache);
  const Vec<T> dh(hidden, T(1)), dc(hidden, T(0));
  auto grads = LstmGrads<T>::zero_like(params);
  for (auto _ : state) {
    auto in = lstm_step_backward(params, cache, dh, dc, grads);
    benchmark::DoNotOptimize(in.u.data());
  }
}

template <typename T>
void bm_attend(benchmark::State& state) {
  const size_t m = static_cast<size_t>(state.range(0));
  RandomStream rng(3);
  const size_t d = 64, hidden = 64;
  const auto params = AttentionParams<T>::init(hidden, d, hidden, rng);
  const auto pool = bench_pool<T>(m, d, rng);
  Vec<T> h(hidden);
  fill_uniform(h, rng, -1, 1);
  for (auto _ : state) {
    auto res = attend(params, pool, h);
    benchmark::DoNotOptimize(res.z.data());
  }
}

void bm_beam_search(benchmark::State& state) {
  const size_t beam = static_cast<size_t>(state.range(0));
  ModelConfig cfg;
  cfg.variant = Variant::Att;
  cfg.hidden = 64;
  cfg.embedding = 32;
  cfg.dropout = 0.0;
  cfg.seed = 4;
  const auto model = build_model<float>(cfg, 64, 32, 0);
  RandomStream rng(5);
  const auto pool = bench_pool<float>(8, 32, rng);
  BeamConfig bc;
  bc.beam_width = beam;
  bc.min_len = 4;
  bc.max_len = 12;
  for (auto _ : state) {
    auto r = beam_search<float>(model, pool, nullptr, bc);
    benchmark::DoNotOptimize(r.log_prob);
  }
}

void bm_bleu(benchmark::State& state) {
  RandomStream rng(6);
  const std::vector<std::string> words = {"a", "man", "is", "playing", "the", "guitar",
                                          "dog", "cat", "ball", "toy"};
  std::vector<EvalPair> pairs;
  for (int i = 0; i < 200; ++i) {
    EvalPair p;
    auto sentence = [&rng, &words]() {
      std::vector<std::string> toks;
      const size_t len = 4 + rng.next_index(8);
      for (size_t k = 0; k < len; ++k) toks.push_back(words[rng.next_index(words.size())]);
      return toks;
    };
    p.candidate = sentence();
    for (int r = 0; r < 5; ++r) p.references.push_back(sentence());
    pairs.push_back(std::move(p));
  }
  for (auto _ : state) {
    auto scores = bleu(pairs, 4);
    benchmark::DoNotOptimize(scores.data());
  }
}

}  // namespace

BENCHMARK_TEMPLATE(bm_lstm_step, float)->Arg(128)->Arg(512);
BENCHMARK_TEMPLATE(bm_lstm_step, double)->Arg(128);
BENCHMARK_TEMPLATE(bm_lstm_backward, float)->Arg(128)->Arg(512);
BENCHMARK_TEMPLATE(bm_attend, float)->Arg(8)->Arg(20);
BENCHMARK(bm_beam_search)->Arg(1)->Arg(20);
BENCHMARK(bm_bleu);

BENCHMARK_MAIN();
