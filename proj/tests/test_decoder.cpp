#include <algorithm>
#include <cmath>
#include <fstream>

#include "doctest.h"
#include "gcap/decoder.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace gcap;
using gcap::testing::brute_force_decode;
using gcap::testing::random_pool;

namespace {

// a vocab-6 toy model: 4 specials + 2 words, small enough to enumerate
struct ToySetup {
  CaptionModel<double> model;
  ProposalFeatureSet<double> features;
};

ToySetup toy_setup(uint64_t seed) {
  ModelConfig cfg;
  cfg.variant = Variant::Att;
  cfg.hidden = 5;
  cfg.embedding = 4;
  cfg.attention = 4;
  cfg.dropout = 0.0;
  cfg.seed = seed;
  cfg.init_scale = 0.5;  // spread the toy distributions out
  ToySetup s{build_model<double>(cfg, 6, 3, 0), {}};
  RandomStream rng(seed * 31 + 7);
  s.features = random_pool(3, 2, 3, rng);
  return s;
}

}  // namespace

TEST_SUITE("decoder") {

TEST_CASE("exhaustive beam equals brute-force enumeration") {
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    const ToySetup s = toy_setup(seed);
    BeamConfig cfg;
    cfg.beam_width = 1296;
    cfg.min_len = 1;
    cfg.max_len = 4;
    const DecodeResult<double> beam = beam_search<double>(s.model, s.features, nullptr, cfg);
    const auto oracle = brute_force_decode<double>(s.model, s.features, nullptr, 1, 4);
    CHECK(beam.tokens == oracle.tokens);
    CHECK(beam.finished == oracle.finished);
    CHECK(std::abs(beam.log_prob - oracle.log_prob) < 1e-9);
  }
}

TEST_CASE("the minimum-length constraint holds in every decode") {
  for (uint64_t seed = 1; seed <= 25; ++seed) {
    const ToySetup s = toy_setup(seed * 13);
    BeamConfig cfg;
    cfg.beam_width = 4;
    cfg.min_len = 4;
    cfg.max_len = 8;
    const DecodeResult<double> r = beam_search<double>(s.model, s.features, nullptr, cfg);
    CHECK(r.tokens.size() >= 4);
    CHECK(r.trace.size() == r.tokens.size());
  }
}

TEST_CASE("width-1 beam equals greedy decoding") {
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    const ToySetup s = toy_setup(seed * 21);
    BeamConfig cfg;
    cfg.beam_width = 1;
    cfg.min_len = 2;
    cfg.max_len = 6;
    const DecodeResult<double> beam = beam_search<double>(s.model, s.features, nullptr, cfg);

    // greedy oracle with the same masking and tie rule
    std::vector<int> tokens;
    RuntimeState<double> state = RuntimeState<double>::zero(s.model);
    double lp = 0;
    bool finished = false;
    while (tokens.size() < 6) {
      const int prev = tokens.empty() ? Vocabulary::kBos : tokens.back();
      const StepOutput<double> out = step_logits<double>(s.model, state, prev, s.features, nullptr);
      int best = -1;
      for (int tok = 0; tok < 6; ++tok) {
        if (tok == Vocabulary::kBos || tok == Vocabulary::kPad) continue;
        if (tok == Vocabulary::kEos && tokens.size() < 2) continue;
        if (best < 0 || out.log_probs[tok] > out.log_probs[best]) best = tok;
      }
      lp += out.log_probs[best];
      if (best == Vocabulary::kEos) {
        finished = true;
        break;
      }
      tokens.push_back(best);
      state = out.next;
    }
    CHECK(beam.tokens == tokens);
    CHECK(beam.finished == finished);
    CHECK(std::abs(beam.log_prob - lp) < 1e-9);
  }
}

TEST_CASE("log-prob bookkeeping is exact under replay") {
  const ToySetup s = toy_setup(77);
  BeamConfig cfg;
  cfg.beam_width = 20;
  cfg.min_len = 2;
  cfg.max_len = 6;
  const DecodeResult<double> r = beam_search<double>(s.model, s.features, nullptr, cfg);

  double lp = 0;
  RuntimeState<double> state = RuntimeState<double>::zero(s.model);
  for (size_t t = 0; t < r.tokens.size(); ++t) {
    const int prev = t == 0 ? Vocabulary::kBos : r.tokens[t - 1];
    const StepOutput<double> out = step_logits<double>(s.model, state, prev, s.features, nullptr);
    lp += out.log_probs[r.tokens[t]];
    state = out.next;
  }
  if (r.finished) {
    const int prev = r.tokens.empty() ? Vocabulary::kBos : r.tokens.back();
    const StepOutput<double> out = step_logits<double>(s.model, state, prev, s.features, nullptr);
    lp += out.log_probs[Vocabulary::kEos];
  }
  CHECK(std::abs(lp - r.log_prob) < 1e-9);
}

TEST_CASE("widening the beam never lowers the best score") {
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    const ToySetup s = toy_setup(seed * 5 + 1);
    double prev = -std::numeric_limits<double>::infinity();
    for (size_t width : {1u, 2u, 4u, 8u, 16u, 64u}) {
      BeamConfig cfg;
      cfg.beam_width = width;
      cfg.min_len = 2;
      cfg.max_len = 5;
      const DecodeResult<double> r = beam_search<double>(s.model, s.features, nullptr, cfg);
      CHECK(r.log_prob >= prev - 1e-12);
      prev = std::max(prev, r.log_prob);
    }
  }
}

TEST_CASE("ties resolve toward lower token ids") {
  ToySetup s = toy_setup(3);
  for (auto& v : s.model.w_out.data) v = 0;  // all tokens equally likely
  for (auto& v : s.model.b_out) v = 0;
  BeamConfig cfg;
  cfg.beam_width = 3;
  cfg.min_len = 1;
  cfg.max_len = 4;
  const DecodeResult<double> r = beam_search<double>(s.model, s.features, nullptr, cfg);
  // the first expansion prefers UNK (lowest emittable id), then EOS finishes
  CHECK(r.tokens == std::vector<int>{Vocabulary::kUnk});
  CHECK(r.finished);
}

TEST_CASE("identical inputs give identical decodes") {
  const ToySetup s = toy_setup(99);
  BeamConfig cfg;
  const DecodeResult<double> a = beam_search<double>(s.model, s.features, nullptr, cfg);
  const DecodeResult<double> b = beam_search<double>(s.model, s.features, nullptr, cfg);
  CHECK(a.tokens == b.tokens);
  CHECK(a.log_prob == b.log_prob);
}

TEST_CASE("bad beam configurations are rejected") {
  const ToySetup s = toy_setup(1);
  BeamConfig cfg;
  cfg.beam_width = 0;
  CHECK_THROWS_AS(beam_search<double>(s.model, s.features, nullptr, cfg), ValidationError);
  cfg.beam_width = 2;
  cfg.min_len = 0;
  CHECK_THROWS_AS(beam_search<double>(s.model, s.features, nullptr, cfg), ValidationError);
  cfg.min_len = 10;
  cfg.max_len = 5;
  CHECK_THROWS_AS(beam_search<double>(s.model, s.features, nullptr, cfg), ValidationError);
}

TEST_CASE("sampling respects the length bounds and its seed") {
  const ToySetup s = toy_setup(5);
  RandomStream rng1(42), rng2(42), rng3(43);
  const DecodeResult<double> a = sample_sentence<double>(s.model, s.features, nullptr, rng1, 3, 8);
  const DecodeResult<double> b = sample_sentence<double>(s.model, s.features, nullptr, rng2, 3, 8);
  CHECK(a.tokens.size() >= 3);
  CHECK(a.tokens == b.tokens);
  bool any_diff = false;
  for (int trial = 0; trial < 10 && !any_diff; ++trial) {
    any_diff = sample_sentence<double>(s.model, s.features, nullptr, rng3, 3, 8).tokens != a.tokens;
  }
  CHECK(any_diff);
}

TEST_CASE("grounding a singleton pool and skipping stop words") {
  std::vector<ProposalRecord> pool(1);
  pool[0].id = 100;
  pool[0].first_frame = 5;
  pool[0].boxes.assign(10, {0, 0, 4, 4});

  std::vector<AttentionStep<double>> trace(3);
  for (auto& step : trace) {
    step.beta = {1.0};
    step.argmax = 0;
  }
  const std::vector<std::string> words = {"a", "cat", "runs"};
  const std::vector<int64_t> source_ids = {100};

  const auto report = ground<double>(words, trace, source_ids, pool, StopList::defaults());
  REQUIRE(report.size() == 2);  // "a" is on the stop list
  CHECK(report[0].word == "cat");
  CHECK(report[0].t == 1);
  CHECK(report[0].proposal_id == 100);
  CHECK(report[0].beta == 1.0);
  CHECK(report[0].first_frame == 5);
  CHECK(report[0].last_frame == 14);
  CHECK(report[1].word == "runs");
}

TEST_CASE("ground validates alignment and the pool") {
  const std::vector<std::string> words = {"cat"};
  std::vector<AttentionStep<double>> trace(2);
  const std::vector<int64_t> ids = {1};
  const std::vector<ProposalRecord> pool;
  CHECK_THROWS_WITH_AS(ground<double>(words, trace, ids, pool, StopList::defaults()),
                       doctest::Contains("trace"), ValidationError);

  std::vector<AttentionStep<double>> one(1);
  one[0].beta = {1.0};
  one[0].argmax = 0;
  CHECK_THROWS_WITH_AS(ground<double>(words, one, ids, pool, StopList::defaults()),
                       doctest::Contains("missing"), ValidationError);
}

TEST_CASE("stop lists load from disk") {
  const auto file = std::filesystem::temp_directory_path() / "gcap_stop_test.txt";
  {
    std::ofstream os(file);
    os << "foo\nbar\n";
  }
  const StopList s = StopList::load(file);
  CHECK(s.contains("foo"));
  CHECK(s.contains("bar"));
  CHECK(!s.contains("cat"));
  std::filesystem::remove(file);
}

}  // TEST_SUITE
