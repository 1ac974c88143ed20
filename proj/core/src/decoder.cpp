#include "gcap/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace gcap {

namespace {

template <typename T>
struct Hypothesis {
  std::vector<int> tokens;  // interior
  double log_prob = 0;
  RuntimeState<T> state;
  std::vector<AttentionStep<T>> trace;
};

template <typename T>
struct Candidate {
  double score;
  int token;
  size_t parent;
};

template <typename T>
bool candidate_before(const std::vector<Hypothesis<T>>& live, const Candidate<T>& a,
                      const Candidate<T>& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.token != b.token) return a.token < b.token;
  return live[a.parent].tokens < live[b.parent].tokens;
}

template <typename T>
bool result_before(const DecodeResult<T>& a, const DecodeResult<T>& b) {
  if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
  return a.tokens < b.tokens;
}

template <typename T>
DecodeResult<T> to_result(const Hypothesis<T>& h, bool finished) {
  DecodeResult<T> r;
  r.tokens = h.tokens;
  r.log_prob = h.log_prob;
  r.finished = finished;
  r.trace = h.trace;
  return r;
}

}  // namespace

template <typename T>
DecodeResult<T> beam_search(const CaptionModel<T>& model, const ProposalFeatureSet<T>& features,
                            const Vec<T>* semantic, const BeamConfig& cfg) {
  if (cfg.beam_width < 1) throw ValidationError("beam_search: beam width must be >= 1");
  if (cfg.min_len < 1) throw ValidationError("beam_search: min_len must be >= 1");
  if (cfg.max_len < cfg.min_len || cfg.max_len > kMaxSentenceLen) {
    throw ValidationError("beam_search: max_len must lie in [min_len, " +
                          std::to_string(kMaxSentenceLen) + "]");
  }

  std::vector<Hypothesis<T>> live(1);
  live[0].state = RuntimeState<T>::zero(model);

  std::optional<DecodeResult<T>> best_finished;
  std::optional<DecodeResult<T>> best_frozen;  // ran into the length cap

  while (!live.empty()) {
    // early exit: extensions only lower a hypothesis' log-probability
    if (best_finished) {
      double best_live = -std::numeric_limits<double>::infinity();
      for (const auto& h : live) best_live = std::max(best_live, h.log_prob);
      if (best_finished->log_prob >= best_live) break;
    }

    std::vector<StepOutput<T>> outs(live.size());
    for (size_t i = 0; i < live.size(); ++i) {
      const int prev = live[i].tokens.empty() ? Vocabulary::kBos : live[i].tokens.back();
      outs[i] = step_logits(model, live[i].state, prev, features, semantic);
    }

    std::vector<Candidate<T>> cands;
    cands.reserve(live.size() * model.vocab_size);
    for (size_t i = 0; i < live.size(); ++i) {
      const size_t len = live[i].tokens.size();
      for (int tok = 0; tok < static_cast<int>(model.vocab_size); ++tok) {
        if (tok == Vocabulary::kBos || tok == Vocabulary::kPad) continue;
        if (tok == Vocabulary::kEos && len < cfg.min_len) continue;
        cands.push_back({live[i].log_prob + static_cast<double>(outs[i].log_probs[tok]), tok, i});
      }
    }
    std::sort(cands.begin(), cands.end(), [&live](const Candidate<T>& a, const Candidate<T>& b) {
      return candidate_before(live, a, b);
    });
    if (cands.size() > cfg.beam_width) cands.resize(cfg.beam_width);

    std::vector<Hypothesis<T>> next;
    next.reserve(cands.size());
    for (const auto& cand : cands) {
      const Hypothesis<T>& parent = live[cand.parent];
      if (cand.token == Vocabulary::kEos) {
        DecodeResult<T> r = to_result(parent, true);
        r.log_prob = cand.score;
        if (!best_finished || result_before(r, *best_finished)) best_finished = std::move(r);
        continue;
      }
      Hypothesis<T> child;
      child.tokens = parent.tokens;
      child.tokens.push_back(cand.token);
      child.log_prob = cand.score;
      child.state = outs[cand.parent].next;
      child.trace = parent.trace;
      child.trace.push_back(outs[cand.parent].att);
      if (child.tokens.size() >= cfg.max_len) {
        DecodeResult<T> r = to_result(child, false);
        if (!best_frozen || result_before(r, *best_frozen)) best_frozen = std::move(r);
      } else {
        next.push_back(std::move(child));
      }
    }
    live = std::move(next);
  }

  if (best_finished) return *best_finished;
  if (best_frozen) return *best_frozen;
  throw ValidationError("beam_search: no hypothesis produced (vocabulary too small?)");
}

template <typename T>
DecodeResult<T> sample_sentence(const CaptionModel<T>& model,
                                const ProposalFeatureSet<T>& features, const Vec<T>* semantic,
                                RandomStream& rng, size_t min_len, size_t max_len) {
  if (min_len < 1 || max_len < min_len || max_len > kMaxSentenceLen) {
    throw ValidationError("sample_sentence: bad length bounds");
  }
  DecodeResult<T> r;
  RuntimeState<T> state = RuntimeState<T>::zero(model);
  int prev = Vocabulary::kBos;
  while (r.tokens.size() < max_len) {
    StepOutput<T> out = step_logits(model, state, prev, features, semantic);
    // renormalize over the allowed tokens
    Vec<double> probs(model.vocab_size, 0.0);
    double total = 0;
    for (size_t tok = 0; tok < model.vocab_size; ++tok) {
      if (tok == Vocabulary::kBos || tok == Vocabulary::kPad) continue;
      if (tok == Vocabulary::kEos && r.tokens.size() < min_len) continue;
      probs[tok] = std::exp(static_cast<double>(out.log_probs[tok]));
      total += probs[tok];
    }
    if (!(total > 0)) {
      throw NumericalError("sample_sentence: every allowed token underflowed to zero");
    }
    double u = rng.next_uniform() * total;
    int chosen = -1;
    for (size_t tok = 0; tok < probs.size(); ++tok) {
      if (probs[tok] <= 0) continue;
      u -= probs[tok];
      chosen = static_cast<int>(tok);
      if (u <= 0) break;
    }
    r.log_prob += static_cast<double>(out.log_probs[chosen]);
    if (chosen == Vocabulary::kEos) {
      r.finished = true;
      return r;
    }
    r.tokens.push_back(chosen);
    r.trace.push_back(out.att);
    state = std::move(out.next);
    prev = chosen;
  }
  return r;
}

StopList StopList::defaults() {
  static const char* kWords[] = {
      "a",    "an",   "the",  "and",  "or",    "but",   "in",    "on",    "with", "at",
      "of",   "to",   "from", "into", "onto",  "over",  "under", "by",    "for",  "about",
      "near", "is",   "are",  "was",  "were",  "be",    "been",  "being", "am",   "do",
      "does", "did",  "has",  "have", "had",   "will",  "would", "can",   "could", "shall",
      "should", "may", "might", "must", "some", "this",  "that",  "these", "those", "it",
      "its",  "his",  "her",  "their"};
  StopList s;
  for (const char* w : kWords) s.words_.insert(w);
  return s;
}

StopList StopList::load(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw ValidationError("StopList::load: cannot open " + file.string());
  StopList s;
  std::string word;
  while (is >> word) s.words_.insert(word);
  return s;
}

template <typename T>
std::vector<GroundedWord> ground(const std::vector<std::string>& words,
                                 std::span<const AttentionStep<T>> trace,
                                 std::span<const int64_t> source_ids,
                                 std::span<const ProposalRecord> pool, const StopList& stop) {
  if (words.size() != trace.size()) {
    throw ValidationError("ground: sentence has " + std::to_string(words.size()) +
                          " words but the trace has " + std::to_string(trace.size()) +
                          " steps");
  }
  std::vector<GroundedWord> out;
  for (size_t t = 0; t < words.size(); ++t) {
    if (stop.contains(words[t])) continue;
    const size_t row = trace[t].argmax;
    if (row >= source_ids.size()) {
      throw ValidationError("ground: attention argmax row " + std::to_string(row) +
                            " has no source proposal");
    }
    const int64_t id = source_ids[row];
    const ProposalRecord* rec = nullptr;
    for (const auto& p : pool) {
      if (p.id == id) {
        rec = &p;
        break;
      }
    }
    if (!rec) {
      throw ValidationError("ground: proposal id " + std::to_string(id) +
                            " missing from the pool");
    }
    GroundedWord g;
    g.word = words[t];
    g.t = static_cast<int>(t);
    g.proposal_id = id;
    g.beta = static_cast<double>(trace[t].beta[row]);
    g.first_frame = rec->first_frame;
    g.last_frame = rec->last_frame();
    out.push_back(std::move(g));
  }
  return out;
}

#define GCAP_INSTANTIATE_DECODER(T)                                                            \
  template DecodeResult<T> beam_search<T>(const CaptionModel<T>&, const ProposalFeatureSet<T>&, \
                                          const Vec<T>*, const BeamConfig&);                   \
  template DecodeResult<T> sample_sentence<T>(const CaptionModel<T>&,                          \
                                              const ProposalFeatureSet<T>&, const Vec<T>*,     \
                                              RandomStream&, size_t, size_t);                  \
  template std::vector<GroundedWord> ground<T>(const std::vector<std::string>&,                \
                                               std::span<const AttentionStep<T>>,              \
                                               std::span<const int64_t>,                       \
                                               std::span<const ProposalRecord>, const StopList&);

GCAP_INSTANTIATE_DECODER(float)
GCAP_INSTANTIATE_DECODER(double)

}  // namespace gcap
