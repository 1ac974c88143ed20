#ifndef GCAP_DECODER_HPP_
#define GCAP_DECODER_HPP_

#include <set>

#include "gcap/captioner.hpp"

namespace gcap {

struct BeamConfig {
  size_t beam_width = 20;
  size_t min_len = 4;  // interior tokens a sentence must reach before EOS
  size_t max_len = kMaxSentenceLen;
};

template <typename T>
struct DecodeResult {
  std::vector<int> tokens;  // interior token ids, specials excluded
  double log_prob = 0;
  bool finished = false;                  // ended on EOS rather than the length cap
  std::vector<AttentionStep<T>> trace;  // one entry per interior token
};

// Length-unnormalized beam search over cumulative log-probabilities.
// BOS and PAD are never emitted; EOS is masked while the interior is shorter
// than min_len. Hypotheses reaching max_len interior tokens are kept as
// unfinished fallbacks; a finished hypothesis always wins over those.
// Ties break on the newly chosen token id, then lexicographically on the
// whole token sequence, so identical inputs give identical outputs.
template <typename T>
DecodeResult<T> beam_search(const CaptionModel<T>& model, const ProposalFeatureSet<T>& features,
                            const Vec<T>* semantic, const BeamConfig& cfg);

// Stochastic decoding mode: draws each word from the step distribution with
// the same EOS/min-length masking as the beam.
template <typename T>
DecodeResult<T> sample_sentence(const CaptionModel<T>& model,
                                const ProposalFeatureSet<T>& features, const Vec<T>* semantic,
                                RandomStream& rng, size_t min_len, size_t max_len);

// Words that never receive a visual grounding (articles, prepositions,
// linking-verb forms, ...). Shipped as an editable text file; this built-in
// set is the fallback when none is given.
class StopList {
 public:
  static StopList defaults();
  static StopList load(const std::filesystem::path& file);

  bool contains(const std::string& word) const { return words_.count(word) != 0; }
  size_t size() const { return words_.size(); }

 private:
  std::set<std::string> words_;
};

struct GroundedWord {
  std::string word;
  int t = 0;  // position in the emitted sentence
  int64_t proposal_id = 0;
  double beta = 0;
  int first_frame = 0;
  int last_frame = 0;
};

// Per content word: the argmax-beta proposal, its weight and its frame span.
// `source_ids` maps feature rows to proposal ids (ProposalFeatureSet order);
// `pool` supplies the spans. Rejects a trace that does not align with the
// sentence.
template <typename T>
std::vector<GroundedWord> ground(const std::vector<std::string>& words,
                                 std::span<const AttentionStep<T>> trace,
                                 std::span<const int64_t> source_ids,
                                 std::span<const ProposalRecord> pool, const StopList& stop);

}  // namespace gcap

#endif  // GCAP_DECODER_HPP_
