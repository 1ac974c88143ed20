#ifndef GCAP_DATASET_HPP_
#define GCAP_DATASET_HPP_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gcap/captioner.hpp"
#include "gcap/container.hpp"
#include "gcap/decoder.hpp"
#include "gcap/proposals.hpp"
#include "gcap/semantics.hpp"

namespace gcap {

// On-disk corpus layout (written by synth, consumed by everything else):
//   corpus.json           global metadata
//   videos.jsonl          {video_id, split, n_frames}
//   references.jsonl      {video_id, sentence_id, sentence}
//   annotations.jsonl     {video_id, sentence_id, svo: [s|null, v|null, o|null]}
//   .alignment.jsonl      evaluation-only sidecar with the planted grounding
//   features/<id>.gcap        tensor "descriptors", one row per proposal (D wide)
//   features/<id>.cls.gcap    tensor "cls", one row per frame (C wide)
//   features/<id>.det.gcap    tensor "det", one row per frame (6*max_dets wide)
//   proposals/<id>.jsonl  {id, first_frame, boxes, descriptor_offset}
// A container file carries a single row width, so each payload family gets
// its own file with its natural width.
struct CorpusPaths {
  std::filesystem::path root;

  std::filesystem::path meta() const { return root / "corpus.json"; }
  std::filesystem::path videos() const { return root / "videos.jsonl"; }
  std::filesystem::path references() const { return root / "references.jsonl"; }
  std::filesystem::path annotations() const { return root / "annotations.jsonl"; }
  std::filesystem::path alignment() const { return root / ".alignment.jsonl"; }
  std::filesystem::path features(const std::string& id) const {
    return root / "features" / (id + ".gcap");
  }
  std::filesystem::path cls_scores(const std::string& id) const {
    return root / "features" / (id + ".cls.gcap");
  }
  std::filesystem::path detections(const std::string& id) const {
    return root / "features" / (id + ".det.gcap");
  }
  std::filesystem::path proposals(const std::string& id) const {
    return root / "proposals" / (id + ".jsonl");
  }
};

struct CorpusMeta {
  size_t descriptor_dim = 0;
  size_t proposals_per_video = 0;  // m
  size_t cls_classes = 0;
  size_t det_classes = 0;
  size_t max_dets_per_frame = 0;
  double frame_width = 0;
  double frame_height = 0;

  void save(const std::filesystem::path& file) const;
  static CorpusMeta load(const std::filesystem::path& file);
};

struct VideoMeta {
  std::string video_id;
  std::string split;  // train | val | test
  int n_frames = 0;
};

struct ReferenceSentence {
  std::string video_id;
  int sentence_id = 0;
  std::string sentence;
};

struct PlantedAlignment {
  std::string video_id;
  int64_t subject_proposal_id = 0;
  int64_t object_proposal_id = 0;
  std::string subject_word;
  std::string object_word;
};

std::vector<VideoMeta> load_videos(const std::filesystem::path& file);
std::vector<ReferenceSentence> load_references(const std::filesystem::path& file);
std::vector<VideoAnnotations> load_annotations(const std::filesystem::path& file);
std::vector<PlantedAlignment> load_alignment(const std::filesystem::path& file);

void save_videos(const std::filesystem::path& file, std::span<const VideoMeta> rows);
void save_references(const std::filesystem::path& file, std::span<const ReferenceSentence> rows);
void save_annotations(const std::filesystem::path& file, std::span<const VideoAnnotations> rows);
void save_alignment(const std::filesystem::path& file, std::span<const PlantedAlignment> rows);

// Proposal records round-trip against JSON lines + the descriptor tensor.
void save_proposals(const std::filesystem::path& file, std::span<const ProposalRecord> records);
std::vector<ProposalRecord> load_proposals(const std::filesystem::path& file,
                                           const FeatureContainer& features);

// Per-frame classification scores from the "cls" tensor.
std::vector<Vec<double>> frame_cls_scores(const FeatureContainer& c, size_t cls_classes);
// Per-frame detections from the "det" tensor (slot encoding
// [class, score, x1, y1, x2, y2], score < 0 marks an empty slot).
std::vector<std::vector<FrameDetection>> frame_detections(const FeatureContainer& c,
                                                          size_t max_dets);
// frames x det_classes matrix of per-class per-frame maxima.
Matrix<double> detection_class_max(const std::vector<std::vector<FrameDetection>>& dets,
                                   size_t det_classes);

// SVO vocabulary persisted as three token-per-line files in one directory.
void save_svo_vocabulary(const SvoVocabulary& vocab, const std::filesystem::path& dir);
SvoVocabulary load_svo_vocabulary(const std::filesystem::path& dir);

// Scores the pooled proposals of one video and selects the top-m rows.
template <typename T>
ProposalFeatureSet<T> prepare_features(const CorpusPaths& corpus, const CorpusMeta& meta,
                                       const std::string& video_id, size_t m);

struct SemanticOptions {
  SemanticSubset subset;
  size_t det_window = 25;
  const FeatureContainer* svo_responses = nullptr;  // tensor per video_id
};

// Assembles the semantic descriptor for one video per the active subset.
SemanticFeature video_semantic_feature(const CorpusPaths& corpus, const CorpusMeta& meta,
                                       const std::string& video_id,
                                       const SemanticOptions& opts);

// One TrainingExample per (video, reference sentence) of the split.
template <typename T>
std::vector<TrainingExample<T>> build_training_set(const CorpusPaths& corpus,
                                                   const CorpusMeta& meta,
                                                   const std::string& split,
                                                   const Vocabulary& vocab, size_t m,
                                                   const SemanticOptions& sem);

// Decoded caption plus its attention trace, as written by `generate`.
struct TraceEntry {
  std::string word;
  int t = 0;
  std::vector<double> beta;
  size_t argmax = 0;
};

struct CaptionRecord {
  std::string video_id;
  std::string sentence;
  double log_prob = 0;
  bool finished = true;
  std::vector<int64_t> proposal_ids;  // feature-row order, valid rows only
  std::vector<TraceEntry> trace;
};

void save_captions(const std::filesystem::path& file, std::span<const CaptionRecord> rows);
std::vector<CaptionRecord> load_captions(const std::filesystem::path& file);

struct GroundingRecord {
  std::string video_id;
  std::string sentence;
  double log_prob = 0;
  std::vector<GroundedWord> words;
};

void save_grounding(const std::filesystem::path& file, std::span<const GroundingRecord> rows);

// Token accuracy of candidates against their closest reference: per video the
// best over references of (matching positions / max length), then the mean.
double token_accuracy(std::span<const CaptionRecord> captions,
                      std::span<const ReferenceSentence> references);

// Fraction of emitted subject/object word instances whose argmax-beta
// proposal equals the planted one. Unresolvable rows count as misses.
struct GroundingEval {
  size_t total = 0;
  size_t correct = 0;
  double accuracy() const { return total ? static_cast<double>(correct) / total : 0.0; }
};
GroundingEval grounding_accuracy(std::span<const CaptionRecord> captions,
                                 std::span<const PlantedAlignment> alignment);

}  // namespace gcap

#endif  // GCAP_DATASET_HPP_
