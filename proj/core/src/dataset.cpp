#include "gcap/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "json.hpp"

#include "gcap/vocab.hpp"

namespace gcap {

using nlohmann::json;

namespace {

std::vector<json> read_jsonl(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw ValidationError("cannot open " + file.string());
  std::vector<json> rows;
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw ValidationError(file.string() + ":" + std::to_string(lineno) + ": bad JSON: " +
                            e.what());
    }
  }
  return rows;
}

class JsonlWriter {
 public:
  explicit JsonlWriter(const std::filesystem::path& file) : os_(file, std::ios::trunc) {
    if (!os_) throw ValidationError("cannot open " + file.string() + " for writing");
  }
  void row(const json& j) { os_ << j.dump() << "\n"; }

 private:
  std::ofstream os_;
};

}  // namespace

void CorpusMeta::save(const std::filesystem::path& file) const {
  json j;
  j["descriptor_dim"] = descriptor_dim;
  j["proposals_per_video"] = proposals_per_video;
  j["cls_classes"] = cls_classes;
  j["det_classes"] = det_classes;
  j["max_dets_per_frame"] = max_dets_per_frame;
  j["frame_width"] = frame_width;
  j["frame_height"] = frame_height;
  std::ofstream os(file);
  if (!os) throw ValidationError("CorpusMeta::save: cannot open " + file.string());
  os << j.dump(2) << "\n";
}

CorpusMeta CorpusMeta::load(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw ValidationError("CorpusMeta::load: cannot open " + file.string());
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw ValidationError("CorpusMeta::load: bad JSON in " + file.string() + ": " + e.what());
  }
  CorpusMeta m;
  m.descriptor_dim = j.at("descriptor_dim").get<size_t>();
  m.proposals_per_video = j.at("proposals_per_video").get<size_t>();
  m.cls_classes = j.at("cls_classes").get<size_t>();
  m.det_classes = j.at("det_classes").get<size_t>();
  m.max_dets_per_frame = j.at("max_dets_per_frame").get<size_t>();
  m.frame_width = j.at("frame_width").get<double>();
  m.frame_height = j.at("frame_height").get<double>();
  return m;
}

std::vector<VideoMeta> load_videos(const std::filesystem::path& file) {
  std::vector<VideoMeta> out;
  for (const auto& j : read_jsonl(file)) {
    out.push_back({j.at("video_id").get<std::string>(), j.at("split").get<std::string>(),
                   j.at("n_frames").get<int>()});
  }
  return out;
}

void save_videos(const std::filesystem::path& file, std::span<const VideoMeta> rows) {
  JsonlWriter w(file);
  for (const auto& r : rows) {
    w.row({{"video_id", r.video_id}, {"split", r.split}, {"n_frames", r.n_frames}});
  }
}

std::vector<ReferenceSentence> load_references(const std::filesystem::path& file) {
  std::vector<ReferenceSentence> out;
  for (const auto& j : read_jsonl(file)) {
    out.push_back({j.at("video_id").get<std::string>(), j.at("sentence_id").get<int>(),
                   j.at("sentence").get<std::string>()});
  }
  return out;
}

void save_references(const std::filesystem::path& file,
                     std::span<const ReferenceSentence> rows) {
  JsonlWriter w(file);
  for (const auto& r : rows) {
    w.row({{"video_id", r.video_id}, {"sentence_id", r.sentence_id}, {"sentence", r.sentence}});
  }
}

std::vector<VideoAnnotations> load_annotations(const std::filesystem::path& file) {
  std::vector<VideoAnnotations> out;
  std::map<std::string, size_t> by_id;
  for (const auto& j : read_jsonl(file)) {
    const std::string id = j.at("video_id").get<std::string>();
    auto [it, inserted] = by_id.try_emplace(id, out.size());
    if (inserted) out.push_back({id, {}});
    const auto& svo = j.at("svo");
    if (!svo.is_array() || svo.size() != 3) {
      throw ValidationError(file.string() + ": svo must be a 3-element array");
    }
    SvoTriplet t;
    if (!svo[0].is_null()) t.subject = svo[0].get<std::string>();
    if (!svo[1].is_null()) t.verb = svo[1].get<std::string>();
    if (!svo[2].is_null()) t.object = svo[2].get<std::string>();
    if (!t.subject && !t.verb && !t.object) {
      throw ValidationError(file.string() + ": triplet with all fields null");
    }
    out[it->second].triplets.push_back(std::move(t));
  }
  return out;
}

void save_annotations(const std::filesystem::path& file,
                      std::span<const VideoAnnotations> rows) {
  JsonlWriter w(file);
  for (const auto& video : rows) {
    int sid = 0;
    for (const auto& t : video.triplets) {
      json svo = json::array();
      svo.push_back(t.subject ? json(*t.subject) : json(nullptr));
      svo.push_back(t.verb ? json(*t.verb) : json(nullptr));
      svo.push_back(t.object ? json(*t.object) : json(nullptr));
      w.row({{"video_id", video.video_id}, {"sentence_id", sid++}, {"svo", svo}});
    }
  }
}

std::vector<PlantedAlignment> load_alignment(const std::filesystem::path& file) {
  std::vector<PlantedAlignment> out;
  for (const auto& j : read_jsonl(file)) {
    out.push_back({j.at("video_id").get<std::string>(),
                   j.at("subject_proposal_id").get<int64_t>(),
                   j.at("object_proposal_id").get<int64_t>(),
                   j.at("subject_word").get<std::string>(),
                   j.at("object_word").get<std::string>()});
  }
  return out;
}

void save_alignment(const std::filesystem::path& file, std::span<const PlantedAlignment> rows) {
  JsonlWriter w(file);
  for (const auto& r : rows) {
    w.row({{"video_id", r.video_id},
           {"subject_proposal_id", r.subject_proposal_id},
           {"object_proposal_id", r.object_proposal_id},
           {"subject_word", r.subject_word},
           {"object_word", r.object_word}});
  }
}

void save_proposals(const std::filesystem::path& file, std::span<const ProposalRecord> records) {
  JsonlWriter w(file);
  int64_t offset = 0;
  for (const auto& p : records) {
    json boxes = json::array();
    for (const auto& b : p.boxes) boxes.push_back({b.x1, b.y1, b.x2, b.y2});
    w.row({{"id", p.id},
           {"first_frame", p.first_frame},
           {"boxes", boxes},
           {"descriptor_offset", offset}});
    ++offset;
  }
}

std::vector<ProposalRecord> load_proposals(const std::filesystem::path& file,
                                           const FeatureContainer& features) {
  const auto desc = features.tensor("descriptors");
  const size_t d = features.cols();
  const size_t n_rows = desc.size() / std::max<size_t>(1, d);

  std::vector<ProposalRecord> out;
  for (const auto& j : read_jsonl(file)) {
    ProposalRecord p;
    p.id = j.at("id").get<int64_t>();
    p.first_frame = j.at("first_frame").get<int>();
    for (const auto& b : j.at("boxes")) {
      if (!b.is_array() || b.size() != 4) {
        throw ValidationError(file.string() + ": box must be [x1,y1,x2,y2]");
      }
      const BoundingBox box{b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                            b[3].get<double>()};
      if (!(box.x1 <= box.x2) || !(box.y1 <= box.y2)) {
        throw ValidationError(file.string() + ": proposal " + std::to_string(p.id) +
                              " has an inverted box");
      }
      p.boxes.push_back(box);
    }
    if (p.boxes.empty()) throw ValidationError(file.string() + ": proposal with no boxes");
    const auto row = j.at("descriptor_offset").get<int64_t>();
    if (row < 0 || static_cast<size_t>(row) >= n_rows) {
      throw ValidationError(file.string() + ": descriptor_offset " + std::to_string(row) +
                            " outside the descriptor tensor");
    }
    p.descriptor.assign(desc.begin() + static_cast<size_t>(row) * d,
                        desc.begin() + (static_cast<size_t>(row) + 1) * d);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<Vec<double>> frame_cls_scores(const FeatureContainer& c, size_t cls_classes) {
  const auto t = c.tensor("cls");
  if (c.cols() != cls_classes) {
    throw ValidationError("frame_cls_scores: container cols " + std::to_string(c.cols()) +
                          " != expected " + std::to_string(cls_classes));
  }
  const size_t frames = t.size() / cls_classes;
  std::vector<Vec<double>> out(frames);
  for (size_t f = 0; f < frames; ++f) {
    out[f].assign(t.begin() + f * cls_classes, t.begin() + (f + 1) * cls_classes);
  }
  return out;
}

std::vector<std::vector<FrameDetection>> frame_detections(const FeatureContainer& c,
                                                          size_t max_dets) {
  const auto t = c.tensor("det");
  const size_t slot = 6;
  const size_t row_width = c.cols();
  if (row_width != max_dets * slot) {
    throw ValidationError("frame_detections: container cols " + std::to_string(row_width) +
                          " != 6*max_dets " + std::to_string(max_dets * slot));
  }
  const size_t frames = t.size() / row_width;
  std::vector<std::vector<FrameDetection>> out(frames);
  for (size_t f = 0; f < frames; ++f) {
    for (size_t s = 0; s < max_dets; ++s) {
      const float* p = t.data() + f * row_width + s * slot;
      if (p[1] < 0) continue;  // empty slot
      FrameDetection det;
      det.cls = static_cast<int>(p[0]);
      det.score = static_cast<double>(p[1]);
      det.box = {static_cast<double>(p[2]), static_cast<double>(p[3]),
                 static_cast<double>(p[4]), static_cast<double>(p[5])};
      out[f].push_back(det);
    }
  }
  return out;
}

Matrix<double> detection_class_max(const std::vector<std::vector<FrameDetection>>& dets,
                                   size_t det_classes) {
  Matrix<double> out(dets.size(), det_classes);
  for (size_t f = 0; f < dets.size(); ++f) {
    for (const auto& d : dets[f]) {
      if (d.cls < 0 || static_cast<size_t>(d.cls) >= det_classes) {
        throw ValidationError("detection_class_max: class id " + std::to_string(d.cls) +
                              " out of range");
      }
      out.at(f, static_cast<size_t>(d.cls)) =
          std::max(out.at(f, static_cast<size_t>(d.cls)), d.score);
    }
  }
  return out;
}

namespace {

void save_token_list(const std::filesystem::path& file, std::span<const std::string> tokens) {
  std::ofstream os(file);
  if (!os) throw ValidationError("cannot open " + file.string() + " for writing");
  for (const auto& t : tokens) os << t << "\n";
}

std::vector<std::string> load_token_list(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw ValidationError("cannot open " + file.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

}  // namespace

void save_svo_vocabulary(const SvoVocabulary& vocab, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_token_list(dir / "subjects.txt", vocab.subjects);
  save_token_list(dir / "verbs.txt", vocab.verbs);
  save_token_list(dir / "objects.txt", vocab.objects);
}

SvoVocabulary load_svo_vocabulary(const std::filesystem::path& dir) {
  SvoVocabulary v;
  v.subjects = load_token_list(dir / "subjects.txt");
  v.verbs = load_token_list(dir / "verbs.txt");
  v.objects = load_token_list(dir / "objects.txt");
  return v;
}

template <typename T>
ProposalFeatureSet<T> prepare_features(const CorpusPaths& corpus, const CorpusMeta& meta,
                                       const std::string& video_id, size_t m) {
  const FeatureContainer desc = FeatureContainer::load(corpus.features(video_id));
  std::vector<ProposalRecord> pool = load_proposals(corpus.proposals(video_id), desc);
  const auto cls =
      frame_cls_scores(FeatureContainer::load(corpus.cls_scores(video_id)), meta.cls_classes);
  const auto dets = frame_detections(FeatureContainer::load(corpus.detections(video_id)),
                                     meta.max_dets_per_frame);

  std::vector<ScoredProposal> scored;
  scored.reserve(pool.size());
  for (auto& p : pool) {
    const double s = score_proposal(p, cls, dets);
    scored.push_back({std::move(p), s});
  }
  return select_and_pad<T>(scored, m);
}

SemanticFeature video_semantic_feature(const CorpusPaths& corpus, const CorpusMeta& meta,
                                       const std::string& video_id,
                                       const SemanticOptions& opts) {
  Vec<double> svo, cls, det;
  const Vec<double>* svo_p = nullptr;
  const Vec<double>* cls_p = nullptr;
  const Vec<double>* det_p = nullptr;

  if (opts.subset.svo) {
    if (!opts.svo_responses) {
      throw ValidationError("semantic subset includes svo but no response container was given");
    }
    const auto t = opts.svo_responses->tensor(video_id);
    svo.assign(t.begin(), t.end());
    svo_p = &svo;
  }
  if (opts.subset.cls) {
    cls = pool_cls_scores(frame_cls_scores(
        FeatureContainer::load(corpus.cls_scores(video_id)), meta.cls_classes));
    cls_p = &cls;
  }
  if (opts.subset.det) {
    const auto dets = frame_detections(FeatureContainer::load(corpus.detections(video_id)),
                                       meta.max_dets_per_frame);
    det = pool_det_scores(detection_class_max(dets, meta.det_classes), opts.det_window);
    det_p = &det;
  }
  return assemble_semantic(svo_p, cls_p, det_p, opts.subset);
}

template <typename T>
std::vector<TrainingExample<T>> build_training_set(const CorpusPaths& corpus,
                                                   const CorpusMeta& meta,
                                                   const std::string& split,
                                                   const Vocabulary& vocab, size_t m,
                                                   const SemanticOptions& sem) {
  const auto videos = load_videos(corpus.videos());
  const auto references = load_references(corpus.references());

  std::map<std::string, std::vector<const ReferenceSentence*>> refs_by_id;
  for (const auto& r : references) refs_by_id[r.video_id].push_back(&r);

  std::vector<TrainingExample<T>> out;
  for (const auto& v : videos) {
    if (v.split != split) continue;
    auto it = refs_by_id.find(v.video_id);
    if (it == refs_by_id.end()) {
      throw ValidationError("video '" + v.video_id + "' has no reference sentences");
    }
    ProposalFeatureSet<T> features = prepare_features<T>(corpus, meta, v.video_id, m);
    std::optional<Vec<T>> semantic;
    if (sem.subset.any()) {
      const SemanticFeature f = video_semantic_feature(corpus, meta, v.video_id, sem);
      semantic = Vec<T>(f.values.begin(), f.values.end());
    }
    for (const ReferenceSentence* r : it->second) {
      TrainingExample<T> e;
      e.video_id = v.video_id;
      e.features = features;
      e.semantic = semantic;
      e.target = encode(r->sentence, vocab);
      out.push_back(std::move(e));
    }
  }
  return out;
}

void save_captions(const std::filesystem::path& file, std::span<const CaptionRecord> rows) {
  JsonlWriter w(file);
  for (const auto& r : rows) {
    json trace = json::array();
    for (const auto& t : r.trace) {
      trace.push_back({{"word", t.word},
                       {"t", t.t},
                       {"beta", t.beta},
                       {"argmax_proposal", t.argmax}});
    }
    w.row({{"video_id", r.video_id},
           {"sentence", r.sentence},
           {"log_prob", r.log_prob},
           {"finished", r.finished},
           {"proposal_ids", r.proposal_ids},
           {"trace", trace}});
  }
}

std::vector<CaptionRecord> load_captions(const std::filesystem::path& file) {
  std::vector<CaptionRecord> out;
  for (const auto& j : read_jsonl(file)) {
    CaptionRecord r;
    r.video_id = j.at("video_id").get<std::string>();
    r.sentence = j.at("sentence").get<std::string>();
    r.log_prob = j.value("log_prob", 0.0);
    r.finished = j.value("finished", true);
    if (j.contains("proposal_ids")) {
      r.proposal_ids = j.at("proposal_ids").get<std::vector<int64_t>>();
    }
    if (j.contains("trace")) {
      for (const auto& t : j.at("trace")) {
        TraceEntry e;
        e.word = t.at("word").get<std::string>();
        e.t = t.at("t").get<int>();
        e.beta = t.at("beta").get<std::vector<double>>();
        e.argmax = t.at("argmax_proposal").get<size_t>();
        r.trace.push_back(std::move(e));
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

void save_grounding(const std::filesystem::path& file, std::span<const GroundingRecord> rows) {
  JsonlWriter w(file);
  for (const auto& r : rows) {
    json words = json::array();
    for (const auto& g : r.words) {
      words.push_back({{"word", g.word},
                       {"t", g.t},
                       {"proposal_id", g.proposal_id},
                       {"beta", g.beta},
                       {"first_frame", g.first_frame},
                       {"last_frame", g.last_frame}});
    }
    w.row({{"video_id", r.video_id},
           {"sentence", r.sentence},
           {"log_prob", r.log_prob},
           {"grounding", words}});
  }
}

double token_accuracy(std::span<const CaptionRecord> captions,
                      std::span<const ReferenceSentence> references) {
  if (captions.empty()) throw ValidationError("token_accuracy: no captions");
  std::map<std::string, std::vector<std::vector<std::string>>> refs;
  for (const auto& r : references) refs[r.video_id].push_back(tokenize(r.sentence));

  double sum = 0;
  for (const auto& c : captions) {
    auto it = refs.find(c.video_id);
    if (it == refs.end()) {
      throw ValidationError("token_accuracy: no references for video '" + c.video_id + "'");
    }
    const auto cand = tokenize(c.sentence);
    double best = 0;
    for (const auto& ref : it->second) {
      const size_t overlap = std::min(cand.size(), ref.size());
      size_t match = 0;
      for (size_t i = 0; i < overlap; ++i) {
        if (cand[i] == ref[i]) ++match;
      }
      const size_t denom = std::max(cand.size(), ref.size());
      if (denom) best = std::max(best, static_cast<double>(match) / denom);
    }
    sum += best;
  }
  return sum / static_cast<double>(captions.size());
}

GroundingEval grounding_accuracy(std::span<const CaptionRecord> captions,
                                 std::span<const PlantedAlignment> alignment) {
  std::map<std::string, const PlantedAlignment*> by_id;
  for (const auto& a : alignment) by_id[a.video_id] = &a;

  GroundingEval eval;
  for (const auto& c : captions) {
    auto it = by_id.find(c.video_id);
    if (it == by_id.end()) continue;
    const PlantedAlignment& planted = *it->second;
    for (const auto& t : c.trace) {
      const bool is_subject = t.word == planted.subject_word;
      const bool is_object = t.word == planted.object_word;
      if (!is_subject && !is_object) continue;
      ++eval.total;
      if (t.argmax >= c.proposal_ids.size()) continue;  // padded row, counts as a miss
      const int64_t chosen = c.proposal_ids[t.argmax];
      const int64_t wanted =
          is_subject ? planted.subject_proposal_id : planted.object_proposal_id;
      if (chosen == wanted) ++eval.correct;
    }
  }
  return eval;
}

template ProposalFeatureSet<float> prepare_features<float>(const CorpusPaths&, const CorpusMeta&,
                                                           const std::string&, size_t);
template ProposalFeatureSet<double> prepare_features<double>(const CorpusPaths&,
                                                             const CorpusMeta&,
                                                             const std::string&, size_t);
template std::vector<TrainingExample<float>> build_training_set<float>(
    const CorpusPaths&, const CorpusMeta&, const std::string&, const Vocabulary&, size_t,
    const SemanticOptions&);
template std::vector<TrainingExample<double>> build_training_set<double>(
    const CorpusPaths&, const CorpusMeta&, const std::string&, const Vocabulary&, size_t,
    const SemanticOptions&);

}  // namespace gcap
