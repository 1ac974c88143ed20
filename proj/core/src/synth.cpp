#include "gcap/synth.hpp"

#include <algorithm>
#include <cstdio>

namespace gcap {

namespace {

struct VideoPlan {
  std::string id;
  std::string split;
  size_t n_frames = 0;
  size_t subject = 0, verb = 0, object = 0;
  size_t subject_pos = 0, object_pos = 0;  // proposal slots carrying identity
};

BoundingBox random_box(RandomStream& rng, double frame_w, double frame_h) {
  const double w = frame_w * rng.next_uniform(0.2, 0.6);
  const double h = frame_h * rng.next_uniform(0.2, 0.6);
  const double x1 = rng.next_uniform(0.0, frame_w - w);
  const double y1 = rng.next_uniform(0.0, frame_h - h);
  return {x1, y1, x1 + w, y1 + h};
}

}  // namespace

void synth_corpus(const SyntheticCorpusSpec& spec, const std::filesystem::path& out_dir) {
  if (spec.subjects.size() < 2 || spec.verbs.size() < 2 || spec.objects.size() < 2) {
    throw ValidationError("synth_corpus: each word list needs at least 2 entries");
  }
  const size_t encode_width = spec.subjects.size() + spec.objects.size();
  if (spec.descriptor_dim < encode_width) {
    throw ValidationError("synth_corpus: descriptor_dim " +
                          std::to_string(spec.descriptor_dim) +
                          " too small for the identity encoding width " +
                          std::to_string(encode_width));
  }
  if (spec.proposals_per_video < 2) {
    throw ValidationError("synth_corpus: need at least 2 proposals per video");
  }
  if (spec.min_frames < 16 || spec.max_frames < spec.min_frames) {
    throw ValidationError("synth_corpus: bad frame-count range");
  }
  if (spec.n_train + spec.n_val + spec.n_test == 0) {
    throw ValidationError("synth_corpus: no videos requested");
  }

  CorpusPaths corpus{out_dir};
  std::filesystem::create_directories(out_dir / "features");
  std::filesystem::create_directories(out_dir / "proposals");

  CorpusMeta meta;
  meta.descriptor_dim = spec.descriptor_dim;
  meta.proposals_per_video = spec.proposals_per_video;
  meta.cls_classes = spec.cls_classes;
  meta.det_classes = spec.det_classes;
  meta.max_dets_per_frame = spec.max_dets_per_frame;
  meta.frame_width = spec.frame_width;
  meta.frame_height = spec.frame_height;
  meta.save(corpus.meta());

  RandomStream rng(spec.seed);
  const size_t total = spec.n_train + spec.n_val + spec.n_test;

  std::vector<VideoMeta> videos;
  std::vector<ReferenceSentence> references;
  std::vector<VideoAnnotations> annotations;
  std::vector<PlantedAlignment> alignment;

  for (size_t vi = 0; vi < total; ++vi) {
    VideoPlan plan;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "vid%04zu", vi);
    plan.id = buf;
    plan.split = vi < spec.n_train ? "train" : (vi < spec.n_train + spec.n_val ? "val" : "test");
    plan.n_frames =
        spec.min_frames + rng.next_index(spec.max_frames - spec.min_frames + 1);
    plan.subject = rng.next_index(spec.subjects.size());
    plan.object = rng.next_index(spec.objects.size());
    plan.verb = (plan.subject * 31 + plan.object * 17) % spec.verbs.size();
    plan.subject_pos = rng.next_index(spec.proposals_per_video);
    plan.object_pos = rng.next_index(spec.proposals_per_video - 1);
    if (plan.object_pos >= plan.subject_pos) ++plan.object_pos;

    const std::string& s = spec.subjects[plan.subject];
    const std::string& v = spec.verbs[plan.verb];
    const std::string& o = spec.objects[plan.object];

    videos.push_back({plan.id, plan.split, static_cast<int>(plan.n_frames)});
    references.push_back({plan.id, 0, "a " + s + " is " + v + " a " + o});
    references.push_back({plan.id, 1, "the " + s + " is " + v + " the " + o});
    annotations.push_back({plan.id, {SvoTriplet{s, v, o}, SvoTriplet{s, v, o}}});

    // proposals + descriptors
    std::vector<ProposalRecord> proposals;
    std::vector<float> descriptors;
    for (size_t pi = 0; pi < spec.proposals_per_video; ++pi) {
      ProposalRecord p;
      p.id = static_cast<int64_t>(pi);
      const size_t span = 15 + rng.next_index(plan.n_frames - 15 + 1);
      p.first_frame = static_cast<int>(rng.next_index(plan.n_frames - span + 1));
      BoundingBox base = random_box(rng, spec.frame_width, spec.frame_height);
      for (size_t f = 0; f < span; ++f) {
        BoundingBox b = base;
        const double dx = rng.next_uniform(-2.0, 2.0);
        const double dy = rng.next_uniform(-2.0, 2.0);
        b.x1 = std::clamp(b.x1 + dx, 0.0, spec.frame_width - 1);
        b.x2 = std::clamp(b.x2 + dx, b.x1 + 1, spec.frame_width);
        b.y1 = std::clamp(b.y1 + dy, 0.0, spec.frame_height - 1);
        b.y2 = std::clamp(b.y2 + dy, b.y1 + 1, spec.frame_height);
        p.boxes.push_back(b);
      }
      p.descriptor.assign(spec.descriptor_dim, 0.0f);
      for (auto& x : p.descriptor) {
        x = static_cast<float>(spec.noise * rng.next_gaussian());
      }
      if (pi == plan.subject_pos) {
        p.descriptor[plan.subject] += 1.0f;
      } else if (pi == plan.object_pos) {
        p.descriptor[spec.subjects.size() + plan.object] += 1.0f;
      }
      descriptors.insert(descriptors.end(), p.descriptor.begin(), p.descriptor.end());
      proposals.push_back(std::move(p));
    }

    alignment.push_back({plan.id, static_cast<int64_t>(plan.subject_pos),
                         static_cast<int64_t>(plan.object_pos), s, o});

    // per-frame classification scores and detections
    std::vector<float> cls(plan.n_frames * spec.cls_classes);
    for (auto& x : cls) x = static_cast<float>(rng.next_uniform());
    std::vector<float> det(plan.n_frames * spec.max_dets_per_frame * 6, 0.0f);
    for (size_t f = 0; f < plan.n_frames; ++f) {
      const size_t n_det = rng.next_index(spec.max_dets_per_frame + 1);
      for (size_t di = 0; di < spec.max_dets_per_frame; ++di) {
        float* slot = det.data() + (f * spec.max_dets_per_frame + di) * 6;
        if (di >= n_det) {
          slot[1] = -1.0f;  // empty slot marker
          continue;
        }
        const BoundingBox b = random_box(rng, spec.frame_width, spec.frame_height);
        slot[0] = static_cast<float>(rng.next_index(spec.det_classes));
        slot[1] = static_cast<float>(rng.next_uniform());
        slot[2] = static_cast<float>(b.x1);
        slot[3] = static_cast<float>(b.y1);
        slot[4] = static_cast<float>(b.x2);
        slot[5] = static_cast<float>(b.y2);
      }
    }

    FeatureContainer desc_c(static_cast<uint32_t>(spec.descriptor_dim));
    desc_c.add_tensor("descriptors", descriptors,
                      static_cast<uint32_t>(spec.proposals_per_video));
    desc_c.save(corpus.features(plan.id));

    FeatureContainer cls_c(static_cast<uint32_t>(spec.cls_classes));
    cls_c.add_tensor("cls", cls, static_cast<uint32_t>(plan.n_frames));
    cls_c.save(corpus.cls_scores(plan.id));

    FeatureContainer det_c(static_cast<uint32_t>(spec.max_dets_per_frame * 6));
    det_c.add_tensor("det", det, static_cast<uint32_t>(plan.n_frames));
    det_c.save(corpus.detections(plan.id));

    save_proposals(corpus.proposals(plan.id), proposals);
  }

  save_videos(corpus.videos(), videos);
  save_references(corpus.references(), references);
  save_annotations(corpus.annotations(), annotations);
  save_alignment(corpus.alignment(), alignment);
}

}  // namespace gcap
