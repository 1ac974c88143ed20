#ifndef GCAP_SYNTH_HPP_
#define GCAP_SYNTH_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "gcap/dataset.hpp"

namespace gcap {

// Desk-scale synthetic corpus. Every video pairs one subject with one
// object; exactly one proposal descriptor carries the subject identity as a
// one-hot block and one carries the object identity, the rest are noise.
// The verb is a fixed function of (subject, object), so its visual evidence
// is diffuse by construction. The planted word<->proposal alignment goes to
// a hidden sidecar that only evaluation reads.
struct SyntheticCorpusSpec {
  size_t n_train = 200;
  size_t n_val = 20;
  size_t n_test = 50;
  size_t proposals_per_video = 8;  // m
  size_t descriptor_dim = 32;      // D, must cover |subjects| + |objects|
  double noise = 0.1;              // sigma of the added Gaussian noise
  uint64_t seed = 1;

  std::vector<std::string> subjects = {"cat", "dog", "man", "woman", "boy", "girl"};
  std::vector<std::string> verbs = {"chasing", "holding", "riding", "pushing", "eating",
                                    "watching"};
  std::vector<std::string> objects = {"ball", "toy", "guitar", "box", "apple", "bike"};

  size_t min_frames = 40;
  size_t max_frames = 80;
  double frame_width = 320;
  double frame_height = 240;
  size_t cls_classes = 16;
  size_t det_classes = 8;
  size_t max_dets_per_frame = 4;
};

// Writes the corpus under out_dir; byte-identical for identical specs.
void synth_corpus(const SyntheticCorpusSpec& spec, const std::filesystem::path& out_dir);

}  // namespace gcap

#endif  // GCAP_SYNTH_HPP_
