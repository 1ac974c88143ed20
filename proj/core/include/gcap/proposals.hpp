#ifndef GCAP_PROPOSALS_HPP_
#define GCAP_PROPOSALS_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "gcap/tensor.hpp"

namespace gcap {

struct BoundingBox {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
  double area() const { return (x2 - x1) * (y2 - y1); }
};

// Intersection over union of two boxes; 0 when disjoint or the union is
// degenerate.
double iou_2d(const BoundingBox& a, const BoundingBox& b);

// One spatio-temporal proposal: a tube of per-frame boxes plus its
// externally computed mean-pooled descriptor.
struct ProposalRecord {
  int64_t id = 0;
  int first_frame = 0;
  std::vector<BoundingBox> boxes;  // one per spanned frame
  std::vector<float> descriptor;   // D entries

  int last_frame() const { return first_frame + static_cast<int>(boxes.size()) - 1; }
  int span_frames() const { return static_cast<int>(boxes.size()); }
};

// Volumetric spatio-temporal IoU: summed per-frame intersection area over
// summed per-frame union area across the union of the two spans. Frames
// covered by only one proposal contribute that box's area to the union.
double st_iou(const ProposalRecord& a, const ProposalRecord& b);

struct ScoredProposal {
  ProposalRecord prop;
  double score = 0;
};

struct FilterConfig {
  int min_frames = 15;
  double min_area_fraction = 0.005;  // fraction of the frame area
  double dedup_threshold = 0.5;
  double frame_width = 0;
  double frame_height = 0;
};

// Drops proposals with small temporal or spatial extent, then greedily
// dedups in descending score order: a proposal is discarded when its st_iou
// with an already kept one exceeds cfg.dedup_threshold.
std::vector<ScoredProposal> filter_pool(std::vector<ScoredProposal> pool,
                                        const FilterConfig& cfg);

struct FrameDetection {
  BoundingBox box;
  int cls = 0;
  double score = 0;
};

// Semantic score of one proposal: the mean over its span of the per-frame
// classification maximum, averaged with the mean over its span of the best
// IoU-weighted detection score.
double score_proposal(const ProposalRecord& prop,
                      std::span<const std::vector<double>> frame_cls,
                      std::span<const std::vector<FrameDetection>> frame_dets);

// The m x D temporal visual feature P: top-m proposal descriptors plus the
// validity mask; padded rows are all zero and ignored downstream.
template <typename T>
struct ProposalFeatureSet {
  Matrix<T> features;               // m x D
  std::vector<uint8_t> valid_mask;  // m entries, first k true
  std::vector<int64_t> source_ids;  // proposal id per valid row

  size_t valid_count() const {
    size_t k = 0;
    for (auto v : valid_mask) k += v ? 1 : 0;
    return k;
  }
};

// Top-m by score descending (ties broken by lower id); pads with zero rows
// when the pool is smaller than m. Rejects an empty pool.
template <typename T>
ProposalFeatureSet<T> select_and_pad(std::span<const ScoredProposal> pool, size_t m);

}  // namespace gcap

#endif  // GCAP_PROPOSALS_HPP_
