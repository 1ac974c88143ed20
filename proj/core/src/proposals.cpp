#include "gcap/proposals.hpp"

#include <algorithm>
#include <cmath>

#include "gcap/common.hpp"

namespace gcap {

double iou_2d(const BoundingBox& a, const BoundingBox& b) {
  const double ix1 = std::max(a.x1, b.x1);
  const double iy1 = std::max(a.y1, b.y1);
  const double ix2 = std::min(a.x2, b.x2);
  const double iy2 = std::min(a.y2, b.y2);
  const double inter = std::max(0.0, ix2 - ix1) * std::max(0.0, iy2 - iy1);
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

double st_iou(const ProposalRecord& a, const ProposalRecord& b) {
  const int first = std::min(a.first_frame, b.first_frame);
  const int last = std::max(a.last_frame(), b.last_frame());
  double inter_sum = 0, union_sum = 0;
  for (int f = first; f <= last; ++f) {
    const bool in_a = f >= a.first_frame && f <= a.last_frame();
    const bool in_b = f >= b.first_frame && f <= b.last_frame();
    if (in_a && in_b) {
      const BoundingBox& ba = a.boxes[static_cast<size_t>(f - a.first_frame)];
      const BoundingBox& bb = b.boxes[static_cast<size_t>(f - b.first_frame)];
      const double ix1 = std::max(ba.x1, bb.x1);
      const double iy1 = std::max(ba.y1, bb.y1);
      const double ix2 = std::min(ba.x2, bb.x2);
      const double iy2 = std::min(ba.y2, bb.y2);
      const double inter = std::max(0.0, ix2 - ix1) * std::max(0.0, iy2 - iy1);
      inter_sum += inter;
      union_sum += ba.area() + bb.area() - inter;
    } else if (in_a) {
      union_sum += a.boxes[static_cast<size_t>(f - a.first_frame)].area();
    } else if (in_b) {
      union_sum += b.boxes[static_cast<size_t>(f - b.first_frame)].area();
    }
  }
  return union_sum > 0 ? inter_sum / union_sum : 0.0;
}

namespace {

double median_area(const ProposalRecord& p) {
  std::vector<double> areas;
  areas.reserve(p.boxes.size());
  for (const auto& b : p.boxes) areas.push_back(b.area());
  std::sort(areas.begin(), areas.end());
  const size_t n = areas.size();
  if (n == 0) return 0.0;
  return n % 2 ? areas[n / 2] : 0.5 * (areas[n / 2 - 1] + areas[n / 2]);
}

}  // namespace

std::vector<ScoredProposal> filter_pool(std::vector<ScoredProposal> pool,
                                        const FilterConfig& cfg) {
  std::vector<ScoredProposal> extent_ok;
  const double frame_area = cfg.frame_width * cfg.frame_height;
  for (auto& sp : pool) {
    if (sp.prop.span_frames() < cfg.min_frames) continue;
    if (frame_area > 0 && median_area(sp.prop) < cfg.min_area_fraction * frame_area) continue;
    extent_ok.push_back(std::move(sp));
  }
  std::stable_sort(extent_ok.begin(), extent_ok.end(), [](const auto& a, const auto& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.prop.id < b.prop.id;
  });
  std::vector<ScoredProposal> kept;
  for (auto& cand : extent_ok) {
    bool dup = false;
    for (const auto& k : kept) {
      if (st_iou(cand.prop, k.prop) > cfg.dedup_threshold) {
        dup = true;
        break;
      }
    }
    if (!dup) kept.push_back(std::move(cand));
  }
  return kept;
}

double score_proposal(const ProposalRecord& prop,
                      std::span<const std::vector<double>> frame_cls,
                      std::span<const std::vector<FrameDetection>> frame_dets) {
  const int first = prop.first_frame;
  const int last = prop.last_frame();
  if (first < 0) {
    throw ValidationError("score_proposal: missing per-frame data for frame " +
                          std::to_string(first));
  }
  const int covered = static_cast<int>(std::min(frame_cls.size(), frame_dets.size()));
  if (last >= covered) {
    throw ValidationError("score_proposal: missing per-frame data for frame " +
                          std::to_string(covered));
  }
  double cls_sum = 0, det_sum = 0;
  for (int f = first; f <= last; ++f) {
    const auto& scores = frame_cls[static_cast<size_t>(f)];
    if (scores.empty()) {
      throw ValidationError("score_proposal: empty classification scores for frame " +
                            std::to_string(f));
    }
    cls_sum += *std::max_element(scores.begin(), scores.end());

    const BoundingBox& pbox = prop.boxes[static_cast<size_t>(f - first)];
    double best = 0.0;  // frames with no detections contribute zero
    for (const auto& det : frame_dets[static_cast<size_t>(f)]) {
      best = std::max(best, det.score * iou_2d(det.box, pbox));
    }
    det_sum += best;
  }
  const double n = static_cast<double>(last - first + 1);
  return (cls_sum / n + det_sum / n) / 2.0;
}

template <typename T>
ProposalFeatureSet<T> select_and_pad(std::span<const ScoredProposal> pool, size_t m) {
  if (m < 1) throw ValidationError("select_and_pad: m must be >= 1");
  if (pool.empty()) {
    throw ValidationError("select_and_pad: empty proposal pool, a video must yield >= 1 proposal");
  }
  std::vector<const ScoredProposal*> order;
  order.reserve(pool.size());
  for (const auto& sp : pool) order.push_back(&sp);
  std::sort(order.begin(), order.end(), [](const ScoredProposal* a, const ScoredProposal* b) {
    if (a->score != b->score) return a->score > b->score;
    return a->prop.id < b->prop.id;
  });

  const size_t d = order[0]->prop.descriptor.size();
  const size_t k = std::min(m, order.size());
  ProposalFeatureSet<T> out;
  out.features = Matrix<T>(m, d);
  out.valid_mask.assign(m, 0);
  for (size_t i = 0; i < k; ++i) {
    const auto& rec = order[i]->prop;
    if (rec.descriptor.size() != d) {
      throw ValidationError("select_and_pad: proposal " + std::to_string(rec.id) +
                            " descriptor width " + std::to_string(rec.descriptor.size()) +
                            " differs from " + std::to_string(d));
    }
    for (size_t c = 0; c < d; ++c) out.features.at(i, c) = static_cast<T>(rec.descriptor[c]);
    out.valid_mask[i] = 1;
    out.source_ids.push_back(rec.id);
  }
  return out;
}

template ProposalFeatureSet<float> select_and_pad<float>(std::span<const ScoredProposal>, size_t);
template ProposalFeatureSet<double> select_and_pad<double>(std::span<const ScoredProposal>,
                                                           size_t);

}  // namespace gcap
