// Copyright 2026 The bevkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <set>

#include "bevkit/errors.hpp"
#include "bevkit/eval.hpp"

namespace bevkit {
namespace {

std::vector<std::size_t> by_score_descending(std::span<const DetectionBox> boxes) {
  std::vector<std::size_t> order(boxes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return boxes[a].score > boxes[b].score;
  });
  return order;
}

std::vector<DetectionBox> of_class(std::span<const DetectionBox> boxes,
                                   const std::string& label) {
  std::vector<DetectionBox> out;
  for (const auto& b : boxes) {
    if (b.label == label) out.push_back(b);
  }
  return out;
}

std::set<std::string> classes_of(std::span<const DetectionBox> boxes) {
  std::set<std::string> out;
  for (const auto& b : boxes) out.insert(b.label);
  return out;
}

}  // namespace

double bev_center_distance(const DetectionBox& a, const DetectionBox& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

Matching match_detections(std::span<const DetectionBox> preds,
                          std::span<const DetectionBox> gts, double threshold) {
  if (!(threshold > 0.0)) throw ContractError("match_detections: threshold must be > 0");
  Matching m;
  std::vector<bool> taken(gts.size(), false);
  for (std::size_t p : by_score_descending(preds)) {
    std::size_t best = gts.size();
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g] || gts[g].label != preds[p].label) continue;
      const double d = bev_center_distance(preds[p], gts[g]);
      if (d < best_dist) {
        best_dist = d;
        best = g;
      }
    }
    if (best < gts.size() && best_dist < threshold) {
      taken[best] = true;
      m.true_positives.push_back({p, best, best_dist});
      m.sequence.emplace_back(p, true);
    } else {
      m.false_positives.push_back(p);
      m.sequence.emplace_back(p, false);
    }
  }
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (!taken[g]) m.false_negatives.push_back(g);
  }
  return m;
}

double average_precision(std::span<const DetectionBox> preds,
                         std::span<const DetectionBox> gts, double threshold) {
  if (gts.empty()) return 0.0;
  const Matching m = match_detections(preds, gts, threshold);
  double area = 0.0;
  std::size_t tp = 0;
  std::size_t seen = 0;
  for (const auto& [index, is_tp] : m.sequence) {
    ++seen;
    if (!is_tp) continue;
    ++tp;
    const double precision = static_cast<double>(tp) / static_cast<double>(seen);
    area += precision / static_cast<double>(gts.size());
  }
  return area;
}

double map_metric(std::span<const DetectionBox> preds,
                  std::span<const DetectionBox> gts, std::span<const double> thresholds) {
  const auto classes = classes_of(gts);
  if (classes.empty() || thresholds.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& cls : classes) {
    const auto p = of_class(preds, cls);
    const auto g = of_class(gts, cls);
    for (double t : thresholds) sum += average_precision(p, g, t);
  }
  return sum / static_cast<double>(classes.size() * thresholds.size());
}

double yaw_difference(double a, double b) {
  return std::abs(wrap_angle(a - b));
}

double scale_error(const DetectionBox& a, const DetectionBox& b) {
  const double inter = std::min(a.width, b.width) * std::min(a.length, b.length) *
                       std::min(a.height, b.height);
  const double va = a.width * a.length * a.height;
  const double vb = b.width * b.length * b.height;
  return 1.0 - inter / (va + vb - inter);
}

TpErrors tp_errors(const Matching& matching, std::span<const DetectionBox> preds,
                   std::span<const DetectionBox> gts) {
  if (matching.true_positives.empty()) return {};
  TpErrors e{0.0, 0.0, 0.0, 0.0};
  for (const MatchPair& pair : matching.true_positives) {
    const DetectionBox& p = preds[pair.pred];
    const DetectionBox& g = gts[pair.gt];
    e.ate += bev_center_distance(p, g);
    e.ase += scale_error(p, g);
    e.aoe += yaw_difference(p.yaw, g.yaw);
    e.ave += std::hypot(p.vx - g.vx, p.vy - g.vy);
  }
  const double n = static_cast<double>(matching.true_positives.size());
  e.ate /= n;
  e.ase /= n;
  e.aoe /= n;
  e.ave /= n;
  return e;
}

double nds(double map, const TpErrors& errors) {
  double tp_score = 0.0;
  for (double err : {errors.ate, errors.ase, errors.aoe, errors.ave}) {
    tp_score += 1.0 - std::min(1.0, std::max(0.0, err));
  }
  return (5.0 * map + tp_score) / kNdsDivisor;
}

DetectionMetrics evaluate_detections(std::span<const DetectionBox> preds,
                                     std::span<const DetectionBox> gts,
                                     const DetectionEvalConfig& config) {
  DetectionMetrics out;
  const auto classes = classes_of(gts);
  double ap_sum = 0.0;
  TpErrors mean{0.0, 0.0, 0.0, 0.0};
  for (const auto& cls : classes) {
    const auto p = of_class(preds, cls);
    const auto g = of_class(gts, cls);
    for (double t : config.thresholds) {
      const double ap = average_precision(p, g, t);
      out.ap[cls][t] = ap;
      ap_sum += ap;
    }
    const TpErrors e = tp_errors(match_detections(p, g, config.tp_threshold), p, g);
    out.class_errors[cls] = e;
    mean.ate += e.ate;
    mean.ase += e.ase;
    mean.aoe += e.aoe;
    mean.ave += e.ave;
  }
  if (!classes.empty() && !config.thresholds.empty()) {
    const double nc = static_cast<double>(classes.size());
    out.map = ap_sum / (nc * static_cast<double>(config.thresholds.size()));
    out.errors = {mean.ate / nc, mean.ase / nc, mean.aoe / nc, mean.ave / nc};
  }
  out.nds = nds(out.map, out.errors);
  return out;
}

std::vector<DetectionBox> bev_nms(std::span<const DetectionBox> boxes,
                                  const std::map<std::string, double>& class_scale,
                                  double distance_threshold) {
  if (!(distance_threshold > 0.0)) throw ContractError("bev_nms: threshold must be > 0");
  for (const auto& [cls, s] : class_scale) {
    if (!(s > 0.0)) throw ContractError("bev_nms: scale for class '" + cls + "' must be > 0");
  }
  std::vector<bool> keep(boxes.size(), false);
  std::vector<std::size_t> kept;
  for (std::size_t k : by_score_descending(boxes)) {
    const auto it = class_scale.find(boxes[k].label);
    const double s = it == class_scale.end() ? 1.0 : it->second;
    bool suppressed = false;
    for (std::size_t other : kept) {
      if (boxes[other].label != boxes[k].label) continue;
      const double dx = s * (boxes[k].x - boxes[other].x);
      const double dy = s * (boxes[k].y - boxes[other].y);
      if (std::hypot(dx, dy) <= distance_threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) {
      kept.push_back(k);
      keep[k] = true;
    }
  }
  std::vector<DetectionBox> out;
  for (std::size_t k = 0; k < boxes.size(); ++k) {
    if (keep[k]) out.push_back(boxes[k]);
  }
  return out;
}

}  // namespace bevkit
