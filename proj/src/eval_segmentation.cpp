// Copyright 2026 The bevkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>

#include "bevkit/errors.hpp"
#include "bevkit/eval.hpp"

namespace bevkit {

BinaryMask foreground(const InstanceSegFrame& frame) {
  BinaryMask m(frame.ny, frame.nx);
  for (std::size_t k = 0; k < frame.ids.size(); ++k) m.bits[k] = frame.ids[k] != 0;
  return m;
}

BinaryMask mask_from_channel(const BEVGrid& grid, int channel, float threshold) {
  if (channel < 0 || channel >= grid.channels()) {
    throw ContractError("mask_from_channel: channel out of range");
  }
  BinaryMask m(grid.ny(), grid.nx());
  for (int i = 0; i < grid.ny(); ++i) {
    for (int j = 0; j < grid.nx(); ++j) {
      m.bits[static_cast<std::size_t>(i) * grid.nx() + j] = grid.at(i, j, channel) > threshold;
    }
  }
  return m;
}

double seg_iou(const BinaryMask& pred, const BinaryMask& gt) {
  if (pred.ny != gt.ny || pred.nx != gt.nx || pred.bits.size() != gt.bits.size()) {
    throw ContractError("seg_iou: mask dims differ");
  }
  std::size_t inter = 0, uni = 0;
  for (std::size_t k = 0; k < pred.bits.size(); ++k) {
    const bool p = pred.bits[k] != 0;
    const bool g = gt.bits[k] != 0;
    inter += p && g;
    uni += p || g;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

InstanceSegFrame crop_centered(const InstanceSegFrame& frame, const GridSpec& spec,
                               double width_m, double height_m) {
  if (frame.nx != spec.nx() || frame.ny != spec.ny()) {
    throw ContractError("crop_centered: frame does not match grid spec");
  }
  std::vector<int> rows, cols;
  for (int i = 0; i < spec.ny(); ++i) {
    if (std::abs(spec.center_y(i)) < 0.5 * height_m) rows.push_back(i);
  }
  for (int j = 0; j < spec.nx(); ++j) {
    if (std::abs(spec.center_x(j)) < 0.5 * width_m) cols.push_back(j);
  }
  InstanceSegFrame out(static_cast<int>(rows.size()), static_cast<int>(cols.size()));
  for (std::size_t a = 0; a < rows.size(); ++a) {
    for (std::size_t b = 0; b < cols.size(); ++b) {
      out.at(static_cast<int>(a), static_cast<int>(b)) = frame.at(rows[a], cols[b]);
    }
  }
  return out;
}

double VPQFrame::ratio() const {
  const double denom = static_cast<double>(tp) + 0.5 * static_cast<double>(fp) +
                       0.5 * static_cast<double>(fn);
  return denom == 0.0 ? 1.0 : iou_sum / denom;
}

void VPQAccumulator::merge(const VPQAccumulator& other) {
  if (frames.size() < other.frames.size()) frames.resize(other.frames.size());
  for (std::size_t t = 0; t < other.frames.size(); ++t) {
    VPQFrame& f = frames[t];
    const VPQFrame& o = other.frames[t];
    f.tp += o.tp;
    f.fp += o.fp;
    f.fn += o.fn;
    f.iou_sum += o.iou_sum;
  }
}

double VPQAccumulator::score() const {
  if (frames.empty()) return 0.0;
  double sum = 0.0;
  for (const VPQFrame& f : frames) sum += f.ratio();
  return sum / static_cast<double>(frames.size());
}

VPQFrame match_instances(const InstanceSegFrame& pred, const InstanceSegFrame& gt) {
  if (pred.ny != gt.ny || pred.nx != gt.nx || pred.ids.size() != gt.ids.size()) {
    throw ContractError("vpq: frame dims differ");
  }
  std::map<std::uint32_t, std::size_t> pred_area, gt_area;
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::size_t> overlap;
  for (std::size_t k = 0; k < pred.ids.size(); ++k) {
    const std::uint32_t p = pred.ids[k];
    const std::uint32_t g = gt.ids[k];
    if (p != 0) ++pred_area[p];
    if (g != 0) ++gt_area[g];
    if (p != 0 && g != 0) ++overlap[{p, g}];
  }

  VPQFrame frame;
  std::map<std::uint32_t, bool> pred_used, gt_used;
  for (const auto& [key, inter] : overlap) {
    const std::size_t uni = pred_area[key.first] + gt_area[key.second] - inter;
    const double iou = static_cast<double>(inter) / static_cast<double>(uni);
    if (iou > 0.5) {
      frame.matches.push_back({key.first, key.second, iou});
      pred_used[key.first] = true;
      gt_used[key.second] = true;
      frame.iou_sum += iou;
    }
  }
  for (const auto& [id, area] : pred_area) {
    if (!pred_used.count(id)) frame.false_positives.push_back(id);
  }
  for (const auto& [id, area] : gt_area) {
    if (!gt_used.count(id)) frame.false_negatives.push_back(id);
  }
  frame.tp = frame.matches.size();
  frame.fp = frame.false_positives.size();
  frame.fn = frame.false_negatives.size();
  return frame;
}

VPQResult vpq(std::span<const InstanceSegFrame> pred,
              std::span<const InstanceSegFrame> gt) {
  if (pred.size() != gt.size()) {
    throw ContractError("vpq: sequence lengths differ (" + std::to_string(pred.size()) +
                        " vs " + std::to_string(gt.size()) + ")");
  }
  if (gt.empty()) throw ContractError("vpq: empty sequences");
  VPQResult result;
  result.accumulator.frames.reserve(gt.size());
  for (std::size_t t = 0; t < gt.size(); ++t) {
    result.accumulator.frames.push_back(match_instances(pred[t], gt[t]));
  }
  result.score = result.accumulator.score();
  return result;
}

std::string metrics_csv(std::span<const MetricRow> rows) {
  std::string out = "metric,class,threshold,value\n";
  char buf[64];
  for (const MetricRow& r : rows) {
    out += r.metric;
    out += ',';
    out += r.cls;
    out += ',';
    if (r.threshold) {
      std::snprintf(buf, sizeof buf, "%g", *r.threshold);
      out += buf;
    }
    out += ',';
    std::snprintf(buf, sizeof buf, "%.9f", r.value);
    out += buf;
    out += '\n';
  }
  return out;
}

}  // namespace bevkit
