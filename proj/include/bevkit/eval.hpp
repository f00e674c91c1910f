// Copyright 2026 The bevkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bevkit/box.hpp"
#include "bevkit/grid.hpp"

namespace bevkit {

// ---------------------------------------------------------------------------
// Segmentation

/// ny x nx instance ids, row-major; 0 is background.
struct InstanceSegFrame {
  int ny = 0;
  int nx = 0;
  std::vector<std::uint32_t> ids;

  InstanceSegFrame() = default;
  InstanceSegFrame(int rows, int cols)
      : ny(rows), nx(cols), ids(static_cast<std::size_t>(rows) * cols, 0) {}

  std::uint32_t at(int i, int j) const { return ids[static_cast<std::size_t>(i) * nx + j]; }
  std::uint32_t& at(int i, int j) { return ids[static_cast<std::size_t>(i) * nx + j]; }
  bool operator==(const InstanceSegFrame&) const = default;
};

struct BinaryMask {
  int ny = 0;
  int nx = 0;
  std::vector<std::uint8_t> bits;

  BinaryMask() = default;
  BinaryMask(int rows, int cols)
      : ny(rows), nx(cols), bits(static_cast<std::size_t>(rows) * cols, 0) {}
};

BinaryMask foreground(const InstanceSegFrame& frame);
BinaryMask mask_from_channel(const BEVGrid& grid, int channel, float threshold = 0.5f);

/// |pred & gt| / |pred | gt|, 1 when both are empty.
/// Throws ContractError when dims differ.
double seg_iou(const BinaryMask& pred, const BinaryMask& gt);

/// Cells whose centers lie within a width_m x height_m box centered on the
/// ego origin (the "Short" 30 m and "Long" 100 m evaluation windows).
InstanceSegFrame crop_centered(const InstanceSegFrame& frame, const GridSpec& spec,
                               double width_m, double height_m);

inline constexpr double kShortRange = 30.0;
inline constexpr double kLongRange = 100.0;

struct FrameMatch {
  std::uint32_t pred;
  std::uint32_t gt;
  double iou;
};

/// Per-timestamp true positives, false positives and false negatives.
struct VPQFrame {
  std::vector<FrameMatch> matches;
  std::vector<std::uint32_t> false_positives;
  std::vector<std::uint32_t> false_negatives;
  // Totals kept separately so accumulators from several sequences merge.
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double iou_sum = 0.0;

  /// iou_sum / (tp + fp/2 + fn/2); 1 when the frame has no instances at all.
  double ratio() const;
};

struct VPQAccumulator {
  std::vector<VPQFrame> frames;

  /// Adds counts timestamp by timestamp (associative and commutative).
  void merge(const VPQAccumulator& other);
  /// Mean of the per-frame ratios over the T+1 timestamps.
  double score() const;
};

/// Matches instances with IoU > 0.5 (unique by construction).
VPQFrame match_instances(const InstanceSegFrame& pred, const InstanceSegFrame& gt);

struct VPQResult {
  double score = 0.0;
  VPQAccumulator accumulator;
};

/// Future video panoptic quality over aligned sequences s_t .. s_{t+T}.
/// Throws ContractError on length or dims mismatch.
VPQResult vpq(std::span<const InstanceSegFrame> pred,
              std::span<const InstanceSegFrame> gt);

// ---------------------------------------------------------------------------
// Detection

double bev_center_distance(const DetectionBox& a, const DetectionBox& b);

struct MatchPair {
  std::size_t pred;
  std::size_t gt;
  double distance;
};

struct Matching {
  std::vector<MatchPair> true_positives;
  std::vector<std::size_t> false_positives;  // prediction indices
  std::vector<std::size_t> false_negatives;  // gt indices
  /// Predictions in processing order (score descending, ties by index),
  /// with whether each became a true positive.
  std::vector<std::pair<std::size_t, bool>> sequence;
};

/// Greedy matching in descending score order: each prediction takes the
/// nearest unmatched same-class ground truth with BEV center distance
/// strictly below `threshold` (ties go to the lower gt index).
Matching match_detections(std::span<const DetectionBox> preds,
                          std::span<const DetectionBox> gts, double threshold);

/// Area under the raw precision/recall staircase: sum over true positives of
/// precision-at-that-rank / #gt. No interpolation or recall/precision floors.
/// 0 when there is no ground truth.
double average_precision(std::span<const DetectionBox> preds,
                         std::span<const DetectionBox> gts, double threshold);

inline const std::vector<double>& default_distance_thresholds() {
  static const std::vector<double> t = {0.5, 1.0, 2.0, 4.0};
  return t;
}

/// Mean AP over thresholds and over classes present in the ground truth.
double map_metric(std::span<const DetectionBox> preds,
                  std::span<const DetectionBox> gts,
                  std::span<const double> thresholds = default_distance_thresholds());

struct TpErrors {
  double ate = 1.0;  // m
  double ase = 1.0;  // 1 - IoU
  double aoe = 1.0;  // rad
  double ave = 1.0;  // m/s
};

/// Mean errors over the matched pairs; all 1 when there are none.
TpErrors tp_errors(const Matching& matching, std::span<const DetectionBox> preds,
                   std::span<const DetectionBox> gts);

double yaw_difference(double a, double b);
/// 1 - IoU of the two boxes after aligning centers and yaw.
double scale_error(const DetectionBox& a, const DetectionBox& b);

/// Without attribute error the score is (5 mAP + sum(1 - min(1, err))) / 9.
double nds(double map, const TpErrors& errors);
inline constexpr int kNdsDivisor = 9;

struct DetectionEvalConfig {
  std::vector<double> thresholds = default_distance_thresholds();
  double tp_threshold = 2.0;  // matching distance used for the TP errors
};

struct DetectionMetrics {
  double map = 0.0;
  std::map<std::string, std::map<double, double>> ap;  // class -> thr -> AP
  std::map<std::string, TpErrors> class_errors;
  TpErrors errors;  // mean over classes
  double nds = 0.0;
};

DetectionMetrics evaluate_detections(std::span<const DetectionBox> preds,
                                     std::span<const DetectionBox> gts,
                                     const DetectionEvalConfig& config = {});

/// Class-scaled BEV NMS: within each class, centers are multiplied by the
/// class factor (default 1) and a box is suppressed when its scaled center is
/// within distance_threshold of an already kept box. Survivors are returned
/// unscaled in input order.
std::vector<DetectionBox> bev_nms(std::span<const DetectionBox> boxes,
                                  const std::map<std::string, double>& class_scale,
                                  double distance_threshold);

// ---------------------------------------------------------------------------
// Reporting

struct MetricRow {
  std::string metric;
  std::string cls;                  // empty for class-agnostic values
  std::optional<double> threshold;  // empty when not thresholded
  double value = 0.0;
};

/// "metric,class,threshold,value" header plus one line per row.
std::string metrics_csv(std::span<const MetricRow> rows);

}  // namespace bevkit
