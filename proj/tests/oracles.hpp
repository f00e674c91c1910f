// Copyright 2026 The bevkit Authors
// SPDX-License-Identifier: Apache-2.0

// Brute-force reference implementations used by the tests. They are written
// from the definitions, without calling the code under test.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "bevkit/box.hpp"
#include "bevkit/eval.hpp"
#include "bevkit/grid.hpp"

namespace oracle {

using bevkit::BEVGrid;
using bevkit::DetectionBox;
using bevkit::InstanceSegFrame;

// out(i, j) = in(i - di, j - dj), zero where the source is off-grid.
inline BEVGrid shift(const BEVGrid& in, int di, int dj) {
  BEVGrid out(in.spec(), in.channels());
  for (int i = 0; i < in.ny(); ++i) {
    for (int j = 0; j < in.nx(); ++j) {
      const int si = i - di;
      const int sj = j - dj;
      if (si < 0 || si >= in.ny() || sj < 0 || sj >= in.nx()) continue;
      for (int c = 0; c < in.channels(); ++c) out.at(i, j, c) = in.at(si, sj, c);
    }
  }
  return out;
}

// Counter-clockwise quarter turns about the grid center of a square grid:
// content at (i, j) moves to (j, n-1-i) per turn.
inline BEVGrid rot90(const BEVGrid& in, int turns) {
  BEVGrid cur = in;
  const int n = in.nx();
  turns = ((turns % 4) + 4) % 4;
  for (int t = 0; t < turns; ++t) {
    BEVGrid next(in.spec(), in.channels());
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        for (int c = 0; c < in.channels(); ++c) next.at(j, n - 1 - i, c) = cur.at(i, j, c);
      }
    }
    cur = next;
  }
  return cur;
}

inline BEVGrid flip_columns(const BEVGrid& in) {
  BEVGrid out(in.spec(), in.channels());
  for (int i = 0; i < in.ny(); ++i) {
    for (int j = 0; j < in.nx(); ++j) {
      for (int c = 0; c < in.channels(); ++c) out.at(i, in.nx() - 1 - j, c) = in.at(i, j, c);
    }
  }
  return out;
}

inline BEVGrid flip_rows(const BEVGrid& in) {
  BEVGrid out(in.spec(), in.channels());
  for (int i = 0; i < in.ny(); ++i) {
    for (int j = 0; j < in.nx(); ++j) {
      for (int c = 0; c < in.channels(); ++c) out.at(in.ny() - 1 - i, j, c) = in.at(i, j, c);
    }
  }
  return out;
}

inline bool bitwise_equal(const BEVGrid& a, const BEVGrid& b) {
  if (!(a.spec() == b.spec()) || a.channels() != b.channels()) return false;
  const auto x = a.data();
  const auto y = b.data();
  for (std::size_t k = 0; k < x.size(); ++k) {
    std::uint32_t u = 0, v = 0;
    std::memcpy(&u, &x[k], 4);
    std::memcpy(&v, &y[k], 4);
    if (u != v) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Panoptic matching

inline double mask_iou(const InstanceSegFrame& p, std::uint32_t pid,
                       const InstanceSegFrame& g, std::uint32_t gid) {
  std::size_t inter = 0, uni = 0;
  for (std::size_t k = 0; k < p.ids.size(); ++k) {
    const bool a = p.ids[k] == pid;
    const bool b = g.ids[k] == gid;
    inter += a && b;
    uni += a || b;
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

inline std::vector<std::uint32_t> ids_of(const InstanceSegFrame& f) {
  std::set<std::uint32_t> s;
  for (auto v : f.ids) {
    if (v != 0) s.insert(v);
  }
  return {s.begin(), s.end()};
}

struct FrameCounts {
  std::size_t tp = 0, fp = 0, fn = 0;
  double iou_sum = 0.0;
};

// Enumerates every one-to-one assignment of predictions to ground truth and
// keeps the one with most pairs of IoU > 0.5 (ties: larger IoU sum).
inline FrameCounts brute_frame(const InstanceSegFrame& p, const InstanceSegFrame& g) {
  const auto pids = ids_of(p);
  const auto gids = ids_of(g);
  std::vector<std::vector<double>> iou(pids.size(), std::vector<double>(gids.size()));
  for (std::size_t a = 0; a < pids.size(); ++a) {
    for (std::size_t b = 0; b < gids.size(); ++b) iou[a][b] = mask_iou(p, pids[a], g, gids[b]);
  }
  FrameCounts best;
  std::vector<bool> used(gids.size(), false);
  std::size_t cur_tp = 0;
  double cur_sum = 0.0;
  auto rec = [&](auto&& self, std::size_t a) -> void {
    if (a == pids.size()) {
      if (cur_tp > best.tp || (cur_tp == best.tp && cur_sum > best.iou_sum)) {
        best.tp = cur_tp;
        best.iou_sum = cur_sum;
      }
      return;
    }
    self(self, a + 1);
    for (std::size_t b = 0; b < gids.size(); ++b) {
      if (used[b] || !(iou[a][b] > 0.5)) continue;
      used[b] = true;
      ++cur_tp;
      cur_sum += iou[a][b];
      self(self, a + 1);
      cur_sum -= iou[a][b];
      --cur_tp;
      used[b] = false;
    }
  };
  rec(rec, 0);
  best.fp = pids.size() - best.tp;
  best.fn = gids.size() - best.tp;
  return best;
}

inline double brute_vpq(const std::vector<InstanceSegFrame>& pred,
                        const std::vector<InstanceSegFrame>& gt) {
  double total = 0.0;
  for (std::size_t t = 0; t < gt.size(); ++t) {
    const FrameCounts c = brute_frame(pred[t], gt[t]);
    const double denom = static_cast<double>(c.tp) + 0.5 * c.fp + 0.5 * c.fn;
    total += denom == 0.0 ? 1.0 : c.iou_sum / denom;
  }
  return total / static_cast<double>(gt.size());
}

// ---------------------------------------------------------------------------
// Detection matching

struct Assignment {
  std::vector<int> gt_of_pred;  // -1 when unmatched, indexed like preds
};

inline std::vector<std::size_t> score_order(const std::vector<DetectionBox>& preds) {
  std::vector<std::size_t> order(preds.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return preds[a].score > preds[b].score; });
  return order;
}

inline double center_distance(const DetectionBox& a, const DetectionBox& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

// Visits every valid one-to-one matching (same class, distance < threshold).
template <typename Visit>
void enumerate_matchings(const std::vector<DetectionBox>& preds,
                         const std::vector<DetectionBox>& gts, double threshold, Visit visit) {
  std::vector<int> gt_of(preds.size(), -1);
  std::vector<bool> used(gts.size(), false);
  auto rec = [&](auto&& self, std::size_t p) -> void {
    if (p == preds.size()) {
      visit(gt_of);
      return;
    }
    self(self, p + 1);
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (used[g] || gts[g].label != preds[p].label) continue;
      if (!(center_distance(preds[p], gts[g]) < threshold)) continue;
      used[g] = true;
      gt_of[p] = static_cast<int>(g);
      self(self, p + 1);
      gt_of[p] = -1;
      used[g] = false;
    }
  };
  rec(rec, 0);
}

// The matching that is lexicographically best when predictions are visited
// by descending score: matched before unmatched, then smaller distance, then
// lower gt index.
inline Assignment lexicographic_matching(const std::vector<DetectionBox>& preds,
                                         const std::vector<DetectionBox>& gts,
                                         double threshold) {
  const auto order = score_order(preds);
  struct Key {
    int unmatched;
    double distance;
    int gt;
    bool operator<(const Key& o) const {
      if (unmatched != o.unmatched) return unmatched < o.unmatched;
      if (distance != o.distance) return distance < o.distance;
      return gt < o.gt;
    }
    bool operator==(const Key&) const = default;
  };
  std::vector<Key> best_key;
  Assignment best;
  enumerate_matchings(preds, gts, threshold, [&](const std::vector<int>& gt_of) {
    std::vector<Key> key;
    for (std::size_t p : order) {
      const int g = gt_of[p];
      key.push_back(g < 0 ? Key{1, 0.0, 0} : Key{0, center_distance(preds[p], gts[g]), g});
    }
    if (best_key.empty() || std::lexicographical_compare(key.begin(), key.end(),
                                                          best_key.begin(), best_key.end())) {
      best_key = key;
      best.gt_of_pred = gt_of;
    }
  });
  return best;
}

// Most true positives, then least total distance.
inline Assignment max_tp_min_distance(const std::vector<DetectionBox>& preds,
                                      const std::vector<DetectionBox>& gts, double threshold) {
  Assignment best;
  int best_tp = -1;
  double best_dist = std::numeric_limits<double>::infinity();
  enumerate_matchings(preds, gts, threshold, [&](const std::vector<int>& gt_of) {
    int tp = 0;
    double dist = 0.0;
    for (std::size_t p = 0; p < gt_of.size(); ++p) {
      if (gt_of[p] >= 0) {
        ++tp;
        dist += center_distance(preds[p], gts[gt_of[p]]);
      }
    }
    if (tp > best_tp || (tp == best_tp && dist < best_dist - 1e-12)) {
      best_tp = tp;
      best_dist = dist;
      best.gt_of_pred = gt_of;
    }
  });
  return best;
}

inline Assignment as_assignment(const bevkit::Matching& m, std::size_t n_preds) {
  Assignment a;
  a.gt_of_pred.assign(n_preds, -1);
  for (const auto& tp : m.true_positives) a.gt_of_pred[tp.pred] = static_cast<int>(tp.gt);
  return a;
}

// Area under the precision/recall staircase, built point by point.
inline double staircase_ap(const std::vector<DetectionBox>& preds,
                           const std::vector<DetectionBox>& gts, const Assignment& a) {
  if (gts.empty()) return 0.0;
  const auto order = score_order(preds);
  std::vector<std::pair<double, double>> pr;  // (recall, precision)
  std::size_t tp = 0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (a.gt_of_pred[order[r]] >= 0) ++tp;
    pr.emplace_back(static_cast<double>(tp) / gts.size(), static_cast<double>(tp) / (r + 1));
  }
  double area = 0.0, prev_recall = 0.0;
  for (const auto& [recall, precision] : pr) {
    area += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return area;
}

}  // namespace oracle
