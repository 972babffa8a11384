// Copyright 2026 The randstream Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Detection quality: IoU, greedy matching, precision/recall curves and
// AP/mAP summaries over classes, IoU thresholds and repeated runs.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "randstream/geometry.hpp"

namespace randstream::eval {

struct Detection {
  std::string image_id;
  std::int64_t class_id = 0;
  Box bbox;
  double confidence = 0;
};

struct GroundTruth {
  std::string image_id;
  std::int64_t class_id = 0;
  Box bbox;
};

/// Intersection over union; 0 when the union is empty.
double iou(const Box& a, const Box& b);

struct MatchOptions {
  double iou_threshold = 0.5;
  std::size_t max_detections = 25;
  double score_min = 0.1;
};

struct MatchResult {
  /// Indices into the input detections that survived filtering, in
  /// descending confidence order.
  std::vector<std::size_t> order;
  /// true positive flag for each entry of `order`.
  std::vector<bool> true_positive;
  /// Per ground truth: matched by some detection.
  std::vector<bool> gt_matched;
};

/// Greedy matching for one image and one class. Detections below score_min
/// are dropped, the rest sorted by descending confidence and truncated to
/// max_detections; each then claims the unmatched ground truth with the
/// highest IoU >= iou_threshold (ties go to the lower index).
MatchResult match_detections(std::span<const Detection> dets, std::span<const GroundTruth> gts,
                             const MatchOptions& opts = {});

struct PrPoint {
  double precision = 0;
  double recall = 0;
  bool operator==(const PrPoint&) const = default;
};

/// Cumulative precision/recall after each detection; `labels` must be in
/// descending confidence order. Recall is relative to n_gt.
std::vector<PrPoint> pr_curve(const std::vector<bool>& labels, std::size_t n_gt);

enum class Interpolation {
  k101Point,  // mean over recall levels 0, 0.01, ..., 1
  kAllPoints, // area under the monotone precision envelope
};

double average_precision(std::span<const PrPoint> curve, Interpolation interp = Interpolation::k101Point);

/// 0.50, 0.55, ..., 0.95.
std::vector<double> coco_thresholds();

struct SummaryOptions {
  std::vector<double> thresholds = coco_thresholds();
  std::size_t max_detections = 25;
  double score_min = 0.1;
  Interpolation interpolation = Interpolation::k101Point;
  /// Classes 0..num_classes-1 are reported. 0 infers it from the largest class id seen.
  std::size_t num_classes = 0;
  bool keep_curves = false;
};

struct CurveRecord {
  std::size_t run = 0;
  std::int64_t class_id = 0;
  double threshold = 0;
  std::vector<PrPoint> points;
};

struct APReport {
  double map = 0;
  double ap50 = 0;
  double ap75 = 0;
  /// Mean over thresholds and runs; empty for classes without ground truth.
  std::vector<std::optional<double>> per_class_map;
  std::vector<double> run_map;
  /// Population standard deviation of run_map.
  double sigma_map = 0;
  std::vector<double> thresholds;
  std::vector<CurveRecord> curves;
};

/// Evaluates each run (one detection set per run) against the shared
/// ground truth. Matching is per image and class; classes without ground
/// truth are excluded from every mean.
APReport map_summary(std::span<const std::vector<Detection>> runs, std::span<const GroundTruth> gts,
                     const SummaryOptions& opts = {});

/// AP for one class at one IoU threshold across all images.
double class_average_precision(std::span<const Detection> dets, std::span<const GroundTruth> gts,
                               std::int64_t class_id, double iou_threshold, const SummaryOptions& opts,
                               std::vector<PrPoint>* curve = nullptr);

// Line records: `image_id class_id x_min y_min x_max y_max [confidence]`;
// detections without a confidence field score 1.
// Blank lines and lines starting with '#' are skipped. Parse errors throw
// std::invalid_argument naming the line.
std::vector<GroundTruth> parse_ground_truth(const std::string& text);
std::vector<Detection> parse_detections(const std::string& text);
std::string format_ground_truth(std::span<const GroundTruth> gts);
std::string format_detections(std::span<const Detection> dets);

}  // namespace randstream::eval
