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

#include "randstream/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace randstream::eval {

double iou(const Box& a, const Box& b) {
  const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  const double inter = (iw > 0 && ih > 0) ? iw * ih : 0.0;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

namespace {

// Total order: confidence descending, then geometry. Makes results
// independent of input order.
bool ranks_before(const Detection& a, const Detection& b) {
  if (a.confidence != b.confidence) return a.confidence > b.confidence;
  return std::tie(a.image_id, a.class_id, a.bbox.x_min, a.bbox.y_min, a.bbox.x_max, a.bbox.y_max) <
         std::tie(b.image_id, b.class_id, b.bbox.x_min, b.bbox.y_min, b.bbox.x_max, b.bbox.y_max);
}

}  // namespace

MatchResult match_detections(std::span<const Detection> dets, std::span<const GroundTruth> gts,
                             const MatchOptions& opts) {
  MatchResult out;
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (dets[i].confidence >= opts.score_min) out.order.push_back(i);
  }
  std::stable_sort(out.order.begin(), out.order.end(),
                   [&](std::size_t a, std::size_t b) { return ranks_before(dets[a], dets[b]); });
  if (out.order.size() > opts.max_detections) out.order.resize(opts.max_detections);

  out.gt_matched.assign(gts.size(), false);
  out.true_positive.reserve(out.order.size());
  for (std::size_t di : out.order) {
    double best = -1;
    std::size_t best_gt = gts.size();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (out.gt_matched[g]) continue;
      const double v = iou(dets[di].bbox, gts[g].bbox);
      if (v >= opts.iou_threshold && v > best) {
        best = v;
        best_gt = g;
      }
    }
    if (best_gt < gts.size()) {
      out.gt_matched[best_gt] = true;
      out.true_positive.push_back(true);
    } else {
      out.true_positive.push_back(false);
    }
  }
  return out;
}

std::vector<PrPoint> pr_curve(const std::vector<bool>& labels, std::size_t n_gt) {
  std::vector<PrPoint> out;
  out.reserve(labels.size());
  std::size_t tp = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i]) ++tp;
    const double precision = static_cast<double>(tp) / static_cast<double>(i + 1);
    const double recall = n_gt ? static_cast<double>(tp) / static_cast<double>(n_gt) : 0.0;
    out.push_back({precision, recall});
  }
  return out;
}

double average_precision(std::span<const PrPoint> curve, Interpolation interp) {
  if (curve.empty()) return 0.0;
  // envelope[i] = max precision over points i..end.
  std::vector<double> envelope(curve.size());
  double running = 0;
  for (std::size_t i = curve.size(); i-- > 0;) {
    running = std::max(running, curve[i].precision);
    envelope[i] = running;
  }

  if (interp == Interpolation::k101Point) {
    // Recall is non-decreasing along the curve, so the first point reaching
    // a level carries the maximum over every point at or beyond it.
    double sum = 0;
    std::size_t i = 0;
    for (int k = 0; k <= 100; ++k) {
      const double level = k / 100.0;
      while (i < curve.size() && curve[i].recall < level) ++i;
      if (i == curve.size()) break;
      sum += envelope[i];
    }
    return sum / 101.0;
  }

  double ap = 0;
  double prev_recall = 0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    if (curve[i].recall > prev_recall) {
      ap += (curve[i].recall - prev_recall) * envelope[i];
      prev_recall = curve[i].recall;
    }
  }
  return ap;
}

std::vector<double> coco_thresholds() {
  std::vector<double> t;
  for (int k = 0; k < 10; ++k) t.push_back((50 + 5 * k) / 100.0);
  return t;
}

double class_average_precision(std::span<const Detection> dets, std::span<const GroundTruth> gts,
                               std::int64_t class_id, double iou_threshold, const SummaryOptions& opts,
                               std::vector<PrPoint>* curve) {
  std::map<std::string, std::pair<std::vector<Detection>, std::vector<GroundTruth>>> per_image;
  std::size_t n_gt = 0;
  for (const auto& g : gts) {
    if (g.class_id != class_id) continue;
    per_image[g.image_id].second.push_back(g);
    ++n_gt;
  }
  for (const auto& d : dets) {
    if (d.class_id == class_id) per_image[d.image_id].first.push_back(d);
  }

  const MatchOptions mo{iou_threshold, opts.max_detections, opts.score_min};
  std::vector<std::pair<Detection, bool>> ranked;
  for (const auto& [image, pair] : per_image) {
    const auto& [img_dets, img_gts] = pair;
    const MatchResult r = match_detections(img_dets, img_gts, mo);
    for (std::size_t k = 0; k < r.order.size(); ++k) ranked.emplace_back(img_dets[r.order[k]], r.true_positive[k]);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return ranks_before(a.first, b.first); });

  std::vector<bool> labels;
  labels.reserve(ranked.size());
  for (const auto& [d, tp] : ranked) labels.push_back(tp);

  auto points = pr_curve(labels, n_gt);
  const double ap = n_gt ? average_precision(points, opts.interpolation) : 0.0;
  if (curve) *curve = std::move(points);
  return ap;
}

APReport map_summary(std::span<const std::vector<Detection>> runs, std::span<const GroundTruth> gts,
                     const SummaryOptions& opts) {
  if (runs.empty()) throw std::invalid_argument("map_summary: at least one run required");
  if (opts.thresholds.empty()) throw std::invalid_argument("map_summary: at least one IoU threshold required");

  std::size_t num_classes = opts.num_classes;
  if (num_classes == 0) {
    std::int64_t max_id = -1;
    for (const auto& g : gts) max_id = std::max(max_id, g.class_id);
    for (const auto& run : runs) {
      for (const auto& d : run) max_id = std::max(max_id, d.class_id);
    }
    num_classes = static_cast<std::size_t>(max_id + 1);
  }

  std::vector<bool> has_gt(num_classes, false);
  for (const auto& g : gts) {
    if (g.class_id >= 0 && static_cast<std::size_t>(g.class_id) < num_classes) {
      has_gt[static_cast<std::size_t>(g.class_id)] = true;
    }
  }
  std::vector<std::int64_t> classes;
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (has_gt[c]) classes.push_back(static_cast<std::int64_t>(c));
  }

  APReport rep;
  rep.thresholds = opts.thresholds;
  rep.per_class_map.assign(num_classes, std::nullopt);
  if (classes.empty()) {
    rep.run_map.assign(runs.size(), 0.0);
    return rep;
  }

  std::vector<double> class_sum(num_classes, 0.0);
  double ap50_sum = 0, ap75_sum = 0;
  for (std::size_t run = 0; run < runs.size(); ++run) {
    double run_sum = 0;
    for (std::int64_t c : classes) {
      for (double thr : opts.thresholds) {
        std::vector<PrPoint> curve;
        const double ap = class_average_precision(runs[run], gts, c, thr, opts, opts.keep_curves ? &curve : nullptr);
        run_sum += ap;
        class_sum[static_cast<std::size_t>(c)] += ap;
        if (opts.keep_curves) rep.curves.push_back({run, c, thr, std::move(curve)});
      }
      ap50_sum += class_average_precision(runs[run], gts, c, 0.5, opts);
      ap75_sum += class_average_precision(runs[run], gts, c, 0.75, opts);
    }
    rep.run_map.push_back(run_sum / static_cast<double>(classes.size() * opts.thresholds.size()));
  }

  const double n_runs = static_cast<double>(runs.size());
  const double n_cls = static_cast<double>(classes.size());
  rep.map = std::accumulate(rep.run_map.begin(), rep.run_map.end(), 0.0) / n_runs;
  rep.ap50 = ap50_sum / (n_cls * n_runs);
  rep.ap75 = ap75_sum / (n_cls * n_runs);
  for (std::int64_t c : classes) {
    rep.per_class_map[static_cast<std::size_t>(c)] =
        class_sum[static_cast<std::size_t>(c)] / (static_cast<double>(opts.thresholds.size()) * n_runs);
  }
  double var = 0;
  for (double m : rep.run_map) var += (m - rep.map) * (m - rep.map);
  rep.sigma_map = std::sqrt(var / n_runs);
  return rep;
}

namespace {

template <typename Record>
std::vector<Record> parse_records(const std::string& text, bool with_confidence) {
  std::vector<Record> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    std::vector<std::string> tok;
    for (std::string t; fields >> t;) tok.push_back(t);
    // A detection line without confidence counts as confidence 1, so a
    // ground-truth file can be scored as a detection file.
    const bool ok = tok.size() == 6 || (with_confidence && tok.size() == 7);
    if (!ok) {
      throw std::invalid_argument("line " + std::to_string(lineno) + ": expected " +
                                  (with_confidence ? "6 or 7" : "6") + " fields, got " + std::to_string(tok.size()));
    }
    auto num = [&](const std::string& s) {
      std::size_t used = 0;
      double v = 0;
      try {
        v = std::stod(s, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != s.size() || !std::isfinite(v)) {
        throw std::invalid_argument("line " + std::to_string(lineno) + ": bad number '" + s + "'");
      }
      return v;
    };
    Record r;
    r.image_id = tok[0];
    const double cid = num(tok[1]);
    if (cid != std::floor(cid) || cid < 0) {
      throw std::invalid_argument("line " + std::to_string(lineno) + ": class id must be a non-negative integer");
    }
    r.class_id = static_cast<std::int64_t>(cid);
    r.bbox = {num(tok[2]), num(tok[3]), num(tok[4]), num(tok[5])};
    if (!r.bbox.valid()) throw std::invalid_argument("line " + std::to_string(lineno) + ": box has min > max");
    if constexpr (std::is_same_v<Record, Detection>) {
      r.confidence = tok.size() == 7 ? num(tok[6]) : 1.0;
      if (r.confidence < 0 || r.confidence > 1) {
        throw std::invalid_argument("line " + std::to_string(lineno) + ": confidence outside [0, 1]");
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

void put_box(std::ostringstream& out, const Box& b) {
  out << b.x_min << ' ' << b.y_min << ' ' << b.x_max << ' ' << b.y_max;
}

}  // namespace

std::vector<GroundTruth> parse_ground_truth(const std::string& text) {
  return parse_records<GroundTruth>(text, false);
}

std::vector<Detection> parse_detections(const std::string& text) { return parse_records<Detection>(text, true); }

std::string format_ground_truth(std::span<const GroundTruth> gts) {
  std::ostringstream out;
  out.precision(17);
  for (const auto& g : gts) {
    out << g.image_id << ' ' << g.class_id << ' ';
    put_box(out, g.bbox);
    out << '\n';
  }
  return out.str();
}

std::string format_detections(std::span<const Detection> dets) {
  std::ostringstream out;
  out.precision(17);
  for (const auto& d : dets) {
    out << d.image_id << ' ' << d.class_id << ' ';
    put_box(out, d.bbox);
    out << ' ' << d.confidence << '\n';
  }
  return out.str();
}

}  // namespace randstream::eval
