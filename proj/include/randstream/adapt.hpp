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

// Turns per-class scores measured by the consumer into class sampling
// probabilities and pushes them to the producers.
//
//   p_c = floor + (1 - K * floor) * softmax_c(temperature * (1 - score_c))
//
// Low-scoring classes get sampled more often; the floor keeps every class in
// the stream.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "randstream/channel.hpp"

namespace randstream::adapt {

struct ClassFeedback {
  std::vector<double> scores;  // one per class, in [0, 1]
  std::uint64_t step = 0;

  /// Throws std::invalid_argument on an empty or out-of-range score vector.
  void validate() const;
};

struct AdaptPolicy {
  double temperature = 1.0;
  double floor = 0.05;
  // Weight of the incoming scores in the running average; 1 disables smoothing.
  double smoothing = 0.5;

  /// Throws std::invalid_argument unless temperature > 0, 0 <= floor,
  /// floor * K < 1 and smoothing in [0, 1].
  void validate(std::size_t num_classes) const;
};

std::vector<double> update_class_probs(const ClassFeedback& fb, const AdaptPolicy& pol);

/// Consumer-side policy state. The first step adopts the incoming scores;
/// later steps blend them in with weight `smoothing`.
class FeedbackState {
 public:
  explicit FeedbackState(AdaptPolicy pol = {}) : pol_(pol) {}

  const AdaptPolicy& policy() const { return pol_; }
  const std::vector<double>& smoothed_scores() const { return smoothed_; }
  const std::vector<double>& class_probs() const { return probs_; }
  std::uint64_t steps() const { return steps_; }

  /// Folds `fb` into the smoothed scores and returns the new probabilities.
  const std::vector<double>& update(const ClassFeedback& fb);

 private:
  AdaptPolicy pol_;
  std::vector<double> smoothed_;
  std::vector<double> probs_;
  std::uint64_t steps_ = 0;
};

/// update() followed by a set_class_probs broadcast. Without connected
/// producers the broadcast is a no-op.
const std::vector<double>& feedback_step(channel::ControlHub& hub, FeedbackState& state,
                                         const ClassFeedback& fb);

inline constexpr std::size_t kDefaultCadence = 500;  // consumed frames per step

}  // namespace randstream::adapt
