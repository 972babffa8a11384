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

#include "randstream/adapt.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace randstream::adapt {

void ClassFeedback::validate() const {
  if (scores.empty()) throw std::invalid_argument("feedback needs at least one class score");
  for (double s : scores) {
    if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("class scores must lie in [0, 1]");
  }
}

void AdaptPolicy::validate(std::size_t num_classes) const {
  if (!(temperature > 0) || !std::isfinite(temperature)) throw std::invalid_argument("temperature must be > 0");
  if (!(floor >= 0)) throw std::invalid_argument("probability floor must be >= 0");
  if (!(floor * static_cast<double>(num_classes) < 1.0)) {
    throw std::invalid_argument("probability floor times class count must be < 1");
  }
  if (!(smoothing >= 0 && smoothing <= 1)) throw std::invalid_argument("smoothing must lie in [0, 1]");
}

std::vector<double> update_class_probs(const ClassFeedback& fb, const AdaptPolicy& pol) {
  fb.validate();
  const std::size_t k = fb.scores.size();
  pol.validate(k);

  std::vector<double> logits(k);
  for (std::size_t c = 0; c < k; ++c) logits[c] = pol.temperature * (1.0 - fb.scores[c]);
  const double top = *std::max_element(logits.begin(), logits.end());
  double z = 0;
  for (double& l : logits) {
    l = std::exp(l - top);
    z += l;
  }
  const double mass = 1.0 - static_cast<double>(k) * pol.floor;
  std::vector<double> p(k);
  for (std::size_t c = 0; c < k; ++c) p[c] = pol.floor + mass * (logits[c] / z);
  return p;
}

const std::vector<double>& FeedbackState::update(const ClassFeedback& fb) {
  fb.validate();
  pol_.validate(fb.scores.size());
  if (smoothed_.size() != fb.scores.size()) {
    smoothed_ = fb.scores;
  } else {
    for (std::size_t c = 0; c < smoothed_.size(); ++c) {
      smoothed_[c] = (1.0 - pol_.smoothing) * smoothed_[c] + pol_.smoothing * fb.scores[c];
    }
  }
  ++steps_;
  probs_ = update_class_probs({smoothed_, fb.step}, pol_);
  return probs_;
}

const std::vector<double>& feedback_step(channel::ControlHub& hub, FeedbackState& state, const ClassFeedback& fb) {
  const auto& probs = state.update(fb);
  hub.send(channel::make_set_class_probs(probs));
  return probs;
}

}  // namespace randstream::adapt
