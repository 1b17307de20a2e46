// Copyright 2026 The eegstress Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "eegstress/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "eegstress/error.hpp"

namespace eegstress {

double roc_auc(std::span<const double> scores, const std::vector<bool>& labels) {
  if (scores.size() != labels.size()) throw Error(Errc::DimensionMismatch, "scores and labels differ in length");
  std::vector<double> neg;
  std::vector<double> pos;
  for (std::size_t i = 0; i < scores.size(); ++i) (labels[i] ? pos : neg).push_back(scores[i]);
  if (pos.empty() || neg.empty()) throw Error(Errc::SingleClassLabels, "AUC needs both label values");
  std::sort(neg.begin(), neg.end());
  // Twice the concordance count, kept integral so the ratio is exact.
  std::uint64_t twice = 0;
  for (double s : pos) {
    const auto lo = std::lower_bound(neg.begin(), neg.end(), s);
    const auto hi = std::upper_bound(lo, neg.end(), s);
    twice += 2 * static_cast<std::uint64_t>(lo - neg.begin()) + static_cast<std::uint64_t>(hi - lo);
  }
  const auto pairs = static_cast<std::uint64_t>(pos.size()) * static_cast<std::uint64_t>(neg.size());
  return static_cast<double>(twice) / static_cast<double>(2 * pairs);
}

double multiclass_log_loss(const std::vector<std::vector<double>>& probabilities, std::span<const int> labels) {
  if (probabilities.size() != labels.size()) {
    throw Error(Errc::DimensionMismatch, "probabilities and labels differ in length");
  }
  if (labels.empty()) throw Error(Errc::EmptyInput, "log-loss of an empty set");
  double sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = std::clamp(probabilities[i].at(static_cast<std::size_t>(labels[i])), 1e-15, 1.0);
    sum -= std::log(p);
  }
  return sum / static_cast<double>(labels.size());
}

}  // namespace eegstress
