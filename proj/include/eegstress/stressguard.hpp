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

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "eegstress/features.hpp"
#include "eegstress/gbt.hpp"
#include "json.hpp"

namespace eegstress {

struct StressScore {
  std::string subject_id;
  double probability = 0.0;
  bool flagged = false;
};

struct StressReport {
  double threshold = 0.5;
  std::vector<StressScore> subjects;  // table subject order

  std::vector<std::string> flagged() const;
  std::vector<std::string> unflagged() const;
};

// Mean stress probability per subject; flagged iff probability > threshold.
// The model must be binary with the table's feature columns (FeatureMismatch).
StressReport screen(const TreeEnsemble& stress_model, const FeatureTable& table, double threshold = 0.5);

struct StressAdjustment {
  std::vector<std::string> feature_names;
  std::vector<double> coefficients;  // mean(stressed) - mean(nonstressed)
  std::size_t n_stressed = 0;
  std::size_t n_nonstressed = 0;
};

// Per-feature difference of row means. Throws EmptyGroup or FeatureMismatch.
StressAdjustment stress_coefficient(const FeatureTable& stressed, const FeatureTable& nonstressed);

// Subtracts the coefficients from every row of the listed subjects.
// Throws UnknownSubject or FeatureMismatch.
FeatureTable adjust(const FeatureTable& table, const StressAdjustment& adj, const std::vector<std::string>& subjects);

nlohmann::ordered_json report_to_json(const StressReport& report);
StressReport report_from_json(const nlohmann::json& j);
nlohmann::ordered_json adjustment_to_json(const StressAdjustment& adj);
StressAdjustment adjustment_from_json(const nlohmann::json& j);

void write_json(const nlohmann::ordered_json& j, const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace eegstress
