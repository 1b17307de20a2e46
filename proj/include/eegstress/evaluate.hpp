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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "eegstress/features.hpp"
#include "eegstress/gbt.hpp"
#include "eegstress/metrics.hpp"
#include "json.hpp"

namespace eegstress {

// Mean of the epoch probability vectors, renormalized to sum 1.
// Throws EmptyInput.
std::vector<double> subject_probability(const std::vector<std::vector<double>>& epoch_probabilities);

// Subject-level probabilities for every subject of the table, in table order.
std::vector<std::pair<std::string, std::vector<double>>> subject_probabilities(const TreeEnsemble& model,
                                                                                 const FeatureTable& table);

struct SubjectPrediction {
  std::string subject_id;
  int true_class = 0;
  int predicted_class = 0;
  std::vector<double> probabilities;
};

struct FoldRecord {
  std::string held_out;
  std::vector<std::string> train_subjects;
  std::vector<std::string> eval_subjects;
  int rounds = 0;
};

struct ConfusionMatrix {
  std::vector<std::string> class_names;
  std::vector<std::vector<int>> counts;  // counts[true][predicted]

  int total() const;
};

struct LosoResult {
  int class_count = 0;
  std::vector<SubjectPrediction> subjects;  // table subject order
  std::vector<double> per_class_auc;        // one-vs-rest, subject level; NaN if a class is absent
  std::vector<FoldRecord> folds;

  std::size_t fold_count() const { return folds.size(); }
};

// One fold per subject. Throws TooFewSubjects unless every class present has
// at least two subjects.
LosoResult loso(const FeatureTable& table, const GbtParams& params, std::uint64_t seed);

// Index of the largest probability; the first wins ties.
int argmax(const std::vector<double>& values);

// Per-class one-vs-rest AUC over subject predictions.
std::vector<double> per_class_auc(const std::vector<SubjectPrediction>& subjects, int class_count);

ConfusionMatrix confusion(const LosoResult& result, const std::vector<std::string>& class_names = {});

nlohmann::ordered_json loso_to_json(const LosoResult& result, const std::vector<std::string>& class_names = {});
void write_confusion_csv(const ConfusionMatrix& matrix, const std::filesystem::path& path);

}  // namespace eegstress
