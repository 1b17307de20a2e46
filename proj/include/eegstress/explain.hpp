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
#include <span>
#include <string>
#include <vector>

#include "eegstress/features.hpp"
#include "eegstress/gbt.hpp"

namespace eegstress {

// Attributions for one instance. phi[output][feature]; base[output] is the
// base score plus the expected tree outputs, so that for each output
// sum(phi[output]) + base[output] equals the margin.
struct ShapRow {
  std::vector<std::vector<double>> phi;
  std::vector<double> base;
};

// Cover-weighted mean of the leaf values.
double expected_value(const Tree& tree);

// Path-dependent tree Shapley values. Throws MissingCover if an internal node
// lacks a positive cover.
ShapRow tree_shap(const TreeEnsemble& model, std::span<const double> x);

// Subset enumeration with the same cover-weighted expectation.
// Throws TooManyFeatures above 12 features.
ShapRow shap_brute_force(const TreeEnsemble& model, std::span<const double> x);

// Expectation of the model margin for `output` when only features with
// known[f] set are observed.
double conditional_expectation(const TreeEnsemble& model, std::span<const double> x,
                               const std::vector<bool>& known, int output);

struct ShapMatrix {
  std::vector<std::string> feature_names;
  int output_count = 0;
  // Class label written for each output: the output index, or 1 for a
  // binary model's single output.
  std::vector<int> output_classes;
  std::vector<std::string> subject_ids;
  std::vector<int> epoch_indices;
  std::vector<ShapRow> rows;
};

ShapMatrix explain_table(const TreeEnsemble& model, const FeatureTable& table);

struct ImportanceEntry {
  std::string feature;
  int class_label = -1;  // -1 when aggregated over all classes
  double mean_abs_phi = 0.0;
};

// Mean |phi| over instances (and over outputs unless per_class), sorted by
// descending value with ties broken by feature name. Per-class rankings are
// concatenated in output order. Throws EmptyMatrix.
std::vector<ImportanceEntry> aggregate_importance(const ShapMatrix& matrix, bool per_class);

// subject_id,epoch_index,class,feature,phi
void write_shap_csv(const ShapMatrix& matrix, const std::filesystem::path& path);
// feature,class,mean_abs_phi ("all" for the pooled ranking)
void write_importance_csv(const std::vector<ImportanceEntry>& ranking, const std::filesystem::path& path);

}  // namespace eegstress
