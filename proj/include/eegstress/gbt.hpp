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
#include <utility>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eegstress/features.hpp"
#include "json.hpp"

namespace eegstress {

enum class Objective { BinaryLogistic, Softmax };
enum class ClassWeighting { None, Weighted };

struct GbtParams {
  int max_rounds = 2000;
  int early_stop_rounds = 10;  // 0 disables early stopping
  double learning_rate = 0.1;
  int max_depth = 5;
  double min_child_weight = 1.0;
  double l2_lambda = 1.0;
  double min_split_gain = 0.0;
  double subsample = 1.0;
  double colsample_bytree = 1.0;
  Objective objective = Objective::Softmax;
  int class_count = 3;
  ClassWeighting class_weighting = ClassWeighting::Weighted;
  std::uint64_t seed = 0;

  // Throws InvalidParams.
  void validate() const;
  int output_count() const { return objective == Objective::BinaryLogistic ? 1 : class_count; }

  nlohmann::ordered_json to_json() const;
  // Fields absent from j keep the values of base.
  static GbtParams from_json(const nlohmann::json& j, const GbtParams& base);
  static GbtParams from_json(const nlohmann::json& j);
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // x < threshold goes left
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf output, already scaled by the learning rate
  double cover = 0.0;  // hessian sum of the training rows reaching the node

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  int class_index = 0;
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(std::span<const double> x) const;
  int depth() const;
};

struct TreeEnsemble {
  GbtParams params;
  double base_score = 0.0;
  std::vector<Tree> trees;
  std::vector<std::string> feature_names;

  int output_count() const { return params.output_count(); }
  std::size_t feature_count() const { return feature_names.size(); }
  // Boosting rounds held (trees per output).
  std::size_t rounds() const;
};

struct TrainingTrace {
  std::vector<double> train_loss;   // weighted log-loss after each round
  std::vector<double> eval_metric;  // one entry per round when an eval set is given
  bool eval_maximize = false;
  int best_round = 0;  // rounds kept in the model
  bool stopped_early = false;
};

struct TrainResult {
  TreeEnsemble model;
  TrainingTrace trace;
};

// Exact greedy second-order boosting. Labels are the table's class labels:
// 0/1 for the binary objective, 0..class_count-1 for softmax.
TreeEnsemble train(const FeatureTable& table, const GbtParams& params,
                   const FeatureTable* eval = nullptr);
TrainResult train_with_trace(const FeatureTable& table, const GbtParams& params,
                             const FeatureTable* eval = nullptr);

std::vector<double> predict_margin(const TreeEnsemble& model, std::span<const double> x);
// Binary models return {1 - p, p}; softmax models one probability per class.
std::vector<double> predict_proba(const TreeEnsemble& model, std::span<const double> x);

double sigmoid(double z);
std::vector<double> softmax(std::span<const double> margins);

// Per-sample weights; Weighted makes every class carry equal total weight.
std::vector<double> class_weights(std::span<const int> labels, int class_count, ClassWeighting mode);

nlohmann::ordered_json model_to_json(const TreeEnsemble& model);
TreeEnsemble model_from_json(const nlohmann::json& j);
void save_model(const TreeEnsemble& model, const std::filesystem::path& path);
TreeEnsemble load_model(const std::filesystem::path& path);

// Subject-level stratified split used for early stopping: about `fraction`
// of each class's subjects go to the eval set (at least one when the class
// has two or more subjects). Returns {train subjects, eval subjects}.
std::pair<std::vector<std::string>, std::vector<std::string>> split_eval_subjects(
    const FeatureTable& table, double fraction, std::uint64_t seed);

// Trains with an inner subject-level eval split when early stopping is on.
TrainResult fit_with_inner_split(const FeatureTable& table, const GbtParams& params,
                                 std::uint64_t seed, std::vector<std::string>* eval_subjects = nullptr);

struct ParamGrid {
  std::vector<int> max_depth{3, 5, 7};
  std::vector<double> learning_rate{0.05, 0.1, 0.3};
  std::vector<double> min_child_weight{1.0, 5.0};
  std::vector<double> subsample{0.8, 1.0};

  // Cartesian product in field order (max_depth outermost).
  std::vector<GbtParams> expand(const GbtParams& base) const;
  static ParamGrid from_json(const nlohmann::json& j);
};

struct CvResult {
  std::vector<GbtParams> grid;
  std::vector<double> mean_metric;
  std::size_t best_index = 0;
  GbtParams best_params;
};

// k subject folds, stratified by class, shuffled by seed. Each fold holds
// subject ids; every subject lands in exactly one fold.
std::vector<std::vector<std::string>> stratified_subject_folds(const FeatureTable& table, int k,
                                                               std::uint64_t seed);

// Validation metric: AUC (binary) or macro one-vs-rest AUC (softmax),
// epoch-level. Best = highest mean, ties to the earliest grid point.
CvResult grid_search_cv(const FeatureTable& table, const std::vector<GbtParams>& grid, int k = 4,
                        std::uint64_t seed = 0);

}  // namespace eegstress
