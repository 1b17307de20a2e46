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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "eegstress/error.hpp"
#include "eegstress/evaluate.hpp"
#include "eegstress/experiment.hpp"
#include "eegstress/explain.hpp"
#include "eegstress/features.hpp"
#include "eegstress/gbt.hpp"
#include "eegstress/ingest.hpp"
#include "eegstress/stressguard.hpp"
#include "eegstress/synthgen.hpp"

namespace fs = std::filesystem;
using namespace eegstress;

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
}

GbtParams params_for(const FeatureTable& table, const std::string& params_path, const std::string& objective,
                     std::optional<std::uint64_t> seed) {
  GbtParams p;
  int max_label = 0;
  for (const auto& r : table.rows) max_label = std::max(max_label, r.class_label);
  if (max_label >= 2) {
    p.objective = Objective::Softmax;
    p.class_count = max_label + 1;
  } else {
    p.objective = Objective::BinaryLogistic;
    p.class_count = 2;
  }
  if (!params_path.empty()) p = GbtParams::from_json(read_json(params_path), p);
  if (objective == "binary") {
    p.objective = Objective::BinaryLogistic;
    p.class_count = 2;
  } else if (objective == "softmax") {
    p.objective = Objective::Softmax;
    p.class_count = std::max(p.class_count, max_label + 1);
  }
  if (seed) p.seed = *seed;
  p.validate();
  return p;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EEG band-power classification with stress screening and correction"};
  app.require_subcommand(1);

  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> threshold;

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic cohort (EDF files and manifest)");
  std::string spec_path;
  synth->add_option("--spec", spec_path, "Cohort spec JSON")->required()->check(CLI::ExistingFile);
  synth->add_option("--out", out, "Output directory")->required();
  synth->add_option("--seed", seed, "Override the spec seed");

  // features
  auto* features = app.add_subcommand("features", "Extract region x band features from a manifest");
  std::string manifest_path, pipeline_path, label = "class";
  features->add_option("--manifest", manifest_path, "Dataset manifest JSON")->required()->check(CLI::ExistingFile);
  features->add_option("--config", pipeline_path, "Pipeline config JSON")->check(CLI::ExistingFile);
  features->add_option("--label", label, "Label source")->check(CLI::IsMember({"class", "stress"}));
  features->add_option("--out", out, "Feature CSV")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a boosted-tree model");
  std::string features_path, params_path, objective;
  train_cmd->add_option("--features", features_path, "Feature CSV")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--params", params_path, "Model parameter JSON")->check(CLI::ExistingFile);
  train_cmd->add_option("--objective", objective, "binary or softmax")->check(CLI::IsMember({"binary", "softmax"}));
  train_cmd->add_option("--seed", seed, "Random seed");
  train_cmd->add_option("--out", out, "Model JSON")->required();

  // loso
  auto* loso_cmd = app.add_subcommand("loso", "Leave-one-subject-out evaluation");
  loso_cmd->add_option("--features", features_path, "Feature CSV")->required()->check(CLI::ExistingFile);
  loso_cmd->add_option("--params", params_path, "Model parameter JSON")->check(CLI::ExistingFile);
  loso_cmd->add_option("--objective", objective, "binary or softmax")->check(CLI::IsMember({"binary", "softmax"}));
  loso_cmd->add_option("--seed", seed, "Random seed");
  loso_cmd->add_option("--out", out, "Output directory")->required();

  // shap
  auto* shap_cmd = app.add_subcommand("shap", "Shapley attributions and feature importance");
  std::string model_path;
  shap_cmd->add_option("--model", model_path, "Model JSON")->required()->check(CLI::ExistingFile);
  shap_cmd->add_option("--features", features_path, "Feature CSV")->required()->check(CLI::ExistingFile);
  shap_cmd->add_option("--out", out, "Output directory")->required();

  // stress-screen
  auto* screen_cmd = app.add_subcommand("stress-screen", "Flag subjects predicted to be stressed");
  screen_cmd->add_option("--model", model_path, "Binary stress model JSON")->required()->check(CLI::ExistingFile);
  screen_cmd->add_option("--features", features_path, "Feature CSV")->required()->check(CLI::ExistingFile);
  screen_cmd->add_option("--threshold", threshold, "Flag when probability > threshold (default 0.5)");
  screen_cmd->add_option("--out", out, "Output directory")->required();

  // stress-adjust
  auto* adjust_cmd = app.add_subcommand("stress-adjust", "Apply the stress band-power correction");
  std::string coefficients_path, stress_features_path, report_path, subjects_list;
  adjust_cmd->add_option("--features", features_path, "Feature CSV to adjust")->required()->check(CLI::ExistingFile);
  auto* coeff_opt = adjust_cmd->add_option("--coefficients", coefficients_path, "Stress adjustment JSON")
                        ->check(CLI::ExistingFile);
  auto* stress_feat_opt =
      adjust_cmd->add_option("--stress-features", stress_features_path, "Stress-labeled feature CSV")
          ->check(CLI::ExistingFile);
  coeff_opt->excludes(stress_feat_opt);
  auto* report_opt =
      adjust_cmd->add_option("--report", report_path, "Stress report JSON; flagged subjects are adjusted")
          ->check(CLI::ExistingFile);
  auto* subjects_opt = adjust_cmd->add_option("--subjects", subjects_list, "Comma-separated subject ids");
  report_opt->excludes(subjects_opt);
  adjust_cmd->add_option("--out", out, "Output directory")->required();

  // experiment
  auto* exp_cmd = app.add_subcommand("experiment", "Run one of the experiment recipes");
  std::string config_path;
  exp_cmd->add_option("--config", config_path, "Experiment config JSON")->required()->check(CLI::ExistingFile);
  exp_cmd->add_option("--seed", seed, "Override the config seed");
  exp_cmd->add_option("--threshold", threshold, "Override the stress threshold");
  exp_cmd->add_option("--out", out, "Override the report directory");

  // report
  auto* report_cmd = app.add_subcommand("report", "Re-emit report files from a report.json");
  std::string input_path;
  report_cmd->add_option("--input", input_path, "report.json")->required()->check(CLI::ExistingFile);
  report_cmd->add_option("--out", out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) {
      CohortSpec spec = CohortSpec::from_json(read_json(spec_path));
      if (seed) spec.seed = *seed;
      const DatasetManifest m = synth_cohort(spec, out);
      std::cout << "wrote " << m.entries.size() << " recordings and " << (fs::path(out) / "manifest.json").string()
                << '\n';
    } else if (features->parsed()) {
      const PipelineConfig config =
          pipeline_path.empty() ? PipelineConfig{} : PipelineConfig::from_json(read_json(pipeline_path));
      const FeatureTable table = build_feature_table(
          load_manifest(manifest_path), config, label == "stress" ? LabelSource::StressGroundTruth : LabelSource::ClassLabel);
      write_feature_csv(table, out);
      std::cout << "wrote " << table.rows.size() << " epochs to " << out << '\n';
    } else if (train_cmd->parsed()) {
      const FeatureTable table = read_feature_csv(features_path);
      const GbtParams p = params_for(table, params_path, objective, seed);
      const TrainResult r = fit_with_inner_split(table, p, p.seed);
      save_model(r.model, out);
      std::cout << "trained " << r.model.rounds() << " rounds; wrote " << out << '\n';
    } else if (loso_cmd->parsed()) {
      const FeatureTable table = read_feature_csv(features_path);
      const GbtParams p = params_for(table, params_path, objective, seed);
      const LosoResult r = loso(table, p, p.seed);
      ensure_dir(out);
      write_json(loso_to_json(r), fs::path(out) / "loso.json");
      write_confusion_csv(confusion(r), fs::path(out) / "confusion.csv");
      std::cout << "folds " << r.fold_count() << "; per-class AUC";
      for (double a : r.per_class_auc) std::cout << ' ' << a;
      std::cout << '\n';
    } else if (shap_cmd->parsed()) {
      const TreeEnsemble model = load_model(model_path);
      const FeatureTable table = read_feature_csv(features_path);
      const ShapMatrix m = explain_table(model, table);
      auto ranking = aggregate_importance(m, false);
      const auto pooled = ranking;
      const auto per_class = aggregate_importance(m, true);
      ranking.insert(ranking.end(), per_class.begin(), per_class.end());
      ensure_dir(out);
      write_shap_csv(m, fs::path(out) / "shap.csv");
      write_importance_csv(ranking, fs::path(out) / "importance.csv");
      std::ofstream(fs::path(out) / "importance.svg") << importance_svg(pooled);
      std::cout << "top feature " << pooled.front().feature << '\n';
    } else if (screen_cmd->parsed()) {
      const StressReport r =
          screen(load_model(model_path), read_feature_csv(features_path), threshold.value_or(0.5));
      ensure_dir(out);
      write_json(report_to_json(r), fs::path(out) / "stress_report.json");
      std::cout << "flagged " << r.flagged().size() << " of " << r.subjects.size() << " subjects\n";
    } else if (adjust_cmd->parsed()) {
      const FeatureTable table = read_feature_csv(features_path);
      StressAdjustment adj;
      if (!coefficients_path.empty()) {
        adj = adjustment_from_json(read_json(coefficients_path));
      } else if (!stress_features_path.empty()) {
        const FeatureTable st = read_feature_csv(stress_features_path);
        FeatureTable stressed{st.feature_names, {}}, calm{st.feature_names, {}};
        for (const auto& r : st.rows) (r.class_label != 0 ? stressed : calm).rows.push_back(r);
        adj = stress_coefficient(stressed, calm);
      } else {
        throw CLI::RequiredError("--coefficients or --stress-features");
      }
      std::vector<std::string> subjects;
      if (!report_path.empty()) {
        subjects = report_from_json(read_json(report_path)).flagged();
      } else if (!subjects_list.empty()) {
        subjects = split_list(subjects_list);
      } else {
        throw CLI::RequiredError("--report or --subjects");
      }
      const FeatureTable adjusted = adjust(table, adj, subjects);
      ensure_dir(out);
      write_feature_csv(adjusted, fs::path(out) / "features_adjusted.csv");
      write_json(adjustment_to_json(adj), fs::path(out) / "stress_adjustment.json");
      std::cout << "adjusted " << subjects.size() << " subjects\n";
    } else if (exp_cmd->parsed()) {
      ExperimentConfig config = ExperimentConfig::load(config_path);
      if (seed) {
        config.seed = *seed;
        config.source["seed"] = *seed;
      }
      if (threshold) {
        config.threshold = *threshold;
        config.source["threshold"] = *threshold;
      }
      if (!out.empty()) config.out = out;
      const ExperimentReport report = run_experiment(config);
      emit_report(report, config.out);
      std::cout << "experiment " << report.experiment_id << ": per-class AUC";
      for (double a : report.loso.per_class_auc) std::cout << ' ' << a;
      std::cout << "; report in " << config.out.string() << '\n';
    } else if (report_cmd->parsed()) {
      const ExperimentReport report = experiment_report_from_json(read_json(input_path));
      for (const auto& p : emit_report(report, out)) std::cout << p.string() << '\n';
    }
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
