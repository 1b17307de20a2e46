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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "eegstress/dsp.hpp"
#include "eegstress/evaluate.hpp"
#include "eegstress/explain.hpp"
#include "eegstress/gbt.hpp"
#include "eegstress/stressguard.hpp"
#include "eegstress/synthgen.hpp"
#include "json.hpp"

namespace eegstress {

// Dataset roles. rest and task cohorts label their own controls 0 and
// patients 1; external cohorts hold controls only; the stress cohort carries
// stress_ground_truth for every subject.
inline constexpr const char* kRoleRest = "rest";
inline constexpr const char* kRoleTask = "task";
inline constexpr const char* kRoleExternalControls = "external_controls";
inline constexpr const char* kRoleStress = "stress";
inline constexpr const char* kRoleExternalPool = "external_pool";

enum class CoefficientSource { StressDataset, Cohort };

struct ExperimentConfig {
  std::string experiment_id = "3";  // 1a 1b 2 3 4 5 6
  std::uint64_t seed = 0;
  std::filesystem::path out = "report";
  std::filesystem::path data_dir;  // synthetic cohorts; defaults to <out>/data
  PipelineConfig pipeline;
  GbtParams params;
  std::optional<GbtParams> stress_params;
  std::optional<ParamGrid> grid;
  double threshold = 0.5;
  CoefficientSource coefficient_source = CoefficientSource::StressDataset;
  std::optional<int> controls_count;
  bool real_data = false;
  std::map<std::string, std::filesystem::path> roles;  // manifest per role
  std::map<std::string, CohortSpec> synthetic;          // overrides of the built-in cohorts
  nlohmann::json source;                                // configuration as given

  // Relative paths resolve against base_dir. Throws InvalidConfig.
  static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  static ExperimentConfig load(const std::filesystem::path& path);

  std::vector<std::string> required_roles() const;
  // FNV-1a of the configuration with any "timestamp" key removed, as hex.
  std::string hash() const;
};

// Built-in synthetic cohort for a role.
CohortSpec default_cohort(const std::string& role, std::uint64_t seed);

// Band-power profiles (uV^2, feature order) of the built-in cohorts.
PowerProfile control_profile();
PowerProfile rest_profile();
PowerProfile task_profile();
// rest_profile() - control_profile()
PowerProfile stress_offset_profile();

struct ExperimentReport {
  std::string experiment_id;
  std::vector<std::string> class_names;
  LosoResult loso;
  std::vector<ImportanceEntry> importance;  // pooled, then per class
  std::optional<StressReport> stress;
  std::optional<StressAdjustment> adjustment;
  std::vector<std::string> excluded_subjects;
  std::vector<std::string> adjusted_subjects;
  std::optional<CvResult> model_selection;
  GbtParams params;
  std::uint64_t seed = 0;
  std::string config_hash;
  nlohmann::json config;

  // Mean per-class AUC over the patient classes (labels >= 1).
  double mean_patient_auc() const;
  std::vector<ImportanceEntry> pooled_importance() const;
};

// Runs the recipe of config.experiment_id. Throws MissingRole when a
// required dataset is absent in real-data mode.
ExperimentReport run_experiment(const ExperimentConfig& config);

// Runs the recipe on prepared feature tables (keys are roles; the stress
// table is labeled by stress ground truth).
ExperimentReport run_experiment_on_tables(const ExperimentConfig& config,
                                          const std::map<std::string, FeatureTable>& tables);

nlohmann::ordered_json experiment_report_to_json(const ExperimentReport& report);
ExperimentReport experiment_report_from_json(const nlohmann::json& j);

// Writes report.json, confusion.csv, importance.csv, importance.svg and,
// when the report carries one, stress_report.json. Returns the paths written.
std::vector<std::filesystem::path> emit_report(const ExperimentReport& report, const std::filesystem::path& dir);

// Horizontal bar chart of the top `top` entries, 800x600 viewBox.
std::string importance_svg(const std::vector<ImportanceEntry>& ranking, std::size_t top = 10);

}  // namespace eegstress
