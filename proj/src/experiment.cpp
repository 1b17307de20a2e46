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

#include "eegstress/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "eegstress/error.hpp"
#include "eegstress/features.hpp"

namespace eegstress {
namespace {

const std::vector<std::string>& experiment_ids() {
  static const std::vector<std::string> ids{"1a", "1b", "2", "3", "4", "5", "6"};
  return ids;
}

const std::vector<std::string>& role_names() {
  static const std::vector<std::string> roles{kRoleRest, kRoleTask, kRoleExternalControls, kRoleStress,
                                              kRoleExternalPool};
  return roles;
}

PowerProfile per_region(double delta, double theta, double alpha, double beta, double gamma) {
  PowerProfile p;
  const auto& regions = RegionMap::standard().regions;
  for (const auto& r : regions) {
    p.insert(p.end(), {delta, theta, r.name == "occipital" ? alpha * 1.5 : alpha, beta, gamma});
  }
  return p;
}

std::size_t band_index(const std::string& name) {
  const auto& bands = canonical_bands();
  for (std::size_t b = 0; b < bands.size(); ++b) {
    if (bands[b].name == name) return b;
  }
  throw Error(Errc::InvalidSpec, "unknown band " + name);
}

void scale_band(PowerProfile& p, const std::string& band, double factor) {
  const std::size_t B = canonical_bands().size();
  for (std::size_t i = band_index(band); i < p.size(); i += B) p[i] *= factor;
}

FeatureTable relabel(const FeatureTable& t, const std::map<int, int>& mapping) {
  FeatureTable out{t.feature_names, {}};
  for (const auto& r : t.rows) {
    const auto it = mapping.find(r.class_label);
    if (it == mapping.end()) continue;
    FeatureRow row = r;
    row.class_label = it->second;
    out.rows.push_back(std::move(row));
  }
  return out;
}

FeatureTable with_label(const FeatureTable& t, int label) {
  FeatureTable out = t;
  for (auto& r : out.rows) r.class_label = label;
  return out;
}

const FeatureTable& table_for(const std::map<std::string, FeatureTable>& tables, const std::string& role) {
  const auto it = tables.find(role);
  if (it == tables.end()) throw Error(Errc::MissingRole, "experiment needs the '" + role + "' dataset");
  return it->second;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

GbtParams stress_model_params(const ExperimentConfig& config) {
  GbtParams p = config.stress_params.value_or(config.params);
  p.objective = Objective::BinaryLogistic;
  p.class_count = 2;
  return p;
}

std::pair<FeatureTable, FeatureTable> split_by_label(const FeatureTable& t) {
  FeatureTable pos{t.feature_names, {}}, neg{t.feature_names, {}};
  for (const auto& r : t.rows) (r.class_label != 0 ? pos : neg).rows.push_back(r);
  return {pos, neg};
}

}  // namespace

PowerProfile control_profile() { return per_region(10.0, 6.0, 8.0, 4.0, 1.0); }

PowerProfile rest_profile() {
  PowerProfile p = control_profile();
  scale_band(p, "theta", 2.0);
  scale_band(p, "gamma", 2.0);
  return p;
}

PowerProfile task_profile() {
  PowerProfile p = rest_profile();
  scale_band(p, "beta", 1.15);
  return p;
}

PowerProfile stress_offset_profile() {
  const PowerProfile c = control_profile();
  PowerProfile d = rest_profile();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] -= c[i];
  return d;
}

CohortSpec default_cohort(const std::string& role, std::uint64_t seed) {
  CohortSpec s;
  s.recording_s = 60.0;
  s.rate_hz = 200.0;
  s.subject_jitter = 0.05;
  s.dataset_id = role;
  const auto pos = std::find(role_names().begin(), role_names().end(), role);
  if (pos == role_names().end()) throw Error(Errc::InvalidConfig, "unknown role " + role);
  s.seed = subject_seed(seed, static_cast<std::uint64_t>(pos - role_names().begin()) + 101);
  if (role == kRoleRest) {
    s.subject_prefix = "rest";
    s.classes = {{0, "control", 30, control_profile(), {}}, {1, "rest", 30, rest_profile(), {}}};
  } else if (role == kRoleTask) {
    s.subject_prefix = "task";
    s.classes = {{0, "control", 30, control_profile(), {}}, {1, "task", 30, task_profile(), {}}};
  } else if (role == kRoleExternalControls) {
    s.subject_prefix = "ext";
    s.classes = {{0, "control", 30, control_profile(), {}}};
    s.stress_fraction = 0.4;
    s.stress_offset = stress_offset_profile();
  } else if (role == kRoleStress) {
    s.subject_prefix = "stress";
    s.classes = {{0, "volunteer", 40, control_profile(), {}}};
    s.stress_fraction = 0.5;
    s.stress_offset = stress_offset_profile();
  } else {
    s.subject_prefix = "pool";
    s.classes = {{0, "control", 100, control_profile(), {}}};
    s.stress_fraction = 0.4;
    s.stress_offset = stress_offset_profile();
  }
  return s;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
  };
  try {
    if (!j.is_object()) throw Error(Errc::InvalidConfig, "experiment config must be a JSON object");
    c.experiment_id = j.at("experiment").is_string() ? j["experiment"].get<std::string>()
                                                     : std::to_string(j["experiment"].get<int>());
    if (std::find(experiment_ids().begin(), experiment_ids().end(), c.experiment_id) == experiment_ids().end()) {
      throw Error(Errc::InvalidConfig, "unknown experiment '" + c.experiment_id + "'");
    }
    c.seed = j.value("seed", c.seed);
    if (j.contains("out")) c.out = resolve(j["out"].get<std::string>());
    if (j.contains("data_dir")) c.data_dir = resolve(j["data_dir"].get<std::string>());
    if (j.contains("pipeline")) c.pipeline = PipelineConfig::from_json(j["pipeline"]);
    if (j.contains("params")) c.params = GbtParams::from_json(j["params"]);
    if (j.contains("stress_params")) c.stress_params = GbtParams::from_json(j["stress_params"]);
    if (j.contains("grid")) c.grid = ParamGrid::from_json(j["grid"]);
    c.threshold = j.value("threshold", c.threshold);
    if (j.contains("coefficient_source")) {
      const auto s = j["coefficient_source"].get<std::string>();
      if (s == "stress_dataset") c.coefficient_source = CoefficientSource::StressDataset;
      else if (s == "cohort") c.coefficient_source = CoefficientSource::Cohort;
      else throw Error(Errc::InvalidConfig, "coefficient_source must be stress_dataset or cohort");
    }
    if (j.contains("controls_count") && !j["controls_count"].is_null()) {
      c.controls_count = j["controls_count"].get<int>();
      if (*c.controls_count < 1) throw Error(Errc::InvalidConfig, "controls_count must be >= 1");
    }
    c.real_data = j.value("real_data", c.real_data);
    if (j.contains("roles")) {
      for (auto it = j["roles"].begin(); it != j["roles"].end(); ++it) {
        if (std::find(role_names().begin(), role_names().end(), it.key()) == role_names().end()) {
          throw Error(Errc::InvalidConfig, "unknown role " + it.key());
        }
        c.roles[it.key()] = resolve(it.value().get<std::string>());
      }
    }
    if (j.contains("synthetic")) {
      for (auto it = j["synthetic"].begin(); it != j["synthetic"].end(); ++it) {
        if (std::find(role_names().begin(), role_names().end(), it.key()) == role_names().end()) {
          throw Error(Errc::InvalidConfig, "unknown role " + it.key());
        }
        c.synthetic[it.key()] = CohortSpec::from_json(it.value());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidConfig, std::string("experiment config: ") + e.what());
  }
  if (!(c.threshold >= 0.0 && c.threshold <= 1.0)) throw Error(Errc::InvalidConfig, "threshold must lie in [0, 1]");
  c.params.validate();
  c.source = j;
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  return from_json(read_json(path), path.parent_path());
}

std::vector<std::string> ExperimentConfig::required_roles() const {
  const std::string& id = experiment_id;
  if (id == "1a") return {kRoleRest};
  if (id == "1b") return {kRoleTask};
  if (id == "2") return {kRoleRest, kRoleTask};
  if (id == "3") return {kRoleRest, kRoleTask, kRoleExternalControls};
  if (id == "6") return {kRoleRest, kRoleTask, kRoleStress, kRoleExternalPool};
  return {kRoleRest, kRoleTask, kRoleExternalControls, kRoleStress};
}

std::string ExperimentConfig::hash() const {
  nlohmann::json j = source;
  if (j.is_object()) j.erase("timestamp");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
  return buf;
}

double ExperimentReport::mean_patient_auc() const {
  double sum = 0.0;
  int n = 0;
  for (std::size_t k = 1; k < loso.per_class_auc.size(); ++k) {
    sum += loso.per_class_auc[k];
    ++n;
  }
  return n > 0 ? sum / n : 0.0;
}

std::vector<ImportanceEntry> ExperimentReport::pooled_importance() const {
  std::vector<ImportanceEntry> out;
  for (const auto& e : importance) {
    if (e.class_label < 0) out.push_back(e);
  }
  return out;
}

ExperimentReport run_experiment_on_tables(const ExperimentConfig& config,
                                          const std::map<std::string, FeatureTable>& tables) {
  const std::string& id = config.experiment_id;
  ExperimentReport report;
  report.experiment_id = id;
  report.seed = config.seed;
  report.config_hash = config.hash();
  report.config = config.source;

  GbtParams params = config.params;
  params.seed = config.seed;
  FeatureTable cohort;
  if (id == "1a" || id == "1b") {
    const FeatureTable& t = table_for(tables, id == "1a" ? kRoleRest : kRoleTask);
    cohort = relabel(t, {{0, 0}, {1, 1}});
    report.class_names = {"control", id == "1a" ? "rest" : "task"};
    params.objective = Objective::BinaryLogistic;
    params.class_count = 2;
  } else {
    report.class_names = {"control", "rest", "task"};
    params.objective = Objective::Softmax;
    params.class_count = 3;
    const FeatureTable rest_patients = relabel(table_for(tables, kRoleRest), {{1, 1}});
    const FeatureTable task_patients = relabel(table_for(tables, kRoleTask), {{1, 2}});
    FeatureTable controls;
    if (id == "2") {
      controls = relabel(table_for(tables, kRoleRest), {{0, 0}});
      controls.append(relabel(table_for(tables, kRoleTask), {{0, 0}}));
    } else if (id == "6") {
      const FeatureTable pool = with_label(table_for(tables, kRoleExternalPool), 0);
      const FeatureTable& stress_table = table_for(tables, kRoleStress);
      const TreeEnsemble stress_model =
          fit_with_inner_split(stress_table, stress_model_params(config), config.seed).model;
      StressReport screened = screen(stress_model, pool, config.threshold);
      std::vector<StressScore> candidates;
      for (const auto& s : screened.subjects) {
        if (!s.flagged) candidates.push_back(s);
      }
      std::stable_sort(candidates.begin(), candidates.end(), [](const StressScore& a, const StressScore& b) {
        return a.probability != b.probability ? a.probability < b.probability : a.subject_id < b.subject_id;
      });
      const std::size_t wanted = config.controls_count
                                     ? static_cast<std::size_t>(*config.controls_count)
                                     : std::max(rest_patients.subjects().size(), task_patients.subjects().size());
      std::vector<std::string> chosen;
      for (std::size_t i = 0; i < candidates.size() && i < wanted; ++i) chosen.push_back(candidates[i].subject_id);
      const std::set<std::string> chosen_set(chosen.begin(), chosen.end());
      for (const auto& s : pool.subjects()) {
        if (!chosen_set.contains(s)) report.excluded_subjects.push_back(s);
      }
      controls = pool.filter_subjects(chosen);
      report.stress = std::move(screened);
    } else {
      controls = with_label(table_for(tables, kRoleExternalControls), 0);
      if (id == "4" || id == "5") {
        const FeatureTable& stress_table = table_for(tables, kRoleStress);
        const TreeEnsemble stress_model =
            fit_with_inner_split(stress_table, stress_model_params(config), config.seed).model;
        StressReport screened = screen(stress_model, controls, config.threshold);
        const auto flagged = screened.flagged();
        if (id == "4") {
          report.excluded_subjects = flagged;
          controls = controls.without_subjects(flagged);
        } else {
          StressAdjustment adj;
          if (config.coefficient_source == CoefficientSource::StressDataset) {
            const auto [stressed, calm] = split_by_label(stress_table);
            adj = stress_coefficient(stressed, calm);
          } else {
            adj = stress_coefficient(controls.filter_subjects(flagged), controls.without_subjects(flagged));
          }
          controls = adjust(controls, adj, flagged);
          report.adjusted_subjects = flagged;
          report.adjustment = std::move(adj);
        }
        report.stress = std::move(screened);
      }
    }
    cohort = controls;
    cohort.append(rest_patients);
    cohort.append(task_patients);
  }

  if (config.grid) {
    report.model_selection = grid_search_cv(cohort, config.grid->expand(params), 4, config.seed);
    params = report.model_selection->best_params;
  }
  report.params = params;
  report.loso = loso(cohort, params, config.seed);

  const TreeEnsemble model = fit_with_inner_split(cohort, params, config.seed).model;
  const ShapMatrix shap = explain_table(model, cohort);
  report.importance = aggregate_importance(shap, false);
  const auto per_class = aggregate_importance(shap, true);
  report.importance.insert(report.importance.end(), per_class.begin(), per_class.end());
  return report;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  std::map<std::string, FeatureTable> tables;
  const std::filesystem::path data_dir = config.data_dir.empty() ? config.out / "data" : config.data_dir;
  for (const auto& role : config.required_roles()) {
    DatasetManifest manifest;
    if (config.real_data) {
      const auto it = config.roles.find(role);
      if (it == config.roles.end()) {
        throw Error(Errc::MissingRole, "experiment " + config.experiment_id + " needs a manifest for '" + role + "'");
      }
      manifest = load_manifest(it->second);
    } else {
      const auto it = config.synthetic.find(role);
      const CohortSpec spec = it != config.synthetic.end() ? it->second : default_cohort(role, config.seed);
      manifest = synth_cohort(spec, data_dir / role);
    }
    const LabelSource labels = role == kRoleStress ? LabelSource::StressGroundTruth : LabelSource::ClassLabel;
    tables[role] = build_feature_table(manifest, config.pipeline, labels);
  }
  return run_experiment_on_tables(config, tables);
}

}  // namespace eegstress
