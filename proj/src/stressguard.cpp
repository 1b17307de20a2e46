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

#include "eegstress/stressguard.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "eegstress/error.hpp"
#include "eegstress/evaluate.hpp"

namespace eegstress {

std::vector<std::string> StressReport::flagged() const {
  std::vector<std::string> out;
  for (const auto& s : subjects) {
    if (s.flagged) out.push_back(s.subject_id);
  }
  return out;
}

std::vector<std::string> StressReport::unflagged() const {
  std::vector<std::string> out;
  for (const auto& s : subjects) {
    if (!s.flagged) out.push_back(s.subject_id);
  }
  return out;
}

StressReport screen(const TreeEnsemble& stress_model, const FeatureTable& table, double threshold) {
  if (stress_model.params.objective != Objective::BinaryLogistic) {
    throw Error(Errc::FeatureMismatch, "stress screening needs a binary model");
  }
  if (stress_model.feature_names != table.feature_names) {
    throw Error(Errc::FeatureMismatch, "table columns differ from the stress model's features");
  }
  StressReport report;
  report.threshold = threshold;
  for (const auto& [id, probs] : subject_probabilities(stress_model, table)) {
    const double p = probs[1];
    report.subjects.push_back({id, p, p > threshold});
  }
  return report;
}

StressAdjustment stress_coefficient(const FeatureTable& stressed, const FeatureTable& nonstressed) {
  if (stressed.rows.empty() || nonstressed.rows.empty()) {
    throw Error(Errc::EmptyGroup, "stress coefficient needs rows in both groups");
  }
  if (stressed.feature_names != nonstressed.feature_names) {
    throw Error(Errc::FeatureMismatch, "stressed and non-stressed tables have different columns");
  }
  auto means = [](const FeatureTable& t) {
    std::vector<double> m(t.feature_names.size(), 0.0);
    for (const auto& r : t.rows) {
      for (std::size_t f = 0; f < m.size(); ++f) m[f] += r.values[f];
    }
    for (double& v : m) v /= static_cast<double>(t.rows.size());
    return m;
  };
  StressAdjustment adj;
  adj.feature_names = stressed.feature_names;
  const auto ms = means(stressed);
  const auto mn = means(nonstressed);
  for (std::size_t f = 0; f < ms.size(); ++f) adj.coefficients.push_back(ms[f] - mn[f]);
  adj.n_stressed = stressed.subjects().size();
  adj.n_nonstressed = nonstressed.subjects().size();
  return adj;
}

FeatureTable adjust(const FeatureTable& table, const StressAdjustment& adj, const std::vector<std::string>& subjects) {
  if (adj.feature_names != table.feature_names || adj.coefficients.size() != table.feature_names.size()) {
    throw Error(Errc::FeatureMismatch, "adjustment columns differ from the table's");
  }
  const auto present = table.subjects();
  const std::set<std::string> known(present.begin(), present.end());
  for (const auto& s : subjects) {
    if (!known.contains(s)) throw Error(Errc::UnknownSubject, "subject " + s + " is not in the table");
  }
  const std::set<std::string> selected(subjects.begin(), subjects.end());
  FeatureTable out = table;
  for (auto& r : out.rows) {
    if (!selected.contains(r.subject_id)) continue;
    for (std::size_t f = 0; f < r.values.size(); ++f) r.values[f] -= adj.coefficients[f];
  }
  return out;
}

nlohmann::ordered_json report_to_json(const StressReport& report) {
  nlohmann::ordered_json j;
  j["threshold"] = report.threshold;
  j["subjects"] = nlohmann::ordered_json::array();
  for (const auto& s : report.subjects) {
    nlohmann::ordered_json sj;
    sj["id"] = s.subject_id;
    sj["probability"] = s.probability;
    sj["flagged"] = s.flagged;
    j["subjects"].push_back(std::move(sj));
  }
  return j;
}

StressReport report_from_json(const nlohmann::json& j) {
  StressReport r;
  try {
    r.threshold = j.at("threshold").get<double>();
    for (const auto& sj : j.at("subjects")) {
      r.subjects.push_back({sj.at("id").get<std::string>(), sj.at("probability").get<double>(),
                            sj.at("flagged").get<bool>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidConfig, std::string("stress report JSON: ") + e.what());
  }
  return r;
}

nlohmann::ordered_json adjustment_to_json(const StressAdjustment& adj) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json coeffs = nlohmann::ordered_json::object();
  for (std::size_t f = 0; f < adj.feature_names.size(); ++f) coeffs[adj.feature_names[f]] = adj.coefficients[f];
  j["coefficients"] = std::move(coeffs);
  j["n_stressed"] = adj.n_stressed;
  j["n_nonstressed"] = adj.n_nonstressed;
  return j;
}

StressAdjustment adjustment_from_json(const nlohmann::json& j) {
  StressAdjustment adj;
  try {
    // Column order follows the canonical feature order when every name is known.
    const auto& coeffs = j.at("coefficients");
    std::vector<std::string> order = feature_names();
    bool canonical = coeffs.size() == order.size();
    for (const auto& name : order) canonical = canonical && coeffs.contains(name);
    if (!canonical) {
      order.clear();
      for (auto it = coeffs.begin(); it != coeffs.end(); ++it) order.push_back(it.key());
    }
    for (const auto& name : order) {
      adj.feature_names.push_back(name);
      adj.coefficients.push_back(coeffs.at(name).get<double>());
    }
    adj.n_stressed = j.value("n_stressed", std::size_t{0});
    adj.n_nonstressed = j.value("n_nonstressed", std::size_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidConfig, std::string("stress adjustment JSON: ") + e.what());
  }
  return adj;
}

void write_json(const nlohmann::ordered_json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error(Errc::IoFailure, "failed writing " + path.string());
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidConfig, path.string() + ": " + e.what());
  }
}

}  // namespace eegstress
