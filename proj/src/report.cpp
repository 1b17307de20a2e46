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
#include <cmath>
#include <fstream>
#include <sstream>

#include "eegstress/error.hpp"
#include "eegstress/experiment.hpp"
#include "eegstress/ingest.hpp"

namespace eegstress {
namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

nlohmann::ordered_json importance_json(const std::vector<ImportanceEntry>& entries) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& e : entries) {
    nlohmann::ordered_json ej;
    ej["feature"] = e.feature;
    ej["class"] = e.class_label < 0 ? nlohmann::ordered_json("all") : nlohmann::ordered_json(e.class_label);
    ej["mean_abs_phi"] = e.mean_abs_phi;
    arr.push_back(std::move(ej));
  }
  return arr;
}

double number_or_nan(const nlohmann::json& v) {
  return v.is_null() ? std::nan("") : v.get<double>();
}

}  // namespace

nlohmann::ordered_json experiment_report_to_json(const ExperimentReport& report) {
  nlohmann::ordered_json j;
  j["experiment"] = report.experiment_id;
  const nlohmann::ordered_json loso = loso_to_json(report.loso, report.class_names);
  j["class_names"] = loso["class_names"];
  j["fold_count"] = loso["fold_count"];
  j["per_class_auc"] = loso["per_class_auc"];
  j["mean_patient_auc"] = report.mean_patient_auc();
  j["confusion"] = loso["confusion"];
  j["subjects"] = loso["subjects"];
  j["importance"] = importance_json(report.importance);
  if (report.stress) j["stress"] = report_to_json(*report.stress);
  j["excluded_subjects"] = report.excluded_subjects;
  j["adjusted_subjects"] = report.adjusted_subjects;
  if (report.adjustment) j["stress_adjustment"] = adjustment_to_json(*report.adjustment);
  if (report.model_selection) {
    nlohmann::ordered_json ms;
    ms["best_index"] = report.model_selection->best_index;
    ms["candidates"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < report.model_selection->grid.size(); ++i) {
      nlohmann::ordered_json cj;
      cj["params"] = report.model_selection->grid[i].to_json();
      const double m = report.model_selection->mean_metric[i];
      cj["mean_auc"] = std::isfinite(m) ? nlohmann::ordered_json(m) : nlohmann::ordered_json(nullptr);
      ms["candidates"].push_back(std::move(cj));
    }
    j["model_selection"] = std::move(ms);
  }
  j["params"] = report.params.to_json();
  nlohmann::ordered_json prov;
  prov["seed"] = report.seed;
  prov["config_hash"] = report.config_hash;
  prov["config"] = report.config;
  j["provenance"] = std::move(prov);
  return j;
}

ExperimentReport experiment_report_from_json(const nlohmann::json& j) {
  ExperimentReport r;
  try {
    r.experiment_id = j.at("experiment").get<std::string>();
    r.class_names = j.at("class_names").get<std::vector<std::string>>();
    r.loso.class_count = static_cast<int>(r.class_names.size());
    for (const auto& a : j.at("per_class_auc")) r.loso.per_class_auc.push_back(number_or_nan(a));
    for (const auto& sj : j.at("subjects")) {
      SubjectPrediction s;
      s.subject_id = sj.at("id").get<std::string>();
      s.true_class = sj.at("true_class").get<int>();
      s.predicted_class = sj.at("predicted_class").get<int>();
      s.probabilities = sj.at("probabilities").get<std::vector<double>>();
      FoldRecord f;
      f.held_out = s.subject_id;
      f.rounds = sj.value("rounds", 0);
      r.loso.subjects.push_back(std::move(s));
      r.loso.folds.push_back(std::move(f));
    }
    for (const auto& ej : j.at("importance")) {
      ImportanceEntry e;
      e.feature = ej.at("feature").get<std::string>();
      e.class_label = ej.at("class").is_string() ? -1 : ej["class"].get<int>();
      e.mean_abs_phi = ej.at("mean_abs_phi").get<double>();
      r.importance.push_back(std::move(e));
    }
    if (j.contains("stress")) r.stress = report_from_json(j["stress"]);
    r.excluded_subjects = j.value("excluded_subjects", std::vector<std::string>{});
    r.adjusted_subjects = j.value("adjusted_subjects", std::vector<std::string>{});
    if (j.contains("stress_adjustment")) r.adjustment = adjustment_from_json(j["stress_adjustment"]);
    if (j.contains("model_selection")) {
      CvResult cv;
      cv.best_index = j["model_selection"].at("best_index").get<std::size_t>();
      for (const auto& cj : j["model_selection"].at("candidates")) {
        cv.grid.push_back(GbtParams::from_json(cj.at("params")));
        cv.mean_metric.push_back(number_or_nan(cj.at("mean_auc")));
      }
      if (cv.best_index < cv.grid.size()) cv.best_params = cv.grid[cv.best_index];
      r.model_selection = std::move(cv);
    }
    r.params = GbtParams::from_json(j.at("params"));
    const auto& prov = j.at("provenance");
    r.seed = prov.at("seed").get<std::uint64_t>();
    r.config_hash = prov.at("config_hash").get<std::string>();
    r.config = prov.at("config");
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidConfig, std::string("report JSON: ") + e.what());
  }
  return r;
}

std::string importance_svg(const std::vector<ImportanceEntry>& ranking, std::size_t top) {
  const std::size_t n = std::min(top, ranking.size());
  double max_value = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_value = std::max(max_value, ranking[i].mean_abs_phi);
  const double left = 200.0, right = 60.0, top_margin = 60.0, bottom = 40.0;
  const double plot_w = 800.0 - left - right;
  const double row_h = n > 0 ? (600.0 - top_margin - bottom) / static_cast<double>(n) : 0.0;

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"600\" viewBox=\"0 0 800 600\">\n"
     << "  <text x=\"400\" y=\"32\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"18\">"
     << "Mean |SHAP value|</text>\n";
  for (std::size_t i = 0; i < n; ++i) {
    const auto& e = ranking[i];
    const double w = max_value > 0.0 ? plot_w * e.mean_abs_phi / max_value : 0.0;
    const double y = top_margin + row_h * static_cast<double>(i);
    const double bar_h = row_h * 0.7;
    os << "  <text x=\"" << fixed(left - 8.0, 1) << "\" y=\"" << fixed(y + bar_h * 0.75, 1)
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"13\">" << xml_escape(e.feature)
       << "</text>\n";
    os << "  <rect x=\"" << fixed(left, 1) << "\" y=\"" << fixed(y, 1) << "\" width=\"" << fixed(w, 2)
       << "\" height=\"" << fixed(bar_h, 1) << "\" fill=\"#1f77b4\"/>\n";
    os << "  <text x=\"" << fixed(left + w + 6.0, 1) << "\" y=\"" << fixed(y + bar_h * 0.75, 1)
       << "\" font-family=\"sans-serif\" font-size=\"11\">" << fixed(e.mean_abs_phi, 4) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::vector<std::filesystem::path> emit_report(const ExperimentReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;

  const auto report_path = dir / "report.json";
  write_json(experiment_report_to_json(report), report_path);
  written.push_back(report_path);

  const auto confusion_path = dir / "confusion.csv";
  write_confusion_csv(confusion(report.loso, report.class_names), confusion_path);
  written.push_back(confusion_path);

  const auto importance_path = dir / "importance.csv";
  write_importance_csv(report.importance, importance_path);
  written.push_back(importance_path);

  const auto svg_path = dir / "importance.svg";
  {
    std::ofstream out(svg_path, std::ios::trunc);
    if (!out) throw Error(Errc::IoFailure, "cannot write " + svg_path.string());
    out << importance_svg(report.pooled_importance());
    if (!out) throw Error(Errc::IoFailure, "failed writing " + svg_path.string());
  }
  written.push_back(svg_path);

  if (report.stress) {
    const auto stress_path = dir / "stress_report.json";
    write_json(report_to_json(*report.stress), stress_path);
    written.push_back(stress_path);
  }
  return written;
}

}  // namespace eegstress
