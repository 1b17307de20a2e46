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

#include "eegstress/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>

#include "eegstress/error.hpp"
#include "eegstress/ingest.hpp"

namespace eegstress {

std::vector<double> subject_probability(const std::vector<std::vector<double>>& epoch_probabilities) {
  if (epoch_probabilities.empty()) throw Error(Errc::EmptyInput, "no epoch probabilities");
  std::vector<double> mean(epoch_probabilities.front().size(), 0.0);
  for (const auto& p : epoch_probabilities) {
    if (p.size() != mean.size()) throw Error(Errc::DimensionMismatch, "epoch probability vectors differ in length");
    for (std::size_t k = 0; k < p.size(); ++k) mean[k] += p[k];
  }
  double sum = 0.0;
  for (double& v : mean) {
    v /= static_cast<double>(epoch_probabilities.size());
    sum += v;
  }
  if (sum > 0.0) {
    for (double& v : mean) v /= sum;
  }
  return mean;
}

std::vector<std::pair<std::string, std::vector<double>>> subject_probabilities(const TreeEnsemble& model,
                                                                                 const FeatureTable& table) {
  std::map<std::string, std::vector<std::vector<double>>> by_subject;
  for (const auto& r : table.rows) by_subject[r.subject_id].push_back(predict_proba(model, r.values));
  std::vector<std::pair<std::string, std::vector<double>>> out;
  for (const auto& s : table.subjects()) out.emplace_back(s, subject_probability(by_subject[s]));
  return out;
}

int argmax(const std::vector<double>& values) {
  return static_cast<int>(std::max_element(values.begin(), values.end()) - values.begin());
}

std::vector<double> per_class_auc(const std::vector<SubjectPrediction>& subjects, int class_count) {
  std::vector<double> out;
  for (int k = 0; k < class_count; ++k) {
    std::vector<double> scores;
    std::vector<bool> labels;
    bool pos = false, neg = false;
    for (const auto& s : subjects) {
      scores.push_back(s.probabilities.at(static_cast<std::size_t>(k)));
      labels.push_back(s.true_class == k);
      (labels.back() ? pos : neg) = true;
    }
    out.push_back(pos && neg ? roc_auc(scores, labels) : std::numeric_limits<double>::quiet_NaN());
  }
  return out;
}

LosoResult loso(const FeatureTable& table, const GbtParams& params, std::uint64_t seed) {
  params.validate();
  const auto subjects = table.subjects();
  std::map<int, int> per_class;
  for (const auto& s : subjects) ++per_class[table.subject_class(s)];
  if (per_class.size() < 2) throw Error(Errc::TooFewSubjects, "LOSO needs at least two classes");
  for (const auto& [label, count] : per_class) {
    if (count < 2) {
      throw Error(Errc::TooFewSubjects, "class " + std::to_string(label) + " has " + std::to_string(count) +
                                            " subject(s); LOSO needs at least 2");
    }
  }

  LosoResult result;
  result.class_count = params.objective == Objective::BinaryLogistic ? 2 : params.class_count;
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    const std::string& held = subjects[i];
    const FeatureTable test = table.filter_subjects({held});
    const FeatureTable fit = table.without_subjects({held});

    FoldRecord fold;
    fold.held_out = held;
    TrainResult trained = fit_with_inner_split(fit, params, seed + i, &fold.eval_subjects);
    const std::set<std::string> eval_set(fold.eval_subjects.begin(), fold.eval_subjects.end());
    for (const auto& s : fit.subjects()) {
      if (!eval_set.contains(s)) fold.train_subjects.push_back(s);
    }
    if (std::find(fold.train_subjects.begin(), fold.train_subjects.end(), held) != fold.train_subjects.end() ||
        eval_set.contains(held)) {
      throw Error(Errc::InvalidConfig, "held-out subject " + held + " leaked into fold training data");
    }
    fold.rounds = static_cast<int>(trained.model.rounds());

    SubjectPrediction pred;
    pred.subject_id = held;
    pred.true_class = table.subject_class(held);
    pred.probabilities = subject_probabilities(trained.model, test).front().second;
    pred.predicted_class = argmax(pred.probabilities);
    result.subjects.push_back(std::move(pred));
    result.folds.push_back(std::move(fold));
  }
  result.per_class_auc = per_class_auc(result.subjects, result.class_count);
  return result;
}

int ConfusionMatrix::total() const {
  int t = 0;
  for (const auto& row : counts) {
    for (int c : row) t += c;
  }
  return t;
}

ConfusionMatrix confusion(const LosoResult& result, const std::vector<std::string>& class_names) {
  ConfusionMatrix m;
  const auto K = static_cast<std::size_t>(result.class_count);
  m.counts.assign(K, std::vector<int>(K, 0));
  for (const auto& s : result.subjects) {
    ++m.counts.at(static_cast<std::size_t>(s.true_class)).at(static_cast<std::size_t>(s.predicted_class));
  }
  for (std::size_t k = 0; k < K; ++k) {
    m.class_names.push_back(k < class_names.size() ? class_names[k] : std::to_string(k));
  }
  return m;
}

namespace {

nlohmann::ordered_json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

nlohmann::ordered_json loso_to_json(const LosoResult& result, const std::vector<std::string>& class_names) {
  const ConfusionMatrix cm = confusion(result, class_names);
  nlohmann::ordered_json j;
  j["class_names"] = cm.class_names;
  j["fold_count"] = result.fold_count();
  j["per_class_auc"] = nlohmann::ordered_json::array();
  for (double a : result.per_class_auc) j["per_class_auc"].push_back(number_or_null(a));
  j["confusion"] = cm.counts;
  j["subjects"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < result.subjects.size(); ++i) {
    const auto& s = result.subjects[i];
    nlohmann::ordered_json sj;
    sj["id"] = s.subject_id;
    sj["true_class"] = s.true_class;
    sj["predicted_class"] = s.predicted_class;
    sj["probabilities"] = s.probabilities;
    if (i < result.folds.size()) sj["rounds"] = result.folds[i].rounds;
    j["subjects"].push_back(std::move(sj));
  }
  return j;
}

void write_confusion_csv(const ConfusionMatrix& matrix, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot write " + path.string());
  out << "true\\predicted";
  for (const auto& n : matrix.class_names) out << ',' << csv_escape(n);
  out << '\n';
  for (std::size_t r = 0; r < matrix.counts.size(); ++r) {
    out << csv_escape(matrix.class_names[r]);
    for (int c : matrix.counts[r]) out << ',' << c;
    out << '\n';
  }
  if (!out) throw Error(Errc::IoFailure, "failed writing " + path.string());
}

}  // namespace eegstress
