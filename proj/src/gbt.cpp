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

#include "eegstress/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "eegstress/error.hpp"
#include "eegstress/metrics.hpp"

namespace eegstress {
namespace {

constexpr double kMinHessian = 1e-16;

struct Dataset {
  std::size_t rows = 0;
  std::size_t features = 0;
  std::vector<std::vector<double>> columns;  // [feature][row]
  std::vector<int> labels;
};

Dataset to_dataset(const FeatureTable& table) {
  Dataset d;
  d.rows = table.rows.size();
  d.features = table.feature_names.size();
  d.columns.assign(d.features, std::vector<double>(d.rows));
  d.labels.reserve(d.rows);
  for (std::size_t i = 0; i < d.rows; ++i) {
    const auto& r = table.rows[i];
    if (r.values.size() != d.features) {
      throw Error(Errc::DimensionMismatch, "row " + std::to_string(i) + " has " +
                                               std::to_string(r.values.size()) + " features");
    }
    for (std::size_t f = 0; f < d.features; ++f) {
      if (!std::isfinite(r.values[f])) throw Error(Errc::DimensionMismatch, "non-finite feature value");
      d.columns[f][i] = r.values[f];
    }
    d.labels.push_back(r.class_label);
  }
  return d;
}

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& data, const std::vector<double>& grad, const std::vector<double>& hess,
              const GbtParams& params)
      : data_(data), grad_(grad), hess_(hess), params_(params) {}

  // sorted[j] lists the node's rows ordered by features[j].
  Tree build(int class_index, const std::vector<int>& features, std::vector<std::vector<std::size_t>> sorted) {
    features_ = features;
    tree_ = Tree{class_index, {}};
    tree_.nodes.emplace_back();
    grow(0, std::move(sorted), 0);
    return std::move(tree_);
  }

 private:
  void grow(int node, std::vector<std::vector<std::size_t>> sorted, int depth) {
    const auto& rows = sorted.front();
    double G = 0.0, H = 0.0;
    for (std::size_t r : rows) {
      G += grad_[r];
      H += hess_[r];
    }
    const double lambda = params_.l2_lambda;
    tree_.nodes[node].value = -G / (H + lambda) * params_.learning_rate;
    tree_.nodes[node].cover = H;

    if (depth >= params_.max_depth || rows.size() < 2) return;
    const double parent_score = G * G / (H + lambda);
    Split best;
    for (std::size_t j = 0; j < features_.size(); ++j) {
      const auto& col = data_.columns[static_cast<std::size_t>(features_[j])];
      const auto& list = sorted[j];
      double gl = 0.0, hl = 0.0;
      for (std::size_t i = 0; i + 1 < list.size(); ++i) {
        gl += grad_[list[i]];
        hl += hess_[list[i]];
        const double a = col[list[i]];
        const double b = col[list[i + 1]];
        if (a == b) continue;
        const double hr = H - hl;
        if (hl < params_.min_child_weight || hr < params_.min_child_weight) continue;
        const double gr = G - gl;
        const double gain =
            0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent_score) - params_.min_split_gain;
        if (gain > best.gain) {
          double mid = a + (b - a) / 2.0;
          if (!(mid > a)) mid = b;
          best = Split{features_[j], mid, gain};
        }
      }
    }
    if (best.feature < 0) return;

    std::vector<char> goes_left(data_.rows, 0);
    const auto& split_col = data_.columns[static_cast<std::size_t>(best.feature)];
    for (std::size_t r : rows) goes_left[r] = split_col[r] < best.threshold ? 1 : 0;
    std::vector<std::vector<std::size_t>> left(sorted.size()), right(sorted.size());
    for (std::size_t j = 0; j < sorted.size(); ++j) {
      for (std::size_t r : sorted[j]) (goes_left[r] ? left[j] : right[j]).push_back(r);
    }
    sorted.clear();

    const int l = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    const int r = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    tree_.nodes[node].feature = best.feature;
    tree_.nodes[node].threshold = best.threshold;
    tree_.nodes[node].left = l;
    tree_.nodes[node].right = r;
    grow(l, std::move(left), depth + 1);
    grow(r, std::move(right), depth + 1);
    // Exact additivity of covers for the Shapley recursion.
    tree_.nodes[node].cover = tree_.nodes[l].cover + tree_.nodes[r].cover;
  }

  const Dataset& data_;
  const std::vector<double>& grad_;
  const std::vector<double>& hess_;
  const GbtParams& params_;
  std::vector<int> features_;
  Tree tree_;
};

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::string objective_name(Objective o) { return o == Objective::BinaryLogistic ? "binary_logistic" : "softmax"; }

double weighted_log_loss(const std::vector<double>& margins, const Dataset& d, const std::vector<double>& w,
                         int outputs) {
  double loss = 0.0, wsum = 0.0;
  std::vector<double> tmp(static_cast<std::size_t>(outputs));
  for (std::size_t i = 0; i < d.rows; ++i) {
    double p;
    if (outputs == 1) {
      const double q = sigmoid(margins[i]);
      p = d.labels[i] == 1 ? q : 1.0 - q;
    } else {
      std::copy_n(margins.begin() + static_cast<std::ptrdiff_t>(i * outputs), outputs, tmp.begin());
      p = softmax(tmp)[static_cast<std::size_t>(d.labels[i])];
    }
    loss -= w[i] * std::log(std::clamp(p, 1e-15, 1.0));
    wsum += w[i];
  }
  return loss / wsum;
}

std::vector<double> probabilities_from_margin(std::span<const double> margin) {
  if (margin.size() == 1) {
    const double p = sigmoid(margin[0]);
    return {1.0 - p, p};
  }
  return softmax(margin);
}

// Higher is better for AUC, lower for log-loss.
double eval_metric(const std::vector<double>& margins, const Dataset& d, int outputs, bool& maximize) {
  if (outputs == 1) {
    std::vector<bool> labels(d.rows);
    bool has_pos = false, has_neg = false;
    for (std::size_t i = 0; i < d.rows; ++i) {
      labels[i] = d.labels[i] == 1;
      (labels[i] ? has_pos : has_neg) = true;
    }
    if (has_pos && has_neg) {
      maximize = true;
      return roc_auc(margins, labels);
    }
  }
  maximize = false;
  std::vector<std::vector<double>> probs;
  probs.reserve(d.rows);
  for (std::size_t i = 0; i < d.rows; ++i) {
    probs.push_back(probabilities_from_margin(
        std::span<const double>(margins).subspan(i * static_cast<std::size_t>(outputs), static_cast<std::size_t>(outputs))));
  }
  std::vector<int> labels = d.labels;
  return multiclass_log_loss(probs, labels);
}

void check_labels(const Dataset& d, const GbtParams& p) {
  std::set<int> present;
  for (int y : d.labels) {
    const int limit = p.objective == Objective::BinaryLogistic ? 2 : p.class_count;
    if (y < 0 || y >= limit) {
      throw Error(Errc::InvalidParams, "label " + std::to_string(y) + " outside [0, " + std::to_string(limit) + ")");
    }
    present.insert(y);
  }
  if (present.size() < 2) throw Error(Errc::SingleClassTraining, "training labels hold a single class");
}

}  // namespace

void GbtParams::validate() const {
  if (max_rounds < 1) throw Error(Errc::InvalidParams, "max_rounds must be >= 1");
  if (early_stop_rounds < 0) throw Error(Errc::InvalidParams, "early_stop_rounds must be >= 0");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw Error(Errc::InvalidParams, "learning_rate must lie in (0, 1]");
  if (max_depth < 0) throw Error(Errc::InvalidParams, "max_depth must be >= 0");
  if (!(min_child_weight >= 0.0)) throw Error(Errc::InvalidParams, "min_child_weight must be >= 0");
  if (!(l2_lambda >= 0.0)) throw Error(Errc::InvalidParams, "l2_lambda must be >= 0");
  if (!(subsample > 0.0 && subsample <= 1.0)) throw Error(Errc::InvalidParams, "subsample must lie in (0, 1]");
  if (!(colsample_bytree > 0.0 && colsample_bytree <= 1.0)) {
    throw Error(Errc::InvalidParams, "colsample_bytree must lie in (0, 1]");
  }
  if (objective == Objective::Softmax && class_count < 2) throw Error(Errc::InvalidParams, "softmax needs class_count >= 2");
  if (objective == Objective::BinaryLogistic && class_count != 2) {
    throw Error(Errc::InvalidParams, "binary_logistic needs class_count == 2");
  }
}

nlohmann::ordered_json GbtParams::to_json() const {
  nlohmann::ordered_json j;
  j["max_rounds"] = max_rounds;
  j["early_stop_rounds"] = early_stop_rounds;
  j["learning_rate"] = learning_rate;
  j["max_depth"] = max_depth;
  j["min_child_weight"] = min_child_weight;
  j["l2_lambda"] = l2_lambda;
  j["min_split_gain"] = min_split_gain;
  j["subsample"] = subsample;
  j["colsample_bytree"] = colsample_bytree;
  j["objective"] = objective_name(objective);
  j["class_count"] = class_count;
  j["class_weighting"] = class_weighting == ClassWeighting::Weighted ? "weighted" : "none";
  j["seed"] = seed;
  return j;
}

GbtParams GbtParams::from_json(const nlohmann::json& j, const GbtParams& base) {
  GbtParams p = base;
  try {
    p.max_rounds = j.value("max_rounds", p.max_rounds);
    p.early_stop_rounds = j.value("early_stop_rounds", p.early_stop_rounds);
    p.learning_rate = j.value("learning_rate", p.learning_rate);
    p.max_depth = j.value("max_depth", p.max_depth);
    p.min_child_weight = j.value("min_child_weight", p.min_child_weight);
    p.l2_lambda = j.value("l2_lambda", p.l2_lambda);
    p.min_split_gain = j.value("min_split_gain", p.min_split_gain);
    p.subsample = j.value("subsample", p.subsample);
    p.colsample_bytree = j.value("colsample_bytree", p.colsample_bytree);
    if (j.contains("objective")) {
      const auto o = j["objective"].get<std::string>();
      if (o == "binary_logistic") p.objective = Objective::BinaryLogistic;
      else if (o == "softmax") p.objective = Objective::Softmax;
      else throw Error(Errc::InvalidParams, "unknown objective " + o);
    }
    p.class_count = j.value("class_count", p.class_count);
    if (j.contains("class_weighting")) {
      const auto w = j["class_weighting"].get<std::string>();
      if (w == "weighted") p.class_weighting = ClassWeighting::Weighted;
      else if (w == "none") p.class_weighting = ClassWeighting::None;
      else throw Error(Errc::InvalidParams, "unknown class_weighting " + w);
    }
    p.seed = j.value("seed", p.seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidParams, e.what());
  }
  return p;
}

GbtParams GbtParams::from_json(const nlohmann::json& j) { return from_json(j, GbtParams{}); }

double Tree::predict(std::span<const double> x) const {
  int n = 0;
  while (!nodes[static_cast<std::size_t>(n)].is_leaf()) {
    const auto& node = nodes[static_cast<std::size_t>(n)];
    n = x[static_cast<std::size_t>(node.feature)] < node.threshold ? node.left : node.right;
  }
  return nodes[static_cast<std::size_t>(n)].value;
}

int Tree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].is_leaf()) continue;
    d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
    d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    deepest = std::max(deepest, d[i] + 1);
  }
  return deepest;
}

std::size_t TreeEnsemble::rounds() const {
  return trees.size() / static_cast<std::size_t>(output_count());
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::vector<double> softmax(std::span<const double> margins) {
  const double m = *std::max_element(margins.begin(), margins.end());
  std::vector<double> out(margins.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < margins.size(); ++k) {
    out[k] = std::exp(margins[k] - m);
    sum += out[k];
  }
  for (double& v : out) v /= sum;
  return out;
}

std::vector<double> class_weights(std::span<const int> labels, int class_count, ClassWeighting mode) {
  std::vector<double> w(labels.size(), 1.0);
  if (mode == ClassWeighting::None) return w;
  std::vector<std::size_t> counts(static_cast<std::size_t>(class_count), 0);
  for (int y : labels) ++counts.at(static_cast<std::size_t>(y));
  std::size_t present = 0;
  for (auto c : counts) present += c > 0 ? 1 : 0;
  const double n = static_cast<double>(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    w[i] = n / (static_cast<double>(present) * static_cast<double>(counts[static_cast<std::size_t>(labels[i])]));
  }
  return w;
}

TrainResult train_with_trace(const FeatureTable& table, const GbtParams& params, const FeatureTable* eval) {
  params.validate();
  if (table.rows.empty()) throw Error(Errc::SingleClassTraining, "empty training table");
  const Dataset data = to_dataset(table);
  check_labels(data, params);
  const bool early = eval != nullptr && params.early_stop_rounds > 0;
  if (eval != nullptr && eval->rows.empty()) throw Error(Errc::EmptyEvalSet, "eval set is empty");
  Dataset eval_data;
  if (eval != nullptr) {
    if (eval->feature_names != table.feature_names) {
      throw Error(Errc::FeatureMismatch, "eval set columns differ from training columns");
    }
    eval_data = to_dataset(*eval);
  }

  const int K = params.output_count();
  const auto Ku = static_cast<std::size_t>(K);
  const std::vector<double> weights = class_weights(data.labels, params.class_count, params.class_weighting);

  TrainResult result;
  TreeEnsemble& model = result.model;
  model.params = params;
  model.feature_names = table.feature_names;
  if (params.objective == Objective::BinaryLogistic) {
    double pos = 0.0, total = 0.0;
    for (std::size_t i = 0; i < data.rows; ++i) {
      pos += weights[i] * data.labels[i];
      total += weights[i];
    }
    const double prior = std::clamp(pos / total, 1e-6, 1.0 - 1e-6);
    model.base_score = std::log(prior / (1.0 - prior));
  }

  std::vector<double> margins(data.rows * Ku, model.base_score);
  std::vector<double> eval_margins(eval_data.rows * Ku, model.base_score);

  std::vector<std::vector<std::size_t>> order(data.features);
  for (std::size_t f = 0; f < data.features; ++f) {
    order[f].resize(data.rows);
    std::iota(order[f].begin(), order[f].end(), 0);
    std::stable_sort(order[f].begin(), order[f].end(),
                     [&](std::size_t a, std::size_t b) { return data.columns[f][a] < data.columns[f][b]; });
  }

  std::mt19937_64 rng(params.seed);
  std::vector<double> grad(data.rows), hess(data.rows);
  std::vector<double> probs(Ku);
  std::vector<char> sampled(data.rows, 1);
  double best_metric = 0.0;
  int since_best = 0;
  TrainingTrace& trace = result.trace;

  for (int round = 0; round < params.max_rounds; ++round) {
    if (params.subsample < 1.0) {
      std::size_t count = 0;
      for (auto& s : sampled) {
        s = uniform01(rng) < params.subsample ? 1 : 0;
        count += static_cast<std::size_t>(s);
      }
      if (count == 0) sampled[static_cast<std::size_t>(rng() % data.rows)] = 1;
    }

    // Gradients for every output from the margins at the start of the round.
    std::vector<std::vector<double>> g(Ku, std::vector<double>(data.rows)), h(Ku, std::vector<double>(data.rows));
    for (std::size_t i = 0; i < data.rows; ++i) {
      const double w = weights[i];
      if (K == 1) {
        const double p = sigmoid(margins[i]);
        const double y = data.labels[i] == 1 ? 1.0 : 0.0;
        g[0][i] = w * (p - y);
        h[0][i] = std::max(w * p * (1.0 - p), kMinHessian);
      } else {
        probs = softmax(std::span<const double>(margins).subspan(i * Ku, Ku));
        for (std::size_t k = 0; k < Ku; ++k) {
          const double y = data.labels[i] == static_cast<int>(k) ? 1.0 : 0.0;
          g[k][i] = w * (probs[k] - y);
          h[k][i] = std::max(w * probs[k] * (1.0 - probs[k]), kMinHessian);
        }
      }
    }

    std::vector<Tree> round_trees;
    for (std::size_t k = 0; k < Ku; ++k) {
      std::vector<int> features(data.features);
      std::iota(features.begin(), features.end(), 0);
      if (params.colsample_bytree < 1.0) {
        const auto keep = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(params.colsample_bytree * static_cast<double>(data.features))));
        std::shuffle(features.begin(), features.end(), rng);
        features.resize(keep);
        std::sort(features.begin(), features.end());
      }
      std::vector<std::vector<std::size_t>> sorted;
      sorted.reserve(features.size());
      for (int f : features) {
        std::vector<std::size_t> list;
        list.reserve(data.rows);
        for (std::size_t r : order[static_cast<std::size_t>(f)]) {
          if (sampled[r]) list.push_back(r);
        }
        sorted.push_back(std::move(list));
      }
      TreeBuilder builder(data, g[k], h[k], params);
      round_trees.push_back(builder.build(static_cast<int>(k), features, std::move(sorted)));
    }

    std::vector<double> row(data.features);
    for (std::size_t i = 0; i < data.rows; ++i) {
      for (std::size_t f = 0; f < data.features; ++f) row[f] = data.columns[f][i];
      for (std::size_t k = 0; k < Ku; ++k) margins[i * Ku + k] += round_trees[k].predict(row);
    }
    for (std::size_t i = 0; i < eval_data.rows; ++i) {
      for (std::size_t f = 0; f < eval_data.features; ++f) row[f] = eval_data.columns[f][i];
      for (std::size_t k = 0; k < Ku; ++k) eval_margins[i * Ku + k] += round_trees[k].predict(row);
    }
    for (auto& t : round_trees) model.trees.push_back(std::move(t));
    trace.train_loss.push_back(weighted_log_loss(margins, data, weights, K));

    if (eval != nullptr) {
      bool maximize = false;
      const double metric = eval_metric(eval_margins, eval_data, K, maximize);
      trace.eval_metric.push_back(metric);
      trace.eval_maximize = maximize;
      const bool improved = round == 0 || (maximize ? metric > best_metric : metric < best_metric);
      if (improved) {
        best_metric = metric;
        trace.best_round = round + 1;
        since_best = 0;
      } else if (early && ++since_best >= params.early_stop_rounds) {
        trace.stopped_early = true;
        break;
      }
    }
  }
  if (!early) trace.best_round = static_cast<int>(model.trees.size() / Ku);
  model.trees.resize(static_cast<std::size_t>(trace.best_round) * Ku);
  return result;
}

TreeEnsemble train(const FeatureTable& table, const GbtParams& params, const FeatureTable* eval) {
  return train_with_trace(table, params, eval).model;
}

std::vector<double> predict_margin(const TreeEnsemble& model, std::span<const double> x) {
  if (x.size() != model.feature_count()) {
    throw Error(Errc::DimensionMismatch, "expected " + std::to_string(model.feature_count()) + " features, got " +
                                             std::to_string(x.size()));
  }
  std::vector<double> out(static_cast<std::size_t>(model.output_count()), model.base_score);
  for (const auto& t : model.trees) out.at(static_cast<std::size_t>(t.class_index)) += t.predict(x);
  return out;
}

std::vector<double> predict_proba(const TreeEnsemble& model, std::span<const double> x) {
  return probabilities_from_margin(predict_margin(model, x));
}

nlohmann::ordered_json model_to_json(const TreeEnsemble& model) {
  nlohmann::ordered_json j;
  j["params"] = model.params.to_json();
  j["base_score"] = model.base_score;
  j["trees"] = nlohmann::ordered_json::array();
  for (const auto& t : model.trees) {
    nlohmann::ordered_json tj;
    tj["class"] = t.class_index;
    tj["nodes"] = nlohmann::ordered_json::array();
    for (const auto& n : t.nodes) {
      nlohmann::ordered_json nj;
      if (!n.is_leaf()) {
        nj["feature"] = n.feature;
        nj["threshold"] = n.threshold;
        nj["left"] = n.left;
        nj["right"] = n.right;
      }
      nj["value"] = n.value;
      nj["cover"] = n.cover;
      tj["nodes"].push_back(std::move(nj));
    }
    j["trees"].push_back(std::move(tj));
  }
  j["feature_names"] = model.feature_names;
  return j;
}

TreeEnsemble model_from_json(const nlohmann::json& j) {
  TreeEnsemble m;
  try {
    m.params = GbtParams::from_json(j.at("params"));
    m.base_score = j.at("base_score").get<double>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    for (const auto& tj : j.at("trees")) {
      Tree t;
      t.class_index = tj.at("class").get<int>();
      if (t.class_index < 0 || t.class_index >= m.params.output_count()) {
        throw Error(Errc::InvalidConfig, "tree class index out of range");
      }
      for (const auto& nj : tj.at("nodes")) {
        TreeNode n;
        if (nj.contains("feature")) {
          n.feature = nj.at("feature").get<int>();
          n.threshold = nj.at("threshold").get<double>();
          n.left = nj.at("left").get<int>();
          n.right = nj.at("right").get<int>();
        }
        n.value = nj.value("value", 0.0);
        n.cover = nj.contains("cover") ? nj["cover"].get<double>() : std::numeric_limits<double>::quiet_NaN();
        t.nodes.push_back(n);
      }
      const int count = static_cast<int>(t.nodes.size());
      if (count == 0) throw Error(Errc::InvalidConfig, "tree without nodes");
      for (const auto& n : t.nodes) {
        if (n.is_leaf()) continue;
        if (n.left <= 0 || n.right <= 0 || n.left >= count || n.right >= count ||
            n.feature >= static_cast<int>(m.feature_names.size())) {
          throw Error(Errc::InvalidConfig, "tree node references out of range");
        }
      }
      m.trees.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidConfig, std::string("model JSON: ") + e.what());
  }
  return m;
}

void save_model(const TreeEnsemble& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot write " + path.string());
  out << model_to_json(model).dump() << '\n';
}

TreeEnsemble load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  try {
    return model_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidConfig, std::string("model JSON: ") + e.what());
  }
}

namespace {

// Subjects grouped by class label (ascending), each group in table order.
std::map<int, std::vector<std::string>> subjects_by_class(const FeatureTable& table) {
  std::map<int, std::vector<std::string>> groups;
  for (const auto& s : table.subjects()) groups[table.subject_class(s)].push_back(s);
  return groups;
}

}  // namespace

std::pair<std::vector<std::string>, std::vector<std::string>> split_eval_subjects(const FeatureTable& table,
                                                                                   double fraction,
                                                                                   std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::string> train_ids, eval_ids;
  for (auto& [label, ids] : subjects_by_class(table)) {
    std::shuffle(ids.begin(), ids.end(), rng);
    std::size_t n_eval = 0;
    if (ids.size() >= 2) {
      n_eval = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(fraction * static_cast<double>(ids.size()))),
                                       1, ids.size() - 1);
    }
    eval_ids.insert(eval_ids.end(), ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_eval));
    train_ids.insert(train_ids.end(), ids.begin() + static_cast<std::ptrdiff_t>(n_eval), ids.end());
  }
  return {train_ids, eval_ids};
}

TrainResult fit_with_inner_split(const FeatureTable& table, const GbtParams& params, std::uint64_t seed,
                                 std::vector<std::string>* eval_subjects) {
  if (params.early_stop_rounds > 0) {
    auto [train_ids, eval_ids] = split_eval_subjects(table, 0.2, seed);
    if (!eval_ids.empty()) {
      const FeatureTable train_table = table.filter_subjects(train_ids);
      const FeatureTable eval_table = table.filter_subjects(eval_ids);
      if (eval_subjects != nullptr) *eval_subjects = eval_ids;
      return train_with_trace(train_table, params, &eval_table);
    }
  }
  if (eval_subjects != nullptr) eval_subjects->clear();
  return train_with_trace(table, params, nullptr);
}

std::vector<GbtParams> ParamGrid::expand(const GbtParams& base) const {
  std::vector<GbtParams> out;
  for (int d : max_depth) {
    for (double lr : learning_rate) {
      for (double mcw : min_child_weight) {
        for (double ss : subsample) {
          GbtParams p = base;
          p.max_depth = d;
          p.learning_rate = lr;
          p.min_child_weight = mcw;
          p.subsample = ss;
          out.push_back(p);
        }
      }
    }
  }
  return out;
}

ParamGrid ParamGrid::from_json(const nlohmann::json& j) {
  ParamGrid g;
  try {
    if (j.contains("max_depth")) g.max_depth = j["max_depth"].get<std::vector<int>>();
    if (j.contains("learning_rate")) g.learning_rate = j["learning_rate"].get<std::vector<double>>();
    if (j.contains("min_child_weight")) g.min_child_weight = j["min_child_weight"].get<std::vector<double>>();
    if (j.contains("subsample")) g.subsample = j["subsample"].get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidConfig, std::string("grid: ") + e.what());
  }
  return g;
}

std::vector<std::vector<std::string>> stratified_subject_folds(const FeatureTable& table, int k, std::uint64_t seed) {
  if (k < 2) throw Error(Errc::TooFewSubjectsForFolds, "need at least two folds");
  const auto subjects = table.subjects();
  if (subjects.size() < static_cast<std::size_t>(k)) {
    throw Error(Errc::TooFewSubjectsForFolds, std::to_string(subjects.size()) + " subjects cannot fill " +
                                                  std::to_string(k) + " folds");
  }
  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::string>> folds(static_cast<std::size_t>(k));
  std::size_t next = 0;
  for (auto& [label, ids] : subjects_by_class(table)) {
    std::shuffle(ids.begin(), ids.end(), rng);
    for (const auto& id : ids) folds[next++ % folds.size()].push_back(id);
  }
  return folds;
}

CvResult grid_search_cv(const FeatureTable& table, const std::vector<GbtParams>& grid, int k, std::uint64_t seed) {
  if (grid.empty()) throw Error(Errc::InvalidParams, "empty hyperparameter grid");
  const auto folds = stratified_subject_folds(table, k, seed);
  CvResult result;
  result.grid = grid;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const GbtParams& params = grid[g];
    double sum = 0.0;
    int counted = 0;
    for (std::size_t f = 0; f < folds.size(); ++f) {
      const FeatureTable valid = table.filter_subjects(folds[f]);
      const FeatureTable fit = table.without_subjects(folds[f]);
      const TreeEnsemble model = fit_with_inner_split(fit, params, seed + 1000 + f).model;
      std::vector<std::vector<double>> probs;
      for (const auto& r : valid.rows) probs.push_back(predict_proba(model, r.values));
      const std::size_t classes = probs.empty() ? 0 : probs.front().size();
      // Binary models score the positive class only.
      const std::size_t first = classes == 2 ? 1 : 0;
      double fold_sum = 0.0;
      int fold_count = 0;
      for (std::size_t c = first; c < classes; ++c) {
        std::vector<double> scores;
        std::vector<bool> labels;
        bool pos = false, neg = false;
        for (std::size_t i = 0; i < valid.rows.size(); ++i) {
          scores.push_back(probs[i][c]);
          labels.push_back(valid.rows[i].class_label == static_cast<int>(c));
          (labels.back() ? pos : neg) = true;
        }
        if (!pos || !neg) continue;
        fold_sum += roc_auc(scores, labels);
        ++fold_count;
      }
      if (fold_count > 0) {
        sum += fold_sum / fold_count;
        ++counted;
      }
    }
    const double mean = counted > 0 ? sum / counted : std::numeric_limits<double>::quiet_NaN();
    result.mean_metric.push_back(mean);
    if (counted > 0 && mean > best) {
      best = mean;
      result.best_index = g;
    }
  }
  result.best_params = grid[result.best_index];
  return result;
}

}  // namespace eegstress
