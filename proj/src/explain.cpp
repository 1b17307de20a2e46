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

#include "eegstress/explain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>

#include "eegstress/error.hpp"
#include "eegstress/ingest.hpp"

namespace eegstress {
namespace {

struct PathElement {
  int feature = -1;
  double zero_fraction = 0.0;
  double one_fraction = 0.0;
  double pweight = 0.0;
};

void extend_path(PathElement* path, int depth, double zero_fraction, double one_fraction, int feature) {
  path[depth] = PathElement{feature, zero_fraction, one_fraction, depth == 0 ? 1.0 : 0.0};
  for (int i = depth - 1; i >= 0; --i) {
    path[i + 1].pweight += one_fraction * path[i].pweight * (i + 1) / static_cast<double>(depth + 1);
    path[i].pweight = zero_fraction * path[i].pweight * (depth - i) / static_cast<double>(depth + 1);
  }
}

void unwind_path(PathElement* path, int depth, int index) {
  const double one_fraction = path[index].one_fraction;
  const double zero_fraction = path[index].zero_fraction;
  double next_one_portion = path[depth].pweight;
  for (int i = depth - 1; i >= 0; --i) {
    if (one_fraction != 0.0) {
      const double tmp = path[i].pweight;
      path[i].pweight = next_one_portion * (depth + 1) / ((i + 1) * one_fraction);
      next_one_portion = tmp - path[i].pweight * zero_fraction * (depth - i) / static_cast<double>(depth + 1);
    } else {
      path[i].pweight = path[i].pweight * (depth + 1) / (zero_fraction * (depth - i));
    }
  }
  for (int i = index; i < depth; ++i) {
    path[i].feature = path[i + 1].feature;
    path[i].zero_fraction = path[i + 1].zero_fraction;
    path[i].one_fraction = path[i + 1].one_fraction;
  }
}

double unwound_path_sum(const PathElement* path, int depth, int index) {
  const double one_fraction = path[index].one_fraction;
  const double zero_fraction = path[index].zero_fraction;
  double next_one_portion = path[depth].pweight;
  double total = 0.0;
  for (int i = depth - 1; i >= 0; --i) {
    if (one_fraction != 0.0) {
      const double tmp = next_one_portion * (depth + 1) / ((i + 1) * one_fraction);
      total += tmp;
      next_one_portion = path[i].pweight - tmp * zero_fraction * (depth - i) / static_cast<double>(depth + 1);
    } else {
      total += path[i].pweight / zero_fraction / ((depth - i) / static_cast<double>(depth + 1));
    }
  }
  return total;
}

class ShapWalker {
 public:
  ShapWalker(const Tree& tree, std::span<const double> x, std::vector<double>& phi)
      : tree_(tree), x_(x), phi_(phi) {
    const auto d = static_cast<std::size_t>(tree.depth() + 3);
    storage_.resize(d * d);
  }

  void run() { recurse(0, 0, storage_.data(), 1.0, 1.0, -1); }

 private:
  void recurse(int node_index, int depth, PathElement* parent_path, double zero_fraction, double one_fraction,
               int parent_feature) {
    PathElement* path = parent_path + depth + 1;
    std::copy(parent_path, parent_path + depth + 1, path);
    extend_path(path, depth, zero_fraction, one_fraction, parent_feature);

    const TreeNode& node = tree_.nodes[static_cast<std::size_t>(node_index)];
    if (node.is_leaf()) {
      for (int i = 1; i <= depth; ++i) {
        const double w = unwound_path_sum(path, depth, i);
        const PathElement& el = path[i];
        phi_[static_cast<std::size_t>(el.feature)] += w * (el.one_fraction - el.zero_fraction) * node.value;
      }
      return;
    }

    const bool go_left = x_[static_cast<std::size_t>(node.feature)] < node.threshold;
    const int hot = go_left ? node.left : node.right;
    const int cold = go_left ? node.right : node.left;
    const double w = node.cover;
    const double hot_zero = tree_.nodes[static_cast<std::size_t>(hot)].cover / w;
    const double cold_zero = tree_.nodes[static_cast<std::size_t>(cold)].cover / w;

    double incoming_zero = 1.0;
    double incoming_one = 1.0;
    int path_index = 0;
    for (; path_index <= depth; ++path_index) {
      if (path[path_index].feature == node.feature) break;
    }
    if (path_index != depth + 1) {
      incoming_zero = path[path_index].zero_fraction;
      incoming_one = path[path_index].one_fraction;
      unwind_path(path, depth, path_index);
      depth -= 1;
    }
    recurse(hot, depth + 1, path, hot_zero * incoming_zero, incoming_one, node.feature);
    recurse(cold, depth + 1, path, cold_zero * incoming_zero, 0.0, node.feature);
  }

  const Tree& tree_;
  std::span<const double> x_;
  std::vector<double>& phi_;
  std::vector<PathElement> storage_;
};

void check_covers(const Tree& tree) {
  for (const auto& n : tree.nodes) {
    if (n.is_leaf()) {
      if (std::isnan(n.cover)) throw Error(Errc::MissingCover, "leaf without cover");
      continue;
    }
    if (!(n.cover > 0.0)) throw Error(Errc::MissingCover, "internal node without positive cover");
  }
}

void check_instance(const TreeEnsemble& model, std::span<const double> x) {
  if (x.size() != model.feature_count()) {
    throw Error(Errc::DimensionMismatch, "expected " + std::to_string(model.feature_count()) + " features, got " +
                                             std::to_string(x.size()));
  }
}

ShapRow empty_row(const TreeEnsemble& model) {
  const auto K = static_cast<std::size_t>(model.output_count());
  ShapRow row;
  row.phi.assign(K, std::vector<double>(model.feature_count(), 0.0));
  row.base.assign(K, model.base_score);
  return row;
}

double tree_expectation(const Tree& tree, int node_index, std::span<const double> x, const std::vector<bool>& known) {
  const TreeNode& n = tree.nodes[static_cast<std::size_t>(node_index)];
  if (n.is_leaf()) return n.value;
  if (known[static_cast<std::size_t>(n.feature)]) {
    return tree_expectation(tree, x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right, x, known);
  }
  const TreeNode& l = tree.nodes[static_cast<std::size_t>(n.left)];
  const TreeNode& r = tree.nodes[static_cast<std::size_t>(n.right)];
  return (l.cover * tree_expectation(tree, n.left, x, known) + r.cover * tree_expectation(tree, n.right, x, known)) /
         n.cover;
}

}  // namespace

double expected_value(const Tree& tree) {
  check_covers(tree);
  // No feature is observed, so every split averages its children.
  double total = 0.0;
  std::vector<std::pair<int, double>> stack{{0, 1.0}};
  while (!stack.empty()) {
    auto [idx, weight] = stack.back();
    stack.pop_back();
    const TreeNode& n = tree.nodes[static_cast<std::size_t>(idx)];
    if (n.is_leaf()) {
      total += weight * n.value;
      continue;
    }
    stack.emplace_back(n.left, weight * tree.nodes[static_cast<std::size_t>(n.left)].cover / n.cover);
    stack.emplace_back(n.right, weight * tree.nodes[static_cast<std::size_t>(n.right)].cover / n.cover);
  }
  return total;
}

ShapRow tree_shap(const TreeEnsemble& model, std::span<const double> x) {
  check_instance(model, x);
  ShapRow row = empty_row(model);
  for (const auto& tree : model.trees) {
    check_covers(tree);
    const auto k = static_cast<std::size_t>(tree.class_index);
    row.base[k] += expected_value(tree);
    ShapWalker(tree, x, row.phi[k]).run();
  }
  return row;
}

double conditional_expectation(const TreeEnsemble& model, std::span<const double> x, const std::vector<bool>& known,
                               int output) {
  double total = model.base_score;
  for (const auto& tree : model.trees) {
    if (tree.class_index == output) total += tree_expectation(tree, 0, x, known);
  }
  return total;
}

ShapRow shap_brute_force(const TreeEnsemble& model, std::span<const double> x) {
  check_instance(model, x);
  const std::size_t M = model.feature_count();
  if (M > 12) throw Error(Errc::TooManyFeatures, std::to_string(M) + " features exceed the enumeration limit of 12");
  for (const auto& tree : model.trees) check_covers(tree);
  ShapRow row = empty_row(model);
  const std::size_t subsets = std::size_t{1} << M;

  // weight[s] = s! (M - s - 1)! / M!
  std::vector<double> weight(M + 1, 0.0);
  for (std::size_t s = 0; s < M; ++s) {
    weight[s] = std::exp(std::lgamma(static_cast<double>(s) + 1) + std::lgamma(static_cast<double>(M - s)) -
                         std::lgamma(static_cast<double>(M) + 1));
  }
  for (int k = 0; k < model.output_count(); ++k) {
    std::vector<double> value(subsets);
    std::vector<bool> known(M);
    for (std::size_t mask = 0; mask < subsets; ++mask) {
      for (std::size_t f = 0; f < M; ++f) known[f] = (mask >> f) & 1U;
      value[mask] = conditional_expectation(model, x, known, k);
    }
    const auto ku = static_cast<std::size_t>(k);
    row.base[ku] = value[0];
    for (std::size_t f = 0; f < M; ++f) {
      double phi = 0.0;
      for (std::size_t mask = 0; mask < subsets; ++mask) {
        if ((mask >> f) & 1U) continue;
        const auto size = static_cast<std::size_t>(std::popcount(mask));
        phi += weight[size] * (value[mask | (std::size_t{1} << f)] - value[mask]);
      }
      row.phi[ku][f] = phi;
    }
  }
  return row;
}

ShapMatrix explain_table(const TreeEnsemble& model, const FeatureTable& table) {
  if (table.feature_names != model.feature_names) {
    throw Error(Errc::FeatureMismatch, "table columns differ from the model's features");
  }
  ShapMatrix m;
  m.feature_names = model.feature_names;
  m.output_count = model.output_count();
  if (m.output_count == 1) {
    m.output_classes = {1};
  } else {
    for (int k = 0; k < m.output_count; ++k) m.output_classes.push_back(k);
  }
  for (const auto& r : table.rows) {
    m.subject_ids.push_back(r.subject_id);
    m.epoch_indices.push_back(r.epoch_index);
    m.rows.push_back(tree_shap(model, r.values));
  }
  return m;
}

std::vector<ImportanceEntry> aggregate_importance(const ShapMatrix& matrix, bool per_class) {
  if (matrix.rows.empty() || matrix.feature_names.empty()) throw Error(Errc::EmptyMatrix, "no attributions to aggregate");
  const std::size_t F = matrix.feature_names.size();
  const auto K = static_cast<std::size_t>(matrix.output_count);
  auto ranked = [&](std::vector<double> sums, double count, int label) {
    std::vector<ImportanceEntry> out;
    for (std::size_t f = 0; f < F; ++f) out.push_back({matrix.feature_names[f], label, sums[f] / count});
    std::sort(out.begin(), out.end(), [](const ImportanceEntry& a, const ImportanceEntry& b) {
      if (a.mean_abs_phi != b.mean_abs_phi) return a.mean_abs_phi > b.mean_abs_phi;
      return a.feature < b.feature;
    });
    return out;
  };
  const auto n = static_cast<double>(matrix.rows.size());
  if (!per_class) {
    std::vector<double> sums(F, 0.0);
    for (const auto& row : matrix.rows) {
      for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t f = 0; f < F; ++f) sums[f] += std::abs(row.phi[k][f]);
      }
    }
    return ranked(sums, n * static_cast<double>(K), -1);
  }
  std::vector<ImportanceEntry> out;
  for (std::size_t k = 0; k < K; ++k) {
    std::vector<double> sums(F, 0.0);
    for (const auto& row : matrix.rows) {
      for (std::size_t f = 0; f < F; ++f) sums[f] += std::abs(row.phi[k][f]);
    }
    auto part = ranked(sums, n, matrix.output_classes[k]);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

void write_shap_csv(const ShapMatrix& matrix, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot write " + path.string());
  out << "subject_id,epoch_index,class,feature,phi\n";
  for (std::size_t i = 0; i < matrix.rows.size(); ++i) {
    for (std::size_t k = 0; k < static_cast<std::size_t>(matrix.output_count); ++k) {
      for (std::size_t f = 0; f < matrix.feature_names.size(); ++f) {
        out << csv_escape(matrix.subject_ids[i]) << ',' << matrix.epoch_indices[i] << ',' << matrix.output_classes[k]
            << ',' << matrix.feature_names[f] << ',' << format_double(matrix.rows[i].phi[k][f]) << '\n';
      }
    }
  }
  if (!out) throw Error(Errc::IoFailure, "failed writing " + path.string());
}

void write_importance_csv(const std::vector<ImportanceEntry>& ranking, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot write " + path.string());
  out << "feature,class,mean_abs_phi\n";
  for (const auto& e : ranking) {
    out << e.feature << ',' << (e.class_label < 0 ? std::string("all") : std::to_string(e.class_label)) << ','
        << format_double(e.mean_abs_phi) << '\n';
  }
  if (!out) throw Error(Errc::IoFailure, "failed writing " + path.string());
}

}  // namespace eegstress
