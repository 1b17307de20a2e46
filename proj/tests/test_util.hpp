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

#include <unistd.h>

#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "eegstress/error.hpp"
#include "eegstress/features.hpp"
#include "eegstress/gbt.hpp"
#include "eegstress/recording.hpp"

namespace testutil {

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("eegstress_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::vector<double> sine(double freq_hz, double rate_hz, double seconds, double amplitude = 1.0,
                                double phase = 0.0) {
  const auto n = static_cast<std::size_t>(std::llround(seconds * rate_hz));
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = amplitude * std::sin(2.0 * std::numbers::pi * freq_hz * static_cast<double>(i) / rate_hz + phase);
  }
  return x;
}

inline double rms(const std::vector<double>& x, std::size_t begin, std::size_t end) {
  double s = 0.0;
  for (std::size_t i = begin; i < end; ++i) s += x[i] * x[i];
  return std::sqrt(s / static_cast<double>(end - begin));
}

inline double db(double ratio) { return 20.0 * std::log10(ratio); }

inline std::vector<double> gaussian(std::size_t n, std::uint64_t seed, double sd = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, sd);
  std::vector<double> x(n);
  for (auto& v : x) v = g(rng);
  return x;
}

inline eegstress::Recording noise_recording(const std::vector<std::string>& labels, double rate, std::size_t n,
                                            std::uint64_t seed, double sd = 10.0) {
  std::vector<std::vector<double>> samples;
  for (std::size_t c = 0; c < labels.size(); ++c) samples.push_back(gaussian(n, seed * 131 + c, sd));
  return eegstress::Recording(labels, rate, std::move(samples), "subj", "test");
}

// Hand-assembled EDF byte stream, independent of the library writer.
struct RawEdfSignal {
  std::string label;
  double phys_min, phys_max;
  int dig_min, dig_max;
  int samples_per_record;
};

inline std::string field(const std::string& s, std::size_t width) {
  std::string out = s.substr(0, width);
  out.resize(width, ' ');
  return out;
}

inline std::string number_field(double v, std::size_t width) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return field(buf, width);
}

inline std::vector<char> raw_edf(const std::vector<RawEdfSignal>& signals, long records, double duration,
                                 const std::vector<std::vector<std::int16_t>>& data, long declared_records = -2) {
  const std::size_t ns = signals.size();
  std::string h;
  h += field("0", 8);
  h += field("X X X X", 80);
  h += field("Startdate X X X X", 80);
  h += field("01.01.26", 8);
  h += field("00.00.00", 8);
  h += number_field(static_cast<double>(256 * (ns + 1)), 8);
  h += field("", 44);
  h += number_field(static_cast<double>(declared_records == -2 ? records : declared_records), 8);
  h += number_field(duration, 8);
  h += number_field(static_cast<double>(ns), 4);
  for (const auto& s : signals) h += field(s.label, 16);
  for (std::size_t i = 0; i < ns; ++i) h += field("", 80);
  for (std::size_t i = 0; i < ns; ++i) h += field("uV", 8);
  for (const auto& s : signals) h += number_field(s.phys_min, 8);
  for (const auto& s : signals) h += number_field(s.phys_max, 8);
  for (const auto& s : signals) h += number_field(s.dig_min, 8);
  for (const auto& s : signals) h += number_field(s.dig_max, 8);
  for (std::size_t i = 0; i < ns; ++i) h += field("", 80);
  for (const auto& s : signals) h += number_field(s.samples_per_record, 8);
  for (std::size_t i = 0; i < ns; ++i) h += field("", 32);
  std::vector<char> bytes(h.begin(), h.end());
  for (long r = 0; r < records; ++r) {
    for (std::size_t s = 0; s < ns; ++s) {
      const auto spr = static_cast<std::size_t>(signals[s].samples_per_record);
      for (std::size_t k = 0; k < spr; ++k) {
        const std::int16_t v = data[s][static_cast<std::size_t>(r) * spr + k];
        const auto u = static_cast<std::uint16_t>(v);
        bytes.push_back(static_cast<char>(u & 0xFF));
        bytes.push_back(static_cast<char>(u >> 8));
      }
    }
  }
  return bytes;
}

inline void write_bytes(const std::filesystem::path& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

// Random tree of the given depth over `features` features with consistent
// covers (children covers sum to the parent's).
inline eegstress::Tree random_tree(std::mt19937_64& rng, int depth, int features, int class_index = 0,
                                   int unused_feature = -1) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> cover(1.0, 50.0);
  std::uniform_real_distribution<double> stop(0.0, 1.0);
  eegstress::Tree t;
  t.class_index = class_index;
  // Build leaves bottom-up via recursion on indices.
  struct Builder {
    std::mt19937_64& rng;
    eegstress::Tree& t;
    int features;
    int unused;
    std::uniform_real_distribution<double>& u;
    std::uniform_real_distribution<double>& cover;
    std::uniform_real_distribution<double>& stop;
    int make(int depth_left) {
      const int idx = static_cast<int>(t.nodes.size());
      t.nodes.emplace_back();
      if (depth_left == 0 || (idx > 0 && stop(rng) < 0.2)) {
        t.nodes[static_cast<std::size_t>(idx)].value = u(rng);
        t.nodes[static_cast<std::size_t>(idx)].cover = cover(rng);
        return idx;
      }
      int f;
      do {
        f = static_cast<int>(rng() % static_cast<std::uint64_t>(features));
      } while (f == unused);
      const double thr = u(rng);
      const int l = make(depth_left - 1);
      const int r = make(depth_left - 1);
      auto& n = t.nodes[static_cast<std::size_t>(idx)];
      n.feature = f;
      n.threshold = thr;
      n.left = l;
      n.right = r;
      n.cover = t.nodes[static_cast<std::size_t>(l)].cover + t.nodes[static_cast<std::size_t>(r)].cover;
      return idx;
    }
  } b{rng, t, features, unused_feature, u, cover, stop};
  b.make(depth);
  return t;
}

inline eegstress::TreeEnsemble random_ensemble(std::uint64_t seed, int features, int trees, int outputs,
                                               int unused_feature = -1) {
  std::mt19937_64 rng(seed);
  eegstress::TreeEnsemble m;
  if (outputs == 1) {
    m.params.objective = eegstress::Objective::BinaryLogistic;
    m.params.class_count = 2;
  } else {
    m.params.objective = eegstress::Objective::Softmax;
    m.params.class_count = outputs;
  }
  m.base_score = std::uniform_real_distribution<double>(-0.5, 0.5)(rng);
  for (int f = 0; f < features; ++f) m.feature_names.push_back("f" + std::to_string(f));
  for (int i = 0; i < trees; ++i) {
    const int depth = 1 + static_cast<int>(rng() % 4);
    m.trees.push_back(random_tree(rng, depth, features, i % outputs, unused_feature));
  }
  return m;
}

inline std::vector<double> random_instance(std::uint64_t seed, int features) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  std::vector<double> x(static_cast<std::size_t>(features));
  for (auto& v : x) v = u(rng);
  return x;
}

// Gaussian class blobs: class k has mean `separation * k` on feature 0.
inline eegstress::FeatureTable blob_table(int classes, int subjects_per_class, int epochs, int features,
                                          double separation, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  eegstress::FeatureTable t;
  for (int f = 0; f < features; ++f) t.feature_names.push_back("f" + std::to_string(f));
  int id = 0;
  for (int k = 0; k < classes; ++k) {
    for (int s = 0; s < subjects_per_class; ++s, ++id) {
      for (int e = 0; e < epochs; ++e) {
        eegstress::FeatureRow r;
        r.subject_id = "s" + std::to_string(id);
        r.class_label = k;
        r.epoch_index = e;
        for (int f = 0; f < features; ++f) r.values.push_back(g(rng) + (f == 0 ? separation * k : 0.0));
        t.rows.push_back(std::move(r));
      }
    }
  }
  return t;
}

// Cover-weighted expectation of one tree with the features in `known` fixed to x.
inline double tree_expectation(const eegstress::Tree& t, int node, const std::vector<double>& x, unsigned known) {
  const eegstress::TreeNode& n = t.nodes[static_cast<std::size_t>(node)];
  if (n.is_leaf()) return n.value;
  if (known & (1u << n.feature)) {
    return tree_expectation(t, x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right, x, known);
  }
  const double cl = t.nodes[static_cast<std::size_t>(n.left)].cover;
  const double cr = t.nodes[static_cast<std::size_t>(n.right)].cover;
  return (cl * tree_expectation(t, n.left, x, known) + cr * tree_expectation(t, n.right, x, known)) / (cl + cr);
}

inline double coalition_value(const eegstress::TreeEnsemble& m, const std::vector<double>& x, unsigned known, int output) {
  double v = m.base_score;
  for (const auto& t : m.trees) {
    if (t.class_index == output) v += tree_expectation(t, 0, x, known);
  }
  return v;
}

// Shapley values by enumerating every coalition with factorial weights.
inline std::vector<double> oracle_shapley(const eegstress::TreeEnsemble& m, const std::vector<double>& x, int output) {
  const int n = static_cast<int>(x.size());
  std::vector<double> fact(static_cast<std::size_t>(n) + 1, 1.0);
  for (int i = 1; i <= n; ++i) fact[static_cast<std::size_t>(i)] = fact[static_cast<std::size_t>(i) - 1] * i;
  std::vector<double> phi(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    for (unsigned s = 0; s < (1u << n); ++s) {
      if (s & (1u << i)) continue;
      int size = 0;
      for (int b = 0; b < n; ++b) size += (s >> b) & 1u;
      const double w = fact[static_cast<std::size_t>(size)] * fact[static_cast<std::size_t>(n - size - 1)] /
                       fact[static_cast<std::size_t>(n)];
      phi[static_cast<std::size_t>(i)] += w * (coalition_value(m, x, s | (1u << i), output) - coalition_value(m, x, s, output));
    }
  }
  return phi;
}

// Fraction of positive/negative pairs ranked correctly, ties counted as half.
inline double pairwise_auc(const std::vector<double>& s, const std::vector<bool>& y) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!y[i]) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j]) continue;
      den += 1.0;
      num += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return num / den;
}

// Minimal XML well-formedness check: one root, balanced tags, quoted
// attributes, no stray '<' or unknown entities in text. Counts elements by name.
struct XmlCheck {
  bool ok = false;
  std::string error;
  std::map<std::string, int> elements;
};

inline XmlCheck check_xml(const std::string& doc) {
  XmlCheck r;
  std::vector<std::string> stack;
  int roots = 0;
  std::size_t i = 0;
  auto fail = [&](const std::string& why) {
    r.error = why + " at offset " + std::to_string(i);
    return r;
  };
  auto name_char = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == ':' || c == '.'; };
  auto check_entities = [&](const std::string& text) {
    for (std::size_t k = 0; k < text.size(); ++k) {
      if (text[k] == '<') return false;
      if (text[k] != '&') continue;
      const auto semi = text.find(';', k);
      if (semi == std::string::npos) return false;
      const std::string ent = text.substr(k + 1, semi - k - 1);
      if (ent != "amp" && ent != "lt" && ent != "gt" && ent != "quot" && ent != "apos" && ent.rfind('#', 0) != 0) {
        return false;
      }
    }
    return true;
  };
  while (i < doc.size()) {
    if (doc[i] != '<') {
      const auto next = doc.find('<', i);
      const std::string text = doc.substr(i, next == std::string::npos ? std::string::npos : next - i);
      if (!check_entities(text)) return fail("bad character data");
      if (stack.empty() && text.find_first_not_of(" \t\r\n") != std::string::npos) return fail("text outside root");
      i = next == std::string::npos ? doc.size() : next;
      continue;
    }
    if (doc.compare(i, 5, "<?xml") == 0) {
      if (i != 0) return fail("misplaced declaration");
      const auto end = doc.find("?>", i);
      if (end == std::string::npos) return fail("unterminated declaration");
      i = end + 2;
      continue;
    }
    if (doc.compare(i, 4, "<!--") == 0) {
      const auto end = doc.find("-->", i);
      if (end == std::string::npos) return fail("unterminated comment");
      i = end + 3;
      continue;
    }
    const bool closing = i + 1 < doc.size() && doc[i + 1] == '/';
    std::size_t j = i + (closing ? 2 : 1);
    const std::size_t name_start = j;
    while (j < doc.size() && name_char(doc[j])) ++j;
    const std::string name = doc.substr(name_start, j - name_start);
    if (name.empty()) return fail("empty tag name");
    if (closing) {
      while (j < doc.size() && std::isspace(static_cast<unsigned char>(doc[j]))) ++j;
      if (j >= doc.size() || doc[j] != '>') return fail("bad closing tag");
      if (stack.empty() || stack.back() != name) return fail("mismatched </" + name + ">");
      stack.pop_back();
      i = j + 1;
      continue;
    }
    std::set<std::string> attrs;
    bool self_closing = false;
    while (true) {
      while (j < doc.size() && std::isspace(static_cast<unsigned char>(doc[j]))) ++j;
      if (j >= doc.size()) return fail("unterminated tag");
      if (doc[j] == '>') break;
      if (doc.compare(j, 2, "/>") == 0) {
        self_closing = true;
        ++j;
        break;
      }
      const std::size_t a = j;
      while (j < doc.size() && name_char(doc[j])) ++j;
      if (j == a) return fail("bad attribute name");
      if (!attrs.insert(doc.substr(a, j - a)).second) return fail("duplicate attribute");
      if (j >= doc.size() || doc[j] != '=') return fail("attribute without value");
      ++j;
      if (j >= doc.size() || (doc[j] != '"' && doc[j] != '\'')) return fail("unquoted attribute");
      const char q = doc[j];
      const auto end = doc.find(q, j + 1);
      if (end == std::string::npos) return fail("unterminated attribute");
      if (!check_entities(doc.substr(j + 1, end - j - 1))) return fail("bad attribute value");
      j = end + 1;
    }
    if (stack.empty() && ++roots > 1) return fail("second root element");
    ++r.elements[name];
    if (!self_closing) stack.push_back(name);
    i = j + 1;
  }
  if (!stack.empty()) return fail("unclosed <" + stack.back() + ">");
  if (roots != 1) return fail("no root element");
  r.ok = true;
  return r;
}

// Runs fn and returns the error code it throws, or nullopt when it returns normally.
template <class Fn>
std::optional<eegstress::Errc> thrown_code(Fn&& fn) {
  try {
    fn();
  } catch (const eegstress::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace testutil
