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

#include "eegstress/features.hpp"

#include <fftw3.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <numbers>
#include <set>

#include "eegstress/error.hpp"

namespace eegstress {
namespace {

// Real-to-complex FFT of a fixed length.
class RealFft {
 public:
  explicit RealFft(std::size_t n)
      : n_(n),
        in_(fftw_alloc_real(n)),
        out_(fftw_alloc_complex(n / 2 + 1)),
        plan_(fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE)) {}
  ~RealFft() {
    fftw_destroy_plan(plan_);
    fftw_free(out_);
    fftw_free(in_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* input() { return in_; }
  // Squared magnitudes of bins 0..n/2.
  void power(std::vector<double>& out) {
    fftw_execute(plan_);
    out.resize(n_ / 2 + 1);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1];
  }

 private:
  std::size_t n_;
  double* in_;
  fftw_complex* out_;
  fftw_plan plan_;
};

double parse_cell(const std::string& s, const std::filesystem::path& path) {
  double v = 0.0;
  const char* first = s.data();
  if (!s.empty() && s.front() == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(Errc::NonNumericCell, "cell '" + s + "' in " + path.string());
  }
  return v;
}

}  // namespace

const std::vector<BandDefinition>& canonical_bands() {
  static const std::vector<BandDefinition> kBands = {
      {"delta", 0.5, 4.0}, {"theta", 4.0, 8.0}, {"alpha", 8.0, 12.0},
      {"beta", 12.0, 30.0}, {"gamma", 30.0, 45.0}};
  return kBands;
}

const RegionMap& RegionMap::standard() {
  static const RegionMap kMap{{
      {"frontal", {"FP1", "FP2", "F3", "F4", "F7", "F8"}},
      {"central", {"C3", "C4", "CZ"}},
      {"parietal", {"P3", "P4", "PZ"}},
      {"occipital", {"O1", "O2"}},
  }};
  return kMap;
}

PsdEstimate welch_psd(const Recording& epoch, double segment_s, double overlap) {
  const double fs = epoch.sample_rate_hz();
  const auto nper = static_cast<std::size_t>(std::llround(segment_s * fs));
  if (nper < 8) throw Error(Errc::InvalidSpec, "Welch segment shorter than 8 samples");
  if (!(overlap >= 0.0) || !(overlap < 1.0)) throw Error(Errc::InvalidSpec, "Welch overlap must lie in [0, 1)");
  const std::size_t n = epoch.sample_count();
  if (nper > n) {
    throw Error(Errc::SegmentTooLong, "Welch segment of " + std::to_string(nper) +
                                          " samples exceeds epoch of " + std::to_string(n));
  }
  const std::size_t step = std::max<std::size_t>(1, nper - static_cast<std::size_t>(std::llround(nper * overlap)));

  std::vector<double> window(nper);
  double window_energy = 0.0;
  for (std::size_t i = 0; i < nper; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(nper));
    window_energy += window[i] * window[i];
  }
  const double scale = 1.0 / (fs * window_energy);
  const std::size_t bins = nper / 2 + 1;

  PsdEstimate psd;
  psd.channel_labels = epoch.channel_labels();
  psd.bin_width_hz = fs / static_cast<double>(nper);
  psd.freqs_hz.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) psd.freqs_hz[k] = static_cast<double>(k) * psd.bin_width_hz;

  RealFft fft(nper);
  std::vector<double> power;
  for (std::size_t c = 0; c < epoch.channel_count(); ++c) {
    const auto x = epoch.channel(c);
    std::vector<double> acc(bins, 0.0);
    std::size_t segments = 0;
    for (std::size_t start = 0; start + nper <= n; start += step, ++segments) {
      double mean = 0.0;
      for (std::size_t i = 0; i < nper; ++i) mean += x[start + i];
      mean /= static_cast<double>(nper);
      double* in = fft.input();
      for (std::size_t i = 0; i < nper; ++i) in[i] = (x[start + i] - mean) * window[i];
      fft.power(power);
      for (std::size_t k = 0; k < bins; ++k) acc[k] += power[k];
    }
    for (std::size_t k = 0; k < bins; ++k) {
      const bool edge = k == 0 || (nper % 2 == 0 && k == bins - 1);
      acc[k] *= scale * (edge ? 1.0 : 2.0) / static_cast<double>(segments);
    }
    psd.density.push_back(std::move(acc));
  }
  return psd;
}

std::vector<double> band_power(const PsdEstimate& psd, const BandDefinition& band) {
  std::vector<std::size_t> bins;
  for (std::size_t k = 0; k < psd.freqs_hz.size(); ++k) {
    if (psd.freqs_hz[k] >= band.lo_hz && psd.freqs_hz[k] < band.hi_hz) bins.push_back(k);
  }
  if (bins.empty()) throw Error(Errc::EmptyBand, "no PSD bins in band " + band.name);
  std::vector<double> out;
  out.reserve(psd.density.size());
  for (const auto& d : psd.density) {
    double sum = 0.0;
    for (std::size_t k : bins) sum += d[k];
    out.push_back(sum * psd.bin_width_hz);
  }
  return out;
}

std::vector<std::string> feature_names(const RegionMap& regions, const std::vector<BandDefinition>& bands) {
  std::vector<std::string> names;
  for (const auto& r : regions.regions) {
    for (const auto& b : bands) names.push_back(r.name + "_" + b.name);
  }
  return names;
}

std::vector<double> region_band_features(const PsdEstimate& psd, const RegionMap& regions,
                                         const std::vector<BandDefinition>& bands) {
  std::vector<std::string> normalized;
  for (const auto& l : psd.channel_labels) normalized.push_back(normalize_channel_label(l));
  std::vector<std::vector<double>> powers;
  for (const auto& b : bands) powers.push_back(band_power(psd, b));

  std::vector<double> out;
  out.reserve(regions.regions.size() * bands.size());
  for (const auto& region : regions.regions) {
    std::vector<std::size_t> idx;
    for (const auto& ch : region.channels) {
      const auto it = std::find(normalized.begin(), normalized.end(), normalize_channel_label(ch));
      if (it == normalized.end()) {
        throw Error(Errc::MissingChannel, "channel " + ch + " of region " + region.name + " not in PSD");
      }
      idx.push_back(static_cast<std::size_t>(it - normalized.begin()));
    }
    for (std::size_t b = 0; b < bands.size(); ++b) {
      double sum = 0.0;
      for (std::size_t i : idx) sum += std::log10(powers[b][i] + 1e-12);
      out.push_back(sum / static_cast<double>(idx.size()));
    }
  }
  return out;
}

std::vector<std::string> FeatureTable::subjects() const {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& r : rows) {
    if (seen.insert(r.subject_id).second) out.push_back(r.subject_id);
  }
  return out;
}

int FeatureTable::subject_class(const std::string& subject_id) const {
  for (const auto& r : rows) {
    if (r.subject_id == subject_id) return r.class_label;
  }
  throw Error(Errc::UnknownSubject, "subject " + subject_id + " not in table");
}

FeatureTable FeatureTable::filter_subjects(const std::vector<std::string>& keep) const {
  const std::set<std::string> k(keep.begin(), keep.end());
  FeatureTable out{feature_names, {}};
  for (const auto& r : rows) {
    if (k.contains(r.subject_id)) out.rows.push_back(r);
  }
  return out;
}

FeatureTable FeatureTable::without_subjects(const std::vector<std::string>& drop) const {
  const std::set<std::string> d(drop.begin(), drop.end());
  FeatureTable out{feature_names, {}};
  for (const auto& r : rows) {
    if (!d.contains(r.subject_id)) out.rows.push_back(r);
  }
  return out;
}

void FeatureTable::append(const FeatureTable& other) {
  if (feature_names.empty()) feature_names = other.feature_names;
  if (other.feature_names != feature_names) {
    throw Error(Errc::FeatureMismatch, "cannot append tables with different feature columns");
  }
  rows.insert(rows.end(), other.rows.begin(), other.rows.end());
}

void write_feature_csv(const FeatureTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot write " + path.string());
  out << "subject_id,class_label,epoch_index";
  for (const auto& n : table.feature_names) out << ',' << csv_escape(n);
  out << '\n';
  for (const auto& r : table.rows) {
    out << csv_escape(r.subject_id) << ',' << r.class_label << ',' << r.epoch_index;
    for (double v : r.values) out << ',' << format_double(v);
    out << '\n';
  }
  if (!out) throw Error(Errc::IoFailure, "write failed for " + path.string());
}

FeatureTable read_feature_csv(const std::filesystem::path& path) {
  const auto rows = read_csv_rows(path);
  if (rows.empty() || rows.front().size() < 3 || rows.front()[0] != "subject_id" ||
      rows.front()[1] != "class_label" || rows.front()[2] != "epoch_index") {
    throw Error(Errc::InvalidConfig, "feature CSV must start with subject_id,class_label,epoch_index");
  }
  FeatureTable t;
  t.feature_names.assign(rows.front().begin() + 3, rows.front().end());
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() != rows.front().size()) {
      throw Error(Errc::NonNumericCell, "row " + std::to_string(i) + " of " + path.string() + " is ragged");
    }
    FeatureRow r;
    r.subject_id = row[0];
    r.class_label = static_cast<int>(parse_cell(row[1], path));
    r.epoch_index = static_cast<int>(parse_cell(row[2], path));
    for (std::size_t k = 3; k < row.size(); ++k) r.values.push_back(parse_cell(row[k], path));
    t.rows.push_back(std::move(r));
  }
  return t;
}

FeatureTable features_for_recording(const Recording& rec, int class_label, const PipelineConfig& config) {
  const Recording standardized = standardize(rec, config);
  FeatureTable t{feature_names(), {}};
  for (const auto& e : epoch(standardized, config.epoch_s, config.epoch_overlap)) {
    const PsdEstimate psd = welch_psd(e.data, config.welch_segment_s, config.welch_overlap);
    t.rows.push_back(FeatureRow{rec.subject_id(), class_label, e.epoch_index, region_band_features(psd)});
  }
  return t;
}

FeatureTable build_feature_table(const DatasetManifest& manifest, const PipelineConfig& config,
                                 LabelSource labels) {
  manifest.validate();
  FeatureTable table{feature_names(), {}};
  for (const auto& entry : manifest.entries) {
    int label = entry.class_label;
    if (labels == LabelSource::StressGroundTruth) {
      if (!entry.stress_ground_truth) {
        throw Error(Errc::InvalidConfig, "subject " + entry.subject_id + " has no stress_ground_truth");
      }
      label = *entry.stress_ground_truth ? 1 : 0;
    }
    table.append(features_for_recording(load_entry(entry), label, config));
  }
  return table;
}

}  // namespace eegstress
