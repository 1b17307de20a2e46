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

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "eegstress/dsp.hpp"
#include "eegstress/ingest.hpp"
#include "eegstress/recording.hpp"

namespace eegstress {

struct BandDefinition {
  std::string name;
  double lo_hz;
  double hi_hz;  // exclusive
};

// delta [0.5,4) theta [4,8) alpha [8,12) beta [12,30) gamma [30,45)
const std::vector<BandDefinition>& canonical_bands();

struct Region {
  std::string name;
  std::vector<std::string> channels;
};

struct RegionMap {
  std::vector<Region> regions;
  // frontal {FP1,FP2,F3,F4,F7,F8}, central {C3,C4,CZ}, parietal {P3,P4,PZ}, occipital {O1,O2}
  static const RegionMap& standard();
};

struct PsdEstimate {
  std::vector<std::string> channel_labels;
  std::vector<double> freqs_hz;
  std::vector<std::vector<double>> density;  // [channel][bin], uV^2/Hz
  double bin_width_hz = 0.0;
};

// One-sided Welch PSD: Hann segments, per-segment mean removal, density
// scaling so that the integral over frequency matches the signal variance.
PsdEstimate welch_psd(const Recording& epoch, double segment_s = 4.0, double overlap = 0.5);

// Per-channel sum of density over bins with lo <= f < hi, times bin width.
std::vector<double> band_power(const PsdEstimate& psd, const BandDefinition& band);

// "<region>_<band>", region-major.
std::vector<std::string> feature_names(const RegionMap& regions = RegionMap::standard(),
                                       const std::vector<BandDefinition>& bands = canonical_bands());

// Mean over region channels of log10(band power + 1e-12).
std::vector<double> region_band_features(const PsdEstimate& psd,
                                         const RegionMap& regions = RegionMap::standard(),
                                         const std::vector<BandDefinition>& bands = canonical_bands());

struct FeatureRow {
  std::string subject_id;
  int class_label = 0;
  int epoch_index = 0;
  std::vector<double> values;
};

struct FeatureTable {
  std::vector<std::string> feature_names;
  std::vector<FeatureRow> rows;

  std::size_t feature_count() const { return feature_names.size(); }
  // Subject ids in order of first appearance.
  std::vector<std::string> subjects() const;
  // Class label of each subject (first row wins).
  int subject_class(const std::string& subject_id) const;
  FeatureTable filter_subjects(const std::vector<std::string>& keep) const;
  FeatureTable without_subjects(const std::vector<std::string>& drop) const;
  void append(const FeatureTable& other);
};

void write_feature_csv(const FeatureTable& table, const std::filesystem::path& path);
FeatureTable read_feature_csv(const std::filesystem::path& path);

enum class LabelSource { ClassLabel, StressGroundTruth };

// standardize -> epoch -> welch -> region/band features for every manifest
// entry; rows in manifest order, then epoch index.
FeatureTable build_feature_table(const DatasetManifest& manifest, const PipelineConfig& config = {},
                                 LabelSource labels = LabelSource::ClassLabel);

FeatureTable features_for_recording(const Recording& rec, int class_label,
                                    const PipelineConfig& config = {});

}  // namespace eegstress
