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
#include <optional>
#include <string>
#include <vector>

#include "eegstress/ingest.hpp"
#include "eegstress/recording.hpp"
#include "json.hpp"

namespace eegstress {

// Target band powers in uV^2, one per region x band in feature order.
using PowerProfile = std::vector<double>;

struct ClassSpec {
  int label = 0;
  std::string name;
  int subjects = 0;
  PowerProfile powers;
  std::optional<double> stress_fraction;  // overrides the cohort value
};

struct CohortSpec {
  std::vector<ClassSpec> classes;
  double stress_fraction = 0.0;
  PowerProfile stress_offset;  // added to the powers of confounded subjects; empty means none
  double recording_s = 60.0;
  double rate_hz = 200.0;
  std::uint64_t seed = 0;
  std::vector<std::string> channels = standard_channels();
  // Standard deviation of a per-subject, per-feature log10 power factor.
  double subject_jitter = 0.0;
  // Level of the 1/f background relative to the summed band power.
  double background_db = -20.0;
  // Pre-scale channel powers so that average referencing over these channels
  // restores the targets in expectation.
  bool compensate_reference = true;
  std::string dataset_id = "synthetic";
  std::string subject_prefix = "sub";

  // Throws InvalidSpec.
  void validate() const;
  static CohortSpec from_json(const nlohmann::json& j);
  nlohmann::ordered_json to_json() const;
};

struct SubjectSynthSpec {
  std::string subject_id;
  std::string dataset_id;
  PowerProfile powers;
  std::vector<std::string> channels = standard_channels();
  double recording_s = 60.0;
  double rate_hz = 200.0;
  double background_db = -20.0;
  bool compensate_reference = true;
};

// Each channel is the sum of band-limited Gaussian noise per band, scaled to
// the channel region's target power, plus a 1/f background. Deterministic
// given the seed. Throws InvalidSpec.
Recording synth_recording(const SubjectSynthSpec& spec, std::uint64_t seed);

struct SynthSubject {
  std::string subject_id;
  int class_label = 0;
  bool stressed = false;
  std::uint64_t seed = 0;
  SubjectSynthSpec spec;
};

// Subject plan without synthesis: ids, labels, confound assignment, seeds.
std::vector<SynthSubject> plan_cohort(const CohortSpec& spec);

// Writes <out_dir>/<subject>.edf for every subject and <out_dir>/manifest.json.
// Throws InvalidSpec or IoFailure.
DatasetManifest synth_cohort(const CohortSpec& spec, const std::filesystem::path& out_dir);

std::uint64_t subject_seed(std::uint64_t cohort_seed, std::uint64_t index);

}  // namespace eegstress
