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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "eegstress/recording.hpp"

namespace eegstress {

struct EdfSignalHeader {
  std::string label;
  std::string transducer;
  std::string physical_dimension;
  double physical_min = 0.0;
  double physical_max = 0.0;
  int digital_min = 0;
  int digital_max = 0;
  std::string prefiltering;
  int samples_per_record = 0;

  bool is_annotation() const;
  // (phys_max - phys_min) / (dig_max - dig_min)
  double scale() const;
};

struct EdfHeader {
  std::string version;
  std::string patient;
  std::string recording;
  std::string start_date;
  std::string start_time;
  int header_bytes = 0;
  std::string reserved;
  long record_count = 0;
  double record_duration_s = 0.0;
  std::vector<EdfSignalHeader> signals;
};

EdfHeader parse_edf_header(const std::vector<char>& bytes);

// Reads an EDF/EDF+ file. Annotation signals are dropped; the remaining
// signals must share one sample rate. The subject id defaults to the file stem.
Recording read_edf(const std::filesystem::path& path);

// Writes 16-bit EDF with one physical range per channel spanning its data.
void write_edf(const Recording& rec, const std::filesystem::path& path);

// Row-per-sample CSV with a header row of channel labels. An empty
// channel_order keeps every column in file order.
Recording read_csv_recording(const std::filesystem::path& path, double sample_rate_hz,
                             const std::vector<std::string>& channel_order = {});
void write_csv_recording(const Recording& rec, const std::filesystem::path& path);

enum class RecordingFormat { Edf, Csv };

struct ManifestEntry {
  std::filesystem::path path;  // resolved against the manifest directory
  RecordingFormat format = RecordingFormat::Edf;
  std::string subject_id;
  int class_label = 0;
  std::optional<bool> stress_ground_truth;
  std::optional<double> sample_rate_hz;  // required for CSV entries
  std::string dataset_id;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::map<int, std::string> class_names;

  std::map<int, int> class_counts() const;
  // Throws DuplicateSubject / UnknownClassLabel.
  void validate() const;
};

DatasetManifest load_manifest(const std::filesystem::path& path);
// Entry paths are written relative to the manifest directory when possible.
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

Recording load_entry(const ManifestEntry& entry);

// Minimal RFC-4180 reader shared by the CSV consumers.
std::vector<std::vector<std::string>> read_csv_rows(const std::filesystem::path& path);
std::string csv_escape(const std::string& field);
std::string format_double(double value);

}  // namespace eegstress
