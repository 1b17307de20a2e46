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

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace eegstress {

// Canonical 10-20 label: uppercase, "EEG " prefix and reference suffixes
// ("-REF", "-LE", "-AVG", "-A1", "-A2", "-M1", "-M2") removed.
std::string normalize_channel_label(std::string_view label);

// The 14 channels shared by every cohort after standardization.
const std::vector<std::string>& standard_channels();

// Multichannel EEG in physical units (microvolts). Immutable once built;
// transformations return a new Recording.
class Recording {
 public:
  Recording(std::vector<std::string> channel_labels, double sample_rate_hz,
            std::vector<std::vector<double>> samples, std::string subject_id = {},
            std::string dataset_id = {});

  const std::vector<std::string>& channel_labels() const { return labels_; }
  double sample_rate_hz() const { return rate_; }
  const std::vector<std::vector<double>>& samples() const { return samples_; }
  std::span<const double> channel(std::size_t index) const { return samples_.at(index); }
  const std::string& subject_id() const { return subject_id_; }
  const std::string& dataset_id() const { return dataset_id_; }

  std::size_t channel_count() const { return labels_.size(); }
  std::size_t sample_count() const { return samples_.empty() ? 0 : samples_.front().size(); }
  double duration_s() const { return static_cast<double>(sample_count()) / rate_; }

  // Index of a channel by normalized label, or npos.
  std::size_t find_channel(std::string_view label) const;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  Recording with_identity(std::string subject_id, std::string dataset_id) const;
  Recording with_samples(std::vector<std::vector<double>> samples, double sample_rate_hz) const;

 private:
  std::vector<std::string> labels_;
  double rate_;
  std::vector<std::vector<double>> samples_;
  std::string subject_id_;
  std::string dataset_id_;
};

}  // namespace eegstress
