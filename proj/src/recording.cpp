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

#include "eegstress/recording.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <set>

#include "eegstress/error.hpp"

namespace eegstress {

std::string normalize_channel_label(std::string_view label) {
  std::string out;
  out.reserve(label.size());
  for (char c : label) out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  auto trim = [](std::string& s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    std::size_t i = 0;
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    s.erase(0, i);
  };
  trim(out);
  if (out.rfind("EEG ", 0) == 0) out.erase(0, 4);
  if (out.rfind("EEG-", 0) == 0) out.erase(0, 4);
  trim(out);
  static constexpr std::array<std::string_view, 7> kSuffixes = {"-REF", "-LE",  "-AVG", "-A1",
                                                                "-A2",  "-M1", "-M2"};
  for (auto suffix : kSuffixes) {
    if (out.size() > suffix.size() &&
        out.compare(out.size() - suffix.size(), suffix.size(), suffix) == 0) {
      out.erase(out.size() - suffix.size());
      break;
    }
  }
  trim(out);
  return out;
}

const std::vector<std::string>& standard_channels() {
  static const std::vector<std::string> kChannels = {"C3", "C4", "CZ",  "F3",  "F4", "F7", "F8",
                                                     "FP1", "FP2", "O1", "O2", "P3", "P4", "PZ"};
  return kChannels;
}

Recording::Recording(std::vector<std::string> channel_labels, double sample_rate_hz,
                     std::vector<std::vector<double>> samples, std::string subject_id,
                     std::string dataset_id)
    : labels_(std::move(channel_labels)),
      rate_(sample_rate_hz),
      samples_(std::move(samples)),
      subject_id_(std::move(subject_id)),
      dataset_id_(std::move(dataset_id)) {
  if (!(rate_ > 0.0) || !std::isfinite(rate_)) {
    throw Error(Errc::InvalidRecording, "sample rate must be positive");
  }
  if (labels_.empty()) throw Error(Errc::InvalidRecording, "recording has no channels");
  if (labels_.size() != samples_.size()) {
    throw Error(Errc::InvalidRecording, "label count does not match channel count");
  }
  const std::size_t n = samples_.front().size();
  if (n == 0) throw Error(Errc::InvalidRecording, "recording has no samples");
  std::set<std::string> seen;
  for (std::size_t c = 0; c < labels_.size(); ++c) {
    if (samples_[c].size() != n) {
      throw Error(Errc::InvalidRecording, "channel " + labels_[c] + " has a different length");
    }
    if (!seen.insert(normalize_channel_label(labels_[c])).second) {
      throw Error(Errc::InvalidRecording, "duplicate channel label " + labels_[c]);
    }
  }
}

std::size_t Recording::find_channel(std::string_view label) const {
  const std::string wanted = normalize_channel_label(label);
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (normalize_channel_label(labels_[i]) == wanted) return i;
  }
  return npos;
}

Recording Recording::with_identity(std::string subject_id, std::string dataset_id) const {
  Recording copy = *this;
  copy.subject_id_ = std::move(subject_id);
  copy.dataset_id_ = std::move(dataset_id);
  return copy;
}

Recording Recording::with_samples(std::vector<std::vector<double>> samples,
                                  double sample_rate_hz) const {
  return Recording(labels_, sample_rate_hz, std::move(samples), subject_id_, dataset_id_);
}

}  // namespace eegstress
