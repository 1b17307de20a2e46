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

#include <span>
#include <string>
#include <vector>

#include "eegstress/recording.hpp"
#include "json.hpp"

namespace eegstress {

enum class FilterKind { Notch, Bandpass };

struct FilterSpec {
  FilterKind kind = FilterKind::Bandpass;
  double notch_freq_hz = 50.0;
  double notch_q = 30.0;
  double band_lo_hz = 0.5;
  double band_hi_hz = 45.0;
  int order = 4;

  static FilterSpec notch(double freq_hz, double q = 30.0);
  static FilterSpec bandpass(double lo_hz, double hi_hz, int order = 4);
  // Throws InvalidFilterSpec when the spec cannot be realized at this rate.
  void validate(double sample_rate_hz) const;
};

// Direct-form II transposed second-order section, a0 normalized to 1.
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0, a1 = 0, a2 = 0;
  bool is_stable() const;
  double dc_gain() const;
};

std::vector<Biquad> design_notch(double freq_hz, double q, double sample_rate_hz);
std::vector<Biquad> design_butterworth_lowpass(double cutoff_hz, int order, double sample_rate_hz);
std::vector<Biquad> design_butterworth_highpass(double cutoff_hz, int order, double sample_rate_hz);

// Single forward pass, zero initial state.
std::vector<double> sosfilt(std::span<const Biquad> sections, std::span<const double> x);
// Forward-backward pass with odd reflection padding of pad_len samples
// (capped at n - 1) and steady-state initial conditions.
std::vector<double> sosfiltfilt(std::span<const Biquad> sections, std::span<const double> x,
                                std::size_t pad_len);

struct PipelineConfig {
  std::vector<std::string> channels = standard_channels();
  double notch_hz = 50.0;
  double notch_q = 30.0;
  double band_lo_hz = 0.5;
  double band_hi_hz = 45.0;
  int filter_order = 4;
  double common_rate_hz = 200.0;
  double final_rate_hz = 128.0;
  double epoch_s = 6.0;
  double epoch_overlap = 0.0;
  double welch_segment_s = 4.0;
  double welch_overlap = 0.5;

  static PipelineConfig from_json(const nlohmann::json& j);
  nlohmann::ordered_json to_json() const;
};

struct Epoch {
  Recording data;
  int epoch_index = 0;
  double duration_s = 0.0;
};

Recording select_channels(const Recording& rec, const std::vector<std::string>& requested);
Recording notch_filter(const Recording& rec, const FilterSpec& spec);
Recording bandpass_filter(const Recording& rec, const FilterSpec& spec);
// Polyphase rational-ratio conversion; output length floor(n * target / source).
Recording resample(const Recording& rec, double target_hz);
std::vector<double> resample_signal(std::span<const double> x, double source_hz, double target_hz);
Recording average_rereference(const Recording& rec);
// select -> resample(common) -> notch -> bandpass -> average reference -> resample(final)
Recording standardize(const Recording& rec, const PipelineConfig& config = {});
std::vector<Epoch> epoch(const Recording& rec, double length_s, double overlap = 0.0);

}  // namespace eegstress
