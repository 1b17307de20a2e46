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

#include "eegstress/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>

#include "eegstress/error.hpp"

namespace eegstress {
namespace {

constexpr double kPi = std::numbers::pi;

// Bilinear transform of (B2 s^2 + B1 s + B0) / (s^2 + A1 s + A0).
Biquad bilinear(double B2, double B1, double B0, double A1, double A0, double fs) {
  const double K = 2.0 * fs;
  const double K2 = K * K;
  const double a0 = K2 + A1 * K + A0;
  Biquad q;
  q.b0 = (B2 * K2 + B1 * K + B0) / a0;
  q.b1 = (2.0 * B0 - 2.0 * B2 * K2) / a0;
  q.b2 = (B2 * K2 - B1 * K + B0) / a0;
  q.a1 = (2.0 * A0 - 2.0 * K2) / a0;
  q.a2 = (K2 - A1 * K + A0) / a0;
  return q;
}

void check_stable(const std::vector<Biquad>& sections) {
  for (const auto& s : sections) {
    if (!s.is_stable()) throw Error(Errc::UnstableFilter, "filter pole on or outside the unit circle");
  }
}

void check_cutoff(double cutoff_hz, int order, double fs) {
  if (!(cutoff_hz > 0.0) || !(cutoff_hz < fs / 2.0)) {
    throw Error(Errc::InvalidFilterSpec, "cutoff must lie in (0, fs/2)");
  }
  if (order < 2 || order % 2 != 0 || order > 16) {
    throw Error(Errc::InvalidFilterSpec, "Butterworth order must be even, 2..16");
  }
}

// Damping factors of the second-order sections of an order-N Butterworth.
std::vector<double> butterworth_zetas(int order) {
  std::vector<double> z;
  for (int k = 0; k < order / 2; ++k) z.push_back(std::sin(kPi * (2.0 * k + 1.0) / (2.0 * order)));
  return z;
}

Recording map_channels(const Recording& rec, auto&& fn) {
  std::vector<std::vector<double>> out;
  out.reserve(rec.channel_count());
  for (std::size_t c = 0; c < rec.channel_count(); ++c) out.push_back(fn(rec.channel(c)));
  return rec.with_samples(std::move(out), rec.sample_rate_hz());
}

std::pair<long, long> rational_ratio(double target, double source) {
  // Continued-fraction approximation of target/source with bounded terms.
  const double x = target / source;
  long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double r = x;
  for (int i = 0; i < 32; ++i) {
    const double a = std::floor(r);
    const long p2 = static_cast<long>(a) * p1 + p0;
    const long q2 = static_cast<long>(a) * q1 + q0;
    if (q2 > 2000 || p2 > 2000) break;
    p0 = p1;
    q0 = q1;
    p1 = p2;
    q1 = q2;
    if (std::abs(static_cast<double>(p1) / q1 - x) < 1e-12 * x) break;
    const double frac = r - a;
    if (frac < 1e-12) break;
    r = 1.0 / frac;
  }
  return {p1, q1};
}

double kaiser(double n, double length, double beta) {
  const double ratio = 2.0 * n / (length - 1.0) - 1.0;
  return std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - ratio * ratio))) /
         std::cyl_bessel_i(0.0, beta);
}

}  // namespace

FilterSpec FilterSpec::notch(double freq_hz, double q) {
  FilterSpec s;
  s.kind = FilterKind::Notch;
  s.notch_freq_hz = freq_hz;
  s.notch_q = q;
  s.order = 2;
  return s;
}

FilterSpec FilterSpec::bandpass(double lo_hz, double hi_hz, int order) {
  FilterSpec s;
  s.kind = FilterKind::Bandpass;
  s.band_lo_hz = lo_hz;
  s.band_hi_hz = hi_hz;
  s.order = order;
  return s;
}

void FilterSpec::validate(double fs) const {
  if (kind == FilterKind::Notch) {
    if (!(notch_freq_hz > 0.0) || !(notch_freq_hz < fs / 2.0)) {
      throw Error(Errc::InvalidFilterSpec, "notch frequency must lie in (0, fs/2)");
    }
    if (!(notch_q > 0.0)) throw Error(Errc::InvalidFilterSpec, "notch Q must be positive");
  } else {
    if (!(band_lo_hz > 0.0) || !(band_lo_hz < band_hi_hz) || !(band_hi_hz < fs / 2.0)) {
      throw Error(Errc::InvalidFilterSpec, "bandpass needs 0 < lo < hi < fs/2");
    }
    check_cutoff(band_lo_hz, order, fs);
  }
}

bool Biquad::is_stable() const {
  // Jury conditions for z^2 + a1 z + a2.
  return std::abs(a2) < 1.0 && std::abs(a1) < 1.0 + a2;
}

double Biquad::dc_gain() const { return (b0 + b1 + b2) / (1.0 + a1 + a2); }

std::vector<Biquad> design_notch(double freq_hz, double q, double fs) {
  const double w0 = 2.0 * kPi * freq_hz / fs;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double a0 = 1.0 + alpha;
  Biquad s;
  s.b0 = 1.0 / a0;
  s.b1 = -2.0 * std::cos(w0) / a0;
  s.b2 = 1.0 / a0;
  s.a1 = -2.0 * std::cos(w0) / a0;
  s.a2 = (1.0 - alpha) / a0;
  std::vector<Biquad> out{s};
  check_stable(out);
  return out;
}

std::vector<Biquad> design_butterworth_lowpass(double cutoff_hz, int order, double fs) {
  check_cutoff(cutoff_hz, order, fs);
  const double wc = 2.0 * fs * std::tan(kPi * cutoff_hz / fs);
  std::vector<Biquad> out;
  for (double zeta : butterworth_zetas(order)) {
    out.push_back(bilinear(0.0, 0.0, wc * wc, 2.0 * zeta * wc, wc * wc, fs));
  }
  check_stable(out);
  return out;
}

std::vector<Biquad> design_butterworth_highpass(double cutoff_hz, int order, double fs) {
  check_cutoff(cutoff_hz, order, fs);
  const double wc = 2.0 * fs * std::tan(kPi * cutoff_hz / fs);
  std::vector<Biquad> out;
  for (double zeta : butterworth_zetas(order)) {
    out.push_back(bilinear(1.0, 0.0, 0.0, 2.0 * zeta * wc, wc * wc, fs));
  }
  check_stable(out);
  return out;
}

std::vector<double> sosfilt(std::span<const Biquad> sections, std::span<const double> x) {
  std::vector<double> y(x.begin(), x.end());
  for (const auto& s : sections) {
    double z1 = 0.0, z2 = 0.0;
    for (double& v : y) {
      const double in = v;
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
  return y;
}

namespace {

void run_cascade(std::span<const Biquad> sections, std::vector<double>& y) {
  if (y.empty()) return;
  for (const auto& s : sections) {
    // Steady-state state for a constant input equal to the first sample.
    const double u = y.front();
    const double h = s.dc_gain() * u;
    double z2 = s.b2 * u - s.a2 * h;
    double z1 = s.b1 * u - s.a1 * h + z2;
    for (double& v : y) {
      const double in = v;
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
}

}  // namespace

std::vector<double> sosfiltfilt(std::span<const Biquad> sections, std::span<const double> x,
                                std::size_t pad_len) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  pad_len = std::min(pad_len, n - 1);
  std::vector<double> ext;
  ext.reserve(n + 2 * pad_len);
  for (std::size_t i = pad_len; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad_len; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  run_cascade(sections, ext);
  std::reverse(ext.begin(), ext.end());
  run_cascade(sections, ext);
  std::reverse(ext.begin(), ext.end());
  return std::vector<double>(ext.begin() + static_cast<std::ptrdiff_t>(pad_len),
                             ext.begin() + static_cast<std::ptrdiff_t>(pad_len + n));
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j) {
  PipelineConfig c;
  if (j.contains("channels")) c.channels = j["channels"].get<std::vector<std::string>>();
  c.notch_hz = j.value("notch_hz", c.notch_hz);
  c.notch_q = j.value("notch_q", c.notch_q);
  if (j.contains("band")) {
    const auto band = j["band"].get<std::vector<double>>();
    if (band.size() != 2) throw Error(Errc::InvalidConfig, "band must hold [lo, hi]");
    c.band_lo_hz = band[0];
    c.band_hi_hz = band[1];
  }
  c.filter_order = j.value("filter_order", c.filter_order);
  c.common_rate_hz = j.value("common_rate_hz", c.common_rate_hz);
  c.final_rate_hz = j.value("final_rate_hz", c.final_rate_hz);
  c.epoch_s = j.value("epoch_s", c.epoch_s);
  c.epoch_overlap = j.value("epoch_overlap", c.epoch_overlap);
  c.welch_segment_s = j.value("welch_segment_s", c.welch_segment_s);
  c.welch_overlap = j.value("welch_overlap", c.welch_overlap);
  return c;
}

nlohmann::ordered_json PipelineConfig::to_json() const {
  nlohmann::ordered_json j;
  j["notch_hz"] = notch_hz;
  j["band"] = {band_lo_hz, band_hi_hz};
  j["common_rate_hz"] = common_rate_hz;
  j["final_rate_hz"] = final_rate_hz;
  j["epoch_s"] = epoch_s;
  j["epoch_overlap"] = epoch_overlap;
  j["notch_q"] = notch_q;
  j["filter_order"] = filter_order;
  j["welch_segment_s"] = welch_segment_s;
  j["welch_overlap"] = welch_overlap;
  j["channels"] = channels;
  return j;
}

Recording select_channels(const Recording& rec, const std::vector<std::string>& requested) {
  std::vector<std::vector<double>> data;
  data.reserve(requested.size());
  for (const auto& name : requested) {
    const std::size_t idx = rec.find_channel(name);
    if (idx == Recording::npos) {
      throw Error(Errc::MissingChannel, "channel " + name + " missing from recording " + rec.subject_id());
    }
    data.emplace_back(rec.samples()[idx]);
  }
  return Recording(requested, rec.sample_rate_hz(), std::move(data), rec.subject_id(), rec.dataset_id());
}

Recording notch_filter(const Recording& rec, const FilterSpec& spec) {
  const double fs = rec.sample_rate_hz();
  FilterSpec s = spec;
  s.kind = FilterKind::Notch;
  s.validate(fs);
  const auto sections = design_notch(s.notch_freq_hz, s.notch_q, fs);
  const double bandwidth = s.notch_freq_hz / s.notch_q;
  const auto pad = static_cast<std::size_t>(std::ceil(2.0 * 2.0 * fs / bandwidth));
  return map_channels(rec, [&](std::span<const double> x) { return sosfiltfilt(sections, x, pad); });
}

Recording bandpass_filter(const Recording& rec, const FilterSpec& spec) {
  const double fs = rec.sample_rate_hz();
  FilterSpec s = spec;
  s.kind = FilterKind::Bandpass;
  s.validate(fs);
  auto sections = design_butterworth_highpass(s.band_lo_hz, s.order, fs);
  const auto lp = design_butterworth_lowpass(s.band_hi_hz, s.order, fs);
  sections.insert(sections.end(), lp.begin(), lp.end());
  const auto pad = static_cast<std::size_t>(std::ceil(2.0 * s.order * fs / s.band_lo_hz));
  return map_channels(rec, [&](std::span<const double> x) { return sosfiltfilt(sections, x, pad); });
}

std::vector<double> resample_signal(std::span<const double> x, double source_hz, double target_hz) {
  if (!(target_hz > 0.0) || !std::isfinite(target_hz) || !(source_hz > 0.0)) {
    throw Error(Errc::InvalidRate, "sample rates must be positive");
  }
  const std::size_t n = x.size();
  if (std::abs(target_hz - source_hz) < 1e-12 * source_hz) return std::vector<double>(x.begin(), x.end());
  const auto [up, down] = rational_ratio(target_hz, source_hz);
  if (up <= 0 || down <= 0) throw Error(Errc::InvalidRate, "cannot express rate ratio");
  const auto out_n = static_cast<std::size_t>(
      std::floor(static_cast<double>(n) * target_hz / source_hz + 1e-9));
  if (out_n == 0) throw Error(Errc::InvalidRate, "resampled signal would be empty");

  const long factor = std::max(up, down);
  const long half_len = 10 * factor;
  const long len = 2 * half_len + 1;
  const double cutoff = 1.0 / static_cast<double>(factor);
  constexpr double kBeta = 5.0;
  std::vector<double> h(static_cast<std::size_t>(len));
  for (long k = 0; k < len; ++k) {
    const double t = static_cast<double>(k - half_len);
    const double arg = cutoff * t;
    const double sinc = arg == 0.0 ? 1.0 : std::sin(kPi * arg) / (kPi * arg);
    h[static_cast<std::size_t>(k)] = cutoff * sinc * kaiser(static_cast<double>(k), static_cast<double>(len), kBeta);
  }
  // Each polyphase branch sums to exactly one so constants pass unchanged.
  for (long p = 0; p < up; ++p) {
    double sum = 0.0;
    for (long k = p; k < len; k += up) sum += h[static_cast<std::size_t>(k)];
    for (long k = p; k < len; k += up) h[static_cast<std::size_t>(k)] /= sum;
  }

  std::vector<double> y(out_n);
  const long last = static_cast<long>(n) - 1;
  for (std::size_t m = 0; m < out_n; ++m) {
    const long t = static_cast<long>(m) * down + half_len;
    double acc = 0.0;
    for (long k = t % up; k < len; k += up) {
      const long i = std::clamp((t - k) / up, 0L, last);
      acc += h[static_cast<std::size_t>(k)] * x[static_cast<std::size_t>(i)];
    }
    y[m] = acc;
  }
  return y;
}

Recording resample(const Recording& rec, double target_hz) {
  std::vector<std::vector<double>> out;
  for (std::size_t c = 0; c < rec.channel_count(); ++c) {
    out.push_back(resample_signal(rec.channel(c), rec.sample_rate_hz(), target_hz));
  }
  return rec.with_samples(std::move(out), target_hz);
}

Recording average_rereference(const Recording& rec) {
  const std::size_t nc = rec.channel_count();
  if (nc < 2) throw Error(Errc::TooFewChannels, "average reference needs at least two channels");
  const std::size_t n = rec.sample_count();
  std::vector<double> mean(n, 0.0);
  for (std::size_t c = 0; c < nc; ++c) {
    for (std::size_t i = 0; i < n; ++i) mean[i] += rec.samples()[c][i];
  }
  for (double& m : mean) m /= static_cast<double>(nc);
  std::vector<std::vector<double>> out(nc, std::vector<double>(n));
  for (std::size_t c = 0; c < nc; ++c) {
    for (std::size_t i = 0; i < n; ++i) out[c][i] = rec.samples()[c][i] - mean[i];
  }
  return rec.with_samples(std::move(out), rec.sample_rate_hz());
}

Recording standardize(const Recording& rec, const PipelineConfig& config) {
  Recording r = select_channels(rec, config.channels);
  if (std::abs(r.sample_rate_hz() - config.common_rate_hz) > 1e-9) r = resample(r, config.common_rate_hz);
  r = notch_filter(r, FilterSpec::notch(config.notch_hz, config.notch_q));
  r = bandpass_filter(r, FilterSpec::bandpass(config.band_lo_hz, config.band_hi_hz, config.filter_order));
  r = average_rereference(r);
  if (std::abs(r.sample_rate_hz() - config.final_rate_hz) > 1e-9) r = resample(r, config.final_rate_hz);
  return r;
}

std::vector<Epoch> epoch(const Recording& rec, double length_s, double overlap) {
  if (!(overlap >= 0.0) || !(overlap < 1.0)) {
    throw Error(Errc::InvalidSpec, "epoch overlap must lie in [0, 1)");
  }
  const double fs = rec.sample_rate_hz();
  const auto len = static_cast<std::size_t>(std::llround(length_s * fs));
  if (len < 2) throw Error(Errc::EpochTooLong, "epoch shorter than two samples");
  const std::size_t n = rec.sample_count();
  if (len > n) {
    throw Error(Errc::EpochTooLong, "recording of " + std::to_string(rec.duration_s()) +
                                        " s is shorter than one epoch");
  }
  const std::size_t step = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(len * (1.0 - overlap))));
  std::vector<Epoch> out;
  int index = 0;
  for (std::size_t start = 0; start + len <= n; start += step, ++index) {
    std::vector<std::vector<double>> data;
    data.reserve(rec.channel_count());
    for (std::size_t c = 0; c < rec.channel_count(); ++c) {
      const auto& ch = rec.samples()[c];
      data.emplace_back(ch.begin() + static_cast<std::ptrdiff_t>(start),
                        ch.begin() + static_cast<std::ptrdiff_t>(start + len));
    }
    out.push_back(Epoch{rec.with_samples(std::move(data), fs), index, static_cast<double>(len) / fs});
  }
  return out;
}

}  // namespace eegstress
