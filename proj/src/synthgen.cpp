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

#include "eegstress/synthgen.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numeric>
#include <random>

#include "eegstress/error.hpp"
#include "eegstress/features.hpp"

namespace eegstress {
namespace {

class InverseRealFft {
 public:
  explicit InverseRealFft(std::size_t n)
      : n_(n),
        in_(fftw_alloc_complex(n / 2 + 1)),
        out_(fftw_alloc_real(n)),
        plan_(fftw_plan_dft_c2r_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE)) {}
  ~InverseRealFft() {
    fftw_destroy_plan(plan_);
    fftw_free(out_);
    fftw_free(in_);
  }
  InverseRealFft(const InverseRealFft&) = delete;
  InverseRealFft& operator=(const InverseRealFft&) = delete;

  std::vector<double> run(const std::vector<std::complex<double>>& spectrum) {
    for (std::size_t k = 0; k < n_ / 2 + 1; ++k) {
      in_[k][0] = spectrum[k].real();
      in_[k][1] = spectrum[k].imag();
    }
    fftw_execute(plan_);
    return std::vector<double>(out_, out_ + n_);
  }

 private:
  std::size_t n_;
  fftw_complex* in_;
  double* out_;
  fftw_plan plan_;
};

// Gaussian spectrum on bins lo <= f < hi with per-bin power ~ shape(f),
// scaled to time-domain variance `power`.
std::vector<double> band_noise(InverseRealFft& fft, std::size_t n, double rate, double lo, double hi, double power,
                               std::mt19937_64& rng, double slope) {
  std::vector<double> out(n, 0.0);
  if (power <= 0.0) return out;
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::complex<double>> spectrum(n / 2 + 1);
  bool any = false;
  for (std::size_t k = 1; k < n / 2 + (n % 2); ++k) {
    const double f = static_cast<double>(k) * rate / static_cast<double>(n);
    if (f < lo || f >= hi) continue;
    const double amp = slope == 0.0 ? 1.0 : std::pow(f, -slope / 2.0);
    const double re = gauss(rng);
    const double im = gauss(rng);
    spectrum[k] = {amp * re, amp * im};
    any = true;
  }
  if (!any) return out;
  out = fft.run(spectrum);
  const double mean = std::accumulate(out.begin(), out.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double v : out) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  if (var <= 0.0) return std::vector<double>(n, 0.0);
  const double scale = std::sqrt(power / var);
  for (double& v : out) v = (v - mean) * scale;
  return out;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

PowerProfile profile_from_json(const nlohmann::json& j, const char* what) {
  const auto names = feature_names();
  PowerProfile p;
  if (j.is_array()) {
    p = j.get<std::vector<double>>();
  } else if (j.is_object()) {
    p.assign(names.size(), 0.0);
    for (auto it = j.begin(); it != j.end(); ++it) {
      const auto pos = std::find(names.begin(), names.end(), it.key());
      if (pos == names.end()) throw Error(Errc::InvalidSpec, std::string(what) + ": unknown feature " + it.key());
      p[static_cast<std::size_t>(pos - names.begin())] = it.value().get<double>();
    }
  } else {
    throw Error(Errc::InvalidSpec, std::string(what) + " must be an array or object");
  }
  return p;
}

int region_of(const std::string& channel) {
  const auto& regions = RegionMap::standard().regions;
  const std::string norm = normalize_channel_label(channel);
  for (std::size_t r = 0; r < regions.size(); ++r) {
    for (const auto& c : regions[r].channels) {
      if (c == norm) return static_cast<int>(r);
    }
  }
  return -1;
}

void validate_subject(const SubjectSynthSpec& s) {
  const std::size_t F = feature_names().size();
  if (s.powers.size() != F) {
    throw Error(Errc::InvalidSpec, "power profile needs " + std::to_string(F) + " values, got " +
                                       std::to_string(s.powers.size()));
  }
  for (double p : s.powers) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw Error(Errc::InvalidSpec, "band powers must be finite and >= 0");
  }
  if (!(s.rate_hz > 0.0) || !std::isfinite(s.rate_hz)) throw Error(Errc::InvalidSpec, "rate_hz must be positive");
  if (s.rate_hz / 2.0 <= canonical_bands().back().hi_hz) {
    throw Error(Errc::InvalidSpec, "rate_hz must exceed twice the highest band edge");
  }
  if (!(s.recording_s > 0.0) || std::llround(s.recording_s * s.rate_hz) < 2) {
    throw Error(Errc::InvalidSpec, "recording_s too short");
  }
  if (s.channels.empty()) throw Error(Errc::InvalidSpec, "no channels");
  for (const auto& c : s.channels) {
    if (region_of(c) < 0) throw Error(Errc::InvalidSpec, "channel " + c + " belongs to no region");
  }
  if (!std::isfinite(s.background_db)) throw Error(Errc::InvalidSpec, "background_db must be finite");
}

}  // namespace

std::uint64_t subject_seed(std::uint64_t cohort_seed, std::uint64_t index) {
  return splitmix64(splitmix64(cohort_seed) ^ (index + 1) * 0xD1B54A32D192ED03ULL);
}

Recording synth_recording(const SubjectSynthSpec& spec, std::uint64_t seed) {
  validate_subject(spec);
  const auto& bands = canonical_bands();
  const std::size_t B = bands.size();
  const std::size_t C = spec.channels.size();
  const auto n = static_cast<std::size_t>(std::llround(spec.recording_s * spec.rate_hz));

  // target[c][b]
  std::vector<std::vector<double>> target(C, std::vector<double>(B));
  for (std::size_t c = 0; c < C; ++c) {
    const auto r = static_cast<std::size_t>(region_of(spec.channels[c]));
    for (std::size_t b = 0; b < B; ++b) target[c][b] = spec.powers[r * B + b];
  }
  if (spec.compensate_reference && C >= 3) {
    // Average referencing maps channel power P_c to P_c (1 - 2/N) + S/N^2.
    const auto N = static_cast<double>(C);
    for (std::size_t b = 0; b < B; ++b) {
      double sq = 0.0;
      for (std::size_t c = 0; c < C; ++c) sq += target[c][b];
      const double s = sq / (1.0 - 1.0 / N);
      for (std::size_t c = 0; c < C; ++c) {
        target[c][b] = std::max(0.0, (target[c][b] - s / (N * N)) / (1.0 - 2.0 / N));
      }
    }
  }

  std::mt19937_64 rng(seed);
  InverseRealFft fft(n);
  const double rel = std::pow(10.0, spec.background_db / 10.0);
  std::vector<std::vector<double>> samples(C, std::vector<double>(n, 0.0));
  for (std::size_t c = 0; c < C; ++c) {
    double total = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
      total += target[c][b];
      const auto part = band_noise(fft, n, spec.rate_hz, bands[b].lo_hz, bands[b].hi_hz, target[c][b], rng, 0.0);
      for (std::size_t i = 0; i < n; ++i) samples[c][i] += part[i];
    }
    const auto bg = band_noise(fft, n, spec.rate_hz, bands.front().lo_hz, spec.rate_hz / 2.0, total * rel, rng, 1.0);
    for (std::size_t i = 0; i < n; ++i) samples[c][i] += bg[i];
  }
  return Recording(spec.channels, spec.rate_hz, std::move(samples), spec.subject_id, spec.dataset_id);
}

void CohortSpec::validate() const {
  if (classes.empty()) throw Error(Errc::InvalidSpec, "cohort has no classes");
  const std::size_t F = feature_names().size();
  auto check_fraction = [](double f) {
    if (!(f >= 0.0 && f <= 1.0)) throw Error(Errc::InvalidSpec, "stress_fraction must lie in [0, 1]");
  };
  check_fraction(stress_fraction);
  for (const auto& c : classes) {
    if (c.subjects < 0) throw Error(Errc::InvalidSpec, "negative subject count");
    if (c.powers.size() != F) throw Error(Errc::InvalidSpec, "class " + c.name + " needs " + std::to_string(F) + " powers");
    for (double p : c.powers) {
      if (!(p > 0.0) || !std::isfinite(p)) throw Error(Errc::InvalidSpec, "target powers must be > 0");
    }
    if (c.stress_fraction) check_fraction(*c.stress_fraction);
  }
  if (!stress_offset.empty() && stress_offset.size() != F) {
    throw Error(Errc::InvalidSpec, "stress_offset needs " + std::to_string(F) + " values");
  }
  for (double v : stress_offset) {
    if (!std::isfinite(v)) throw Error(Errc::InvalidSpec, "stress_offset must be finite");
  }
  if (!(subject_jitter >= 0.0)) throw Error(Errc::InvalidSpec, "subject_jitter must be >= 0");
  SubjectSynthSpec probe{"probe", dataset_id, classes.front().powers, channels, recording_s, rate_hz, background_db,
                         compensate_reference};
  validate_subject(probe);
}

CohortSpec CohortSpec::from_json(const nlohmann::json& j) {
  CohortSpec s;
  try {
    for (const auto& cj : j.at("classes")) {
      ClassSpec c;
      c.label = cj.at("label").get<int>();
      c.name = cj.value("name", std::to_string(c.label));
      c.subjects = cj.at("subjects").get<int>();
      c.powers = profile_from_json(cj.at("powers"), "powers");
      if (cj.contains("stress_fraction")) c.stress_fraction = cj["stress_fraction"].get<double>();
      s.classes.push_back(std::move(c));
    }
    s.stress_fraction = j.value("stress_fraction", s.stress_fraction);
    if (j.contains("stress_offset")) s.stress_offset = profile_from_json(j["stress_offset"], "stress_offset");
    s.recording_s = j.value("recording_s", s.recording_s);
    s.rate_hz = j.value("rate_hz", s.rate_hz);
    s.seed = j.value("seed", s.seed);
    if (j.contains("channels")) s.channels = j["channels"].get<std::vector<std::string>>();
    s.subject_jitter = j.value("subject_jitter", s.subject_jitter);
    s.background_db = j.value("background_db", s.background_db);
    s.compensate_reference = j.value("compensate_reference", s.compensate_reference);
    s.dataset_id = j.value("dataset_id", s.dataset_id);
    s.subject_prefix = j.value("subject_prefix", s.subject_prefix);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidSpec, std::string("cohort spec: ") + e.what());
  }
  s.validate();
  return s;
}

nlohmann::ordered_json CohortSpec::to_json() const {
  nlohmann::ordered_json j;
  j["classes"] = nlohmann::ordered_json::array();
  for (const auto& c : classes) {
    nlohmann::ordered_json cj;
    cj["label"] = c.label;
    cj["name"] = c.name;
    cj["subjects"] = c.subjects;
    cj["powers"] = c.powers;
    if (c.stress_fraction) cj["stress_fraction"] = *c.stress_fraction;
    j["classes"].push_back(std::move(cj));
  }
  j["stress_fraction"] = stress_fraction;
  j["stress_offset"] = stress_offset;
  j["recording_s"] = recording_s;
  j["rate_hz"] = rate_hz;
  j["seed"] = seed;
  j["channels"] = channels;
  j["subject_jitter"] = subject_jitter;
  j["background_db"] = background_db;
  j["compensate_reference"] = compensate_reference;
  j["dataset_id"] = dataset_id;
  j["subject_prefix"] = subject_prefix;
  return j;
}

std::vector<SynthSubject> plan_cohort(const CohortSpec& spec) {
  spec.validate();
  std::vector<SynthSubject> out;
  std::uint64_t index = 0;
  std::mt19937_64 assign(splitmix64(spec.seed ^ 0x5354524553534FULL));
  for (const auto& cls : spec.classes) {
    const double fraction = cls.stress_fraction.value_or(spec.stress_fraction);
    const auto n = static_cast<std::size_t>(cls.subjects);
    const auto n_stressed = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), assign);
    std::vector<bool> stressed(n, false);
    for (std::size_t i = 0; i < n_stressed; ++i) stressed[order[i]] = true;

    for (std::size_t i = 0; i < n; ++i, ++index) {
      SynthSubject s;
      char id[32];
      std::snprintf(id, sizeof id, "%03llu", static_cast<unsigned long long>(index + 1));
      s.subject_id = spec.subject_prefix + id;
      s.class_label = cls.label;
      s.stressed = stressed[i];
      s.seed = subject_seed(spec.seed, index);
      s.spec = SubjectSynthSpec{s.subject_id, spec.dataset_id, cls.powers, spec.channels, spec.recording_s,
                                spec.rate_hz, spec.background_db, spec.compensate_reference};
      std::mt19937_64 jitter_rng(splitmix64(s.seed));
      std::normal_distribution<double> gauss(0.0, 1.0);
      for (std::size_t f = 0; f < s.spec.powers.size(); ++f) {
        double p = s.spec.powers[f];
        if (s.stressed && !spec.stress_offset.empty()) p = std::max(p + spec.stress_offset[f], 1e-6);
        if (spec.subject_jitter > 0.0) p *= std::pow(10.0, spec.subject_jitter * gauss(jitter_rng));
        s.spec.powers[f] = p;
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

DatasetManifest synth_cohort(const CohortSpec& spec, const std::filesystem::path& out_dir) {
  const auto plan = plan_cohort(spec);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(Errc::IoFailure, "cannot create " + out_dir.string() + ": " + ec.message());
  DatasetManifest manifest;
  for (const auto& c : spec.classes) manifest.class_names[c.label] = c.name;
  for (const auto& s : plan) {
    const Recording rec = synth_recording(s.spec, s.seed);
    const auto path = out_dir / (s.subject_id + ".edf");
    write_edf(rec, path);
    ManifestEntry e;
    e.path = path;
    e.format = RecordingFormat::Edf;
    e.subject_id = s.subject_id;
    e.class_label = s.class_label;
    e.stress_ground_truth = s.stressed;
    e.dataset_id = spec.dataset_id;
    manifest.entries.push_back(std::move(e));
  }
  save_manifest(manifest, out_dir / "manifest.json");
  return manifest;
}

}  // namespace eegstress
