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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "eegstress/error.hpp"
#include "eegstress/features.hpp"
#include "eegstress/ingest.hpp"
#include "test_util.hpp"

using namespace eegstress;

namespace {

PsdEstimate flat_psd(const std::vector<std::string>& labels, double level) {
  PsdEstimate p;
  p.channel_labels = labels;
  p.bin_width_hz = 0.25;
  for (int k = 0; k <= 256; ++k) p.freqs_hz.push_back(0.25 * k);
  p.density.assign(labels.size(), std::vector<double>(p.freqs_hz.size(), level));
  return p;
}

}  // namespace

TEST(Welch, WhiteNoiseParseval) {
  const double sd = 3.0;
  const Recording r = testutil::noise_recording({"C3", "C4"}, 128.0, 6 * 128, 11, sd);
  const PsdEstimate psd = welch_psd(r);
  ASSERT_EQ(psd.freqs_hz.size(), 257u);
  EXPECT_DOUBLE_EQ(psd.bin_width_hz, 0.25);
  for (const auto& d : psd.density) {
    double total = 0.0;
    for (double v : d) total += v * psd.bin_width_hz;
    EXPECT_NEAR(total, sd * sd, 0.1 * sd * sd);
  }
}

TEST(Welch, SinusoidBandPower) {
  const double amp = 2.0;
  const Recording r({"O1"}, 128.0, {testutil::sine(10.0, 128.0, 6.0, amp)});
  const PsdEstimate psd = welch_psd(r);
  const auto& d = psd.density[0];
  const auto peak = static_cast<double>(std::max_element(d.begin(), d.end()) - d.begin());
  EXPECT_LE(std::abs(peak * psd.bin_width_hz - 10.0), psd.bin_width_hz);
  const double alpha = band_power(psd, canonical_bands()[2])[0];
  EXPECT_NEAR(alpha, amp * amp / 2.0, 0.05 * amp * amp / 2.0);
  const double beta = band_power(psd, canonical_bands()[3])[0];
  EXPECT_LT(beta, 1e-3 * alpha);
}

TEST(Welch, ScalesQuadratically) {
  const Recording a = testutil::noise_recording({"C3"}, 128.0, 768, 3, 1.0);
  const Recording b = testutil::noise_recording({"C3"}, 128.0, 768, 3, 5.0);
  const auto pa = welch_psd(a).density[0];
  const auto pb = welch_psd(b).density[0];
  for (std::size_t k = 0; k < pa.size(); ++k) ASSERT_NEAR(pb[k], 25.0 * pa[k], 1e-9 * (1.0 + pb[k]));
}

TEST(BandPower, FlatSpectrum) {
  const PsdEstimate psd = flat_psd({"C3"}, 1.0);
  const std::vector<double> expected{3.5, 4.0, 4.0, 18.0, 15.0};
  ASSERT_EQ(canonical_bands().size(), 5u);
  for (std::size_t b = 0; b < 5; ++b) EXPECT_NEAR(band_power(psd, canonical_bands()[b])[0], expected[b], 1e-12);
  try {
    band_power(psd, BandDefinition{"void", 100.0, 101.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyBand);
  }
}

TEST(BandPower, HalfOpenEdges) {
  PsdEstimate psd = flat_psd({"C3"}, 0.0);
  const auto at = [&](double f) {
    return static_cast<std::size_t>(std::llround(f / psd.bin_width_hz));
  };
  psd.density[0][at(4.0)] = 1.0;
  EXPECT_DOUBLE_EQ(band_power(psd, canonical_bands()[0])[0], 0.0);
  EXPECT_DOUBLE_EQ(band_power(psd, canonical_bands()[1])[0], 0.25);
}

TEST(Features, NamesAndLogMeans) {
  const auto names = feature_names();
  ASSERT_EQ(names.size(), 20u);
  EXPECT_EQ(names.front(), "frontal_delta");
  EXPECT_EQ(names[4], "frontal_gamma");
  EXPECT_EQ(names[5], "central_delta");
  EXPECT_EQ(names.back(), "occipital_gamma");

  PsdEstimate psd = flat_psd(standard_channels(), 1.0);
  // Occipital holds O1 and O2; raising O1 tenfold lifts the log mean by one half.
  const auto o1 = std::find(standard_channels().begin(), standard_channels().end(), "O1") - standard_channels().begin();
  psd.density[static_cast<std::size_t>(o1)].assign(psd.freqs_hz.size(), 10.0);
  const auto f = region_band_features(psd);
  ASSERT_EQ(f.size(), 20u);
  EXPECT_NEAR(f[0], std::log10(3.5), 1e-9);
  EXPECT_NEAR(f[3], std::log10(18.0), 1e-9);
  EXPECT_NEAR(f[15], std::log10(3.5) + 0.5, 1e-9);
  EXPECT_NEAR(f[19], std::log10(15.0) + 0.5, 1e-9);
}

TEST(Features, MissingRegionChannel) {
  const PsdEstimate psd = flat_psd({"C3", "C4"}, 1.0);
  try {
    region_band_features(psd);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MissingChannel);
  }
}

TEST(Features, RecordingToRows) {
  const Recording r = testutil::noise_recording(standard_channels(), 200.0, 60 * 200, 21);
  const FeatureTable t = features_for_recording(r, 1);
  ASSERT_EQ(t.rows.size(), 10u);
  EXPECT_EQ(t.feature_count(), 20u);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    EXPECT_EQ(t.rows[i].epoch_index, static_cast<int>(i));
    EXPECT_EQ(t.rows[i].class_label, 1);
    EXPECT_EQ(t.rows[i].subject_id, "subj");
    for (double v : t.rows[i].values) EXPECT_TRUE(std::isfinite(v));
  }
}

TEST(FeatureTable, BuildFromManifestIsDeterministic) {
  testutil::TempDir dir;
  DatasetManifest m;
  m.class_names = {{0, "control"}, {1, "patient"}};
  for (int s = 0; s < 4; ++s) {
    const std::string id = "s" + std::to_string(s);
    Recording r = testutil::noise_recording(standard_channels(), 200.0, 30 * 200, 100 + s);
    r = Recording(r.channel_labels(), r.sample_rate_hz(), r.samples(), id, "unit");
    write_edf(r, dir / (id + ".edf"));
    ManifestEntry e;
    e.path = dir / (id + ".edf");
    e.subject_id = id;
    e.class_label = s % 2;
    e.stress_ground_truth = s == 3;
    m.entries.push_back(e);
  }
  const FeatureTable a = build_feature_table(m);
  const FeatureTable b = build_feature_table(m);
  ASSERT_EQ(a.rows.size(), 20u);
  EXPECT_EQ(a.subjects(), (std::vector<std::string>{"s0", "s1", "s2", "s3"}));
  EXPECT_EQ(a.subject_class("s1"), 1);
  for (std::size_t i = 0; i < a.rows.size(); ++i) EXPECT_EQ(a.rows[i].values, b.rows[i].values);

  const FeatureTable st = build_feature_table(m, {}, LabelSource::StressGroundTruth);
  EXPECT_EQ(st.subject_class("s1"), 0);
  EXPECT_EQ(st.subject_class("s3"), 1);
  m.entries[0].stress_ground_truth.reset();
  EXPECT_THROW(build_feature_table(m, {}, LabelSource::StressGroundTruth), Error);
}

TEST(FeatureTable, SubsetsAndAppend) {
  const FeatureTable t = testutil::blob_table(2, 3, 2, 4, 1.0, 5);
  const auto subjects = t.subjects();
  ASSERT_EQ(subjects.size(), 6u);
  const FeatureTable kept = t.filter_subjects({subjects[0], subjects[4]});
  EXPECT_EQ(kept.subjects(), (std::vector<std::string>{subjects[0], subjects[4]}));
  const FeatureTable dropped = t.without_subjects({subjects[0]});
  EXPECT_EQ(dropped.rows.size(), t.rows.size() - 2);
  FeatureTable merged = t.filter_subjects({subjects[0]});
  merged.append(dropped);
  EXPECT_EQ(merged.rows.size(), t.rows.size());
  FeatureTable other{{"x"}, {}};
  EXPECT_THROW(merged.append(other), Error);
  EXPECT_THROW(t.subject_class("nobody"), Error);
}

TEST(FeatureTable, CsvRoundTrip) {
  testutil::TempDir dir;
  const FeatureTable t = testutil::blob_table(3, 2, 3, 5, 0.5, 9);
  write_feature_csv(t, dir / "f.csv");
  const FeatureTable back = read_feature_csv(dir / "f.csv");
  EXPECT_EQ(back.feature_names, t.feature_names);
  ASSERT_EQ(back.rows.size(), t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    EXPECT_EQ(back.rows[i].subject_id, t.rows[i].subject_id);
    EXPECT_EQ(back.rows[i].class_label, t.rows[i].class_label);
    EXPECT_EQ(back.rows[i].epoch_index, t.rows[i].epoch_index);
    EXPECT_EQ(back.rows[i].values, t.rows[i].values);
  }
  const std::string bad = "id,label\n";
  testutil::write_bytes(dir / "bad.csv", std::vector<char>(bad.begin(), bad.end()));
  EXPECT_THROW(read_feature_csv(dir / "bad.csv"), Error);
}
