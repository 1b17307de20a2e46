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

#include <cmath>
#include <functional>
#include <map>

#include "eegstress/error.hpp"
#include "eegstress/ingest.hpp"
#include "test_util.hpp"

using namespace eegstress;
using testutil::TempDir;

namespace {

Errc error_code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::InvalidConfig;
}

}  // namespace

TEST(ChannelLabels, Normalization) {
  EXPECT_EQ(normalize_channel_label("EEG Fp1-REF"), "FP1");
  EXPECT_EQ(normalize_channel_label(" cz "), "CZ");
  EXPECT_EQ(normalize_channel_label("EEG-O2-LE"), "O2");
  EXPECT_EQ(normalize_channel_label("P3-A1"), "P3");
  EXPECT_EQ(standard_channels().size(), 14u);
}

TEST(RecordingType, RejectsInvalidShapes) {
  EXPECT_THROW(Recording({}, 128.0, {}), Error);
  EXPECT_THROW(Recording({"C3"}, 0.0, {{1.0}}), Error);
  EXPECT_THROW(Recording({"C3", "C4"}, 128.0, {{1.0, 2.0}, {1.0}}), Error);
  EXPECT_THROW(Recording({"C3", "c3"}, 128.0, {{1.0}, {1.0}}), Error);
  EXPECT_THROW(Recording({"C3"}, 128.0, {{}}), Error);
}

TEST(Edf, IdentityScaling) {
  TempDir dir;
  const std::vector<std::vector<std::int16_t>> data{{100, -5, 0, 7}};
  testutil::write_bytes(dir / "a.edf", testutil::raw_edf({{"C3", -32768, 32767, -32768, 32767, 4}}, 1, 1.0, data));
  const Recording r = read_edf(dir / "a.edf");
  ASSERT_EQ(r.channel_count(), 1u);
  EXPECT_DOUBLE_EQ(r.channel(0)[0], 100.0);
  EXPECT_DOUBLE_EQ(r.channel(0)[1], -5.0);
  EXPECT_DOUBLE_EQ(r.sample_rate_hz(), 4.0);
  EXPECT_EQ(r.subject_id(), "a");
}

TEST(Edf, HandEvaluatedScaling) {
  TempDir dir;
  const std::vector<std::vector<std::int16_t>> data{{100, -32768, 32767, 0}};
  testutil::write_bytes(dir / "a.edf",
                        testutil::raw_edf({{"EEG C3-REF", -327.68, 327.67, -32768, 32767, 4}}, 1, 1.0, data));
  const Recording r = read_edf(dir / "a.edf");
  // (100 + 32768) * 655.35 / 65535 - 327.68 = 1.0
  EXPECT_NEAR(r.channel(0)[0], 1.0, 1e-9);
  EXPECT_NEAR(r.channel(0)[1], -327.68, 1e-9);
  EXPECT_NEAR(r.channel(0)[2], 327.67, 1e-9);
  EXPECT_EQ(r.find_channel("C3"), 0u);
}

TEST(Edf, AnnotationSignalDropped) {
  TempDir dir;
  const std::vector<std::vector<std::int16_t>> data{{1, 2, 3, 4, 5, 6, 7, 8}, {0, 0}};
  testutil::write_bytes(dir / "a.edf",
                        testutil::raw_edf({{"C3", -100, 100, -100, 100, 4}, {"EDF Annotations", -1, 1, -32768, 32767, 1}},
                                          2, 1.0, data));
  const Recording r = read_edf(dir / "a.edf");
  ASSERT_EQ(r.channel_count(), 1u);
  EXPECT_EQ(r.sample_count(), 8u);
  EXPECT_NEAR(r.channel(0)[7], 8.0, 1e-12);
}

TEST(Edf, Errors) {
  TempDir dir;
  const std::vector<std::vector<std::int16_t>> data{{1, 2, 3, 4, 5, 6, 7, 8}};
  auto good = testutil::raw_edf({{"C3", -100, 100, -100, 100, 4}}, 2, 1.0, data);

  auto truncated = good;
  truncated.resize(truncated.size() - 3);
  testutil::write_bytes(dir / "t.edf", truncated);
  EXPECT_EQ(error_code_of([&] { read_edf(dir / "t.edf"); }), Errc::TruncatedData);

  auto bad_number = good;
  std::memcpy(bad_number.data() + 236, "abc     ", 8);  // record count
  testutil::write_bytes(dir / "m.edf", bad_number);
  EXPECT_EQ(error_code_of([&] { read_edf(dir / "m.edf"); }), Errc::MalformedHeader);

  auto short_header = std::vector<char>(good.begin(), good.begin() + 100);
  testutil::write_bytes(dir / "s.edf", short_header);
  EXPECT_EQ(error_code_of([&] { read_edf(dir / "s.edf"); }), Errc::MalformedHeader);

  testutil::write_bytes(dir / "d.edf", testutil::raw_edf({{"C3", -100, 100, 100, 100, 4}}, 2, 1.0, data));
  EXPECT_EQ(error_code_of([&] { read_edf(dir / "d.edf"); }), Errc::InconsistentSignal);

  EXPECT_EQ(error_code_of([&] { read_edf(dir / "missing.edf"); }), Errc::IoFailure);
}

TEST(Edf, TrailingBytesIgnored) {
  TempDir dir;
  const std::vector<std::vector<std::int16_t>> data{{1, 2, 3, 4, 5, 6, 7, 8}};
  auto bytes = testutil::raw_edf({{"C3", -100, 100, -100, 100, 4}}, 2, 1.0, data);
  testutil::write_bytes(dir / "a.edf", bytes);
  const Recording clean = read_edf(dir / "a.edf");
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    auto noisy = bytes;
    for (int i = 0; i < 1 + trial; ++i) noisy.push_back(static_cast<char>(rng()));
    testutil::write_bytes(dir / "b.edf", noisy);
    const Recording r = read_edf(dir / "b.edf");
    EXPECT_EQ(r.samples(), clean.samples());
  }
}

TEST(Edf, UnknownRecordCountDerivedFromSize) {
  TempDir dir;
  const std::vector<std::vector<std::int16_t>> data{{1, 2, 3, 4, 5, 6, 7, 8}};
  testutil::write_bytes(dir / "a.edf", testutil::raw_edf({{"C3", -100, 100, -100, 100, 4}}, 2, 1.0, data, -1));
  EXPECT_EQ(read_edf(dir / "a.edf").sample_count(), 8u);
}

TEST(Edf, AffineScaling) {
  TempDir dir;
  std::vector<std::int16_t> digital;
  for (int v = -1000; v < 1000; v += 37) digital.push_back(static_cast<std::int16_t>(v));
  digital.resize(50, 0);
  testutil::write_bytes(dir / "a.edf",
                        testutil::raw_edf({{"C3", -250.5, 812.25, -2048, 2047, 50}}, 1, 1.0, {digital}));
  const Recording r = read_edf(dir / "a.edf");
  const double slope = (812.25 + 250.5) / 4095.0;
  for (std::size_t i = 0; i < digital.size(); ++i) {
    EXPECT_NEAR(r.channel(0)[i], (digital[i] + 2048) * slope - 250.5, 1e-9);
  }
}

TEST(Edf, RoundTripWithinOneStep) {
  TempDir dir;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const std::size_t n = seed == 0 ? 256 : 200 + seed * 37;
    const Recording rec = testutil::noise_recording({"C3", "C4", "PZ"}, seed % 2 ? 200.0 : 128.0, n, seed, 20.0 + seed);
    write_edf(rec, dir / "r.edf");
    const Recording back = read_edf(dir / "r.edf");
    ASSERT_EQ(back.channel_count(), rec.channel_count());
    ASSERT_EQ(back.sample_count(), rec.sample_count());
    EXPECT_DOUBLE_EQ(back.sample_rate_hz(), rec.sample_rate_hz());
    const EdfHeader h = parse_edf_header([&] {
      std::ifstream in(dir / "r.edf", std::ios::binary);
      return std::vector<char>((std::istreambuf_iterator<char>(in)), {});
    }());
    for (std::size_t c = 0; c < rec.channel_count(); ++c) {
      const double step = h.signals[c].scale();
      for (std::size_t i = 0; i < rec.sample_count(); ++i) {
        ASSERT_LE(std::abs(back.channel(c)[i] - rec.channel(c)[i]), step) << "seed " << seed;
      }
    }
  }
}

TEST(Edf, RoundTripConstantAndNonIntegerRate) {
  TempDir dir;
  const Recording rec({"O1", "O2"}, 250.5, {std::vector<double>(300, 3.0), std::vector<double>(300, -0.0)}, "x");
  write_edf(rec, dir / "c.edf");
  const Recording back = read_edf(dir / "c.edf");
  // The record duration field holds 8 characters.
  EXPECT_NEAR(back.sample_rate_hz(), 250.5, 1e-3);
  EXPECT_NEAR(back.channel(0)[17], 3.0, 1e-3);
  EXPECT_NEAR(back.channel(1)[17], 0.0, 1e-3);
}

TEST(Csv, ReadsRequestedOrder) {
  TempDir dir;
  std::ofstream(dir / "a.csv") << "C3,C4,PZ\n1,2,3\n4,5,6\n7,8,9\n10,11,12\n";
  const Recording r = read_csv_recording(dir / "a.csv", 128.0);
  EXPECT_EQ(r.channel_count(), 3u);
  EXPECT_EQ(r.sample_count(), 4u);
  const Recording o = read_csv_recording(dir / "a.csv", 128.0, {"PZ", "C3"});
  EXPECT_EQ(o.channel_labels(), (std::vector<std::string>{"PZ", "C3"}));
  EXPECT_DOUBLE_EQ(o.channel(0)[3], 12.0);
  EXPECT_EQ(error_code_of([&] { read_csv_recording(dir / "a.csv", 128.0, {"O1"}); }), Errc::MissingChannel);
  std::ofstream(dir / "b.csv") << "C3,C4\n1,x\n";
  EXPECT_EQ(error_code_of([&] { read_csv_recording(dir / "b.csv", 128.0); }), Errc::NonNumericCell);
}

TEST(Csv, RoundTripExact) {
  TempDir dir;
  const Recording rec = testutil::noise_recording({"C3", "C4"}, 128.0, 100, 9);
  write_csv_recording(rec, dir / "r.csv");
  const Recording back = read_csv_recording(dir / "r.csv", 128.0);
  EXPECT_EQ(back.samples(), rec.samples());
}

TEST(Manifest, ParsesAndValidates) {
  TempDir dir;
  std::ofstream(dir / "m.json") << R"({"class_names":{"0":"healthy","1":"rest"},
    "entries":[{"path":"a.edf","format":"EDF","subject_id":"a","class_label":0},
               {"path":"b.csv","format":"CSV","subject_id":"b","class_label":1,"sample_rate_hz":128,
                "stress_ground_truth":true}]})";
  const DatasetManifest m = load_manifest(dir / "m.json");
  ASSERT_EQ(m.entries.size(), 2u);
  EXPECT_EQ(m.class_names.at(1), "rest");
  EXPECT_EQ(m.entries[0].path, dir / "a.edf");
  EXPECT_EQ(m.entries[1].format, RecordingFormat::Csv);
  EXPECT_EQ(m.entries[1].stress_ground_truth, std::optional<bool>(true));
  EXPECT_FALSE(m.entries[0].stress_ground_truth.has_value());

  std::ofstream(dir / "dup.json") << R"({"class_names":{"0":"healthy"},
    "entries":[{"path":"a.edf","subject_id":"a","class_label":0},{"path":"b.edf","subject_id":"a","class_label":0}]})";
  EXPECT_EQ(error_code_of([&] { load_manifest(dir / "dup.json"); }), Errc::DuplicateSubject);

  std::ofstream(dir / "unk.json") << R"({"class_names":{"0":"healthy"},
    "entries":[{"path":"a.edf","subject_id":"a","class_label":3}]})";
  EXPECT_EQ(error_code_of([&] { load_manifest(dir / "unk.json"); }), Errc::UnknownClassLabel);
}

TEST(Manifest, BalancedLowStressSelection) {
  // 29 screened controls against 29 patients split over two classes.
  TempDir dir;
  DatasetManifest m;
  m.class_names = {{0, "control"}, {1, "rest"}, {2, "task"}};
  for (int i = 0; i < 29; ++i) m.entries.push_back({dir / ("c" + std::to_string(i) + ".edf"), RecordingFormat::Edf,
                                                   "c" + std::to_string(i), 0, false, std::nullopt, "pool"});
  for (int i = 0; i < 29; ++i) {
    m.entries.push_back({dir / ("p" + std::to_string(i) + ".edf"), RecordingFormat::Edf, "p" + std::to_string(i),
                         i < 13 ? 1 : 2, std::nullopt, std::nullopt, "sz"});
  }
  save_manifest(m, dir / "m.json");
  const DatasetManifest back = load_manifest(dir / "m.json");
  EXPECT_EQ(back.entries.size(), 58u);
  const auto counts = back.class_counts();
  EXPECT_EQ(counts.at(0), 29);
  EXPECT_EQ(counts.at(1) + counts.at(2), 29);
  EXPECT_EQ(back.entries[3].path, m.entries[3].path);
}
