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

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "eegstress/error.hpp"
#include "eegstress/experiment.hpp"
#include "test_util.hpp"

using namespace eegstress;
using testutil::thrown_code;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Scaled-down default cohorts so the whole suite stays fast.
CohortSpec small(const std::string& role, std::uint64_t seed) {
  CohortSpec c = default_cohort(role, seed);
  c.recording_s = 18.0;
  for (auto& k : c.classes) k.subjects = role == kRoleExternalPool ? 24 : (role == kRoleStress ? 16 : 8);
  if (role == kRoleExternalControls) c.classes[0].subjects = 10;
  return c;
}

GbtParams quick_params() {
  GbtParams p;
  p.max_rounds = 30;
  p.max_depth = 3;
  p.min_child_weight = 5.0;
  return p;
}

ExperimentConfig config_for(const std::string& id) {
  ExperimentConfig c;
  c.experiment_id = id;
  c.seed = 3;
  c.params = quick_params();
  // The small stress cohort cannot satisfy min_child_weight 5 in both children.
  GbtParams stress = quick_params();
  stress.min_child_weight = 1.0;
  c.stress_params = stress;
  c.source = nlohmann::json{{"experiment", id}, {"seed", 3}};
  return c;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(EEGSTRESS_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

class Experiments : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testutil::TempDir;
    tables_ = new std::map<std::string, FeatureTable>;
    for (const char* role : {kRoleRest, kRoleTask, kRoleExternalControls, kRoleStress, kRoleExternalPool}) {
      const DatasetManifest m = synth_cohort(small(role, 3), *dir_ / role);
      (*tables_)[role] = build_feature_table(
          m, {}, std::string(role) == kRoleStress ? LabelSource::StressGroundTruth : LabelSource::ClassLabel);
    }
  }
  static void TearDownTestSuite() {
    delete tables_;
    delete dir_;
  }
  static ExperimentReport run(const std::string& id) { return run_experiment_on_tables(config_for(id), *tables_); }

  static testutil::TempDir* dir_;
  static std::map<std::string, FeatureTable>* tables_;
};

testutil::TempDir* Experiments::dir_ = nullptr;
std::map<std::string, FeatureTable>* Experiments::tables_ = nullptr;

}  // namespace

TEST(ExperimentConfig, RequiredRoles) {
  const std::map<std::string, std::vector<std::string>> expected{
      {"1a", {"rest"}},
      {"1b", {"task"}},
      {"2", {"rest", "task"}},
      {"3", {"rest", "task", "external_controls"}},
      {"4", {"rest", "task", "external_controls", "stress"}},
      {"5", {"rest", "task", "external_controls", "stress"}},
      {"6", {"rest", "task", "stress", "external_pool"}}};
  for (const auto& [id, roles] : expected) {
    ExperimentConfig c;
    c.experiment_id = id;
    EXPECT_EQ(c.required_roles(), roles) << id;
  }
}

TEST(ExperimentConfig, ParsingAndErrors) {
  const nlohmann::json j = {{"experiment", 4},
                            {"seed", 9},
                            {"threshold", 0.6},
                            {"coefficient_source", "cohort"},
                            {"params", {{"max_depth", 3}}},
                            {"roles", {{"rest", "rest/manifest.json"}}}};
  const ExperimentConfig c = ExperimentConfig::from_json(j, "/base");
  EXPECT_EQ(c.experiment_id, "4");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_DOUBLE_EQ(c.threshold, 0.6);
  EXPECT_EQ(c.coefficient_source, CoefficientSource::Cohort);
  EXPECT_EQ(c.params.max_depth, 3);
  EXPECT_EQ(c.roles.at("rest"), std::filesystem::path("/base/rest/manifest.json"));
  EXPECT_EQ(thrown_code([] { ExperimentConfig::from_json({{"experiment", "7"}}); }), Errc::InvalidConfig);
  EXPECT_EQ(thrown_code([] { ExperimentConfig::from_json({{"experiment", "3"}, {"threshold", 2.0}}); }),
            Errc::InvalidConfig);
  EXPECT_EQ(thrown_code([] { ExperimentConfig::from_json({{"experiment", "3"}, {"roles", {{"eeg", "x"}}}}); }),
            Errc::InvalidConfig);

  ExperimentConfig real = ExperimentConfig::from_json({{"experiment", "3"}, {"real_data", true}});
  testutil::TempDir dir;
  real.out = dir.path();
  EXPECT_EQ(thrown_code([&] { run_experiment(real); }), Errc::MissingRole);
}

TEST(ExperimentConfig, HashIgnoresTimestamp) {
  const ExperimentConfig a = ExperimentConfig::from_json({{"experiment", "3"}, {"seed", 1}});
  const ExperimentConfig b = ExperimentConfig::from_json({{"experiment", "3"}, {"seed", 1}, {"timestamp", "now"}});
  const ExperimentConfig c = ExperimentConfig::from_json({{"experiment", "3"}, {"seed", 2}});
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_NE(a.hash(), c.hash());
  EXPECT_EQ(a.hash().size(), 16u);
}

TEST(Profiles, ConfoundShiftsControlsTowardPatients) {
  const auto control = control_profile(), rest = rest_profile(), task = task_profile(), offset = stress_offset_profile();
  ASSERT_EQ(control.size(), 20u);
  for (std::size_t f = 0; f < 20; ++f) {
    EXPECT_NEAR(control[f] + offset[f], rest[f], 1e-12);
    EXPECT_GE(offset[f], 0.0);
    EXPECT_GE(task[f], rest[f]);
  }
}

TEST_F(Experiments, BinaryExperiments) {
  for (const char* id : {"1a", "1b"}) {
    const ExperimentReport r = run(id);
    EXPECT_EQ(r.class_names.size(), 2u);
    EXPECT_EQ(r.loso.per_class_auc.size(), 2u);
    EXPECT_EQ(r.loso.fold_count(), 16u);
    EXPECT_FALSE(r.stress.has_value());
  }
}

TEST_F(Experiments, MergedThreeClass) {
  const ExperimentReport r = run("2");
  EXPECT_EQ(r.class_names, (std::vector<std::string>{"control", "rest", "task"}));
  EXPECT_EQ(r.loso.per_class_auc.size(), 3u);
  const ConfusionMatrix m = confusion(r.loso, r.class_names);
  ASSERT_EQ(m.counts.size(), 3u);
  for (const auto& row : m.counts) EXPECT_EQ(row.size(), 3u);
  EXPECT_EQ(m.total(), 32);
  int controls = 0;
  for (int v : m.counts[0]) controls += v;
  EXPECT_EQ(controls, 16);
}

TEST_F(Experiments, CohortConservation) {
  const ExperimentReport e3 = run("3");
  const ExperimentReport e4 = run("4");
  const ExperimentReport e5 = run("5");
  auto ids = [](const ExperimentReport& r) {
    std::set<std::string> s;
    for (const auto& p : r.loso.subjects) s.insert(p.subject_id);
    return s;
  };
  const auto s3 = ids(e3), s4 = ids(e4), s5 = ids(e5);
  EXPECT_EQ(s3.size(), 26u);
  EXPECT_EQ(s5, s3);
  ASSERT_TRUE(e4.stress.has_value());
  const auto flagged = e4.stress->flagged();
  EXPECT_FALSE(flagged.empty());
  EXPECT_EQ(e4.excluded_subjects, flagged);
  std::set<std::string> expected4 = s3;
  for (const auto& f : flagged) expected4.erase(f);
  EXPECT_EQ(s4, expected4);
  EXPECT_EQ(e5.adjusted_subjects, flagged);
  ASSERT_TRUE(e5.adjustment.has_value());
  EXPECT_EQ(e5.adjustment->coefficients.size(), 20u);
  for (double c : e5.adjustment->coefficients) EXPECT_TRUE(std::isfinite(c));
}

TEST_F(Experiments, LowStressPoolSelection) {
  const ExperimentReport r = run("6");
  ASSERT_TRUE(r.stress.has_value());
  std::vector<StressScore> unflagged;
  for (const auto& s : r.stress->subjects) {
    if (!s.flagged) unflagged.push_back(s);
  }
  std::sort(unflagged.begin(), unflagged.end(), [](const StressScore& a, const StressScore& b) {
    return a.probability != b.probability ? a.probability < b.probability : a.subject_id < b.subject_id;
  });
  ASSERT_GE(unflagged.size(), 8u);
  std::set<std::string> chosen;
  for (const auto& p : r.loso.subjects) {
    if (p.true_class == 0) chosen.insert(p.subject_id);
  }
  std::set<std::string> expected;
  for (std::size_t i = 0; i < 8; ++i) expected.insert(unflagged[i].subject_id);
  EXPECT_EQ(chosen, expected);
  EXPECT_EQ(r.excluded_subjects.size(), 24u - 8u);
}

TEST_F(Experiments, EmittedFiles) {
  testutil::TempDir out;
  const ExperimentReport e3 = run("3");
  const auto files3 = emit_report(e3, out / "e3");
  EXPECT_EQ(files3.size(), 4u);
  for (const auto& f : files3) EXPECT_TRUE(std::filesystem::exists(f)) << f;
  const ExperimentReport e4 = run("4");
  const auto files4 = emit_report(e4, out / "e4");
  EXPECT_EQ(files4.size(), 5u);
  EXPECT_TRUE(std::filesystem::exists(out / "e4" / "stress_report.json"));

  const auto xml = testutil::check_xml(slurp(out / "e3" / "importance.svg"));
  EXPECT_TRUE(xml.ok) << xml.error;
  EXPECT_EQ(xml.elements.at("rect"), 10);

  const nlohmann::json j = nlohmann::json::parse(slurp(out / "e4" / "report.json"));
  EXPECT_EQ(j["experiment"], "4");
  EXPECT_EQ(j["per_class_auc"].size(), 3u);
  EXPECT_EQ(j["provenance"]["config_hash"], e4.config_hash);
  EXPECT_FALSE(j.contains("timestamp"));
  const ExperimentReport back = experiment_report_from_json(j);
  EXPECT_EQ(experiment_report_to_json(back).dump(), experiment_report_to_json(e4).dump());
}

TEST(ReportSvg, EscapesAndCountsBars) {
  std::vector<ImportanceEntry> ranking{{"a<b", -1, 0.5}, {"c&d", -1, 0.25}, {"\"q\"", -1, 0.0}};
  const auto xml = testutil::check_xml(importance_svg(ranking));
  EXPECT_TRUE(xml.ok) << xml.error;
  EXPECT_EQ(xml.elements.at("rect"), 3);
  EXPECT_TRUE(testutil::check_xml(importance_svg({})).ok);
  EXPECT_FALSE(testutil::check_xml("<svg><rect></svg>").ok);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_EQ(run_cli("frobnicate"), 2);
  EXPECT_EQ(run_cli("train"), 2);
  testutil::TempDir dir;
  const std::string bad = "subject_id,class_label,epoch_index,x\ns0,0,0,oops\n";
  testutil::write_bytes(dir / "bad.csv", std::vector<char>(bad.begin(), bad.end()));
  EXPECT_EQ(run_cli("train --features " + (dir / "bad.csv").string() + " --out " + (dir / "m.json").string()), 1);
}

TEST(Cli, PipelineStages) {
  testutil::TempDir dir;
  CohortSpec spec;
  PowerProfile base(20, 2.0);
  PowerProfile high = base;
  for (std::size_t r = 0; r < 4; ++r) high[r * 5 + 4] = 8.0;
  spec.classes = {ClassSpec{0, "calm", 6, base, {}}, ClassSpec{1, "stressed", 6, high, {}}};
  spec.recording_s = 12.0;
  spec.seed = 2;
  write_json(spec.to_json(), dir / "spec.json");
  const auto d = [&](const std::string& n) { return (dir / n).string(); };
  ASSERT_EQ(run_cli("synth --spec " + d("spec.json") + " --out " + d("cohort")), 0);
  ASSERT_EQ(run_cli("features --manifest " + d("cohort/manifest.json") + " --out " + d("f.csv")), 0);
  ASSERT_EQ(run_cli("train --features " + d("f.csv") + " --objective binary --out " + d("m.json")), 0);
  ASSERT_EQ(run_cli("stress-screen --model " + d("m.json") + " --features " + d("f.csv") + " --threshold 0.5 --out " +
                    d("screen")),
            0);
  const StressReport report = report_from_json(read_json(dir / "screen" / "stress_report.json"));
  EXPECT_EQ(report.subjects.size(), 12u);
  for (const auto& s : report.subjects) EXPECT_EQ(s.flagged, s.probability > 0.5);
  ASSERT_EQ(run_cli("shap --model " + d("m.json") + " --features " + d("f.csv") + " --out " + d("shap")), 0);
  EXPECT_TRUE(testutil::check_xml(slurp(dir / "shap" / "importance.svg")).ok);
  ASSERT_EQ(run_cli("loso --features " + d("f.csv") + " --out " + d("loso")), 0);
  EXPECT_TRUE(std::filesystem::exists(dir / "loso" / "loso.json"));
  ASSERT_EQ(run_cli("stress-adjust --features " + d("f.csv") + " --stress-features " + d("f.csv") + " --report " +
                    d("screen/stress_report.json") + " --out " + d("adj")),
            0);
  EXPECT_TRUE(std::filesystem::exists(dir / "adj" / "features_adjusted.csv"));
  EXPECT_EQ(read_feature_csv(dir / "adj" / "features_adjusted.csv").rows.size(),
            read_feature_csv(dir / "f.csv").rows.size());
}

TEST(Cli, ExperimentIsReproducible) {
  testutil::TempDir dir;
  nlohmann::json cfg = {{"experiment", "4"},
                        {"seed", 5},
                        {"out", "report"},
                        {"params", {{"max_rounds", 20}, {"max_depth", 3}, {"min_child_weight", 5.0}}},
                        {"synthetic", nlohmann::json::object()}};
  for (const char* role : {kRoleRest, kRoleTask, kRoleExternalControls, kRoleStress}) {
    CohortSpec c = small(role, 5);
    c.recording_s = 12.0;
    cfg["synthetic"][role] = c.to_json();
  }
  write_json(cfg, dir / "exp4.json");
  ASSERT_EQ(run_cli("experiment --config " + (dir / "exp4.json").string()), 0);
  const std::string first = slurp(dir / "report" / "report.json");
  for (const char* f : {"report.json", "confusion.csv", "importance.csv", "importance.svg", "stress_report.json"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / "report" / f)) << f;
  }
  ASSERT_EQ(run_cli("experiment --config " + (dir / "exp4.json").string()), 0);
  EXPECT_EQ(slurp(dir / "report" / "report.json"), first);
  ASSERT_EQ(run_cli("report --input " + (dir / "report" / "report.json").string() + " --out " +
                    (dir / "again").string()),
            0);
  EXPECT_EQ(slurp(dir / "again" / "report.json"), first);
}
