// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "auggen/error.hpp"
#include "auggen/experiment.hpp"
#include "auggen/io.hpp"
#include "support/tmpdir.hpp"

namespace auggen {
namespace {

ExperimentConfig small() {
  ExperimentConfig c = ExperimentConfig::desk();
  c.teacher_size = 40;
  c.teacher_min_length = 16;
  c.teacher_max_length = 32;
  c.generations = 8;
  c.batches = 16;
  c.max_epochs = 6;
  c.patience = 3;
  c.n_eval = 20;
  return c;
}

// Element at 1-based rank ceil(q n) of the sorted list, rank found by counting.
double rank_statistic(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  std::size_t rank = 1;
  while (static_cast<double>(rank) < q * static_cast<double>(values.size()) - 1e-9) ++rank;
  return values[rank - 1];
}

TEST(Regime, ParseAndName) {
  EXPECT_EQ(Regime::parse("auggen"), (Regime{RegimeKind::kAugGen, 0.75}));
  EXPECT_EQ(Regime::parse("auggen:0.5"), (Regime{RegimeKind::kAugGen, 0.5}));
  EXPECT_EQ(Regime::parse("auggen_q0.9").quantile, 0.9);
  EXPECT_EQ(Regime::parse("auggen:0.5").name(), "auggen_q0.5");
  EXPECT_EQ(Regime::parse(Regime::parse("auggen:0.5").name()), Regime::parse("auggen:0.5"));
  EXPECT_EQ(Regime::parse("baseline_none").kind, RegimeKind::kBaselineNone);
  EXPECT_EQ(Regime::parse("baseline_all").name(), "baseline_all");
  for (const char* bad : {"auggen:0", "auggen:1.5", "auggen:", "auggen:x", "random", ""}) {
    EXPECT_THROW(Regime::parse(bad), Error) << bad;
  }
}

TEST(Regime, ThresholdDerivation) {
  const ExperimentData data = prepare(small());
  const Threshold t = derive_threshold(Regime::parse("auggen"), data.train_grades);
  EXPECT_EQ(t.value, rank_statistic(data.train_grades, 0.75));
  EXPECT_NE(t.provenance.find("auggen"), std::string::npos);
  EXPECT_EQ(derive_threshold(Regime::parse("baseline_none"), data.train_grades).value, -INFINITY);
  EXPECT_EQ(derive_threshold(Regime::parse("baseline_all"), data.train_grades).value, INFINITY);
}

TEST(Config, Profiles) {
  const auto paper = ExperimentConfig::profile("paper");
  EXPECT_EQ(paper.generations, 50u);
  EXPECT_EQ(paper.batches, 2048u);
  EXPECT_EQ(paper.batch_size, 8u);
  EXPECT_EQ(paper.max_epochs, 40u);
  EXPECT_EQ(paper.patience, std::nullopt);
  EXPECT_EQ(paper.n_eval, 351u);
  const auto json = paper.to_json();
  EXPECT_EQ(json["loop"]["generations"], 50);
  EXPECT_EQ(json["loop"]["batches"], 2048);
  EXPECT_EQ(json["loop"]["batch_size"], 8);
  EXPECT_EQ(json["loop"]["max_epochs"], 40);
  EXPECT_TRUE(json["loop"]["patience"].is_null());
  EXPECT_EQ(json["n_eval"], 351);
  const auto desk = ExperimentConfig::profile("desk");
  EXPECT_EQ(desk.teacher_size, 80u);
  EXPECT_EQ(desk.generations, 20u);
  EXPECT_EQ(desk.patience, std::optional<std::size_t>(5));
  EXPECT_THROW(ExperimentConfig::profile("huge"), Error);
}

TEST(Config, JsonRoundTrip) {
  ExperimentConfig c = small();
  c.regimes = {Regime::parse("auggen:0.5"), Regime::parse("baseline_all")};
  c.weights = {1, 2, 1, 1, 0.5, 1};
  c.split_seed = 99;
  const auto text = c.to_json().dump();
  const auto back = ExperimentConfig::from_json(nlohmann::json::parse(text));
  EXPECT_EQ(back.to_json().dump(), text);

  const auto overlay = ExperimentConfig::from_json(nlohmann::json::parse(R"({"profile":"paper","seed":3})"));
  EXPECT_EQ(overlay.generations, 50u);
  EXPECT_EQ(overlay.seed, 3u);
  EXPECT_THROW(ExperimentConfig::from_json(nlohmann::json::parse(R"({"sead":3})")), Error);
  EXPECT_THROW(ExperimentConfig::from_json(nlohmann::json::parse(R"({"loop":{"generatons":3}})")), Error);
}

TEST(Config, Check) {
  auto c = small();
  c.split_fraction = 1.0;
  EXPECT_THROW(c.check(), Error);
  c = small();
  c.regimes = {Regime::parse("auggen"), Regime::parse("auggen")};
  EXPECT_THROW(c.check(), Error);
  c = small();
  c.weights = {1, 2};
  EXPECT_THROW(c.check(), Error);
  c = small();
  c.n_eval = 0;
  EXPECT_THROW(c.check(), Error);
}

class CompareTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new std::filesystem::path(testing::fresh_dir("compare"));
    try {
      result_ = new CompareResult(compare(small(), *dir_));
    } catch (const std::exception& e) {
      setup_error_ = new std::string(e.what());
    }
  }
  void SetUp() override {
    if (setup_error_) GTEST_FAIL() << "compare failed: " << *setup_error_;
  }
  static void TearDownTestSuite() {
    delete result_;
    delete dir_;
    delete setup_error_;
    result_ = nullptr;
    setup_error_ = nullptr;
  }
  static const RegimeRun& regime(const std::string& name) {
    for (const auto& r : result_->runs) {
      if (r.summary.regime == name) return r;
    }
    throw Error("no regime " + name);
  }
  static inline std::filesystem::path* dir_ = nullptr;
  static inline CompareResult* result_ = nullptr;
  static inline std::string* setup_error_ = nullptr;
};

TEST_F(CompareTest, WritesEveryOutput) {
  for (const char* f : {"experiment.json", "split.json", "reference.json", "corpus.jsonl", "figure1.csv",
                        "figure2.csv", "summary.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(*dir_ / f)) << f;
  }
  for (const char* r : {"auggen", "baseline_none", "baseline_all"}) {
    for (const char* f : {"config.json", "epoch_logs.csv", "metrics.csv", "dataset_manifest.jsonl", "generated.jsonl",
                          "best_model.json", "reference.json", "eval_grades.csv"}) {
      EXPECT_TRUE(std::filesystem::exists(*dir_ / r / f)) << r << "/" << f;
    }
  }
}

TEST_F(CompareTest, BaselineNoneHasNoGeneratedChorales) {
  EXPECT_EQ(regime("baseline_none").summary.generated_count, 0u);
  EXPECT_EQ(regime("baseline_none").summary.generated_fraction, 0.0);
}

TEST_F(CompareTest, RegimeConfigsDifferOnlyInThreshold) {
  auto strip = [&](const char* name) {
    auto doc = nlohmann::json::parse(read_file(*dir_ / name / "config.json"));
    doc["loop"].erase("threshold");
    return doc.dump();
  };
  EXPECT_EQ(strip("auggen"), strip("baseline_none"));
  EXPECT_EQ(strip("auggen"), strip("baseline_all"));
  const auto auggen = nlohmann::json::parse(read_file(*dir_ / "auggen" / "config.json"));
  EXPECT_EQ(auggen["loop"]["threshold"]["value"].get<double>(), regime("auggen").summary.threshold.value);
}

TEST_F(CompareTest, GeneratedFractionMatchesManifest) {
  for (const auto& r : result_->runs) {
    std::istringstream lines(read_file(*dir_ / r.summary.regime / "dataset_manifest.jsonl"));
    std::string line;
    std::size_t total = 0, generated = 0;
    while (std::getline(lines, line)) {
      const auto doc = nlohmann::json::parse(line);
      ++total;
      if (doc["origin"] == "generated") {
        ++generated;
        EXPECT_FALSE(doc["acceptance_epoch"].is_null());
      }
    }
    EXPECT_EQ(total, r.summary.true_count + r.summary.generated_count);
    EXPECT_EQ(r.summary.generated_fraction, static_cast<double>(generated) / static_cast<double>(total));
  }
}

TEST_F(CompareTest, Figure1MatchesEpochLogs) {
  EXPECT_TRUE(verify_figure1(*dir_).empty());
  const CsvTable figure = parse_csv(read_file(*dir_ / "figure1.csv"));
  std::size_t rows = 0;
  for (const auto& r : result_->runs) {
    const CsvTable logs = parse_csv(read_file(*dir_ / r.summary.regime / "epoch_logs.csv"));
    std::map<std::size_t, std::vector<double>> by_epoch;
    for (const auto& row : logs.rows) by_epoch[std::stoul(row[0])].push_back(std::stod(row[2]));
    for (const auto& [epoch, grades] : by_epoch) {
      const auto& row = figure.rows.at(rows++);
      ASSERT_EQ(row[0], r.summary.regime);
      EXPECT_EQ(std::stoul(row[1]), epoch);
      EXPECT_EQ(std::stod(row[2]), *std::min_element(grades.begin(), grades.end()));
      EXPECT_EQ(std::stod(row[3]), rank_statistic(grades, 0.25));
      EXPECT_EQ(std::stod(row[4]), rank_statistic(grades, 0.5));
      EXPECT_EQ(std::stod(row[5]), rank_statistic(grades, 0.75));
      EXPECT_EQ(std::stod(row[6]), *std::max_element(grades.begin(), grades.end()));
    }
  }
  EXPECT_EQ(rows, figure.rows.size());
}

TEST_F(CompareTest, Figure1MismatchIsReported) {
  const auto copy = testing::fresh_dir("compare-tampered");
  std::filesystem::copy(*dir_, copy, std::filesystem::copy_options::recursive);
  std::string figure = read_file(copy / "figure1.csv");
  const auto pos = figure.find("\nauggen,0,");
  ASSERT_NE(pos, std::string::npos);
  figure.insert(pos + 10, "9");
  write_file_atomic(copy / "figure1.csv", figure);
  EXPECT_FALSE(verify_figure1(copy).empty());
}

TEST_F(CompareTest, Figure2ListsCorpusThenRegimes) {
  const CsvTable figure = parse_csv(read_file(*dir_ / "figure2.csv"));
  const std::size_t n = result_->data.corpus.size();
  ASSERT_EQ(figure.rows.size(), n + 3 * small().n_eval);
  for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(figure.rows[i][0], "corpus");
  EXPECT_EQ(figure.rows[n][0], "auggen");
}

TEST_F(CompareTest, ByteIdenticalRerun) {
  const auto again = testing::fresh_dir("compare-again");
  compare(small(), again);
  for (const char* f : {"figure1.csv", "figure2.csv", "summary.csv", "auggen/epoch_logs.csv", "auggen/metrics.csv",
                        "baseline_all/dataset_manifest.jsonl", "auggen/best_model.json"}) {
    EXPECT_EQ(read_file(*dir_ / f), read_file(again / f)) << f;
  }
}

TEST(Train, SingleRegimeMatchesCompare) {
  const auto dir = testing::fresh_dir("train-single");
  auto config = small();
  config.regimes = {Regime::parse("auggen")};
  const auto compared = compare(config, dir / "cmp");
  const auto trained = train(config, Regime::parse("auggen"), dir / "one");
  EXPECT_EQ(read_file(dir / "one" / "epoch_logs.csv"), read_file(dir / "cmp" / "auggen" / "epoch_logs.csv"));
  EXPECT_EQ(trained.summary.final_grades, compared.runs[0].summary.final_grades);
  EXPECT_TRUE(std::filesystem::exists(dir / "one" / "split.json"));
}

TEST(GradeReport, OneRowPerChoraleAndStable) {
  const ExperimentData data = prepare(small());
  const auto csv = grade_report_csv(data.corpus, data.reference);
  const CsvTable table = parse_csv(csv);
  EXPECT_EQ(table.rows.size(), data.corpus.size());
  EXPECT_EQ(table.header.front(), "chorale_id");
  EXPECT_EQ(table.header.back(), "total_grade");
  EXPECT_EQ(table.header.size(), 8u);
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    EXPECT_EQ(std::stod(table.rows[i].back()), data.corpus_grades[i]);
  }
  EXPECT_EQ(csv, grade_report_csv(prepare(small()).corpus, data.reference));
}

TEST(FeatureDump, RowsMatchExtraction) {
  const ExperimentData data = prepare(small());
  const FeatureSet features = FeatureSet::all();
  const CsvTable table = parse_csv(feature_dump_csv(data.corpus, features));
  std::size_t expected = 0;
  for (const auto& c : data.corpus) {
    for (const auto& d : features.extract(c)) expected += d.size();
  }
  EXPECT_EQ(table.rows.size(), expected);
}

}  // namespace
}  // namespace auggen
