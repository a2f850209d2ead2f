// SPDX-License-Identifier: Apache-2.0
//
// Experiment harness: threshold regimes, single-regime training runs, and the
// three-way comparison with its CSV outputs.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "auggen/grading.hpp"
#include "auggen/loop.hpp"
#include "auggen/markov.hpp"
#include "auggen/teacher.hpp"

namespace auggen {

enum class RegimeKind { kAugGen, kBaselineNone, kBaselineAll };

struct Regime {
  RegimeKind kind = RegimeKind::kAugGen;
  /// Quantile of true-train grades used as the threshold (auggen only).
  double quantile = 0.75;

  /// "auggen", "auggen_q0.5", "baseline_none", "baseline_all".
  std::string name() const;
  /// Accepts the names above and "auggen:<q>". Throws on anything else.
  static Regime parse(std::string_view text);

  friend bool operator==(const Regime&, const Regime&) = default;
};

/// Threshold for `regime`: nearest-rank quantile of `train_grades` for
/// auggen, -inf / +inf for the baselines.
Threshold derive_threshold(const Regime& regime, std::span<const double> train_grades);

struct ExperimentConfig {
  /// JSON-lines corpus; when absent a teacher corpus is generated.
  std::optional<std::string> corpus_path;
  std::size_t teacher_size = 80;
  std::size_t teacher_min_length = 32;
  std::size_t teacher_max_length = 64;
  /// Defaults to a stream derived from `seed`.
  std::optional<std::uint64_t> teacher_seed;
  TeacherParams teacher;

  double split_fraction = 0.8;
  /// Defaults to `seed`.
  std::optional<std::uint64_t> split_seed;

  std::vector<std::string> features = FeatureRegistry::builtin().names();
  /// Empty for unit weights.
  std::vector<double> weights;
  double empty_penalty = kDefaultEmptyPenalty;

  std::vector<Regime> regimes = {{RegimeKind::kAugGen, 0.75}, {RegimeKind::kBaselineNone}, {RegimeKind::kBaselineAll}};

  std::size_t generations = 20;
  std::size_t batches = 64;
  std::size_t batch_size = 4;
  std::size_t max_epochs = 30;
  std::optional<std::size_t> patience = 5;
  double min_improvement = 1e-4;

  std::size_t markov_order = 2;
  double alpha = 0.1;

  std::size_t n_eval = 100;
  std::uint64_t seed = 17;

  /// Desk-scale profile: teacher corpus of 80, N=20, m=64, k=4, E=30, p=5.
  static ExperimentConfig desk();
  /// Full-scale protocol: N=50, m=2048, k=8, E=40, no early stopping, 351
  /// evaluation samples.
  static ExperimentConfig paper();
  /// "desk" or "paper"; throws otherwise.
  static ExperimentConfig profile(std::string_view name);

  std::uint64_t effective_teacher_seed() const;
  std::uint64_t effective_split_seed() const;

  /// Throws auggen::Error when an invariant is broken.
  void check() const;

  nlohmann::ordered_json to_json() const;
  /// Overrides the fields present in `doc` on top of `base`. Unknown keys are errors.
  static ExperimentConfig from_json(const nlohmann::json& doc, ExperimentConfig base = desk());

  LoopConfig loop_config(const Threshold& threshold) const;
};

/// Corpus, split, frozen reference, and the grades that thresholds derive from.
struct ExperimentData {
  Corpus corpus;
  Split split;
  ReferenceModel reference;
  /// Grades of split.train under the reference, in split order.
  std::vector<double> train_grades;
  /// Grades of every corpus chorale, in corpus order.
  std::vector<double> corpus_grades;
};

ExperimentData prepare(const ExperimentConfig& config);

/// Fresh untrained model whose vocabulary covers every true chorale.
MarkovModel initial_model(const ExperimentConfig& config, const Split& split);

struct RegimeSummary {
  std::string regime;
  Threshold threshold;
  std::size_t best_epoch = 0;
  double best_validation_loss = 0.0;
  std::size_t epochs_run = 0;
  std::vector<std::pair<std::size_t, Quintuple>> epoch_grades;
  std::vector<double> final_grades;
  std::size_t true_count = 0;
  std::size_t generated_count = 0;
  double generated_fraction = 0.0;
};

struct RegimeRun {
  Regime regime;
  nlohmann::ordered_json config;
  RunResult result;
  RegimeSummary summary;
};

/// Config document written as a regime's config.json: the full experiment
/// config, the regime, and the loop config including its threshold.
nlohmann::ordered_json regime_config_json(const ExperimentConfig& config, const Regime& regime,
                                          const LoopConfig& loop);

/// Runs one regime and evaluates n_eval samples from its best snapshot with
/// streams derive_seed(seed, {stream_tag("eval"), i}).
RegimeRun run_regime(const ExperimentConfig& config, const ExperimentData& data, const Regime& regime);

/// Per-epoch grade quintuples of the candidates in `result` (epochs without
/// candidates are skipped).
std::vector<std::pair<std::size_t, Quintuple>> epoch_quintuples(const RunResult& result);

std::string figure1_csv(std::span<const RegimeRun> runs);
std::string figure2_csv(std::span<const double> corpus_grades, std::span<const RegimeRun> runs);
std::string summary_csv(std::span<const RegimeRun> runs);
std::string grades_csv(std::span<const double> grades, std::string_view source);

struct CompareResult {
  ExperimentData data;
  std::vector<RegimeRun> runs;
};

/// Writes into `out_dir`: experiment.json, split.json, reference.json,
/// corpus.jsonl, figure1.csv, figure2.csv, summary.csv, and one directory
/// per regime (see write_run, plus eval_grades.csv). A failing regime is
/// reported by name after the completed ones are flushed.
CompareResult compare(const ExperimentConfig& config, const std::filesystem::path& out_dir);

/// Single-regime run written to `out_dir` (write_run layout plus split.json
/// and eval_grades.csv).
RegimeRun train(const ExperimentConfig& config, const Regime& regime, const std::filesystem::path& out_dir);

/// CSV: chorale_id, d_<feature>..., total_grade.
std::string grade_report_csv(const Corpus& corpus, const ReferenceModel& reference);

/// CSV: chorale_id, feature_name, value, weight.
std::string feature_dump_csv(const Corpus& corpus, const FeatureSet& features);

/// Recomputes per-epoch quintuples of a compare output directory from each
/// regime's epoch_logs.csv. Returns one message per mismatch with figure1.csv.
std::vector<std::string> verify_figure1(const std::filesystem::path& out_dir);

}  // namespace auggen
