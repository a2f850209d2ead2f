// SPDX-License-Identifier: Apache-2.0
//
// The augmentation loop. Each epoch has a generation step (sample N
// candidates, grade them with the frozen critic, keep those that pass the
// threshold and were never seen before) and a training step (m batches of k
// chorales from the augmented dataset). Validation loss drives best-epoch
// selection and early stopping.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "auggen/corpus.hpp"
#include "auggen/grading.hpp"
#include "auggen/model.hpp"

namespace auggen {

struct LoopConfig {
  /// Candidates generated per epoch (N). Zero reduces the run to plain training.
  std::size_t generations = 20;
  Threshold threshold;
  BatchPlan plan{64, 4};
  std::size_t max_epochs = 30;
  /// Epochs without improvement before stopping; nullopt trains all max_epochs.
  std::optional<std::size_t> patience = 5;
  /// A validation loss counts as an improvement only if it beats the best by more than this.
  double min_improvement = 1e-4;
  std::uint64_t seed = 0;

  /// Throws auggen::Error when an invariant is broken.
  void check() const;

  nlohmann::ordered_json to_json() const;
  static LoopConfig from_json(const nlohmann::json& doc);
};

nlohmann::ordered_json threshold_to_json(const Threshold& threshold);
Threshold threshold_from_json(const nlohmann::json& doc);

enum class Origin { kTrue, kGenerated };

enum class Rejection { kNone, kGrade, kDuplicate };

std::string_view to_string(Origin origin);
std::string_view to_string(Rejection reason);

struct DatasetEntry {
  Chorale chorale;
  Origin origin = Origin::kTrue;
  std::optional<std::size_t> acceptance_epoch;
};

struct CandidateRecord {
  std::string id;
  double grade = 0.0;
  Rejection reason = Rejection::kNone;

  bool accepted() const noexcept { return reason == Rejection::kNone; }
};

struct EpochLog {
  std::size_t epoch = 0;
  std::vector<CandidateRecord> candidates;
  std::size_t additions = 0;
  std::size_t dataset_size = 0;
  double train_loss = 0.0;
  double validation_loss = 0.0;
  std::size_t multiset_size = 0;
  /// Ids drawn during the training step with their draw counts, dataset order.
  std::vector<std::pair<std::string, std::size_t>> multiset;
};

/// Mutable state of one run: the augmented training dataset and the keys of
/// everything seen so far. The validation split is held by reference and
/// never modified.
class TrainState {
 public:
  /// Seeds the dataset with split.train and the seen keys with every true
  /// chorale (training and validation).
  explicit TrainState(const Split& split);

  std::span<const Chorale> chorales() const noexcept { return chorales_; }
  std::span<const DatasetEntry> entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return chorales_.size(); }

  const Corpus& validation() const noexcept { return *validation_; }
  std::span<const std::size_t> true_lengths() const noexcept { return true_lengths_; }

  bool seen(const ChoraleKey& key) const { return seen_.contains(key); }
  /// Returns false if the key was already present.
  bool mark_seen(const ChoraleKey& key) { return seen_.insert(key).second; }

  void add_generated(Chorale chorale, std::size_t epoch);

 private:
  const Corpus* validation_;
  std::vector<Chorale> chorales_;
  std::vector<DatasetEntry> entries_;
  std::vector<std::size_t> true_lengths_;
  std::unordered_set<ChoraleKey> seen_;
};

/// Candidate j of epoch `epoch` uses stream derive_seed(seed, {stream_tag("generate"), epoch, j}):
/// its first draw picks the length uniformly from the true training lengths,
/// and the tokens come from derive_seed(stream, {stream_tag("tokens")}).
Chorale generate_candidate(const GenerativeModel& model, std::span<const std::size_t> lengths, std::uint64_t seed,
                           std::size_t epoch, std::size_t index);

struct GenerationOutcome {
  std::vector<CandidateRecord> candidates;
  std::size_t additions = 0;
};

/// Generates and grades config.generations candidates. A candidate is
/// accepted iff its grade passes the threshold and its key is unseen; every
/// candidate's key is then marked seen. Duplicates are reported as such even
/// when the grade also fails.
GenerationOutcome generation_step(TrainState& state, const GenerativeModel& model, const ReferenceModel& reference,
                                  const LoopConfig& config, std::size_t epoch);

struct TrainingOutcome {
  std::vector<std::size_t> multiplicity;
  double train_loss = 0.0;
};

/// One train_epoch over the augmented dataset with stream
/// derive_seed(seed, {stream_tag("train"), epoch}); the train loss is the
/// mean NLL of the epoch multiset under the updated model.
TrainingOutcome training_step(const TrainState& state, GenerativeModel& model, const LoopConfig& config,
                              std::size_t epoch);

struct RunResult {
  LoopConfig config;
  std::vector<EpochLog> epochs;
  std::size_t best_epoch = 0;
  double best_validation_loss = 0.0;
  nlohmann::json best_model;
  std::vector<DatasetEntry> dataset;
  nlohmann::json reference;
  std::string reference_fingerprint_before;
  std::string reference_fingerprint_after;
};

/// Runs the loop until patience runs out or max_epochs is reached. The
/// reference must have been fit on split.train only.
RunResult run(const LoopConfig& config, const Split& split, const ReferenceModel& reference, GenerativeModel& model);

std::string epoch_logs_csv(const RunResult& result);
std::string metrics_csv(const RunResult& result);
std::string manifest_jsonl(const RunResult& result);

/// config.json (given), epoch_logs.csv, metrics.csv, dataset_manifest.jsonl,
/// generated.jsonl, best_model.json, reference.json.
void write_run(const RunResult& result, const std::filesystem::path& dir, const nlohmann::ordered_json& config);

}  // namespace auggen
