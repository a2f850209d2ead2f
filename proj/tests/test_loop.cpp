// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <cmath>
#include <map>
#include <unordered_set>

#include "auggen/error.hpp"
#include "auggen/io.hpp"
#include "auggen/loop.hpp"
#include "auggen/markov.hpp"
#include "auggen/rng.hpp"
#include "auggen/teacher.hpp"

namespace auggen {
namespace {

// Emits the same chorale for every request.
class EchoModel final : public GenerativeModel {
 public:
  explicit EchoModel(Chorale c) : chorale_(std::move(c)) {}
  std::vector<std::size_t> train_epoch(std::span<const Chorale> dataset, const BatchPlan& plan,
                                       std::uint64_t seed) override {
    return draw_epoch_multiset(dataset.size(), plan, seed);
  }
  Chorale sample(std::size_t, std::uint64_t, std::string id) const override {
    Chorale c = chorale_;
    c.id = std::move(id);
    return c;
  }
  double mean_nll(std::span<const Chorale>, std::span<const std::size_t>) const override { return 1.0; }
  nlohmann::json snapshot() const override { return nlohmann::json::object(); }
  void restore(const nlohmann::json&) override {}
  std::unique_ptr<GenerativeModel> clone() const override { return std::make_unique<EchoModel>(*this); }

 private:
  Chorale chorale_;
};

struct Fixture {
  Split split;
  ReferenceModel reference;
  std::vector<double> train_grades;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    Split s = split(teacher_corpus(3, 60, 24, 48), 0.8, 3);
    ReferenceModel reference = fit_reference(s.train, FeatureSet::all());
    Fixture out{std::move(s), std::move(reference), {}};
    for (const auto& c : out.split.train) out.train_grades.push_back(grade(c, out.reference).total);
    return out;
  }();
  return f;
}

MarkovModel fresh_model() {
  std::vector<Chorale> all(fixture().split.train.begin(), fixture().split.train.end());
  all.insert(all.end(), fixture().split.validation.begin(), fixture().split.validation.end());
  return MarkovModel(2, 0.1, Vocabulary::from_chorales(all));
}

LoopConfig small_config(Threshold threshold) {
  LoopConfig c;
  c.generations = 12;
  c.threshold = std::move(threshold);
  c.plan = {16, 4};
  c.max_epochs = 8;
  c.patience = 3;
  c.seed = 41;
  return c;
}

RunResult run_markov(const LoopConfig& config) {
  MarkovModel model = fresh_model();
  return run(config, fixture().split, fixture().reference, model);
}

TEST(LoopConfig, Validation) {
  LoopConfig c = small_config(Threshold::plus_infinity());
  EXPECT_NO_THROW(c.check());
  c.max_epochs = 0;
  EXPECT_THROW(c.check(), Error);
  c = small_config(Threshold::plus_infinity());
  c.patience = 0;
  EXPECT_THROW(c.check(), Error);
  c = small_config(Threshold::plus_infinity());
  c.min_improvement = -1;
  EXPECT_THROW(c.check(), Error);
  c = small_config(Threshold::plus_infinity());
  c.plan.batch_size = 0;
  EXPECT_THROW(c.check(), Error);
}

TEST(LoopConfig, JsonRoundTripKeepsInfinities) {
  for (const auto& t : {Threshold::minus_infinity(), Threshold::plus_infinity(), Threshold{2.5, "q"}}) {
    LoopConfig c = small_config(t);
    c.patience = std::nullopt;
    const auto back = LoopConfig::from_json(nlohmann::json::parse(c.to_json().dump()));
    EXPECT_EQ(back.threshold.value, t.value);
    EXPECT_EQ(back.threshold.provenance, t.provenance);
    EXPECT_EQ(back.patience, std::nullopt);
    EXPECT_EQ(back.to_json().dump(), c.to_json().dump());
  }
}

TEST(Generation, MinusInfinityAcceptsNothing) {
  const auto result = run_markov(small_config(Threshold::minus_infinity()));
  for (const auto& log : result.epochs) {
    EXPECT_EQ(log.additions, 0u);
    EXPECT_EQ(log.dataset_size, fixture().split.train.size());
    for (const auto& c : log.candidates) EXPECT_FALSE(c.accepted());
  }
}

TEST(Generation, PlusInfinityAcceptsEveryUniqueCandidate) {
  const auto result = run_markov(small_config(Threshold::plus_infinity()));
  std::size_t accepted = 0;
  for (const auto& log : result.epochs) {
    for (const auto& c : log.candidates) {
      EXPECT_NE(c.reason, Rejection::kGrade);
      accepted += c.accepted();
    }
  }
  EXPECT_GT(accepted, 0u);
  EXPECT_EQ(result.dataset.size(), fixture().split.train.size() + accepted);
}

TEST(Generation, CopyOfTrueChoraleIsDuplicate) {
  for (const Corpus* source : {&fixture().split.train, &fixture().split.validation}) {
    EchoModel echo((*source)[0]);
    TrainState state(fixture().split);
    const auto out = generation_step(state, echo, fixture().reference, small_config(Threshold::plus_infinity()), 0);
    EXPECT_EQ(out.additions, 0u);
    for (const auto& c : out.candidates) EXPECT_EQ(c.reason, Rejection::kDuplicate);
  }
}

TEST(Generation, DuplicateReportedBeforeGrade) {
  EchoModel echo(fixture().split.train[0]);
  TrainState state(fixture().split);
  const auto out = generation_step(state, echo, fixture().reference, small_config(Threshold::minus_infinity()), 0);
  for (const auto& c : out.candidates) EXPECT_EQ(c.reason, Rejection::kDuplicate);
}

TEST(Generation, NovelChoraleAcceptedOnce) {
  Chorale novel = transpose(fixture().split.train[0], 1);
  EchoModel echo(novel);
  TrainState state(fixture().split);
  const auto config = small_config(Threshold::plus_infinity());
  const auto first = generation_step(state, echo, fixture().reference, config, 0);
  ASSERT_EQ(first.candidates.size(), config.generations);
  EXPECT_EQ(first.additions, 1u);
  EXPECT_TRUE(first.candidates[0].accepted());
  EXPECT_EQ(first.candidates[0].id, "gen-e000-c000");
  for (std::size_t j = 1; j < first.candidates.size(); ++j) EXPECT_EQ(first.candidates[j].reason, Rejection::kDuplicate);
  EXPECT_EQ(generation_step(state, echo, fixture().reference, config, 1).additions, 0u);
  EXPECT_EQ(state.size(), fixture().split.train.size() + 1);
  EXPECT_EQ(state.entries().back().acceptance_epoch, std::optional<std::size_t>(0));
}

TEST(Generation, GradeRejectionAboveThreshold) {
  Chorale novel = transpose(fixture().split.train[0], 5);
  const double g = grade(novel, fixture().reference).total;
  EchoModel echo(novel);
  TrainState state(fixture().split);
  auto config = small_config(Threshold{std::nextafter(g, 0.0), "just below"});
  config.generations = 1;
  auto out = generation_step(state, echo, fixture().reference, config, 0);
  EXPECT_EQ(out.candidates[0].reason, Rejection::kGrade);
  EXPECT_EQ(out.candidates[0].grade, g);
  TrainState again(fixture().split);
  config.threshold.value = g;
  EXPECT_EQ(generation_step(again, echo, fixture().reference, config, 0).additions, 1u);
}

TEST(Run, BaselineNoneEqualsFixedSplitTraining) {
  auto config = small_config(Threshold::minus_infinity());
  config.patience = std::nullopt;
  const auto result = run_markov(config);
  ASSERT_EQ(result.epochs.size(), config.max_epochs);
  MarkovModel manual = fresh_model();
  double best = 0.0;
  std::size_t best_epoch = 0;
  nlohmann::json best_model;
  for (std::size_t e = 0; e < config.max_epochs; ++e) {
    const auto multiset = manual.train_epoch(fixture().split.train.chorales(), config.plan,
                                             derive_seed(config.seed, {stream_tag("train"), e}));
    const double val = manual.mean_nll(fixture().split.validation.chorales());
    EXPECT_EQ(result.epochs[e].validation_loss, val);
    EXPECT_EQ(result.epochs[e].train_loss, manual.mean_nll(fixture().split.train.chorales(), multiset));
    if (e == 0 || val < best - config.min_improvement) {
      best = val;
      best_epoch = e;
      best_model = manual.snapshot();
    }
  }
  EXPECT_EQ(result.best_epoch, best_epoch);
  EXPECT_EQ(result.best_validation_loss, best);
  EXPECT_EQ(result.best_model, best_model);
}

TEST(Run, SingleEpoch) {
  auto config = small_config(Threshold::plus_infinity());
  config.max_epochs = 1;
  const auto result = run_markov(config);
  ASSERT_EQ(result.epochs.size(), 1u);
  EXPECT_EQ(result.epochs[0].candidates.size(), config.generations);
  EXPECT_EQ(result.epochs[0].multiset_size, config.plan.draws());
  EXPECT_EQ(result.best_epoch, 0u);
}

TEST(Run, NoGenerationsIsPlainTraining) {
  auto config = small_config(Threshold::plus_infinity());
  config.generations = 0;
  const auto result = run_markov(config);
  for (const auto& log : result.epochs) {
    EXPECT_TRUE(log.candidates.empty());
    EXPECT_EQ(log.dataset_size, fixture().split.train.size());
  }
  auto none = small_config(Threshold::minus_infinity());
  EXPECT_EQ(metrics_csv(result), metrics_csv(run_markov(none)));
}

TEST(Run, ByteIdenticalReruns) {
  const auto config = small_config(Threshold{nearest_rank_quantile(fixture().train_grades, 0.75), "q"});
  const auto a = run_markov(config);
  const auto b = run_markov(config);
  EXPECT_EQ(epoch_logs_csv(a), epoch_logs_csv(b));
  EXPECT_EQ(metrics_csv(a), metrics_csv(b));
  EXPECT_EQ(manifest_jsonl(a), manifest_jsonl(b));
  EXPECT_EQ(a.best_model.dump(), b.best_model.dump());
}

TEST(Run, PatienceStopsEarly) {
  auto config = small_config(Threshold::plus_infinity());
  config.max_epochs = 40;
  config.patience = 2;
  const auto result = run_markov(config);
  if (result.epochs.size() < config.max_epochs) {
    EXPECT_EQ(result.epochs.size(), result.best_epoch + 1 + *config.patience);
  }
  auto full = config;
  full.patience = std::nullopt;
  EXPECT_EQ(run_markov(full).epochs.size(), config.max_epochs);
}

TEST(Run, SoundnessInvariants) {
  const Threshold t{nearest_rank_quantile(fixture().train_grades, 0.75), "q"};
  auto config = small_config(t);
  config.generations = 30;
  config.max_epochs = 12;
  config.patience = std::nullopt;
  const auto result = run_markov(config);
  EXPECT_EQ(result.reference_fingerprint_before, result.reference_fingerprint_after);
  EXPECT_EQ(result.reference_fingerprint_before, fixture().reference.fingerprint());

  std::unordered_set<ChoraleKey> validation_keys;
  std::unordered_set<std::string> validation_ids;
  for (const auto& c : fixture().split.validation) {
    validation_keys.insert(canonical_key(c));
    validation_ids.insert(c.id);
  }
  std::unordered_set<ChoraleKey> keys;
  std::size_t generated = 0;
  for (const auto& entry : result.dataset) {
    EXPECT_TRUE(keys.insert(canonical_key(entry.chorale)).second) << entry.chorale.id;
    EXPECT_FALSE(validation_keys.contains(canonical_key(entry.chorale)));
    if (entry.origin == Origin::kGenerated) {
      ++generated;
      EXPECT_LE(grade(entry.chorale, fixture().reference).total, t.value);
      EXPECT_TRUE(is_valid(entry.chorale));
    }
  }
  EXPECT_GT(generated, 0u);

  std::size_t previous = fixture().split.train.size();
  for (const auto& log : result.epochs) {
    EXPECT_LE(log.additions, config.generations);
    EXPECT_EQ(log.dataset_size, previous + log.additions);
    previous = log.dataset_size;
    for (const auto& [id, n] : log.multiset) EXPECT_FALSE(validation_ids.contains(id));
  }
  EXPECT_EQ(previous, result.dataset.size());
}

TEST(Run, AcceptedChoralesDrawnUniformly) {
  auto config = small_config(Threshold::plus_infinity());
  config.generations = 6;
  config.plan = {200, 4};
  config.max_epochs = 15;
  config.patience = std::nullopt;
  const auto result = run_markov(config);

  std::map<std::string, std::size_t> accepted_at;
  for (const auto& entry : result.dataset) {
    if (entry.origin == Origin::kGenerated) accepted_at[entry.chorale.id] = *entry.acceptance_epoch;
  }
  ASSERT_FALSE(accepted_at.empty());
  // Draws landing on generated chorales, summed over epochs, against the
  // binomial mean and variance implied by uniform sampling.
  double observed = 0, mean = 0, variance = 0;
  for (const auto& log : result.epochs) {
    std::size_t present = 0;
    for (const auto& [id, epoch] : accepted_at) present += epoch <= log.epoch;
    const double p = static_cast<double>(present) / static_cast<double>(log.dataset_size);
    const double draws = static_cast<double>(config.plan.draws());
    mean += draws * p;
    variance += draws * p * (1 - p);
    for (const auto& [id, n] : log.multiset) {
      auto it = accepted_at.find(id);
      if (it == accepted_at.end()) continue;
      EXPECT_LE(it->second, log.epoch) << id << " drawn before acceptance";
      observed += static_cast<double>(n);
    }
  }
  EXPECT_LT(std::abs(observed - mean), 3 * std::sqrt(variance)) << observed << " vs " << mean;
}

TEST(Outputs, CsvShapes) {
  const auto result = run_markov(small_config(Threshold::plus_infinity()));
  const auto logs = parse_csv(epoch_logs_csv(result));
  std::size_t candidates = 0;
  for (const auto& log : result.epochs) candidates += log.candidates.size();
  EXPECT_EQ(logs.rows.size(), candidates);
  EXPECT_EQ(logs.header, (std::vector<std::string>{"epoch", "candidate_id", "grade", "accepted", "reason"}));
  const auto metrics = parse_csv(metrics_csv(result));
  EXPECT_EQ(metrics.rows.size(), result.epochs.size());
  std::size_t lines = 0;
  for (char ch : manifest_jsonl(result)) lines += ch == '\n';
  EXPECT_EQ(lines, result.dataset.size());
}

}  // namespace
}  // namespace auggen
