// SPDX-License-Identifier: Apache-2.0
#include "auggen/loop.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "auggen/error.hpp"
#include "auggen/io.hpp"
#include "auggen/rng.hpp"

namespace auggen {

void LoopConfig::check() const {
  if (max_epochs == 0) throw Error("max_epochs must be >= 1");
  if (patience && *patience == 0) throw Error("patience must be >= 1");
  if (!(min_improvement >= 0.0)) throw Error("min_improvement must be >= 0");
  if (plan.batches == 0 || plan.batch_size == 0) throw Error("batch plan needs m >= 1 and k >= 1");
  if (std::isnan(threshold.value)) throw Error("threshold must not be NaN");
}

nlohmann::ordered_json threshold_to_json(const Threshold& threshold) {
  nlohmann::ordered_json out;
  if (std::isinf(threshold.value)) {
    out["value"] = format_real(threshold.value);
  } else {
    out["value"] = threshold.value;
  }
  out["provenance"] = threshold.provenance;
  return out;
}

Threshold threshold_from_json(const nlohmann::json& doc) {
  Threshold t;
  const auto& value = doc.at("value");
  if (value.is_string()) {
    const auto text = value.get<std::string>();
    if (text == "inf") {
      t.value = std::numeric_limits<double>::infinity();
    } else if (text == "-inf") {
      t.value = -std::numeric_limits<double>::infinity();
    } else {
      throw Error("threshold value '" + text + "' is not a number");
    }
  } else {
    t.value = value.get<double>();
  }
  t.provenance = doc.value("provenance", std::string());
  return t;
}

nlohmann::ordered_json LoopConfig::to_json() const {
  nlohmann::ordered_json out;
  out["generations"] = generations;
  out["threshold"] = threshold_to_json(threshold);
  out["batches"] = plan.batches;
  out["batch_size"] = plan.batch_size;
  out["max_epochs"] = max_epochs;
  out["patience"] = patience ? nlohmann::ordered_json(*patience) : nlohmann::ordered_json(nullptr);
  out["min_improvement"] = min_improvement;
  out["seed"] = seed;
  return out;
}

LoopConfig LoopConfig::from_json(const nlohmann::json& doc) {
  try {
    LoopConfig c;
    c.generations = doc.at("generations").get<std::size_t>();
    c.threshold = threshold_from_json(doc.at("threshold"));
    c.plan = {doc.at("batches").get<std::size_t>(), doc.at("batch_size").get<std::size_t>()};
    c.max_epochs = doc.at("max_epochs").get<std::size_t>();
    const auto& patience = doc.at("patience");
    c.patience = patience.is_null() ? std::nullopt : std::optional<std::size_t>(patience.get<std::size_t>());
    c.min_improvement = doc.at("min_improvement").get<double>();
    c.seed = doc.at("seed").get<std::uint64_t>();
    c.check();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed loop config: ") + e.what());
  }
}

std::string_view to_string(Origin origin) { return origin == Origin::kTrue ? "true" : "generated"; }

std::string_view to_string(Rejection reason) {
  switch (reason) {
    case Rejection::kGrade:
      return "grade";
    case Rejection::kDuplicate:
      return "duplicate";
    case Rejection::kNone:
      break;
  }
  return "";
}

TrainState::TrainState(const Split& split) : validation_(&split.validation) {
  for (const auto& c : split.train) {
    chorales_.push_back(c);
    entries_.push_back({c, Origin::kTrue, std::nullopt});
    true_lengths_.push_back(c.length());
    seen_.insert(canonical_key(c));
  }
  for (const auto& c : split.validation) seen_.insert(canonical_key(c));
  if (chorales_.empty()) throw Error("training split is empty");
}

void TrainState::add_generated(Chorale chorale, std::size_t epoch) {
  chorales_.push_back(chorale);
  entries_.push_back({std::move(chorale), Origin::kGenerated, epoch});
}

Chorale generate_candidate(const GenerativeModel& model, std::span<const std::size_t> lengths, std::uint64_t seed,
                           std::size_t epoch, std::size_t index) {
  if (lengths.empty()) throw Error("no generation lengths available");
  const std::uint64_t stream = derive_seed(seed, {stream_tag("generate"), epoch, index});
  Rng rng(stream);
  const std::size_t length = lengths[rng.below(lengths.size())];
  char id[48];
  std::snprintf(id, sizeof id, "gen-e%03zu-c%03zu", epoch, index);
  return model.sample(length, derive_seed(stream, {stream_tag("tokens")}), id);
}

GenerationOutcome generation_step(TrainState& state, const GenerativeModel& model, const ReferenceModel& reference,
                                  const LoopConfig& config, std::size_t epoch) {
  GenerationOutcome out;
  out.candidates.reserve(config.generations);
  for (std::size_t j = 0; j < config.generations; ++j) {
    Chorale candidate = generate_candidate(model, state.true_lengths(), config.seed, epoch, j);
    const double g = grade(candidate, reference).total;
    CandidateRecord record{candidate.id, g, Rejection::kNone};
    if (!state.mark_seen(canonical_key(candidate))) {
      record.reason = Rejection::kDuplicate;
    } else if (!config.threshold.admits(g)) {
      record.reason = Rejection::kGrade;
    }
    if (record.accepted()) {
      state.add_generated(std::move(candidate), epoch);
      ++out.additions;
    }
    out.candidates.push_back(std::move(record));
  }
  return out;
}

TrainingOutcome training_step(const TrainState& state, GenerativeModel& model, const LoopConfig& config,
                              std::size_t epoch) {
  TrainingOutcome out;
  out.multiplicity = model.train_epoch(state.chorales(), config.plan, derive_seed(config.seed, {stream_tag("train"), epoch}));
  out.train_loss = model.mean_nll(state.chorales(), out.multiplicity);
  return out;
}

RunResult run(const LoopConfig& config, const Split& split, const ReferenceModel& reference, GenerativeModel& model) {
  config.check();
  RunResult result;
  result.config = config;
  result.reference = reference.to_json();
  result.reference_fingerprint_before = reference.fingerprint();

  TrainState state(split);
  std::size_t stale_epochs = 0;
  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    EpochLog log;
    log.epoch = epoch;
    auto generated = generation_step(state, model, reference, config, epoch);
    log.candidates = std::move(generated.candidates);
    log.additions = generated.additions;
    log.dataset_size = state.size();

    auto trained = training_step(state, model, config, epoch);
    log.train_loss = trained.train_loss;
    for (std::size_t i = 0; i < trained.multiplicity.size(); ++i) {
      if (trained.multiplicity[i] == 0) continue;
      log.multiset.emplace_back(state.chorales()[i].id, trained.multiplicity[i]);
      log.multiset_size += trained.multiplicity[i];
    }
    log.validation_loss = model.mean_nll(state.validation().chorales());

    if (epoch == 0 || log.validation_loss < result.best_validation_loss - config.min_improvement) {
      result.best_epoch = epoch;
      result.best_validation_loss = log.validation_loss;
      result.best_model = model.snapshot();
      stale_epochs = 0;
    } else {
      ++stale_epochs;
    }
    result.epochs.push_back(std::move(log));
    if (config.patience && stale_epochs >= *config.patience) break;
  }
  result.dataset.assign(state.entries().begin(), state.entries().end());
  result.reference_fingerprint_after = reference.fingerprint();
  return result;
}

std::string epoch_logs_csv(const RunResult& result) {
  CsvWriter csv({"epoch", "candidate_id", "grade", "accepted", "reason"});
  for (const auto& log : result.epochs) {
    for (const auto& c : log.candidates) {
      csv.field(log.epoch).field(c.id).field(c.grade).field(c.accepted()).field(to_string(c.reason));
      csv.end_row();
    }
  }
  return csv.str();
}

std::string metrics_csv(const RunResult& result) {
  CsvWriter csv({"epoch", "additions", "dataset_size", "train_loss", "val_loss"});
  for (const auto& log : result.epochs) {
    csv.field(log.epoch).field(log.additions).field(log.dataset_size).field(log.train_loss).field(log.validation_loss);
    csv.end_row();
  }
  return csv.str();
}

std::string manifest_jsonl(const RunResult& result) {
  std::string out;
  for (const auto& entry : result.dataset) {
    nlohmann::ordered_json line;
    line["id"] = entry.chorale.id;
    line["origin"] = to_string(entry.origin);
    line["acceptance_epoch"] =
        entry.acceptance_epoch ? nlohmann::ordered_json(*entry.acceptance_epoch) : nlohmann::ordered_json(nullptr);
    out += line.dump();
    out += '\n';
  }
  return out;
}

void write_run(const RunResult& result, const std::filesystem::path& dir, const nlohmann::ordered_json& config) {
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "config.json", config.dump(2) + "\n");
  write_file_atomic(dir / "epoch_logs.csv", epoch_logs_csv(result));
  write_file_atomic(dir / "metrics.csv", metrics_csv(result));
  write_file_atomic(dir / "dataset_manifest.jsonl", manifest_jsonl(result));
  std::string generated;
  for (const auto& entry : result.dataset) {
    if (entry.origin != Origin::kGenerated) continue;
    generated += serialize(entry.chorale);
    generated += '\n';
  }
  write_file_atomic(dir / "generated.jsonl", generated);
  write_file_atomic(dir / "best_model.json", result.best_model.dump() + "\n");
  write_file_atomic(dir / "reference.json", result.reference.dump(2) + "\n");
}

}  // namespace auggen
