// SPDX-License-Identifier: Apache-2.0
#include "auggen/experiment.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cstdlib>
#include <map>
#include <set>

#include "auggen/error.hpp"
#include "auggen/io.hpp"
#include "auggen/rng.hpp"

namespace auggen {

std::string Regime::name() const {
  switch (kind) {
    case RegimeKind::kBaselineNone:
      return "baseline_none";
    case RegimeKind::kBaselineAll:
      return "baseline_all";
    case RegimeKind::kAugGen:
      break;
  }
  return quantile == 0.75 ? "auggen" : "auggen_q" + format_real(quantile);
}

Regime Regime::parse(std::string_view text) {
  if (text == "baseline_none") return {RegimeKind::kBaselineNone, 0.75};
  if (text == "baseline_all") return {RegimeKind::kBaselineAll, 0.75};
  if (text == "auggen") return {RegimeKind::kAugGen, 0.75};
  for (std::string_view prefix : {"auggen:", "auggen_q"}) {
    if (text.substr(0, prefix.size()) != prefix) continue;
    const std::string number(text.substr(prefix.size()));
    char* end = nullptr;
    const double q = std::strtod(number.c_str(), &end);
    if (number.empty() || end != number.c_str() + number.size() || !(q > 0.0 && q <= 1.0)) {
      throw Error("regime '" + std::string(text) + "': quantile must lie in (0, 1]");
    }
    return {RegimeKind::kAugGen, q};
  }
  throw Error("unknown regime '" + std::string(text) + "' (expected auggen[:q], baseline_none, baseline_all)");
}

Threshold derive_threshold(const Regime& regime, std::span<const double> train_grades) {
  switch (regime.kind) {
    case RegimeKind::kBaselineNone:
      return Threshold::minus_infinity();
    case RegimeKind::kBaselineAll:
      return Threshold::plus_infinity();
    case RegimeKind::kAugGen:
      break;
  }
  Threshold t = grade_quantile(train_grades, regime.quantile, "true-train grades");
  t.provenance = regime.name() + ": " + t.provenance;
  return t;
}

ExperimentConfig ExperimentConfig::desk() { return ExperimentConfig{}; }

ExperimentConfig ExperimentConfig::paper() {
  ExperimentConfig c;
  c.teacher_size = 351;
  c.generations = 50;
  c.batches = 2048;
  c.batch_size = 8;
  c.max_epochs = 40;
  c.patience = std::nullopt;
  c.n_eval = 351;
  return c;
}

ExperimentConfig ExperimentConfig::profile(std::string_view name) {
  if (name == "desk") return desk();
  if (name == "paper") return paper();
  throw Error("unknown profile '" + std::string(name) + "' (expected desk or paper)");
}

std::uint64_t ExperimentConfig::effective_teacher_seed() const {
  return teacher_seed ? *teacher_seed : derive_seed(seed, {stream_tag("teacher-corpus")});
}

std::uint64_t ExperimentConfig::effective_split_seed() const { return split_seed ? *split_seed : seed; }

void ExperimentConfig::check() const {
  if (regimes.empty()) throw Error("at least one regime is required");
  std::set<std::string> names;
  for (const auto& r : regimes) {
    if (r.kind == RegimeKind::kAugGen && !(r.quantile > 0.0 && r.quantile <= 1.0)) {
      throw Error("auggen quantile must lie in (0, 1]");
    }
    if (!names.insert(r.name()).second) throw Error("regime '" + r.name() + "' listed twice");
  }
  if (!(split_fraction > 0.0 && split_fraction < 1.0)) throw Error("split fraction must lie in (0, 1)");
  if (!weights.empty() && weights.size() != features.size()) throw Error("need one weight per feature");
  if (n_eval == 0) throw Error("n_eval must be >= 1");
  if (markov_order == 0) throw Error("Markov order must be >= 1");
  if (!(alpha > 0.0)) throw Error("alpha must be positive");
  loop_config(Threshold::plus_infinity()).check();
}

nlohmann::ordered_json ExperimentConfig::to_json() const {
  nlohmann::ordered_json out;
  out["corpus"] = corpus_path ? nlohmann::ordered_json(*corpus_path) : nlohmann::ordered_json(nullptr);
  nlohmann::ordered_json teacher_doc;
  teacher_doc["size"] = teacher_size;
  teacher_doc["min_length"] = teacher_min_length;
  teacher_doc["max_length"] = teacher_max_length;
  teacher_doc["seed"] = effective_teacher_seed();
  teacher_doc["order"] = teacher.order;
  teacher_doc["alpha"] = teacher.alpha;
  teacher_doc["tonic"] = teacher.tonic;
  teacher_doc["prototypes"] = teacher.prototypes;
  teacher_doc["prototype_length"] = teacher.prototype_length;
  teacher_doc["structure_seed"] = teacher.structure_seed;
  out["teacher"] = std::move(teacher_doc);
  out["split"] = {{"fraction", split_fraction}, {"seed", effective_split_seed()}};
  out["features"] = features;
  out["weights"] = weights;
  out["empty_penalty"] = empty_penalty;
  nlohmann::ordered_json regime_names = nlohmann::ordered_json::array();
  for (const auto& r : regimes) regime_names.push_back(r.name());
  out["regimes"] = std::move(regime_names);
  nlohmann::ordered_json loop;
  loop["generations"] = generations;
  loop["batches"] = batches;
  loop["batch_size"] = batch_size;
  loop["max_epochs"] = max_epochs;
  loop["patience"] = patience ? nlohmann::ordered_json(*patience) : nlohmann::ordered_json(nullptr);
  loop["min_improvement"] = min_improvement;
  out["loop"] = std::move(loop);
  out["model"] = {{"order", markov_order}, {"alpha", alpha}};
  out["n_eval"] = n_eval;
  out["seed"] = seed;
  return out;
}

namespace {

void reject_unknown(const nlohmann::json& doc, std::initializer_list<std::string_view> known,
                    const std::string& where) {
  for (const auto& [key, _] : doc.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw Error("unknown config key '" + where + key + "'");
    }
  }
}

template <typename T>
void assign_if(const nlohmann::json& doc, const char* key, T& target) {
  if (doc.contains(key)) target = doc.at(key).get<T>();
}

template <typename T>
void assign_optional(const nlohmann::json& doc, const char* key, std::optional<T>& target) {
  if (!doc.contains(key)) return;
  const auto& v = doc.at(key);
  target = v.is_null() ? std::nullopt : std::optional<T>(v.get<T>());
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& doc, ExperimentConfig base) {
  if (!doc.is_object()) throw Error("experiment config must be a JSON object");
  try {
    if (doc.contains("profile")) base = profile(doc.at("profile").get<std::string>());
    ExperimentConfig c = std::move(base);
    reject_unknown(doc,
                   {"profile", "corpus", "teacher", "split", "features", "weights", "empty_penalty", "regimes",
                    "loop", "model", "n_eval", "seed"},
                   "");
    assign_optional(doc, "corpus", c.corpus_path);
    assign_if(doc, "seed", c.seed);
    if (doc.contains("teacher")) {
      const auto& t = doc.at("teacher");
      reject_unknown(t,
                     {"size", "min_length", "max_length", "seed", "order", "alpha", "tonic", "prototypes",
                      "prototype_length", "structure_seed"},
                     "teacher.");
      assign_if(t, "size", c.teacher_size);
      assign_if(t, "min_length", c.teacher_min_length);
      assign_if(t, "max_length", c.teacher_max_length);
      assign_optional(t, "seed", c.teacher_seed);
      assign_if(t, "order", c.teacher.order);
      assign_if(t, "alpha", c.teacher.alpha);
      assign_if(t, "tonic", c.teacher.tonic);
      assign_if(t, "prototypes", c.teacher.prototypes);
      assign_if(t, "prototype_length", c.teacher.prototype_length);
      assign_if(t, "structure_seed", c.teacher.structure_seed);
    }
    if (doc.contains("split")) {
      const auto& s = doc.at("split");
      reject_unknown(s, {"fraction", "seed"}, "split.");
      assign_if(s, "fraction", c.split_fraction);
      assign_optional(s, "seed", c.split_seed);
    }
    assign_if(doc, "features", c.features);
    assign_if(doc, "weights", c.weights);
    assign_if(doc, "empty_penalty", c.empty_penalty);
    if (doc.contains("regimes")) {
      c.regimes.clear();
      for (const auto& r : doc.at("regimes")) c.regimes.push_back(Regime::parse(r.get<std::string>()));
    }
    if (doc.contains("loop")) {
      const auto& l = doc.at("loop");
      reject_unknown(l, {"generations", "batches", "batch_size", "max_epochs", "patience", "min_improvement"},
                     "loop.");
      assign_if(l, "generations", c.generations);
      assign_if(l, "batches", c.batches);
      assign_if(l, "batch_size", c.batch_size);
      assign_if(l, "max_epochs", c.max_epochs);
      assign_optional(l, "patience", c.patience);
      assign_if(l, "min_improvement", c.min_improvement);
    }
    if (doc.contains("model")) {
      const auto& m = doc.at("model");
      reject_unknown(m, {"order", "alpha"}, "model.");
      assign_if(m, "order", c.markov_order);
      assign_if(m, "alpha", c.alpha);
    }
    assign_if(doc, "n_eval", c.n_eval);
    c.check();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed experiment config: ") + e.what());
  }
}

LoopConfig ExperimentConfig::loop_config(const Threshold& threshold) const {
  LoopConfig loop;
  loop.generations = generations;
  loop.threshold = threshold;
  loop.plan = {batches, batch_size};
  loop.max_epochs = max_epochs;
  loop.patience = patience;
  loop.min_improvement = min_improvement;
  loop.seed = seed;
  return loop;
}

ExperimentData prepare(const ExperimentConfig& config) {
  config.check();
  Corpus corpus = config.corpus_path
                      ? load_corpus(*config.corpus_path)
                      : teacher_corpus(config.effective_teacher_seed(), config.teacher_size,
                                       config.teacher_min_length, config.teacher_max_length, config.teacher);
  Split s = split(corpus, config.split_fraction, config.effective_split_seed());
  ReferenceModel reference =
      fit_reference(s.train, FeatureSet(config.features), config.weights, config.empty_penalty);
  std::vector<double> train_grades, corpus_grades;
  for (const auto& c : s.train) train_grades.push_back(grade(c, reference).total);
  for (const auto& c : corpus) corpus_grades.push_back(grade(c, reference).total);
  return {std::move(corpus), std::move(s), std::move(reference), std::move(train_grades), std::move(corpus_grades)};
}

MarkovModel initial_model(const ExperimentConfig& config, const Split& split) {
  std::vector<Chorale> all(split.train.begin(), split.train.end());
  all.insert(all.end(), split.validation.begin(), split.validation.end());
  return MarkovModel(config.markov_order, config.alpha, Vocabulary::from_chorales(all));
}

nlohmann::ordered_json regime_config_json(const ExperimentConfig& config, const Regime&, const LoopConfig& loop) {
  nlohmann::ordered_json out;
  out["experiment"] = config.to_json();
  out["loop"] = loop.to_json();
  return out;
}

std::vector<std::pair<std::size_t, Quintuple>> epoch_quintuples(const RunResult& result) {
  std::vector<std::pair<std::size_t, Quintuple>> out;
  for (const auto& log : result.epochs) {
    if (log.candidates.empty()) continue;
    std::vector<double> grades;
    for (const auto& c : log.candidates) grades.push_back(c.grade);
    out.emplace_back(log.epoch, quintuple(grades));
  }
  return out;
}

RegimeRun run_regime(const ExperimentConfig& config, const ExperimentData& data, const Regime& regime) {
  const Threshold threshold = derive_threshold(regime, data.train_grades);
  const LoopConfig loop = config.loop_config(threshold);
  MarkovModel model = initial_model(config, data.split);
  RunResult result = run(loop, data.split, data.reference, model);

  MarkovModel best = MarkovModel::from_snapshot(result.best_model);
  std::vector<std::size_t> lengths;
  for (const auto& c : data.split.train) lengths.push_back(c.length());
  RegimeSummary summary;
  summary.regime = regime.name();
  summary.threshold = threshold;
  summary.best_epoch = result.best_epoch;
  summary.best_validation_loss = result.best_validation_loss;
  summary.epochs_run = result.epochs.size();
  summary.epoch_grades = epoch_quintuples(result);
  for (std::size_t i = 0; i < config.n_eval; ++i) {
    const std::uint64_t stream = derive_seed(config.seed, {stream_tag("eval"), i});
    Rng rng(stream);
    const std::size_t length = lengths[rng.below(lengths.size())];
    const Chorale c = best.sample(length, derive_seed(stream, {stream_tag("tokens")}), fmt::format("eval-{:04}", i));
    summary.final_grades.push_back(grade(c, data.reference).total);
  }
  for (const auto& entry : result.dataset) {
    (entry.origin == Origin::kTrue ? summary.true_count : summary.generated_count) += 1;
  }
  summary.generated_fraction =
      static_cast<double>(summary.generated_count) / static_cast<double>(result.dataset.size());
  return {regime, regime_config_json(config, regime, loop), std::move(result), std::move(summary)};
}

std::string figure1_csv(std::span<const RegimeRun> runs) {
  CsvWriter csv({"regime", "epoch", "min", "q1", "median", "q3", "max"});
  for (const auto& r : runs) {
    for (const auto& [epoch, q] : r.summary.epoch_grades) {
      csv.field(r.summary.regime).field(epoch).field(q.min).field(q.q1).field(q.median).field(q.q3).field(q.max);
      csv.end_row();
    }
  }
  return csv.str();
}

std::string figure2_csv(std::span<const double> corpus_grades, std::span<const RegimeRun> runs) {
  CsvWriter csv({"source", "grade"});
  for (double g : corpus_grades) {
    csv.field("corpus").field(g);
    csv.end_row();
  }
  for (const auto& r : runs) {
    for (double g : r.summary.final_grades) {
      csv.field(r.summary.regime).field(g);
      csv.end_row();
    }
  }
  return csv.str();
}

std::string summary_csv(std::span<const RegimeRun> runs) {
  CsvWriter csv({"regime", "threshold", "best_epoch", "best_val_loss", "epochs_run", "true_count", "generated_count",
                 "generated_fraction", "eval_median", "eval_iqr"});
  for (const auto& r : runs) {
    const auto& s = r.summary;
    const Quintuple q = quintuple(s.final_grades);
    csv.field(s.regime)
        .field(s.threshold.value)
        .field(s.best_epoch)
        .field(s.best_validation_loss)
        .field(s.epochs_run)
        .field(s.true_count)
        .field(s.generated_count)
        .field(s.generated_fraction)
        .field(q.median)
        .field(q.q3 - q.q1);
    csv.end_row();
  }
  return csv.str();
}

std::string grades_csv(std::span<const double> grades, std::string_view source) {
  CsvWriter csv({"source", "grade"});
  for (double g : grades) {
    csv.field(source).field(g);
    csv.end_row();
  }
  return csv.str();
}

namespace {

void write_regime(const RegimeRun& r, const std::filesystem::path& dir) {
  write_run(r.result, dir, r.config);
  write_file_atomic(dir / "eval_grades.csv", grades_csv(r.summary.final_grades, r.summary.regime));
}

void write_shared(const ExperimentConfig& config, const ExperimentData& data, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_file_atomic(out_dir / "experiment.json", config.to_json().dump(2) + "\n");
  write_file_atomic(out_dir / "split.json", split_manifest(data.split).dump(2) + "\n");
  write_file_atomic(out_dir / "reference.json", data.reference.to_json().dump(2) + "\n");
  save_corpus(data.corpus, out_dir / "corpus.jsonl");
}

void write_figures(const ExperimentData& data, std::span<const RegimeRun> runs, const std::filesystem::path& out_dir) {
  write_file_atomic(out_dir / "figure1.csv", figure1_csv(runs));
  write_file_atomic(out_dir / "figure2.csv", figure2_csv(data.corpus_grades, runs));
  write_file_atomic(out_dir / "summary.csv", summary_csv(runs));
}

}  // namespace

CompareResult compare(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  CompareResult out{prepare(config), {}};
  write_shared(config, out.data, out_dir);
  for (const auto& regime : config.regimes) {
    try {
      out.runs.push_back(run_regime(config, out.data, regime));
      write_regime(out.runs.back(), out_dir / regime.name());
    } catch (const std::exception& e) {
      write_figures(out.data, out.runs, out_dir);
      throw Error("regime '" + regime.name() + "' failed: " + e.what());
    }
  }
  write_figures(out.data, out.runs, out_dir);
  return out;
}

RegimeRun train(const ExperimentConfig& config, const Regime& regime, const std::filesystem::path& out_dir) {
  const ExperimentData data = prepare(config);
  RegimeRun r = run_regime(config, data, regime);
  write_regime(r, out_dir);
  write_file_atomic(out_dir / "split.json", split_manifest(data.split).dump(2) + "\n");
  return r;
}

std::string grade_report_csv(const Corpus& corpus, const ReferenceModel& reference) {
  std::vector<std::string> header{"chorale_id"};
  for (const auto& e : reference.entries()) header.push_back("d_" + e.feature);
  header.push_back("total_grade");
  CsvWriter csv(std::move(header));
  for (const auto& c : corpus) {
    const GradeReport report = grade(c, reference);
    csv.field(c.id);
    for (double d : report.distances) csv.field(d);
    csv.field(report.total);
    csv.end_row();
  }
  return csv.str();
}

std::string feature_dump_csv(const Corpus& corpus, const FeatureSet& features) {
  CsvWriter csv({"chorale_id", "feature_name", "value", "weight"});
  for (const auto& c : corpus) {
    for (const auto& dist : features.extract(c)) {
      for (std::size_t i = 0; i < dist.size(); ++i) {
        csv.field(c.id).field(dist.feature()).field(dist.support()[i]).field(dist.weights()[i]);
        csv.end_row();
      }
    }
  }
  return csv.str();
}

std::vector<std::string> verify_figure1(const std::filesystem::path& out_dir) {
  const CsvTable figure = parse_csv(read_file(out_dir / "figure1.csv"));
  const std::size_t c_regime = figure.column("regime"), c_epoch = figure.column("epoch");
  const std::array<std::size_t, 5> c_stats = {figure.column("min"), figure.column("q1"), figure.column("median"),
                                              figure.column("q3"), figure.column("max")};
  std::map<std::string, std::vector<const std::vector<std::string>*>> by_regime;
  for (const auto& row : figure.rows) by_regime[row[c_regime]].push_back(&row);

  std::vector<std::string> problems;
  for (const auto& [regime, rows] : by_regime) {
    const CsvTable logs = parse_csv(read_file(out_dir / regime / "epoch_logs.csv"));
    const std::size_t l_epoch = logs.column("epoch"), l_grade = logs.column("grade");
    std::map<std::size_t, std::vector<double>> grades;
    for (const auto& row : logs.rows) {
      grades[std::stoul(row[l_epoch])].push_back(std::strtod(row[l_grade].c_str(), nullptr));
    }
    if (grades.size() != rows.size()) {
      problems.push_back(fmt::format("{}: figure1 has {} epochs, epoch_logs has {}", regime, rows.size(),
                                     grades.size()));
    }
    for (const auto* row : rows) {
      const std::size_t epoch = std::stoul((*row)[c_epoch]);
      const auto it = grades.find(epoch);
      if (it == grades.end()) {
        problems.push_back(fmt::format("{} epoch {}: no candidates in epoch_logs", regime, epoch));
        continue;
      }
      const Quintuple q = quintuple(it->second);
      const std::array<double, 5> expected = {q.min, q.q1, q.median, q.q3, q.max};
      for (std::size_t s = 0; s < 5; ++s) {
        if ((*row)[c_stats[s]] != format_real(expected[s])) {
          problems.push_back(fmt::format("{} epoch {} column {}: figure1 {} vs recomputed {}", regime, epoch,
                                         figure.header[c_stats[s]], (*row)[c_stats[s]], format_real(expected[s])));
        }
      }
    }
  }
  return problems;
}

}  // namespace auggen
