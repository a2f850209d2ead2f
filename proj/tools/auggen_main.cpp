// SPDX-License-Identifier: Apache-2.0
//
// auggen: teacher-gen | grade | train | compare | report
#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "auggen/error.hpp"
#include "auggen/experiment.hpp"
#include "auggen/io.hpp"

namespace {

struct ConfigFlags {
  std::string config_path;
  std::string profile;
  std::string corpus;
  std::optional<std::uint64_t> seed;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& flags) {
  cmd->add_option("--config", flags.config_path, "Experiment config JSON")->check(CLI::ExistingFile);
  cmd->add_option("--profile", flags.profile, "Base profile")->check(CLI::IsMember({"desk", "paper"}));
  cmd->add_option("--corpus", flags.corpus, "JSON-lines corpus (default: generate a teacher corpus)");
  cmd->add_option("--seed", flags.seed, "Run seed");
}

auggen::ExperimentConfig resolve_config(const ConfigFlags& flags) {
  auggen::ExperimentConfig base = auggen::ExperimentConfig::profile(flags.profile.empty() ? "desk" : flags.profile);
  auggen::ExperimentConfig config = base;
  if (!flags.config_path.empty()) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(auggen::read_file(flags.config_path));
    } catch (const nlohmann::json::parse_error& e) {
      throw auggen::Error(flags.config_path + ": " + e.what());
    }
    if (!flags.profile.empty() && doc.is_object()) doc.erase("profile");
    config = auggen::ExperimentConfig::from_json(doc, base);
  }
  if (!flags.corpus.empty()) {
    if (!std::filesystem::exists(flags.corpus)) throw auggen::Error("corpus not found: " + flags.corpus);
    config.corpus_path = flags.corpus;
  }
  if (flags.seed) config.seed = *flags.seed;
  config.check();
  return config;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
  } else {
    auggen::write_file_atomic(out_path, text);
  }
}

void print_summary(std::ostream& os, const std::vector<auggen::RegimeRun>& runs) {
  os << "regime           threshold     best_epoch  best_val_loss  epochs  generated  eval_median  eval_iqr\n";
  for (const auto& r : runs) {
    const auto& s = r.summary;
    const auto q = auggen::quintuple(s.final_grades);
    char line[256];
    std::snprintf(line, sizeof line, "%-16s %-13s %-11zu %-14.6f %-7zu %-10.4f %-12.4f %.4f\n", s.regime.c_str(),
                  auggen::format_real(s.threshold.value).substr(0, 12).c_str(), s.best_epoch,
                  s.best_validation_loss, s.epochs_run, s.generated_fraction, q.median, q.q3 - q.q1);
    os << line;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continual dataset augmentation for four-voice chorale generation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "auggen 0.1.0");

  // teacher-gen
  auto* teacher_cmd = app.add_subcommand("teacher-gen", "Write a synthetic teacher corpus");
  ConfigFlags teacher_flags;
  std::string teacher_out;
  std::optional<std::size_t> teacher_n, teacher_min, teacher_max;
  add_config_flags(teacher_cmd, teacher_flags);
  teacher_cmd->add_option("--out", teacher_out, "Output JSON-lines file")->required();
  teacher_cmd->add_option("-n,--count", teacher_n, "Number of chorales");
  teacher_cmd->add_option("--min-length", teacher_min, "Minimum length in sixteenths (>= 4)");
  teacher_cmd->add_option("--max-length", teacher_max, "Maximum length in sixteenths");

  // grade
  auto* grade_cmd = app.add_subcommand("grade", "Grade a corpus against a reference model");
  std::string grade_corpus, grade_reference, grade_reference_corpus, grade_save_reference, grade_out;
  std::vector<std::string> grade_features;
  bool dump_features = false;
  grade_cmd->add_option("--corpus", grade_corpus, "Corpus to grade")->required();
  auto* ref_opt = grade_cmd->add_option("--reference", grade_reference, "Reference model JSON");
  auto* ref_corpus_opt =
      grade_cmd->add_option("--reference-corpus", grade_reference_corpus, "Fit the reference on this corpus");
  ref_opt->excludes(ref_corpus_opt);
  grade_cmd->add_option("--features", grade_features, "Features when fitting (default: all)")->delimiter(',');
  grade_cmd->add_option("--save-reference", grade_save_reference, "Write the fitted reference model here");
  grade_cmd->add_flag("--dump-features", dump_features, "Emit per-chorale feature distributions instead of grades");
  grade_cmd->add_option("--out", grade_out, "Output CSV (default: stdout)");

  // train
  auto* train_cmd = app.add_subcommand("train", "Run one threshold regime");
  ConfigFlags train_flags;
  std::string train_regime, train_out;
  add_config_flags(train_cmd, train_flags);
  train_cmd->add_option("--regime", train_regime, "auggen[:q], baseline_none, or baseline_all")->required();
  train_cmd->add_option("--out-dir", train_out, "Run directory")->envname("AUGGEN_OUT_DIR")->required();

  // compare
  auto* compare_cmd = app.add_subcommand("compare", "Run every configured regime and emit comparison CSVs");
  ConfigFlags compare_flags;
  std::string compare_out;
  std::vector<std::string> compare_regimes;
  add_config_flags(compare_cmd, compare_flags);
  compare_cmd->add_option("--regime", compare_regimes, "Restrict to these regimes (repeatable)");
  compare_cmd->add_option("--out-dir", compare_out, "Output directory")->envname("AUGGEN_OUT_DIR")->required();

  // report
  auto* report_cmd = app.add_subcommand("report", "Check and summarize a compare output directory");
  std::string report_dir;
  report_cmd->add_option("--out-dir", report_dir, "compare output directory")
      ->envname("AUGGEN_OUT_DIR")
      ->required()
      ->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*teacher_cmd) {
      const auto config = resolve_config(teacher_flags);
      const auto corpus = auggen::teacher_corpus(config.effective_teacher_seed(), teacher_n.value_or(config.teacher_size),
                                                 teacher_min.value_or(config.teacher_min_length),
                                                 teacher_max.value_or(config.teacher_max_length), config.teacher);
      auggen::save_corpus(corpus, teacher_out);
      std::cerr << "wrote " << corpus.size() << " chorales to " << teacher_out << "\n";
    } else if (*grade_cmd) {
      const auto corpus = auggen::load_corpus(grade_corpus);
      std::optional<auggen::ReferenceModel> reference;
      if (!grade_reference.empty()) {
        nlohmann::json doc;
        try {
          doc = nlohmann::json::parse(auggen::read_file(grade_reference));
        } catch (const nlohmann::json::parse_error& e) {
          throw auggen::Error(grade_reference + ": " + e.what());
        }
        reference.emplace(auggen::ReferenceModel::from_json(doc));
      } else if (!grade_reference_corpus.empty()) {
        const auto features =
            grade_features.empty() ? auggen::FeatureSet::all() : auggen::FeatureSet(grade_features);
        reference.emplace(auggen::fit_reference(auggen::load_corpus(grade_reference_corpus), features));
      } else if (!dump_features) {
        throw auggen::Error("grade needs --reference or --reference-corpus");
      }
      if (reference && !grade_save_reference.empty()) {
        auggen::write_file_atomic(grade_save_reference, reference->to_json().dump(2) + "\n");
      }
      if (dump_features) {
        const auto features = reference ? reference->features()
                              : grade_features.empty() ? auggen::FeatureSet::all()
                                                       : auggen::FeatureSet(grade_features);
        emit(auggen::feature_dump_csv(corpus, features), grade_out);
      } else {
        emit(auggen::grade_report_csv(corpus, *reference), grade_out);
      }
    } else if (*train_cmd) {
      const auto config = resolve_config(train_flags);
      const auto regime = auggen::Regime::parse(train_regime);
      auto run = auggen::train(config, regime, train_out);
      print_summary(std::cout, {run});
    } else if (*compare_cmd) {
      auto config = resolve_config(compare_flags);
      if (!compare_regimes.empty()) {
        config.regimes.clear();
        for (const auto& r : compare_regimes) config.regimes.push_back(auggen::Regime::parse(r));
        config.check();
      }
      const auto result = auggen::compare(config, compare_out);
      print_summary(std::cout, result.runs);
    } else if (*report_cmd) {
      const auto problems = auggen::verify_figure1(report_dir);
      const auto summary = auggen::parse_csv(auggen::read_file(std::filesystem::path(report_dir) / "summary.csv"));
      for (const auto& name : summary.header) std::cout << name << (name == summary.header.back() ? "\n" : "\t");
      for (const auto& row : summary.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) std::cout << row[i] << (i + 1 == row.size() ? "\n" : "\t");
      }
      for (const auto& p : problems) std::cerr << "figure1 mismatch: " << p << "\n";
      if (!problems.empty()) return 1;
      std::cout << "figure1.csv matches epoch_logs.csv\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "auggen: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
