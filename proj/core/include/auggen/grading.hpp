// SPDX-License-Identifier: Apache-2.0
//
// The fixed external critic. A reference model is fit once on the true
// training corpus; a chorale's grade is the weighted sum of per-feature
// Wasserstein-1 distances to that reference. Lower grades are better.
#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "auggen/corpus.hpp"
#include "auggen/features.hpp"

namespace auggen {

inline constexpr double kDefaultEmptyPenalty = 100.0;

/// Exact 1-D Wasserstein-1 distance: the integral of |F_p - F_q| over the
/// merged support. Throws auggen::Error if either distribution is empty.
double wasserstein1(const FeatureDistribution& p, const FeatureDistribution& q);

class ReferenceModel {
 public:
  struct Entry {
    std::string feature;
    FeatureKind kind = FeatureKind::kDistributional;
    double weight = 1.0;
    FeatureDistribution reference;
  };

  ReferenceModel(FeatureSet features, std::vector<Entry> entries, double empty_penalty,
                 std::string corpus_digest, std::size_t corpus_size);

  const FeatureSet& features() const noexcept { return features_; }
  std::span<const Entry> entries() const noexcept { return entries_; }
  double empty_penalty() const noexcept { return empty_penalty_; }
  const std::string& corpus_digest() const noexcept { return corpus_digest_; }
  std::size_t corpus_size() const noexcept { return corpus_size_; }
  double total_weight() const;

  /// Canonical JSON including provenance.
  nlohmann::json to_json() const;
  /// Resolves feature names against the built-in registry unless given another.
  static ReferenceModel from_json(const nlohmann::json& doc,
                                  const FeatureRegistry& registry = FeatureRegistry::builtin());

  /// Hex digest of the canonical JSON text; identical iff the model is.
  std::string fingerprint() const;

 private:
  FeatureSet features_;
  std::vector<Entry> entries_;
  double empty_penalty_;
  std::string corpus_digest_;
  std::size_t corpus_size_;
};

/// Pools distributional events over every chorale and collects one value per
/// chorale for point features. `weights` is empty for unit weights, or one
/// non-negative weight per feature with at least one positive.
///
/// Throws if the corpus is empty or yields no events for an enabled feature.
ReferenceModel fit_reference(const Corpus& corpus, const FeatureSet& features,
                             std::vector<double> weights = {},
                             double empty_penalty = kDefaultEmptyPenalty);

struct GradeReport {
  std::string chorale_id;
  std::vector<double> distances;  // one per reference entry
  double total = 0.0;
};

GradeReport grade(const Chorale& chorale, const ReferenceModel& reference);

/// Cutoff on grades; a chorale passes when grade <= value.
struct Threshold {
  double value = std::numeric_limits<double>::infinity();
  std::string provenance;

  static Threshold minus_infinity() {
    return {-std::numeric_limits<double>::infinity(), "baseline_none"};
  }
  static Threshold plus_infinity() {
    return {std::numeric_limits<double>::infinity(), "baseline_all"};
  }

  bool admits(double grade) const noexcept { return grade <= value; }
};

/// Nearest-rank quantile: the element at 1-based rank ceil(q * n) of the
/// ascending sort. The rank is computed as ceil(q * n - 1e-9) so that
/// products like 0.7 * 10 that land a rounding error above an integer keep
/// their exact rank. Throws on an empty list or q outside (0, 1].
double nearest_rank_quantile(std::span<const double> values, double q);

/// Threshold at nearest_rank_quantile(grades, q), tagged with `source`.
Threshold grade_quantile(std::span<const double> grades, double q, const std::string& source = "grades");

/// min, Q1, median, Q3, max by nearest rank.
struct Quintuple {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
  friend bool operator==(const Quintuple&, const Quintuple&) = default;
};
Quintuple quintuple(std::span<const double> values);

}  // namespace auggen
