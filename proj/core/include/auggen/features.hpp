// SPDX-License-Identifier: Apache-2.0
//
// Musical feature extractors. Each maps a realized chorale to a list of
// event values; the grading critic compares the empirical distribution of
// those values against a reference corpus.
#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "auggen/chorale.hpp"

namespace auggen {

/// Normalized weighted empirical distribution on the real line.
///
/// Support is sorted ascending with no repeated values; weights are strictly
/// positive and sum to 1. A distribution with empty support is the sentinel
/// for "no events".
class FeatureDistribution {
 public:
  FeatureDistribution() = default;

  /// Merges equal support values and normalizes. Throws on negative or
  /// non-finite input, or mismatched lengths. Zero-weight atoms are dropped.
  FeatureDistribution(std::string feature, std::vector<double> support, std::vector<double> weights);

  /// Unit weight per sample.
  static FeatureDistribution from_samples(std::string feature, std::span<const double> samples);

  /// Restores a distribution already in canonical form (sorted distinct
  /// support, positive weights summing to 1 within 1e-9) without touching
  /// its bits. Throws otherwise.
  static FeatureDistribution from_canonical(std::string feature, std::vector<double> support,
                                            std::vector<double> weights);

  static FeatureDistribution empty(std::string feature) {
    FeatureDistribution d;
    d.feature_ = std::move(feature);
    return d;
  }

  const std::string& feature() const noexcept { return feature_; }
  std::span<const double> support() const noexcept { return support_; }
  std::span<const double> weights() const noexcept { return weights_; }
  bool is_empty() const noexcept { return support_.empty(); }
  std::size_t size() const noexcept { return support_.size(); }

  friend bool operator==(const FeatureDistribution&, const FeatureDistribution&) = default;

 private:
  std::string feature_;
  std::vector<double> support_;
  std::vector<double> weights_;
};

enum class FeatureKind {
  /// Many events per chorale; the reference pools events over the corpus.
  kDistributional,
  /// At most one scalar per chorale; the reference is the distribution of
  /// per-chorale values.
  kPoint,
};

struct FeatureExtractor {
  std::string name;
  FeatureKind kind = FeatureKind::kDistributional;
  /// Raw event values; empty when the chorale has no qualifying events.
  std::function<std::vector<double>(const RealizedGrid&)> events;
};

// Built-in extractors.
std::vector<double> pitch_events(const RealizedGrid& grid);
std::vector<double> rhythm_events(const RealizedGrid& grid);
std::vector<double> harmonic_interval_events(const RealizedGrid& grid);
std::vector<double> melodic_interval_events(const RealizedGrid& grid);
std::vector<double> parallel_error_events(const RealizedGrid& grid);
std::vector<double> voice_crossing_events(const RealizedGrid& grid);

/// Number of parallel perfect fifths/octaves (and unisons) over all voice
/// pairs and consecutive timesteps.
std::size_t count_parallel_errors(const RealizedGrid& grid);

class FeatureRegistry {
 public:
  /// pitch, rhythm, harmonic_interval, melodic_interval, parallel_error,
  /// voice_crossing.
  static const FeatureRegistry& builtin();

  /// Throws if the name is already registered.
  void add(FeatureExtractor extractor);
  const FeatureExtractor& get(std::string_view name) const;
  bool contains(std::string_view name) const;
  std::vector<std::string> names() const;

 private:
  std::vector<FeatureExtractor> extractors_;
};

/// Ordered, non-empty selection of extractors used for grading.
class FeatureSet {
 public:
  /// Throws for empty lists, unknown names, or repeated names.
  explicit FeatureSet(const std::vector<std::string>& names,
                      const FeatureRegistry& registry = FeatureRegistry::builtin());

  static FeatureSet all();

  std::size_t size() const noexcept { return extractors_.size(); }
  const FeatureExtractor& operator[](std::size_t i) const { return extractors_[i]; }
  std::vector<std::string> names() const;

  /// One distribution per extractor, in set order.
  std::vector<FeatureDistribution> extract(const Chorale& chorale) const;

 private:
  std::vector<FeatureExtractor> extractors_;
};

FeatureDistribution extract_feature(const FeatureExtractor& extractor, const RealizedGrid& grid);

}  // namespace auggen
