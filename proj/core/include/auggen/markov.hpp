// SPDX-License-Identifier: Apache-2.0
//
// Order-k Markov model over the chorale token grid with additive smoothing.
//
// The context of voice v at timestep t is the k previous tokens of voice v
// (padded with a START symbol before the first timestep) together with the
// timestep-t tokens of voices 0..v-1. Voices are generated soprano first.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "auggen/model.hpp"

namespace auggen {

/// Emission alphabet of each voice, sorted by token code. START is a context
/// symbol only and never part of the alphabet.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::array<std::vector<Token>, kVoiceCount> voices);

  /// Every token that occurs in each voice of `chorales`.
  static Vocabulary from_chorales(std::span<const Chorale> chorales);

  std::span<const Token> voice(std::size_t v) const noexcept { return voices_[v]; }
  std::size_t size(std::size_t v) const noexcept { return voices_[v].size(); }
  std::optional<std::size_t> index_of(std::size_t v, Token token) const;

  friend bool operator==(const Vocabulary&, const Vocabulary&) = default;

 private:
  std::array<std::vector<Token>, kVoiceCount> voices_;
};

class MarkovModel final : public GenerativeModel {
 public:
  /// Context padding symbol code.
  static constexpr std::int16_t kStartCode = -3;
  static constexpr int kFormatVersion = 1;

  /// Untrained model: every context is unseen, so every distribution is uniform.
  /// Throws for order 0, alpha <= 0, or a voice with an empty alphabet.
  MarkovModel(std::size_t order, double alpha, Vocabulary vocabulary);

  /// Vocabulary from `chorales`, then fit_counts on them.
  static MarkovModel fit(std::size_t order, double alpha, std::span<const Chorale> chorales);

  /// Rebuilds the count table from scratch: exact occurrence counts of
  /// (context, token) over `chorales`, each weighted by `multiplicity[i]`
  /// (1 when empty). Throws on an empty multiset or out-of-vocabulary tokens.
  void fit_counts(std::span<const Chorale> chorales, std::span<const std::size_t> multiplicity = {});

  /// Context key of voice v at timestep t. Only voices[v][t-order..t-1] and
  /// voices[0..v-1][t] are read.
  std::string context(const std::array<Voice, kVoiceCount>& voices, std::size_t v, std::size_t t) const;

  /// P(token | context) = (count + alpha) / (total + alpha * |vocab|), in
  /// vocabulary order.
  std::vector<double> next_token_dist(std::size_t voice, std::string_view context) const;

  std::uint64_t count(std::size_t voice, std::string_view context, Token token) const;
  std::uint64_t context_total(std::size_t voice, std::string_view context) const;
  std::size_t context_count(std::size_t voice) const { return tables_[voice].size(); }

  std::size_t order() const noexcept { return order_; }
  double alpha() const noexcept { return alpha_; }
  const Vocabulary& vocabulary() const noexcept { return vocabulary_; }

  std::vector<std::size_t> train_epoch(std::span<const Chorale> dataset, const BatchPlan& plan,
                                       std::uint64_t seed) override;

  /// HOLD is masked at timestep 0 and after REST before drawing. If masking
  /// removes all mass the voice emits REST and a warning is logged.
  Chorale sample(std::size_t length, std::uint64_t seed, std::string id) const override;

  /// Throws on an empty multiset or a token outside the vocabulary.
  double mean_nll(std::span<const Chorale> chorales,
                  std::span<const std::size_t> multiplicity = {}) const override;

  nlohmann::json snapshot() const override;
  void restore(const nlohmann::json& snapshot) override;
  std::unique_ptr<GenerativeModel> clone() const override;

  static MarkovModel from_snapshot(const nlohmann::json& snapshot);

  friend bool operator==(const MarkovModel& a, const MarkovModel& b) {
    return a.order_ == b.order_ && a.alpha_ == b.alpha_ && a.vocabulary_ == b.vocabulary_ &&
           a.tables_ == b.tables_;
  }

 private:
  struct Row {
    std::vector<std::uint64_t> counts;
    std::uint64_t total = 0;
    friend bool operator==(const Row&, const Row&) = default;
  };
  using Table = std::unordered_map<std::string, Row>;

  double probability(std::size_t voice, std::string_view context, std::size_t token_index) const;

  std::size_t order_;
  double alpha_;
  Vocabulary vocabulary_;
  std::array<Table, kVoiceCount> tables_;
};

}  // namespace auggen
