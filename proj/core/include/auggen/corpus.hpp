// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "auggen/chorale.hpp"

namespace auggen {

/// Ordered collection of valid chorales with unique ids.
class Corpus {
 public:
  Corpus() = default;

  /// Throws auggen::Error naming the chorale on an invalid chorale or a
  /// duplicate id.
  explicit Corpus(std::vector<Chorale> chorales);

  std::size_t size() const noexcept { return chorales_.size(); }
  bool empty() const noexcept { return chorales_.empty(); }
  const Chorale& operator[](std::size_t i) const { return chorales_[i]; }
  std::span<const Chorale> chorales() const noexcept { return chorales_; }
  auto begin() const noexcept { return chorales_.begin(); }
  auto end() const noexcept { return chorales_.end(); }

  bool contains_id(const std::string& id) const { return index_.contains(id); }

  /// JSON-lines text, one record per line, each line LF-terminated.
  std::string to_jsonl() const;

  /// Hex fnv1a64 digest of to_jsonl().
  std::string digest() const;

  friend bool operator==(const Corpus& a, const Corpus& b) { return a.chorales_ == b.chorales_; }

 private:
  std::vector<Chorale> chorales_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Parses JSON-lines corpus text. Blank lines are skipped. Throws ParseError
/// with the 1-based line number, or auggen::Error for duplicate ids.
Corpus parse_corpus(std::string_view text);

Corpus load_corpus(const std::filesystem::path& path);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

struct Split {
  Corpus train;
  Corpus validation;
  std::uint64_t seed = 0;
  double fraction = 0.0;
};

/// Seeded train/validation split.
///
/// The corpus order is permuted by a Fisher-Yates shuffle driven by
/// Rng(derive_seed(seed, {stream_tag("split")})); the first
/// floor(fraction * n) chorales of the permutation form the training part
/// and the remainder the validation part. Both parts keep the permuted order.
///
/// Throws when fraction is outside (0, 1), when either part would be empty,
/// or when two chorales share a canonical key (they could straddle the cut).
Split split(const Corpus& corpus, double fraction, std::uint64_t seed);

/// {"fraction":…,"seed":…,"train_ids":[…],"validation_ids":[…]}
nlohmann::json split_manifest(const Split& split);

}  // namespace auggen
