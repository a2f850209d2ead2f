// SPDX-License-Identifier: Apache-2.0
#include "auggen/corpus.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <numeric>
#include <unordered_set>

#include "auggen/error.hpp"
#include "auggen/io.hpp"
#include "auggen/rng.hpp"

namespace auggen {

Corpus::Corpus(std::vector<Chorale> chorales) : chorales_(std::move(chorales)) {
  index_.reserve(chorales_.size());
  for (std::size_t i = 0; i < chorales_.size(); ++i) {
    const Chorale& c = chorales_[i];
    const auto violations = validate(c);
    if (!violations.empty()) {
      throw Error("chorale '" + c.id + "' is invalid: " + violations.front().describe());
    }
    if (!index_.emplace(c.id, i).second) throw Error("duplicate chorale id '" + c.id + "'");
  }
}

std::string Corpus::to_jsonl() const {
  std::string out;
  for (const auto& c : chorales_) {
    out += serialize(c);
    out += '\n';
  }
  return out;
}

std::string Corpus::digest() const { return hex_digest(to_jsonl()); }

Corpus parse_corpus(std::string_view text) {
  std::vector<Chorale> chorales;
  std::unordered_set<std::string> ids;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    Chorale c = parse(line, line_no);
    if (!ids.insert(c.id).second) {
      throw ParseError(line_no, "id", "duplicate chorale id '" + c.id + "'");
    }
    chorales.push_back(std::move(c));
  }
  return Corpus(std::move(chorales));
}

Corpus load_corpus(const std::filesystem::path& path) {
  try {
    return parse_corpus(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(e.line(), e.field(), path.string() + ": " + e.what());
  }
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  write_file_atomic(path, corpus.to_jsonl());
}

Split split(const Corpus& corpus, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw Error("split fraction must lie in (0, 1)");
  const std::size_t n = corpus.size();
  const auto n_train = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
  if (n < 2 || n_train == 0 || n_train == n) {
    throw Error("corpus of " + std::to_string(n) + " chorales is too small to split at " +
                format_real(fraction));
  }
  std::unordered_map<ChoraleKey, std::string> keys;
  for (const auto& c : corpus) {
    auto [it, inserted] = keys.emplace(canonical_key(c), c.id);
    if (!inserted) {
      throw Error("chorales '" + it->second + "' and '" + c.id + "' have identical tokens");
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, {stream_tag("split")}));
  rng.shuffle(std::span<std::size_t>(order));

  std::vector<Chorale> train, validation;
  train.reserve(n_train);
  validation.reserve(n - n_train);
  for (std::size_t i = 0; i < n; ++i) {
    (i < n_train ? train : validation).push_back(corpus[order[i]]);
  }
  return Split{Corpus(std::move(train)), Corpus(std::move(validation)), seed, fraction};
}

nlohmann::json split_manifest(const Split& s) {
  nlohmann::json train_ids = nlohmann::json::array();
  nlohmann::json validation_ids = nlohmann::json::array();
  for (const auto& c : s.train) train_ids.push_back(c.id);
  for (const auto& c : s.validation) validation_ids.push_back(c.id);
  return {{"seed", s.seed},
          {"fraction", s.fraction},
          {"train_ids", std::move(train_ids)},
          {"validation_ids", std::move(validation_ids)}};
}

}  // namespace auggen
