// SPDX-License-Identifier: Apache-2.0
#include "auggen/markov.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <set>

#include "auggen/error.hpp"
#include "auggen/rng.hpp"

namespace auggen {

namespace {

// Context bytes: code + 3, so START (-3) -> 0, REST -> 1, HOLD -> 2, pitch p -> p + 3.
char context_byte(std::int16_t code) { return static_cast<char>(static_cast<unsigned char>(code + 3)); }

std::string to_hex(std::string_view bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (unsigned char c : bytes) {
    out += kDigits[c >> 4];
    out += kDigits[c & 0xf];
  }
  return out;
}

std::string from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw Error("malformed context key '" + std::string(hex) + "'");
  auto nibble = [&](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    throw Error("malformed context key '" + std::string(hex) + "'");
  };
  std::string out;
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    out += static_cast<char>((nibble(hex[i]) << 4) | nibble(hex[i + 1]));
  }
  return out;
}

Token token_from_text(const std::string& s) {
  if (s == "__") return Token::hold();
  if (s == "R") return Token::rest();
  std::size_t used = 0;
  int pitch = 0;
  try {
    pitch = std::stoi(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw Error("malformed token '" + s + "'");
  return Token::note(pitch);
}

}  // namespace

Vocabulary::Vocabulary(std::array<std::vector<Token>, kVoiceCount> voices) : voices_(std::move(voices)) {
  for (auto& v : voices_) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
}

Vocabulary Vocabulary::from_chorales(std::span<const Chorale> chorales) {
  std::array<std::set<Token>, kVoiceCount> seen;
  for (const auto& c : chorales) {
    for (std::size_t v = 0; v < kVoiceCount; ++v) seen[v].insert(c.voices[v].begin(), c.voices[v].end());
  }
  std::array<std::vector<Token>, kVoiceCount> voices;
  for (std::size_t v = 0; v < kVoiceCount; ++v) voices[v].assign(seen[v].begin(), seen[v].end());
  return Vocabulary(std::move(voices));
}

std::optional<std::size_t> Vocabulary::index_of(std::size_t v, Token token) const {
  const auto& voc = voices_[v];
  const auto it = std::lower_bound(voc.begin(), voc.end(), token);
  if (it == voc.end() || *it != token) return std::nullopt;
  return static_cast<std::size_t>(it - voc.begin());
}

MarkovModel::MarkovModel(std::size_t order, double alpha, Vocabulary vocabulary)
    : order_(order), alpha_(alpha), vocabulary_(std::move(vocabulary)) {
  if (order_ == 0) throw Error("Markov order must be >= 1");
  if (!(alpha_ > 0.0) || !std::isfinite(alpha_)) throw Error("smoothing alpha must be positive and finite");
  for (std::size_t v = 0; v < kVoiceCount; ++v) {
    if (vocabulary_.size(v) == 0) throw Error("voice " + std::to_string(v) + " has an empty vocabulary");
  }
}

MarkovModel MarkovModel::fit(std::size_t order, double alpha, std::span<const Chorale> chorales) {
  MarkovModel model(order, alpha, Vocabulary::from_chorales(chorales));
  model.fit_counts(chorales);
  return model;
}

std::string MarkovModel::context(const std::array<Voice, kVoiceCount>& voices, std::size_t v,
                                 std::size_t t) const {
  std::string key;
  key.reserve(order_ + v);
  for (std::size_t back = order_; back > 0; --back) {
    key += t >= back ? context_byte(voices[v][t - back].code()) : context_byte(kStartCode);
  }
  for (std::size_t u = 0; u < v; ++u) key += context_byte(voices[u][t].code());
  return key;
}

void MarkovModel::fit_counts(std::span<const Chorale> chorales, std::span<const std::size_t> multiplicity) {
  if (!multiplicity.empty() && multiplicity.size() != chorales.size()) {
    throw Error("fit_counts: one multiplicity per chorale required");
  }
  std::array<Table, kVoiceCount> tables;
  bool any = false;
  for (std::size_t i = 0; i < chorales.size(); ++i) {
    const std::size_t times = multiplicity.empty() ? 1 : multiplicity[i];
    if (times == 0) continue;
    const Chorale& c = chorales[i];
    require_valid(c);
    any = true;
    for (std::size_t v = 0; v < kVoiceCount; ++v) {
      for (std::size_t t = 0; t < c.length(); ++t) {
        const auto index = vocabulary_.index_of(v, c.voices[v][t]);
        if (!index) {
          throw Error("chorale '" + c.id + "' voice " + std::to_string(v) + " token " +
                      c.voices[v][t].text() + " is outside the vocabulary");
        }
        Row& row = tables[v][context(c.voices, v, t)];
        if (row.counts.empty()) row.counts.assign(vocabulary_.size(v), 0);
        row.counts[*index] += times;
        row.total += times;
      }
    }
  }
  if (!any) throw Error("fit_counts: empty multiset");
  tables_ = std::move(tables);
}

std::uint64_t MarkovModel::count(std::size_t voice, std::string_view ctx, Token token) const {
  const auto it = tables_[voice].find(std::string(ctx));
  const auto index = vocabulary_.index_of(voice, token);
  if (it == tables_[voice].end() || !index) return 0;
  return it->second.counts[*index];
}

std::uint64_t MarkovModel::context_total(std::size_t voice, std::string_view ctx) const {
  const auto it = tables_[voice].find(std::string(ctx));
  return it == tables_[voice].end() ? 0 : it->second.total;
}

std::vector<double> MarkovModel::next_token_dist(std::size_t voice, std::string_view ctx) const {
  const std::size_t size = vocabulary_.size(voice);
  std::vector<double> dist(size);
  const auto it = tables_[voice].find(std::string(ctx));
  if (it == tables_[voice].end()) {
    std::fill(dist.begin(), dist.end(), 1.0 / static_cast<double>(size));
    return dist;
  }
  const Row& row = it->second;
  const double denominator = static_cast<double>(row.total) + alpha_ * static_cast<double>(size);
  for (std::size_t i = 0; i < size; ++i) dist[i] = (static_cast<double>(row.counts[i]) + alpha_) / denominator;
  return dist;
}

double MarkovModel::probability(std::size_t voice, std::string_view ctx, std::size_t token_index) const {
  const std::size_t size = vocabulary_.size(voice);
  const auto it = tables_[voice].find(std::string(ctx));
  if (it == tables_[voice].end()) return 1.0 / static_cast<double>(size);
  const Row& row = it->second;
  return (static_cast<double>(row.counts[token_index]) + alpha_) /
         (static_cast<double>(row.total) + alpha_ * static_cast<double>(size));
}

std::vector<std::size_t> MarkovModel::train_epoch(std::span<const Chorale> dataset, const BatchPlan& plan,
                                                  std::uint64_t seed) {
  auto multiplicity = draw_epoch_multiset(dataset.size(), plan, seed);
  fit_counts(dataset, multiplicity);
  return multiplicity;
}

Chorale MarkovModel::sample(std::size_t length, std::uint64_t seed, std::string id) const {
  if (length == 0) throw Error("sample length must be >= 1");
  Rng rng(seed);
  Chorale out;
  out.id = std::move(id);
  for (auto& voice : out.voices) voice.assign(length, Token::rest());
  for (std::size_t v = 0; v < kVoiceCount; ++v) {
    const auto alphabet = vocabulary_.voice(v);
    const auto hold_index = vocabulary_.index_of(v, Token::hold());
    for (std::size_t t = 0; t < length; ++t) {
      auto dist = next_token_dist(v, context(out.voices, v, t));
      if (hold_index && (t == 0 || out.voices[v][t - 1].is_rest())) dist[*hold_index] = 0.0;
      double mass = 0.0;
      for (double p : dist) mass += p;
      if (!(mass > 0.0)) {
        std::clog << "auggen: warning: all next-token mass masked for voice " << v << " at timestep " << t
                  << "; emitting REST\n";
        out.voices[v][t] = Token::rest();
        continue;
      }
      out.voices[v][t] = alphabet[rng.categorical(dist)];
    }
  }
  return out;
}

double MarkovModel::mean_nll(std::span<const Chorale> chorales, std::span<const std::size_t> multiplicity) const {
  if (!multiplicity.empty() && multiplicity.size() != chorales.size()) {
    throw Error("mean_nll: one multiplicity per chorale required");
  }
  double total = 0.0;
  double positions = 0.0;
  for (std::size_t i = 0; i < chorales.size(); ++i) {
    const std::size_t times = multiplicity.empty() ? 1 : multiplicity[i];
    if (times == 0) continue;
    const Chorale& c = chorales[i];
    double chorale_nll = 0.0;
    for (std::size_t v = 0; v < kVoiceCount; ++v) {
      for (std::size_t t = 0; t < c.length(); ++t) {
        const auto index = vocabulary_.index_of(v, c.voices[v][t]);
        if (!index) {
          throw Error("chorale '" + c.id + "' voice " + std::to_string(v) + " token " +
                      c.voices[v][t].text() + " is outside the vocabulary");
        }
        chorale_nll -= std::log(probability(v, context(c.voices, v, t), *index));
      }
    }
    total += static_cast<double>(times) * chorale_nll;
    positions += static_cast<double>(times) * static_cast<double>(kVoiceCount * c.length());
  }
  if (positions == 0.0) throw Error("mean_nll: empty corpus");
  return total / positions;
}

nlohmann::json MarkovModel::snapshot() const {
  nlohmann::json vocabulary = nlohmann::json::array();
  nlohmann::json counts = nlohmann::json::array();
  for (std::size_t v = 0; v < kVoiceCount; ++v) {
    nlohmann::json tokens = nlohmann::json::array();
    for (Token tok : vocabulary_.voice(v)) tokens.push_back(tok.text());
    vocabulary.push_back(std::move(tokens));
    nlohmann::json table = nlohmann::json::object();
    for (const auto& [key, row] : tables_[v]) {
      nlohmann::json sparse = nlohmann::json::array();
      for (std::size_t i = 0; i < row.counts.size(); ++i) {
        if (row.counts[i] != 0) sparse.push_back({i, row.counts[i]});
      }
      table[to_hex(key)] = std::move(sparse);
    }
    counts.push_back(std::move(table));
  }
  return {{"format_version", kFormatVersion}, {"kind", "markov"}, {"order", order_},
          {"alpha", alpha_},                  {"vocabulary", std::move(vocabulary)},
          {"counts", std::move(counts)}};
}

MarkovModel MarkovModel::from_snapshot(const nlohmann::json& doc) {
  try {
    if (doc.at("kind").get<std::string>() != "markov") throw Error("snapshot is not a Markov model");
    if (doc.at("format_version").get<int>() != kFormatVersion) {
      throw Error("unsupported Markov snapshot format_version");
    }
    std::array<std::vector<Token>, kVoiceCount> voices;
    const auto& vocab = doc.at("vocabulary");
    if (vocab.size() != kVoiceCount) throw Error("snapshot vocabulary must list 4 voices");
    for (std::size_t v = 0; v < kVoiceCount; ++v) {
      for (const auto& tok : vocab[v]) voices[v].push_back(token_from_text(tok.get<std::string>()));
    }
    MarkovModel model(doc.at("order").get<std::size_t>(), doc.at("alpha").get<double>(),
                      Vocabulary(std::move(voices)));
    const auto& counts = doc.at("counts");
    if (counts.size() != kVoiceCount) throw Error("snapshot counts must list 4 voices");
    for (std::size_t v = 0; v < kVoiceCount; ++v) {
      for (const auto& [hex, sparse] : counts[v].items()) {
        Row row;
        row.counts.assign(model.vocabulary_.size(v), 0);
        for (const auto& entry : sparse) {
          const auto index = entry.at(0).get<std::size_t>();
          if (index >= row.counts.size()) throw Error("snapshot count index out of range");
          row.counts[index] = entry.at(1).get<std::uint64_t>();
          row.total += row.counts[index];
        }
        model.tables_[v].emplace(from_hex(hex), std::move(row));
      }
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed Markov snapshot: ") + e.what());
  }
}

void MarkovModel::restore(const nlohmann::json& snapshot) { *this = from_snapshot(snapshot); }

std::unique_ptr<GenerativeModel> MarkovModel::clone() const { return std::make_unique<MarkovModel>(*this); }

}  // namespace auggen
