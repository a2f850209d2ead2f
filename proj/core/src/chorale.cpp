// SPDX-License-Identifier: Apache-2.0
#include "auggen/chorale.hpp"

#include <nlohmann/json.hpp>

#include <charconv>

#include "auggen/error.hpp"

namespace auggen {

ParseError::ParseError(std::size_t line, std::string field, const std::string& what)
    : Error(line > 0 ? "line " + std::to_string(line) + ", " + field + ": " + what
                     : field + ": " + what),
      line_(line),
      field_(std::move(field)) {}

Token Token::note(int pitch) {
  if (pitch < kMinPitch || pitch > kMaxPitch) {
    throw Error("pitch " + std::to_string(pitch) + " outside [0, 127]");
  }
  return Token(static_cast<std::int16_t>(pitch));
}

Token Token::from_code(int code) {
  if (code == kHoldCode) return hold();
  if (code == kRestCode) return rest();
  return note(code);
}

std::string Token::text() const {
  if (is_hold()) return "__";
  if (is_rest()) return "R";
  return std::to_string(code_);
}

std::string Violation::describe() const {
  std::string out = "voice " + std::to_string(voice);
  if (timestep) out += ", timestep " + std::to_string(*timestep);
  return out + ": " + message;
}

std::vector<Violation> validate(const Chorale& chorale) {
  std::vector<Violation> out;
  const std::size_t length = chorale.voices[0].size();
  if (length == 0) out.push_back({0, std::nullopt, "empty voice"});
  for (std::size_t v = 0; v < kVoiceCount; ++v) {
    const Voice& voice = chorale.voices[v];
    if (v > 0 && voice.size() != length) {
      out.push_back({v, std::nullopt,
                     "length " + std::to_string(voice.size()) + " differs from soprano length " +
                         std::to_string(length)});
    }
    for (std::size_t t = 0; t < voice.size(); ++t) {
      if (voice[t].is_hold()) {
        if (t == 0) {
          out.push_back({v, t, "HOLD at timestep 0"});
        } else if (voice[t - 1].is_rest()) {
          out.push_back({v, t, "HOLD after REST"});
        }
      }
    }
  }
  return out;
}

void require_valid(const Chorale& chorale) {
  const auto violations = validate(chorale);
  if (violations.empty()) return;
  std::string msg = "invalid chorale '" + chorale.id + "'";
  for (const auto& v : violations) msg += "; " + v.describe();
  throw Error(msg);
}

RealizedGrid realize(const Chorale& chorale) {
  require_valid(chorale);
  RealizedGrid grid;
  grid.length = chorale.length();
  for (std::size_t v = 0; v < kVoiceCount; ++v) {
    auto& pitch = grid.pitch[v];
    auto& onset = grid.onset[v];
    pitch.assign(grid.length, RealizedGrid::kSilent);
    onset.assign(grid.length, 0);
    std::int16_t current = RealizedGrid::kSilent;
    for (std::size_t t = 0; t < grid.length; ++t) {
      const Token tok = chorale.voices[v][t];
      if (tok.is_note()) {
        current = tok.code();
        onset[t] = 1;
      } else if (tok.is_rest()) {
        current = RealizedGrid::kSilent;
      }
      pitch[t] = current;
    }
  }
  return grid;
}

std::array<Voice, kVoiceCount> tokenize(const RealizedGrid& grid) {
  std::array<Voice, kVoiceCount> voices;
  for (std::size_t v = 0; v < kVoiceCount; ++v) {
    voices[v].reserve(grid.length);
    for (std::size_t t = 0; t < grid.length; ++t) {
      if (!grid.sounding(v, t)) {
        voices[v].push_back(Token::rest());
      } else if (grid.onset[v][t] != 0 || t == 0 || !grid.sounding(v, t - 1)) {
        voices[v].push_back(Token::note(grid.pitch[v][t]));
      } else {
        voices[v].push_back(Token::hold());
      }
    }
  }
  return voices;
}

namespace {

void append_voices(std::string& out, const Chorale& chorale) {
  out += '[';
  for (std::size_t v = 0; v < kVoiceCount; ++v) {
    if (v > 0) out += ',';
    out += '[';
    const Voice& voice = chorale.voices[v];
    for (std::size_t t = 0; t < voice.size(); ++t) {
      if (t > 0) out += ',';
      out += '"';
      out += voice[t].text();
      out += '"';
    }
    out += ']';
  }
  out += ']';
}

Token parse_token(const nlohmann::json& value, std::size_t line, const std::string& field) {
  if (!value.is_string()) throw ParseError(line, field, "token must be a string");
  const auto& s = value.get_ref<const std::string&>();
  if (s == "R") return Token::rest();
  if (s == "__") return Token::hold();
  const bool digits_only =
      !s.empty() && s.find_first_not_of("0123456789") == std::string::npos;
  if (!digits_only || (s.size() > 1 && s[0] == '0')) {
    throw ParseError(line, field, "unrecognized token \"" + s + "\"");
  }
  int pitch = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), pitch);
  if (ec != std::errc{} || ptr != s.data() + s.size() || pitch > kMaxPitch) {
    throw ParseError(line, field, "pitch " + s + " out of range [0, 127]");
  }
  return Token::note(pitch);
}

}  // namespace

ChoraleKey canonical_key(const Chorale& chorale) {
  std::string out;
  append_voices(out, chorale);
  return ChoraleKey(std::move(out));
}

std::string serialize(const Chorale& chorale) {
  std::string out = "{\"id\":";
  out += nlohmann::json(chorale.id).dump();
  out += ",\"voices\":";
  append_voices(out, chorale);
  out += '}';
  return out;
}

Chorale parse(std::string_view record, std::size_t line) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(record);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(line, "record", std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError(line, "record", "expected a JSON object");
  for (const auto& [key, _] : doc.items()) {
    if (key != "id" && key != "voices") throw ParseError(line, key, "unexpected field");
  }
  if (!doc.contains("id") || !doc["id"].is_string()) {
    throw ParseError(line, "id", "missing or not a string");
  }
  Chorale chorale;
  chorale.id = doc["id"].get<std::string>();
  if (!doc.contains("voices") || !doc["voices"].is_array()) {
    throw ParseError(line, "voices", "missing or not an array");
  }
  const auto& voices = doc["voices"];
  if (voices.size() != kVoiceCount) {
    throw ParseError(line, "voices",
                     "expected 4 voices, found " + std::to_string(voices.size()));
  }
  for (std::size_t v = 0; v < kVoiceCount; ++v) {
    const std::string field = "voices[" + std::to_string(v) + "]";
    if (!voices[v].is_array()) throw ParseError(line, field, "voice must be an array");
    Voice& voice = chorale.voices[v];
    voice.reserve(voices[v].size());
    for (std::size_t t = 0; t < voices[v].size(); ++t) {
      voice.push_back(parse_token(voices[v][t], line, field + "[" + std::to_string(t) + "]"));
    }
  }
  const auto violations = validate(chorale);
  if (!violations.empty()) {
    throw ParseError(line, "voices", "chorale '" + chorale.id + "': " + violations.front().describe());
  }
  return chorale;
}

Chorale transpose(const Chorale& chorale, int semitones) {
  Chorale out = chorale;
  for (auto& voice : out.voices) {
    for (auto& tok : voice) {
      if (tok.is_note()) tok = Token::note(tok.pitch() + semitones);
    }
  }
  return out;
}

}  // namespace auggen
