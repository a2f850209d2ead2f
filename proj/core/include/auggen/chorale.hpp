// SPDX-License-Identifier: Apache-2.0
//
// Four-voice chorales on a sixteenth-note grid. Each voice is a sequence of
// tokens, one per timestep: a MIDI pitch that starts a note, a hold that
// sustains the previous note, or a rest.
#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace auggen {

inline constexpr std::size_t kVoiceCount = 4;
inline constexpr int kMinPitch = 0;
inline constexpr int kMaxPitch = 127;

class Token {
 public:
  static constexpr std::int16_t kHoldCode = -1;
  static constexpr std::int16_t kRestCode = -2;

  /// Throws auggen::Error for pitches outside [0, 127].
  static Token note(int pitch);
  static constexpr Token hold() noexcept { return Token(kHoldCode); }
  static constexpr Token rest() noexcept { return Token(kRestCode); }

  /// Inverse of code(). Throws for codes that name no token.
  static Token from_code(int code);

  constexpr bool is_note() const noexcept { return code_ >= 0; }
  constexpr bool is_hold() const noexcept { return code_ == kHoldCode; }
  constexpr bool is_rest() const noexcept { return code_ == kRestCode; }

  /// MIDI pitch; only meaningful for notes.
  constexpr int pitch() const noexcept { return code_; }

  /// Compact integer encoding: pitch for notes, negative for hold and rest.
  constexpr std::int16_t code() const noexcept { return code_; }

  /// Record spelling: "R", "__", or the decimal pitch.
  std::string text() const;

  friend constexpr auto operator<=>(Token, Token) = default;

 private:
  constexpr explicit Token(std::int16_t code) noexcept : code_(code) {}
  std::int16_t code_;
};

using Voice = std::vector<Token>;

/// Voice 0 is the soprano, voice 3 the bass.
struct Chorale {
  std::string id;
  std::array<Voice, kVoiceCount> voices;

  /// Length of the soprano voice; equal to every voice's length when valid.
  std::size_t length() const noexcept { return voices[0].size(); }

  friend bool operator==(const Chorale&, const Chorale&) = default;
};

struct Violation {
  std::size_t voice = 0;
  std::optional<std::size_t> timestep;
  std::string message;

  /// "voice 2, timestep 1: HOLD after REST"
  std::string describe() const;
};

/// Every broken chorale invariant; empty when the chorale is valid.
std::vector<Violation> validate(const Chorale& chorale);

inline bool is_valid(const Chorale& chorale) { return validate(chorale).empty(); }

/// Throws auggen::Error listing the violations of an invalid chorale.
void require_valid(const Chorale& chorale);

/// Sounding pitch and onset flags per voice and timestep.
struct RealizedGrid {
  static constexpr std::int16_t kSilent = -1;

  std::size_t length = 0;
  std::array<std::vector<std::int16_t>, kVoiceCount> pitch;
  std::array<std::vector<std::uint8_t>, kVoiceCount> onset;

  bool sounding(std::size_t voice, std::size_t t) const { return pitch[voice][t] != kSilent; }
};

/// Throws auggen::Error for invalid chorales.
RealizedGrid realize(const Chorale& chorale);

/// Inverse of realize: onset timesteps become notes, sustained ones holds,
/// silent ones rests.
std::array<Voice, kVoiceCount> tokenize(const RealizedGrid& grid);

/// Exact-match identity of a chorale's token content; the id is ignored.
class ChoraleKey {
 public:
  explicit ChoraleKey(std::string text) : text_(std::move(text)) {}
  const std::string& str() const noexcept { return text_; }
  friend auto operator<=>(const ChoraleKey&, const ChoraleKey&) = default;

 private:
  std::string text_;
};

ChoraleKey canonical_key(const Chorale& chorale);

/// One JSON-lines record: {"id":"...","voices":[[...],[...],[...],[...]]}.
/// No trailing newline.
std::string serialize(const Chorale& chorale);

/// Parses and validates one record. `line` is reported in errors.
/// Throws ParseError.
Chorale parse(std::string_view record, std::size_t line = 0);

/// Transposes every note by `semitones`. Throws if a pitch leaves [0, 127].
Chorale transpose(const Chorale& chorale, int semitones);

}  // namespace auggen

template <>
struct std::hash<auggen::ChoraleKey> {
  std::size_t operator()(const auggen::ChoraleKey& key) const noexcept {
    return std::hash<std::string>{}(key.str());
  }
};
