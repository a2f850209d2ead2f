// SPDX-License-Identifier: Apache-2.0
#include "auggen/teacher.hpp"

#include <algorithm>
#include <array>
#include <climits>
#include <cstdio>
#include <cstdlib>
#include <unordered_set>

#include "auggen/error.hpp"
#include "auggen/rng.hpp"

namespace auggen {

namespace {

constexpr std::array<int, 7> kMajorScale = {0, 2, 4, 5, 7, 9, 11};

// Chord-to-chord transition weights by scale degree (I..vii).
constexpr std::array<std::array<double, 7>, 7> kProgression = {{
    {0, 1, 0, 3, 3, 2, 0},  // I
    {0, 0, 0, 0, 4, 0, 1},  // ii
    {0, 0, 0, 1, 0, 3, 0},  // iii
    {2, 2, 0, 0, 3, 0, 0},  // IV
    {5, 0, 0, 0, 0, 2, 0},  // V
    {0, 2, 0, 3, 0, 0, 0},  // vi
    {1, 0, 0, 0, 0, 0, 0},  // vii
}};

struct Range {
  int low;
  int high;
};
constexpr std::array<Range, kVoiceCount> kRanges = {{{60, 79}, {53, 74}, {48, 67}, {38, 60}}};
constexpr std::array<int, kVoiceCount> kStartPitch = {67, 62, 55, 48};

struct ChordSpan {
  int degree;
  std::size_t start;
  std::size_t duration;
};

std::array<int, 3> chord_classes(int tonic, int degree) {
  std::array<int, 3> out{};
  for (int i = 0; i < 3; ++i) out[i] = (tonic + kMajorScale[(degree + 2 * i) % 7]) % 12;
  return out;
}

bool in_classes(int pitch, const std::array<int, 3>& classes) {
  return std::find(classes.begin(), classes.end(), pitch % 12) != classes.end();
}

// Chord tone in [low, high] nearest to `target`, excluding `avoid`; ties go low.
int nearest_tone(const std::array<int, 3>& classes, int low, int high, int target, int avoid = -1) {
  int best = -1;
  int best_distance = INT_MAX;
  for (int p = std::max(low, kMinPitch); p <= std::min(high, kMaxPitch); ++p) {
    if (p == avoid || !in_classes(p, classes)) continue;
    const int d = std::abs(p - target);
    if (d < best_distance) {
      best = p;
      best_distance = d;
    }
  }
  return best;
}

std::vector<ChordSpan> progression(Rng& rng, std::size_t length) {
  std::vector<ChordSpan> chords;
  const std::size_t cadence = std::min<std::size_t>(12, length);
  std::size_t t = 0;
  int degree = 0;
  while (t + cadence < length) {
    std::size_t duration = rng.below(4) == 0 ? 8 : 4;
    duration = std::min(duration, length - cadence - t);
    chords.push_back({degree, t, duration});
    t += duration;
    degree = static_cast<int>(rng.categorical(kProgression[static_cast<std::size_t>(degree)]));
  }
  if (length - t >= 8) {
    chords.push_back({4, t, length - t - 8});
    t = length - 8;
  }
  chords.push_back({0, t, length - t});
  chords.erase(std::remove_if(chords.begin(), chords.end(), [](const ChordSpan& c) { return c.duration == 0; }),
               chords.end());
  return chords;
}

}  // namespace

std::vector<Chorale> teacher_prototypes(const TeacherParams& params) {
  if (params.prototypes == 0) throw Error("teacher needs at least one prototype");
  if (params.prototype_length < 4) throw Error("teacher prototype length must be >= 4");
  if (params.tonic < 0 || params.tonic > 127) throw Error("teacher tonic outside [0, 127]");
  std::vector<Chorale> out;
  for (std::size_t n = 0; n < params.prototypes; ++n) {
    Rng rng(derive_seed(params.structure_seed, {stream_tag("prototype"), n}));
    RealizedGrid grid;
    grid.length = params.prototype_length;
    for (std::size_t v = 0; v < kVoiceCount; ++v) {
      grid.pitch[v].assign(grid.length, RealizedGrid::kSilent);
      grid.onset[v].assign(grid.length, 0);
    }
    std::array<int, kVoiceCount> previous = kStartPitch;
    const auto chords = progression(rng, grid.length);
    for (std::size_t c = 0; c < chords.size(); ++c) {
      const ChordSpan& chord = chords[c];
      const auto classes = chord_classes(params.tonic, chord.degree);
      const bool final_chord = c + 1 == chords.size();
      std::array<int, kVoiceCount> pitch{};

      const int bass_class = (!final_chord && rng.below(5) == 0) ? classes[1] : classes[0];
      pitch[3] = nearest_tone({bass_class, bass_class, bass_class}, kRanges[3].low, kRanges[3].high, previous[3]);
      for (std::size_t v = 0; v < 3; ++v) {
        const int ceiling = v == 0 ? kRanges[0].high : pitch[v - 1] - 1;
        const int floor = std::max(kRanges[v].low, pitch[3] + 1);
        int p = nearest_tone(classes, floor, std::min(kRanges[v].high, ceiling), previous[v]);
        if (p < 0) p = nearest_tone(classes, kRanges[v].low, kRanges[v].high, previous[v]);
        pitch[v] = p;
      }

      for (std::size_t v = 0; v < kVoiceCount; ++v) {
        const std::size_t split_odds = v == 0 ? 2 : 4;
        const bool split = !final_chord && chord.duration >= 4 && rng.below(split_odds) == 0;
        const std::size_t first = split ? chord.duration / 2 : chord.duration;
        grid.pitch[v][chord.start] = static_cast<std::int16_t>(pitch[v]);
        grid.onset[v][chord.start] = 1;
        for (std::size_t t = 1; t < first; ++t) grid.pitch[v][chord.start + t] = static_cast<std::int16_t>(pitch[v]);
        int last = pitch[v];
        if (split) {
          const int step = rng.below(2) == 0 ? pitch[v] - 5 : pitch[v] + 5;
          int second = nearest_tone(classes, kRanges[v].low, kRanges[v].high, step, pitch[v]);
          if (second < 0) second = pitch[v];
          grid.onset[v][chord.start + first] = 1;
          for (std::size_t t = first; t < chord.duration; ++t) {
            grid.pitch[v][chord.start + t] = static_cast<std::int16_t>(second);
          }
          last = second;
        }
        previous[v] = last;
      }
    }
    char id[32];
    std::snprintf(id, sizeof id, "prototype-%04zu", n);
    Chorale chorale{id, tokenize(grid)};
    require_valid(chorale);
    out.push_back(std::move(chorale));
  }
  return out;
}

MarkovModel teacher_model(const TeacherParams& params) {
  const auto prototypes = teacher_prototypes(params);
  return MarkovModel::fit(params.order, params.alpha, prototypes);
}

Corpus teacher_corpus(std::uint64_t seed, std::size_t n, std::size_t min_length, std::size_t max_length,
                      const TeacherParams& params) {
  if (n == 0) throw Error("teacher corpus size must be >= 1");
  if (min_length < 4) throw Error("teacher minimum length must be >= 4");
  if (max_length < min_length) throw Error("teacher length range is empty");
  const MarkovModel model = teacher_model(params);
  std::vector<Chorale> chorales;
  std::unordered_set<ChoraleKey> keys;
  for (std::size_t i = 0; i < n; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "teacher-%04zu", i);
    for (std::uint64_t attempt = 0;; ++attempt) {
      if (attempt == 1000) throw Error("teacher model cannot produce enough distinct chorales");
      const std::uint64_t stream = derive_seed(seed, {stream_tag("teacher"), i, attempt});
      Rng lengths(stream);
      const auto length = static_cast<std::size_t>(lengths.between(min_length, max_length));
      Chorale c = model.sample(length, derive_seed(stream, {stream_tag("tokens")}), id);
      if (keys.insert(canonical_key(c)).second) {
        chorales.push_back(std::move(c));
        break;
      }
    }
  }
  return Corpus(std::move(chorales));
}

}  // namespace auggen
