// SPDX-License-Identifier: Apache-2.0
//
// Synthetic teacher corpus: a stand-in for a real chorale collection at desk
// scale. A fixed teacher Markov model is fit on rule-based prototype
// chorales (diatonic triads, smooth voice leading), then sampled.
#pragma once

#include <cstdint>

#include "auggen/corpus.hpp"
#include "auggen/markov.hpp"

namespace auggen {

struct TeacherParams {
  std::size_t order = 2;
  double alpha = 0.01;
  /// MIDI pitch of the major-key tonic.
  int tonic = 60;
  std::size_t prototypes = 24;
  /// Timesteps per prototype; a multiple of 8 fits the chord rhythm best.
  std::size_t prototype_length = 64;
  /// Seeds the prototype construction; fixed so the teacher is fixed.
  std::uint64_t structure_seed = 1685;

  friend bool operator==(const TeacherParams&, const TeacherParams&) = default;
};

/// Rule-based four-voice chorales in the major key of `params.tonic`.
std::vector<Chorale> teacher_prototypes(const TeacherParams& params);

/// The teacher model fit on teacher_prototypes(params).
MarkovModel teacher_model(const TeacherParams& params);

/// `n` distinct chorales sampled from teacher_model(params). Lengths are
/// uniform in [min_length, max_length]; chorale i uses stream
/// derive_seed(seed, {stream_tag("teacher"), i, attempt}) and is redrawn with
/// the next attempt if its tokens repeat an earlier chorale. Ids are
/// "teacher-0000", "teacher-0001", ...
Corpus teacher_corpus(std::uint64_t seed, std::size_t n, std::size_t min_length, std::size_t max_length,
                      const TeacherParams& params = {});

}  // namespace auggen
