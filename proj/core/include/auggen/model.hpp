// SPDX-License-Identifier: Apache-2.0
//
// Contract between the augmentation loop and a generative model. The loop
// only trains, samples, scores, and snapshots through this interface.
#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "auggen/chorale.hpp"

namespace auggen {

/// m batches of k chorales, drawn uniformly with replacement.
struct BatchPlan {
  std::size_t batches = 1;
  std::size_t batch_size = 1;

  std::size_t draws() const noexcept { return batches * batch_size; }
};

/// Draw count per dataset index for one epoch of `plan`, from stream `seed`.
/// Batches are drawn in order; each draw is Rng::below(dataset_size).
std::vector<std::size_t> draw_epoch_multiset(std::size_t dataset_size, const BatchPlan& plan,
                                             std::uint64_t seed);

class GenerativeModel {
 public:
  virtual ~GenerativeModel() = default;

  /// One training epoch on `dataset` per `plan`. Returns the draw count of
  /// every dataset index (the epoch multiset).
  virtual std::vector<std::size_t> train_epoch(std::span<const Chorale> dataset, const BatchPlan& plan,
                                               std::uint64_t seed) = 0;

  /// A valid chorale of `length` timesteps; a pure function of (model, length, seed).
  virtual Chorale sample(std::size_t length, std::uint64_t seed, std::string id) const = 0;

  /// Mean per-token negative log-likelihood over every (voice, timestep) of
  /// `chorales`, each counted `multiplicity[i]` times (once if empty).
  virtual double mean_nll(std::span<const Chorale> chorales,
                          std::span<const std::size_t> multiplicity = {}) const = 0;

  virtual nlohmann::json snapshot() const = 0;
  virtual void restore(const nlohmann::json& snapshot) = 0;
  virtual std::unique_ptr<GenerativeModel> clone() const = 0;
};

}  // namespace auggen
