// SPDX-License-Identifier: Apache-2.0
#include "auggen/model.hpp"

#include "auggen/error.hpp"
#include "auggen/rng.hpp"

namespace auggen {

std::vector<std::size_t> draw_epoch_multiset(std::size_t dataset_size, const BatchPlan& plan,
                                             std::uint64_t seed) {
  if (dataset_size == 0) throw Error("cannot draw batches from an empty dataset");
  if (plan.batches == 0 || plan.batch_size == 0) throw Error("batch plan needs m >= 1 and k >= 1");
  std::vector<std::size_t> counts(dataset_size, 0);
  Rng rng(seed);
  for (std::size_t b = 0; b < plan.batches; ++b) {
    for (std::size_t i = 0; i < plan.batch_size; ++i) ++counts[rng.below(dataset_size)];
  }
  return counts;
}

}  // namespace auggen
