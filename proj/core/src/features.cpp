// SPDX-License-Identifier: Apache-2.0
#include "auggen/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>

#include "auggen/error.hpp"

namespace auggen {

FeatureDistribution::FeatureDistribution(std::string feature, std::vector<double> support,
                                         std::vector<double> weights)
    : feature_(std::move(feature)) {
  if (support.size() != weights.size()) {
    throw Error("feature '" + feature_ + "': support and weights differ in length");
  }
  std::vector<std::size_t> order(support.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (!std::isfinite(support[i])) throw Error("feature '" + feature_ + "': non-finite support value");
    if (!std::isfinite(weights[i]) || weights[i] < 0.0) {
      throw Error("feature '" + feature_ + "': weights must be finite and non-negative");
    }
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return support[a] < support[b]; });
  double total = 0.0;
  for (std::size_t i : order) {
    if (weights[i] == 0.0) continue;
    if (!support_.empty() && support_.back() == support[i]) {
      weights_.back() += weights[i];
    } else {
      support_.push_back(support[i]);
      weights_.push_back(weights[i]);
    }
    total += weights[i];
  }
  for (double& w : weights_) w /= total;
}

FeatureDistribution FeatureDistribution::from_samples(std::string feature,
                                                      std::span<const double> samples) {
  return FeatureDistribution(std::move(feature), {samples.begin(), samples.end()},
                             std::vector<double>(samples.size(), 1.0));
}

FeatureDistribution FeatureDistribution::from_canonical(std::string feature,
                                                       std::vector<double> support,
                                                       std::vector<double> weights) {
  if (support.size() != weights.size()) throw Error("feature '" + feature + "': length mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (!std::isfinite(support[i]) || (i > 0 && !(support[i - 1] < support[i]))) {
      throw Error("feature '" + feature + "': support must be finite and strictly increasing");
    }
    if (!std::isfinite(weights[i]) || !(weights[i] > 0.0)) {
      throw Error("feature '" + feature + "': weights must be positive");
    }
    total += weights[i];
  }
  if (!support.empty() && std::abs(total - 1.0) > 1e-9) {
    throw Error("feature '" + feature + "': weights do not sum to 1");
  }
  FeatureDistribution d;
  d.feature_ = std::move(feature);
  d.support_ = std::move(support);
  d.weights_ = std::move(weights);
  return d;
}

std::vector<double> pitch_events(const RealizedGrid& grid) {
  std::vector<double> out;
  for (std::size_t v = 0; v < kVoiceCount; ++v) {
    for (std::size_t t = 0; t < grid.length; ++t) {
      if (grid.onset[v][t] != 0) out.push_back(grid.pitch[v][t]);
    }
  }
  return out;
}

std::vector<double> rhythm_events(const RealizedGrid& grid) {
  std::vector<double> out;
  for (std::size_t v = 0; v < kVoiceCount; ++v) {
    std::size_t t = 0;
    while (t < grid.length) {
      if (grid.onset[v][t] == 0) {
        ++t;
        continue;
      }
      std::size_t end = t + 1;
      while (end < grid.length && grid.sounding(v, end) && grid.onset[v][end] == 0) ++end;
      out.push_back(static_cast<double>(end - t));
      t = end;
    }
  }
  return out;
}

std::vector<double> harmonic_interval_events(const RealizedGrid& grid) {
  std::vector<double> out;
  for (std::size_t t = 0; t < grid.length; ++t) {
    for (std::size_t upper = 0; upper + 1 < kVoiceCount; ++upper) {
      const std::size_t lower = upper + 1;
      if (grid.sounding(upper, t) && grid.sounding(lower, t)) {
        out.push_back(std::abs(grid.pitch[upper][t] - grid.pitch[lower][t]));
      }
    }
  }
  return out;
}

std::vector<double> melodic_interval_events(const RealizedGrid& grid) {
  std::vector<double> out;
  for (std::size_t v = 0; v < kVoiceCount; ++v) {
    int previous = RealizedGrid::kSilent;
    for (std::size_t t = 0; t < grid.length; ++t) {
      if (grid.onset[v][t] == 0) continue;
      const int pitch = grid.pitch[v][t];
      if (previous != RealizedGrid::kSilent) out.push_back(pitch - previous);
      previous = pitch;
    }
  }
  return out;
}

namespace {

bool has_simultaneity(const RealizedGrid& grid) {
  for (std::size_t t = 0; t < grid.length; ++t) {
    int sounding = 0;
    for (std::size_t v = 0; v < kVoiceCount; ++v) sounding += grid.sounding(v, t) ? 1 : 0;
    if (sounding >= 2) return true;
  }
  return false;
}

}  // namespace

std::size_t count_parallel_errors(const RealizedGrid& grid) {
  std::size_t count = 0;
  for (std::size_t t = 0; t + 1 < grid.length; ++t) {
    for (std::size_t a = 0; a < kVoiceCount; ++a) {
      for (std::size_t b = a + 1; b < kVoiceCount; ++b) {
        if (!grid.sounding(a, t) || !grid.sounding(b, t) || !grid.sounding(a, t + 1) ||
            !grid.sounding(b, t + 1)) {
          continue;
        }
        if (grid.pitch[a][t] == grid.pitch[a][t + 1] || grid.pitch[b][t] == grid.pitch[b][t + 1]) {
          continue;
        }
        const int before = std::abs(grid.pitch[a][t] - grid.pitch[b][t]) % 12;
        const int after = std::abs(grid.pitch[a][t + 1] - grid.pitch[b][t + 1]) % 12;
        if ((before == 0 || before == 7) && after == before) ++count;
      }
    }
  }
  return count;
}

std::vector<double> parallel_error_events(const RealizedGrid& grid) {
  if (!has_simultaneity(grid)) return {};
  return {static_cast<double>(count_parallel_errors(grid)) * 16.0 /
          static_cast<double>(grid.length)};
}

std::vector<double> voice_crossing_events(const RealizedGrid& grid) {
  if (!has_simultaneity(grid)) return {};
  std::size_t crossed = 0;
  for (std::size_t t = 0; t < grid.length; ++t) {
    bool any = false;
    for (std::size_t high = 0; high < kVoiceCount && !any; ++high) {
      for (std::size_t low = high + 1; low < kVoiceCount && !any; ++low) {
        any = grid.sounding(high, t) && grid.sounding(low, t) &&
              grid.pitch[low][t] > grid.pitch[high][t];
      }
    }
    crossed += any ? 1 : 0;
  }
  return {static_cast<double>(crossed) / static_cast<double>(grid.length)};
}

const FeatureRegistry& FeatureRegistry::builtin() {
  static const FeatureRegistry registry = [] {
    FeatureRegistry r;
    r.add({"pitch", FeatureKind::kDistributional, pitch_events});
    r.add({"rhythm", FeatureKind::kDistributional, rhythm_events});
    r.add({"harmonic_interval", FeatureKind::kDistributional, harmonic_interval_events});
    r.add({"melodic_interval", FeatureKind::kDistributional, melodic_interval_events});
    r.add({"parallel_error", FeatureKind::kPoint, parallel_error_events});
    r.add({"voice_crossing", FeatureKind::kPoint, voice_crossing_events});
    return r;
  }();
  return registry;
}

void FeatureRegistry::add(FeatureExtractor extractor) {
  if (extractor.name.empty() || !extractor.events) throw Error("feature extractor needs a name and a function");
  if (contains(extractor.name)) throw Error("feature '" + extractor.name + "' already registered");
  extractors_.push_back(std::move(extractor));
}

const FeatureExtractor& FeatureRegistry::get(std::string_view name) const {
  for (const auto& e : extractors_) {
    if (e.name == name) return e;
  }
  throw Error("unknown feature '" + std::string(name) + "'");
}

bool FeatureRegistry::contains(std::string_view name) const {
  return std::any_of(extractors_.begin(), extractors_.end(),
                     [&](const FeatureExtractor& e) { return e.name == name; });
}

std::vector<std::string> FeatureRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& e : extractors_) out.push_back(e.name);
  return out;
}

FeatureSet::FeatureSet(const std::vector<std::string>& names, const FeatureRegistry& registry) {
  if (names.empty()) throw Error("feature set must not be empty");
  for (const auto& name : names) {
    for (const auto& e : extractors_) {
      if (e.name == name) throw Error("feature '" + name + "' listed twice");
    }
    extractors_.push_back(registry.get(name));
  }
}

FeatureSet FeatureSet::all() { return FeatureSet(FeatureRegistry::builtin().names()); }

std::vector<std::string> FeatureSet::names() const {
  std::vector<std::string> out;
  for (const auto& e : extractors_) out.push_back(e.name);
  return out;
}

FeatureDistribution extract_feature(const FeatureExtractor& extractor, const RealizedGrid& grid) {
  const auto events = extractor.events(grid);
  if (events.empty()) return FeatureDistribution::empty(extractor.name);
  return FeatureDistribution::from_samples(extractor.name, events);
}

std::vector<FeatureDistribution> FeatureSet::extract(const Chorale& chorale) const {
  const RealizedGrid grid = realize(chorale);
  std::vector<FeatureDistribution> out;
  out.reserve(extractors_.size());
  for (const auto& e : extractors_) out.push_back(extract_feature(e, grid));
  return out;
}

}  // namespace auggen
