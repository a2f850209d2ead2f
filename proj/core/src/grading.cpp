// SPDX-License-Identifier: Apache-2.0
#include "auggen/grading.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

#include "auggen/error.hpp"
#include "auggen/io.hpp"

namespace auggen {

double wasserstein1(const FeatureDistribution& p, const FeatureDistribution& q) {
  if (p.is_empty() || q.is_empty()) {
    throw Error("wasserstein1: empty distribution ('" + p.feature() + "' vs '" + q.feature() + "')");
  }
  const auto xs = p.support(), ws = p.weights();
  const auto ys = q.support(), vs = q.weights();
  std::size_t i = 0, j = 0;
  double cdf_p = 0.0, cdf_q = 0.0;
  double position = std::min(xs[0], ys[0]);
  double distance = 0.0;
  // Sweep the merged support; between consecutive points both CDFs are flat.
  while (i < xs.size() || j < ys.size()) {
    const double next = (j >= ys.size() || (i < xs.size() && xs[i] <= ys[j])) ? xs[i] : ys[j];
    distance += std::abs(cdf_p - cdf_q) * (next - position);
    position = next;
    while (i < xs.size() && xs[i] == position) cdf_p += ws[i++];
    while (j < ys.size() && ys[j] == position) cdf_q += vs[j++];
  }
  return distance;
}

ReferenceModel::ReferenceModel(FeatureSet features, std::vector<Entry> entries, double empty_penalty,
                               std::string corpus_digest, std::size_t corpus_size)
    : features_(std::move(features)),
      entries_(std::move(entries)),
      empty_penalty_(empty_penalty),
      corpus_digest_(std::move(corpus_digest)),
      corpus_size_(corpus_size) {
  if (entries_.size() != features_.size()) throw Error("reference must cover every enabled feature");
  bool any_positive = false;
  for (std::size_t f = 0; f < entries_.size(); ++f) {
    const Entry& e = entries_[f];
    if (e.feature != features_[f].name) throw Error("reference feature order mismatch at '" + e.feature + "'");
    if (!(e.weight >= 0.0) || !std::isfinite(e.weight)) throw Error("feature weights must be finite and >= 0");
    if (e.reference.is_empty()) throw Error("reference for '" + e.feature + "' has no events");
    any_positive = any_positive || e.weight > 0.0;
  }
  if (!any_positive) throw Error("at least one feature weight must be positive");
  if (!(empty_penalty_ > 0.0) || !std::isfinite(empty_penalty_)) {
    throw Error("empty-distribution penalty must be positive and finite");
  }
}

double ReferenceModel::total_weight() const {
  double total = 0.0;
  for (const auto& e : entries_) total += e.weight;
  return total;
}

nlohmann::json ReferenceModel::to_json() const {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& e : entries_) {
    features.push_back({{"name", e.feature},
                        {"kind", e.kind == FeatureKind::kPoint ? "point" : "distributional"},
                        {"weight", e.weight},
                        {"support", std::vector<double>(e.reference.support().begin(),
                                                        e.reference.support().end())},
                        {"weights", std::vector<double>(e.reference.weights().begin(),
                                                        e.reference.weights().end())}});
  }
  return {{"format_version", 1},
          {"corpus", {{"digest", corpus_digest_}, {"size", corpus_size_}}},
          {"empty_penalty", empty_penalty_},
          {"features", std::move(features)}};
}

ReferenceModel ReferenceModel::from_json(const nlohmann::json& doc, const FeatureRegistry& registry) {
  try {
    if (doc.at("format_version").get<int>() != 1) throw Error("unsupported reference format_version");
    std::vector<std::string> names;
    std::vector<Entry> entries;
    for (const auto& f : doc.at("features")) {
      const auto name = f.at("name").get<std::string>();
      names.push_back(name);
      const auto kind = f.at("kind").get<std::string>();
      if (kind != "point" && kind != "distributional") throw Error("unknown feature kind '" + kind + "'");
      entries.push_back({name, kind == "point" ? FeatureKind::kPoint : FeatureKind::kDistributional,
                         f.at("weight").get<double>(),
                         FeatureDistribution::from_canonical(name, f.at("support").get<std::vector<double>>(),
                                                             f.at("weights").get<std::vector<double>>())});
    }
    FeatureSet features(names, registry);
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (features[i].kind != entries[i].kind) throw Error("feature '" + names[i] + "' kind mismatch");
    }
    return ReferenceModel(std::move(features), std::move(entries), doc.at("empty_penalty").get<double>(),
                          doc.at("corpus").at("digest").get<std::string>(),
                          doc.at("corpus").at("size").get<std::size_t>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed reference model: ") + e.what());
  }
}

std::string ReferenceModel::fingerprint() const { return hex_digest(to_json().dump()); }

ReferenceModel fit_reference(const Corpus& corpus, const FeatureSet& features, std::vector<double> weights,
                             double empty_penalty) {
  if (corpus.empty()) throw Error("cannot fit a reference on an empty corpus");
  if (weights.empty()) weights.assign(features.size(), 1.0);
  if (weights.size() != features.size()) throw Error("need one weight per enabled feature");

  std::vector<std::vector<double>> pooled(features.size());
  for (const auto& chorale : corpus) {
    const RealizedGrid grid = realize(chorale);
    for (std::size_t f = 0; f < features.size(); ++f) {
      const auto events = features[f].events(grid);
      pooled[f].insert(pooled[f].end(), events.begin(), events.end());
    }
  }
  std::vector<ReferenceModel::Entry> entries;
  for (std::size_t f = 0; f < features.size(); ++f) {
    if (pooled[f].empty()) throw Error("corpus yields no events for feature '" + features[f].name + "'");
    entries.push_back({features[f].name, features[f].kind, weights[f],
                       FeatureDistribution::from_samples(features[f].name, pooled[f])});
  }
  return ReferenceModel(features, std::move(entries), empty_penalty, corpus.digest(), corpus.size());
}

GradeReport grade(const Chorale& chorale, const ReferenceModel& reference) {
  const auto distributions = reference.features().extract(chorale);
  GradeReport report;
  report.chorale_id = chorale.id;
  report.distances.reserve(distributions.size());
  const auto entries = reference.entries();
  for (std::size_t f = 0; f < distributions.size(); ++f) {
    const double d = distributions[f].is_empty() ? reference.empty_penalty()
                                                 : wasserstein1(distributions[f], entries[f].reference);
    report.distances.push_back(d);
    report.total += entries[f].weight * d;
  }
  return report;
}

double nearest_rank_quantile(std::span<const double> values, double q) {
  if (values.empty()) throw Error("quantile of an empty list");
  if (!(q > 0.0 && q <= 1.0)) throw Error("quantile level must lie in (0, 1]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(q * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

Threshold grade_quantile(std::span<const double> grades, double q, const std::string& source) {
  return {nearest_rank_quantile(grades, q),
          "nearest-rank q=" + format_real(q) + " of " + std::to_string(grades.size()) + " " + source};
}

Quintuple quintuple(std::span<const double> values) {
  if (values.empty()) throw Error("quintuple of an empty list");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return {*lo, nearest_rank_quantile(values, 0.25), nearest_rank_quantile(values, 0.5),
          nearest_rank_quantile(values, 0.75), *hi};
}

}  // namespace auggen
