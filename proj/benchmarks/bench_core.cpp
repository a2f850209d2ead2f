// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <vector>

#include "auggen/grading.hpp"
#include "auggen/markov.hpp"
#include "auggen/teacher.hpp"

namespace {

using namespace auggen;

const Corpus& corpus() {
  static const Corpus c = teacher_corpus(17, 80, 32, 64);
  return c;
}

void BM_Wasserstein(benchmark::State& state) {
  std::vector<double> a, b;
  for (int i = 0; i < state.range(0); ++i) {
    a.push_back(i % 37);
    b.push_back((i * 7) % 41);
  }
  const auto p = FeatureDistribution::from_samples("a", a);
  const auto q = FeatureDistribution::from_samples("b", b);
  for (auto _ : state) benchmark::DoNotOptimize(wasserstein1(p, q));
}
BENCHMARK(BM_Wasserstein)->Arg(16)->Arg(256)->Arg(4096);

void BM_FitReference(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(fit_reference(corpus(), FeatureSet::all()));
}
BENCHMARK(BM_FitReference);

void BM_Grade(benchmark::State& state) {
  const auto reference = fit_reference(corpus(), FeatureSet::all());
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(grade(corpus()[i++ % corpus().size()], reference));
}
BENCHMARK(BM_Grade);

void BM_Sample(benchmark::State& state) {
  const auto model = MarkovModel::fit(2, 0.1, corpus().chorales());
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(model.sample(static_cast<std::size_t>(state.range(0)), seed++, "b"));
}
BENCHMARK(BM_Sample)->Arg(32)->Arg(64);

void BM_TrainEpoch(benchmark::State& state) {
  MarkovModel model(2, 0.1, Vocabulary::from_chorales(corpus().chorales()));
  const BatchPlan plan{static_cast<std::size_t>(state.range(0)), 4};
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(model.train_epoch(corpus().chorales(), plan, seed++));
}
BENCHMARK(BM_TrainEpoch)->Arg(64)->Arg(512);

}  // namespace

BENCHMARK_MAIN();
