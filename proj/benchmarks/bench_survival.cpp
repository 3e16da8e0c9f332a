// Copyright 2026 The tilscore Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "tilscore/survival.hpp"

namespace {

using namespace tilscore;

std::vector<SurvivalRecord> cohort(std::size_t n) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> x(0.0, 1.0);
  std::exponential_distribution<double> t(0.1);
  std::bernoulli_distribution e(0.7);
  std::vector<SurvivalRecord> out(n);
  for (auto& r : out) r = {x(rng), std::max(0.1, std::round(t(rng) * 10.0) / 10.0), e(rng)};
  return out;
}

void BM_ConcordanceIndex(benchmark::State& state) {
  const auto r = cohort(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(concordance_index(r));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ConcordanceIndex)->RangeMultiplier(10)->Range(100, 100000)->Complexity(benchmark::oNLogN);

void BM_CoxFit(benchmark::State& state) {
  const auto r = cohort(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(cox_fit_single(r));
}
BENCHMARK(BM_CoxFit)->Arg(100)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
