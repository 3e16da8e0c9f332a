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

#include <random>

#include "tilscore/detection.hpp"

namespace {

using namespace tilscore;

std::vector<Detection> random_detections(std::size_t n, double extent) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> pos(0.0, extent);
  std::uniform_real_distribution<double> prob(0.3, 1.0);
  std::vector<Detection> d(n);
  for (auto& x : d) x = {pos(rng), pos(rng), prob(rng)};
  return d;
}

void BM_Nms(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  // Constant density: about one detection per 20x20 px.
  const auto d = random_detections(n, 20.0 * std::sqrt(static_cast<double>(n)));
  const DetectionConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(nms(d, cfg, Resolution{0.5, 0.5}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Nms)->Arg(1000)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_ProbMapToDetections(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ProbMap m(1024, 1024);
  for (auto& v : m.data()) v = u(rng) > 0.97 ? 0.8 : 0.0;
  for (auto _ : state) benchmark::DoNotOptimize(prob_map_to_detections(m, 0.3));
}
BENCHMARK(BM_ProbMapToDetections)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
