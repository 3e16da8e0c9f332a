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

#include "tilscore/morphology.hpp"

namespace {

using namespace tilscore;

BinaryMask noise_mask(int side, double density) {
  std::mt19937_64 rng(1);
  std::bernoulli_distribution on(density);
  BinaryMask m(side, side);
  for (auto& v : m.data()) v = on(rng) ? 1 : 0;
  return m;
}

void BM_Open(benchmark::State& state) {
  const auto mask = noise_mask(static_cast<int>(state.range(0)), 0.6);
  const auto disc = disc_element(static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(open(mask, disc));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}
BENCHMARK(BM_Open)->Args({512, 3})->Args({512, 10})->Args({2048, 10})->Unit(benchmark::kMillisecond);

void BM_ConnectedComponents(benchmark::State& state) {
  const auto mask = noise_mask(static_cast<int>(state.range(0)), 0.4);
  for (auto _ : state) benchmark::DoNotOptimize(connected_components(mask));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}
BENCHMARK(BM_ConnectedComponents)->Arg(512)->Arg(2048)->Unit(benchmark::kMillisecond);

void BM_FillHoles(benchmark::State& state) {
  const auto mask = noise_mask(static_cast<int>(state.range(0)), 0.7);
  for (auto _ : state) benchmark::DoNotOptimize(fill_holes(mask));
}
BENCHMARK(BM_FillHoles)->Arg(1024)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
