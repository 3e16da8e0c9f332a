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

#include "tilscore/segmentation.hpp"

namespace {

using namespace tilscore;

void BM_SegmentSlideIdentity(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> px(0, 255);
  ImageU8 slide(side, side, 3, {0.5, 0.5});
  for (auto& v : slide.data()) v = static_cast<std::uint8_t>(px(rng));
  const BinaryMask tissue(side, side, 1, {0.5, 0.5}, 1);
  PredictorSpec spec;
  spec.kind = PredictorKind::identity;
  const std::vector<PredictorPtr> models{make_builtin_predictor(spec, Task::segmentation)};
  SegmentationConfig cfg;
  cfg.ensemble_size = 1;
  for (auto _ : state) benchmark::DoNotOptimize(segment_slide(slide, tissue, models, cfg));
  state.SetItemsProcessed(state.iterations() * side * side);
}
BENCHMARK(BM_SegmentSlideIdentity)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);

void BM_FinalizeSegmentation(benchmark::State& state) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ProbMap tumor(1024, 1024, 1, {1.0, 1.0});
  ProbMap stroma(1024, 1024, 1, {1.0, 1.0});
  for (auto& v : tumor.data()) v = u(rng);
  for (auto& v : stroma.data()) v = u(rng);
  const BinaryMask tissue(2048, 2048, 1, {0.5, 0.5}, 1);
  const SegmentationConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(finalize_segmentation(tumor, stroma, tissue, cfg));
}
BENCHMARK(BM_FinalizeSegmentation)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
