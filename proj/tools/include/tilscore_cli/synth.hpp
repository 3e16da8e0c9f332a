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

/// @file synth.hpp
/// @brief Seeded synthetic bundles with generator-side expected values.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "tilscore/raster.hpp"
#include "tilscore/survival.hpp"

namespace tilscore::cli {

const std::vector<std::string>& synth_scenarios();

/// Writes the bundle for `scenario` into `out`; returns the file names
/// written, sorted. Throws ValidationError for an unknown scenario.
std::vector<std::string> run_synth(std::string_view scenario, std::uint64_t seed, const std::filesystem::path& out);

struct PlantedBlob {
  int x = 0;
  int y = 0;
  int radius = 0;
  /// Mean of the 8-bit samples / 255 over the blob.
  double mean_probability = 0.0;
};

/// Radially symmetric blobs on a zero background, every sample above
/// 0.3 * 255, separated by at least three background pixels.
struct BlobField {
  ImageU8 map;
  std::vector<PlantedBlob> blobs;
};

BlobField make_blob_field(std::uint64_t seed, int width, int height);

/// Exponential survival times under a proportional-hazards model with the
/// given effect, uniform censoring, times rounded to 0.1 so ties occur.
std::vector<SurvivalRecord> make_survival_cohort(std::uint64_t seed, std::size_t n, double beta);

/// O(n^2) Harrell pair count used as the cohort's stored oracle.
double brute_force_concordance(const std::vector<SurvivalRecord>& records);

}  // namespace tilscore::cli
