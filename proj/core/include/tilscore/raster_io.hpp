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

/// @file raster_io.hpp
/// @brief 8-bit PNG reading/writing plus the `.res` resolution sidecar.
///
/// Sidecar format: two ASCII decimal numbers (mpp_x, mpp_y) separated by one
/// space and terminated by a newline, stored next to the image as
/// `<name>.res` (the `.png` extension replaced).

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "tilscore/raster.hpp"

namespace tilscore {

struct LoadedRaster {
  ImageU8 raster;
  /// No sidecar was found; the raster carries the default 0.5 mpp.
  bool default_resolution = false;
};

/// Decodes an 8-bit grayscale or RGB PNG byte stream. Palette and alpha
/// images are converted to gray/RGB. Throws DecodeError with the byte offset
/// of the first malformed structure.
ImageU8 decode_png(std::span<const std::uint8_t> bytes);

/// Canonical encoding: 8-bit, no interlace, zlib level 6, no ancillary
/// chunks. Deterministic for identical rasters.
std::vector<std::uint8_t> encode_png(const ImageU8& raster);

/// Loads `path` and its sidecar.
LoadedRaster load_raster(const std::filesystem::path& path);

/// Writes `path` with the canonical encoding and, when `write_sidecar` is
/// set, the `.res` sidecar.
void save_raster(const ImageU8& raster, const std::filesystem::path& path, bool write_sidecar = true);

std::filesystem::path sidecar_path(const std::filesystem::path& image_path);

/// std::nullopt when the sidecar does not exist; ValidationError when it is
/// malformed.
std::optional<Resolution> read_sidecar(const std::filesystem::path& sidecar);
void write_sidecar(const std::filesystem::path& sidecar, const Resolution& res);

/// Probability map <-> 8-bit raster (value = round(255 p), p = value / 255).
ImageU8 quantize_probability(const ProbMap& map);
ProbMap dequantize_probability(const ImageU8& raster);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace tilscore
