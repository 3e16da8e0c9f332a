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

/// @file patch_grid.hpp
/// @brief Patch-grid planning, zero-padded window extraction and central-crop
/// stitching.
///
/// Coordinates: a grid is planned over a raster padded by `pad` pixels on
/// every side. Window origins are expressed in padded coordinates, so the
/// window at padded origin (ox, oy) covers raster pixels
/// [ox - pad, ox - pad + patch_size) on each axis. When
/// pad == (patch_size - stride) / 2 the central stride x stride crop of that
/// window covers raster pixels [ox, ox + stride), and the crops of all
/// windows partition the raster.

#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "tilscore/raster.hpp"

namespace tilscore {

struct PatchOrigin {
  int x = 0;
  int y = 0;
  bool operator==(const PatchOrigin&) const = default;
  auto operator<=>(const PatchOrigin&) const = default;
};

struct PixelRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;  // exclusive
  int y1 = 0;  // exclusive
  bool empty() const noexcept { return x1 <= x0 || y1 <= y0; }
  long long area() const noexcept { return empty() ? 0 : static_cast<long long>(x1 - x0) * (y1 - y0); }
};

struct PatchGrid {
  int width = 0;   ///< unpadded raster width
  int height = 0;  ///< unpadded raster height
  int patch_size = 0;
  int stride = 0;
  int pad = 0;
  Resolution resolution{};
  int cols = 0;
  int rows = 0;
  /// Row-major window origins in padded coordinates.
  std::vector<PatchOrigin> windows;

  bool crops_partition() const noexcept { return 2 * pad == patch_size - stride; }
};

/// Windows per axis = ceil((extent + 2 pad - patch_size) / stride) + 1 (one
/// window when the padded extent is smaller than a patch). Throws
/// EmptyRasterError for a zero extent and ValidationError unless
/// patch_size >= stride > 0 and pad >= 0.
PatchGrid plan_patch_grid(int width, int height, int patch_size, int stride, int pad, Resolution res = {});

/// Raster-space rectangle covered by a window (may extend past the raster).
PixelRect window_rect(const PatchGrid& grid, PatchOrigin origin) noexcept;

/// Raster-space rectangle written by a window's central crop, clipped to the
/// raster. Only meaningful when grid.crops_partition().
PixelRect central_crop_rect(const PatchGrid& grid, PatchOrigin origin) noexcept;

/// Copies raster pixels [x0, x0+w) x [y0, y0+h); samples outside the raster
/// are zero.
template <RasterSample T>
Raster<T> extract_window(const Raster<T>& src, int x0, int y0, int w, int h) {
  Raster<T> out(w, h, src.channels(), src.resolution());
  const int cx0 = std::max(x0, 0);
  const int cx1 = std::min(x0 + w, src.width());
  if (cx1 <= cx0) return out;
  const auto ch = static_cast<std::size_t>(src.channels());
  for (int y = std::max(y0, 0); y < std::min(y0 + h, src.height()); ++y) {
    const auto srow = src.row(y);
    auto drow = out.row(y - y0);
    std::copy(srow.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(cx0) * ch),
              srow.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(cx1) * ch),
              drow.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(cx0 - x0) * ch));
  }
  return out;
}

/// Zero-padded extraction of one grid window.
template <RasterSample T>
Raster<T> extract_patch(const Raster<T>& src, const PatchGrid& grid, PatchOrigin origin) {
  return extract_window(src, origin.x - grid.pad, origin.y - grid.pad, grid.patch_size, grid.patch_size);
}

/// Writes the central crop of `patch` (the result for `origin`) into `out`.
/// Concurrent calls are safe for distinct origins of a partitioning grid.
template <RasterSample T>
void write_central_crop(Raster<T>& out, const PatchGrid& grid, PatchOrigin origin, const Raster<T>& patch) {
  if (patch.width() != grid.patch_size || patch.height() != grid.patch_size || patch.channels() != out.channels()) {
    throw ShapeError("write_central_crop: patch shape does not match the grid");
  }
  const PixelRect r = central_crop_rect(grid, origin);
  if (r.empty()) return;
  const auto ch = static_cast<std::size_t>(out.channels());
  const int px0 = r.x0 - (origin.x - grid.pad);
  for (int y = r.y0; y < r.y1; ++y) {
    const auto srow = patch.row(y - (origin.y - grid.pad));
    auto drow = out.row(y);
    std::copy(srow.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(px0) * ch),
              srow.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(px0 + r.x1 - r.x0) * ch),
              drow.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(r.x0) * ch));
  }
}

template <RasterSample T>
using PatchResults = std::vector<std::pair<PatchOrigin, Raster<T>>>;

/// Assembles a raster from one result per window, taking the central
/// stride x stride crop of each. Throws ValidationError when the grid does
/// not partition (pad != (patch - stride) / 2) and IncompleteStitchError
/// listing absent origins when a window has no result.
template <RasterSample T>
Raster<T> stitch_central_crops(std::span<const std::pair<PatchOrigin, Raster<T>>> results, const PatchGrid& grid) {
  if (!grid.crops_partition()) {
    throw ValidationError("stitch_central_crops requires pad == (patch_size - stride) / 2");
  }
  std::vector<const Raster<T>*> by_window(grid.windows.size(), nullptr);
  int channels = 1;
  for (const auto& [origin, patch] : results) {
    const auto it = std::lower_bound(grid.windows.begin(), grid.windows.end(), origin, [](PatchOrigin a, PatchOrigin b) {
      return a.y != b.y ? a.y < b.y : a.x < b.x;
    });
    if (it == grid.windows.end() || *it != origin) {
      throw ValidationError("stitch_central_crops: result for an origin not on the grid");
    }
    by_window[static_cast<std::size_t>(it - grid.windows.begin())] = &patch;
    channels = patch.channels();
  }
  std::vector<std::pair<int, int>> missing;
  for (std::size_t i = 0; i < by_window.size(); ++i) {
    if (by_window[i] == nullptr) missing.emplace_back(grid.windows[i].x, grid.windows[i].y);
  }
  if (!missing.empty()) throw IncompleteStitchError(std::move(missing));

  Raster<T> out(grid.width, grid.height, channels, grid.resolution);
  for (std::size_t i = 0; i < by_window.size(); ++i) write_central_crop(out, grid, grid.windows[i], *by_window[i]);
  return out;
}

template <RasterSample T>
Raster<T> stitch_central_crops(const PatchResults<T>& results, const PatchGrid& grid) {
  return stitch_central_crops<T>(std::span<const std::pair<PatchOrigin, Raster<T>>>(results), grid);
}

}  // namespace tilscore
