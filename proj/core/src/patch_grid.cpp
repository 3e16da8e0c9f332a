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

#include "tilscore/patch_grid.hpp"

namespace tilscore {

namespace {

int windows_per_axis(int extent, int patch_size, int stride, int pad) {
  const int padded = extent + 2 * pad;
  if (padded <= patch_size) return 1;
  return (padded - patch_size + stride - 1) / stride + 1;
}

}  // namespace

PatchGrid plan_patch_grid(int width, int height, int patch_size, int stride, int pad, Resolution res) {
  if (width <= 0 || height <= 0) throw EmptyRasterError("plan_patch_grid: empty raster");
  if (stride <= 0 || patch_size < stride) throw ValidationError("plan_patch_grid: need patch_size >= stride > 0");
  if (pad < 0) throw ValidationError("plan_patch_grid: pad must be non-negative");

  PatchGrid grid;
  grid.width = width;
  grid.height = height;
  grid.patch_size = patch_size;
  grid.stride = stride;
  grid.pad = pad;
  grid.resolution = res;
  grid.cols = windows_per_axis(width, patch_size, stride, pad);
  grid.rows = windows_per_axis(height, patch_size, stride, pad);
  grid.windows.reserve(static_cast<std::size_t>(grid.cols) * static_cast<std::size_t>(grid.rows));
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) grid.windows.push_back({c * stride, r * stride});
  }
  return grid;
}

PixelRect window_rect(const PatchGrid& grid, PatchOrigin origin) noexcept {
  return {origin.x - grid.pad, origin.y - grid.pad, origin.x - grid.pad + grid.patch_size,
          origin.y - grid.pad + grid.patch_size};
}

PixelRect central_crop_rect(const PatchGrid& grid, PatchOrigin origin) noexcept {
  const int offset = (grid.patch_size - grid.stride) / 2;
  const int x0 = origin.x - grid.pad + offset;
  const int y0 = origin.y - grid.pad + offset;
  PixelRect r{std::max(x0, 0), std::max(y0, 0), std::min(x0 + grid.stride, grid.width),
              std::min(y0 + grid.stride, grid.height)};
  if (r.empty()) r = {};
  return r;
}

}  // namespace tilscore
