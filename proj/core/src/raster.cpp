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

#include "tilscore/raster.hpp"

#include <algorithm>
#include <cmath>

namespace tilscore {

void validate(const Resolution& res) {
  if (!(res.mpp_x > 0.0) || !(res.mpp_y > 0.0) || !std::isfinite(res.mpp_x) || !std::isfinite(res.mpp_y)) {
    throw ValidationError("resolution must have positive finite mpp");
  }
}

void validate_label_mask(const LabelMask& mask) {
  if (mask.channels() != 1) throw ShapeError("label mask must have one channel");
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      const auto v = mask(x, y);
      if (v != kLabelOther && v != kLabelTumor && v != kLabelStroma && v != kLabelIgnore) {
        throw ShapeError("label mask sample " + std::to_string(v) + " at (" + std::to_string(x) + ", " +
                         std::to_string(y) + ") outside {0,1,2,255}");
      }
    }
  }
}

void validate_unit_interval(const ProbMap& map) {
  for (const double v : map.data()) {
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("probability sample outside [0, 1]");
  }
}

LabelMask map_annotation_labels(const ImageU8& annotated) {
  if (annotated.channels() != 1) throw ShapeError("annotation raster must have one channel");
  LabelMask out(annotated.width(), annotated.height(), 1, annotated.resolution());
  for (int y = 0; y < annotated.height(); ++y) {
    const auto src = annotated.row(y);
    auto dst = out.row(y);
    for (int x = 0; x < annotated.width(); ++x) {
      switch (src[x]) {
        case 1: dst[x] = kLabelTumor; break;
        case 2:
        case 6: dst[x] = kLabelStroma; break;
        case 3: dst[x] = kLabelIgnore; break;
        case 0:
        case 4:
        case 5:
        case 7: dst[x] = kLabelOther; break;
        default: throw InvalidAnnotationError(x, y, src[x]);
      }
    }
  }
  return out;
}

namespace {

template <typename T, typename Reduce>
auto pool_half(const Raster<T>& r, Reduce reduce) {
  if (r.empty()) throw EmptyRasterError("resample_half: empty raster");
  const int w = r.width() / 2;
  const int h = r.height() / 2;
  const int ch = r.channels();
  Raster<T> out(w, h, ch, r.resolution().halved());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        out(x, y, c) = reduce(r(2 * x, 2 * y, c), r(2 * x + 1, 2 * y, c), r(2 * x, 2 * y + 1, c),
                              r(2 * x + 1, 2 * y + 1, c));
      }
    }
  }
  const bool dropped = (r.width() % 2 != 0) || (r.height() % 2 != 0);
  return std::pair{std::move(out), dropped};
}

}  // namespace

ResampleResult resample_half(const ImageU8& r) {
  auto [out, dropped] = pool_half(r, [](unsigned a, unsigned b, unsigned c, unsigned d) {
    return static_cast<std::uint8_t>((a + b + c + d + 2U) / 4U);
  });
  return {std::move(out), dropped};
}

ResampleResultF resample_half(const ProbMap& r) {
  auto [out, dropped] =
      pool_half(r, [](double a, double b, double c, double d) { return ((a + b) + (c + d)) * 0.25; });
  return {std::move(out), dropped};
}

ResampleResult downsample_half_nearest(const ImageU8& mask) {
  auto [out, dropped] =
      pool_half(mask, [](std::uint8_t a, std::uint8_t, std::uint8_t, std::uint8_t) { return a; });
  return {std::move(out), dropped};
}

ImageU8 upsample_nearest(const ImageU8& mask, int factor, int out_width, int out_height, Resolution out_res) {
  if (factor < 1) throw ValidationError("upsample factor must be >= 1");
  if (mask.empty()) throw EmptyRasterError("upsample_nearest: empty raster");
  ImageU8 out(out_width, out_height, mask.channels(), out_res);
  for (int y = 0; y < out_height; ++y) {
    const int sy = std::min(y / factor, mask.height() - 1);
    for (int x = 0; x < out_width; ++x) {
      const int sx = std::min(x / factor, mask.width() - 1);
      for (int c = 0; c < mask.channels(); ++c) out(x, y, c) = mask(sx, sy, c);
    }
  }
  return out;
}

std::size_t count_foreground(const BinaryMask& mask) {
  return static_cast<std::size_t>(
      std::count_if(mask.data().begin(), mask.data().end(), [](std::uint8_t v) { return v != 0; }));
}

double tissue_area_mm2(std::size_t foreground_pixels, const Resolution& res) {
  return static_cast<double>(foreground_pixels) * res.mpp_x * res.mpp_y / 1e6;
}

double tissue_area_mm2(const BinaryMask& tissue, const Resolution& res) {
  return tissue_area_mm2(count_foreground(tissue), res);
}

IntegralMask::IntegralMask(const BinaryMask& mask)
    : width_(mask.width()),
      height_(mask.height()),
      sums_(static_cast<std::size_t>(mask.width() + 1) * static_cast<std::size_t>(mask.height() + 1), 0) {
  const auto stride = static_cast<std::size_t>(width_ + 1);
  for (int y = 0; y < height_; ++y) {
    std::uint64_t row_sum = 0;
    const auto src = mask.row(y);
    for (int x = 0; x < width_; ++x) {
      row_sum += src[static_cast<std::size_t>(x) * static_cast<std::size_t>(mask.channels())] != 0 ? 1U : 0U;
      sums_[(static_cast<std::size_t>(y) + 1) * stride + static_cast<std::size_t>(x) + 1] =
          sums_[static_cast<std::size_t>(y) * stride + static_cast<std::size_t>(x) + 1] + row_sum;
    }
  }
}

std::uint64_t IntegralMask::count(int x0, int y0, int x1, int y1) const noexcept {
  x0 = std::clamp(x0, 0, width_);
  x1 = std::clamp(x1, 0, width_);
  y0 = std::clamp(y0, 0, height_);
  y1 = std::clamp(y1, 0, height_);
  if (x1 <= x0 || y1 <= y0) return 0;
  const auto stride = static_cast<std::size_t>(width_ + 1);
  const auto at = [&](int x, int y) { return sums_[static_cast<std::size_t>(y) * stride + static_cast<std::size_t>(x)]; };
  return at(x1, y1) - at(x0, y1) - at(x1, y0) + at(x0, y0);
}

}  // namespace tilscore
