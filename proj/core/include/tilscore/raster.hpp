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

/// @file raster.hpp
/// @brief Raster data model and physical-unit bookkeeping.
///
/// A Raster is a dense row-major grid of samples with 1 or 3 interleaved
/// channels. Two sample depths are used throughout the pipeline:
///   - std::uint8_t for slides, tissue masks and label masks;
///   - double for unit-interval probability maps.
/// Every raster carries the physical resolution of its pixels.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "tilscore/error.hpp"

namespace tilscore {

/// Physical pixel size in microns per pixel. 0.5 mpp is the 20x base
/// magnification of the slides; 1.0 mpp is 10x.
struct Resolution {
  double mpp_x = 0.5;
  double mpp_y = 0.5;

  /// Nominal objective power: 20x at 0.5 mpp.
  double magnification() const noexcept { return 10.0 / mpp_x; }

  /// Resolution after halving the magnification (pixels twice as large).
  Resolution halved() const noexcept { return {mpp_x * 2.0, mpp_y * 2.0}; }

  double pixel_area_um2() const noexcept { return mpp_x * mpp_y; }

  bool operator==(const Resolution&) const = default;
};

/// Validates mpp_x, mpp_y > 0; throws ValidationError otherwise.
void validate(const Resolution& res);

template <typename T>
concept RasterSample = std::is_same_v<T, std::uint8_t> || std::is_same_v<T, double> ||
                       std::is_same_v<T, std::int32_t>;

template <RasterSample T>
class Raster {
 public:
  using value_type = T;

  Raster() = default;

  Raster(int width, int height, int channels = 1, Resolution res = {}, T fill = T{})
      : width_(width), height_(height), channels_(channels), resolution_(res) {
    if (width < 0 || height < 0) throw ShapeError("raster dimensions must be non-negative");
    if (channels != 1 && channels != 3) throw ShapeError("raster channels must be 1 or 3");
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) *
                     static_cast<std::size_t>(channels),
                 fill);
  }

  Raster(int width, int height, int channels, Resolution res, std::vector<T> data)
      : width_(width), height_(height), channels_(channels), resolution_(res), data_(std::move(data)) {
    if (width < 0 || height < 0) throw ShapeError("raster dimensions must be non-negative");
    if (channels != 1 && channels != 3) throw ShapeError("raster channels must be 1 or 3");
    if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height) *
                            static_cast<std::size_t>(channels)) {
      throw ShapeError("raster data length does not match width x height x channels");
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  bool empty() const noexcept { return width_ == 0 || height_ == 0; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }

  const Resolution& resolution() const noexcept { return resolution_; }
  void set_resolution(Resolution res) noexcept { resolution_ = res; }

  std::size_t index(int x, int y, int c = 0) const noexcept {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(channels_) +
           static_cast<std::size_t>(c);
  }

  T& operator()(int x, int y, int c = 0) noexcept { return data_[index(x, y, c)]; }
  const T& operator()(int x, int y, int c = 0) const noexcept { return data_[index(x, y, c)]; }

  bool contains(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  std::span<T> row(int y) noexcept {
    return {data_.data() + index(0, y), static_cast<std::size_t>(width_) * static_cast<std::size_t>(channels_)};
  }
  std::span<const T> row(int y) const noexcept {
    return {data_.data() + index(0, y), static_cast<std::size_t>(width_) * static_cast<std::size_t>(channels_)};
  }

  std::vector<T>& data() noexcept { return data_; }
  const std::vector<T>& data() const noexcept { return data_; }

  bool same_shape(const Raster& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
  }
  template <RasterSample U>
  bool same_extent(const Raster<U>& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  bool operator==(const Raster&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  Resolution resolution_{};
  std::vector<T> data_;
};

using ImageU8 = Raster<std::uint8_t>;
/// Unit-interval probability map.
using ProbMap = Raster<double>;
/// Binary mask: 0 = background, anything else = foreground (1 written).
using BinaryMask = Raster<std::uint8_t>;
using LabelImage = Raster<std::int32_t>;

/// Segmentation label vocabulary.
enum class Label : std::uint8_t { other = 0, tumor = 1, stroma = 2, ignore = 255 };

inline constexpr std::uint8_t kLabelOther = 0;
inline constexpr std::uint8_t kLabelTumor = 1;
inline constexpr std::uint8_t kLabelStroma = 2;
inline constexpr std::uint8_t kLabelIgnore = 255;

/// Single-channel 8-bit raster whose samples are all in {0, 1, 2, 255}.
using LabelMask = Raster<std::uint8_t>;

/// Throws ShapeError unless every sample is in {0,1,2,255} and channels == 1.
void validate_label_mask(const LabelMask& mask);

/// Throws ValidationError if any sample lies outside [0, 1].
void validate_unit_interval(const ProbMap& map);

template <RasterSample T, RasterSample U>
void require_same_extent(const Raster<T>& a, const Raster<U>& b, const char* what) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw ShapeError(std::string(what) + ": dimension mismatch (" + std::to_string(a.width()) + "x" +
                     std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                     std::to_string(b.height()) + ")");
  }
}

/// Annotation classes 0..7 to the training label vocabulary:
/// 1 -> tumor, 2 and 6 -> stroma, 3 (in-situ tumor) -> ignore, rest -> other.
LabelMask map_annotation_labels(const ImageU8& annotated);

struct ResampleResult {
  ImageU8 raster;
  /// Set when an odd trailing row or column was dropped.
  bool dropped_odd_edge = false;
};
struct ResampleResultF {
  ProbMap raster;
  bool dropped_odd_edge = false;
};

/// 2x2 mean pooling; resolution doubles. 8-bit output is the mean rounded
/// half-up. Throws EmptyRasterError on empty input.
ResampleResult resample_half(const ImageU8& r);
ResampleResultF resample_half(const ProbMap& r);

/// 2x2 nearest-neighbour (top-left sample) decimation for label/binary masks.
ResampleResult downsample_half_nearest(const ImageU8& mask);

/// Nearest-neighbour upsampling by an integer factor, cropped or
/// edge-extended to exactly `out_width` x `out_height`.
ImageU8 upsample_nearest(const ImageU8& mask, int factor, int out_width, int out_height, Resolution out_res);

/// Number of non-zero samples of a single-channel mask.
std::size_t count_foreground(const BinaryMask& mask);

/// foreground_pixels * mpp_x * mpp_y / 1e6.
double tissue_area_mm2(const BinaryMask& tissue, const Resolution& res);
double tissue_area_mm2(std::size_t foreground_pixels, const Resolution& res);

/// Summed-area table over a binary mask for O(1) rectangle foreground counts.
class IntegralMask {
 public:
  explicit IntegralMask(const BinaryMask& mask);

  /// Foreground count in [x0, x1) x [y0, y1), clipped to the mask extent.
  std::uint64_t count(int x0, int y0, int x1, int y1) const noexcept;

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint64_t> sums_;  // (width+1) x (height+1)
};

}  // namespace tilscore
