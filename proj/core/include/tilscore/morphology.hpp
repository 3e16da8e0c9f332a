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

/// @file morphology.hpp
/// @brief Binary morphology with disc structuring elements, hole filling and
/// connected-component labelling.

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tilscore/raster.hpp"

namespace tilscore {

struct Offset {
  int dx = 0;
  int dy = 0;
  bool operator==(const Offset&) const = default;
};

/// Element as a set of integer offsets. For every dy present the offsets of
/// that row must form a contiguous dx run (true for discs); morphology is
/// evaluated run-by-run.
struct StructuringElement {
  int radius = 0;
  std::vector<Offset> offsets;
};

/// All integer offsets with dx^2 + dy^2 <= radius^2, row-major.
StructuringElement disc_element(int radius);

enum class MorphOp { dilate, erode, open, close };

/// Pixels outside the mask are background. dilate is the Minkowski sum with
/// the element, erode its dual, open = erode then dilate, close = dilate
/// then erode. Output samples are 0/1.
BinaryMask binary_morphology(const BinaryMask& mask, const StructuringElement& element, MorphOp op);

inline BinaryMask dilate(const BinaryMask& m, const StructuringElement& e) {
  return binary_morphology(m, e, MorphOp::dilate);
}
inline BinaryMask erode(const BinaryMask& m, const StructuringElement& e) {
  return binary_morphology(m, e, MorphOp::erode);
}
inline BinaryMask open(const BinaryMask& m, const StructuringElement& e) {
  return binary_morphology(m, e, MorphOp::open);
}

/// Sets every background pixel not 4-connected to the image border.
BinaryMask fill_holes(const BinaryMask& mask);

struct Component {
  int id = 0;  ///< 1-based; matches the value in the label image
  std::int64_t area = 0;
  double centroid_x = 0.0;
  double centroid_y = 0.0;
  int min_x = 0;
  int min_y = 0;
  int max_x = 0;
  int max_y = 0;
  /// First pixel in raster order, i.e. the (min y, min x) pixel.
  int first_x = 0;
  int first_y = 0;
  /// Mean of the associated probability map over the component (0 when no
  /// map was supplied).
  double mean_value = 0.0;
};

struct ComponentLabels {
  /// 0 = background, k = pixel of components[k - 1]. Empty unless requested.
  LabelImage labels;
  /// Ordered by the raster-order position of each component's first pixel.
  std::vector<Component> components;
};

enum class Connectivity { four = 4, eight = 8 };

/// Foreground partition into connected components. Throws ShapeError when
/// `prob_map` is given with different dimensions.
ComponentLabels connected_components(const BinaryMask& mask, const ProbMap* prob_map = nullptr,
                                     Connectivity connectivity = Connectivity::eight, bool keep_labels = false);

/// Removes components with fewer than `min_area` pixels.
BinaryMask remove_small_components(const BinaryMask& mask, std::int64_t min_area,
                                   Connectivity connectivity = Connectivity::eight);

/// Foreground pixels with at least one 4-neighbour that is background or
/// outside the raster.
BinaryMask boundary_pixels(const BinaryMask& mask);

}  // namespace tilscore
