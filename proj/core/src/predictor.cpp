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

#include "tilscore/predictor.hpp"

#include <algorithm>
#include <cmath>

#include "tilscore/raster_io.hpp"

namespace tilscore {

std::string_view class_name(TissueClass c) noexcept {
  switch (c) {
    case TissueClass::tumor: return "tumor";
    case TissueClass::stroma: return "stroma";
    case TissueClass::lymphocyte: return "lymphocyte";
  }
  return "unknown";
}

std::string_view kind_name(PredictorKind k) noexcept {
  switch (k) {
    case PredictorKind::constant: return "constant";
    case PredictorKind::identity: return "identity";
    case PredictorKind::file_backed: return "file_backed";
    case PredictorKind::intensity_heuristic: return "intensity_heuristic";
  }
  return "unknown";
}

std::vector<TissueClass> task_classes(Task task) {
  if (task == Task::segmentation) return {TissueClass::tumor, TissueClass::stroma};
  return {TissueClass::lymphocyte};
}

const ProbMap& PredictionMaps::at(TissueClass c) const {
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i] == c) return maps[i];
  }
  throw ConfigError("prediction maps have no class '" + std::string(class_name(c)) + "'");
}

ProbMap& PredictionMaps::at(TissueClass c) {
  return const_cast<ProbMap&>(std::as_const(*this).at(c));
}

std::vector<double> normalize_patch(const ImageU8& patch, const Normalization& norm) {
  if (patch.channels() != 3) throw ShapeError("normalize_patch: patch must be RGB");
  std::vector<double> out(patch.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto c = i % 3;
    const double v = patch.data()[i] / 255.0;
    out[i] = norm.enabled ? (v - norm.mean[c]) / norm.std[c] : v;
  }
  return out;
}

namespace {

PredictionMaps blank_maps(Task task, int w, int h, const Resolution& res, double fill = 0.0) {
  PredictionMaps out;
  out.classes = task_classes(task);
  for (std::size_t i = 0; i < out.classes.size(); ++i) out.maps.emplace_back(w, h, 1, res, fill);
  return out;
}

class ConstantPredictor final : public PatchPredictor {
 public:
  ConstantPredictor(Task task, std::vector<double> values) : task_(task), values_(std::move(values)) {}

  Task task() const noexcept override { return task_; }
  std::string describe() const override { return "constant"; }

  PredictionMaps predict(const ImageU8& patch, const PatchWindow& window) const override {
    auto out = blank_maps(task_, patch.width(), patch.height(), window.resolution);
    for (std::size_t i = 0; i < out.maps.size(); ++i) {
      const double v = values_.size() == 1 ? values_[0] : values_[i];
      std::fill(out.maps[i].data().begin(), out.maps[i].data().end(), v);
    }
    return out;
  }

 private:
  Task task_;
  std::vector<double> values_;
};

class IdentityPredictor final : public PatchPredictor {
 public:
  explicit IdentityPredictor(Task task) : task_(task) {}

  Task task() const noexcept override { return task_; }
  std::string describe() const override { return "identity"; }

  PredictionMaps predict(const ImageU8& patch, const PatchWindow& window) const override {
    auto out = blank_maps(task_, patch.width(), patch.height(), window.resolution);
    const int green = patch.channels() == 3 ? 1 : 0;
    for (auto& map : out.maps) {
      for (int y = 0; y < patch.height(); ++y) {
        for (int x = 0; x < patch.width(); ++x) map(x, y) = patch(x, y, green) / 255.0;
      }
    }
    return out;
  }

 private:
  Task task_;
};

class IntensityHeuristicPredictor final : public PatchPredictor {
 public:
  IntensityHeuristicPredictor(double dark_threshold, double blue_margin)
      : dark_threshold_(dark_threshold), blue_margin_(blue_margin) {}

  Task task() const noexcept override { return Task::detection; }
  std::string describe() const override { return "intensity_heuristic"; }

  PredictionMaps predict(const ImageU8& patch, const PatchWindow& window) const override {
    auto out = blank_maps(Task::detection, patch.width(), patch.height(), window.resolution);
    auto& map = out.maps.front();
    for (int y = 0; y < patch.height(); ++y) {
      for (int x = 0; x < patch.width(); ++x) {
        const double r = patch(x, y, 0);
        const double g = patch(x, y, 1);
        const double b = patch(x, y, 2);
        const double luminance = 0.299 * r + 0.587 * g + 0.114 * b;
        const bool blue = b > r + blue_margin_ && b > g + blue_margin_;
        map(x, y) = (luminance < dark_threshold_ && blue) ? 1.0 : 0.0;
      }
    }
    return out;
  }

 private:
  double dark_threshold_;
  double blue_margin_;
};

class FileBackedPredictor final : public PatchPredictor {
 public:
  FileBackedPredictor(Task task, std::map<TissueClass, ImageU8> sources) : task_(task), sources_(std::move(sources)) {
    const auto classes = task_classes(task);
    for (const auto c : classes) {
      const auto it = sources_.find(c);
      if (it == sources_.end()) {
        throw ConfigError("file_backed predictor has no source for class '" + std::string(class_name(c)) + "'");
      }
      if (it->second.channels() != 1 || it->second.empty()) {
        throw ConfigError("file_backed source for '" + std::string(class_name(c)) + "' must be a non-empty gray raster");
      }
      validate(it->second.resolution());
    }
  }

  Task task() const noexcept override { return task_; }
  std::string describe() const override { return "file_backed"; }

  void check_slide(int width, int height, const Resolution& res) const override {
    for (const auto& [cls, src] : sources_) {
      const double fx = res.mpp_x / src.resolution().mpp_x;
      const double fy = res.mpp_y / src.resolution().mpp_y;
      if (std::ceil(width * fx - 1e-9) > src.width() || std::ceil(height * fy - 1e-9) > src.height()) {
        throw ConfigError("file_backed source for '" + std::string(class_name(cls)) + "' (" +
                          std::to_string(src.width()) + "x" + std::to_string(src.height()) +
                          ") does not cover the slide");
      }
    }
  }

  PredictionMaps predict(const ImageU8& patch, const PatchWindow& window) const override {
    auto out = blank_maps(task_, patch.width(), patch.height(), window.resolution);
    for (std::size_t i = 0; i < out.classes.size(); ++i) {
      crop(sources_.at(out.classes[i]), window, out.maps[i]);
    }
    return out;
  }

 private:
  static int integer_factor(double ratio) {
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9) {
      throw ConfigError("file_backed source resolution must divide the patch resolution by an integer factor");
    }
    return static_cast<int>(rounded);
  }

  /// Mean-pools the source by the resolution factor over the window. Window
  /// samples outside the slide extent stay zero; samples inside the extent
  /// but not covered by the source are an error.
  static void crop(const ImageU8& src, const PatchWindow& window, ProbMap& dst) {
    const int fx = integer_factor(window.resolution.mpp_x / src.resolution().mpp_x);
    const int fy = integer_factor(window.resolution.mpp_y / src.resolution().mpp_y);
    const double norm = 1.0 / (255.0 * fx * fy);
    for (int j = 0; j < window.height; ++j) {
      const int py = window.y0 + j;
      if (py < 0 || py >= window.extent_height) continue;
      for (int i = 0; i < window.width; ++i) {
        const int px = window.x0 + i;
        if (px < 0 || px >= window.extent_width) continue;
        const int sx = px * fx;
        const int sy = py * fy;
        if (sx + fx > src.width() || sy + fy > src.height()) {
          throw OutOfBoundsError("file_backed window at (" + std::to_string(window.x0) + ", " +
                                 std::to_string(window.y0) + ") reads outside its source");
        }
        unsigned sum = 0;
        for (int b = 0; b < fy; ++b) {
          const auto row = src.row(sy + b);
          for (int a = 0; a < fx; ++a) sum += row[static_cast<std::size_t>(sx + a)];
        }
        dst(i, j) = fx * fy == 1 ? sum / 255.0 : sum * norm;
      }
    }
  }

  Task task_;
  std::map<TissueClass, ImageU8> sources_;
};

}  // namespace

PredictorPtr make_file_backed_predictor(std::map<TissueClass, ImageU8> sources, Task task) {
  return std::make_shared<FileBackedPredictor>(task, std::move(sources));
}

PredictorPtr make_builtin_predictor(const PredictorSpec& spec, Task task) {
  const auto classes = task_classes(task);
  switch (spec.kind) {
    case PredictorKind::constant: {
      if (spec.constant_values.size() != 1 && spec.constant_values.size() != classes.size()) {
        throw ConfigError("constant predictor needs 1 or " + std::to_string(classes.size()) + " values");
      }
      for (const double v : spec.constant_values) {
        if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("constant predictor value outside [0, 1]");
      }
      return std::make_shared<ConstantPredictor>(task, spec.constant_values);
    }
    case PredictorKind::identity: return std::make_shared<IdentityPredictor>(task);
    case PredictorKind::intensity_heuristic:
      if (task != Task::detection) throw ConfigError("intensity_heuristic predictor only serves detection");
      return std::make_shared<IntensityHeuristicPredictor>(spec.dark_threshold, spec.blue_margin);
    case PredictorKind::file_backed: {
      if (spec.source_prefix.empty()) throw ConfigError("file_backed predictor needs a source prefix");
      std::map<TissueClass, ImageU8> sources;
      for (const auto c : classes) {
        std::filesystem::path path = spec.source_prefix;
        path += "." + std::string(class_name(c)) + ".png";
        if (!std::filesystem::exists(path)) throw IoError("file_backed source not found: " + path.string());
        auto loaded = load_raster(path);
        if (loaded.raster.channels() != 1) throw ConfigError("file_backed source must be grayscale: " + path.string());
        sources.emplace(c, std::move(loaded.raster));
      }
      return std::make_shared<FileBackedPredictor>(task, std::move(sources));
    }
  }
  throw ConfigError("unknown predictor kind");
}

PredictionMaps predict_patch(const PatchPredictor& predictor, const ImageU8& patch, const PatchWindow& window) {
  if (patch.channels() != 3) throw ShapeError("predict_patch: patch must be RGB");
  if (patch.width() != window.width || patch.height() != window.height) {
    throw ShapeError("predict_patch: patch does not match its window");
  }
  auto out = predictor.predict(patch, window);
  if (out.classes != task_classes(predictor.task()) || out.maps.size() != out.classes.size()) {
    throw ConfigError("predictor '" + predictor.describe() + "' returned an unexpected class set");
  }
  for (const auto& m : out.maps) {
    if (m.width() != patch.width() || m.height() != patch.height() || m.channels() != 1) {
      throw ShapeError("predictor '" + predictor.describe() + "' returned a map of the wrong extent");
    }
    validate_unit_interval(m);
  }
  return out;
}

PredictionMaps ensemble_average(std::span<const PredictionMaps> members) {
  if (members.empty()) throw ConfigError("ensemble_average: no members");
  const auto& first = members.front();
  for (const auto& m : members) {
    if (m.classes != first.classes || m.maps.size() != first.maps.size()) {
      throw ConfigError("ensemble_average: class sets differ between members");
    }
    for (std::size_t c = 0; c < m.maps.size(); ++c) {
      if (!m.maps[c].same_shape(first.maps[c])) throw ShapeError("ensemble_average: member extents differ");
    }
  }
  if (members.size() == 1) return first;

  PredictionMaps out = first;
  const auto count = static_cast<double>(members.size());
  for (std::size_t c = 0; c < out.maps.size(); ++c) {
    auto& dst = out.maps[c].data();
    for (std::size_t i = 0; i < dst.size(); ++i) {
      double sum = 0.0;
      double lo = first.maps[c].data()[i];
      double hi = lo;
      for (const auto& m : members) {
        const double v = m.maps[c].data()[i];
        sum += v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      dst[i] = std::clamp(sum / count, lo, hi);
    }
  }
  return out;
}

}  // namespace tilscore
