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

#include "tilscore/detection.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <string>
#include <unordered_map>

#include "tilscore/parallel.hpp"
#include "tilscore/patch_grid.hpp"

namespace tilscore {

void validate(const DetectionConfig& cfg) {
  if (cfg.tile_size <= 0 || cfg.tile_stride <= 0 || cfg.tile_stride > cfg.tile_size) {
    throw ConfigError("detection: need tile_size >= tile_stride > 0");
  }
  if (cfg.subpatch_size <= 0 || cfg.subpatch_size > cfg.tile_size) {
    throw ConfigError("detection.subpatch_size must lie in (0, tile_size]");
  }
  if (cfg.subpatch_overlap < 0 || cfg.subpatch_overlap >= cfg.subpatch_size) {
    throw ConfigError("detection.subpatch_overlap must lie in [0, subpatch_size)");
  }
  if (!(cfg.det_threshold > 0.0 && cfg.det_threshold < 1.0)) {
    throw ConfigError("detection.det_threshold must lie in (0, 1)");
  }
  if (cfg.nms_tile <= 0) throw ConfigError("detection.nms_tile must be > 0");
  if (!(cfg.nms_radius_um > 0.0)) throw ConfigError("detection.nms_radius_um must be > 0");
  if (cfg.ensemble_size < 1) throw ConfigError("detection.ensemble_size must be >= 1");
}

std::vector<Detection> prob_map_to_detections(const ProbMap& prob_map, double threshold, double offset_x,
                                              double offset_y, Connectivity connectivity) {
  BinaryMask fg(prob_map.width(), prob_map.height(), 1, prob_map.resolution());
  for (std::size_t i = 0; i < fg.data().size(); ++i) fg.data()[i] = prob_map.data()[i] >= threshold ? 1 : 0;
  const auto labelled = connected_components(fg, &prob_map, connectivity, false);
  std::vector<Detection> out;
  out.reserve(labelled.components.size());
  for (const auto& c : labelled.components) {
    out.push_back({c.centroid_x + offset_x, c.centroid_y + offset_y, c.mean_value});
  }
  return out;
}

DetectionRun detect_slide(const ImageU8& slide, const BinaryMask& region_mask, std::span<const PredictorPtr> predictors,
                          const DetectionConfig& cfg) {
  validate(cfg);
  if (slide.channels() != 3) throw ShapeError("detect_slide: slide must be RGB");
  if (slide.empty()) throw EmptyRasterError("detect_slide: empty slide");
  require_same_extent(slide, region_mask, "detect_slide region mask");
  if (region_mask.channels() != 1) throw ShapeError("detect_slide: region mask must have one channel");
  if (predictors.empty()) throw ConfigError("detect_slide: no predictors");
  bool concurrent = true;
  for (const auto& p : predictors) {
    if (!p || p->task() != Task::detection) throw ConfigError("detect_slide: predictor is not a detection model");
    p->check_slide(slide.width(), slide.height(), slide.resolution());
    concurrent = concurrent && p->concurrent();
  }

  const int w = slide.width();
  const int h = slide.height();
  const Resolution res = slide.resolution();
  const PatchGrid tiles = plan_patch_grid(w, h, cfg.tile_size, cfg.tile_stride, 0, res);
  const PatchGrid subgrid =
      plan_patch_grid(cfg.tile_size, cfg.tile_size, cfg.subpatch_size, cfg.subpatch_stride(), 0, res);
  const IntegralMask region(region_mask);

  std::vector<std::vector<Detection>> per_tile(tiles.windows.size());
  std::vector<char> ran(tiles.windows.size(), 0);

  const auto run_tile = [&](std::size_t t) {
    const PatchOrigin tile = tiles.windows[t];
    const int tw = std::min(cfg.tile_size, w - tile.x);
    const int th = std::min(cfg.tile_size, h - tile.y);
    if (tw <= 0 || th <= 0 || region.count(tile.x, tile.y, tile.x + tw, tile.y + th) == 0) return;
    ran[t] = 1;

    ProbMap sum(tw, th, 1, res);
    std::vector<std::uint16_t> hits(static_cast<std::size_t>(tw) * static_cast<std::size_t>(th), 0);
    std::vector<PredictionMaps> members(predictors.size());
    for (const auto& sub : subgrid.windows) {
      if (sub.x >= tw || sub.y >= th) continue;  // lies entirely beyond the slide edge
      const int x0 = tile.x + sub.x;
      const int y0 = tile.y + sub.y;
      const ImageU8 patch = extract_window(slide, x0, y0, cfg.subpatch_size, cfg.subpatch_size);
      const PatchWindow window{x0, y0, cfg.subpatch_size, cfg.subpatch_size, w, h, res};
      for (std::size_t m = 0; m < predictors.size(); ++m) members[m] = predict_patch(*predictors[m], patch, window);
      const PredictionMaps mean = ensemble_average(members);
      const ProbMap& map = mean.at(TissueClass::lymphocyte);
      const int ex = std::min(cfg.subpatch_size, tw - sub.x);
      const int ey = std::min(cfg.subpatch_size, th - sub.y);
      for (int j = 0; j < ey; ++j) {
        for (int i = 0; i < ex; ++i) {
          sum(sub.x + i, sub.y + j) += map(i, j);
          ++hits[static_cast<std::size_t>(sub.y + j) * static_cast<std::size_t>(tw) + static_cast<std::size_t>(sub.x + i)];
        }
      }
    }
    for (std::size_t i = 0; i < hits.size(); ++i) {
      if (hits[i] > 0) sum.data()[i] = std::min(1.0, sum.data()[i] / hits[i]);
    }

    auto found = prob_map_to_detections(sum, cfg.det_threshold, tile.x, tile.y, cfg.connectivity);
    auto& kept = per_tile[t];
    for (const auto& d : found) {
      const auto px = static_cast<int>(std::lround(d.x));
      const auto py = static_cast<int>(std::lround(d.y));
      if (region_mask.contains(px, py) && region_mask(px, py) != 0) kept.push_back(d);
    }
  };

  if (concurrent) {
    parallel_for(tiles.windows.size(), run_tile);
  } else {
    for (std::size_t t = 0; t < tiles.windows.size(); ++t) run_tile(t);
  }

  DetectionRun result;
  result.tiles_total = tiles.windows.size();
  for (std::size_t t = 0; t < per_tile.size(); ++t) {
    result.tiles_run += ran[t] != 0 ? 1 : 0;
    result.detections.insert(result.detections.end(), per_tile[t].begin(), per_tile[t].end());
  }
  return result;
}

namespace {

std::int64_t cell_key(std::int64_t cx, std::int64_t cy) { return (cx << 32) ^ (cy & 0xFFFFFFFF); }

}  // namespace

std::vector<Detection> nms(std::span<const Detection> detections, const DetectionConfig& cfg, const Resolution& res) {
  validate(cfg);
  validate(res);
  const std::size_t n = detections.size();
  if (n == 0) return {};

  // Priority rank: probability descending, then lower y, then lower x.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& da = detections[a];
    const auto& db = detections[b];
    if (da.probability != db.probability) return da.probability > db.probability;
    if (da.y != db.y) return da.y < db.y;
    if (da.x != db.x) return da.x < db.x;
    return a < b;
  });
  std::vector<std::size_t> rank(n);
  for (std::size_t r = 0; r < n; ++r) rank[order[r]] = r;

  const double r2 = cfg.nms_radius_um * cfg.nms_radius_um;
  const auto within = [&](std::size_t a, std::size_t b) {
    const double dx = (detections[a].x - detections[b].x) * res.mpp_x;
    const double dy = (detections[a].y - detections[b].y) * res.mpp_y;
    return dx * dx + dy * dy <= r2;
  };

  // Neighbour lookup through a hash grid whose cells span the radius.
  const double cell_x = cfg.nms_radius_um / res.mpp_x;
  const double cell_y = cfg.nms_radius_um / res.mpp_y;
  std::unordered_map<std::int64_t, std::vector<std::size_t>> cells;
  std::vector<std::pair<std::int64_t, std::int64_t>> cell_of(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto cx = static_cast<std::int64_t>(std::floor(detections[i].x / cell_x));
    const auto cy = static_cast<std::int64_t>(std::floor(detections[i].y / cell_y));
    cell_of[i] = {cx, cy};
    cells[cell_key(cx, cy)].push_back(i);
  }

  // Work partition: nms_tile buckets. A bucket's neighbourhood queries read
  // the radius halo from adjacent buckets through the shared hash grid.
  std::unordered_map<std::int64_t, std::size_t> bucket_index;
  std::vector<std::vector<std::size_t>> buckets;
  for (const std::size_t i : order) {
    const auto bx = static_cast<std::int64_t>(std::floor(detections[i].x / cfg.nms_tile));
    const auto by = static_cast<std::int64_t>(std::floor(detections[i].y / cfg.nms_tile));
    const auto [it, inserted] = bucket_index.try_emplace(cell_key(bx, by), buckets.size());
    if (inserted) buckets.emplace_back();
    buckets[it->second].push_back(i);
  }

  std::vector<std::vector<std::size_t>> neighbours(n);
  parallel_for(buckets.size(), [&](std::size_t b) {
    for (const std::size_t i : buckets[b]) {
      const auto [cx, cy] = cell_of[i];
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        for (std::int64_t dx = -1; dx <= 1; ++dx) {
          const auto it = cells.find(cell_key(cx + dx, cy + dy));
          if (it == cells.end()) continue;
          for (const std::size_t j : it->second) {
            if (j != i && within(i, j)) neighbours[i].push_back(j);
          }
        }
      }
    }
  });

  enum : std::uint8_t { kUndecided = 0, kKept = 1, kSuppressed = 2 };
  std::vector<std::uint8_t> state(n, kUndecided);
  std::vector<std::uint8_t> accepted(n, 0);
  std::size_t undecided = n;
  while (undecided > 0) {
    // A detection outranking every undecided neighbour is kept by the
    // sequential greedy pass as well.
    parallel_for(buckets.size(), [&](std::size_t b) {
      for (const std::size_t i : buckets[b]) {
        if (state[i] != kUndecided) continue;
        bool local_max = true;
        for (const std::size_t j : neighbours[i]) {
          if (state[j] == kUndecided && rank[j] < rank[i]) {
            local_max = false;
            break;
          }
        }
        accepted[i] = local_max ? 1 : 0;
      }
    });
    parallel_for(buckets.size(), [&](std::size_t b) {
      for (const std::size_t i : buckets[b]) {
        if (state[i] != kUndecided) continue;
        if (accepted[i] != 0) {
          state[i] = kKept;
          continue;
        }
        for (const std::size_t j : neighbours[i]) {
          if (accepted[j] != 0) {
            state[i] = kSuppressed;
            break;
          }
        }
      }
    });
    std::size_t remaining = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (state[i] == kUndecided) ++remaining;
      accepted[i] = 0;
    }
    undecided = remaining;
  }

  std::vector<Detection> out;
  for (const std::size_t i : order) {
    if (state[i] == kKept) out.push_back(detections[i]);
  }
  return out;
}

void sort_by_position(std::vector<Detection>& detections) {
  std::sort(detections.begin(), detections.end(), [](const Detection& a, const Detection& b) {
    if (a.y != b.y) return a.y < b.y;
    if (a.x != b.x) return a.x < b.x;
    return a.probability > b.probability;
  });
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  for (auto& f : fields) {
    while (!f.empty() && (f.back() == '\r' || f.back() == ' ')) f.pop_back();
    while (!f.empty() && f.front() == ' ') f.erase(f.begin());
  }
  return fields;
}

double parse_double(const std::string& text, const std::filesystem::path& path, std::size_t line_no) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": invalid number '" + text + "'");
  }
  return v;
}

std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path, std::size_t min_columns,
                                                  const std::string& first_header) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (!header_seen) {
      header_seen = true;
      if (fields.empty() || fields[0] != first_header) {
        throw ValidationError(path.string() + ": expected header starting with '" + first_header + "'");
      }
      continue;
    }
    if (fields.size() < min_columns) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(min_columns) + " columns");
    }
    std::vector<double> values;
    for (std::size_t c = 0; c < min_columns; ++c) values.push_back(parse_double(fields[c], path, line_no));
    rows.push_back(std::move(values));
  }
  if (!header_seen) throw ValidationError(path.string() + ": missing CSV header");
  return rows;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

void write_detections_csv(const std::filesystem::path& path, std::vector<Detection> detections) {
  sort_by_position(detections);
  std::string text = "x_px,y_px,probability\n";
  char buf[128];
  for (const auto& d : detections) {
    std::snprintf(buf, sizeof(buf), "%.3f,%.3f,%.6f\n", d.x, d.y, d.probability);
    text += buf;
  }
  write_text(path, text);
}

std::vector<Detection> read_detections_csv(const std::filesystem::path& path) {
  std::vector<Detection> out;
  for (const auto& row : read_numeric_csv(path, 3, "x_px")) {
    if (!(row[2] >= 0.0 && row[2] <= 1.0)) throw ValidationError(path.string() + ": probability outside [0, 1]");
    out.push_back({row[0], row[1], row[2]});
  }
  return out;
}

std::vector<PointXY> read_points_csv(const std::filesystem::path& path) {
  std::vector<PointXY> out;
  for (const auto& row : read_numeric_csv(path, 2, "x_px")) out.push_back({row[0], row[1]});
  return out;
}

void write_points_csv(const std::filesystem::path& path, std::span<const PointXY> points) {
  std::string text = "x_px,y_px\n";
  char buf[96];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof(buf), "%.3f,%.3f\n", p.x, p.y);
    text += buf;
  }
  write_text(path, text);
}

}  // namespace tilscore
