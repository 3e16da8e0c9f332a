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

#include "tilscore_cli/synth.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>

#include "json.hpp"
#include "tilscore/detection.hpp"
#include "tilscore/error.hpp"
#include "tilscore/raster_io.hpp"

namespace tilscore::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Rgb = std::array<std::uint8_t, 3>;

constexpr Rgb kBackground{240, 240, 240};
constexpr Rgb kTissue{230, 200, 210};
constexpr Rgb kStroma{235, 160, 190};
constexpr Rgb kTumor{150, 90, 170};
constexpr Rgb kLymphocyte{40, 40, 120};

struct Rect {
  int x0, y0, x1, y1;
  std::int64_t area() const { return static_cast<std::int64_t>(x1 - x0) * (y1 - y0); }
  bool contains(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
};

void fill(ImageU8& img, const Rect& r, std::uint8_t v) {
  for (int y = r.y0; y < r.y1; ++y) std::fill_n(img.row(y).begin() + r.x0, r.x1 - r.x0, v);
}

void fill(ImageU8& img, const Rect& r, const Rgb& c) {
  for (int y = r.y0; y < r.y1; ++y) {
    for (int x = r.x0; x < r.x1; ++x) {
      for (int k = 0; k < 3; ++k) img(x, y, k) = c[static_cast<std::size_t>(k)];
    }
  }
}

template <typename F>
void for_disc(int cx, int cy, int r, F&& f) {
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      if (dx * dx + dy * dy <= r * r) f(cx + dx, cy + dy, dx * dx + dy * dy);
    }
  }
}

/// All maps of one synthetic slide.
struct Canvas {
  ImageU8 slide, tissue, labels, tumor, stroma, lymphocyte;

  Canvas(int w, int h, Resolution res)
      : slide(w, h, 3, res), tissue(w, h, 1, res), labels(w, h, 1, res), tumor(w, h, 1, res), stroma(w, h, 1, res),
        lymphocyte(w, h, 1, res) {
    fill(slide, {0, 0, w, h}, kBackground);
  }

  void add_tissue(const Rect& r) {
    fill(tissue, r, std::uint8_t{1});
    fill(slide, r, kTissue);
  }
  void add_tumor(const Rect& r) {
    fill(labels, r, kLabelTumor);
    fill(tumor, r, std::uint8_t{255});
    fill(stroma, r, std::uint8_t{0});
    fill(slide, r, kTumor);
  }
  void add_stroma(const Rect& r) {
    fill(labels, r, kLabelStroma);
    fill(stroma, r, std::uint8_t{255});
    fill(tumor, r, std::uint8_t{0});
    fill(slide, r, kStroma);
  }
  void add_til(int x, int y, int radius, std::uint8_t prob) {
    for_disc(x, y, radius, [&](int px, int py, int) {
      lymphocyte(px, py) = prob;
      for (int k = 0; k < 3; ++k) slide(px, py, k) = kLymphocyte[static_cast<std::size_t>(k)];
    });
  }

  void write(const fs::path& out, std::vector<std::string>& files) const {
    save_raster(slide, out / "slide.png");
    save_raster(tissue, out / "tissue.png");
    save_raster(labels, out / "gt_labels.png");
    save_raster(tumor, out / "slide.tumor.png");
    save_raster(stroma, out / "slide.stroma.png");
    save_raster(lymphocyte, out / "slide.lymphocyte.png");
    for (const char* f : {"slide", "tissue", "gt_labels", "slide.tumor", "slide.stroma", "slide.lymphocyte"}) {
      files.push_back(std::string(f) + ".png");
      files.push_back(std::string(f) + ".res");
    }
  }
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

constexpr char kModelsConfig[] =
    "# file-backed probability maps written next to the slide\n"
    "segmentation.models = file_backed:slide\n"
    "detection.models = file_backed:slide\n";

/// Jittered grid of TIL centres inside `r`, `count` of them chosen at random.
std::vector<PointXY> til_grid(std::mt19937_64& rng, const Rect& r, int spacing, int offset, int jitter,
                              std::size_t count) {
  std::uniform_int_distribution<int> jit(-jitter, jitter);
  std::vector<PointXY> grid;
  for (int y = r.y0 + offset; y + offset <= r.y1; y += spacing) {
    for (int x = r.x0 + offset; x + offset <= r.x1; x += spacing) {
      const int jx = jit(rng);
      const int jy = jit(rng);
      grid.push_back({static_cast<double>(x + jx), static_cast<double>(y + jy)});
    }
  }
  if (grid.size() < count) throw Error("til_grid: region too small for the requested count");
  std::shuffle(grid.begin(), grid.end(), rng);
  grid.resize(count);
  std::sort(grid.begin(), grid.end(), [](const PointXY& a, const PointXY& b) {
    return a.y != b.y ? a.y < b.y : a.x < b.x;
  });
  return grid;
}

constexpr int kTilRadius = 3;
constexpr std::uint8_t kTilProb = 230;
constexpr double kMpp = 0.5;
constexpr double kTilAreaUm2 = 16.0;

std::vector<std::string> synth_slide_l2(std::uint64_t seed, const fs::path& out) {
  std::mt19937_64 rng(seed);
  const Resolution res{kMpp, kMpp};
  constexpr int kSize = 5000;
  Canvas c(kSize, kSize, res);
  const Rect tissue{50, 50, 4950, 4950};
  const Rect frame_outer{1100, 1100, 2100, 2100};
  const Rect frame_inner{1200, 1200, 2000, 2000};
  const Rect distractor{2600, 600, 4600, 4400};
  c.add_tissue(tissue);
  c.add_tumor(frame_outer);
  c.add_stroma(frame_inner);
  c.add_stroma(distractor);

  const auto in_bulk = til_grid(rng, frame_inner, 25, 12, 2, 1000);
  const auto outside = til_grid(rng, distractor, 40, 20, 2, 200);
  std::vector<PointXY> all;
  for (const auto* set : {&in_bulk, &outside}) {
    for (const auto& p : *set) {
      c.add_til(static_cast<int>(p.x), static_cast<int>(p.y), kTilRadius, kTilProb);
      all.push_back(p);
    }
  }

  std::vector<std::string> files;
  c.write(out, files);
  write_points_csv(out / "til_points.csv", all);
  write_text(out / "config.cfg", kModelsConfig);

  // Independent arithmetic: the bulk is the tumor frame plus its enclosed
  // stroma, so stroma-in-bulk is exactly the frame interior.
  const auto til_count = static_cast<std::int64_t>(std::count_if(
      all.begin(), all.end(), [&](const PointXY& p) { return frame_inner.contains(static_cast<int>(p.x), static_cast<int>(p.y)); }));
  const double stroma_um2 = static_cast<double>(frame_inner.area()) * kMpp * kMpp;
  const double tissue_mm2 = static_cast<double>(tissue.area()) * kMpp * kMpp / 1e6;
  const auto score = static_cast<int>(til_count * static_cast<std::int64_t>(kTilAreaUm2) * 100 /
                                      static_cast<std::int64_t>(stroma_um2));
  write_json(out / "expected.json", {{"scenario", "slide_l2"},
                                     {"seed", seed},
                                     {"branch", "L2"},
                                     {"tissue_area_mm2", tissue_mm2},
                                     {"stroma_in_bulk_area_um2", stroma_um2},
                                     {"til_count", til_count},
                                     {"planted_tils_total", all.size()},
                                     {"tils_score", score}});
  files.insert(files.end(), {"til_points.csv", "config.cfg", "expected.json"});
  return files;
}

std::vector<std::string> synth_roi_small(std::uint64_t seed, const fs::path& out) {
  std::mt19937_64 rng(seed);
  const Resolution res{kMpp, kMpp};
  constexpr int kSize = 2000;
  Canvas c(kSize, kSize, res);
  const Rect tissue{100, 100, 1900, 1900};
  const Rect tumor{300, 300, 900, 900};
  const Rect stroma{1000, 300, 1700, 1700};
  c.add_tissue(tissue);
  c.add_tumor(tumor);
  c.add_stroma(stroma);
  const auto tils = til_grid(rng, stroma, 30, 15, 3, 150);
  for (const auto& p : tils) c.add_til(static_cast<int>(p.x), static_cast<int>(p.y), kTilRadius, kTilProb);

  std::vector<std::string> files;
  c.write(out, files);
  write_points_csv(out / "til_points.csv", tils);
  write_text(out / "config.cfg", kModelsConfig);
  const double tissue_mm2 = static_cast<double>(tissue.area()) * kMpp * kMpp / 1e6;
  write_json(out / "expected.json", {{"scenario", "roi_small"},
                                     {"seed", seed},
                                     {"branch", tissue_mm2 < 5.0 ? "L1" : "L2"},
                                     {"tissue_area_mm2", tissue_mm2},
                                     {"til_count", tils.size()}});
  files.insert(files.end(), {"til_points.csv", "config.cfg", "expected.json"});
  return files;
}

std::vector<std::string> synth_detection_blobs(std::uint64_t seed, const fs::path& out) {
  const BlobField field = make_blob_field(seed, 512, 512);
  const Resolution res{kMpp, kMpp};
  ImageU8 slide(512, 512, 3, res);
  fill(slide, {0, 0, 512, 512}, kStroma);
  for (const auto& b : field.blobs) {
    for_disc(b.x, b.y, b.radius, [&](int x, int y, int) {
      for (int k = 0; k < 3; ++k) slide(x, y, k) = kLymphocyte[static_cast<std::size_t>(k)];
    });
  }
  ImageU8 tissue(512, 512, 1, res, 1);
  ImageU8 lymph = field.map;
  lymph.set_resolution(res);
  save_raster(slide, out / "slide.png");
  save_raster(tissue, out / "tissue.png");
  save_raster(lymph, out / "slide.lymphocyte.png");
  std::vector<PointXY> pts;
  json blobs = json::array();
  for (const auto& b : field.blobs) {
    pts.push_back({static_cast<double>(b.x), static_cast<double>(b.y)});
    blobs.push_back({{"x", b.x}, {"y", b.y}, {"radius", b.radius}, {"probability", b.mean_probability}});
  }
  write_points_csv(out / "til_points.csv", pts);
  write_text(out / "config.cfg", "detection.models = file_backed:slide\n");
  write_json(out / "expected.json",
             {{"scenario", "detection_blobs"}, {"seed", seed}, {"count", field.blobs.size()}, {"blobs", blobs}});
  return {"config.cfg",         "expected.json",         "slide.lymphocyte.png", "slide.lymphocyte.res", "slide.png",
          "slide.res",          "til_points.csv",        "tissue.png",           "tissue.res"};
}

std::string shortest(double v) {
  std::array<char, 64> buf{};
  const auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), p);
}

std::vector<std::string> synth_survival_cohort(std::uint64_t seed, const fs::path& out) {
  const auto cohort = make_survival_cohort(seed, 200, 0.7);
  std::string csv = "case_id,risk,time,event\n";
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "case%03zu", i);
    csv += std::string(id) + "," + shortest(cohort[i].risk_score) + "," + shortest(cohort[i].time) + "," +
           (cohort[i].event ? "1" : "0") + "\n";
  }
  write_text(out / "cohort.csv", csv);
  const auto events = std::count_if(cohort.begin(), cohort.end(), [](const SurvivalRecord& r) { return r.event; });
  write_json(out / "expected.json", {{"scenario", "survival_cohort"},
                                     {"seed", seed},
                                     {"n", cohort.size()},
                                     {"events", events},
                                     {"c_index", brute_force_concordance(cohort)}});
  return {"cohort.csv", "expected.json"};
}

}  // namespace

const std::vector<std::string>& synth_scenarios() {
  static const std::vector<std::string> names{"detection_blobs", "roi_small", "slide_l2", "survival_cohort"};
  return names;
}

std::vector<std::string> run_synth(std::string_view scenario, std::uint64_t seed, const fs::path& out) {
  const auto& names = synth_scenarios();
  if (std::find(names.begin(), names.end(), scenario) == names.end()) {
    throw ValidationError("unknown synth scenario '" + std::string(scenario) + "'");
  }
  fs::create_directories(out);
  std::vector<std::string> files;
  if (scenario == "slide_l2") {
    files = synth_slide_l2(seed, out);
  } else if (scenario == "roi_small") {
    files = synth_roi_small(seed, out);
  } else if (scenario == "detection_blobs") {
    files = synth_detection_blobs(seed, out);
  } else {
    files = synth_survival_cohort(seed, out);
  }
  std::sort(files.begin(), files.end());
  return files;
}

BlobField make_blob_field(std::uint64_t seed, int width, int height) {
  std::mt19937_64 rng(seed);
  BlobField field{ImageU8(width, height, 1, Resolution{kMpp, kMpp}), {}};
  std::uniform_int_distribution<int> count_dist(5, 15);
  std::uniform_int_distribution<int> radius_dist(3, 6);
  const int target = count_dist(rng);
  for (int attempt = 0; attempt < 10000 && static_cast<int>(field.blobs.size()) < target; ++attempt) {
    const int r = radius_dist(rng);
    std::uniform_int_distribution<int> xd(r + 2, width - r - 3);
    std::uniform_int_distribution<int> yd(r + 2, height - r - 3);
    const int x = xd(rng);
    const int y = yd(rng);
    const bool clear = std::all_of(field.blobs.begin(), field.blobs.end(), [&](const PlantedBlob& b) {
      const double d = std::hypot(static_cast<double>(x - b.x), static_cast<double>(y - b.y));
      return d >= r + b.radius + 4;
    });
    if (!clear) continue;
    double sum = 0.0;
    int n = 0;
    for_disc(x, y, r, [&](int px, int py, int d2) {
      const auto v = static_cast<std::uint8_t>(250 - 120 * d2 / (r * r));
      field.map(px, py) = v;
      sum += v;
      ++n;
    });
    field.blobs.push_back({x, y, r, sum / (255.0 * n)});
  }
  return field;
}

std::vector<SurvivalRecord> make_survival_cohort(std::uint64_t seed, std::size_t n, double beta) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> covariate(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> censor(0.0, 30.0);
  std::vector<SurvivalRecord> out(n);
  for (auto& r : out) {
    const double x = std::round(covariate(rng) * 1000.0) / 1000.0;
    const double t = -std::log(1.0 - unit(rng)) / (0.1 * std::exp(beta * x));
    const double c = censor(rng);
    r.risk_score = x;
    r.event = t <= c;
    r.time = std::max(0.1, std::round(std::min(t, c) * 10.0) / 10.0);
  }
  return out;
}

double brute_force_concordance(const std::vector<SurvivalRecord>& records) {
  std::int64_t concordant = 0;
  std::int64_t tied = 0;
  std::int64_t comparable = 0;
  for (const auto& a : records) {
    if (!a.event) continue;
    for (const auto& b : records) {
      if (!(a.time < b.time)) continue;
      ++comparable;
      if (a.risk_score > b.risk_score) ++concordant;
      if (a.risk_score == b.risk_score) ++tied;
    }
  }
  if (comparable == 0) throw UndefinedMetricError("no comparable pairs");
  return (static_cast<double>(concordant) + 0.5 * static_cast<double>(tied)) / static_cast<double>(comparable);
}

}  // namespace tilscore::cli
