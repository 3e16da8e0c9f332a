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

#include "tilscore/raster_io.hpp"

#include <png.h>
#include <zlib.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

namespace tilscore {

namespace {

constexpr std::array<std::uint8_t, 8> kPngSignature = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};

std::uint32_t read_be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
}

bool is_chunk_letter(std::uint8_t c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z'); }

/// Walks the chunk structure and returns the offset of the first IDAT chunk.
/// libpng reports errors without positions, so structural damage is located
/// here first.
std::size_t validate_chunks(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kPngSignature.size() ||
      std::memcmp(bytes.data(), kPngSignature.data(), kPngSignature.size()) != 0) {
    throw DecodeError("not a PNG stream: bad signature", 0);
  }
  std::size_t pos = kPngSignature.size();
  std::size_t first_idat = 0;
  bool first = true;
  bool seen_iend = false;
  while (!seen_iend) {
    if (pos + 12 > bytes.size()) throw DecodeError("truncated chunk header", pos);
    const std::uint32_t length = read_be32(bytes.data() + pos);
    if (length > 0x7FFFFFFFU) throw DecodeError("chunk length out of range", pos);
    const std::uint8_t* type = bytes.data() + pos + 4;
    for (int i = 0; i < 4; ++i) {
      if (!is_chunk_letter(type[i])) throw DecodeError("invalid chunk type", pos + 4);
    }
    const std::string type_str(reinterpret_cast<const char*>(type), 4);
    if (first && type_str != "IHDR") throw DecodeError("first chunk is not IHDR", pos);
    first = false;
    if (pos + 12 + static_cast<std::size_t>(length) > bytes.size()) {
      throw DecodeError("chunk " + type_str + " extends past end of stream", pos);
    }
    const std::uint32_t stored_crc = read_be32(bytes.data() + pos + 8 + length);
    const auto crc = static_cast<std::uint32_t>(crc32(0L, type, 4 + length));
    if (crc != stored_crc) throw DecodeError("CRC mismatch in chunk " + type_str, pos + 8 + length);
    if (type_str == "IDAT" && first_idat == 0) first_idat = pos;
    if (type_str == "IEND") seen_iend = true;
    pos += 12 + static_cast<std::size_t>(length);
  }
  if (first_idat == 0) throw DecodeError("no IDAT chunk", pos);
  return first_idat;
}

struct WriteBuffer {
  std::vector<std::uint8_t>* out;
};

void png_write_to_vector(png_structp png, png_bytep data, png_size_t length) {
  auto* buf = static_cast<WriteBuffer*>(png_get_io_ptr(png));
  buf->out->insert(buf->out->end(), data, data + length);
}

void png_flush_noop(png_structp) {}

[[noreturn]] void png_error_throw(png_structp png, png_const_charp msg) {
  auto* err = static_cast<std::string*>(png_get_error_ptr(png));
  if (err != nullptr) *err = msg;
  png_longjmp(png, 1);
}

void png_warning_ignore(png_structp, png_const_charp) {}

// Kept free of objects with destructors: libpng reports errors via longjmp.
bool write_png_stream(png_structp png, png_infop info, WriteBuffer* buffer, png_bytepp rows, png_uint_32 width,
                      png_uint_32 height, int color_type) {
  if (setjmp(png_jmpbuf(png)) != 0) return false;
  png_set_write_fn(png, buffer, png_write_to_vector, png_flush_noop);
  png_set_compression_level(png, 6);
  png_set_IHDR(png, info, width, height, 8, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_rows(png, rows, height);
  png_write_end(png, info);
  return true;
}

}  // namespace

ImageU8 decode_png(std::span<const std::uint8_t> bytes) {
  const std::size_t idat_offset = validate_chunks(bytes);

  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()) == 0) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw DecodeError("PNG header rejected: " + msg, kPngSignature.size());
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int channels = color ? 3 : 1;
  const auto width = static_cast<int>(image.width);
  const auto height = static_cast<int>(image.height);
  std::vector<std::uint8_t> data(PNG_IMAGE_SIZE(image));
  // Alpha is composited over black so that masks with transparency decode
  // to their stored sample values.
  png_color background{0, 0, 0};
  if (png_image_finish_read(&image, &background, data.data(), 0, nullptr) == 0) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw DecodeError("PNG image data rejected: " + msg, idat_offset);
  }
  return ImageU8(width, height, channels, Resolution{}, std::move(data));
}

std::vector<std::uint8_t> encode_png(const ImageU8& raster) {
  if (raster.empty()) throw EmptyRasterError("encode_png: empty raster");
  std::vector<std::uint8_t> out;
  out.reserve(raster.data().size() / 4 + 1024);
  std::string error;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error, png_error_throw, png_warning_ignore);
  if (png == nullptr) throw IoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("png_create_info_struct failed");
  }
  WriteBuffer buffer{&out};
  std::vector<png_const_bytep> rows(static_cast<std::size_t>(raster.height()));
  for (int y = 0; y < raster.height(); ++y) rows[static_cast<std::size_t>(y)] = raster.row(y).data();

  const bool ok = write_png_stream(png, info, &buffer, const_cast<png_bytepp>(rows.data()),
                                   static_cast<png_uint_32>(raster.width()), static_cast<png_uint_32>(raster.height()),
                                   raster.channels() == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY);
  if (!ok) {
    png_destroy_write_struct(&png, &info);
    throw IoError("PNG encode failed: " + error);
  }
  png_destroy_write_struct(&png, &info);
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  std::vector<std::uint8_t> bytes(size);
  if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size))) {
    throw IoError("cannot read " + path.string());
  }
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

std::filesystem::path sidecar_path(const std::filesystem::path& image_path) {
  auto p = image_path;
  p.replace_extension(".res");
  return p;
}

std::optional<Resolution> read_sidecar(const std::filesystem::path& sidecar) {
  std::error_code ec;
  if (!std::filesystem::exists(sidecar, ec)) return std::nullopt;
  std::ifstream in(sidecar);
  if (!in) throw IoError("cannot open " + sidecar.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::istringstream fields(text);
  Resolution res;
  if (!(fields >> res.mpp_x >> res.mpp_y)) {
    throw ValidationError("malformed resolution sidecar " + sidecar.string());
  }
  validate(res);
  return res;
}

namespace {

std::string shortest_decimal(double v) {
  std::array<char, 64> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) throw IoError("cannot format number");
  return std::string(buf.data(), end);
}

}  // namespace

void write_sidecar(const std::filesystem::path& sidecar, const Resolution& res) {
  validate(res);
  const std::string text = shortest_decimal(res.mpp_x) + " " + shortest_decimal(res.mpp_y) + "\n";
  write_file_bytes(sidecar, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

LoadedRaster load_raster(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  LoadedRaster out{decode_png(bytes), false};
  if (const auto res = read_sidecar(sidecar_path(path))) {
    out.raster.set_resolution(*res);
  } else {
    out.raster.set_resolution(Resolution{0.5, 0.5});
    out.default_resolution = true;
  }
  return out;
}

void save_raster(const ImageU8& raster, const std::filesystem::path& path, bool sidecar) {
  const auto bytes = encode_png(raster);
  write_file_bytes(path, bytes);
  if (sidecar) write_sidecar(sidecar_path(path), raster.resolution());
}

ImageU8 quantize_probability(const ProbMap& map) {
  ImageU8 out(map.width(), map.height(), map.channels(), map.resolution());
  auto& dst = out.data();
  const auto& src = map.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double p = std::clamp(src[i], 0.0, 1.0);
    dst[i] = static_cast<std::uint8_t>(std::lround(255.0 * p));
  }
  return out;
}

ProbMap dequantize_probability(const ImageU8& raster) {
  ProbMap out(raster.width(), raster.height(), raster.channels(), raster.resolution());
  auto& dst = out.data();
  const auto& src = raster.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<double>(src[i]) / 255.0;
  return out;
}

}  // namespace tilscore
