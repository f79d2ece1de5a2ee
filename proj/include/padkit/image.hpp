#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "padkit/error.hpp"
#include "padkit/tensor.hpp"

namespace padkit {

/// 8-bit pixel grid, row-major, channels interleaved.
class Image {
 public:
  Image() = default;

  Image(std::size_t width, std::size_t height, std::size_t channels, std::uint8_t fill = 0)
      : Image(width, height, channels,
              std::vector<std::uint8_t>(width * height * channels, fill)) {}

  Image(std::size_t width, std::size_t height, std::size_t channels, std::vector<std::uint8_t> data)
      : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
    if (width == 0 || height == 0) throw ValidationError("image dimensions must be at least 1x1");
    if (channels != 1 && channels != 3) {
      throw ValidationError("image must have 1 or 3 channels, got " + std::to_string(channels));
    }
    if (data_.size() != width * height * channels) {
      throw ValidationError("image data length " + std::to_string(data_.size()) +
                            " does not match " + std::to_string(width) + "x" +
                            std::to_string(height) + "x" + std::to_string(channels));
    }
  }

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t channels() const { return channels_; }
  bool is_grayscale() const { return channels_ == 1; }

  std::span<const std::uint8_t> data() const { return data_; }
  std::span<std::uint8_t> data() { return data_; }

  std::uint8_t& at(std::size_t x, std::size_t y, std::size_t c = 0) {
    return data_[(y * width_ + x) * channels_ + c];
  }
  std::uint8_t at(std::size_t x, std::size_t y, std::size_t c = 0) const {
    return data_[(y * width_ + x) * channels_ + c];
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::size_t channels_ = 0;
  std::vector<std::uint8_t> data_;
};

struct Rect {
  std::size_t x = 0;
  std::size_t y = 0;
  std::size_t w = 0;
  std::size_t h = 0;

  friend bool operator==(const Rect&, const Rect&) = default;
};

// ---------------------------------------------------------------------------
// Netpbm codec (binary PGM/PPM, maxval 255)

enum class PnmErrc { bad_magic, bad_header, unsupported_maxval, truncated };

class PnmError : public DataError {
 public:
  PnmError(PnmErrc code, const std::string& what) : DataError(what), code_(code) {}
  PnmErrc code() const { return code_; }

 private:
  PnmErrc code_;
};

namespace detail {

inline bool pnm_space(std::uint8_t ch) {
  return ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' || ch == '\v' || ch == '\f';
}

// Reads one unsigned decimal header token, skipping whitespace and comments.
inline std::size_t pnm_token(std::span<const std::uint8_t> bytes, std::size_t& pos, const char* name) {
  for (;;) {
    while (pos < bytes.size() && pnm_space(bytes[pos])) ++pos;
    if (pos < bytes.size() && bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  if (pos >= bytes.size()) {
    throw PnmError(PnmErrc::truncated, std::string("PNM header ends before ") + name);
  }
  if (bytes[pos] < '0' || bytes[pos] > '9') {
    throw PnmError(PnmErrc::bad_header, std::string("PNM header: expected digits for ") + name);
  }
  std::size_t value = 0;
  while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
    value = value * 10 + (bytes[pos] - '0');
    if (value > (std::size_t{1} << 32)) {
      throw PnmError(PnmErrc::bad_header, std::string("PNM header: ") + name + " out of range");
    }
    ++pos;
  }
  return value;
}

}  // namespace detail

inline Image decode_pnm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw PnmError(PnmErrc::bad_magic, "not a binary PGM (P5) or PPM (P6) stream");
  }
  const std::size_t channels = bytes[1] == '5' ? 1 : 3;
  std::size_t pos = 2;
  if (pos < bytes.size() && !detail::pnm_space(bytes[pos]) && bytes[pos] != '#') {
    throw PnmError(PnmErrc::bad_magic, "PNM magic must be followed by whitespace");
  }
  const std::size_t width = detail::pnm_token(bytes, pos, "width");
  const std::size_t height = detail::pnm_token(bytes, pos, "height");
  const std::size_t maxval = detail::pnm_token(bytes, pos, "maxval");
  if (width == 0 || height == 0) throw PnmError(PnmErrc::bad_header, "PNM dimensions must be nonzero");
  if (maxval != 255) {
    throw PnmError(PnmErrc::unsupported_maxval,
                   "unsupported PNM maxval " + std::to_string(maxval) + " (only 255)");
  }
  if (pos >= bytes.size()) throw PnmError(PnmErrc::truncated, "PNM header ends before raster");
  if (!detail::pnm_space(bytes[pos])) {
    throw PnmError(PnmErrc::bad_header, "PNM maxval must be followed by a single whitespace byte");
  }
  ++pos;
  const std::size_t need = width * height * channels;
  if (bytes.size() - pos < need) {
    throw PnmError(PnmErrc::truncated, "PNM raster truncated: expected " + std::to_string(need) +
                                           " bytes, found " + std::to_string(bytes.size() - pos));
  }
  auto first = bytes.begin() + static_cast<std::ptrdiff_t>(pos);
  return Image(width, height, channels,
               std::vector<std::uint8_t>(first, first + static_cast<std::ptrdiff_t>(need)));
}

inline std::vector<std::uint8_t> encode_pnm(const Image& image) {
  const std::string header = std::string(image.is_grayscale() ? "P5" : "P6") + "\n" +
                             std::to_string(image.width()) + " " + std::to_string(image.height()) +
                             "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.data().begin(), image.data().end());
  return out;
}

inline Image read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open image " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_pnm(bytes);
  } catch (const PnmError& e) {
    throw PnmError(e.code(), path.string() + ": " + e.what());
  }
}

inline void write_pnm(const std::filesystem::path& path, const Image& image) {
  const auto bytes = encode_pnm(image);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write image " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing image " + path.string());
}

// ---------------------------------------------------------------------------
// Pixel operations

/// Rec. 601 luma, Y = round(0.299 R + 0.587 G + 0.114 B), computed exactly in
/// integers so ties round away from zero.
inline Image to_grayscale(const Image& image) {
  if (image.is_grayscale()) return image;
  const auto src = image.data();
  std::vector<std::uint8_t> out(image.width() * image.height());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const unsigned sum = 299u * src[3 * i] + 587u * src[3 * i + 1] + 114u * src[3 * i + 2];
    out[i] = static_cast<std::uint8_t>(std::min(255u, (sum + 500u) / 1000u));
  }
  return Image(image.width(), image.height(), 1, std::move(out));
}

inline Image crop(const Image& image, const Rect& rect) {
  if (rect.w == 0 || rect.h == 0 || rect.x + rect.w > image.width() ||
      rect.y + rect.h > image.height()) {
    throw ValidationError("crop rect {" + std::to_string(rect.x) + "," + std::to_string(rect.y) +
                          "," + std::to_string(rect.w) + "," + std::to_string(rect.h) +
                          "} outside " + std::to_string(image.width()) + "x" +
                          std::to_string(image.height()) + " image");
  }
  const std::size_t c = image.channels();
  std::vector<std::uint8_t> out;
  out.reserve(rect.w * rect.h * c);
  const auto src = image.data();
  for (std::size_t y = 0; y < rect.h; ++y) {
    const auto row = src.begin() + static_cast<std::ptrdiff_t>(((rect.y + y) * image.width() + rect.x) * c);
    out.insert(out.end(), row, row + static_cast<std::ptrdiff_t>(rect.w * c));
  }
  return Image(rect.w, rect.h, c, std::move(out));
}

/// Centered out_w x out_h window; odd margins put the extra pixel bottom-right.
inline Rect center_rect(std::size_t img_w, std::size_t img_h, std::size_t out_w, std::size_t out_h) {
  if (out_w == 0 || out_h == 0 || out_w > img_w || out_h > img_h) {
    throw ValidationError("center crop " + std::to_string(out_w) + "x" + std::to_string(out_h) +
                          " does not fit in " + std::to_string(img_w) + "x" + std::to_string(img_h));
  }
  return Rect{(img_w - out_w) / 2, (img_h - out_h) / 2, out_w, out_h};
}

/// Bilinear resampling with half-pixel centers and edge clamping.
inline Image resize_bilinear(const Image& image, std::size_t out_w, std::size_t out_h) {
  if (out_w == 0 || out_h == 0) throw ValidationError("resize target must be at least 1x1");
  const std::size_t c = image.channels();
  const double sx_scale = static_cast<double>(image.width()) / static_cast<double>(out_w);
  const double sy_scale = static_cast<double>(image.height()) / static_cast<double>(out_h);
  const double max_x = static_cast<double>(image.width() - 1);
  const double max_y = static_cast<double>(image.height() - 1);

  std::vector<std::uint8_t> out(out_w * out_h * c);
  for (std::size_t j = 0; j < out_h; ++j) {
    const double sy = std::clamp((static_cast<double>(j) + 0.5) * sy_scale - 0.5, 0.0, max_y);
    const auto y0 = static_cast<std::size_t>(sy);
    const std::size_t y1 = std::min(y0 + 1, image.height() - 1);
    const double ty = sy - static_cast<double>(y0);
    for (std::size_t i = 0; i < out_w; ++i) {
      const double sx = std::clamp((static_cast<double>(i) + 0.5) * sx_scale - 0.5, 0.0, max_x);
      const auto x0 = static_cast<std::size_t>(sx);
      const std::size_t x1 = std::min(x0 + 1, image.width() - 1);
      const double tx = sx - static_cast<double>(x0);
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double a = image.at(x0, y0, ch);
        const double b = image.at(x1, y0, ch);
        const double d = image.at(x0, y1, ch);
        const double e = image.at(x1, y1, ch);
        const double top = a + (b - a) * tx;
        const double bottom = d + (e - d) * tx;
        const double v = top + (bottom - top) * ty;
        out[(j * out_w + i) * c + ch] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return Image(out_w, out_h, c, std::move(out));
}

/// Grayscale image to a (height, width, 1) tensor scaled into [0, 1].
inline Tensor to_input_tensor(const Image& image) {
  if (!image.is_grayscale()) throw ValidationError("network input must be a grayscale image");
  Tensor out({image.height(), image.width(), 1});
  const auto src = image.data();
  for (std::size_t i = 0; i < src.size(); ++i) out[i] = src[i] / 255.0;
  return out;
}

}  // namespace padkit
