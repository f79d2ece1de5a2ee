#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "padkit/dataset.hpp"
#include "padkit/error.hpp"
#include "padkit/image.hpp"
#include "padkit/random.hpp"

// Procedural live/spoof corpus. Live images are iris-like concentric band
// textures; spoofs pass an independently generated live image through a
// print-and-rescan model (resolution loss, blur, sensor noise, halftone).

namespace padkit::synth {

struct SpoofParams {
  std::size_t downsample = 2;
  std::size_t blur_radius = 1;
  double noise_sigma = 8.0;
  std::size_t halftone_period = 4;
  double halftone_amplitude = 10.0;

  friend bool operator==(const SpoofParams&, const SpoofParams&) = default;
};

struct SynthConfig {
  std::size_t width = 140;
  std::size_t height = 140;
  std::size_t count = 800;  // per class
  std::uint64_t seed = 0;
  SpoofParams spoof;

  void validate() const {
    if (width < 16 || height < 16) throw ValidationError("synthetic images must be at least 16x16");
    if (count < 1) throw ValidationError("per-class count must be at least 1");
    if (spoof.downsample < 2) throw ValidationError("spoof downsample factor must be at least 2");
    if (!(spoof.noise_sigma >= 0.0)) throw ValidationError("spoof noise sigma must be non-negative");
    if (spoof.halftone_period < 2) throw ValidationError("halftone period must be at least 2");
    if (!(spoof.halftone_amplitude >= 0.0)) throw ValidationError("halftone amplitude must be non-negative");
  }

  friend bool operator==(const SynthConfig&, const SynthConfig&) = default;
};

inline nlohmann::ordered_json to_json(const SynthConfig& c) {
  return {{"width", c.width},
          {"height", c.height},
          {"count", c.count},
          {"seed", c.seed},
          {"spoof",
           {{"downsample", c.spoof.downsample},
            {"blur_radius", c.spoof.blur_radius},
            {"noise_sigma", c.spoof.noise_sigma},
            {"halftone_period", c.spoof.halftone_period},
            {"halftone_amplitude", c.spoof.halftone_amplitude}}}};
}

inline SynthConfig synth_config_from_json(const nlohmann::json& j) {
  SynthConfig c;
  c.width = j.at("width").get<std::size_t>();
  c.height = j.at("height").get<std::size_t>();
  c.count = j.at("count").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  const auto& s = j.at("spoof");
  c.spoof.downsample = s.at("downsample").get<std::size_t>();
  c.spoof.blur_radius = s.at("blur_radius").get<std::size_t>();
  c.spoof.noise_sigma = s.at("noise_sigma").get<double>();
  c.spoof.halftone_period = s.at("halftone_period").get<std::size_t>();
  c.spoof.halftone_amplitude = s.at("halftone_amplitude").get<double>();
  return c;
}

inline std::uint8_t clamp_pixel(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

/// Iris-like texture, a pure function of (config.seed, index).
inline Image gen_live(const SynthConfig& config, std::size_t index) {
  Rng rng(derive_seed(derive_seed(config.seed, "synth:live"), index));
  const double w = static_cast<double>(config.width);
  const double h = static_cast<double>(config.height);
  const double side = std::min(w, h);
  const double cx = w / 2 + rng.uniform(-0.06, 0.06) * w;
  const double cy = h / 2 + rng.uniform(-0.06, 0.06) * h;
  const double pupil = side * rng.uniform(0.10, 0.16);
  const double iris = side * rng.uniform(0.36, 0.44);
  const double band_period = side * rng.uniform(0.035, 0.06);
  const double band_phase = rng.uniform(0, 2 * std::numbers::pi);
  const double spokes = std::floor(rng.uniform(10, 24));
  const double spoke_phase = rng.uniform(0, 2 * std::numbers::pi);
  const double iris_level = rng.uniform(90, 130);
  const double sclera_level = rng.uniform(170, 210);
  const double tilt_x = rng.uniform(-0.15, 0.15);
  const double tilt_y = rng.uniform(-0.15, 0.15);

  Image img(config.width, config.height, 1);
  for (std::size_t y = 0; y < config.height; ++y) {
    for (std::size_t x = 0; x < config.width; ++x) {
      const double dx = static_cast<double>(x) - cx;
      const double dy = static_cast<double>(y) - cy;
      const double r = std::hypot(dx, dy);
      const double theta = std::atan2(dy, dx);
      double v;
      if (r < pupil) {
        v = 25.0;
      } else if (r < iris) {
        const double depth = (r - pupil) / (iris - pupil);
        v = iris_level + 28.0 * std::sin(2 * std::numbers::pi * r / band_period + band_phase) +
            14.0 * std::sin(spokes * theta + spoke_phase + 3.0 * depth) * (1.0 - depth);
      } else {
        v = sclera_level + 40.0 * (tilt_x * dx / side + tilt_y * dy / side);
      }
      // Soft limbus and pupil edges.
      const double limbus = std::clamp((r - iris) / 2.0 + 0.5, 0.0, 1.0);
      if (limbus > 0.0 && limbus < 1.0) {
        v = (1.0 - limbus) * (iris_level) + limbus * v;
      }
      img.at(x, y) = clamp_pixel(v + 2.0 * rng.normal());
    }
  }
  return img;
}

inline Image box_blur(const Image& image, std::size_t radius) {
  if (radius == 0) return image;
  const auto W = static_cast<std::ptrdiff_t>(image.width());
  const auto H = static_cast<std::ptrdiff_t>(image.height());
  const auto R = static_cast<std::ptrdiff_t>(radius);
  Image out(image.width(), image.height(), 1);
  for (std::ptrdiff_t y = 0; y < H; ++y) {
    for (std::ptrdiff_t x = 0; x < W; ++x) {
      double sum = 0.0;
      int n = 0;
      for (std::ptrdiff_t yy = std::max<std::ptrdiff_t>(0, y - R); yy <= std::min(H - 1, y + R); ++yy) {
        for (std::ptrdiff_t xx = std::max<std::ptrdiff_t>(0, x - R); xx <= std::min(W - 1, x + R); ++xx) {
          sum += image.at(static_cast<std::size_t>(xx), static_cast<std::size_t>(yy));
          ++n;
        }
      }
      out.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = clamp_pixel(sum / n);
    }
  }
  return out;
}

/// Box-averages factor x factor blocks (partial edge blocks average what they cover).
inline Image box_downsample(const Image& image, std::size_t factor) {
  const std::size_t ow = (image.width() + factor - 1) / factor;
  const std::size_t oh = (image.height() + factor - 1) / factor;
  Image out(ow, oh, 1);
  for (std::size_t y = 0; y < oh; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      double sum = 0.0;
      int n = 0;
      for (std::size_t yy = y * factor; yy < std::min(image.height(), (y + 1) * factor); ++yy) {
        for (std::size_t xx = x * factor; xx < std::min(image.width(), (x + 1) * factor); ++xx) {
          sum += image.at(xx, yy);
          ++n;
        }
      }
      out.at(x, y) = clamp_pixel(sum / n);
    }
  }
  return out;
}

/// Print-and-rescan degradation of a grayscale image; pure in (config, index).
inline Image spoofify(const Image& live, const SynthConfig& config, std::size_t index) {
  if (!live.is_grayscale()) throw ValidationError("spoofify expects a grayscale image");
  const SpoofParams& p = config.spoof;
  Image img = resize_bilinear(box_downsample(live, p.downsample), live.width(), live.height());
  img = box_blur(img, p.blur_radius);
  Rng rng(derive_seed(derive_seed(config.seed, "synth:spoof"), index));
  const double period = static_cast<double>(p.halftone_period);
  for (std::size_t y = 0; y < img.height(); ++y) {
    for (std::size_t x = 0; x < img.width(); ++x) {
      const double halftone = p.halftone_amplitude * std::sin(2 * std::numbers::pi * static_cast<double>(x) / period) *
                              std::sin(2 * std::numbers::pi * static_cast<double>(y) / period);
      const double noise = p.noise_sigma > 0.0 ? p.noise_sigma * rng.normal() : 0.0;
      img.at(x, y) = clamp_pixel(img.at(x, y) + halftone + noise);
    }
  }
  return img;
}

/// Fraction of pixels that differ between two equally sized images.
inline double pixel_difference(const Image& a, const Image& b) {
  if (a.width() != b.width() || a.height() != b.height() || a.channels() != b.channels()) return 1.0;
  std::size_t diff = 0;
  for (std::size_t i = 0; i < a.data().size(); ++i) diff += a.data()[i] != b.data()[i] ? 1 : 0;
  return static_cast<double>(diff) / static_cast<double>(a.data().size());
}

inline std::string sample_name(const char* prefix, std::size_t index) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%05zu.pgm", prefix, index);
  return buf;
}

inline constexpr const char* kConfigSidecar = "synth_config.json";

/// Writes real/ and fake/ PGM trees plus the config sidecar under `root`.
/// fake_i degrades live source count+i, never an emitted real image.
inline dataset::Manifest gen_corpus(const SynthConfig& config, const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  config.validate();
  std::error_code ec;
  fs::create_directories(root / "real", ec);
  fs::create_directories(root / "fake", ec);
  if (!fs::is_directory(root / "real") || !fs::is_directory(root / "fake")) {
    throw DataError("cannot create corpus directories under " + root.string());
  }
  Image previous;
  for (std::size_t i = 0; i < config.count; ++i) {
    Image live = gen_live(config, i);
    if (i > 0 && pixel_difference(previous, live) < 0.01) {
      throw Error("synthetic generator self-check failed: live images " + std::to_string(i - 1) + " and " +
                  std::to_string(i) + " differ in fewer than 1% of pixels");
    }
    write_pnm(root / "real" / sample_name("real", i), live);
    write_pnm(root / "fake" / sample_name("fake", i), spoofify(gen_live(config, config.count + i), config, i));
    previous = std::move(live);
  }
  std::ofstream side(root / kConfigSidecar, std::ios::trunc);
  side << to_json(config).dump(2) << "\n";
  if (!side) throw DataError("cannot write " + (root / kConfigSidecar).string());
  side.close();
  return dataset::scan_directory(root);
}

}  // namespace padkit::synth
