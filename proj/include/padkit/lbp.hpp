#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "padkit/error.hpp"
#include "padkit/image.hpp"

namespace padkit::lbp {

inline constexpr std::size_t kBins = 256;

/// Bit rule: neighbor k sets bit (7 - k) iff it is strictly brighter than the
/// center. Neighbors run clockwise from the top-left, so the top-left
/// neighbor is the most significant bit.
inline std::uint8_t lbp_code(std::uint8_t center, std::span<const std::uint8_t, 8> neighbors) {
  unsigned code = 0;
  for (std::uint8_t n : neighbors) code = (code << 1) | (n > center ? 1u : 0u);
  return static_cast<std::uint8_t>(code);
}

inline std::uint8_t lbp_code(std::uint8_t center, const std::array<std::uint8_t, 8>& neighbors) {
  return lbp_code(center, std::span<const std::uint8_t, 8>(neighbors));
}

/// One code per interior pixel; the one-pixel border has no full neighborhood.
struct LbpCodeMap {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> codes;

  std::uint8_t at(std::size_t x, std::size_t y) const { return codes[y * width + x]; }
};

inline LbpCodeMap compute_code_map(const Image& image) {
  if (!image.is_grayscale()) throw ValidationError("LBP requires a grayscale image");
  if (image.width() < 3 || image.height() < 3) {
    throw ValidationError("LBP requires at least a 3x3 image");
  }
  const std::size_t w = image.width();
  LbpCodeMap map{w - 2, image.height() - 2, {}};
  map.codes.assign(map.width * map.height, 0);

  // (dy, dx) clockwise from top-left.
  constexpr std::array<std::pair<int, int>, 8> kOffsets{{
      {-1, -1}, {-1, 0}, {-1, 1}, {0, 1}, {1, 1}, {1, 0}, {1, -1}, {0, -1}}};
  const std::uint8_t* src = image.data().data();
  for (std::size_t y = 0; y < map.height; ++y) {
    const std::uint8_t* center = src + (y + 1) * w + 1;
    std::uint8_t* out = map.codes.data() + y * map.width;
    for (std::size_t k = 0; k < kOffsets.size(); ++k) {
      const std::ptrdiff_t offset = kOffsets[k].first * static_cast<std::ptrdiff_t>(w) + kOffsets[k].second;
      const std::uint8_t* neighbor = center + offset;
      const auto bit = static_cast<std::uint8_t>(1u << (7 - k));
      for (std::size_t x = 0; x < map.width; ++x) {
        if (neighbor[x] > center[x]) out[x] |= bit;
      }
    }
  }
  return map;
}

/// Concatenated per-patch 256-bin histograms, each L1-normalized.
struct LbpFeature {
  std::size_t grid_rows = 1;
  std::size_t grid_cols = 1;
  std::vector<double> histograms;

  std::size_t patches() const { return grid_rows * grid_cols; }
  std::span<const double> block(std::size_t patch) const {
    return std::span<const double>(histograms).subspan(patch * kBins, kBins);
  }

  friend bool operator==(const LbpFeature&, const LbpFeature&) = default;
};

/// Start offsets of `parts` contiguous bands over `length` items; leading
/// bands absorb the remainder.
inline std::vector<std::size_t> band_bounds(std::size_t length, std::size_t parts) {
  std::vector<std::size_t> bounds(parts + 1, 0);
  const std::size_t base = length / parts;
  const std::size_t extra = length % parts;
  for (std::size_t i = 0; i < parts; ++i) bounds[i + 1] = bounds[i] + base + (i < extra ? 1 : 0);
  return bounds;
}

inline LbpFeature feature_from_code_map(const LbpCodeMap& map, std::size_t grid_rows, std::size_t grid_cols) {
  if (grid_rows == 0 || grid_cols == 0) throw ValidationError("LBP grid must be at least 1x1");
  if (grid_rows > map.height || grid_cols > map.width) {
    throw ValidationError("LBP grid " + std::to_string(grid_rows) + "x" + std::to_string(grid_cols) +
                          " exceeds " + std::to_string(map.height) + "x" + std::to_string(map.width) +
                          " code map");
  }
  LbpFeature feature{grid_rows, grid_cols, std::vector<double>(grid_rows * grid_cols * kBins, 0.0)};
  const auto rows = band_bounds(map.height, grid_rows);
  const auto cols = band_bounds(map.width, grid_cols);
  for (std::size_t r = 0; r < grid_rows; ++r) {
    for (std::size_t c = 0; c < grid_cols; ++c) {
      std::array<std::size_t, kBins> counts{};
      for (std::size_t y = rows[r]; y < rows[r + 1]; ++y) {
        for (std::size_t x = cols[c]; x < cols[c + 1]; ++x) ++counts[map.at(x, y)];
      }
      const double total = static_cast<double>((rows[r + 1] - rows[r]) * (cols[c + 1] - cols[c]));
      double* block = feature.histograms.data() + (r * grid_cols + c) * kBins;
      for (std::size_t b = 0; b < kBins; ++b) block[b] = static_cast<double>(counts[b]) / total;
    }
  }
  return feature;
}

inline LbpFeature extract_feature(const Image& image, std::size_t grid_rows, std::size_t grid_cols) {
  return feature_from_code_map(compute_code_map(image), grid_rows, grid_cols);
}

/// Chi-square histogram distance; bins empty in both inputs are skipped.
inline double chi_square(const LbpFeature& a, const LbpFeature& b) {
  if (a.grid_rows != b.grid_rows || a.grid_cols != b.grid_cols || a.histograms.size() != b.histograms.size()) {
    throw ValidationError("chi-square: LBP grids differ");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.histograms.size(); ++i) {
    const double s = a.histograms[i] + b.histograms[i];
    if (s == 0.0) continue;
    const double d = a.histograms[i] - b.histograms[i];
    sum += d * d / s;
  }
  return sum;
}

struct Classification {
  std::string label;
  double distance = 0.0;
  std::size_t exemplar = 0;
};

/// 1-nearest-neighbor classifier under chi-square distance.
class LbpModel {
 public:
  LbpModel(std::size_t grid_rows, std::size_t grid_cols) : grid_rows_(grid_rows), grid_cols_(grid_cols) {}

  void add(LbpFeature feature, std::string label) {
    if (feature.grid_rows != grid_rows_ || feature.grid_cols != grid_cols_) {
      throw ValidationError("LBP exemplar grid does not match model grid");
    }
    exemplars_.emplace_back(std::move(feature), std::move(label));
  }

  std::size_t grid_rows() const { return grid_rows_; }
  std::size_t grid_cols() const { return grid_cols_; }
  std::size_t size() const { return exemplars_.size(); }
  bool empty() const { return exemplars_.empty(); }
  const std::vector<std::pair<LbpFeature, std::string>>& exemplars() const { return exemplars_; }

  /// Nearest exemplar; ties go to the lowest exemplar index.
  Classification classify(const LbpFeature& query) const {
    if (exemplars_.empty()) throw ValidationError("LBP model has no exemplars");
    Classification best{exemplars_[0].second, chi_square(exemplars_[0].first, query), 0};
    for (std::size_t i = 1; i < exemplars_.size(); ++i) {
      const double d = chi_square(exemplars_[i].first, query);
      if (d < best.distance) best = {exemplars_[i].second, d, i};
    }
    return best;
  }

  /// Smallest distance from the query to any exemplar of each label.
  std::map<std::string, double> nearest_per_label(const LbpFeature& query) const {
    if (exemplars_.empty()) throw ValidationError("LBP model has no exemplars");
    std::map<std::string, double> nearest;
    for (const auto& [feature, label] : exemplars_) {
      const double d = chi_square(feature, query);
      auto [it, inserted] = nearest.emplace(label, d);
      if (!inserted && d < it->second) it->second = d;
    }
    return nearest;
  }

 private:
  std::size_t grid_rows_;
  std::size_t grid_cols_;
  std::vector<std::pair<LbpFeature, std::string>> exemplars_;
};

}  // namespace padkit::lbp
