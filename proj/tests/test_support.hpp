#pragma once

// Test-only helpers: independent oracles and fixtures. Nothing here calls
// the code paths it is used to check.

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <unistd.h>

#include "padkit/image.hpp"
#include "padkit/random.hpp"
#include "padkit/tensor.hpp"

namespace padkit::fixture {

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("padkit_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline Image random_image(Rng& rng, std::size_t w, std::size_t h, std::size_t c = 1) {
  Image img(w, h, c);
  for (auto& v : img.data()) v = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

inline Tensor random_tensor(Rng& rng, const Shape& shape, double lo = -1.0, double hi = 1.0) {
  Tensor t(shape);
  for (double& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

/// Scalar LBP oracle: gathers the neighborhood explicitly and applies the bit
/// rule one position at a time.
inline int lbp_oracle(const Image& img, std::size_t x, std::size_t y) {
  const int c = img.at(x, y);
  const int n[8] = {img.at(x - 1, y - 1), img.at(x, y - 1),     img.at(x + 1, y - 1), img.at(x + 1, y),
                    img.at(x + 1, y + 1), img.at(x, y + 1),     img.at(x - 1, y + 1), img.at(x - 1, y)};
  int code = 0;
  for (int k = 0; k < 8; ++k) {
    if (n[k] > c) code += 1 << (7 - k);
  }
  return code;
}

/// Quadruple-loop valid cross-correlation.
inline Tensor naive_conv(const Tensor& in, const Tensor& k, const Tensor& b) {
  const std::size_t H = in.extent(0), W = in.extent(1), C = in.extent(2);
  const std::size_t K = k.extent(0), F = k.extent(3);
  Tensor out({H - K + 1, W - K + 1, F});
  for (std::size_t y = 0; y + K <= H; ++y)
    for (std::size_t x = 0; x + K <= W; ++x)
      for (std::size_t f = 0; f < F; ++f) {
        double s = b[f];
        for (std::size_t dy = 0; dy < K; ++dy)
          for (std::size_t dx = 0; dx < K; ++dx)
            for (std::size_t c = 0; c < C; ++c) s += in.at(y + dy, x + dx, c) * k[((dy * K + dx) * C + c) * F + f];
        out.at(y, x, f) = s;
      }
  return out;
}

/// Central differences of a scalar function of `x`, perturbing each element.
inline Tensor numeric_gradient(Tensor x, const std::function<double(const Tensor&)>& f, double h = 1e-5) {
  Tensor g(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double up = f(x);
    x[i] = orig - h;
    const double down = f(x);
    x[i] = orig;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

/// max |a-b| / max(1e-8, max|a|, max|b|) over the whole tensor.
inline double relative_error(const Tensor& a, const Tensor& b) {
  double diff = 0.0, scale = 1e-8;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
  }
  return diff / scale;
}

/// sum(w .* t): a random linear read-out turning any tensor into a scalar loss.
inline double dot(const Tensor& w, const Tensor& t) {
  double s = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) s += w[i] * t[i];
  return s;
}

}  // namespace padkit::fixture
