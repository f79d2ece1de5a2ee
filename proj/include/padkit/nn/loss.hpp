#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include "padkit/error.hpp"
#include "padkit/tensor.hpp"

namespace padkit::nn {

inline constexpr double kProbClamp = 1e-7;

struct ScalarLoss {
  double loss = 0.0;
  double grad = 0.0;  // dL/dp
};

/// L = -[y ln p + (1-y) ln(1-p)], p clamped to [1e-7, 1-1e-7].
inline ScalarLoss loss_binary_ce(double p, int y) {
  if (y != 0 && y != 1) throw ValidationError("binary cross-entropy target must be 0 or 1");
  const double q = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
  if (y == 1) return {-std::log(q), -1.0 / q};
  return {-std::log(1.0 - q), 1.0 / (1.0 - q)};
}

struct VectorLoss {
  double loss = 0.0;
  Tensor grad;
};

/// L = -ln p_y. `grad` is dL/dp; see softmax_ce_logit_grad for the combined
/// softmax + cross-entropy gradient with respect to the logits.
inline VectorLoss loss_categorical_ce(const Tensor& p, std::size_t y) {
  if (y >= p.size()) throw ValidationError("categorical cross-entropy: class index out of range");
  double total = 0.0;
  for (double v : p.values()) total += v;
  if (std::abs(total - 1.0) > 1e-9) {
    throw ValidationError("categorical cross-entropy: probabilities sum to " + std::to_string(total));
  }
  const double q = std::clamp(p[y], kProbClamp, 1.0 - kProbClamp);
  VectorLoss out{-std::log(q), Tensor(p.shape())};
  out.grad[y] = -1.0 / q;
  return out;
}

/// dL/dz for softmax followed by categorical cross-entropy: p - onehot(y).
inline Tensor softmax_ce_logit_grad(const Tensor& p, std::size_t y) {
  if (y >= p.size()) throw ValidationError("categorical cross-entropy: class index out of range");
  Tensor g = p;
  g[y] -= 1.0;
  return g;
}

}  // namespace padkit::nn
