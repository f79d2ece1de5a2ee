#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "padkit/error.hpp"
#include "padkit/tensor.hpp"

// Layer primitives on (height, width, channels) tensors. Convolution and
// pooling are "valid": no padding, windows that would overrun the edge are
// dropped.

namespace padkit::nn {

// ---------------------------------------------------------------------------
// Convolution

/// Cross-correlation with stride 1:
/// out[y,x,f] = bias[f] + sum_{dy,dx,c} in[y+dy, x+dx, c] * kernel[dy,dx,c,f].
inline Tensor conv2d_forward(const Tensor& input, const Tensor& kernel, const Tensor& bias) {
  if (input.rank() != 3 || kernel.rank() != 4) throw ValidationError("conv2d: expected (H,W,C) input and (K,K,C,F) kernel");
  const std::size_t H = input.extent(0), W = input.extent(1), C = input.extent(2);
  const std::size_t K = kernel.extent(0), F = kernel.extent(3);
  if (kernel.extent(1) != K) throw ValidationError("conv2d: kernel must be square");
  if (kernel.extent(2) != C) {
    throw ValidationError("conv2d: input has " + std::to_string(C) + " channels, kernel expects " +
                          std::to_string(kernel.extent(2)));
  }
  if (bias.size() != F) throw ValidationError("conv2d: bias length does not match filter count");
  if (H < K || W < K) {
    throw ValidationError("conv2d: input " + shape_string(input.shape()) + " smaller than " +
                          std::to_string(K) + "x" + std::to_string(K) + " kernel");
  }
  const std::size_t OH = H - K + 1, OW = W - K + 1;
  Tensor out({OH, OW, F});
  const double* in = input.data();
  const double* k = kernel.data();
  const double* b = bias.data();
  double* o = out.data();
  for (std::size_t y = 0; y < OH; ++y) {
    for (std::size_t x = 0; x < OW; ++x) {
      double* acc = o + (y * OW + x) * F;
      std::copy(b, b + F, acc);
      for (std::size_t dy = 0; dy < K; ++dy) {
        const double* in_row = in + ((y + dy) * W + x) * C;
        const double* k_row = k + dy * K * C * F;
        for (std::size_t j = 0; j < K * C; ++j) {
          const double v = in_row[j];
          if (v == 0.0) continue;
          const double* kf = k_row + j * F;
          for (std::size_t f = 0; f < F; ++f) acc[f] += v * kf[f];
        }
      }
    }
  }
  return out;
}

/// Gradients of conv2d_forward. grad_kernel and grad_bias are accumulated
/// into; grad_input (when non-null) is overwritten.
inline void conv2d_backward_accumulate(const Tensor& grad_out, const Tensor& input, const Tensor& kernel,
                                       Tensor* grad_input, Tensor& grad_kernel, Tensor& grad_bias) {
  const std::size_t H = input.extent(0), W = input.extent(1), C = input.extent(2);
  const std::size_t K = kernel.extent(0), F = kernel.extent(3);
  if (H < K || W < K || kernel.extent(2) != C) throw ValidationError("conv2d backward: input/kernel mismatch");
  const std::size_t OH = H - K + 1, OW = W - K + 1;
  if (grad_out.shape() != Shape{OH, OW, F}) {
    throw ValidationError("conv2d backward: grad_out shape " + shape_string(grad_out.shape()) +
                          " expected " + shape_string({OH, OW, F}));
  }
  if (grad_kernel.shape() != kernel.shape() || grad_bias.size() != F) {
    throw ValidationError("conv2d backward: gradient buffers do not match parameters");
  }
  if (grad_input) {
    if (grad_input->shape() != input.shape()) *grad_input = Tensor(input.shape());
    else grad_input->fill(0.0);
  }
  const double* in = input.data();
  const double* k = kernel.data();
  const double* g = grad_out.data();
  double* gk = grad_kernel.data();
  double* gb = grad_bias.data();
  double* gi = grad_input ? grad_input->data() : nullptr;

  for (std::size_t y = 0; y < OH; ++y) {
    for (std::size_t x = 0; x < OW; ++x) {
      const double* gf = g + (y * OW + x) * F;
      bool any = false;
      for (std::size_t f = 0; f < F; ++f) {
        gb[f] += gf[f];
        any = any || gf[f] != 0.0;
      }
      // After max-pooling most positions carry no gradient.
      if (!any) continue;
      for (std::size_t dy = 0; dy < K; ++dy) {
        const std::size_t in_off = ((y + dy) * W + x) * C;
        const double* in_row = in + in_off;
        const double* k_row = k + dy * K * C * F;
        double* gk_row = gk + dy * K * C * F;
        for (std::size_t j = 0; j < K * C; ++j) {
          const double v = in_row[j];
          double* gkf = gk_row + j * F;
          for (std::size_t f = 0; f < F; ++f) gkf[f] += v * gf[f];
          if (gi) {
            const double* kf = k_row + j * F;
            double s = 0.0;
            for (std::size_t f = 0; f < F; ++f) s += kf[f] * gf[f];
            gi[in_off + j] += s;
          }
        }
      }
    }
  }
}

struct ConvGrads {
  Tensor input;
  Tensor kernel;
  Tensor bias;
};

inline ConvGrads conv2d_backward(const Tensor& grad_out, const Tensor& input, const Tensor& kernel) {
  ConvGrads grads{Tensor(input.shape()), Tensor(kernel.shape()), Tensor({kernel.extent(3)})};
  conv2d_backward_accumulate(grad_out, input, kernel, &grads.input, grads.kernel, grads.bias);
  return grads;
}

// ---------------------------------------------------------------------------
// Max pooling

inline std::size_t pool_extent(std::size_t in, std::size_t window, std::size_t stride) {
  return (in - window) / stride + 1;
}

struct PoolResult {
  Tensor output;
  std::vector<std::size_t> argmax;  // flat input index per output element
};

/// Max over window x window blocks; ties resolve to the first element in
/// row-major window order.
inline PoolResult maxpool_forward(const Tensor& input, std::size_t window = 3, std::size_t stride = 3) {
  if (input.rank() != 3) throw ValidationError("maxpool: expected (H,W,C) input");
  if (window == 0 || stride == 0) throw ValidationError("maxpool: window and stride must be positive");
  const std::size_t H = input.extent(0), W = input.extent(1), C = input.extent(2);
  if (H < window || W < window) {
    throw ValidationError("maxpool: input " + shape_string(input.shape()) + " smaller than window");
  }
  const std::size_t OH = pool_extent(H, window, stride), OW = pool_extent(W, window, stride);
  PoolResult result{Tensor({OH, OW, C}), std::vector<std::size_t>(OH * OW * C)};
  const double* in = input.data();
  for (std::size_t y = 0; y < OH; ++y) {
    for (std::size_t x = 0; x < OW; ++x) {
      for (std::size_t c = 0; c < C; ++c) {
        std::size_t best = ((y * stride) * W + x * stride) * C + c;
        for (std::size_t dy = 0; dy < window; ++dy) {
          for (std::size_t dx = 0; dx < window; ++dx) {
            const std::size_t idx = ((y * stride + dy) * W + x * stride + dx) * C + c;
            if (in[idx] > in[best]) best = idx;
          }
        }
        const std::size_t o = (y * OW + x) * C + c;
        result.output[o] = in[best];
        result.argmax[o] = best;
      }
    }
  }
  return result;
}

inline Tensor maxpool_backward(const Tensor& grad_out, const std::vector<std::size_t>& argmax, const Shape& input_shape) {
  if (grad_out.size() != argmax.size()) throw ValidationError("maxpool backward: argmax/grad size mismatch");
  Tensor grad_in(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) {
    if (argmax[i] >= grad_in.size()) throw ValidationError("maxpool backward: argmax index out of range");
    grad_in[argmax[i]] += grad_out[i];
  }
  return grad_in;
}

// ---------------------------------------------------------------------------
// Dense

/// out = W^T x + b with W stored (fan_in, units).
inline Tensor dense_forward(const Tensor& x, const Tensor& weights, const Tensor& bias) {
  if (weights.rank() != 2) throw ValidationError("dense: weights must be (fan_in, units)");
  const std::size_t n = weights.extent(0), m = weights.extent(1);
  if (x.size() != n) {
    throw ValidationError("dense: input length " + std::to_string(x.size()) + " expected " + std::to_string(n));
  }
  if (bias.size() != m) throw ValidationError("dense: bias length does not match units");
  Tensor out({m});
  double* o = out.data();
  std::copy(bias.data(), bias.data() + m, o);
  const double* w = weights.data();
  for (std::size_t i = 0; i < n; ++i) {
    const double v = x[i];
    if (v == 0.0) continue;
    const double* row = w + i * m;
    for (std::size_t j = 0; j < m; ++j) o[j] += v * row[j];
  }
  return out;
}

/// Accumulates weight/bias gradients; grad_input (when non-null) is overwritten.
inline void dense_backward_accumulate(const Tensor& grad_out, const Tensor& x, const Tensor& weights,
                                      Tensor* grad_input, Tensor& grad_weights, Tensor& grad_bias) {
  const std::size_t n = weights.extent(0), m = weights.extent(1);
  if (x.size() != n || grad_out.size() != m) throw ValidationError("dense backward: dimension mismatch");
  if (grad_weights.shape() != weights.shape() || grad_bias.size() != m) {
    throw ValidationError("dense backward: gradient buffers do not match parameters");
  }
  const double* g = grad_out.data();
  const double* w = weights.data();
  double* gw = grad_weights.data();
  for (std::size_t j = 0; j < m; ++j) grad_bias[j] += g[j];
  if (grad_input && grad_input->shape() != x.shape()) *grad_input = Tensor(x.shape());
  for (std::size_t i = 0; i < n; ++i) {
    const double v = x[i];
    if (v != 0.0) {
      double* row = gw + i * m;
      for (std::size_t j = 0; j < m; ++j) row[j] += v * g[j];
    }
    if (grad_input) {
      const double* wrow = w + i * m;
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += wrow[j] * g[j];
      (*grad_input)[i] = s;
    }
  }
}

struct DenseGrads {
  Tensor input;
  Tensor weights;
  Tensor bias;
};

inline DenseGrads dense_backward(const Tensor& grad_out, const Tensor& x, const Tensor& weights) {
  DenseGrads grads{Tensor(x.shape()), Tensor(weights.shape()), Tensor({weights.extent(1)})};
  dense_backward_accumulate(grad_out, x, weights, &grads.input, grads.weights, grads.bias);
  return grads;
}

// ---------------------------------------------------------------------------
// Activations

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline Tensor relu(Tensor x) {
  for (double& v : x.values()) v = v > 0.0 ? v : 0.0;
  return x;
}

/// Gradient w.r.t. the pre-activation; `output` is relu's output.
inline Tensor relu_backward(Tensor grad, const Tensor& output) {
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!(output[i] > 0.0)) grad[i] = 0.0;
  }
  return grad;
}

inline Tensor sigmoid(Tensor x) {
  for (double& v : x.values()) v = sigmoid(v);
  return x;
}

inline Tensor sigmoid_backward(Tensor grad, const Tensor& output) {
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] *= output[i] * (1.0 - output[i]);
  return grad;
}

/// Max-subtracted softmax over all elements.
inline Tensor softmax(Tensor x) {
  if (x.empty()) return x;
  const double mx = *std::max_element(x.values().begin(), x.values().end());
  double sum = 0.0;
  for (double& v : x.values()) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : x.values()) v /= sum;
  return x;
}

/// Jacobian-vector product: dz_i = p_i (g_i - sum_j g_j p_j).
inline Tensor softmax_backward(Tensor grad, const Tensor& output) {
  double dot = 0.0;
  for (std::size_t i = 0; i < grad.size(); ++i) dot += grad[i] * output[i];
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = output[i] * (grad[i] - dot);
  return grad;
}

}  // namespace padkit::nn
