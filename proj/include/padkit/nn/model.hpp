#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "padkit/error.hpp"
#include "padkit/nn/adam.hpp"
#include "padkit/nn/layers.hpp"
#include "padkit/random.hpp"
#include "padkit/tensor.hpp"

namespace padkit::nn {

enum class LayerKind { conv2d, maxpool, flatten, dense };
enum class Activation { none, relu, sigmoid, softmax };

inline const char* to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::maxpool: return "maxpool";
    case LayerKind::flatten: return "flatten";
    case LayerKind::dense: return "dense";
  }
  return "?";
}

inline const char* to_string(Activation act) {
  switch (act) {
    case Activation::none: return "none";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::softmax: return "softmax";
  }
  return "?";
}

struct LayerSpec {
  LayerKind kind = LayerKind::flatten;
  std::size_t kernel = 0;   // conv2d
  std::size_t filters = 0;  // conv2d
  std::size_t window = 0;   // maxpool
  std::size_t stride = 0;   // maxpool
  std::size_t units = 0;    // dense
  Activation activation = Activation::none;

  static LayerSpec conv2d(std::size_t filters, std::size_t kernel = 5) {
    return {LayerKind::conv2d, kernel, filters, 0, 0, 0, Activation::relu};
  }
  static LayerSpec maxpool(std::size_t window = 3, std::size_t stride = 3) {
    return {LayerKind::maxpool, 0, 0, window, stride, 0, Activation::none};
  }
  static LayerSpec flatten() { return {}; }
  static LayerSpec dense(std::size_t units, Activation activation) {
    return {LayerKind::dense, 0, 0, 0, 0, units, activation};
  }

  bool trainable() const { return kind == LayerKind::conv2d || kind == LayerKind::dense; }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct Architecture {
  Shape input;  // (height, width, channels)
  std::vector<LayerSpec> layers;

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

/// Checks layer legality and returns the output shape of every layer.
inline std::vector<Shape> shape_chain(const Architecture& arch) {
  if (arch.input.size() != 3 || arch.input[0] == 0 || arch.input[1] == 0 || arch.input[2] == 0) {
    throw ValidationError("architecture input must be a positive (height, width, channels) shape");
  }
  std::vector<Shape> shapes;
  Shape cur = arch.input;
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const LayerSpec& l = arch.layers[i];
    const std::string where = "layer " + std::to_string(i) + " (" + to_string(l.kind) + ")";
    switch (l.kind) {
      case LayerKind::conv2d:
        if (cur.size() != 3) throw ValidationError(where + ": needs a spatial input");
        if (l.kernel == 0 || l.filters == 0) throw ValidationError(where + ": kernel and filters must be positive");
        if (l.activation != Activation::relu && l.activation != Activation::none) {
          throw ValidationError(where + ": convolution activation must be relu or none");
        }
        if (cur[0] < l.kernel || cur[1] < l.kernel) {
          throw ValidationError(where + ": input " + shape_string(cur) + " smaller than kernel");
        }
        cur = {cur[0] - l.kernel + 1, cur[1] - l.kernel + 1, l.filters};
        break;
      case LayerKind::maxpool:
        if (cur.size() != 3) throw ValidationError(where + ": needs a spatial input");
        if (l.window == 0 || l.stride == 0) throw ValidationError(where + ": window and stride must be positive");
        if (l.activation != Activation::none) throw ValidationError(where + ": pooling takes no activation");
        if (cur[0] < l.window || cur[1] < l.window) {
          throw ValidationError(where + ": input " + shape_string(cur) + " smaller than window");
        }
        cur = {pool_extent(cur[0], l.window, l.stride), pool_extent(cur[1], l.window, l.stride), cur[2]};
        break;
      case LayerKind::flatten:
        if (l.activation != Activation::none) throw ValidationError(where + ": flatten takes no activation");
        cur = {shape_size(cur)};
        break;
      case LayerKind::dense:
        if (cur.size() != 1) throw ValidationError(where + ": needs a flat input");
        if (l.units == 0) throw ValidationError(where + ": units must be positive");
        cur = {l.units};
        break;
    }
    shapes.push_back(cur);
  }
  return shapes;
}

struct TrainConfig {
  std::size_t epochs = 30;
  double learning_rate = 0.001;
  std::size_t batch_size = 32;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;

  AdamConfig adam() const { return {learning_rate, beta1, beta2, epsilon}; }

  void validate() const {
    if (epochs < 1) throw ValidationError("epochs must be at least 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ValidationError("learning rate must be positive");
    if (batch_size < 1) throw ValidationError("batch size must be at least 1");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
      throw ValidationError("adam betas must lie in [0, 1)");
    }
    if (!(epsilon > 0.0)) throw ValidationError("adam epsilon must be positive");
  }

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct LayerWeights {
  Tensor kernel;  // conv (K,K,Cin,F) or dense (fan_in, units)
  Tensor bias;

  friend bool operator==(const LayerWeights&, const LayerWeights&) = default;
};

struct ModelParams {
  Architecture architecture;
  std::vector<LayerWeights> weights;  // one entry per trainable layer, in order
  std::uint64_t seed = 0;
  std::optional<TrainConfig> train_config;
  std::vector<std::string> class_names;

  std::size_t num_outputs() const { return shape_chain(architecture).back()[0]; }

  /// Kernel then bias of each trainable layer.
  std::vector<Tensor*> parameters() {
    std::vector<Tensor*> out;
    for (auto& w : weights) {
      out.push_back(&w.kernel);
      out.push_back(&w.bias);
    }
    return out;
  }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

inline std::vector<Shape> parameter_shapes(const Architecture& arch) {
  const auto shapes = shape_chain(arch);
  std::vector<Shape> out;
  Shape in = arch.input;
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const LayerSpec& l = arch.layers[i];
    if (l.kind == LayerKind::conv2d) {
      out.push_back({l.kernel, l.kernel, in[2], l.filters});
      out.push_back({l.filters});
    } else if (l.kind == LayerKind::dense) {
      out.push_back({in[0], l.units});
      out.push_back({l.units});
    }
    in = shapes[i];
  }
  return out;
}

/// Glorot-uniform kernels, zero biases.
inline std::vector<LayerWeights> init_weights(const Architecture& arch, std::uint64_t seed) {
  const auto shapes = parameter_shapes(arch);
  Rng rng(derive_seed(seed, "init"));
  std::vector<LayerWeights> weights;
  for (std::size_t i = 0; i < shapes.size(); i += 2) {
    const Shape& ks = shapes[i];
    double fan_in, fan_out;
    if (ks.size() == 4) {
      fan_in = static_cast<double>(ks[0] * ks[1] * ks[2]);
      fan_out = static_cast<double>(ks[0] * ks[1] * ks[3]);
    } else {
      fan_in = static_cast<double>(ks[0]);
      fan_out = static_cast<double>(ks[1]);
    }
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    Tensor kernel(ks);
    for (double& v : kernel.values()) v = rng.uniform(-limit, limit);
    weights.push_back({std::move(kernel), Tensor(shapes[i + 1])});
  }
  return weights;
}

/// conv(5x5,16,relu) -> pool(3,3) -> conv(5x5,32,relu) -> pool(3,3) -> flatten
/// -> dense(128,relu) -> dense(1,sigmoid) or dense(C,softmax).
inline ModelParams build_spoofnet(std::size_t input_h, std::size_t input_w, std::size_t num_outputs,
                                  std::uint64_t seed, std::size_t channels = 1) {
  if (num_outputs == 0) throw ValidationError("spoofnet needs at least one output");
  ModelParams model;
  model.architecture.input = {input_h, input_w, channels};
  model.architecture.layers = {
      LayerSpec::conv2d(16), LayerSpec::maxpool(),
      LayerSpec::conv2d(32), LayerSpec::maxpool(),
      LayerSpec::flatten(),  LayerSpec::dense(128, Activation::relu),
      LayerSpec::dense(num_outputs, num_outputs == 1 ? Activation::sigmoid : Activation::softmax),
  };
  try {
    shape_chain(model.architecture);
  } catch (const ValidationError& e) {
    throw ValidationError("input " + std::to_string(input_h) + "x" + std::to_string(input_w) +
                          " too small for spoofnet: " + e.what());
  }
  model.seed = seed;
  model.weights = init_weights(model.architecture, seed);
  return model;
}

// ---------------------------------------------------------------------------
// Forward / backward over the whole stack

/// Everything backward needs from one forward pass.
struct ForwardTrace {
  std::vector<Tensor> activations;  // [0] = input, [i+1] = output of layer i
  std::vector<std::vector<std::size_t>> argmax;  // per layer; empty unless maxpool
};

inline Tensor apply_activation(Tensor x, Activation act) {
  switch (act) {
    case Activation::none: return x;
    case Activation::relu: return relu(std::move(x));
    case Activation::sigmoid: return sigmoid(std::move(x));
    case Activation::softmax: return softmax(std::move(x));
  }
  return x;
}

inline ForwardTrace forward(const ModelParams& model, const Tensor& input) {
  const Architecture& arch = model.architecture;
  if (input.shape() != arch.input) {
    throw ValidationError("input shape " + shape_string(input.shape()) + " does not match model input " +
                          shape_string(arch.input));
  }
  input.require_finite("model input");
  ForwardTrace trace;
  trace.activations.reserve(arch.layers.size() + 1);
  trace.argmax.resize(arch.layers.size());
  trace.activations.push_back(input);
  std::size_t w = 0;
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const LayerSpec& l = arch.layers[i];
    const Tensor& x = trace.activations.back();
    Tensor y;
    switch (l.kind) {
      case LayerKind::conv2d:
        y = apply_activation(conv2d_forward(x, model.weights[w].kernel, model.weights[w].bias), l.activation);
        ++w;
        break;
      case LayerKind::maxpool: {
        auto pooled = maxpool_forward(x, l.window, l.stride);
        y = std::move(pooled.output);
        trace.argmax[i] = std::move(pooled.argmax);
        break;
      }
      case LayerKind::flatten:
        y = x.reshaped({x.size()});
        break;
      case LayerKind::dense:
        y = apply_activation(dense_forward(x, model.weights[w].kernel, model.weights[w].bias), l.activation);
        ++w;
        break;
    }
    trace.activations.push_back(std::move(y));
  }
  return trace;
}

/// Backpropagates dL/d(pre-activation of the last layer) through the stack,
/// accumulating into `grads` (same layout as model.weights). The first
/// layer's input gradient is never formed.
inline void backward_from_logits(const ModelParams& model, const ForwardTrace& trace, Tensor grad_logits,
                                 std::vector<LayerWeights>& grads) {
  const auto& layers = model.architecture.layers;
  std::size_t w = model.weights.size();
  Tensor g = std::move(grad_logits);
  for (std::size_t li = layers.size(); li-- > 0;) {
    const LayerSpec& l = layers[li];
    const Tensor& x = trace.activations[li];
    const Tensor& y = trace.activations[li + 1];
    const bool last = li + 1 == layers.size();
    if (!last && l.trainable() && l.activation == Activation::relu) g = relu_backward(std::move(g), y);
    if (!last && l.trainable() && (l.activation == Activation::sigmoid || l.activation == Activation::softmax)) {
      g = l.activation == Activation::sigmoid ? sigmoid_backward(std::move(g), y) : softmax_backward(std::move(g), y);
    }
    switch (l.kind) {
      case LayerKind::conv2d: {
        --w;
        Tensor gin;
        conv2d_backward_accumulate(g, x, model.weights[w].kernel, li == 0 ? nullptr : &gin, grads[w].kernel,
                                   grads[w].bias);
        g = std::move(gin);
        break;
      }
      case LayerKind::maxpool:
        g = maxpool_backward(g, trace.argmax[li], x.shape());
        break;
      case LayerKind::flatten:
        g = std::move(g).reshaped(x.shape());
        break;
      case LayerKind::dense: {
        --w;
        Tensor gin;
        dense_backward_accumulate(g, x, model.weights[w].kernel, li == 0 ? nullptr : &gin, grads[w].kernel,
                                  grads[w].bias);
        g = std::move(gin);
        break;
      }
    }
  }
}

inline std::vector<LayerWeights> zero_gradients(const ModelParams& model) {
  std::vector<LayerWeights> grads;
  for (const auto& w : model.weights) grads.push_back({Tensor(w.kernel.shape()), Tensor(w.bias.shape())});
  return grads;
}

/// Forward pass only; sigmoid or softmax scores of the output layer.
inline Tensor predict(const ModelParams& model, const Tensor& input) {
  auto trace = forward(model, input);
  Tensor out = std::move(trace.activations.back());
  out.require_finite("model output");
  return out;
}

}  // namespace padkit::nn
