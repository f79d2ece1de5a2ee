#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "padkit/error.hpp"
#include "padkit/nn/model.hpp"

// PADM container:
//   "PADM" | u32 version | u64 metadata length | metadata (JSON text) |
//   parameters as little-endian float64, kernel then bias per trainable layer.

namespace padkit::nn {

inline constexpr std::uint32_t kPadmVersion = 1;

enum class ModelFormatErrc { bad_magic, version_mismatch, length_mismatch, bad_metadata };

class ModelFormatError : public DataError {
 public:
  ModelFormatError(ModelFormatErrc code, const std::string& what) : DataError(what), code_(code) {}
  ModelFormatErrc code() const { return code_; }

 private:
  ModelFormatErrc code_;
};

namespace detail {

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

template <typename T>
T get_le(std::span<const std::uint8_t> in, std::size_t pos) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(in[pos + i]) << (8 * i);
  return value;
}

inline LayerKind layer_kind_from(const std::string& s) {
  if (s == "conv2d") return LayerKind::conv2d;
  if (s == "maxpool") return LayerKind::maxpool;
  if (s == "flatten") return LayerKind::flatten;
  if (s == "dense") return LayerKind::dense;
  throw ModelFormatError(ModelFormatErrc::bad_metadata, "unknown layer kind '" + s + "'");
}

inline Activation activation_from(const std::string& s) {
  if (s == "none") return Activation::none;
  if (s == "relu") return Activation::relu;
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "softmax") return Activation::softmax;
  throw ModelFormatError(ModelFormatErrc::bad_metadata, "unknown activation '" + s + "'");
}

}  // namespace detail

inline nlohmann::ordered_json model_metadata(const ModelParams& model) {
  nlohmann::ordered_json meta;
  meta["format"] = "padm";
  meta["input_shape"] = model.architecture.input;
  auto& layers = meta["layers"] = nlohmann::ordered_json::array();
  for (const LayerSpec& l : model.architecture.layers) {
    nlohmann::ordered_json j;
    j["kind"] = to_string(l.kind);
    switch (l.kind) {
      case LayerKind::conv2d:
        j["kernel"] = l.kernel;
        j["filters"] = l.filters;
        j["activation"] = to_string(l.activation);
        break;
      case LayerKind::maxpool:
        j["window"] = l.window;
        j["stride"] = l.stride;
        break;
      case LayerKind::flatten:
        break;
      case LayerKind::dense:
        j["units"] = l.units;
        j["activation"] = to_string(l.activation);
        break;
    }
    layers.push_back(std::move(j));
  }
  auto& shapes = meta["parameter_shapes"] = nlohmann::ordered_json::array();
  for (const auto& w : model.weights) {
    shapes.push_back(w.kernel.shape());
    shapes.push_back(w.bias.shape());
  }
  meta["seed"] = model.seed;
  meta["class_names"] = model.class_names;
  if (model.train_config) {
    const TrainConfig& c = *model.train_config;
    meta["train_config"] = {{"epochs", c.epochs},       {"learning_rate", c.learning_rate},
                            {"batch_size", c.batch_size}, {"beta1", c.beta1},
                            {"beta2", c.beta2},         {"epsilon", c.epsilon},
                            {"seed", c.seed}};
  } else {
    meta["train_config"] = nullptr;
  }
  return meta;
}

inline std::vector<std::uint8_t> save_model(const ModelParams& model) {
  const std::string meta = model_metadata(model).dump(2) + "\n";
  std::vector<std::uint8_t> out{'P', 'A', 'D', 'M'};
  detail::put_le<std::uint32_t>(out, kPadmVersion);
  detail::put_le<std::uint64_t>(out, meta.size());
  out.insert(out.end(), meta.begin(), meta.end());
  for (const auto& w : model.weights) {
    for (const Tensor* t : {&w.kernel, &w.bias}) {
      for (double v : t->values()) detail::put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
    }
  }
  return out;
}

inline ModelParams load_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "PADM", 4) != 0) {
    throw ModelFormatError(ModelFormatErrc::bad_magic, "not a PADM model file (bad magic)");
  }
  if (bytes.size() < 16) throw ModelFormatError(ModelFormatErrc::length_mismatch, "PADM header truncated");
  const auto version = detail::get_le<std::uint32_t>(bytes, 4);
  if (version != kPadmVersion) {
    throw ModelFormatError(ModelFormatErrc::version_mismatch, "PADM version " + std::to_string(version) +
                                                                  " unsupported (expected " +
                                                                  std::to_string(kPadmVersion) + ")");
  }
  const auto meta_len = detail::get_le<std::uint64_t>(bytes, 8);
  if (meta_len > bytes.size() - 16) {
    throw ModelFormatError(ModelFormatErrc::length_mismatch, "PADM metadata block truncated");
  }
  const std::string text(reinterpret_cast<const char*>(bytes.data()) + 16, meta_len);

  ModelParams model;
  std::vector<Shape> shapes;
  try {
    const auto meta = nlohmann::json::parse(text);
    model.architecture.input = meta.at("input_shape").get<Shape>();
    for (const auto& j : meta.at("layers")) {
      LayerSpec l;
      l.kind = detail::layer_kind_from(j.at("kind").get<std::string>());
      l.kernel = j.value("kernel", std::size_t{0});
      l.filters = j.value("filters", std::size_t{0});
      l.window = j.value("window", std::size_t{0});
      l.stride = j.value("stride", std::size_t{0});
      l.units = j.value("units", std::size_t{0});
      l.activation = detail::activation_from(j.value("activation", std::string("none")));
      model.architecture.layers.push_back(l);
    }
    shapes = meta.at("parameter_shapes").get<std::vector<Shape>>();
    model.seed = meta.at("seed").get<std::uint64_t>();
    model.class_names = meta.at("class_names").get<std::vector<std::string>>();
    const auto& tc = meta.at("train_config");
    if (!tc.is_null()) {
      TrainConfig c;
      c.epochs = tc.at("epochs").get<std::size_t>();
      c.learning_rate = tc.at("learning_rate").get<double>();
      c.batch_size = tc.at("batch_size").get<std::size_t>();
      c.beta1 = tc.at("beta1").get<double>();
      c.beta2 = tc.at("beta2").get<double>();
      c.epsilon = tc.at("epsilon").get<double>();
      c.seed = tc.at("seed").get<std::uint64_t>();
      model.train_config = c;
    }
  } catch (const nlohmann::json::exception& e) {
    throw ModelFormatError(ModelFormatErrc::bad_metadata, std::string("PADM metadata: ") + e.what());
  }
  try {
    if (parameter_shapes(model.architecture) != shapes) {
      throw ModelFormatError(ModelFormatErrc::bad_metadata, "PADM parameter shapes disagree with architecture");
    }
  } catch (const ValidationError& e) {
    throw ModelFormatError(ModelFormatErrc::bad_metadata, std::string("PADM architecture invalid: ") + e.what());
  }

  std::size_t expected = 0;
  for (const auto& s : shapes) expected += shape_size(s);
  const std::size_t payload = bytes.size() - 16 - meta_len;
  if (payload != expected * 8) {
    throw ModelFormatError(ModelFormatErrc::length_mismatch,
                           "PADM payload holds " + std::to_string(payload) + " bytes, architecture needs " +
                               std::to_string(expected * 8));
  }
  std::size_t pos = 16 + meta_len;
  auto read_tensor = [&](const Shape& shape) {
    Tensor t(shape);
    for (double& v : t.values()) {
      v = std::bit_cast<double>(detail::get_le<std::uint64_t>(bytes, pos));
      pos += 8;
    }
    return t;
  };
  for (std::size_t i = 0; i < shapes.size(); i += 2) {
    Tensor kernel = read_tensor(shapes[i]);
    Tensor bias = read_tensor(shapes[i + 1]);
    model.weights.push_back({std::move(kernel), std::move(bias)});
  }
  return model;
}

inline void save_model_file(const std::filesystem::path& path, const ModelParams& model) {
  const auto bytes = save_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write model " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing model " + path.string());
}

inline ModelParams load_model_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return load_model(bytes);
}

}  // namespace padkit::nn
