#pragma once

// Shared by test_model and the acceptance binary.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "padkit/nn/model.hpp"
#include "padkit/nn/serialize.hpp"
#include "padkit/random.hpp"

namespace padkit::fixture {

/// A small random valid architecture with random (not Glorot) weights so
/// that the round trip has to preserve arbitrary bit patterns.
inline nn::ModelParams random_model(Rng& rng) {
  using nn::Activation;
  using nn::LayerSpec;
  nn::ModelParams m;
  const std::size_t side = 6 + rng.below(12);
  m.architecture.input = {side, side + rng.below(5), 1 + rng.below(3)};
  if (rng.below(2)) {
    m.architecture.layers.push_back(LayerSpec::conv2d(1 + rng.below(4), 1 + 2 * rng.below(3)));
    if (rng.below(2)) m.architecture.layers.push_back(LayerSpec::maxpool(2, 2));
  }
  m.architecture.layers.push_back(LayerSpec::flatten());
  if (rng.below(2)) m.architecture.layers.push_back(LayerSpec::dense(1 + rng.below(8), Activation::relu));
  const std::size_t outs = 1 + rng.below(4);
  m.architecture.layers.push_back(LayerSpec::dense(outs, outs == 1 ? Activation::sigmoid : Activation::softmax));
  m.seed = rng.bits();
  m.weights = nn::init_weights(m.architecture, m.seed);
  for (auto& w : m.weights)
    for (Tensor* t : {&w.kernel, &w.bias})
      for (double& v : t->values()) v = std::ldexp(rng.uniform(-1.0, 1.0), static_cast<int>(rng.below(40)) - 20);
  for (std::size_t i = 0; i < std::max<std::size_t>(outs, 2); ++i) m.class_names.push_back("class" + std::to_string(i));
  if (rng.below(2)) {
    nn::TrainConfig c;
    c.epochs = 1 + rng.below(50);
    c.learning_rate = rng.uniform(1e-5, 1e-1);
    c.batch_size = 1 + rng.below(64);
    c.seed = rng.bits();
    m.train_config = c;
  }
  return m;
}

inline bool bitwise_equal(const nn::ModelParams& a, const nn::ModelParams& b) {
  if (a.weights.size() != b.weights.size()) return false;
  for (std::size_t i = 0; i < a.weights.size(); ++i) {
    for (auto [x, y] : {std::pair{&a.weights[i].kernel, &b.weights[i].kernel}, std::pair{&a.weights[i].bias, &b.weights[i].bias}}) {
      if (x->shape() != y->shape()) return false;
      for (std::size_t k = 0; k < x->size(); ++k)
        if (std::bit_cast<std::uint64_t>((*x)[k]) != std::bit_cast<std::uint64_t>((*y)[k])) return false;
    }
  }
  return a == b;
}

/// Save/load `count` random models. Returns the number that failed.
inline int roundtrip_failures(std::uint64_t seed, int count) {
  Rng rng(seed);
  int failures = 0;
  for (int i = 0; i < count; ++i) {
    const auto m = random_model(rng);
    const auto bytes = nn::save_model(m);
    const auto back = nn::load_model(bytes);
    if (!bitwise_equal(m, back) || nn::save_model(back) != bytes) ++failures;
  }
  return failures;
}

inline bool throws_code(const std::vector<std::uint8_t>& bytes, nn::ModelFormatErrc want) {
  try {
    nn::load_model(bytes);
  } catch (const nn::ModelFormatError& e) {
    return e.code() == want;
  } catch (...) {
  }
  return false;
}

/// The three corruption kinds: bad magic, wrong version, truncated payload.
inline bool corruption_detected(std::uint64_t seed) {
  Rng rng(seed);
  const auto good = nn::save_model(random_model(rng));
  auto bad_magic = good;
  bad_magic[0] = 'X';
  auto bad_version = good;
  bad_version[4] = 2;
  auto truncated = good;
  truncated.resize(good.size() - 8);
  auto extended = good;
  extended.push_back(0);
  return throws_code(bad_magic, nn::ModelFormatErrc::bad_magic) &&
         throws_code(bad_version, nn::ModelFormatErrc::version_mismatch) &&
         throws_code(truncated, nn::ModelFormatErrc::length_mismatch) &&
         throws_code(extended, nn::ModelFormatErrc::length_mismatch);
}

/// Reference shapes for the spoofnet stack, computed by hand.
inline bool spoofnet_shapes_ok() {
  const auto chain = nn::shape_chain(nn::build_spoofnet(140, 140, 1, 1).architecture);
  const std::vector<Shape> want = {{136, 136, 16}, {45, 45, 16}, {41, 41, 32}, {13, 13, 32}, {5408}, {128}, {1}};
  if (chain != want) return false;
  const auto wide = nn::shape_chain(nn::build_spoofnet(480, 640, 3, 1).architecture);
  // 480 -> 476 -> 158 -> 154 -> 51 ; 640 -> 636 -> 212 -> 208 -> 69
  return wide[4] == Shape{51 * 69 * 32} && wide[4][0] == 112608 && wide.back() == Shape{3};
}

}  // namespace padkit::fixture
