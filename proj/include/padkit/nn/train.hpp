#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "padkit/error.hpp"
#include "padkit/nn/adam.hpp"
#include "padkit/nn/loss.hpp"
#include "padkit/nn/model.hpp"
#include "padkit/random.hpp"
#include "padkit/tensor.hpp"

namespace padkit::nn {

struct Sample {
  Tensor input;
  std::size_t label = 0;  // class index; with a sigmoid head, 1 is the positive class
};

struct Batch {
  std::vector<Sample> samples;
};

/// Single-consumer sequence of batches for one pass over a split.
class BatchStream {
 public:
  virtual ~BatchStream() = default;
  virtual bool next(Batch& batch) = 0;
};

/// Source of per-epoch batch streams; epoch order must be a pure function of
/// (provider state, epoch).
class BatchProvider {
 public:
  virtual ~BatchProvider() = default;
  virtual std::size_t size() const = 0;
  virtual std::unique_ptr<BatchStream> epoch(std::uint64_t epoch) const = 0;
};

/// Samples held in memory, reshuffled every epoch with seed ^ epoch.
class InMemoryBatches : public BatchProvider {
 public:
  InMemoryBatches(std::vector<Sample> samples, std::size_t batch_size, std::uint64_t seed, bool shuffle = true)
      : samples_(std::move(samples)), batch_size_(batch_size), seed_(seed), shuffle_(shuffle) {
    if (batch_size_ == 0) throw ValidationError("batch size must be at least 1");
  }

  std::size_t size() const override { return samples_.size(); }

  std::unique_ptr<BatchStream> epoch(std::uint64_t epoch) const override {
    std::vector<std::size_t> order(samples_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (shuffle_) {
      Rng rng(seed_ ^ epoch);
      padkit::shuffle(order, rng);
    }
    return std::make_unique<Stream>(this, std::move(order));
  }

  const std::vector<Sample>& samples() const { return samples_; }

 private:
  class Stream : public BatchStream {
   public:
    Stream(const InMemoryBatches* owner, std::vector<std::size_t> order) : owner_(owner), order_(std::move(order)) {}
    bool next(Batch& batch) override {
      batch.samples.clear();
      if (pos_ >= order_.size()) return false;
      const std::size_t end = std::min(order_.size(), pos_ + owner_->batch_size_);
      for (; pos_ < end; ++pos_) batch.samples.push_back(owner_->samples_[order_[pos_]]);
      return true;
    }

   private:
    const InMemoryBatches* owner_;
    std::vector<std::size_t> order_;
    std::size_t pos_ = 0;
  };

  std::vector<Sample> samples_;
  std::size_t batch_size_;
  std::uint64_t seed_;
  bool shuffle_;
};

inline std::size_t predicted_class(const Tensor& scores) {
  if (scores.size() == 1) return scores[0] >= 0.5 ? 1 : 0;
  return static_cast<std::size_t>(std::max_element(scores.values().begin(), scores.values().end()) -
                                  scores.values().begin());
}

struct SampleLoss {
  double loss = 0.0;
  Tensor grad_logits;
};

/// Loss of one output against its label plus dL/d(logits) for the combined
/// sigmoid+BCE or softmax+CE head.
inline SampleLoss output_loss(const Tensor& output, std::size_t label) {
  if (output.size() == 1) {
    if (label > 1) throw ValidationError("sigmoid head needs labels 0 or 1, got " + std::to_string(label));
    const int y = static_cast<int>(label);
    Tensor g({1});
    g[0] = output[0] - y;
    return {loss_binary_ce(output[0], y).loss, std::move(g)};
  }
  return {loss_categorical_ce(output, label).loss, softmax_ce_logit_grad(output, label)};
}

/// Mean loss over a provider, no parameter updates.
inline double evaluate_loss(const ModelParams& model, const BatchProvider& data) {
  auto stream = data.epoch(0);
  Batch batch;
  double total = 0.0;
  std::size_t n = 0;
  while (stream->next(batch)) {
    for (const Sample& s : batch.samples) {
      total += output_loss(predict(model, s.input), s.label).loss;
      ++n;
    }
  }
  if (n == 0) throw ValidationError("cannot evaluate loss on an empty set");
  return total / static_cast<double>(n);
}

inline double evaluate_accuracy(const ModelParams& model, const BatchProvider& data) {
  auto stream = data.epoch(0);
  Batch batch;
  std::size_t correct = 0, n = 0;
  while (stream->next(batch)) {
    for (const Sample& s : batch.samples) {
      correct += predicted_class(predict(model, s.input)) == s.label ? 1 : 0;
      ++n;
    }
  }
  if (n == 0) throw ValidationError("cannot evaluate accuracy on an empty set");
  return static_cast<double>(correct) / static_cast<double>(n);
}

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_accuracy = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
  ModelParams model;
  std::vector<EpochMetrics> history;
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

/// Mini-batch Adam on the mean batch loss. Deterministic given the model's
/// initial weights, the providers and the config. Non-finite losses or
/// gradients abort with NumericalError naming epoch and step.
inline TrainResult train(ModelParams model, const BatchProvider& train_data, const BatchProvider* validation,
                         const TrainConfig& config, const EpochCallback& on_epoch = {}) {
  config.validate();
  if (train_data.size() == 0) throw ValidationError("training set is empty");
  model.train_config = config;
  auto params = model.parameters();
  AdamState state(params);
  TrainResult result;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    auto stream = train_data.epoch(epoch);
    Batch batch;
    double loss_sum = 0.0;
    std::size_t seen = 0, step = 0;
    while (stream->next(batch)) {
      if (batch.samples.empty()) continue;
      ++step;
      auto grads = zero_gradients(model);
      for (const Sample& s : batch.samples) {
        ForwardTrace trace;
        try {
          trace = forward(model, s.input);
        } catch (const NumericalError& e) {
          throw NumericalError("training aborted at epoch " + std::to_string(epoch) + ", step " +
                               std::to_string(step) + ": " + e.what());
        }
        auto [loss, grad_logits] = output_loss(trace.activations.back(), s.label);
        if (!std::isfinite(loss)) {
          throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                               std::to_string(step));
        }
        loss_sum += loss;
        backward_from_logits(model, trace, std::move(grad_logits), grads);
      }
      seen += batch.samples.size();
      const double scale = 1.0 / static_cast<double>(batch.samples.size());
      std::vector<const Tensor*> grad_ptrs;
      for (auto& g : grads) {
        for (Tensor* t : {&g.kernel, &g.bias}) {
          for (double& v : t->values()) v *= scale;
          grad_ptrs.push_back(t);
        }
      }
      try {
        adam_step(params, grad_ptrs, state, config.adam());
      } catch (const NumericalError& e) {
        throw NumericalError("training aborted at epoch " + std::to_string(epoch) + ", step " +
                             std::to_string(step) + ": " + e.what());
      }
    }
    EpochMetrics metrics{epoch, loss_sum / static_cast<double>(seen)};
    if (validation && validation->size() > 0) {
      try {
        metrics.val_accuracy = evaluate_accuracy(model, *validation);
      } catch (const NumericalError& e) {
        throw NumericalError("validation after epoch " + std::to_string(epoch) + ": " + e.what());
      }
    }
    result.history.push_back(metrics);
    if (on_epoch) on_epoch(metrics);
  }
  result.model = std::move(model);
  return result;
}

}  // namespace padkit::nn
