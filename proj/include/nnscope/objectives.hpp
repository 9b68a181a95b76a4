#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "nnscope/tensor.hpp"

namespace nnscope {

enum class LossKind { mse, mae, binary_crossentropy, categorical_crossentropy };

// Cross-entropy predictions are clipped to [kCrossEntropyEps, 1 - kCrossEntropyEps]
// before the log, so in-range predictions can never produce NaN loss.
inline constexpr double kCrossEntropyEps = 1e-7;

// Batch-mean loss. NaN/Inf inputs propagate to the result.
double loss_value(LossKind kind, const Tensor& y_pred, const Tensor& y_true);

// d(loss)/d(y_pred) under the batch-mean convention.
Tensor loss_grad(LossKind kind, const Tensor& y_pred, const Tensor& y_true);

// Seed gradient with respect to the softmax *input* when categorical
// cross-entropy directly follows a softmax: (p - y) / batch.
Tensor fused_softmax_cce_grad(const Tensor& y_pred, const Tensor& y_true);

enum class TaskKind { none, binary, categorical };

// Fraction of correct predictions; absent for TaskKind::none (regression).
std::optional<double> accuracy(const Tensor& y_pred, const Tensor& y_true,
                               TaskKind task);

struct OptimizerConfig {
  enum class Kind { sgd, adam };
  Kind kind = Kind::sgd;
  double lr = 0.01;
  double momentum = 0.0;  // sgd only
  double beta1 = 0.9;     // adam
  double beta2 = 0.999;
  double epsilon = 1e-8;

  std::string name() const { return kind == Kind::sgd ? "sgd" : "adam"; }
};

// Per-parameter optimizer state; shapes mirror the parameter. Lazily
// initialized to zeros on the first step.
struct OptimizerSlot {
  Tensor velocity;          // sgd momentum buffer
  Tensor first_moment;      // adam m
  Tensor second_moment;     // adam v
  std::uint64_t timestep = 0;
};

// Returns the updated parameter. lr = 0 leaves the parameter bit-identical.
Tensor optimizer_step(const OptimizerConfig& config, OptimizerSlot& slot,
                      const Tensor& param, const Tensor& grad);

struct Initializer {
  enum class Kind { random_normal, glorot_uniform, zeros };
  Kind kind = Kind::glorot_uniform;
  double stddev = 0.05;  // random_normal only
};

// fan_in/fan_out feed the Glorot bound; ignored by the other kinds.
Tensor initialize(const Initializer& init, std::vector<std::size_t> shape,
                  std::size_t fan_in, std::size_t fan_out, Rng& rng);

std::string loss_name(LossKind kind);
LossKind loss_from_name(const std::string& name);

}  // namespace nnscope
