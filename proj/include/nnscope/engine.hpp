#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "nnscope/detector.hpp"
#include "nnscope/layers.hpp"
#include "nnscope/objectives.hpp"
#include "nnscope/probes.hpp"
#include "nnscope/tensor.hpp"

namespace nnscope {

// One entry of the user's layer list. The attached activation (desugared
// from the layer's `activation` field) shares the user index; fault reports
// attribute it to this layer.
struct UserLayer {
  int user_index = 0;
  std::unique_ptr<Layer> core;
  std::unique_ptr<ActivationLayer> activation;  // may be null
};

struct Model {
  std::vector<UserLayer> layers;
  LossKind loss = LossKind::mse;
  OptimizerConfig optimizer;
  TaskKind task = TaskKind::none;
  Rng rng{0};
  // Categorical cross-entropy fed directly by a trailing softmax; backward
  // then seeds with (p - y)/batch and skips the softmax Jacobian.
  bool fused_softmax_ce = false;

  int last_parameterized_index() const;
};

struct TrainConfig {
  std::size_t batch_size = 1;
  std::size_t epochs = 1;
  bool shuffle = false;
  std::uint64_t seed = 0;
};

struct EpochSummary {
  double mean_loss = 0.0;
  std::optional<double> mean_accuracy;
};

struct TrainOutcome {
  Verdict verdict;
  std::vector<EpochSummary> epochs;
  std::size_t batches_executed = 0;
  double elapsed_seconds = 0.0;
  double final_loss = 0.0;
  std::optional<double> final_accuracy;
};

// Instrumented mini-batch training. Snapshots are built only when
// observers are attached; the first observer returning a Verdict halts
// training and decides the outcome.
TrainOutcome fit(Model& model, const Tensor& x, const Tensor& y,
                 const TrainConfig& config,
                 const std::vector<Observer*>& observers);

// Forward pass with dropout disabled and no instrumentation.
Tensor predict(Model& model, const Tensor& x);

}  // namespace nnscope
