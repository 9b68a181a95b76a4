#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nnscope/tensor.hpp"
#include "nnscope/verdict.hpp"

namespace nnscope {

// Which observed quantity a statistical check is looking at:
// pre-activation output, post-activation output, propagated gradient, or
// updated weights.
enum class Location { FW, AF, BW, WT };

std::string location_name(Location loc);

struct ForwardRecord {
  int user_index = 0;
  Tensor pre_activation;   // V1
  Tensor post_activation;  // V2 (== V1 when the layer has no activation)
};

struct BackwardRecord {
  int user_index = 0;
  Tensor propagated_gradient;  // V3, gradient entering the previous layer
  Tensor updated_params_flat;  // kernel then bias, post-update; empty if none
  Tensor delta_params_flat;    // raw gradients, same layout
};

/// Everything observed in one training batch. Tensors are copies taken at
/// capture time; mutating the engine afterwards cannot change a snapshot.
struct BatchSnapshot {
  std::size_t epoch = 0;
  std::size_t batch = 0;
  std::uint64_t global_iteration = 0;
  std::vector<ForwardRecord> forward;    // in layer order
  double loss = 0.0;
  std::optional<double> accuracy;        // absent for regression tasks
  std::vector<BackwardRecord> backward;  // in reverse layer order
};

/// Accumulates one batch worth of captures and enforces the capture
/// protocol: forward records in ascending layer order, backward records in
/// descending order, one record per (batch, layer, direction).
class SnapshotBuilder {
 public:
  SnapshotBuilder(std::size_t epoch, std::size_t batch,
                  std::uint64_t global_iteration);

  void capture_forward(int user_index, Tensor v1, Tensor v2);
  void set_metrics(double loss, std::optional<double> accuracy);
  void capture_backward(int user_index, Tensor v3, Tensor w_flat, Tensor dw_flat);

  // Fails unless at least one forward record was captured.
  BatchSnapshot build();

 private:
  BatchSnapshot snapshot_;
  bool metrics_set_ = false;
  bool built_ = false;
};

/// Training callback. Returning a Verdict halts training immediately.
class Observer {
 public:
  virtual ~Observer() = default;
  virtual std::optional<Verdict> on_batch_end(const BatchSnapshot& snapshot) = 0;

  // Called once when training runs to completion without a verdict; the
  // first observer returning one decides the outcome.
  virtual std::optional<Verdict> finish() { return std::nullopt; }

  // Whether this monitor's verdicts carry fault-location information.
  virtual bool localizes() const { return false; }

  virtual std::string name() const = 0;
};

}  // namespace nnscope
