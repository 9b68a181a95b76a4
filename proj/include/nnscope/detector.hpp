#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nnscope/probes.hpp"
#include "nnscope/tensor.hpp"
#include "nnscope/verdict.hpp"

namespace nnscope {

struct DetectorConfig {
  std::size_t window_n = 50;              // constant-mean window length
  double zero_threshold_fraction = 0.25;  // of total planned iterations
  std::size_t stagnation_lookback = 50;   // num_steps for the slope test
  double stagnation_tolerance = 1e-4;     // per step
  std::size_t eaf_zero_consecutive = 1;   // exact-zero accuracy batches

  // When set, the BW-location check runs on the parameter gradients
  // instead of the propagated gradient.
  bool ebdw_checks_delta_weights = false;

  bool enable_eba = true;
  bool enable_eaa = true;
  bool enable_elf = true;
  bool enable_eaf = true;
  bool enable_ebw = true;
  bool enable_ebdw = true;
  bool enable_mdl = true;
};

// What a single ANA call decided; none is falsy.
enum class AnaTrigger { none = 0, nan_inf, chronic_zero, constant_window };

struct AnaKeyState {
  std::vector<double> mean_history;
  std::size_t zero_count = 0;
};

struct AnaState {
  std::map<std::pair<int, Location>, AnaKeyState> keys;
  std::vector<double> loss_history;
  std::vector<double> accuracy_history;
  std::size_t consecutive_zero_accuracy = 0;
};

/// Statistical fault localizer. Consumes the per-batch snapshot stream and
/// reports the first failing check with its layer and phase.
class Detector : public Observer {
 public:
  Detector(DetectorConfig config, std::uint64_t total_planned_iterations);

  // Per-location statistical test: NaN/Inf mean, chronically zero mean, or
  // an unchanged mean over the last window_n calls. Updates state even when
  // nothing triggers.
  AnaTrigger ana(const Tensor& values, int layer, Location location);

  // Runs the checks in feedforward-then-backward order and returns the
  // first enabled failure.
  std::optional<Verdict> check_batch(const BatchSnapshot& snapshot);

  std::optional<Verdict> on_batch_end(const BatchSnapshot& snapshot) override;

  // Terminal verdict after a clean run. Calling it after a failure verdict
  // is a protocol error.
  Verdict finish_verdict();
  std::optional<Verdict> finish() override { return finish_verdict(); }

  bool localizes() const override { return true; }
  std::string name() const override { return "deeplocalize"; }

  const AnaState& state() const { return state_; }
  std::size_t zero_threshold() const { return zero_threshold_; }

 private:
  Verdict make_verdict(VerdictCode code, std::optional<int> layer, Phase phase,
                       const BatchSnapshot& snapshot, std::string message);

  DetectorConfig config_;
  std::size_t zero_threshold_;
  AnaState state_;
  bool fired_ = false;
  bool saw_batch_ = false;
  std::size_t last_epoch_ = 0;
  std::size_t last_batch_ = 0;
  std::uint64_t last_iteration_ = 0;
  std::chrono::steady_clock::time_point start_;
};

/// Stops when the loss becomes NaN (NaN only; Inf is ignored). Reports no
/// fault location.
class TerminateOnNaN : public Observer {
 public:
  TerminateOnNaN();
  std::optional<Verdict> on_batch_end(const BatchSnapshot& snapshot) override;
  std::string name() const override { return "terminate-on-nan"; }

 private:
  std::chrono::steady_clock::time_point start_;
};

/// Stops after `patience` consecutive batches without improvement of the
/// monitored metric. Reports no fault location.
class EarlyStopping : public Observer {
 public:
  enum class Monitor { loss, accuracy };

  explicit EarlyStopping(Monitor monitor, std::size_t patience = 1,
                         double min_delta = 0.0);

  std::optional<Verdict> on_batch_end(const BatchSnapshot& snapshot) override;
  std::string name() const override {
    return monitor_ == Monitor::loss ? "early-stop-loss" : "early-stop-acc";
  }

 private:
  Monitor monitor_;
  std::size_t patience_;
  double min_delta_;
  std::optional<double> best_;
  std::size_t bad_count_ = 0;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace nnscope
