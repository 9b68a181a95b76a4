#pragma once

// Brute-force re-scan of a snapshot stream, written as a direct
// transliteration of the published fault-localization procedure. Kept
// deliberately independent of the production detector so the two can
// cross-check each other.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nnscope/probes.hpp"

namespace testsupport {

struct RefConfig {
  std::size_t window_n = 50;
  double zero_fraction = 0.25;
  std::uint64_t total_iterations = 0;
  std::size_t lookback = 50;
  double tolerance = 1e-4;
  std::size_t eaf_zero_consecutive = 1;
  bool eba = true, eaa = true, elf = true, eaf = true, ebw = true,
       ebdw = true, mdl = true;
};

struct RefVerdict {
  std::string code;
  int layer = 0;  // 0 = no layer
  std::uint64_t iteration = 0;
  // Ordinal of the triggering check inside its batch scan, for ordering
  // comparisons.
  std::size_t scan_position = 0;
};

namespace refdetail {

struct KeyState {
  std::vector<double> means;
  std::size_t zeros = 0;
};

inline bool same_bits(double a, double b) {
  std::uint64_t ua, ub;
  std::memcpy(&ua, &a, sizeof a);
  std::memcpy(&ub, &b, sizeof b);
  return ua == ub;
}

inline double tensor_mean(const nnscope::Tensor& t) {
  double s = 0.0;
  for (double v : t.data()) s += v;
  return s / static_cast<double>(t.size());
}

}  // namespace refdetail

class ReferenceScanner {
 public:
  explicit ReferenceScanner(RefConfig config) : config_(config) {
    double t = std::ceil(config_.zero_fraction *
                         static_cast<double>(config_.total_iterations));
    threshold_ = t < 1.0 ? 1 : static_cast<std::size_t>(t);
  }

  // True when the per-key statistical test fires on this value.
  bool ana(const nnscope::Tensor& values, int layer, const std::string& loc) {
    auto& ks = keys_[loc + "#" + std::to_string(layer)];
    double m = refdetail::tensor_mean(values);
    ks.means.push_back(m);
    if (std::isnan(m) || std::isinf(m)) return true;
    if (m == 0.0) {
      ks.zeros += 1;
      if (ks.zeros >= threshold_) return true;
    }
    if (ks.means.size() >= config_.window_n) {
      bool all_equal = true;
      std::size_t first = ks.means.size() - config_.window_n;
      for (std::size_t i = first; i < ks.means.size(); ++i) {
        if (!refdetail::same_bits(ks.means[i], ks.means[first])) {
          all_equal = false;
          break;
        }
      }
      if (all_equal) return true;
    }
    return false;
  }

  std::optional<RefVerdict> scan_batch(const nnscope::BatchSnapshot& snap) {
    std::size_t pos = 0;
    for (const auto& rec : snap.forward) {
      if (ana(rec.pre_activation, rec.user_index, "FW") && config_.eba) {
        return RefVerdict{"EBA", rec.user_index, snap.global_iteration, pos};
      }
      ++pos;
      if (ana(rec.post_activation, rec.user_index, "AF") && config_.eaa) {
        return RefVerdict{"EAA", rec.user_index, snap.global_iteration, pos};
      }
      ++pos;
    }
    if ((std::isnan(snap.loss) || std::isinf(snap.loss)) && config_.elf) {
      return RefVerdict{"ELF", 0, snap.global_iteration, pos};
    }
    ++pos;
    if (snap.accuracy) {
      double a = *snap.accuracy;
      if ((std::isnan(a) || std::isinf(a)) && config_.eaf) {
        return RefVerdict{"EAF", 0, snap.global_iteration, pos};
      }
      if (a == 0.0) {
        zero_acc_run_ += 1;
        if (zero_acc_run_ >= config_.eaf_zero_consecutive && config_.eaf) {
          return RefVerdict{"EAF", 0, snap.global_iteration, pos};
        }
      } else {
        zero_acc_run_ = 0;
      }
    }
    ++pos;
    losses_.push_back(snap.loss);
    if (snap.accuracy) accs_.push_back(*snap.accuracy);
    if (config_.mdl) {
      std::size_t n = config_.lookback;
      bool ready = losses_.size() > n && (!snap.accuracy || accs_.size() > n);
      if (ready) {
        double lslope =
            (losses_.back() - losses_[losses_.size() - 1 - n]) / double(n);
        bool stuck = lslope >= -config_.tolerance;
        if (snap.accuracy) {
          double aslope =
              (accs_.back() - accs_[accs_.size() - 1 - n]) / double(n);
          stuck = stuck && aslope <= config_.tolerance;
        }
        if (stuck) return RefVerdict{"MDL", 0, snap.global_iteration, pos};
      }
    }
    ++pos;
    for (const auto& rec : snap.backward) {
      if (!rec.propagated_gradient.empty()) {
        if (ana(rec.propagated_gradient, rec.user_index, "BW") && config_.ebdw) {
          return RefVerdict{"EBDW", rec.user_index, snap.global_iteration, pos};
        }
      }
      ++pos;
      if (!rec.updated_params_flat.empty()) {
        if (ana(rec.updated_params_flat, rec.user_index, "WT") && config_.ebw) {
          return RefVerdict{"EBW", rec.user_index, snap.global_iteration, pos};
        }
      }
      ++pos;
    }
    return std::nullopt;
  }

  std::optional<RefVerdict> scan(const std::vector<nnscope::BatchSnapshot>& stream) {
    for (const auto& snap : stream) {
      if (auto v = scan_batch(snap)) return v;
    }
    return std::nullopt;
  }

 private:
  RefConfig config_;
  std::size_t threshold_ = 1;
  std::map<std::string, refdetail::KeyState> keys_;
  std::vector<double> losses_;
  std::vector<double> accs_;
  std::size_t zero_acc_run_ = 0;
};

// ------------------------------------------------------------------ fuzz

struct StreamLayout {
  int layers = 2;
  std::vector<bool> parameterized;
  bool has_accuracy = true;
};

// Randomized snapshot stream with injected anomalies: NaN tensors, frozen
// values (constant means), exact zeros, NaN losses and zero accuracies.
inline std::vector<nnscope::BatchSnapshot> make_fuzz_stream(
    nnscope::Rng& rng, std::size_t length, std::size_t anomalies,
    StreamLayout* layout_out = nullptr) {
  using nnscope::BatchSnapshot;
  using nnscope::SnapshotBuilder;
  using nnscope::Tensor;

  StreamLayout layout;
  layout.layers = 1 + static_cast<int>(rng.next_u64() % 4);
  layout.parameterized.resize(layout.layers);
  for (int i = 0; i < layout.layers; ++i) {
    layout.parameterized[i] = rng.uniform() < 0.7;
  }
  layout.parameterized[0] = true;
  layout.has_accuracy = rng.uniform() < 0.7;

  enum class Anomaly { nan_fw, frozen_af, zero_bw, nan_loss, zero_acc, frozen_metrics };
  struct Injection {
    Anomaly kind;
    std::size_t at;
    int layer;
  };
  std::vector<Injection> injections;
  for (std::size_t a = 0; a < anomalies; ++a) {
    Injection inj;
    int kinds = layout.has_accuracy ? 6 : 4;
    inj.kind = static_cast<Anomaly>(rng.next_u64() % kinds);
    inj.at = rng.next_u64() % length;
    inj.layer = 1 + static_cast<int>(rng.next_u64() % layout.layers);
    injections.push_back(inj);
  }

  auto rand_tensor = [&rng](double scale) {
    Tensor t({2, 3});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = scale * rng.normal();
    return t;
  };

  std::vector<BatchSnapshot> stream;
  Tensor frozen = rand_tensor(1.0);
  for (std::size_t it = 0; it < length; ++it) {
    SnapshotBuilder builder(it / 10, it % 10, it);
    double loss = std::abs(rng.normal(1.0, 0.3));
    std::optional<double> acc;
    if (layout.has_accuracy) acc = 0.25 + 0.5 * rng.uniform();

    std::vector<int> frozen_af_layers, zero_bw_layers, nan_fw_layers;
    bool nan_loss = false, zero_acc = false, frozen_metrics = false;
    for (const Injection& inj : injections) {
      if (it < inj.at) continue;
      switch (inj.kind) {
        case Anomaly::nan_fw:
          if (it == inj.at) nan_fw_layers.push_back(inj.layer);
          break;
        case Anomaly::frozen_af: frozen_af_layers.push_back(inj.layer); break;
        case Anomaly::zero_bw: zero_bw_layers.push_back(inj.layer); break;
        case Anomaly::nan_loss:
          if (it == inj.at) nan_loss = true;
          break;
        case Anomaly::zero_acc: zero_acc = true; break;
        case Anomaly::frozen_metrics: frozen_metrics = true; break;
      }
    }

    for (int l = 1; l <= layout.layers; ++l) {
      Tensor v1 = rand_tensor(1.0);
      Tensor v2 = rand_tensor(1.0);
      for (int nl : nan_fw_layers) {
        if (nl == l) {
          for (auto& v : v1.data()) v = std::nan("");
        }
      }
      for (int fl : frozen_af_layers) {
        if (fl == l) v2 = frozen;
      }
      builder.capture_forward(l, std::move(v1), std::move(v2));
    }
    if (nan_loss) loss = std::nan("");
    if (frozen_metrics) {
      loss = 0.75;
      if (acc) acc = 0.5;
    }
    if (zero_acc && acc) acc = 0.0;
    builder.set_metrics(loss, acc);
    for (int l = layout.layers; l >= 1; --l) {
      Tensor v3 = rand_tensor(0.1);
      for (int zl : zero_bw_layers) {
        if (zl == l) v3 = Tensor({2, 3});
      }
      Tensor w, dw;
      if (layout.parameterized[l - 1]) {
        w = rand_tensor(1.0).reshaped({6});
        dw = rand_tensor(0.1).reshaped({6});
      }
      builder.capture_backward(l, std::move(v3), std::move(w), std::move(dw));
    }
    stream.push_back(builder.build());
  }
  if (layout_out) *layout_out = layout;
  return stream;
}

}  // namespace testsupport
