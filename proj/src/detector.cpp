#include "nnscope/detector.hpp"

#include <bit>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nnscope/errors.hpp"

namespace nnscope {

namespace {

double elapsed_since(std::chrono::steady_clock::time_point start) {
  auto d = std::chrono::steady_clock::now() - start;
  double s = std::chrono::duration<double>(d).count();
  return s > 0.0 ? s : 1e-9;
}

bool bits_equal(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

std::string quantity_name(Location loc) {
  switch (loc) {
    case Location::FW: return "pre-activation output (FW)";
    case Location::AF: return "post-activation output (AF)";
    case Location::BW: return "propagated gradient (BW)";
    case Location::WT: return "updated weights (WT)";
  }
  return "?";
}

}  // namespace

std::string verdict_code_name(VerdictCode code) {
  switch (code) {
    case VerdictCode::EBA: return "EBA";
    case VerdictCode::EAA: return "EAA";
    case VerdictCode::ELF: return "ELF";
    case VerdictCode::EAF: return "EAF";
    case VerdictCode::EBW: return "EBW";
    case VerdictCode::EBDW: return "EBDW";
    case VerdictCode::MDL: return "MDL";
    case VerdictCode::CM: return "CM";
  }
  return "?";
}

std::string phase_name(Phase phase) {
  switch (phase) {
    case Phase::forward: return "forward";
    case Phase::backward: return "backward";
    case Phase::metric: return "metric";
    case Phase::terminal: return "terminal";
  }
  return "?";
}

std::string verdict_to_json(const Verdict& verdict, int indent) {
  nlohmann::json j;
  j["code"] = verdict_code_name(verdict.code);
  if (verdict.layer) {
    j["layer"] = *verdict.layer;
  } else {
    j["layer"] = nullptr;
  }
  j["phase"] = phase_name(verdict.phase);
  j["epoch"] = verdict.epoch;
  j["batch"] = verdict.batch;
  j["iteration"] = verdict.global_iteration;
  j["elapsed_seconds"] = verdict.elapsed_seconds;
  j["message"] = verdict.message;
  return j.dump(indent);
}

Detector::Detector(DetectorConfig config, std::uint64_t total_planned_iterations)
    : config_(config), start_(std::chrono::steady_clock::now()) {
  if (config_.window_n < 2) {
    throw ConfigError("window_n must be >= 2");
  }
  if (!(config_.zero_threshold_fraction > 0.0 &&
        config_.zero_threshold_fraction <= 1.0)) {
    throw ConfigError("zero_threshold_fraction must be in (0, 1]");
  }
  if (config_.stagnation_lookback < 1) {
    throw ConfigError("stagnation_lookback must be >= 1");
  }
  if (config_.eaf_zero_consecutive < 1) {
    throw ConfigError("eaf_zero_consecutive must be >= 1");
  }
  double t = std::ceil(config_.zero_threshold_fraction *
                       static_cast<double>(total_planned_iterations));
  zero_threshold_ = t < 1.0 ? 1 : static_cast<std::size_t>(t);
}

AnaTrigger Detector::ana(const Tensor& values, int layer, Location location) {
  if (values.empty()) throw ContractError("ana on empty tensor");
  double m = mean(values);
  AnaKeyState& ks = state_.keys[{layer, location}];
  ks.mean_history.push_back(m);
  if (std::isnan(m) || std::isinf(m)) {
    return AnaTrigger::nan_inf;
  }
  if (m == 0.0) {
    ks.zero_count += 1;
    if (ks.zero_count >= zero_threshold_) {
      return AnaTrigger::chronic_zero;
    }
  }
  if (ks.mean_history.size() >= config_.window_n) {
    std::size_t first = ks.mean_history.size() - config_.window_n;
    bool constant = true;
    for (std::size_t i = first + 1; i < ks.mean_history.size(); ++i) {
      if (!bits_equal(ks.mean_history[i], ks.mean_history[first])) {
        constant = false;
        break;
      }
    }
    if (constant) return AnaTrigger::constant_window;
  }
  return AnaTrigger::none;
}

Verdict Detector::make_verdict(VerdictCode code, std::optional<int> layer,
                               Phase phase, const BatchSnapshot& snapshot,
                               std::string message) {
  Verdict v;
  v.code = code;
  v.layer = layer;
  v.phase = phase;
  v.epoch = snapshot.epoch;
  v.batch = snapshot.batch;
  v.global_iteration = snapshot.global_iteration;
  v.elapsed_seconds = elapsed_since(start_);
  v.message = std::move(message);
  fired_ = true;
  return v;
}

std::optional<Verdict> Detector::check_batch(const BatchSnapshot& snapshot) {
  if (fired_) {
    throw ProtocolError("check_batch after a failure verdict");
  }
  saw_batch_ = true;
  last_epoch_ = snapshot.epoch;
  last_batch_ = snapshot.batch;
  last_iteration_ = snapshot.global_iteration;

  auto trigger_text = [this](AnaTrigger t, Location loc, int layer) {
    std::ostringstream os;
    os << "mean of " << quantity_name(loc) << " at layer " << layer;
    switch (t) {
      case AnaTrigger::nan_inf:
        os << " is NaN or Inf";
        break;
      case AnaTrigger::chronic_zero:
        os << " was exactly zero in " << zero_threshold_
           << " checks (threshold " << zero_threshold_ << ")";
        break;
      case AnaTrigger::constant_window:
        os << " unchanged over the last " << config_.window_n << " iterations";
        break;
      case AnaTrigger::none:
        break;
    }
    return os.str();
  };

  // Feedforward phase, layer by layer in order.
  for (const ForwardRecord& rec : snapshot.forward) {
    AnaTrigger t = ana(rec.pre_activation, rec.user_index, Location::FW);
    if (t != AnaTrigger::none && config_.enable_eba) {
      return make_verdict(VerdictCode::EBA, rec.user_index, Phase::forward,
                          snapshot, trigger_text(t, Location::FW, rec.user_index));
    }
    t = ana(rec.post_activation, rec.user_index, Location::AF);
    if (t != AnaTrigger::none && config_.enable_eaa) {
      return make_verdict(VerdictCode::EAA, rec.user_index, Phase::forward,
                          snapshot, trigger_text(t, Location::AF, rec.user_index));
    }
  }

  // Loss and accuracy.
  if ((std::isnan(snapshot.loss) || std::isinf(snapshot.loss)) &&
      config_.enable_elf) {
    return make_verdict(VerdictCode::ELF, std::nullopt, Phase::metric, snapshot,
                        "loss is NaN or Inf");
  }
  if (snapshot.accuracy) {
    double acc = *snapshot.accuracy;
    if ((std::isnan(acc) || std::isinf(acc)) && config_.enable_eaf) {
      return make_verdict(VerdictCode::EAF, std::nullopt, Phase::metric,
                          snapshot, "accuracy is NaN or Inf");
    }
    if (acc == 0.0) {
      state_.consecutive_zero_accuracy += 1;
      if (state_.consecutive_zero_accuracy >= config_.eaf_zero_consecutive &&
          config_.enable_eaf) {
        std::ostringstream os;
        os << "accuracy was exactly zero for "
           << state_.consecutive_zero_accuracy << " consecutive batch(es)";
        return make_verdict(VerdictCode::EAF, std::nullopt, Phase::metric,
                            snapshot, os.str());
      }
    } else {
      state_.consecutive_zero_accuracy = 0;
    }
  }

  // Stagnation: compare against the value stagnation_lookback steps back.
  state_.loss_history.push_back(snapshot.loss);
  if (snapshot.accuracy) state_.accuracy_history.push_back(*snapshot.accuracy);
  if (config_.enable_mdl) {
    std::size_t n = config_.stagnation_lookback;
    const auto& lh = state_.loss_history;
    const auto& ah = state_.accuracy_history;
    bool loss_ready = lh.size() > n;
    bool acc_tracked = snapshot.accuracy.has_value();
    bool acc_ready = !acc_tracked || ah.size() > n;
    if (loss_ready && acc_ready) {
      double steps = static_cast<double>(n);
      double loss_slope = (lh.back() - lh[lh.size() - 1 - n]) / steps;
      bool stagnant = loss_slope >= -config_.stagnation_tolerance;
      double acc_slope = 0.0;
      if (acc_tracked) {
        acc_slope = (ah.back() - ah[ah.size() - 1 - n]) / steps;
        stagnant = stagnant && acc_slope <= config_.stagnation_tolerance;
      }
      if (stagnant) {
        std::ostringstream os;
        os << "loss slope " << loss_slope;
        if (acc_tracked) os << " and accuracy slope " << acc_slope;
        os << " over " << n << " steps: model does not learn";
        return make_verdict(VerdictCode::MDL, std::nullopt, Phase::metric,
                            snapshot, os.str());
      }
    }
  }

  // Backpropagation phase, in reverse layer order as recorded.
  for (const BackwardRecord& rec : snapshot.backward) {
    const Tensor& bw_values = config_.ebdw_checks_delta_weights
                                  ? rec.delta_params_flat
                                  : rec.propagated_gradient;
    if (!bw_values.empty()) {
      AnaTrigger t = ana(bw_values, rec.user_index, Location::BW);
      if (t != AnaTrigger::none && config_.enable_ebdw) {
        return make_verdict(VerdictCode::EBDW, rec.user_index, Phase::backward,
                            snapshot,
                            trigger_text(t, Location::BW, rec.user_index));
      }
    }
    if (!rec.updated_params_flat.empty()) {
      AnaTrigger t = ana(rec.updated_params_flat, rec.user_index, Location::WT);
      if (t != AnaTrigger::none && config_.enable_ebw) {
        return make_verdict(VerdictCode::EBW, rec.user_index, Phase::backward,
                            snapshot,
                            trigger_text(t, Location::WT, rec.user_index));
      }
    }
  }
  return std::nullopt;
}

std::optional<Verdict> Detector::on_batch_end(const BatchSnapshot& snapshot) {
  return check_batch(snapshot);
}

Verdict Detector::finish_verdict() {
  if (fired_) {
    throw ProtocolError("finish after a failure verdict");
  }
  Verdict v;
  v.code = VerdictCode::CM;
  v.phase = Phase::terminal;
  v.epoch = saw_batch_ ? last_epoch_ : 0;
  v.batch = saw_batch_ ? last_batch_ : 0;
  v.global_iteration = saw_batch_ ? last_iteration_ : 0;
  v.elapsed_seconds = elapsed_since(start_);
  v.message = "training completed: correct model";
  return v;
}

TerminateOnNaN::TerminateOnNaN() : start_(std::chrono::steady_clock::now()) {}

std::optional<Verdict> TerminateOnNaN::on_batch_end(const BatchSnapshot& snapshot) {
  if (!std::isnan(snapshot.loss)) return std::nullopt;
  Verdict v;
  v.code = VerdictCode::ELF;
  v.phase = Phase::metric;
  v.epoch = snapshot.epoch;
  v.batch = snapshot.batch;
  v.global_iteration = snapshot.global_iteration;
  v.elapsed_seconds = elapsed_since(start_);
  v.message = "TerminateOnNaN: loss is NaN";
  return v;
}

EarlyStopping::EarlyStopping(Monitor monitor, std::size_t patience,
                             double min_delta)
    : monitor_(monitor),
      patience_(patience),
      min_delta_(min_delta),
      start_(std::chrono::steady_clock::now()) {
  if (patience_ < 1) throw ConfigError("early stopping patience must be >= 1");
}

std::optional<Verdict> EarlyStopping::on_batch_end(const BatchSnapshot& snapshot) {
  double value;
  if (monitor_ == Monitor::loss) {
    value = snapshot.loss;
  } else {
    if (!snapshot.accuracy) {
      throw ConfigError("early stopping on accuracy requires a task with an "
                        "accuracy metric");
    }
    value = *snapshot.accuracy;
  }
  if (!best_) {
    best_ = value;
    return std::nullopt;
  }
  bool improved = monitor_ == Monitor::loss ? value < *best_ - min_delta_
                                            : value > *best_ + min_delta_;
  if (improved) {
    best_ = value;
    bad_count_ = 0;
    return std::nullopt;
  }
  bad_count_ += 1;
  if (bad_count_ < patience_) return std::nullopt;
  Verdict v;
  v.code = VerdictCode::MDL;
  v.phase = Phase::metric;
  v.epoch = snapshot.epoch;
  v.batch = snapshot.batch;
  v.global_iteration = snapshot.global_iteration;
  v.elapsed_seconds = elapsed_since(start_);
  std::ostringstream os;
  os << "EarlyStopping(" << (monitor_ == Monitor::loss ? "loss" : "accuracy")
     << "): no improvement for " << bad_count_ << " batch(es)";
  v.message = os.str();
  return v;
}

}  // namespace nnscope
