#include "nnscope/objectives.hpp"

#include <algorithm>
#include <cmath>

#include "nnscope/errors.hpp"

namespace nnscope {

namespace {

void require_same_shape(const Tensor& y_pred, const Tensor& y_true,
                        const char* who) {
  if (y_pred.empty() || y_true.empty()) {
    throw ContractError(std::string(who) + " on empty tensor");
  }
  if (!y_pred.same_shape(y_true)) {
    throw ShapeError(std::string(who) + ": shape mismatch " +
                     y_pred.shape_str() + " vs " + y_true.shape_str());
  }
}

double clip_prob(double p) {
  // NaN passes through untouched; clamping must not hide it.
  if (p < kCrossEntropyEps) return kCrossEntropyEps;
  if (p > 1.0 - kCrossEntropyEps) return 1.0 - kCrossEntropyEps;
  return p;
}


}  // namespace

double loss_value(LossKind kind, const Tensor& y_pred, const Tensor& y_true) {
  require_same_shape(y_pred, y_true, "loss");
  const auto& p = y_pred.data();
  const auto& y = y_true.data();
  const double n = static_cast<double>(p.size());
  const double batch = static_cast<double>(y_pred.dim(0));
  double acc = 0.0;
  switch (kind) {
    case LossKind::mse:
      for (std::size_t i = 0; i < p.size(); ++i) {
        double d = p[i] - y[i];
        acc += d * d;
      }
      return acc / n;
    case LossKind::mae:
      for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - y[i]);
      return acc / n;
    case LossKind::binary_crossentropy:
      for (std::size_t i = 0; i < p.size(); ++i) {
        double ph = clip_prob(p[i]);
        acc += -(y[i] * std::log(ph) + (1.0 - y[i]) * std::log(1.0 - ph));
      }
      return acc / n;
    case LossKind::categorical_crossentropy:
      for (std::size_t i = 0; i < p.size(); ++i) {
        acc += -y[i] * std::log(clip_prob(p[i]));
      }
      return acc / batch;
  }
  return 0.0;
}

Tensor loss_grad(LossKind kind, const Tensor& y_pred, const Tensor& y_true) {
  require_same_shape(y_pred, y_true, "loss_grad");
  const auto& p = y_pred.data();
  const auto& y = y_true.data();
  const double n = static_cast<double>(p.size());
  const double batch = static_cast<double>(y_pred.dim(0));
  Tensor out(y_pred.shape());
  switch (kind) {
    case LossKind::mse:
      for (std::size_t i = 0; i < p.size(); ++i) out[i] = 2.0 * (p[i] - y[i]) / n;
      break;
    case LossKind::mae:
      for (std::size_t i = 0; i < p.size(); ++i) {
        double d = p[i] - y[i];
        out[i] = (d > 0.0 ? 1.0 : d < 0.0 ? -1.0 : 0.0) / n;
      }
      break;
    case LossKind::binary_crossentropy:
      // Evaluated at the clipped prediction; saturation caps the magnitude
      // instead of zeroing the gradient.
      for (std::size_t i = 0; i < p.size(); ++i) {
        double ph = clip_prob(p[i]);
        out[i] = (ph - y[i]) / (ph * (1.0 - ph)) / n;
      }
      break;
    case LossKind::categorical_crossentropy:
      for (std::size_t i = 0; i < p.size(); ++i) {
        out[i] = -y[i] / clip_prob(p[i]) / batch;
      }
      break;
  }
  return out;
}

Tensor fused_softmax_cce_grad(const Tensor& y_pred, const Tensor& y_true) {
  require_same_shape(y_pred, y_true, "fused_softmax_cce_grad");
  const double batch = static_cast<double>(y_pred.dim(0));
  Tensor out(y_pred.shape());
  for (std::size_t i = 0; i < y_pred.size(); ++i) {
    out[i] = (y_pred[i] - y_true[i]) / batch;
  }
  return out;
}

std::optional<double> accuracy(const Tensor& y_pred, const Tensor& y_true,
                               TaskKind task) {
  if (task == TaskKind::none) return std::nullopt;
  require_same_shape(y_pred, y_true, "accuracy");
  if (task == TaskKind::binary) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < y_pred.size(); ++i) {
      if ((y_pred[i] > 0.5) == (y_true[i] > 0.5)) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(y_pred.size());
  }
  // Categorical: argmax per sample row over all trailing dimensions.
  std::size_t rows = y_pred.dim(0);
  std::size_t cols = y_pred.size() / rows;
  if (cols < 2) {
    throw ShapeError("categorical accuracy needs >= 2 classes per row, got " +
                     y_pred.shape_str());
  }
  std::size_t correct = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t arg_p = 0, arg_y = 0;
    for (std::size_t c = 1; c < cols; ++c) {
      if (y_pred[r * cols + c] > y_pred[r * cols + arg_p]) arg_p = c;
      if (y_true[r * cols + c] > y_true[r * cols + arg_y]) arg_y = c;
    }
    if (arg_p == arg_y) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(rows);
}

Tensor optimizer_step(const OptimizerConfig& config, OptimizerSlot& slot,
                      const Tensor& param, const Tensor& grad) {
  if (param.empty() || grad.empty()) {
    throw ContractError("optimizer_step on empty tensor");
  }
  if (!param.same_shape(grad)) {
    throw ShapeError("optimizer_step: shape mismatch " + param.shape_str() +
                     " vs " + grad.shape_str());
  }
  Tensor updated(param.shape());
  if (config.kind == OptimizerConfig::Kind::sgd) {
    if (slot.velocity.empty()) slot.velocity = Tensor(param.shape());
    for (std::size_t i = 0; i < param.size(); ++i) {
      slot.velocity[i] = config.momentum * slot.velocity[i] + grad[i];
      updated[i] = param[i] - config.lr * slot.velocity[i];
    }
    return updated;
  }
  if (slot.first_moment.empty()) {
    slot.first_moment = Tensor(param.shape());
    slot.second_moment = Tensor(param.shape());
  }
  slot.timestep += 1;
  const double t = static_cast<double>(slot.timestep);
  const double bias1 = 1.0 - std::pow(config.beta1, t);
  const double bias2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < param.size(); ++i) {
    slot.first_moment[i] =
        config.beta1 * slot.first_moment[i] + (1.0 - config.beta1) * grad[i];
    slot.second_moment[i] = config.beta2 * slot.second_moment[i] +
                            (1.0 - config.beta2) * grad[i] * grad[i];
    double m_hat = slot.first_moment[i] / bias1;
    double v_hat = slot.second_moment[i] / bias2;
    updated[i] = param[i] - config.lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
  }
  return updated;
}

Tensor initialize(const Initializer& init, std::vector<std::size_t> shape,
                  std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  Tensor out(std::move(shape));
  switch (init.kind) {
    case Initializer::Kind::zeros:
      break;
    case Initializer::Kind::random_normal:
      for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = rng.normal(0.0, init.stddev);
      }
      break;
    case Initializer::Kind::glorot_uniform: {
      double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
      for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a * (2.0 * rng.uniform() - 1.0);
      }
      break;
    }
  }
  return out;
}

std::string loss_name(LossKind kind) {
  switch (kind) {
    case LossKind::mse: return "mean_squared_error";
    case LossKind::mae: return "mean_absolute_error";
    case LossKind::binary_crossentropy: return "binary_crossentropy";
    case LossKind::categorical_crossentropy: return "categorical_crossentropy";
  }
  return "?";
}

LossKind loss_from_name(const std::string& name) {
  if (name == "mean_squared_error" || name == "mse") return LossKind::mse;
  if (name == "mean_absolute_error" || name == "mae") return LossKind::mae;
  if (name == "binary_crossentropy") return LossKind::binary_crossentropy;
  if (name == "categorical_crossentropy") {
    return LossKind::categorical_crossentropy;
  }
  throw ContractError("unknown loss '" + name + "'");
}

}  // namespace nnscope
