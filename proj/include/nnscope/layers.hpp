#pragma once

#include <memory>
#include <string>
#include <vector>

#include "nnscope/objectives.hpp"
#include "nnscope/tensor.hpp"

namespace nnscope {

enum class ActivationFn { linear, relu, sigmoid, tanh_fn, softmax };

std::string activation_name(ActivationFn fn);
ActivationFn activation_from_name(const std::string& name);

enum class PaddingMode { valid, same };

// Products of one backward step. Parameterless layers leave the four
// parameter tensors empty.
struct BackwardResult {
  Tensor dx;       // gradient with respect to the layer input
  Tensor kernel;   // parameters after the optimizer update
  Tensor bias;
  Tensor dkernel;  // raw parameter gradients
  Tensor dbias;
};

/// A layer owns its parameters, optimizer slots and the forward cache the
/// backward pass consumes. forward must precede each backward call.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual Tensor forward(const Tensor& x, bool training, Rng& rng) = 0;

  // Computes input/parameter gradients, applies the optimizer update and
  // returns the post-update parameters alongside the raw gradients.
  virtual BackwardResult backward(const Tensor& dy, const OptimizerConfig& opt) = 0;

  virtual bool has_params() const { return false; }

  // Kernel then bias, flattened; empty for parameterless layers.
  virtual Tensor params_flat() const { return Tensor(); }

  virtual std::string kind_name() const = 0;

  void set_user_index(int index) { user_index_ = index; }
  int user_index() const { return user_index_; }

 protected:
  void mark_forward() { has_cache_ = true; }
  void consume_cache();
  std::string describe() const;

  int user_index_ = 0;
  bool has_cache_ = false;
};

class DenseLayer : public Layer {
 public:
  DenseLayer(Tensor kernel, Tensor bias);

  Tensor forward(const Tensor& x, bool training, Rng& rng) override;
  BackwardResult backward(const Tensor& dy, const OptimizerConfig& opt) override;
  bool has_params() const override { return true; }
  Tensor params_flat() const override { return concat_flat(kernel_, bias_); }
  std::string kind_name() const override { return "dense"; }

  const Tensor& kernel() const { return kernel_; }
  const Tensor& bias() const { return bias_; }
  std::size_t input_dim() const { return kernel_.dim(0); }
  std::size_t units() const { return kernel_.dim(1); }

 private:
  Tensor kernel_;  // [input_dim, units]
  Tensor bias_;    // [units]
  Tensor input_cache_;
  OptimizerSlot kernel_slot_;
  OptimizerSlot bias_slot_;
};

class ActivationLayer : public Layer {
 public:
  explicit ActivationLayer(ActivationFn fn) : fn_(fn) {}

  Tensor forward(const Tensor& x, bool training, Rng& rng) override;
  BackwardResult backward(const Tensor& dy, const OptimizerConfig& opt) override;
  std::string kind_name() const override { return activation_name(fn_); }

  ActivationFn fn() const { return fn_; }

 private:
  ActivationFn fn_;
  Tensor input_cache_;
  Tensor output_cache_;
};

class DropoutLayer : public Layer {
 public:
  explicit DropoutLayer(double rate);

  Tensor forward(const Tensor& x, bool training, Rng& rng) override;
  BackwardResult backward(const Tensor& dy, const OptimizerConfig& opt) override;
  std::string kind_name() const override { return "dropout"; }

  double rate() const { return rate_; }

 private:
  double rate_;
  Tensor mask_cache_;  // already scaled by 1/(1-rate)
  bool identity_pass_ = false;
};

class Conv2DLayer : public Layer {
 public:
  // kernel [kh, kw, in_channels, filters], bias [filters]; NHWC input.
  Conv2DLayer(Tensor kernel, Tensor bias, std::size_t stride, PaddingMode padding);

  Tensor forward(const Tensor& x, bool training, Rng& rng) override;
  BackwardResult backward(const Tensor& dy, const OptimizerConfig& opt) override;
  bool has_params() const override { return true; }
  Tensor params_flat() const override { return concat_flat(kernel_, bias_); }
  std::string kind_name() const override { return "conv2d"; }

  const Tensor& kernel() const { return kernel_; }
  const Tensor& bias() const { return bias_; }

 private:
  void pad_amounts(std::size_t in_h, std::size_t in_w, std::size_t& out_h,
                   std::size_t& out_w, std::size_t& pad_top,
                   std::size_t& pad_left) const;

  Tensor kernel_;
  Tensor bias_;
  std::size_t stride_;
  PaddingMode padding_;
  Tensor input_cache_;
  OptimizerSlot kernel_slot_;
  OptimizerSlot bias_slot_;
};

class MaxPool2DLayer : public Layer {
 public:
  MaxPool2DLayer(std::size_t pool_h, std::size_t pool_w, std::size_t stride);

  Tensor forward(const Tensor& x, bool training, Rng& rng) override;
  BackwardResult backward(const Tensor& dy, const OptimizerConfig& opt) override;
  std::string kind_name() const override { return "maxpool2d"; }

 private:
  std::size_t pool_h_, pool_w_, stride_;
  std::vector<std::size_t> argmax_cache_;  // flat input index per output element
  std::vector<std::size_t> input_shape_cache_;
};

class FlattenLayer : public Layer {
 public:
  Tensor forward(const Tensor& x, bool training, Rng& rng) override;
  BackwardResult backward(const Tensor& dy, const OptimizerConfig& opt) override;
  std::string kind_name() const override { return "flatten"; }

 private:
  std::vector<std::size_t> input_shape_cache_;
};

}  // namespace nnscope
