#include "nnscope/layers.hpp"

#include <algorithm>
#include <cmath>

#include "nnscope/errors.hpp"

namespace nnscope {

std::string activation_name(ActivationFn fn) {
  switch (fn) {
    case ActivationFn::linear: return "linear";
    case ActivationFn::relu: return "relu";
    case ActivationFn::sigmoid: return "sigmoid";
    case ActivationFn::tanh_fn: return "tanh";
    case ActivationFn::softmax: return "softmax";
  }
  return "?";
}

ActivationFn activation_from_name(const std::string& name) {
  if (name == "linear") return ActivationFn::linear;
  if (name == "relu") return ActivationFn::relu;
  if (name == "sigmoid") return ActivationFn::sigmoid;
  if (name == "tanh") return ActivationFn::tanh_fn;
  if (name == "softmax") return ActivationFn::softmax;
  throw ContractError("unknown activation '" + name + "'");
}

void Layer::consume_cache() {
  if (!has_cache_) {
    throw ProtocolError("backward before forward on " + describe());
  }
  has_cache_ = false;
}

std::string Layer::describe() const {
  std::string s = kind_name() + " layer";
  if (user_index_ > 0) s += " " + std::to_string(user_index_);
  return s;
}

// ---------------------------------------------------------------- Dense

DenseLayer::DenseLayer(Tensor kernel, Tensor bias)
    : kernel_(std::move(kernel)), bias_(std::move(bias)) {
  if (kernel_.rank() != 2) {
    throw ShapeError("dense kernel must be rank-2, got " + kernel_.shape_str());
  }
  if (bias_.rank() != 1 || bias_.dim(0) != kernel_.dim(1)) {
    throw ShapeError("dense bias must be [units], got " + bias_.shape_str());
  }
}

Tensor DenseLayer::forward(const Tensor& x, bool, Rng&) {
  if (x.rank() != 2 || x.dim(1) != kernel_.dim(0)) {
    throw ShapeError(describe() + ": expected input (batch," +
                     std::to_string(kernel_.dim(0)) + "), got " + x.shape_str());
  }
  Tensor y = matmul(x, kernel_);
  for (std::size_t i = 0; i < y.dim(0); ++i)
    for (std::size_t j = 0; j < y.dim(1); ++j) y.at2(i, j) += bias_[j];
  input_cache_ = x;
  mark_forward();
  return y;
}

BackwardResult DenseLayer::backward(const Tensor& dy, const OptimizerConfig& opt) {
  consume_cache();
  if (dy.rank() != 2 || dy.dim(0) != input_cache_.dim(0) ||
      dy.dim(1) != kernel_.dim(1)) {
    throw ShapeError(describe() + ": gradient shape " + dy.shape_str() +
                     " does not match forward output");
  }
  BackwardResult r;
  r.dkernel = matmul(transpose(input_cache_), dy);
  r.dbias = Tensor({bias_.dim(0)});
  for (std::size_t i = 0; i < dy.dim(0); ++i)
    for (std::size_t j = 0; j < dy.dim(1); ++j) r.dbias[j] += dy.at2(i, j);
  r.dx = matmul(dy, transpose(kernel_));  // uses pre-update weights
  kernel_ = optimizer_step(opt, kernel_slot_, kernel_, r.dkernel);
  bias_ = optimizer_step(opt, bias_slot_, bias_, r.dbias);
  r.kernel = kernel_;
  r.bias = bias_;
  return r;
}

// ----------------------------------------------------------- Activation

Tensor ActivationLayer::forward(const Tensor& x, bool, Rng&) {
  Tensor y(x.shape());
  switch (fn_) {
    case ActivationFn::linear:
      y = x;
      break;
    case ActivationFn::relu:
      for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
      break;
    case ActivationFn::sigmoid:
      for (std::size_t i = 0; i < x.size(); ++i) y[i] = 1.0 / (1.0 + std::exp(-x[i]));
      break;
    case ActivationFn::tanh_fn:
      for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
      break;
    case ActivationFn::softmax: {
      // Per sample row (leading axis), max-subtracted for stability.
      std::size_t rows = x.dim(0);
      std::size_t cols = x.size() / rows;
      for (std::size_t r = 0; r < rows; ++r) {
        double mx = x[r * cols];
        for (std::size_t c = 1; c < cols; ++c) mx = std::max(mx, x[r * cols + c]);
        double sum = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
          double e = std::exp(x[r * cols + c] - mx);
          y[r * cols + c] = e;
          sum += e;
        }
        for (std::size_t c = 0; c < cols; ++c) y[r * cols + c] /= sum;
      }
      break;
    }
  }
  input_cache_ = x;
  output_cache_ = y;
  mark_forward();
  return y;
}

BackwardResult ActivationLayer::backward(const Tensor& dy, const OptimizerConfig&) {
  consume_cache();
  if (!dy.same_shape(input_cache_)) {
    throw ShapeError(describe() + ": gradient shape " + dy.shape_str() +
                     " does not match forward output");
  }
  BackwardResult r;
  r.dx = Tensor(dy.shape());
  switch (fn_) {
    case ActivationFn::linear:
      r.dx = dy;
      break;
    case ActivationFn::relu:
      for (std::size_t i = 0; i < dy.size(); ++i) {
        r.dx[i] = input_cache_[i] > 0.0 ? dy[i] : 0.0;
      }
      break;
    case ActivationFn::sigmoid:
      for (std::size_t i = 0; i < dy.size(); ++i) {
        double y = output_cache_[i];
        r.dx[i] = dy[i] * y * (1.0 - y);
      }
      break;
    case ActivationFn::tanh_fn:
      for (std::size_t i = 0; i < dy.size(); ++i) {
        double y = output_cache_[i];
        r.dx[i] = dy[i] * (1.0 - y * y);
      }
      break;
    case ActivationFn::softmax: {
      // Full Jacobian product per row: dx_i = y_i * (dy_i - sum_j dy_j y_j).
      // The fused softmax + cross-entropy route bypasses this entirely.
      std::size_t rows = dy.dim(0);
      std::size_t cols = dy.size() / rows;
      for (std::size_t row = 0; row < rows; ++row) {
        double dot = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
          dot += dy[row * cols + c] * output_cache_[row * cols + c];
        }
        for (std::size_t c = 0; c < cols; ++c) {
          double y = output_cache_[row * cols + c];
          r.dx[row * cols + c] = y * (dy[row * cols + c] - dot);
        }
      }
      break;
    }
  }
  return r;
}

// -------------------------------------------------------------- Dropout

DropoutLayer::DropoutLayer(double rate) : rate_(rate) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ContractError("dropout rate must be in [0,1), got " +
                        std::to_string(rate));
  }
}

Tensor DropoutLayer::forward(const Tensor& x, bool training, Rng& rng) {
  if (x.empty()) throw ContractError("dropout forward on empty tensor");
  if (!training) {
    identity_pass_ = true;
    mark_forward();
    return x;
  }
  identity_pass_ = false;
  double keep = 1.0 - rate_;
  mask_cache_ = Tensor(x.shape());
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double m = rng.uniform() >= rate_ ? 1.0 / keep : 0.0;
    mask_cache_[i] = m;
    y[i] = x[i] * m;
  }
  mark_forward();
  return y;
}

BackwardResult DropoutLayer::backward(const Tensor& dy, const OptimizerConfig&) {
  consume_cache();
  BackwardResult r;
  if (identity_pass_) {
    r.dx = dy;
    return r;
  }
  if (!dy.same_shape(mask_cache_)) {
    throw ShapeError(describe() + ": gradient shape " + dy.shape_str() +
                     " does not match forward output");
  }
  r.dx = mul(dy, mask_cache_);
  return r;
}

// --------------------------------------------------------------- Conv2D

Conv2DLayer::Conv2DLayer(Tensor kernel, Tensor bias, std::size_t stride,
                         PaddingMode padding)
    : kernel_(std::move(kernel)),
      bias_(std::move(bias)),
      stride_(stride),
      padding_(padding) {
  if (kernel_.rank() != 4) {
    throw ShapeError("conv2d kernel must be [kh,kw,in_ch,filters], got " +
                     kernel_.shape_str());
  }
  if (bias_.rank() != 1 || bias_.dim(0) != kernel_.dim(3)) {
    throw ShapeError("conv2d bias must be [filters], got " + bias_.shape_str());
  }
  if (stride_ == 0) throw ContractError("conv2d stride must be positive");
}

void Conv2DLayer::pad_amounts(std::size_t in_h, std::size_t in_w,
                              std::size_t& out_h, std::size_t& out_w,
                              std::size_t& pad_top, std::size_t& pad_left) const {
  std::size_t kh = kernel_.dim(0), kw = kernel_.dim(1);
  if (padding_ == PaddingMode::valid) {
    if (in_h < kh || in_w < kw) {
      throw ShapeError(describe() + ": input " + std::to_string(in_h) + "x" +
                       std::to_string(in_w) + " smaller than kernel");
    }
    out_h = (in_h - kh) / stride_ + 1;
    out_w = (in_w - kw) / stride_ + 1;
    pad_top = pad_left = 0;
    return;
  }
  out_h = (in_h + stride_ - 1) / stride_;
  out_w = (in_w + stride_ - 1) / stride_;
  std::size_t need_h = (out_h - 1) * stride_ + kh;
  std::size_t need_w = (out_w - 1) * stride_ + kw;
  std::size_t pad_h = need_h > in_h ? need_h - in_h : 0;
  std::size_t pad_w = need_w > in_w ? need_w - in_w : 0;
  pad_top = pad_h / 2;  // remainder goes to the bottom/right
  pad_left = pad_w / 2;
}

Tensor Conv2DLayer::forward(const Tensor& x, bool, Rng&) {
  if (x.rank() != 4 || x.dim(3) != kernel_.dim(2)) {
    throw ShapeError(describe() + ": expected NHWC input with " +
                     std::to_string(kernel_.dim(2)) + " channels, got " +
                     x.shape_str());
  }
  std::size_t n = x.dim(0), in_h = x.dim(1), in_w = x.dim(2), in_c = x.dim(3);
  std::size_t kh = kernel_.dim(0), kw = kernel_.dim(1), filters = kernel_.dim(3);
  std::size_t out_h, out_w, pad_top, pad_left;
  pad_amounts(in_h, in_w, out_h, out_w, pad_top, pad_left);

  Tensor y({n, out_h, out_w, filters});
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t i = 0; i < out_h; ++i) {
      for (std::size_t j = 0; j < out_w; ++j) {
        for (std::size_t f = 0; f < filters; ++f) {
          double acc = bias_[f];
          for (std::size_t dh = 0; dh < kh; ++dh) {
            std::ptrdiff_t hi = static_cast<std::ptrdiff_t>(i * stride_ + dh) -
                                static_cast<std::ptrdiff_t>(pad_top);
            if (hi < 0 || hi >= static_cast<std::ptrdiff_t>(in_h)) continue;
            for (std::size_t dw = 0; dw < kw; ++dw) {
              std::ptrdiff_t wi = static_cast<std::ptrdiff_t>(j * stride_ + dw) -
                                  static_cast<std::ptrdiff_t>(pad_left);
              if (wi < 0 || wi >= static_cast<std::ptrdiff_t>(in_w)) continue;
              for (std::size_t c = 0; c < in_c; ++c) {
                acc += x.at4(b, hi, wi, c) * kernel_.at4(dh, dw, c, f);
              }
            }
          }
          y.at4(b, i, j, f) = acc;
        }
      }
    }
  }
  input_cache_ = x;
  mark_forward();
  return y;
}

BackwardResult Conv2DLayer::backward(const Tensor& dy, const OptimizerConfig& opt) {
  consume_cache();
  const Tensor& x = input_cache_;
  std::size_t n = x.dim(0), in_h = x.dim(1), in_w = x.dim(2), in_c = x.dim(3);
  std::size_t kh = kernel_.dim(0), kw = kernel_.dim(1), filters = kernel_.dim(3);
  std::size_t out_h, out_w, pad_top, pad_left;
  pad_amounts(in_h, in_w, out_h, out_w, pad_top, pad_left);
  if (dy.rank() != 4 || dy.dim(0) != n || dy.dim(1) != out_h ||
      dy.dim(2) != out_w || dy.dim(3) != filters) {
    throw ShapeError(describe() + ": gradient shape " + dy.shape_str() +
                     " does not match forward output");
  }

  BackwardResult r;
  r.dkernel = Tensor(kernel_.shape());
  r.dbias = Tensor(bias_.shape());
  r.dx = Tensor(x.shape());
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t i = 0; i < out_h; ++i) {
      for (std::size_t j = 0; j < out_w; ++j) {
        for (std::size_t f = 0; f < filters; ++f) {
          double g = dy.at4(b, i, j, f);
          r.dbias[f] += g;
          for (std::size_t dh = 0; dh < kh; ++dh) {
            std::ptrdiff_t hi = static_cast<std::ptrdiff_t>(i * stride_ + dh) -
                                static_cast<std::ptrdiff_t>(pad_top);
            if (hi < 0 || hi >= static_cast<std::ptrdiff_t>(in_h)) continue;
            for (std::size_t dw = 0; dw < kw; ++dw) {
              std::ptrdiff_t wi = static_cast<std::ptrdiff_t>(j * stride_ + dw) -
                                  static_cast<std::ptrdiff_t>(pad_left);
              if (wi < 0 || wi >= static_cast<std::ptrdiff_t>(in_w)) continue;
              for (std::size_t c = 0; c < in_c; ++c) {
                r.dkernel.at4(dh, dw, c, f) += x.at4(b, hi, wi, c) * g;
                r.dx.at4(b, hi, wi, c) += kernel_.at4(dh, dw, c, f) * g;
              }
            }
          }
        }
      }
    }
  }
  kernel_ = optimizer_step(opt, kernel_slot_, kernel_, r.dkernel);
  bias_ = optimizer_step(opt, bias_slot_, bias_, r.dbias);
  r.kernel = kernel_;
  r.bias = bias_;
  return r;
}

// ------------------------------------------------------------ MaxPool2D

MaxPool2DLayer::MaxPool2DLayer(std::size_t pool_h, std::size_t pool_w,
                               std::size_t stride)
    : pool_h_(pool_h), pool_w_(pool_w), stride_(stride) {
  if (pool_h_ == 0 || pool_w_ == 0 || stride_ == 0) {
    throw ContractError("maxpool2d window and stride must be positive");
  }
}

Tensor MaxPool2DLayer::forward(const Tensor& x, bool, Rng&) {
  if (x.rank() != 4) {
    throw ShapeError(describe() + ": expected NHWC input, got " + x.shape_str());
  }
  std::size_t n = x.dim(0), in_h = x.dim(1), in_w = x.dim(2), c = x.dim(3);
  if (in_h < pool_h_ || in_w < pool_w_) {
    throw ShapeError(describe() + ": input smaller than pooling window");
  }
  std::size_t out_h = (in_h - pool_h_) / stride_ + 1;
  std::size_t out_w = (in_w - pool_w_) / stride_ + 1;
  Tensor y({n, out_h, out_w, c});
  argmax_cache_.assign(y.size(), 0);
  input_shape_cache_ = x.shape();
  std::size_t out_idx = 0;
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t i = 0; i < out_h; ++i) {
      for (std::size_t j = 0; j < out_w; ++j) {
        for (std::size_t ch = 0; ch < c; ++ch) {
          double best = x.at4(b, i * stride_, j * stride_, ch);
          std::size_t best_flat =
              ((b * in_h + i * stride_) * in_w + j * stride_) * c + ch;
          for (std::size_t dh = 0; dh < pool_h_; ++dh) {
            for (std::size_t dw = 0; dw < pool_w_; ++dw) {
              double v = x.at4(b, i * stride_ + dh, j * stride_ + dw, ch);
              if (v > best) {  // ties route to the first maximum
                best = v;
                best_flat = ((b * in_h + i * stride_ + dh) * in_w + j * stride_ + dw) * c + ch;
              }
            }
          }
          y.at4(b, i, j, ch) = best;
          argmax_cache_[out_idx++] = best_flat;
        }
      }
    }
  }
  mark_forward();
  return y;
}

BackwardResult MaxPool2DLayer::backward(const Tensor& dy, const OptimizerConfig&) {
  consume_cache();
  if (dy.size() != argmax_cache_.size()) {
    throw ShapeError(describe() + ": gradient shape " + dy.shape_str() +
                     " does not match forward output");
  }
  BackwardResult r;
  r.dx = Tensor(input_shape_cache_);
  for (std::size_t i = 0; i < dy.size(); ++i) {
    r.dx[argmax_cache_[i]] += dy[i];
  }
  return r;
}

// -------------------------------------------------------------- Flatten

Tensor FlattenLayer::forward(const Tensor& x, bool, Rng&) {
  if (x.rank() < 2) {
    throw ShapeError(describe() + ": expected batched input, got " + x.shape_str());
  }
  input_shape_cache_ = x.shape();
  mark_forward();
  return x.reshaped({x.dim(0), x.size() / x.dim(0)});
}

BackwardResult FlattenLayer::backward(const Tensor& dy, const OptimizerConfig&) {
  consume_cache();
  BackwardResult r;
  r.dx = dy.reshaped(input_shape_cache_);
  return r;
}

}  // namespace nnscope
