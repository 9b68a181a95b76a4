#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace nnscope {

/// Dense row-major array of 64-bit floats, ranks 1-4. Rank-4 tensors use
/// NHWC layout. A default-constructed Tensor is the empty sentinel used
/// for "no value" (e.g. parameter products of parameterless layers).
class Tensor {
 public:
  Tensor() = default;

  // Zero-filled tensor of the given shape.
  explicit Tensor(std::vector<std::size_t> shape);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  // Rank-1 / rank-2 literals, mostly for tests and small fixtures.
  static Tensor vector1d(std::initializer_list<double> values);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor identity(std::size_t n);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t dim(std::size_t axis) const;

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  double operator[](std::size_t flat) const { return data_[flat]; }
  double& operator[](std::size_t flat) { return data_[flat]; }

  double at2(std::size_t i, std::size_t j) const;
  double& at2(std::size_t i, std::size_t j);
  double at4(std::size_t n, std::size_t h, std::size_t w, std::size_t c) const;
  double& at4(std::size_t n, std::size_t h, std::size_t w, std::size_t c);

  // Same data, new shape; element counts must match.
  Tensor reshaped(std::vector<std::size_t> shape) const;

  // Contiguous row range [begin, end) along the leading axis.
  Tensor slice_rows(std::size_t begin, std::size_t end) const;

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  std::string shape_str() const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

// Elementary statistics. NaN/Inf propagate; they are never masked here --
// anomaly detection happens downstream, on observed values.
double mean(const Tensor& t);
// Population standard deviation (divide by n).
double stddev(const Tensor& t);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

enum class ElemOp { add, sub, mul, div, scale };

Tensor elementwise(ElemOp op, const Tensor& a, const Tensor& b);
Tensor elementwise(ElemOp op, const Tensor& a, double scalar);

inline Tensor add(const Tensor& a, const Tensor& b) { return elementwise(ElemOp::add, a, b); }
inline Tensor sub(const Tensor& a, const Tensor& b) { return elementwise(ElemOp::sub, a, b); }
inline Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(ElemOp::mul, a, b); }
inline Tensor div(const Tensor& a, const Tensor& b) { return elementwise(ElemOp::div, a, b); }
inline Tensor scale(const Tensor& a, double s) { return elementwise(ElemOp::scale, a, s); }

// Kernel and bias flattened into one rank-1 tensor, kernel first.
Tensor concat_flat(const Tensor& a, const Tensor& b);

/// SplitMix64 generator. Identical seeds produce identical streams on
/// every platform; all randomness in the engine flows through this.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();

  // Uniform in [0, 1) from the top 53 bits.
  double uniform();

  // Box-Muller; consumes exactly two uniforms per variate.
  double normal(double mean_value = 0.0, double stddev_value = 1.0);

 private:
  std::uint64_t state_;
};

}  // namespace nnscope
