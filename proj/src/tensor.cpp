#include "nnscope/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "nnscope/errors.hpp"

namespace nnscope {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

void validate_shape(const std::vector<std::size_t>& shape) {
  if (shape.empty() || shape.size() > 4) {
    throw ShapeError("tensor rank must be 1-4, got rank " +
                     std::to_string(shape.size()));
  }
  for (std::size_t d : shape) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive");
  }
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
  validate_shape(shape_);
  data_.assign(shape_product(shape_), 0.0);
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  validate_shape(shape_);
  if (data_.size() != shape_product(shape_)) {
    throw ShapeError("data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_str());
  }
}

Tensor Tensor::vector1d(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  std::size_t r = rows.size();
  std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(data));
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) t.at2(i, i) = 1.0;
  return t;
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " +
                     shape_str());
  }
  return shape_[axis];
}

double Tensor::at2(std::size_t i, std::size_t j) const {
  return data_[i * shape_[1] + j];
}
double& Tensor::at2(std::size_t i, std::size_t j) {
  return data_[i * shape_[1] + j];
}

double Tensor::at4(std::size_t n, std::size_t h, std::size_t w,
                   std::size_t c) const {
  return data_[((n * shape_[1] + h) * shape_[2] + w) * shape_[3] + c];
}
double& Tensor::at4(std::size_t n, std::size_t h, std::size_t w,
                    std::size_t c) {
  return data_[((n * shape_[1] + h) * shape_[2] + w) * shape_[3] + c];
}

Tensor Tensor::reshaped(std::vector<std::size_t> shape) const {
  validate_shape(shape);
  if (shape_product(shape) != data_.size()) {
    throw ShapeError("cannot reshape " + shape_str() + " to new element count");
  }
  return Tensor(std::move(shape), data_);
}

Tensor Tensor::slice_rows(std::size_t begin, std::size_t end) const {
  if (empty()) throw ContractError("slice_rows on empty tensor");
  if (begin >= end || end > shape_[0]) {
    throw ContractError("invalid row slice [" + std::to_string(begin) + ", " +
                        std::to_string(end) + ") of " + shape_str());
  }
  std::size_t row_size = data_.size() / shape_[0];
  std::vector<std::size_t> shape = shape_;
  shape[0] = end - begin;
  std::vector<double> data(data_.begin() + begin * row_size,
                           data_.begin() + end * row_size);
  return Tensor(std::move(shape), std::move(data));
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << ",";
    os << shape_[i];
  }
  os << ")";
  return os.str();
}

double mean(const Tensor& t) {
  if (t.empty()) throw ContractError("mean of empty tensor");
  double sum = 0.0;
  for (double v : t.data()) sum += v;
  return sum / static_cast<double>(t.size());
}

double stddev(const Tensor& t) {
  if (t.empty()) throw ContractError("stddev of empty tensor");
  double m = mean(t);
  double acc = 0.0;
  for (double v : t.data()) acc += (v - m) * (v - m);
  return std::sqrt(acc / static_cast<double>(t.size()));
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2) {
    throw ShapeError("matmul requires rank-2 tensors, got " + a.shape_str() +
                     " x " + b.shape_str());
  }
  if (a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: incompatible shapes " + a.shape_str() + " x " +
                     b.shape_str());
  }
  std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      double av = a.at2(i, p);
      for (std::size_t j = 0; j < n; ++j) {
        out.at2(i, j) += av * b.at2(p, j);
      }
    }
  }
  return out;
}

Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) {
    throw ShapeError("transpose requires rank-2 tensor, got " + a.shape_str());
  }
  Tensor out({a.dim(1), a.dim(0)});
  for (std::size_t i = 0; i < a.dim(0); ++i)
    for (std::size_t j = 0; j < a.dim(1); ++j) out.at2(j, i) = a.at2(i, j);
  return out;
}

namespace {

double apply_op(ElemOp op, double x, double y) {
  switch (op) {
    case ElemOp::add: return x + y;
    case ElemOp::sub: return x - y;
    case ElemOp::mul: return x * y;
    case ElemOp::div: return x / y;  // IEEE semantics, deliberately untrapped
    case ElemOp::scale: return x * y;
  }
  return 0.0;
}

}  // namespace

Tensor elementwise(ElemOp op, const Tensor& a, const Tensor& b) {
  if (a.empty() || b.empty()) throw ContractError("elementwise on empty tensor");
  if (b.size() == 1 && !a.same_shape(b)) {
    return elementwise(op, a, b[0]);
  }
  if (!a.same_shape(b)) {
    throw ShapeError("elementwise: shape mismatch " + a.shape_str() + " vs " +
                     b.shape_str());
  }
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = apply_op(op, a[i], b[i]);
  return out;
}

Tensor elementwise(ElemOp op, const Tensor& a, double scalar) {
  if (a.empty()) throw ContractError("elementwise on empty tensor");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = apply_op(op, a[i], scalar);
  return out;
}

Tensor concat_flat(const Tensor& a, const Tensor& b) {
  std::vector<double> data;
  data.reserve(a.size() + b.size());
  data.insert(data.end(), a.data().begin(), a.data().end());
  data.insert(data.end(), b.data().begin(), b.data().end());
  if (data.empty()) return Tensor();
  std::size_t n = data.size();
  return Tensor({n}, std::move(data));
}

std::uint64_t Rng::next_u64() {
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal(double mean_value, double stddev_value) {
  double u1 = uniform();
  double u2 = uniform();
  // 1 - u1 lies in (0, 1], so the log never sees zero.
  double r = std::sqrt(-2.0 * std::log(1.0 - u1));
  double z = r * std::cos(2.0 * 3.14159265358979323846 * u2);
  return mean_value + stddev_value * z;
}

}  // namespace nnscope
