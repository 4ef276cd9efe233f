#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "basisgen/rng.hpp"

namespace basisgen {

using Shape = std::vector<std::int64_t>;

/// Raised on any shape/contract violation; the message names the offending
/// dimensions.
class TensorError : public std::runtime_error {
 public:
  explicit TensorError(const std::string& msg) : std::runtime_error(msg) {}
};

inline std::int64_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), static_cast<std::int64_t>(1),
                         std::multiplies<>());
}

inline std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

/// Dense row-major 64-bit tensor. Plain value type: copy copies, no views.
/// `grad` is populated only on parameter tensors after a backward pass.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape)
      : shape_(std::move(shape)), data_(static_cast<std::size_t>(shape_size(shape_)), 0.0) {}

  Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (static_cast<std::int64_t>(data_.size()) != shape_size(shape_)) {
      throw TensorError("data length " + std::to_string(data_.size()) +
                        " does not match shape " + shape_str(shape_));
    }
  }

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }

  static Tensor full(Shape shape, double value) {
    Tensor t(std::move(shape));
    for (auto& v : t.data_) v = value;
    return t;
  }

  static Tensor scalar(double value) { return Tensor({}, {value}); }

  static Tensor randn(Shape shape, Rng& rng, double stddev = 1.0) {
    Tensor t(std::move(shape));
    for (auto& v : t.data_) v = rng.normal(0.0, stddev);
    return t;
  }

  const Shape& shape() const { return shape_; }
  std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
  std::int64_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t rank() const { return shape_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }
  double& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }

  double item() const {
    if (size() != 1) throw TensorError("item() requires size-1 tensor, got " + shape_str(shape_));
    return data_[0];
  }

  bool requires_grad() const { return requires_grad_; }
  Tensor& set_requires_grad(bool v) {
    requires_grad_ = v;
    if (!v) grad_.reset();
    return *this;
  }

  bool has_grad() const { return grad_.has_value(); }
  std::vector<double>& grad() {
    if (!grad_) grad_.emplace(data_.size(), 0.0);
    return *grad_;
  }
  const std::vector<double>& grad() const {
    if (!grad_) throw TensorError("grad not populated");
    return *grad_;
  }
  void zero_grad() {
    if (grad_) std::fill(grad_->begin(), grad_->end(), 0.0);
  }
  void clear_grad() { grad_.reset(); }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

 private:
  Shape shape_;
  std::vector<double> data_;
  std::optional<std::vector<double>> grad_;
  bool requires_grad_ = false;
};

inline void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw TensorError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                      shape_str(b.shape()));
  }
}

}  // namespace basisgen
