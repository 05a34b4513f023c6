#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace genrec {

// Error raised by shape-incompatible tensor operations. Message always
// names both offending shapes.
class ShapeError : public std::runtime_error {
public:
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

class NumericError : public std::runtime_error {
public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad input files, malformed records, missing upstream artifacts.
class DataError : public std::runtime_error {
public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Dense row-major tensor of doubles. Rank 1 and 2 cover everything this
// project needs; rank-1 tensors behave as a single row where an operation
// wants a matrix.
class Tensor {
public:
  Tensor() = default;

  explicit Tensor(std::vector<int64_t> shape)
      : shape_(std::move(shape)), data_(checked_size(shape_), 0.0) {}

  Tensor(std::vector<int64_t> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (static_cast<int64_t>(data_.size()) != checked_size(shape_))
      throw ShapeError("tensor data size " + std::to_string(data_.size()) +
                       " does not match shape " + shape_str(shape_));
  }

  static Tensor zeros(int64_t rows, int64_t cols) { return Tensor({rows, cols}); }
  static Tensor vec(std::vector<double> v) {
    int64_t n = static_cast<int64_t>(v.size());
    return Tensor({n}, std::move(v));
  }
  static Tensor scalar(double v) { return Tensor({1}, {v}); }
  static Tensor full(std::vector<int64_t> shape, double v) {
    Tensor t(std::move(shape));
    for (auto& x : t.data_) x = v;
    return t;
  }

  const std::vector<int64_t>& shape() const { return shape_; }
  int64_t size() const { return static_cast<int64_t>(data_.size()); }
  int rank() const { return static_cast<int>(shape_.size()); }

  // Rows/cols view: rank-1 tensors count as one row.
  int64_t rows() const {
    if (shape_.empty()) return 0;
    return rank() == 1 ? 1 : shape_[0];
  }
  int64_t cols() const {
    if (shape_.empty()) return 0;
    return rank() == 1 ? shape_[0] : shape_[rank() - 1];
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  double& at(int64_t r, int64_t c) { return data_[r * cols() + c]; }
  double at(int64_t r, int64_t c) const { return data_[r * cols() + c]; }
  double& operator[](int64_t i) { return data_[i]; }
  double operator[](int64_t i) const { return data_[i]; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  bool all_finite() const;

  std::string shape_str() const { return shape_str(shape_); }

  static std::string shape_str(const std::vector<int64_t>& s) {
    std::string out = "(";
    for (size_t i = 0; i < s.size(); ++i) {
      if (i) out += ",";
      out += std::to_string(s[i]);
    }
    out += ")";
    return out;
  }

private:
  static int64_t checked_size(const std::vector<int64_t>& shape) {
    int64_t n = 1;
    for (int64_t d : shape) {
      if (d <= 0) throw ShapeError("non-positive dimension in shape " + shape_str(shape));
      n *= d;
    }
    return shape.empty() ? 0 : n;
  }

  std::vector<int64_t> shape_;
  std::vector<double> data_;
};

}  // namespace genrec
