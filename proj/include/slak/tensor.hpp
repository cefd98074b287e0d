#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "slak/util.hpp"

namespace slak {

// Dense row-major matrix of 64-bit reals. All training math runs in double
// precision. Vectors are n x 1, scalars 1 x 1.
class Tensor {
 public:
  Tensor() = default;
  Tensor(size_t rows, size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  static Tensor zeros(size_t rows, size_t cols) { return Tensor(rows, cols); }
  static Tensor full(size_t rows, size_t cols, double v) {
    Tensor t(rows, cols);
    std::fill(t.data_.begin(), t.data_.end(), v);
    return t;
  }
  static Tensor identity(size_t n) {
    Tensor t(n, n);
    for (size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
  }
  static Tensor gaussian(size_t rows, size_t cols, double stddev, Rng& rng) {
    Tensor t(rows, cols);
    for (double& v : t.data_) v = stddev * rng.normal();
    return t;
  }
  static Tensor from_rows(const std::vector<std::vector<double>>& rows);
  static Tensor column(const std::vector<double>& values);

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  double& at(size_t r, size_t c) { return data_[r * cols_ + c]; }
  double at(size_t r, size_t c) const { return data_[r * cols_ + c]; }
  double* row(size_t r) { return data_.data() + r * cols_; }
  const double* row(size_t r) const { return data_.data() + r * cols_; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }
  bool all_finite() const;

  // Max absolute elementwise difference; shapes must agree.
  double max_abs_diff(const Tensor& o) const;

  std::string shape_str() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
  }

 private:
  size_t rows_ = 0;
  size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace slak
