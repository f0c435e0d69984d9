#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace das {

// Dense row-major float64 tensor. Everything in this project is rank 1 or 2;
// rank-1 values behave as [1 x n] rows where a matrix is expected.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::vector<std::size_t> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (size() != data_.size())
      throw std::invalid_argument("Tensor: data length does not match shape");
  }

  static Tensor zeros(std::size_t r, std::size_t c) {
    return Tensor({r, c}, std::vector<double>(r * c, 0.0));
  }
  static Tensor zeros_like(const Tensor& t) {
    return Tensor(t.shape_, std::vector<double>(t.data_.size(), 0.0));
  }
  static Tensor identity(std::size_t n) {
    Tensor t = zeros(n, n);
    for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
  }
  static Tensor row(std::vector<double> v) {
    const std::size_t n = v.size();
    return Tensor({1, n}, std::move(v));
  }
  static Tensor scalar(double v) { return Tensor({1, 1}, {v}); }

  // Checked construction: rejects non-finite entries (spec'd checked mode).
  static Tensor checked(std::vector<std::size_t> shape, std::vector<double> data) {
    Tensor t(std::move(shape), std::move(data));
    t.require_finite("Tensor::checked");
    return t;
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const {
    return std::accumulate(shape_.begin(), shape_.end(), std::size_t{1},
                           std::multiplies<>());
  }
  std::size_t rows() const { return rank() == 2 ? shape_[0] : 1; }
  std::size_t cols() const { return rank() == 0 ? 0 : shape_.back(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  void require_finite(const std::string& where) const {
    for (double v : data_)
      if (!std::isfinite(v))
        throw std::domain_error(where + ": non-finite tensor entry");
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

}  // namespace das
