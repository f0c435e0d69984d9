#pragma once

// Test-only reference implementations, kept independent of the library's
// compute paths on purpose.

#include <cmath>
#include <functional>
#include <vector>

#include "das/tensor.hpp"

namespace oracles {

// Naive triple-loop matmul.
inline das::Tensor matmul(const das::Tensor& a, const das::Tensor& b) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  das::Tensor c = das::Tensor::zeros(m, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a.at(i, p) * b.at(p, j);
      c.at(i, j) = s;
    }
  return c;
}

// Central finite differences of a scalar function of a tensor.
inline das::Tensor finite_diff(std::function<double(const das::Tensor&)> f,
                               das::Tensor at, double h = 1e-5) {
  das::Tensor g = das::Tensor::zeros_like(at);
  for (std::size_t i = 0; i < at.size(); ++i) {
    const double orig = at[i];
    at[i] = orig + h;
    const double up = f(at);
    at[i] = orig - h;
    const double down = f(at);
    at[i] = orig;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

inline bool grads_close(const das::Tensor& analytic, const das::Tensor& numeric,
                        double rtol = 1e-4, double atol = 1e-6) {
  if (!analytic.same_shape(numeric)) return false;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double diff = std::abs(analytic[i] - numeric[i]);
    const double scale = std::max(std::abs(analytic[i]), std::abs(numeric[i]));
    if (diff > atol + rtol * scale) return false;
  }
  return true;
}

// Closed-form 2x2 rotation acting on column vectors: [[c,-s],[s,c]].
inline das::Tensor rotation2(double degrees) {
  const double r = degrees * M_PI / 180.0;
  return das::Tensor({2, 2}, {std::cos(r), -std::sin(r), std::sin(r), std::cos(r)});
}

}  // namespace oracles
