#include "das/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>

namespace das::kernels {

namespace {
std::atomic<int> g_threads{0};  // 0 = library default

int effective_threads() {
  int n = g_threads.load(std::memory_order_relaxed);
  return n > 0 ? n : omp_get_max_threads();
}

bool worth_parallel(std::size_t work) {
  return effective_threads() > 1 && work >= 1u << 16;
}
}  // namespace

void set_num_threads(int n) { g_threads.store(n, std::memory_order_relaxed); }
int num_threads() { return effective_threads(); }

Tensor matmul_serial(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows())
    throw std::invalid_argument("matmul: inner extents do not match");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor c = Tensor::zeros(m, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[p * n + j];
      c[i * n + j] = s;
    }
  return c;
}

// Blocked over k so B streams through cache once per block; each C row is
// owned by one thread and accumulates in ascending k order, matching the
// serial element-wise order exactly.
Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows())
    throw std::invalid_argument("matmul: inner extents do not match");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor c = Tensor::zeros(m, n);
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
  constexpr std::size_t kb = 64;
  const bool par = worth_parallel(m * n * k);
  const int nt = par ? effective_threads() : 1;
#pragma omp parallel num_threads(nt) if (par)
  {
    for (std::size_t k0 = 0; k0 < k; k0 += kb) {
      const std::size_t k1 = std::min(k, k0 + kb);
#pragma omp for schedule(static)
      for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(m); ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        double* crow = pc + i * n;
        for (std::size_t p = k0; p < k1; ++p) {
          const double aip = pa[i * k + p];
          if (aip == 0.0) continue;
          const double* brow = pb + p * n;
          for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
        }
      }
    }
  }
  return c;
}

Tensor transpose(const Tensor& a) {
  const std::size_t m = a.rows(), n = a.cols();
  Tensor t = Tensor::zeros(n, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) t[j * m + i] = a[i * n + j];
  return t;
}

namespace {
template <class F>
Tensor elementwise2(const Tensor& a, const Tensor& b, F f, const char* name) {
  if (!a.same_shape(b)) throw std::invalid_argument(std::string(name) + ": shape mismatch");
  Tensor out = Tensor::zeros_like(a);
  const std::size_t n = a.size();
#pragma omp parallel for schedule(static) if (worth_parallel(n))
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
    out[i] = f(a[i], b[i]);
  return out;
}
}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return elementwise2(a, b, [](double x, double y) { return x + y; }, "add");
}
Tensor sub(const Tensor& a, const Tensor& b) {
  return elementwise2(a, b, [](double x, double y) { return x - y; }, "sub");
}
Tensor mul(const Tensor& a, const Tensor& b) {
  return elementwise2(a, b, [](double x, double y) { return x * y; }, "mul");
}

Tensor scale(const Tensor& a, double c) {
  Tensor out = Tensor::zeros_like(a);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * c;
  return out;
}

Tensor add_rowvec(const Tensor& a, const Tensor& row) {
  if (row.rows() != 1 || row.cols() != a.cols())
    throw std::invalid_argument("add_rowvec: row extent mismatch");
  Tensor out = Tensor::zeros_like(a);
  const std::size_t m = a.rows(), n = a.cols();
#pragma omp parallel for schedule(static) if (worth_parallel(m* n))
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i)
    for (std::size_t j = 0; j < n; ++j)
      out[static_cast<std::size_t>(i) * n + j] = a[static_cast<std::size_t>(i) * n + j] + row[j];
  return out;
}

Tensor col_sums(const Tensor& a) {
  const std::size_t m = a.rows(), n = a.cols();
  Tensor out = Tensor::zeros(1, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j] += a[i * n + j];
  return out;
}

Tensor relu(const Tensor& a) {
  Tensor out = Tensor::zeros_like(a);
  const std::size_t n = a.size();
#pragma omp parallel for schedule(static) if (worth_parallel(n))
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
    out[i] = a[i] > 0.0 ? a[i] : 0.0;
  return out;
}

Tensor relu_backward(const Tensor& pre, const Tensor& grad) {
  return elementwise2(pre, grad,
                      [](double p, double g) { return p > 0.0 ? g : 0.0; },
                      "relu_backward");
}

namespace {
Tensor softmax_rows_impl(const Tensor& logits, bool par) {
  const std::size_t m = logits.rows(), n = logits.cols();
  Tensor out = Tensor::zeros_like(logits);
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(m); ++ii) {
    const std::size_t i = static_cast<std::size_t>(ii);
    double mx = logits[i * n];
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, logits[i * n + j]);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double e = std::exp(logits[i * n + j] - mx);
      out[i * n + j] = e;
      z += e;
    }
    const double inv = 1.0 / z;
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] *= inv;
  }
  return out;
}
}  // namespace

Tensor softmax_rows(const Tensor& logits) {
  return softmax_rows_impl(logits, worth_parallel(logits.size() * 4));
}
Tensor softmax_rows_serial(const Tensor& logits) {
  return softmax_rows_impl(logits, false);
}

double softmax_xent_mean(const Tensor& logits, const std::vector<int>& labels,
                         Tensor* dlogits) {
  const std::size_t m = logits.rows(), n = logits.cols();
  if (labels.size() != m)
    throw std::invalid_argument("softmax_xent_mean: label count mismatch");
  Tensor p = softmax_rows(logits);
  double loss = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double pi = std::max(p[i * n + static_cast<std::size_t>(labels[i])], 1e-300);
    loss -= std::log(pi);
  }
  loss /= static_cast<double>(m);
  if (dlogits) {
    *dlogits = p;
    const double inv = 1.0 / static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) (*dlogits)[i * n + j] *= inv;
      (*dlogits)[i * n + static_cast<std::size_t>(labels[i])] -= inv;
    }
  }
  return loss;
}

std::vector<int> argmax_rows(const Tensor& a) {
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<int> out(m, 0);
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < n; ++j)
      if (a[i * n + j] > a[i * n + best]) best = j;
    out[i] = static_cast<int>(best);
  }
  return out;
}

Tensor lu_solve(const Tensor& A, const Tensor& B, double tol) {
  const std::size_t n = A.rows();
  if (A.cols() != n) throw std::invalid_argument("lu_solve: A not square");
  if (B.rows() != n) throw std::invalid_argument("lu_solve: B row mismatch");
  const std::size_t m = B.cols();
  std::vector<double> lu(A.vec());
  std::vector<std::size_t> piv(n);
  for (std::size_t i = 0; i < n; ++i) piv[i] = i;

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    double best = std::abs(lu[k * n + k]);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double v = std::abs(lu[i * n + k]);
      if (v > best) {
        best = v;
        p = i;
      }
    }
    if (best < tol) throw std::domain_error("lu_solve: singular matrix");
    if (p != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu[k * n + j], lu[p * n + j]);
      std::swap(piv[k], piv[p]);
    }
    const double inv = 1.0 / lu[k * n + k];
    const bool par = worth_parallel((n - k) * (n - k));
#pragma omp parallel for schedule(static) if (par)
    for (std::ptrdiff_t ii = static_cast<std::ptrdiff_t>(k) + 1;
         ii < static_cast<std::ptrdiff_t>(n); ++ii) {
      const std::size_t i = static_cast<std::size_t>(ii);
      const double f = lu[i * n + k] * inv;
      lu[i * n + k] = f;
      for (std::size_t j = k + 1; j < n; ++j) lu[i * n + j] -= f * lu[k * n + j];
    }
  }

  // Apply row permutation to B, then forward/back substitution per column
  // block (columns are independent; rows sequential).
  Tensor X = Tensor::zeros(n, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) X[i * m + j] = B[piv[i] * m + j];

  const bool par = worth_parallel(n * n * m / 4);
#pragma omp parallel if (par)
  {
    // L y = Pb
#pragma omp for schedule(static)
    for (std::ptrdiff_t jj = 0; jj < static_cast<std::ptrdiff_t>(m); ++jj) {
      const std::size_t j = static_cast<std::size_t>(jj);
      for (std::size_t i = 1; i < n; ++i) {
        double s = X[i * m + j];
        for (std::size_t k = 0; k < i; ++k) s -= lu[i * n + k] * X[k * m + j];
        X[i * m + j] = s;
      }
      // U x = y
      for (std::size_t ri = n; ri-- > 0;) {
        double s = X[ri * m + j];
        for (std::size_t k = ri + 1; k < n; ++k) s -= lu[ri * n + k] * X[k * m + j];
        X[ri * m + j] = s / lu[ri * n + ri];
      }
    }
  }
  return X;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) return std::numeric_limits<double>::infinity();
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace das::kernels
