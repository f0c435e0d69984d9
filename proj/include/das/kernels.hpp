#pragma once

#include <cstddef>

#include "das/tensor.hpp"

// Dense kernels. Every parallel kernel computes each output element with a
// fixed operand order, so results are bit-identical for any thread count;
// the *_serial variants are the plain reference implementations kept for
// testing and benchmarking against the OpenMP paths.
namespace das::kernels {

// Process-wide worker count for all parallel kernels (CLI --jobs).
void set_num_threads(int n);
int num_threads();

// c = a * b, a [m x k], b [k x n]. Throws std::invalid_argument on shape
// mismatch.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor matmul_serial(const Tensor& a, const Tensor& b);

Tensor transpose(const Tensor& a);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor scale(const Tensor& a, double c);

// Broadcast-add a [1 x n] row to every row of a [m x n] matrix.
Tensor add_rowvec(const Tensor& a, const Tensor& row);
// Column sums as a [1 x n] row (gradient of add_rowvec w.r.t. the row).
Tensor col_sums(const Tensor& a);

Tensor relu(const Tensor& a);
// grad * (pre > 0)
Tensor relu_backward(const Tensor& pre, const Tensor& grad);

// Row-wise softmax.
Tensor softmax_rows(const Tensor& logits);
Tensor softmax_rows_serial(const Tensor& logits);

// Mean cross-entropy of row-softmax(logits) against integer labels; also
// returns d(loss)/d(logits) via *dlogits when non-null.
double softmax_xent_mean(const Tensor& logits, const std::vector<int>& labels,
                         Tensor* dlogits);

std::vector<int> argmax_rows(const Tensor& a);

// Solves A X = B by LU with partial pivoting; A [n x n], B [n x m].
// Throws std::domain_error if a pivot falls below `tol`.
Tensor lu_solve(const Tensor& A, const Tensor& B, double tol = 1e-12);

double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace das::kernels
