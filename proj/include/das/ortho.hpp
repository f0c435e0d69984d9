#pragma once

#include <cstdint>
#include <optional>

#include "das/tape.hpp"
#include "das/tensor.hpp"

namespace das {

// R = cayley(A) = (I - A)^{-1} (I + A) with A = (P - P^T)/2. Special
// orthogonal for any real P.
Tensor cayley(const Tensor& skew_raw);

// Tape version: returns the node holding R, differentiable w.r.t. P.
int cayley_node(Tape& tape, int p_node);

// Trainable parametrization of an orthogonal matrix.
struct OrthogonalParam {
  std::size_t n = 0;
  Tensor skew;  // raw n x n parameters

  static OrthogonalParam init_near_identity(std::size_t n, std::uint64_t seed,
                                            double radius = 0.01);
  Tensor materialize() const { return cayley(skew); }
};

// Max-norm orthogonality defect, ||R^T R - I||_max.
double orthogonality_defect(const Tensor& r);

struct SgdConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  std::size_t max_epochs = 10;
  std::optional<std::size_t> early_stop_patience;  // steps
  std::uint64_t seed = 0;
  double momentum = 0.0;  // 0 = plain SGD

  void validate() const;
};

// One optimizer step: p <- p - lr*g (with optional momentum buffer).
void sgd_step(Tensor& params, const Tensor& grads, const SgdConfig& cfg,
              Tensor* velocity = nullptr);

}  // namespace das
