#include "das/ortho.hpp"

#include "das/errors.hpp"
#include "das/kernels.hpp"
#include "das/rng.hpp"

namespace das {

namespace k = kernels;

Tensor cayley(const Tensor& p) {
  if (p.rows() != p.cols()) fail(Errc::ShapeMismatch, "cayley: square input required");
  const std::size_t n = p.rows();
  Tensor a = k::scale(k::sub(p, k::transpose(p)), 0.5);
  Tensor eye = Tensor::identity(n);
  // (I - A) X = (I + A); always solvable: I - A has eigenvalues 1 - i*t.
  return k::lu_solve(k::sub(eye, a), k::add(eye, a));
}

int cayley_node(Tape& tape, int p_node) {
  const std::size_t n = tape.value(p_node).rows();
  int eye = tape.constant(Tensor::identity(n));
  int a = tape.scale(tape.sub(p_node, tape.transpose(p_node)), 0.5);
  return tape.solve(tape.sub(eye, a), tape.add(eye, a));
}

OrthogonalParam OrthogonalParam::init_near_identity(std::size_t n, std::uint64_t seed,
                                                    double radius) {
  Rng rng(seed);
  Tensor p = Tensor::zeros(n, n);
  for (std::size_t i = 0; i < n * n; ++i) p[i] = rng.uniform(-radius, radius);
  return OrthogonalParam{n, std::move(p)};
}

double orthogonality_defect(const Tensor& r) {
  Tensor rtr = k::matmul(k::transpose(r), r);
  for (std::size_t i = 0; i < r.rows(); ++i) rtr.at(i, i) -= 1.0;
  return rtr.max_abs();
}

void SgdConfig::validate() const {
  if (learning_rate <= 0.0) fail(Errc::Config, "learning_rate must be positive");
  if (batch_size == 0) fail(Errc::Config, "batch_size must be positive");
  if (max_epochs == 0) fail(Errc::Config, "max_epochs must be positive");
  if (momentum < 0.0 || momentum >= 1.0) fail(Errc::Config, "momentum must be in [0,1)");
}

void sgd_step(Tensor& params, const Tensor& grads, const SgdConfig& cfg,
              Tensor* velocity) {
  if (!params.same_shape(grads)) fail(Errc::ShapeMismatch, "sgd_step: shape mismatch");
  if (cfg.momentum > 0.0 && velocity) {
    if (!velocity->same_shape(params)) *velocity = Tensor::zeros_like(params);
    for (std::size_t i = 0; i < params.size(); ++i) {
      (*velocity)[i] = cfg.momentum * (*velocity)[i] + grads[i];
      params[i] -= cfg.learning_rate * (*velocity)[i];
    }
  } else {
    for (std::size_t i = 0; i < params.size(); ++i)
      params[i] -= cfg.learning_rate * grads[i];
  }
}

}  // namespace das
