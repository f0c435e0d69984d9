#pragma once

#include <vector>

#include "das/errors.hpp"
#include "das/tensor.hpp"

namespace das {

// Reverse-mode autodiff over an append-only op record. Forward values are
// computed eagerly at node creation; backward() visits nodes in reverse
// insertion order exactly once. Single-owner: a Tape is never shared across
// threads.
class Tape {
 public:
  enum class Op {
    Leaf,
    MatMul,
    Add,
    Sub,
    AddRowVec,
    MulConst,
    Scale,
    Transpose,
    Relu,
    Solve,       // X = A^{-1} B
    EmbedBlock,  // identity matrix with a trainable block on the diagonal
    SliceCols,
    ConcatCols,
    Sum,
    SoftmaxXent,  // mean cross-entropy against integer labels
  };

  int leaf(Tensor value, bool trainable = false);
  int constant(Tensor value) { return leaf(std::move(value), false); }

  int matmul(int a, int b);
  int add(int a, int b);
  int sub(int a, int b);
  int add_rowvec(int a, int row);
  int mul_const(int a, Tensor c);
  int scale(int a, double c);
  int transpose(int a);
  int relu(int a);
  int solve(int a, int b);
  int embed_block(int a, std::size_t n, std::size_t offset);
  int slice_cols(int a, std::size_t c0, std::size_t c1);
  int concat_cols(int a, int b);
  int sum(int a);
  int softmax_xent(int logits, std::vector<int> labels);

  const Tensor& value(int node) const { return nodes_[static_cast<std::size_t>(node)].value; }
  std::size_t num_nodes() const { return nodes_.size(); }

  // Accumulates gradients for every node that (transitively) depends on a
  // trainable leaf. `loss` must be scalar.
  void backward(int loss);
  const Tensor& grad(int node) const;
  bool has_grad(int node) const;

 private:
  struct Node {
    Op op = Op::Leaf;
    int a = -1, b = -1;
    Tensor value;
    Tensor aux;               // MulConst constant / Solve X cache / SoftmaxXent dlogits
    double scalar = 0.0;      // Scale factor
    std::size_t i0 = 0, i1 = 0;  // EmbedBlock offset+n / SliceCols range
    bool needs_grad = false;
  };

  int push(Node n);
  bool ng(int a) const { return a >= 0 && nodes_[static_cast<std::size_t>(a)].needs_grad; }
  void accumulate(int node, const Tensor& g);

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
  std::vector<bool> grad_set_;
};

}  // namespace das
