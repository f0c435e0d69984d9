#include "das/tape.hpp"

#include "das/kernels.hpp"

namespace das {

namespace k = kernels;

int Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::leaf(Tensor value, bool trainable) {
  Node n;
  n.op = Op::Leaf;
  n.value = std::move(value);
  n.needs_grad = trainable;
  return push(std::move(n));
}

int Tape::matmul(int a, int b) {
  Node n;
  n.op = Op::MatMul;
  n.a = a;
  n.b = b;
  n.value = k::matmul(value(a), value(b));
  n.needs_grad = ng(a) || ng(b);
  return push(std::move(n));
}

int Tape::add(int a, int b) {
  Node n;
  n.op = Op::Add;
  n.a = a;
  n.b = b;
  n.value = k::add(value(a), value(b));
  n.needs_grad = ng(a) || ng(b);
  return push(std::move(n));
}

int Tape::sub(int a, int b) {
  Node n;
  n.op = Op::Sub;
  n.a = a;
  n.b = b;
  n.value = k::sub(value(a), value(b));
  n.needs_grad = ng(a) || ng(b);
  return push(std::move(n));
}

int Tape::add_rowvec(int a, int row) {
  Node n;
  n.op = Op::AddRowVec;
  n.a = a;
  n.b = row;
  n.value = k::add_rowvec(value(a), value(row));
  n.needs_grad = ng(a) || ng(row);
  return push(std::move(n));
}

int Tape::mul_const(int a, Tensor c) {
  Node n;
  n.op = Op::MulConst;
  n.a = a;
  n.value = k::mul(value(a), c);
  n.aux = std::move(c);
  n.needs_grad = ng(a);
  return push(std::move(n));
}

int Tape::scale(int a, double c) {
  Node n;
  n.op = Op::Scale;
  n.a = a;
  n.scalar = c;
  n.value = k::scale(value(a), c);
  n.needs_grad = ng(a);
  return push(std::move(n));
}

int Tape::transpose(int a) {
  Node n;
  n.op = Op::Transpose;
  n.a = a;
  n.value = k::transpose(value(a));
  n.needs_grad = ng(a);
  return push(std::move(n));
}

int Tape::relu(int a) {
  Node n;
  n.op = Op::Relu;
  n.a = a;
  n.value = k::relu(value(a));
  n.needs_grad = ng(a);
  return push(std::move(n));
}

int Tape::solve(int a, int b) {
  Node n;
  n.op = Op::Solve;
  n.a = a;
  n.b = b;
  n.value = k::lu_solve(value(a), value(b));
  n.needs_grad = ng(a) || ng(b);
  return push(std::move(n));
}

int Tape::embed_block(int a, std::size_t n_total, std::size_t offset) {
  const Tensor& blk = value(a);
  if (blk.rows() != blk.cols() || offset + blk.rows() > n_total)
    fail(Errc::ShapeMismatch, "embed_block: block does not fit");
  Node n;
  n.op = Op::EmbedBlock;
  n.a = a;
  n.i0 = offset;
  n.i1 = n_total;
  Tensor out = Tensor::identity(n_total);
  for (std::size_t i = 0; i < blk.rows(); ++i)
    for (std::size_t j = 0; j < blk.cols(); ++j)
      out.at(offset + i, offset + j) = blk.at(i, j);
  n.value = std::move(out);
  n.needs_grad = ng(a);
  return push(std::move(n));
}

int Tape::slice_cols(int a, std::size_t c0, std::size_t c1) {
  const Tensor& t = value(a);
  if (c1 > t.cols() || c0 >= c1) fail(Errc::ShapeMismatch, "slice_cols: bad range");
  Node n;
  n.op = Op::SliceCols;
  n.a = a;
  n.i0 = c0;
  n.i1 = c1;
  Tensor out = Tensor::zeros(t.rows(), c1 - c0);
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = c0; j < c1; ++j) out.at(i, j - c0) = t.at(i, j);
  n.value = std::move(out);
  n.needs_grad = ng(a);
  return push(std::move(n));
}

int Tape::concat_cols(int a, int b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  if (x.rows() != y.rows()) fail(Errc::ShapeMismatch, "concat_cols: row mismatch");
  Node n;
  n.op = Op::ConcatCols;
  n.a = a;
  n.b = b;
  Tensor out = Tensor::zeros(x.rows(), x.cols() + y.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) out.at(i, j) = x.at(i, j);
    for (std::size_t j = 0; j < y.cols(); ++j) out.at(i, x.cols() + j) = y.at(i, j);
  }
  n.i0 = x.cols();
  n.value = std::move(out);
  n.needs_grad = ng(a) || ng(b);
  return push(std::move(n));
}

int Tape::sum(int a) {
  Node n;
  n.op = Op::Sum;
  n.a = a;
  double s = 0.0;
  for (std::size_t i = 0; i < value(a).size(); ++i) s += value(a)[i];
  n.value = Tensor::scalar(s);
  n.needs_grad = ng(a);
  return push(std::move(n));
}

int Tape::softmax_xent(int logits, std::vector<int> labels) {
  Node n;
  n.op = Op::SoftmaxXent;
  n.a = logits;
  Tensor dlogits;
  const double loss = k::softmax_xent_mean(value(logits), labels, &dlogits);
  n.value = Tensor::scalar(loss);
  n.aux = std::move(dlogits);
  n.needs_grad = ng(logits);
  return push(std::move(n));
}

void Tape::accumulate(int node, const Tensor& g) {
  auto i = static_cast<std::size_t>(node);
  if (!nodes_[i].needs_grad) return;
  if (!grad_set_[i]) {
    grads_[i] = g;
    grad_set_[i] = true;
  } else {
    grads_[i] = k::add(grads_[i], g);
  }
}

bool Tape::has_grad(int node) const {
  return grad_set_[static_cast<std::size_t>(node)];
}

const Tensor& Tape::grad(int node) const {
  static const Tensor empty;
  auto i = static_cast<std::size_t>(node);
  return grad_set_[i] ? grads_[i] : empty;
}

void Tape::backward(int loss) {
  const Node& ln = nodes_[static_cast<std::size_t>(loss)];
  if (ln.value.size() != 1) fail(Errc::NonScalarLoss, "backward needs a scalar loss");
  grads_.assign(nodes_.size(), Tensor());
  grad_set_.assign(nodes_.size(), false);
  if (!ln.needs_grad) return;  // no trainable ancestors
  accumulate(loss, Tensor::scalar(1.0));

  for (int idx = loss; idx >= 0; --idx) {
    const std::size_t i = static_cast<std::size_t>(idx);
    const Node& n = nodes_[i];
    if (!grad_set_[i] || !n.needs_grad) continue;
    const Tensor& g = grads_[i];
    switch (n.op) {
      case Op::Leaf:
        break;
      case Op::MatMul:
        if (ng(n.a)) accumulate(n.a, k::matmul(g, k::transpose(value(n.b))));
        if (ng(n.b)) accumulate(n.b, k::matmul(k::transpose(value(n.a)), g));
        break;
      case Op::Add:
        if (ng(n.a)) accumulate(n.a, g);
        if (ng(n.b)) accumulate(n.b, g);
        break;
      case Op::Sub:
        if (ng(n.a)) accumulate(n.a, g);
        if (ng(n.b)) accumulate(n.b, k::scale(g, -1.0));
        break;
      case Op::AddRowVec:
        if (ng(n.a)) accumulate(n.a, g);
        if (ng(n.b)) accumulate(n.b, k::col_sums(g));
        break;
      case Op::MulConst:
        if (ng(n.a)) accumulate(n.a, k::mul(g, n.aux));
        break;
      case Op::Scale:
        if (ng(n.a)) accumulate(n.a, k::scale(g, n.scalar));
        break;
      case Op::Transpose:
        if (ng(n.a)) accumulate(n.a, k::transpose(g));
        break;
      case Op::Relu:
        if (ng(n.a)) accumulate(n.a, k::relu_backward(value(n.a), g));
        break;
      case Op::Solve: {
        // X = A^{-1} B:  dB = A^{-T} g,  dA = -dB X^T.
        Tensor db = k::lu_solve(k::transpose(value(n.a)), g);
        if (ng(n.b)) accumulate(n.b, db);
        if (ng(n.a))
          accumulate(n.a, k::scale(k::matmul(db, k::transpose(n.value)), -1.0));
        break;
      }
      case Op::EmbedBlock:
        if (ng(n.a)) {
          const std::size_t bs = value(n.a).rows();
          Tensor ga = Tensor::zeros(bs, bs);
          for (std::size_t r = 0; r < bs; ++r)
            for (std::size_t c = 0; c < bs; ++c)
              ga.at(r, c) = g.at(n.i0 + r, n.i0 + c);
          accumulate(n.a, ga);
        }
        break;
      case Op::SliceCols:
        if (ng(n.a)) {
          Tensor ga = Tensor::zeros_like(value(n.a));
          for (std::size_t r = 0; r < g.rows(); ++r)
            for (std::size_t c = 0; c < g.cols(); ++c) ga.at(r, n.i0 + c) = g.at(r, c);
          accumulate(n.a, ga);
        }
        break;
      case Op::ConcatCols: {
        const std::size_t split = n.i0;
        if (ng(n.a)) {
          Tensor ga = Tensor::zeros_like(value(n.a));
          for (std::size_t r = 0; r < g.rows(); ++r)
            for (std::size_t c = 0; c < split; ++c) ga.at(r, c) = g.at(r, c);
          accumulate(n.a, ga);
        }
        if (ng(n.b)) {
          Tensor gb = Tensor::zeros_like(value(n.b));
          for (std::size_t r = 0; r < g.rows(); ++r)
            for (std::size_t c = 0; c < gb.cols(); ++c) gb.at(r, c) = g.at(r, split + c);
          accumulate(n.b, gb);
        }
        break;
      }
      case Op::Sum:
        if (ng(n.a)) {
          Tensor ga = Tensor::zeros_like(value(n.a));
          for (std::size_t j = 0; j < ga.size(); ++j) ga[j] = g[0];
          accumulate(n.a, ga);
        }
        break;
      case Op::SoftmaxXent:
        if (ng(n.a)) accumulate(n.a, k::scale(n.aux, g[0]));
        break;
    }
  }
}

}  // namespace das
