#include "pcpg/tape.hpp"

#include <cmath>

namespace pcpg::ad {

namespace {
std::string shape_of(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}
}  // namespace

const Tape::Node& Tape::node(int id) const {
  if (id < 0 || id >= static_cast<int>(nodes_.size()))
    throw std::out_of_range("Tape: invalid var id " + std::to_string(id));
  return nodes_[id];
}

Tape::Node& Tape::node(int id) {
  return const_cast<Node&>(static_cast<const Tape*>(this)->node(id));
}

Var Tape::push(Node n) {
  if (n.needs_grad) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

bool Tape::any_needs_grad(Var a, Var b) const {
  return (a.valid() && node(a.id).needs_grad) || (b.valid() && node(b.id).needs_grad);
}

void Tape::check_same_shape(const char* prim, Var a, Var b) const {
  const Matrix& va = node(a.id).value;
  const Matrix& vb = node(b.id).value;
  if (va.rows() != vb.rows() || va.cols() != vb.cols())
    throw ShapeError(prim, "shape mismatch " + shape_of(va) + " vs " + shape_of(vb));
}

const Matrix& Tape::grad(Var v) const {
  const Node& n = node(v.id);
  if (!n.needs_grad)
    throw std::logic_error("Tape::grad: node does not track gradients");
  return n.grad;
}

Var Tape::leaf(Matrix value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.op = Op::Leaf;
  n.needs_grad = requires_grad;
  return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
  const Matrix& va = node(a.id).value;
  const Matrix& vb = node(b.id).value;
  if (va.cols() != vb.rows())
    throw ShapeError("matmul", "incompatible shapes " + shape_of(va) + " * " + shape_of(vb));
  Node n;
  n.value.noalias() = va * vb;
  n.op = Op::MatMul;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = any_needs_grad(a, b);
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  check_same_shape("add", a, b);
  Node n;
  n.value = node(a.id).value + node(b.id).value;
  n.op = Op::Add;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = any_needs_grad(a, b);
  return push(std::move(n));
}

Var Tape::add_rowvec(Var a, Var b) {
  const Matrix& va = node(a.id).value;
  const Matrix& vb = node(b.id).value;
  if (vb.rows() != 1 || va.cols() != vb.cols())
    throw ShapeError("add_rowvec", "expected m x n plus 1 x n, got " + shape_of(va) +
                                       " plus " + shape_of(vb));
  Node n;
  n.value = va.rowwise() + vb.row(0);
  n.op = Op::AddRowVec;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = any_needs_grad(a, b);
  return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
  check_same_shape("mul", a, b);
  Node n;
  n.value = node(a.id).value.cwiseProduct(node(b.id).value);
  n.op = Op::Mul;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = any_needs_grad(a, b);
  return push(std::move(n));
}

Var Tape::affine(Var a, double scale, double shift) {
  Node n;
  n.value = (node(a.id).value.array() * scale + shift).matrix();
  n.op = Op::Affine;
  n.a = a.id;
  n.c0 = scale;
  n.c1 = shift;
  n.needs_grad = node(a.id).needs_grad;
  return push(std::move(n));
}

Var Tape::sigmoid(Var a) {
  Node n;
  n.value = (1.0 / (1.0 + (-node(a.id).value.array()).exp())).matrix();
  n.op = Op::Sigmoid;
  n.a = a.id;
  n.needs_grad = node(a.id).needs_grad;
  return push(std::move(n));
}

Var Tape::tanh(Var a) {
  Node n;
  n.value = node(a.id).value.array().tanh().matrix();
  n.op = Op::Tanh;
  n.a = a.id;
  n.needs_grad = node(a.id).needs_grad;
  return push(std::move(n));
}

Var Tape::softmax(Var a) {
  const Matrix& va = node(a.id).value;
  Node n;
  n.value.resize(va.rows(), va.cols());
  for (Eigen::Index r = 0; r < va.rows(); ++r) {
    const double m = va.row(r).maxCoeff();
    Eigen::ArrayXd e = (va.row(r).array() - m).exp();
    n.value.row(r) = (e / e.sum()).matrix();
  }
  n.op = Op::Softmax;
  n.a = a.id;
  n.needs_grad = node(a.id).needs_grad;
  return push(std::move(n));
}

Var Tape::log_softmax(Var a) {
  const Matrix& va = node(a.id).value;
  Node n;
  n.value.resize(va.rows(), va.cols());
  for (Eigen::Index r = 0; r < va.rows(); ++r) {
    const double m = va.row(r).maxCoeff();
    const double lse = m + std::log((va.row(r).array() - m).exp().sum());
    n.value.row(r) = (va.row(r).array() - lse).matrix();
  }
  n.op = Op::LogSoftmax;
  n.a = a.id;
  n.needs_grad = node(a.id).needs_grad;
  return push(std::move(n));
}

Var Tape::row(Var a, int index) {
  const Matrix& va = node(a.id).value;
  if (index < 0 || index >= va.rows())
    throw ShapeError("row", "index " + std::to_string(index) + " out of range for " +
                                shape_of(va));
  Node n;
  n.value = va.row(index);
  n.op = Op::Row;
  n.a = a.id;
  n.i0 = index;
  n.needs_grad = node(a.id).needs_grad;
  return push(std::move(n));
}

Var Tape::concat(Var a, Var b) {
  const Matrix& va = node(a.id).value;
  const Matrix& vb = node(b.id).value;
  if (va.rows() != vb.rows())
    throw ShapeError("concat", "row mismatch " + shape_of(va) + " vs " + shape_of(vb));
  Node n;
  n.value.resize(va.rows(), va.cols() + vb.cols());
  n.value.leftCols(va.cols()) = va;
  n.value.rightCols(vb.cols()) = vb;
  n.op = Op::Concat;
  n.a = a.id;
  n.b = b.id;
  n.i0 = static_cast<int>(va.cols());
  n.needs_grad = any_needs_grad(a, b);
  return push(std::move(n));
}

Var Tape::vstack(std::span<const Var> rows) {
  if (rows.empty()) throw ShapeError("vstack", "no inputs");
  const Eigen::Index cols = node(rows[0].id).value.cols();
  Node n;
  n.value.resize(static_cast<Eigen::Index>(rows.size()), cols);
  n.list.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Matrix& vi = node(rows[i].id).value;
    if (vi.rows() != 1 || vi.cols() != cols)
      throw ShapeError("vstack", "input " + std::to_string(i) + " has shape " + shape_of(vi) +
                                     ", expected 1x" + std::to_string(cols));
    n.value.row(static_cast<Eigen::Index>(i)) = vi.row(0);
    n.list.push_back(rows[i].id);
    n.needs_grad = n.needs_grad || node(rows[i].id).needs_grad;
  }
  n.op = Op::VStack;
  return push(std::move(n));
}

Var Tape::transpose(Var a) {
  Node n;
  n.value = node(a.id).value.transpose();
  n.op = Op::Transpose;
  n.a = a.id;
  n.needs_grad = node(a.id).needs_grad;
  return push(std::move(n));
}

Var Tape::pick(Var a, int r, int c) {
  const Matrix& va = node(a.id).value;
  if (r < 0 || r >= va.rows() || c < 0 || c >= va.cols())
    throw ShapeError("pick", "(" + std::to_string(r) + ", " + std::to_string(c) +
                                 ") out of range for " + shape_of(va));
  Node n;
  n.value = Matrix::Constant(1, 1, va(r, c));
  n.op = Op::Pick;
  n.a = a.id;
  n.i0 = r;
  n.i1 = c;
  n.needs_grad = node(a.id).needs_grad;
  return push(std::move(n));
}

Var Tape::sum(Var a) {
  Node n;
  n.value = Matrix::Constant(1, 1, node(a.id).value.sum());
  n.op = Op::Sum;
  n.a = a.id;
  n.needs_grad = node(a.id).needs_grad;
  return push(std::move(n));
}

Var Tape::add_n(std::span<const Var> xs) {
  if (xs.empty()) throw ShapeError("add_n", "no inputs");
  const Matrix& first = node(xs[0].id).value;
  Node n;
  n.value = first;
  n.list.reserve(xs.size());
  n.list.push_back(xs[0].id);
  n.needs_grad = node(xs[0].id).needs_grad;
  for (std::size_t i = 1; i < xs.size(); ++i) {
    const Matrix& vi = node(xs[i].id).value;
    if (vi.rows() != n.value.rows() || vi.cols() != n.value.cols())
      throw ShapeError("add_n", "input " + std::to_string(i) + " has shape " + shape_of(vi) +
                                    ", expected " + shape_of(n.value));
    n.value += vi;
    n.list.push_back(xs[i].id);
    n.needs_grad = n.needs_grad || node(xs[i].id).needs_grad;
  }
  n.op = Op::AddN;
  return push(std::move(n));
}

void Tape::backward(Var loss) {
  Node& top = node(loss.id);
  if (top.value.rows() != 1 || top.value.cols() != 1)
    throw ShapeError("backward", "loss must be scalar, got " + shape_of(top.value));
  if (!top.needs_grad)
    throw std::logic_error("Tape::backward: loss does not depend on any requires_grad leaf");

  for (int id = 0; id <= loss.id; ++id) {
    Node& n = nodes_[id];
    if (n.needs_grad) n.grad.setZero();
  }
  top.grad(0, 0) = 1.0;

  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.needs_grad || n.op == Op::Leaf) continue;
    const Matrix& g = n.grad;
    Node* na = n.a >= 0 ? &nodes_[n.a] : nullptr;
    Node* nb = n.b >= 0 ? &nodes_[n.b] : nullptr;
    switch (n.op) {
      case Op::MatMul:
        if (na->needs_grad) na->grad.noalias() += g * nb->value.transpose();
        if (nb->needs_grad) nb->grad.noalias() += na->value.transpose() * g;
        break;
      case Op::Add:
        if (na->needs_grad) na->grad += g;
        if (nb->needs_grad) nb->grad += g;
        break;
      case Op::AddRowVec:
        if (na->needs_grad) na->grad += g;
        if (nb->needs_grad) nb->grad.row(0) += g.colwise().sum();
        break;
      case Op::Mul:
        if (na->needs_grad) na->grad += g.cwiseProduct(nb->value);
        if (nb->needs_grad) nb->grad += g.cwiseProduct(na->value);
        break;
      case Op::Affine:
        if (na->needs_grad) na->grad += n.c0 * g;
        break;
      case Op::Sigmoid:
        if (na->needs_grad)
          na->grad.array() += g.array() * n.value.array() * (1.0 - n.value.array());
        break;
      case Op::Tanh:
        if (na->needs_grad)
          na->grad.array() += g.array() * (1.0 - n.value.array().square());
        break;
      case Op::Softmax:
        if (na->needs_grad) {
          for (Eigen::Index r = 0; r < g.rows(); ++r) {
            const double dot = g.row(r).cwiseProduct(n.value.row(r)).sum();
            na->grad.row(r).array() +=
                n.value.row(r).array() * (g.row(r).array() - dot);
          }
        }
        break;
      case Op::LogSoftmax:
        if (na->needs_grad) {
          for (Eigen::Index r = 0; r < g.rows(); ++r) {
            const double total = g.row(r).sum();
            na->grad.row(r).array() +=
                g.row(r).array() - n.value.row(r).array().exp() * total;
          }
        }
        break;
      case Op::Row:
        if (na->needs_grad) na->grad.row(n.i0) += g.row(0);
        break;
      case Op::Concat:
        if (na->needs_grad) na->grad += g.leftCols(n.i0);
        if (nb->needs_grad) nb->grad += g.rightCols(g.cols() - n.i0);
        break;
      case Op::VStack:
        for (std::size_t i = 0; i < n.list.size(); ++i) {
          Node& in = nodes_[n.list[i]];
          if (in.needs_grad) in.grad.row(0) += g.row(static_cast<Eigen::Index>(i));
        }
        break;
      case Op::Transpose:
        if (na->needs_grad) na->grad += g.transpose();
        break;
      case Op::Pick:
        if (na->needs_grad) na->grad(n.i0, n.i1) += g(0, 0);
        break;
      case Op::Sum:
        if (na->needs_grad) na->grad.array() += g(0, 0);
        break;
      case Op::AddN:
        for (int in_id : n.list) {
          Node& in = nodes_[in_id];
          if (in.needs_grad) in.grad += g;
        }
        break;
      case Op::Leaf:
        break;
    }
  }
}

}  // namespace pcpg::ad
