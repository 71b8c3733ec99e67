#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pcpg::ad {

// Row-major so checkpoint serialization can write tensor data verbatim.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Shape mismatches carry the primitive name and the offending shapes.
class ShapeError : public std::invalid_argument {
 public:
  ShapeError(const std::string& primitive, const std::string& detail)
      : std::invalid_argument(primitive + ": " + detail) {}
};

// Handle to a value recorded on a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode tape over dense double matrices. Values are recorded in
// topological order by construction; backward() replays the records in
// reverse, accumulating exact analytic partials. Scalars are 1x1 matrices,
// row vectors 1xN.
//
// Gradients only flow where they are needed: a node participates in the
// backward sweep iff one of its inputs does, seeded by requires_grad leaves.
class Tape {
 public:
  // leaves -------------------------------------------------------------
  Var leaf(Matrix value, bool requires_grad = false);
  Var scalar(double value) { return leaf(Matrix::Constant(1, 1, value)); }

  // primitives ----------------------------------------------------------
  Var matmul(Var a, Var b);
  Var add(Var a, Var b);               // identical shapes
  Var add_rowvec(Var a, Var b);        // a: m x n, b: 1 x n (bias broadcast)
  Var mul(Var a, Var b);               // elementwise
  Var affine(Var a, double scale, double shift);
  Var scale(Var a, double c) { return affine(a, c, 0.0); }
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var softmax(Var a);                  // row-wise
  Var log_softmax(Var a);              // row-wise
  Var row(Var a, int index);           // one row as 1 x n; embedding lookup
  Var concat(Var a, Var b);            // horizontal, same row count
  Var vstack(std::span<const Var> rows);
  Var transpose(Var a);
  Var pick(Var a, int r, int c);       // single element as 1 x 1
  Var sum(Var a);                      // all elements, 1 x 1
  Var add_n(std::span<const Var> xs);  // n-ary elementwise sum

  // execution -----------------------------------------------------------
  // Replays the tape in reverse from `loss` (must be scalar). Gradients are
  // zeroed first, so repeated calls produce bitwise-identical results.
  void backward(Var loss);

  const Matrix& value(Var v) const { return node(v.id).value; }
  const Matrix& grad(Var v) const;
  bool needs_grad(Var v) const { return node(v.id).needs_grad; }

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  enum class Op : std::uint8_t {
    Leaf, MatMul, Add, AddRowVec, Mul, Affine, Sigmoid, Tanh,
    Softmax, LogSoftmax, Row, Concat, VStack, Transpose, Pick, Sum, AddN,
  };

  struct Node {
    Matrix value;
    Matrix grad;  // allocated only when needs_grad
    Op op = Op::Leaf;
    int a = -1, b = -1;          // input ids
    int i0 = 0;                  // row / index argument
    int i1 = 0;
    double c0 = 0.0, c1 = 0.0;   // affine coefficients
    std::vector<int> list;       // inputs of n-ary ops
    bool needs_grad = false;
  };

  const Node& node(int id) const;
  Node& node(int id);
  Var push(Node n);
  bool any_needs_grad(Var a, Var b) const;
  void check_same_shape(const char* prim, Var a, Var b) const;

  std::vector<Node> nodes_;
};

}  // namespace pcpg::ad
