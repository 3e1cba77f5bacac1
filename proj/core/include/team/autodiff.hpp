#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "team/matrix.hpp"
#include "team/parameter.hpp"

namespace team {

template <typename T>
class Tape;

/// Handle to a node recorded on a tape.
template <typename T>
struct Var {
  Tape<T>* tape = nullptr;
  std::uint32_t id = 0;

  const Matrix<T>& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  /// Convenience for 1x1 nodes.
  T scalar() const { return value()(0, 0); }
};

enum class OpKind : std::uint8_t {
  kConstant,
  kParameter,
  kMatMul,
  kMatMulNT,
  kAdd,
  kSub,
  kMul,
  kAffine,
  kAddRowBias,
  kRelu,
  kSoftmaxRows,
  kLogSoftmaxRows,
  kRowScale,
  kRowCosine,
  kSum,
  kAverage,
  kConcatCols,
  kPick,
};

/// Eager reverse-mode recorder. Every op computes its value on creation and
/// appends a node; `backward` sweeps the nodes once in reverse order.
/// A tape is single-threaded; build one per episode.
template <typename T>
class Tape {
 public:
  struct Node {
    OpKind op = OpKind::kConstant;
    std::vector<std::uint32_t> inputs;
    Matrix<T> owned;
    const Matrix<T>* external = nullptr;
    Matrix<T> grad;
    Parameter<T>* param = nullptr;
    bool requires_grad = false;
    T alpha = 0;  // affine scale
    T beta = 0;   // affine shift
    std::size_t r = 0, c = 0;

    const Matrix<T>& value() const { return external ? *external : owned; }
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf holding a copy of `m`; receives no gradient.
  Var<T> constant(Matrix<T> m);
  /// Leaf viewing `m` without copying; `m` must outlive the tape.
  Var<T> constant_ref(const Matrix<T>& m);
  /// Trainable leaf; `backward` accumulates into `p.grad`. One node per
  /// parameter per tape.
  Var<T> parameter(Parameter<T>& p);

  const Matrix<T>& value(Var<T> v) const { return nodes_[v.id].value(); }
  /// Gradient of the last `backward` loss w.r.t. `v` (zeros if unreached).
  Matrix<T> grad(Var<T> v) const;
  const Node& node(Var<T> v) const { return nodes_[v.id]; }

  std::size_t size() const noexcept { return nodes_.size(); }
  /// Drops every node recorded after `mark` (a previous `size()`).
  void rewind(std::size_t mark);
  void clear() { rewind(0); }

  /// Reverse sweep from a 1x1 loss node. Gradients of parameters are added
  /// to their `grad` buffers.
  void backward(Var<T> loss);

  // Internal: used by the op functions.
  Var<T> push(Node n);
  Matrix<T>& grad_slot(std::uint32_t id);

 private:
  void backprop_node(std::uint32_t id);

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter<T>*, std::uint32_t> param_nodes_;
};

template <typename T>
const Matrix<T>& Var<T>::value() const {
  return tape->value(*this);
}

// Differentiable operations. All operands must live on the same tape.

/// a * b.
template <typename T> Var<T> matmul(Var<T> a, Var<T> b);
/// a * b^T.
template <typename T> Var<T> matmul_nt(Var<T> a, Var<T> b);
template <typename T> Var<T> add(Var<T> a, Var<T> b);
template <typename T> Var<T> sub(Var<T> a, Var<T> b);
/// Elementwise product.
template <typename T> Var<T> mul(Var<T> a, Var<T> b);
/// alpha * a + beta, elementwise.
template <typename T> Var<T> affine(Var<T> a, T alpha, T beta = T(0));
template <typename T> Var<T> scale(Var<T> a, T alpha) { return affine(a, alpha, T(0)); }
/// Adds the 1xC row `bias` to every row of `a`.
template <typename T> Var<T> add_row_bias(Var<T> a, Var<T> bias);
template <typename T> Var<T> relu(Var<T> a);
/// Max-subtracted softmax over each row.
template <typename T> Var<T> softmax_rows(Var<T> a);
template <typename T> Var<T> log_softmax_rows(Var<T> a);
/// Multiplies row r of `a` by s(r, 0); `s` is Rx1.
template <typename T> Var<T> row_scale(Var<T> a, Var<T> s);
/// Rx1 column of eps-guarded cosine similarities between matching rows.
template <typename T> Var<T> row_cosine(Var<T> a, Var<T> b);
/// Sum of all entries, 1x1.
template <typename T> Var<T> sum(Var<T> a);
/// Elementwise mean of equally shaped operands.
template <typename T> Var<T> average(std::span<const Var<T>> xs);
/// Horizontal concatenation of operands with equal row counts.
template <typename T> Var<T> concat_cols(std::span<const Var<T>> xs);
/// Entry (r, c) of `a` as a 1x1 node.
template <typename T> Var<T> pick(Var<T> a, std::size_t r, std::size_t c);

template <typename T>
Var<T> average(const std::vector<Var<T>>& xs) {
  return average<T>(std::span<const Var<T>>(xs));
}
template <typename T>
Var<T> concat_cols(const std::vector<Var<T>>& xs) {
  return concat_cols<T>(std::span<const Var<T>>(xs));
}

// Plain kernels shared by the ops and by forward-only code.

/// out = a * b (out is resized).
template <typename T> void gemm(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& out);
template <typename T> Matrix<T> transpose(const Matrix<T>& a);

}  // namespace team
