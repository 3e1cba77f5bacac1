#include "team/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "team/error.hpp"
#include "team/vector_ops.hpp"

namespace team {

template <typename T>
void gemm(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& out) {
  if (a.cols() != b.rows())
    throw DimensionError("matmul: " + a.shape() + " * " + b.shape());
  out = Matrix<T>(a.rows(), b.cols());
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    T* orow = out.data() + i * m;
    const T* arow = a.data() + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = arow[p];
      if (av == T(0)) continue;
      const T* brow = b.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
    }
  }
}

template <typename T>
Matrix<T> transpose(const Matrix<T>& a) {
  Matrix<T> t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

namespace {

template <typename T>
void add_into(Matrix<T>& dst, const Matrix<T>& src, T factor = T(1)) {
  T* d = dst.data();
  const T* s = src.data();
  for (std::size_t i = 0; i < dst.size(); ++i) d[i] += factor * s[i];
}

template <typename T>
Tape<T>* common_tape(Var<T> a, Var<T> b) {
  if (a.tape == nullptr || a.tape != b.tape)
    throw ContractError("operands recorded on different tapes");
  return a.tape;
}

template <typename T>
void require_same_shape(const char* op, const Matrix<T>& a, const Matrix<T>& b) {
  if (!a.same_shape(b))
    throw DimensionError(std::string(op) + ": shape " + a.shape() + " vs " + b.shape());
}

template <typename T>
typename Tape<T>::Node make_node(OpKind op, std::initializer_list<Var<T>> ins, Matrix<T> value) {
  typename Tape<T>::Node n;
  n.op = op;
  n.owned = std::move(value);
  for (const auto& v : ins) n.inputs.push_back(v.id);
  return n;
}

}  // namespace

template <typename T>
Var<T> Tape<T>::push(Node n) {
  n.requires_grad = n.requires_grad || std::any_of(n.inputs.begin(), n.inputs.end(),
                                                   [this](std::uint32_t i) {
                                                     return nodes_[i].requires_grad;
                                                   });
  nodes_.push_back(std::move(n));
  return Var<T>{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename T>
Var<T> Tape<T>::constant(Matrix<T> m) {
  Node n;
  n.op = OpKind::kConstant;
  n.owned = std::move(m);
  return push(std::move(n));
}

template <typename T>
Var<T> Tape<T>::constant_ref(const Matrix<T>& m) {
  Node n;
  n.op = OpKind::kConstant;
  n.external = &m;
  return push(std::move(n));
}

template <typename T>
Var<T> Tape<T>::parameter(Parameter<T>& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var<T>{this, it->second};
  Node n;
  n.op = OpKind::kParameter;
  n.external = &p.value;
  n.param = &p;
  n.requires_grad = true;
  Var<T> v = push(std::move(n));
  param_nodes_.emplace(&p, v.id);
  return v;
}

template <typename T>
Matrix<T> Tape<T>::grad(Var<T> v) const {
  const Node& n = nodes_[v.id];
  if (n.grad.empty()) return Matrix<T>(n.value().rows(), n.value().cols());
  return n.grad;
}

template <typename T>
void Tape<T>::rewind(std::size_t mark) {
  if (mark > nodes_.size()) throw ContractError("rewind past the end of the tape");
  nodes_.resize(mark);
  std::erase_if(param_nodes_, [mark](const auto& kv) { return kv.second >= mark; });
}

template <typename T>
Matrix<T>& Tape<T>::grad_slot(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty() && !n.value().empty()) n.grad = Matrix<T>(n.value().rows(), n.value().cols());
  return n.grad;
}

template <typename T>
void Tape<T>::backward(Var<T> loss) {
  if (loss.tape != this) throw ContractError("backward: loss node belongs to another tape");
  const Matrix<T>& lv = value(loss);
  if (lv.rows() != 1 || lv.cols() != 1)
    throw ContractError("backward: loss must be scalar, got " + lv.shape());
  for (auto& n : nodes_) n.grad = Matrix<T>();
  grad_slot(loss.id)(0, 0) = T(1);
  for (std::int64_t id = loss.id; id >= 0; --id) {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.requires_grad || n.grad.empty()) continue;
    backprop_node(static_cast<std::uint32_t>(id));
  }
}

template <typename T>
void Tape<T>::backprop_node(std::uint32_t id) {
  Node& n = nodes_[id];
  const Matrix<T>& g = n.grad;
  const Matrix<T>& y = n.value();
  auto wants = [this](std::uint32_t i) { return nodes_[i].requires_grad; };
  auto in_val = [this, &n](std::size_t k) -> const Matrix<T>& {
    return nodes_[n.inputs[k]].value();
  };

  switch (n.op) {
    case OpKind::kConstant:
      break;
    case OpKind::kParameter:
      add_into(n.param->grad, g);
      break;
    case OpKind::kMatMul: {
      // y = a b: da = g b^T, db = a^T g
      const auto& a = in_val(0);
      const auto& b = in_val(1);
      Matrix<T> tmp;
      if (wants(n.inputs[0])) {
        gemm(g, transpose(b), tmp);
        add_into(grad_slot(n.inputs[0]), tmp);
      }
      if (wants(n.inputs[1])) {
        gemm(transpose(a), g, tmp);
        add_into(grad_slot(n.inputs[1]), tmp);
      }
      break;
    }
    case OpKind::kMatMulNT: {
      // y = a b^T: da = g b, db = g^T a
      const auto& a = in_val(0);
      const auto& b = in_val(1);
      Matrix<T> tmp;
      if (wants(n.inputs[0])) {
        gemm(g, b, tmp);
        add_into(grad_slot(n.inputs[0]), tmp);
      }
      if (wants(n.inputs[1])) {
        gemm(transpose(g), a, tmp);
        add_into(grad_slot(n.inputs[1]), tmp);
      }
      break;
    }
    case OpKind::kAdd:
      if (wants(n.inputs[0])) add_into(grad_slot(n.inputs[0]), g);
      if (wants(n.inputs[1])) add_into(grad_slot(n.inputs[1]), g);
      break;
    case OpKind::kSub:
      if (wants(n.inputs[0])) add_into(grad_slot(n.inputs[0]), g);
      if (wants(n.inputs[1])) add_into(grad_slot(n.inputs[1]), g, T(-1));
      break;
    case OpKind::kMul: {
      const auto& a = in_val(0);
      const auto& b = in_val(1);
      if (wants(n.inputs[0])) {
        auto& ga = grad_slot(n.inputs[0]);
        for (std::size_t i = 0; i < g.size(); ++i) ga.data()[i] += g.data()[i] * b.data()[i];
      }
      if (wants(n.inputs[1])) {
        auto& gb = grad_slot(n.inputs[1]);
        for (std::size_t i = 0; i < g.size(); ++i) gb.data()[i] += g.data()[i] * a.data()[i];
      }
      break;
    }
    case OpKind::kAffine:
      if (wants(n.inputs[0])) add_into(grad_slot(n.inputs[0]), g, n.alpha);
      break;
    case OpKind::kAddRowBias:
      if (wants(n.inputs[0])) add_into(grad_slot(n.inputs[0]), g);
      if (wants(n.inputs[1])) {
        auto& gb = grad_slot(n.inputs[1]);
        for (std::size_t r = 0; r < g.rows(); ++r)
          for (std::size_t c = 0; c < g.cols(); ++c) gb(0, c) += g(r, c);
      }
      break;
    case OpKind::kRelu:
      if (wants(n.inputs[0])) {
        const auto& x = in_val(0);
        auto& gx = grad_slot(n.inputs[0]);
        for (std::size_t i = 0; i < g.size(); ++i)
          if (x.data()[i] > T(0)) gx.data()[i] += g.data()[i];
      }
      break;
    case OpKind::kSoftmaxRows:
      if (wants(n.inputs[0])) {
        auto& gx = grad_slot(n.inputs[0]);
        for (std::size_t r = 0; r < y.rows(); ++r) {
          T inner = 0;
          for (std::size_t c = 0; c < y.cols(); ++c) inner += g(r, c) * y(r, c);
          for (std::size_t c = 0; c < y.cols(); ++c) gx(r, c) += y(r, c) * (g(r, c) - inner);
        }
      }
      break;
    case OpKind::kLogSoftmaxRows:
      if (wants(n.inputs[0])) {
        auto& gx = grad_slot(n.inputs[0]);
        for (std::size_t r = 0; r < y.rows(); ++r) {
          T gsum = 0;
          for (std::size_t c = 0; c < y.cols(); ++c) gsum += g(r, c);
          for (std::size_t c = 0; c < y.cols(); ++c)
            gx(r, c) += g(r, c) - std::exp(y(r, c)) * gsum;
        }
      }
      break;
    case OpKind::kRowScale: {
      const auto& x = in_val(0);
      const auto& s = in_val(1);
      if (wants(n.inputs[0])) {
        auto& gx = grad_slot(n.inputs[0]);
        for (std::size_t r = 0; r < x.rows(); ++r)
          for (std::size_t c = 0; c < x.cols(); ++c) gx(r, c) += s(r, 0) * g(r, c);
      }
      if (wants(n.inputs[1])) {
        auto& gs = grad_slot(n.inputs[1]);
        for (std::size_t r = 0; r < x.rows(); ++r) {
          T acc = 0;
          for (std::size_t c = 0; c < x.cols(); ++c) acc += g(r, c) * x(r, c);
          gs(r, 0) += acc;
        }
      }
      break;
    }
    case OpKind::kRowCosine: {
      // c = d / (|a||b| + eps)
      const auto& a = in_val(0);
      const auto& b = in_val(1);
      const bool wa = wants(n.inputs[0]);
      const bool wb = wants(n.inputs[1]);
      Matrix<T>* ga = wa ? &grad_slot(n.inputs[0]) : nullptr;
      Matrix<T>* gb = wb ? &grad_slot(n.inputs[1]) : nullptr;
      const T eps = static_cast<T>(kCosineEpsilon);
      for (std::size_t r = 0; r < a.rows(); ++r) {
        const T d = dot(a.row(r), b.row(r));
        const T na = norm(a.row(r));
        const T nb = norm(b.row(r));
        const T denom = na * nb + eps;
        const T gr = g(r, 0);
        const T inv = T(1) / denom;
        const T coef = d * inv * inv;
        const T ka = na > T(0) ? coef * nb / na : T(0);
        const T kb = nb > T(0) ? coef * na / nb : T(0);
        for (std::size_t c = 0; c < a.cols(); ++c) {
          if (wa) (*ga)(r, c) += gr * (b(r, c) * inv - ka * a(r, c));
          if (wb) (*gb)(r, c) += gr * (a(r, c) * inv - kb * b(r, c));
        }
      }
      break;
    }
    case OpKind::kSum:
      if (wants(n.inputs[0])) {
        auto& gx = grad_slot(n.inputs[0]);
        const T gv = g(0, 0);
        for (std::size_t i = 0; i < gx.size(); ++i) gx.data()[i] += gv;
      }
      break;
    case OpKind::kAverage: {
      const T f = T(1) / static_cast<T>(n.inputs.size());
      for (auto in : n.inputs)
        if (wants(in)) add_into(grad_slot(in), g, f);
      break;
    }
    case OpKind::kConcatCols: {
      std::size_t offset = 0;
      for (auto in : n.inputs) {
        const std::size_t w = nodes_[in].value().cols();
        if (wants(in)) {
          auto& gx = grad_slot(in);
          for (std::size_t r = 0; r < g.rows(); ++r)
            for (std::size_t c = 0; c < w; ++c) gx(r, c) += g(r, offset + c);
        }
        offset += w;
      }
      break;
    }
    case OpKind::kPick:
      if (wants(n.inputs[0])) grad_slot(n.inputs[0])(n.r, n.c) += g(0, 0);
      break;
  }
}

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  Tape<T>* t = common_tape(a, b);
  Matrix<T> out;
  gemm(a.value(), b.value(), out);
  return t->push(make_node<T>(OpKind::kMatMul, {a, b}, std::move(out)));
}

template <typename T>
Var<T> matmul_nt(Var<T> a, Var<T> b) {
  Tape<T>* t = common_tape(a, b);
  if (a.cols() != b.cols())
    throw DimensionError("matmul_nt: " + a.value().shape() + " * (" + b.value().shape() + ")^T");
  Matrix<T> out;
  gemm(a.value(), transpose(b.value()), out);
  return t->push(make_node<T>(OpKind::kMatMulNT, {a, b}, std::move(out)));
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  Tape<T>* t = common_tape(a, b);
  require_same_shape("add", a.value(), b.value());
  Matrix<T> out = a.value();
  add_into(out, b.value());
  return t->push(make_node<T>(OpKind::kAdd, {a, b}, std::move(out)));
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  Tape<T>* t = common_tape(a, b);
  require_same_shape("sub", a.value(), b.value());
  Matrix<T> out = a.value();
  add_into(out, b.value(), T(-1));
  return t->push(make_node<T>(OpKind::kSub, {a, b}, std::move(out)));
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  Tape<T>* t = common_tape(a, b);
  require_same_shape("mul", a.value(), b.value());
  Matrix<T> out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= b.value().data()[i];
  return t->push(make_node<T>(OpKind::kMul, {a, b}, std::move(out)));
}

template <typename T>
Var<T> affine(Var<T> a, T alpha, T beta) {
  Matrix<T> out = a.value();
  for (auto& v : out.flat()) v = alpha * v + beta;
  auto n = make_node<T>(OpKind::kAffine, {a}, std::move(out));
  n.alpha = alpha;
  n.beta = beta;
  return a.tape->push(std::move(n));
}

template <typename T>
Var<T> add_row_bias(Var<T> a, Var<T> bias) {
  Tape<T>* t = common_tape(a, bias);
  if (bias.rows() != 1 || bias.cols() != a.cols())
    throw DimensionError("add_row_bias: " + a.value().shape() + " + " + bias.value().shape());
  Matrix<T> out = a.value();
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += bias.value()(0, c);
  return t->push(make_node<T>(OpKind::kAddRowBias, {a, bias}, std::move(out)));
}

template <typename T>
Var<T> relu(Var<T> a) {
  Matrix<T> out = a.value();
  for (auto& v : out.flat()) v = v > T(0) ? v : T(0);
  return a.tape->push(make_node<T>(OpKind::kRelu, {a}, std::move(out)));
}

template <typename T>
Var<T> softmax_rows(Var<T> a) {
  const auto& x = a.value();
  Matrix<T> out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto s = softmax(x.row(r));
    std::copy(s.begin(), s.end(), out.row(r).begin());
  }
  return a.tape->push(make_node<T>(OpKind::kSoftmaxRows, {a}, std::move(out)));
}

template <typename T>
Var<T> log_softmax_rows(Var<T> a) {
  const auto& x = a.value();
  Matrix<T> out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    const T mx = *std::max_element(row.begin(), row.end());
    T s = 0;
    for (T v : row) s += std::exp(v - mx);
    const T lse = mx + std::log(s);
    for (std::size_t c = 0; c < x.cols(); ++c) out(r, c) = row[c] - lse;
  }
  return a.tape->push(make_node<T>(OpKind::kLogSoftmaxRows, {a}, std::move(out)));
}

template <typename T>
Var<T> row_scale(Var<T> a, Var<T> s) {
  Tape<T>* t = common_tape(a, s);
  if (s.cols() != 1 || s.rows() != a.rows())
    throw DimensionError("row_scale: " + a.value().shape() + " by " + s.value().shape());
  Matrix<T> out = a.value();
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (auto& v : out.row(r)) v *= s.value()(r, 0);
  return t->push(make_node<T>(OpKind::kRowScale, {a, s}, std::move(out)));
}

template <typename T>
Var<T> row_cosine(Var<T> a, Var<T> b) {
  Tape<T>* t = common_tape(a, b);
  require_same_shape("row_cosine", a.value(), b.value());
  Matrix<T> out(a.rows(), 1);
  for (std::size_t r = 0; r < a.rows(); ++r)
    out(r, 0) = cosine_similarity(a.value().row(r), b.value().row(r));
  return t->push(make_node<T>(OpKind::kRowCosine, {a, b}, std::move(out)));
}

template <typename T>
Var<T> sum(Var<T> a) {
  T s = 0;
  for (T v : a.value().flat()) s += v;
  return a.tape->push(make_node<T>(OpKind::kSum, {a}, Matrix<T>(1, 1, s)));
}

template <typename T>
Var<T> average(std::span<const Var<T>> xs) {
  if (xs.empty()) throw ContractError("average of zero operands");
  Tape<T>* t = xs.front().tape;
  Matrix<T> out = xs.front().value();
  typename Tape<T>::Node n;
  n.op = OpKind::kAverage;
  n.inputs.push_back(xs.front().id);
  for (std::size_t i = 1; i < xs.size(); ++i) {
    common_tape(xs.front(), xs[i]);
    require_same_shape("average", out, xs[i].value());
    add_into(out, xs[i].value());
    n.inputs.push_back(xs[i].id);
  }
  const T f = T(1) / static_cast<T>(xs.size());
  for (auto& v : out.flat()) v *= f;
  n.owned = std::move(out);
  return t->push(std::move(n));
}

template <typename T>
Var<T> concat_cols(std::span<const Var<T>> xs) {
  if (xs.empty()) throw ContractError("concat_cols of zero operands");
  Tape<T>* t = xs.front().tape;
  const std::size_t rows = xs.front().rows();
  std::size_t cols = 0;
  for (const auto& x : xs) {
    common_tape(xs.front(), x);
    if (x.rows() != rows)
      throw DimensionError("concat_cols: row count " + std::to_string(x.rows()) + " vs " +
                           std::to_string(rows));
    cols += x.cols();
  }
  Matrix<T> out(rows, cols);
  typename Tape<T>::Node n;
  n.op = OpKind::kConcatCols;
  std::size_t offset = 0;
  for (const auto& x : xs) {
    const auto& v = x.value();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy(v.row(r).begin(), v.row(r).end(), out.row(r).begin() + offset);
    offset += v.cols();
    n.inputs.push_back(x.id);
  }
  n.owned = std::move(out);
  return t->push(std::move(n));
}

template <typename T>
Var<T> pick(Var<T> a, std::size_t r, std::size_t c) {
  if (r >= a.rows() || c >= a.cols())
    throw DimensionError("pick (" + std::to_string(r) + "," + std::to_string(c) + ") from " +
                         a.value().shape());
  auto n = make_node<T>(OpKind::kPick, {a}, Matrix<T>(1, 1, a.value()(r, c)));
  n.r = r;
  n.c = c;
  return a.tape->push(std::move(n));
}

#define TEAM_INSTANTIATE_AUTODIFF(T)                                          \
  template class Tape<T>;                                                     \
  template void gemm<T>(const Matrix<T>&, const Matrix<T>&, Matrix<T>&);      \
  template Matrix<T> transpose<T>(const Matrix<T>&);                          \
  template Var<T> matmul<T>(Var<T>, Var<T>);                                  \
  template Var<T> matmul_nt<T>(Var<T>, Var<T>);                               \
  template Var<T> add<T>(Var<T>, Var<T>);                                     \
  template Var<T> sub<T>(Var<T>, Var<T>);                                     \
  template Var<T> mul<T>(Var<T>, Var<T>);                                     \
  template Var<T> affine<T>(Var<T>, T, T);                                    \
  template Var<T> add_row_bias<T>(Var<T>, Var<T>);                            \
  template Var<T> relu<T>(Var<T>);                                            \
  template Var<T> softmax_rows<T>(Var<T>);                                    \
  template Var<T> log_softmax_rows<T>(Var<T>);                                \
  template Var<T> row_scale<T>(Var<T>, Var<T>);                               \
  template Var<T> row_cosine<T>(Var<T>, Var<T>);                              \
  template Var<T> sum<T>(Var<T>);                                             \
  template Var<T> average<T>(std::span<const Var<T>>);                        \
  template Var<T> concat_cols<T>(std::span<const Var<T>>);                    \
  template Var<T> pick<T>(Var<T>, std::size_t, std::size_t);

TEAM_INSTANTIATE_AUTODIFF(float)
TEAM_INSTANTIATE_AUTODIFF(double)

}  // namespace team
