#pragma once

#include <string>
#include <utility>

#include "team/matrix.hpp"

namespace team {

/// A learnable tensor with its gradient accumulator and momentum buffer.
template <typename T>
struct Parameter {
  std::string name;
  Matrix<T> value;
  Matrix<T> grad;
  Matrix<T> momentum;

  Parameter() = default;
  Parameter(std::string n, Matrix<T> v)
      : name(std::move(n)),
        value(std::move(v)),
        grad(value.rows(), value.cols()),
        momentum(value.rows(), value.cols()) {}

  void zero_grad() { grad.fill(T(0)); }
};

}  // namespace team
