#pragma once

#include <span>

#include "team/parameter.hpp"

namespace team {

/// Momentum SGD: v <- momentum * v + g; p <- p - lr * v. Gradients are
/// zeroed afterwards.
template <typename T>
void sgd_step(std::span<Parameter<T>* const> params, T lr, T momentum) {
  for (Parameter<T>* p : params) {
    T* v = p->momentum.data();
    T* w = p->value.data();
    const T* g = p->grad.data();
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      v[i] = momentum * v[i] + g[i];
      w[i] -= lr * v[i];
    }
    p->zero_grad();
  }
}

}  // namespace team
