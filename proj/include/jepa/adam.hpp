#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "jepa/core.hpp"

namespace jepa {

// Adam with bias correction over a list of tensors. m/v mirror the parameter
// shapes in registration order.
template <class S>
struct AdamState {
  std::vector<Mat<S>> m, v;
  long long t = 0;

  static AdamState make(const std::vector<const Mat<S>*>& params) {
    AdamState s;
    s.m.reserve(params.size());
    s.v.reserve(params.size());
    for (const Mat<S>* p : params) {
      s.m.push_back(Mat<S>::Zero(p->rows(), p->cols()));
      s.v.push_back(Mat<S>::Zero(p->rows(), p->cols()));
    }
    return s;
  }
};

template <class S>
void adam_step(const std::vector<Mat<S>*>& params,
               const std::vector<const Mat<S>*>& grads, AdamState<S>& state,
               S lr, S beta1, S beta2, S eps) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw ConfigError("adam_step: tensor list mismatch");
  ++state.t;
  const S bc1 = S(1) - std::pow(beta1, static_cast<S>(state.t));
  const S bc2 = S(1) - std::pow(beta2, static_cast<S>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Mat<S>& m = state.m[i];
    Mat<S>& v = state.v[i];
    const Mat<S>& g = *grads[i];
    m = beta1 * m + (S(1) - beta1) * g;
    v = (beta2 * v.array() + (S(1) - beta2) * g.array().square()).matrix();
    params[i]->array() -=
        lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
  }
}

}  // namespace jepa
