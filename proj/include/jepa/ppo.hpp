#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "jepa/core.hpp"
#include "jepa/policy.hpp"

namespace jepa {

struct PpoHyper {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_eps = 0.2;
  int epochs = 4;
  int minibatch = 64;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  int rollout_length = 512;
  double learning_rate = 3e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
};

template <class S>
struct PpoLosses {
  S actor = S(0);    // clipped surrogate minus the entropy bonus
  S critic = S(0);   // value_coef * mean squared value error
  S entropy = S(0);  // mean policy entropy
};

// Clipped-surrogate PPO losses for one minibatch, with gradients w.r.t. the
// actor logits and critic values. Advantages, returns and old log-probs are
// treated as constants.
template <class S>
PpoLosses<S> ppo_losses(const Mat<S>& logits, const Mat<S>& values,
                        const std::vector<int>& actions, const Vec<S>& old_logp,
                        const Vec<S>& advantages, const Vec<S>& returns,
                        S clip_eps, S value_coef, S entropy_coef,
                        Mat<S>* d_logits = nullptr, Mat<S>* d_values = nullptr) {
  const Index B = logits.rows();
  if (B == 0) throw UsageError("ppo_losses: empty batch");
  if (values.rows() != B || static_cast<Index>(actions.size()) != B ||
      old_logp.size() != B || advantages.size() != B || returns.size() != B)
    throw UsageError("ppo_losses: batch size mismatch");

  Mat<S> probs, logp;
  softmax_rows(logits, probs, logp);

  const S inv_b = S(1) / static_cast<S>(B);
  PpoLosses<S> out;
  if (d_logits) d_logits->setZero(logits.rows(), logits.cols());
  if (d_values) d_values->setZero(values.rows(), values.cols());

  S clip_term = S(0);
  for (Index b = 0; b < B; ++b) {
    const int a = actions[static_cast<std::size_t>(b)];
    const S lp_new = logp(b, a);
    const S ratio = std::exp(lp_new - old_logp(b));
    const S adv = advantages(b);
    const S surr1 = ratio * adv;
    const S surr2 = std::clamp(ratio, S(1) - clip_eps, S(1) + clip_eps) * adv;
    clip_term += std::min(surr1, surr2);

    // entropy of the categorical distribution
    S ent = S(0);
    for (Index j = 0; j < logits.cols(); ++j) ent -= probs(b, j) * logp(b, j);
    out.entropy += ent;

    if (d_logits) {
      // d(min(surr1, surr2))/d lp_new; the clipped branch has zero slope.
      const S g = (surr1 <= surr2) ? ratio * adv : S(0);
      for (Index j = 0; j < logits.cols(); ++j) {
        const S ind = (j == a) ? S(1) : S(0);
        (*d_logits)(b, j) += -inv_b * g * (ind - probs(b, j));
        (*d_logits)(b, j) +=
            entropy_coef * inv_b * probs(b, j) * (logp(b, j) + ent);
      }
    }
  }
  out.actor = -clip_term * inv_b - entropy_coef * out.entropy * inv_b;
  out.entropy *= inv_b;

  const Vec<S> err = values.col(0) - returns;
  out.critic = value_coef * err.squaredNorm() * inv_b;
  if (d_values) d_values->col(0) = S(2) * value_coef * inv_b * err;
  return out;
}

// Vanilla policy-gradient surrogate -mean(adv * log pi(a)) and its logits
// gradient; reference estimator for the unclipped limit.
template <class S>
S vanilla_pg_loss(const Mat<S>& logits, const std::vector<int>& actions,
                  const Vec<S>& advantages, Mat<S>* d_logits = nullptr) {
  const Index B = logits.rows();
  Mat<S> probs, logp;
  softmax_rows(logits, probs, logp);
  const S inv_b = S(1) / static_cast<S>(B);
  if (d_logits) d_logits->setZero(logits.rows(), logits.cols());
  S loss = S(0);
  for (Index b = 0; b < B; ++b) {
    const int a = actions[static_cast<std::size_t>(b)];
    loss -= advantages(b) * logp(b, a) * inv_b;
    if (d_logits) {
      for (Index j = 0; j < logits.cols(); ++j) {
        const S ind = (j == a) ? S(1) : S(0);
        (*d_logits)(b, j) -= inv_b * advantages(b) * (ind - probs(b, j));
      }
    }
  }
  return loss;
}

// Value-identical pass-through. When propagate is false the embeddings are
// treated as constants by the RL losses: the trainer multiplies the gradient
// flowing back into the encoder by routed_grad_gate().
template <class S>
Mat<S> route_gradients(bool propagate, const Mat<S>& embeddings) {
  (void)propagate;
  return embeddings;
}

template <class S>
Mat<S> routed_grad(bool propagate, const Mat<S>& grad) {
  if (propagate) return grad;
  return Mat<S>::Zero(grad.rows(), grad.cols());
}

}  // namespace jepa
