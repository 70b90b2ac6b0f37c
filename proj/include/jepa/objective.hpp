#pragma once

#include <string>
#include <vector>

#include "jepa/core.hpp"
#include "jepa/vit.hpp"

namespace jepa {

inline constexpr double kEmaTau = 0.99;

// Target-encoder weights: a running average of the context-encoder weights.
// Initialized as an exact copy; never touched by the optimizer.
template <class S>
void ema_update(EncoderParams<S>& target, const EncoderParams<S>& theta,
                S tau = S(kEmaTau)) {
  std::vector<Mat<S>*> ts;
  std::vector<const Mat<S>*> ss;
  visit_tensors(target, "", [&](const std::string&, Mat<S>& m) { ts.push_back(&m); });
  visit_tensors(theta, "", [&](const std::string&, const Mat<S>& m) { ss.push_back(&m); });
  if (ts.size() != ss.size()) throw ConfigError("ema_update: parameter sets differ");
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (ts[i]->rows() != ss[i]->rows() || ts[i]->cols() != ss[i]->cols())
      throw ConfigError("ema_update: tensor shape mismatch");
    *ts[i] = tau * *ts[i] + (S(1) - tau) * *ss[i];
  }
}

// Batch-averaged squared Euclidean distance between predicted and target
// embeddings. The target batch carries no gradient by construction: no
// backward pass is ever run through the target encoder.
template <class S>
S jepa_loss(const Mat<S>& pred, const Mat<S>& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw UsageError("jepa_loss: batch shapes differ");
  if (pred.rows() == 0) return S(0);
  return (pred - target).rowwise().squaredNorm().mean();
}

template <class S>
Mat<S> jepa_loss_grad(const Mat<S>& pred, const Mat<S>& target) {
  return (S(2) / static_cast<S>(pred.rows())) * (pred - target);
}

// Per-dimension unbiased sample variance across the batch.
template <class S>
Vec<S> batch_variance(const Mat<S>& batch) {
  if (batch.rows() < 2) throw UsageError("batch_variance: need batch size >= 2");
  const Mat<S> centered = batch.rowwise() - batch.colwise().mean();
  return (centered.array().square().colwise().sum() /
          static_cast<S>(batch.rows() - 1))
      .transpose();
}

// L_reg = -min(1, mean_i Var(batch)_i). Value in [-1, 0].
template <class S>
S variance_reg_loss(const Mat<S>& batch) {
  const S mean_var = batch_variance(batch).mean();
  return -std::min(S(1), mean_var);
}

// Gradient of variance_reg_loss w.r.t. the batch. Zero when the clamp is
// active (mean variance >= 1, boundary included).
template <class S>
Mat<S> variance_reg_grad(const Mat<S>& batch) {
  const S mean_var = batch_variance(batch).mean();
  if (mean_var >= S(1)) return Mat<S>::Zero(batch.rows(), batch.cols());
  const S scale = S(-2) / (static_cast<S>(batch.cols()) *
                           static_cast<S>(batch.rows() - 1));
  return scale * (batch.rowwise() - batch.colwise().mean());
}

struct CollapseReport {
  Vecd per_dim_variance;
  double mean_variance = 0.0;
  bool collapsed = false;
};

inline bool is_collapsed(double mean_variance) {
  return mean_variance < kCollapseThreshold;
}

// Mean batch-wise variance of the embeddings, computed in double.
template <class S>
CollapseReport collapse_metric(const Mat<S>& batch) {
  if (batch.rows() < 2) throw UsageError("collapse_metric: need batch size >= 2");
  const Matd b = batch.template cast<double>();
  CollapseReport r;
  r.per_dim_variance = batch_variance(b);
  r.mean_variance = r.per_dim_variance.mean();
  r.collapsed = is_collapsed(r.mean_variance);
  return r;
}

}  // namespace jepa
