#pragma once

#include <string>
#include <vector>

#include "jepa/core.hpp"
#include "jepa/rng.hpp"
#include "jepa/vit.hpp"

namespace jepa {

// Action-conditioned two-layer MLP. The one-hot action is projected to the
// hidden width and added after the first layer; the hidden width is kept
// small so that prediction is solved by the encoder, not here.
struct PredictorConfig {
  int d_emb = 64;
  int hidden = 128;
  int n_actions = kNumActions;
};

template <class S>
struct PredictorParams {
  Mat<S> w1;  // d_emb x hidden
  Mat<S> b1;  // 1 x hidden
  Mat<S> wa;  // n_actions x hidden, one row per action, no bias
  Mat<S> w2;  // hidden x d_emb
  Mat<S> b2;  // 1 x d_emb
};

template <class P, class F>
void visit_predictor_tensors(P& p, const std::string& prefix, F&& f) {
  f(prefix + ".w1", p.w1);
  f(prefix + ".b1", p.b1);
  f(prefix + ".wa", p.wa);
  f(prefix + ".w2", p.w2);
  f(prefix + ".b2", p.b2);
}

template <class S>
PredictorParams<S> make_predictor_params(const PredictorConfig& cfg) {
  PredictorParams<S> p;
  p.w1 = Mat<S>::Zero(cfg.d_emb, cfg.hidden);
  p.b1 = Mat<S>::Zero(1, cfg.hidden);
  p.wa = Mat<S>::Zero(cfg.n_actions, cfg.hidden);
  p.w2 = Mat<S>::Zero(cfg.hidden, cfg.d_emb);
  p.b2 = Mat<S>::Zero(1, cfg.d_emb);
  return p;
}

template <class S>
void init_predictor(PredictorParams<S>& p, Rng& rng, double stddev = 0.02) {
  fill_truncated_normal(p.w1, rng, stddev);
  fill_truncated_normal(p.wa, rng, stddev);
  fill_truncated_normal(p.w2, rng, stddev);
}

template <class S>
struct PredictorCache {
  Mat<S> input;       // B x d_emb
  Mat<S> pre;         // B x hidden, layer-2 pre-activation
  Mat<S> act, dact;   // gelu(pre), gelu'(pre)
  std::vector<int> actions;
};

template <class S>
void predictor_forward(const PredictorParams<S>& p, const Mat<S>& ctx_emb,
                       const std::vector<int>& actions, PredictorCache<S>& c,
                       Mat<S>& out) {
  const Index B = ctx_emb.rows();
  if (static_cast<Index>(actions.size()) != B)
    throw UsageError("predictor: actions/batch size mismatch");
  c.input = ctx_emb;
  c.actions = actions;
  c.pre.noalias() = ctx_emb * p.w1;
  c.pre.rowwise() += p.b1.row(0);
  for (Index b = 0; b < B; ++b) {
    c.pre.row(b) += p.wa.row(actions[static_cast<std::size_t>(b)]);
  }
  gelu_forward(c.pre, c.act, c.dact);
  out.noalias() = c.act * p.w2;
  out.rowwise() += p.b2.row(0);
}

// Accumulates parameter gradients into g; returns the gradient at ctx_emb.
template <class S>
void predictor_backward(const PredictorParams<S>& p, const PredictorCache<S>& c,
                        const Mat<S>& d_out, PredictorParams<S>& g,
                        Mat<S>& d_ctx) {
  g.w2.noalias() += c.act.transpose() * d_out;
  g.b2 += d_out.colwise().sum();
  Mat<S> d_pre = ((d_out * p.w2.transpose()).array() * c.dact.array()).matrix();
  g.w1.noalias() += c.input.transpose() * d_pre;
  g.b1 += d_pre.colwise().sum();
  for (Index b = 0; b < d_pre.rows(); ++b) {
    g.wa.row(c.actions[static_cast<std::size_t>(b)]) += d_pre.row(b);
  }
  d_ctx.noalias() = d_pre * p.w1.transpose();
}

// Single-sample convenience wrapper.
template <class S>
Vec<S> predict(const PredictorParams<S>& p, const Vec<S>& ctx_emb, Action a) {
  PredictorCache<S> cache;
  Mat<S> out;
  Mat<S> in = ctx_emb.transpose();
  predictor_forward(p, in, std::vector<int>{action_index(a)}, cache, out);
  return out.row(0).transpose();
}

}  // namespace jepa
