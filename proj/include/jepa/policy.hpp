#pragma once

#include <string>
#include <vector>

#include "jepa/core.hpp"
#include "jepa/rng.hpp"
#include "jepa/vit.hpp"

namespace jepa {

// Two-layer tanh MLP, shared shape for the actor (out = 2 logits) and the
// critic (out = 1 value). Both read only the context embedding.
struct PolicyConfig {
  int d_emb = 64;
  int hidden = 64;
};

template <class S>
struct MlpHead {
  Mat<S> w1;  // in x hidden
  Mat<S> b1;  // 1 x hidden
  Mat<S> w2;  // hidden x out
  Mat<S> b2;  // 1 x out
};

template <class P, class F>
void visit_head_tensors(P& p, const std::string& prefix, F&& f) {
  f(prefix + ".w1", p.w1);
  f(prefix + ".b1", p.b1);
  f(prefix + ".w2", p.w2);
  f(prefix + ".b2", p.b2);
}

template <class S>
MlpHead<S> make_head(int in, int hidden, int out) {
  MlpHead<S> h;
  h.w1 = Mat<S>::Zero(in, hidden);
  h.b1 = Mat<S>::Zero(1, hidden);
  h.w2 = Mat<S>::Zero(hidden, out);
  h.b2 = Mat<S>::Zero(1, out);
  return h;
}

template <class S>
void init_head(MlpHead<S>& h, Rng& rng, double stddev = 0.02) {
  fill_truncated_normal(h.w1, rng, stddev);
  fill_truncated_normal(h.w2, rng, stddev);
}

template <class S>
struct MlpHeadCache {
  Mat<S> input;  // B x in
  Mat<S> act;    // B x hidden, tanh output
};

template <class S>
void head_forward(const MlpHead<S>& h, const Mat<S>& x, MlpHeadCache<S>& c,
                  Mat<S>& out) {
  c.input = x;
  c.act.noalias() = x * h.w1;
  c.act.rowwise() += h.b1.row(0);
  c.act = c.act.array().tanh().matrix();
  out.noalias() = c.act * h.w2;
  out.rowwise() += h.b2.row(0);
}

template <class S>
void head_backward(const MlpHead<S>& h, const MlpHeadCache<S>& c,
                   const Mat<S>& d_out, MlpHead<S>& g, Mat<S>& d_x) {
  g.w2.noalias() += c.act.transpose() * d_out;
  g.b2 += d_out.colwise().sum();
  Mat<S> d_act = ((d_out * h.w2.transpose()).array() *
                  (S(1) - c.act.array().square()))
                     .matrix();
  g.w1.noalias() += c.input.transpose() * d_act;
  g.b1 += d_act.colwise().sum();
  d_x.noalias() = d_act * h.w1.transpose();
}

// Row-wise stable softmax and log-softmax.
template <class S>
void softmax_rows(const Mat<S>& logits, Mat<S>& probs, Mat<S>& log_probs) {
  const Vec<S> mx = logits.rowwise().maxCoeff();
  Mat<S> shifted = logits.colwise() - mx;
  Mat<S> ex = shifted.array().exp().matrix();
  const Vec<S> sums = ex.rowwise().sum();
  probs = (ex.array().colwise() / sums.array()).matrix();
  log_probs = (shifted.array().colwise() - sums.array().log()).matrix();
}

// Action distribution and value for one embedding.
template <class S>
void policy_forward(const MlpHead<S>& actor, const MlpHead<S>& critic,
                    const Vec<S>& emb, Vec<S>& probs_out, S& value_out) {
  MlpHeadCache<S> ca, cc;
  Mat<S> logits, value;
  Mat<S> x = emb.transpose();
  head_forward(actor, x, ca, logits);
  head_forward(critic, x, cc, value);
  Mat<S> probs, logp;
  softmax_rows(logits, probs, logp);
  probs_out = probs.row(0).transpose();
  value_out = value(0, 0);
}

}  // namespace jepa
