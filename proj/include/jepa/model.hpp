#pragma once

#include <string>
#include <vector>

#include "jepa/core.hpp"
#include "jepa/policy.hpp"
#include "jepa/predictor.hpp"
#include "jepa/rng.hpp"
#include "jepa/vit.hpp"

namespace jepa {

struct ModelConfig {
  EncoderConfig encoder;
  PredictorConfig predictor;
  PolicyConfig policy;

  void validate() const {
    encoder.validate();
    if (predictor.d_emb != encoder.d_emb || policy.d_emb != encoder.d_emb)
      throw ConfigError("model: head input widths must equal d_emb");
    if (predictor.hidden <= 0 || policy.hidden <= 0)
      throw ConfigError("model: hidden widths must be positive");
  }
};

// All trainable parameters. The encoder comes first in visitation order so
// that the target-encoder copy corresponds to a prefix of the tensor list.
template <class S>
struct ModelParams {
  EncoderParams<S> encoder;
  PredictorParams<S> predictor;
  MlpHead<S> actor;
  MlpHead<S> critic;
};

template <class P, class F>
void visit_model_tensors(P& p, F&& f) {
  visit_tensors(p.encoder, "enc", f);
  visit_predictor_tensors(p.predictor, "pred", f);
  visit_head_tensors(p.actor, "actor", f);
  visit_head_tensors(p.critic, "critic", f);
}

template <class S, class P>
std::vector<Mat<S>*> tensor_ptrs(P& p) {
  std::vector<Mat<S>*> out;
  visit_model_tensors(p, [&](const std::string&, Mat<S>& m) { out.push_back(&m); });
  return out;
}

template <class S, class P>
std::vector<const Mat<S>*> const_tensor_ptrs(const P& p) {
  std::vector<const Mat<S>*> out;
  visit_model_tensors(p, [&](const std::string&, const Mat<S>& m) { out.push_back(&m); });
  return out;
}

template <class S>
ModelParams<S> make_model_params(const ModelConfig& cfg) {
  cfg.validate();
  ModelParams<S> p;
  p.encoder = make_encoder_params<S>(cfg.encoder);
  p.predictor = make_predictor_params<S>(cfg.predictor);
  p.actor = make_head<S>(cfg.policy.d_emb, cfg.policy.hidden, kNumActions);
  p.critic = make_head<S>(cfg.policy.d_emb, cfg.policy.hidden, 1);
  return p;
}

template <class S>
void init_model(ModelParams<S>& p, Rng& rng) {
  init_encoder(p.encoder, rng);
  init_predictor(p.predictor, rng);
  init_head(p.actor, rng);
  init_head(p.critic, rng);
}

template <class S>
void zero_model_grads(ModelParams<S>& g) {
  visit_model_tensors(g, [](const std::string&, Mat<S>& m) { m.setZero(); });
}

// Gradient accumulator with the same shapes as the parameters.
template <class S>
ModelParams<S> make_model_grads(const ModelConfig& cfg) {
  ModelParams<S> g = make_model_params<S>(cfg);
  zero_model_grads(g);
  return g;
}

template <class S>
long long count_params(const ModelParams<S>& p) {
  long long n = 0;
  visit_model_tensors(p, [&](const std::string&, const Mat<S>& m) { n += m.size(); });
  return n;
}

}  // namespace jepa
