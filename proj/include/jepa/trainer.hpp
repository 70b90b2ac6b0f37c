#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "jepa/adam.hpp"
#include "jepa/cartpole.hpp"
#include "jepa/config.hpp"
#include "jepa/frame_history.hpp"
#include "jepa/gae.hpp"
#include "jepa/model.hpp"
#include "jepa/objective.hpp"
#include "jepa/ppo.hpp"
#include "jepa/render.hpp"
#include "jepa/rng.hpp"
#include "jepa/telemetry.hpp"

namespace jepa {

// One environment step as stored in the rollout buffer. `y` is absent for
// the last transition of an episode: there is no successor frame inside the
// episode, so that transition contributes no prediction target.
struct Transition {
  ObservationWindow x;
  int action = 0;
  double log_prob = 0.0;
  double reward = 0.0;
  double value = 0.0;
  bool done = false;
  std::optional<ObservationWindow> y;
};

template <class S>
struct Minibatch {
  std::vector<const ObservationWindow*> x;
  std::vector<const ObservationWindow*> y;  // parallel to x, nullptr = no target
  std::vector<int> actions;
  Vec<S> old_logp;
  Vec<S> advantages;
  Vec<S> returns;
};

// The experiment switches and the per-term coefficients of the total loss.
struct LossSwitches {
  bool jepa = true;
  bool rl_to_encoder = true;
  bool reg = false;
  double jepa_coef = 1.0;
  double actor_coef = 1.0;
  double critic_coef = 1.0;
  double reg_coef = 1.0;
  double clip_eps = 0.2;
  double value_coef = 0.5;
  double entropy_coef = 0.01;

  static LossSwitches from_config(const ExperimentConfig& c) {
    LossSwitches s;
    s.jepa = c.use_jepa;
    s.rl_to_encoder = c.propagate_rl_grads;
    s.reg = c.use_reg;
    s.jepa_coef = c.jepa_coef;
    s.actor_coef = c.actor_coef;
    s.critic_coef = c.critic_coef;
    s.reg_coef = c.reg_coef;
    s.clip_eps = c.clip_eps;
    s.value_coef = c.value_coef;
    s.entropy_coef = c.entropy_coef;
    return s;
  }
};

template <class S>
struct LossBreakdown {
  S jepa = S(0);
  S actor = S(0);
  S critic = S(0);
  S entropy = S(0);
  S reg = S(0);
  S total = S(0);
  double mean_variance = 0.0;
  bool collapsed = false;
  Index jepa_targets = 0;
};

// Total loss: actor and critic terms always enter; the prediction and
// regularization terms enter iff their switches are set.
template <class S>
S combine_losses(S jepa, S actor, S critic, S reg, const LossSwitches& sw) {
  S total = S(sw.actor_coef) * actor + S(sw.critic_coef) * critic;
  if (sw.jepa) total += S(sw.jepa_coef) * jepa;
  if (sw.reg) total += S(sw.reg_coef) * reg;
  return total;
}

template <class S>
struct WorkBuffers {
  EncoderCache<S> x_cache, y_cache;
  PredictorCache<S> pred_cache;
  MlpHeadCache<S> actor_cache, critic_cache;
  Mat<S> ctx, routed, tgt, ctx_t, pred_out;
  Mat<S> logits, values, d_logits, d_values;
  Mat<S> d_ctx, d_ctx_t, d_rl, d_rl2;
};

// Losses (and, when `grads` is non-null, parameter gradients) for one
// minibatch. The target embeddings come from the separate target-encoder
// weights and no gradient ever flows into them. When gradient routing is
// off, the actor/critic contribution to the encoder gradient is zero while
// the heads themselves still learn.
template <class S>
LossBreakdown<S> minibatch_losses(const ModelConfig& mc, const ModelParams<S>& theta,
                                  const EncoderParams<S>& target_enc,
                                  const Minibatch<S>& mb, const LossSwitches& sw,
                                  ModelParams<S>* grads, WorkBuffers<S>& wb) {
  const Index B = static_cast<Index>(mb.x.size());
  if (B == 0) throw UsageError("minibatch_losses: empty minibatch");
  const int d = mc.encoder.d_emb;

  LossBreakdown<S> out;
  encoder_forward(mc.encoder, theta.encoder, mb.x, wb.x_cache, wb.ctx);
  if (!wb.ctx.allFinite())
    throw std::runtime_error("training fault: non-finite embeddings");

  if (B >= 2) {
    const CollapseReport rep = collapse_metric(wb.ctx);
    out.mean_variance = rep.mean_variance;
    out.collapsed = rep.collapsed;
  }

  wb.routed = route_gradients(sw.rl_to_encoder, wb.ctx);
  head_forward(theta.actor, wb.routed, wb.actor_cache, wb.logits);
  head_forward(theta.critic, wb.routed, wb.critic_cache, wb.values);
  const PpoLosses<S> pl = ppo_losses(
      wb.logits, wb.values, mb.actions, mb.old_logp, mb.advantages, mb.returns,
      S(sw.clip_eps), S(sw.value_coef), S(sw.entropy_coef),
      grads ? &wb.d_logits : nullptr, grads ? &wb.d_values : nullptr);
  out.actor = pl.actor;
  out.critic = pl.critic;
  out.entropy = pl.entropy;

  std::vector<Index> with_target;
  std::vector<int> target_actions;
  std::vector<const ObservationWindow*> y_windows;
  if (sw.jepa) {
    for (Index b = 0; b < B; ++b) {
      if (mb.y[static_cast<std::size_t>(b)]) {
        with_target.push_back(b);
        y_windows.push_back(mb.y[static_cast<std::size_t>(b)]);
        target_actions.push_back(mb.actions[static_cast<std::size_t>(b)]);
      }
    }
    if (!with_target.empty()) {
      encoder_forward(mc.encoder, target_enc, y_windows, wb.y_cache, wb.tgt);
      wb.ctx_t.resize(static_cast<Index>(with_target.size()), d);
      for (std::size_t i = 0; i < with_target.size(); ++i)
        wb.ctx_t.row(static_cast<Index>(i)) = wb.ctx.row(with_target[i]);
      predictor_forward(theta.predictor, wb.ctx_t, target_actions, wb.pred_cache,
                        wb.pred_out);
      out.jepa = jepa_loss(wb.pred_out, wb.tgt);
    }
  }
  out.jepa_targets = static_cast<Index>(with_target.size());

  if (sw.reg) out.reg = variance_reg_loss(wb.ctx);

  out.total = combine_losses(out.jepa, out.actor, out.critic, out.reg, sw);

  if (grads) {
    wb.d_ctx.setZero(B, d);

    head_backward(theta.actor, wb.actor_cache,
                  Mat<S>(S(sw.actor_coef) * wb.d_logits), grads->actor, wb.d_rl);
    head_backward(theta.critic, wb.critic_cache,
                  Mat<S>(S(sw.critic_coef) * wb.d_values), grads->critic, wb.d_rl2);
    wb.d_rl += wb.d_rl2;
    wb.d_ctx += routed_grad(sw.rl_to_encoder, wb.d_rl);

    bool encoder_has_grad = sw.rl_to_encoder;
    if (sw.jepa && !with_target.empty()) {
      const Mat<S> d_pred =
          S(sw.jepa_coef) * jepa_loss_grad(wb.pred_out, wb.tgt);
      predictor_backward(theta.predictor, wb.pred_cache, d_pred,
                         grads->predictor, wb.d_ctx_t);
      for (std::size_t i = 0; i < with_target.size(); ++i)
        wb.d_ctx.row(with_target[i]) += wb.d_ctx_t.row(static_cast<Index>(i));
      encoder_has_grad = true;
    }
    if (sw.reg) {
      wb.d_ctx += S(sw.reg_coef) * variance_reg_grad(wb.ctx);
      encoder_has_grad = true;
    }
    if (encoder_has_grad)
      encoder_backward(mc.encoder, theta.encoder, wb.x_cache, wb.d_ctx,
                       grads->encoder);
  }
  return out;
}

// Environment instance plus its per-episode frame ring and sampling stream.
struct EnvWorker {
  CartPoleEnv env;
  FrameHistory history;
  Rng action_rng;
  double episode_return = 0.0;

  EnvWorker(std::uint64_t env_seed, std::uint64_t action_seed, int image_size,
            int max_episode_steps)
      : env(env_seed, max_episode_steps),
        history(image_size, image_size),
        action_rng(action_seed) {}

  void begin_episode() {
    env.reset();
    history.reset();
    history.push(std::make_shared<Frame>(render(env.state())));
    episode_return = 0.0;
  }
};

struct EpisodeEvent {
  long long env_step = 0;  // global step index at completion
  double ret = 0.0;
  int length = 0;
};

template <class S>
struct RolloutData {
  std::vector<Transition> transitions;     // worker-major concatenation
  std::vector<Index> segment_start;        // per worker
  std::vector<Index> segment_len;          // per worker
  std::vector<double> bootstrap;           // per worker
  std::vector<EpisodeEvent> episodes;      // in (worker, step) order
  std::vector<double> advantages, returns; // filled by prepare_update
};

// Collects `steps` transitions from one worker with the frozen current
// policy. Deterministic given the worker's streams; independent workers can
// run concurrently.
template <class S>
void collect_segment(const ModelConfig& mc, const ModelParams<S>& theta,
                     EnvWorker& w, int steps, long long step_base,
                     EncoderCache<S>& cache, Transition* out,
                     std::vector<EpisodeEvent>& episodes, double& bootstrap) {
  MlpHeadCache<S> actor_cache, critic_cache;
  Mat<S> ctx, logits, value, probs, logp;
  std::vector<const ObservationWindow*> one(1);

  for (int i = 0; i < steps; ++i) {
    Transition& tr = out[i];
    tr.x = w.history.x_window();
    one[0] = &tr.x;
    encoder_forward(mc.encoder, theta.encoder, one, cache, ctx);
    if (!ctx.allFinite())
      throw std::runtime_error("training fault: non-finite embedding at env step " +
                               std::to_string(step_base + i + 1));
    head_forward(theta.actor, ctx, actor_cache, logits);
    head_forward(theta.critic, ctx, critic_cache, value);
    softmax_rows(logits, probs, logp);

    const double u = w.action_rng.uniform();
    const int a = u < static_cast<double>(probs(0, 0)) ? 0 : 1;
    tr.action = a;
    tr.log_prob = static_cast<double>(logp(0, a));
    tr.value = static_cast<double>(value(0, 0));

    const StepResult sr = w.env.step(a == 0 ? Action::Left : Action::Right);
    tr.reward = sr.reward;
    tr.done = sr.terminated || sr.truncated;
    w.episode_return += sr.reward;

    w.history.push(std::make_shared<Frame>(render(w.env.state())));
    if (tr.done) {
      tr.y.reset();
      episodes.push_back({step_base + i + 1, w.episode_return, w.env.episode_steps()});
      w.begin_episode();
    } else {
      tr.y = w.history.y_window();
    }
  }

  const Transition& last = out[steps - 1];
  if (last.done) {
    bootstrap = 0.0;
  } else {
    ObservationWindow next_x = w.history.x_window();
    one[0] = &next_x;
    encoder_forward(mc.encoder, theta.encoder, one, cache, ctx);
    head_forward(theta.critic, ctx, critic_cache, value);
    bootstrap = static_cast<double>(value(0, 0));
  }
}

// Per-rollout update statistics, aggregated over minibatches.
struct UpdateStats {
  double sum_jepa = 0, sum_actor = 0, sum_critic = 0, sum_reg = 0, sum_var = 0;
  double min_var = std::numeric_limits<double>::infinity();
  long long n = 0;
  bool any_collapsed = false;

  void add(double jepa, double actor, double critic, double reg, double var,
           bool collapsed) {
    sum_jepa += jepa;
    sum_actor += actor;
    sum_critic += critic;
    sum_reg += reg;
    sum_var += var;
    min_var = std::min(min_var, var);
    any_collapsed = any_collapsed || collapsed;
    ++n;
  }
};

template <class S = float>
struct TrainState {
  ExperimentConfig cfg;
  ModelConfig mc;
  LossSwitches sw;
  std::uint64_t seed = 0;

  ModelParams<S> theta;
  EncoderParams<S> target_enc;  // EMA copy of theta.encoder
  ModelParams<S> grads;
  AdamState<S> adam;

  std::vector<EnvWorker> workers;
  Rng shuffle_rng{0};

  long long env_steps = 0;
  long long episodes = 0;
  RunningAverage run_avg{20};
  std::optional<double> last_episode_return;
  double min_mean_variance = std::numeric_limits<double>::infinity();
  long long first_collapse_step = -1;

  WorkBuffers<S> work;
  std::vector<std::unique_ptr<EncoderCache<S>>> worker_caches;
};

struct RunSummary {
  std::uint64_t seed = 0;
  std::string label;
  long long env_steps = 0;
  long long episodes = 0;
  double final_running_avg = std::numeric_limits<double>::quiet_NaN();
  double min_mean_variance = std::numeric_limits<double>::infinity();
  bool collapsed_ever = false;
  long long first_collapse_step = -1;
  bool scaled = false;
  double wall_seconds = 0.0;
  int rollout_workers = 1;
  std::string dir;
};

// Owns one training run: init or resume, rollout/update cycles, telemetry,
// checkpoints. Float precision; the reference mode (rollout_workers = 1)
// is bitwise deterministic for a fixed seed on one platform.
class Trainer {
 public:
  Trainer(const ExperimentConfig& cfg, std::uint64_t seed);
  explicit Trainer(const std::string& checkpoint_path);

  bool finished() const;
  // One collect+update cycle; returns this cycle's telemetry row.
  TelemetryRecord step_cycle();

  void save_checkpoint(const std::string& path) const;
  RunSummary summary() const;
  TrainState<float>& state() { return st_; }
  const TrainState<float>& state() const { return st_; }

 private:
  void init_workers();
  TrainState<float> st_;
};

// Full run: telemetry.csv + summary.json + checkpoint_final.ckpt under
// run_dir. If resume_from is non-empty the run continues from that
// checkpoint and appends telemetry.
RunSummary run_experiment(const ExperimentConfig& cfg, std::uint64_t seed,
                          const std::string& run_dir,
                          const std::string& resume_from = "");

void write_summary_json(const RunSummary& s, const std::string& path);
RunSummary read_summary_json(const std::string& path);

// Loads the model parameters and config from a checkpoint.
struct LoadedModel {
  ExperimentConfig cfg;
  ModelConfig mc;
  ModelParams<float> theta;
  EncoderParams<float> target_enc;
};
LoadedModel load_model(const std::string& checkpoint_path);

// Greedy (or sampled) evaluation episodes; returns episodic returns.
// dump_dir, when non-empty, receives one PGM per frame.
std::vector<double> evaluate(const LoadedModel& model, int episodes,
                             std::uint64_t seed, bool sample = false,
                             const std::string& dump_dir = "");

}  // namespace jepa
