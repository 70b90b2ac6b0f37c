#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jepa/model.hpp"
#include "jepa/ppo.hpp"

namespace jepa {

// One experiment: the three switches of the study plus every hyperparameter.
// Parsed from a flat "key = value" file, one key per line, '#' comments;
// unknown keys are errors.
struct ExperimentConfig {
  // switches
  bool use_jepa = true;
  bool propagate_rl_grads = true;
  bool use_reg = false;

  // run scale
  long long total_env_steps = 100000;
  int seeds = 5;
  std::string out_dir = "runs";

  // ppo
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

  // encoder
  int image_size = 84;
  int patch_size = 14;
  int frames_per_window = 3;
  int d_emb = 64;
  int depth = 4;
  int heads = 4;
  int mlp_ratio = 2;

  // heads
  int predictor_hidden = 128;
  int policy_hidden = 64;

  // per-term coefficients (defaults reproduce the plain unweighted sum)
  double jepa_coef = 1.0;
  double actor_coef = 1.0;
  double critic_coef = 1.0;
  double reg_coef = 1.0;

  // environment
  int max_episode_steps = 500;

  // telemetry / checkpointing
  int running_avg_window = 20;
  long long checkpoint_every = 0;  // env steps; 0 = final checkpoint only
  int rollout_workers = 1;
  int log_every = 0;  // progress line every N rollouts; 0 = silent

  void validate() const;

  PpoHyper ppo() const;
  ModelConfig model() const;

  // e.g. "jepa_grad_noreg"
  std::string label() const;

  // Reference scale: 5 seeds x 100k env steps. Anything else is marked as a
  // scaled-down run in summaries.
  bool scaled_down() const { return total_env_steps != 100000 || seeds != 5; }

  std::string to_text() const;
  static ExperimentConfig from_text(const std::string& text);
  static ExperimentConfig from_file(const std::string& path);
};

// The four studied configurations derived from a base config:
// (no-jepa, grads, no-reg), (jepa, grads, no-reg),
// (jepa, no-grads, no-reg), (jepa, no-grads, reg).
std::vector<ExperimentConfig> paper_sweep(const ExperimentConfig& base);

}  // namespace jepa
