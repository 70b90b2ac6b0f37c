#include "jepa/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "jepa/checkpoint.hpp"

namespace jepa {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

// Stream tags for seed derivation.
constexpr std::uint64_t kTagInit = 0x11;
constexpr std::uint64_t kTagShuffle = 0x22;
constexpr std::uint64_t kTagEnvBase = 0x1000;
constexpr std::uint64_t kTagActionBase = 0x2000;

std::vector<std::string> model_tensor_names(const ModelParams<float>& p) {
  std::vector<std::string> names;
  visit_model_tensors(p, [&](const std::string& n, const Matf&) { names.push_back(n); });
  return names;
}

}  // namespace

Trainer::Trainer(const ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  st_.cfg = cfg;
  st_.mc = cfg.model();
  st_.sw = LossSwitches::from_config(cfg);
  st_.seed = seed;

  Rng init_rng(derive_seed(seed, kTagInit));
  st_.theta = make_model_params<float>(st_.mc);
  init_model(st_.theta, init_rng);
  st_.target_enc = st_.theta.encoder;  // same initial values by construction
  st_.grads = make_model_grads<float>(st_.mc);
  st_.adam = AdamState<float>::make(const_tensor_ptrs<float>(st_.theta));
  st_.shuffle_rng = Rng(derive_seed(seed, kTagShuffle));
  st_.run_avg = RunningAverage(cfg.running_avg_window);
  init_workers();
  for (auto& w : st_.workers) w.begin_episode();
}

void Trainer::init_workers() {
  const ExperimentConfig& cfg = st_.cfg;
  st_.workers.clear();
  st_.worker_caches.clear();
  for (int w = 0; w < cfg.rollout_workers; ++w) {
    st_.workers.emplace_back(
        derive_seed(st_.seed, kTagEnvBase + static_cast<std::uint64_t>(w)),
        derive_seed(st_.seed, kTagActionBase + static_cast<std::uint64_t>(w)),
        cfg.image_size, cfg.max_episode_steps);
    st_.worker_caches.push_back(std::make_unique<EncoderCache<float>>());
  }
}

bool Trainer::finished() const { return st_.env_steps >= st_.cfg.total_env_steps; }

TelemetryRecord Trainer::step_cycle() {
  const ExperimentConfig& cfg = st_.cfg;
  const int workers = cfg.rollout_workers;
  const int seg = cfg.rollout_length / workers;

  RolloutData<float> rd;
  rd.transitions.resize(static_cast<std::size_t>(cfg.rollout_length));
  rd.segment_start.resize(static_cast<std::size_t>(workers));
  rd.segment_len.resize(static_cast<std::size_t>(workers));
  rd.bootstrap.resize(static_cast<std::size_t>(workers));
  std::vector<std::vector<EpisodeEvent>> events(static_cast<std::size_t>(workers));

  auto run_worker = [&](int w) {
    const Index start = static_cast<Index>(w) * seg;
    rd.segment_start[static_cast<std::size_t>(w)] = start;
    rd.segment_len[static_cast<std::size_t>(w)] = seg;
    collect_segment(st_.mc, st_.theta, st_.workers[static_cast<std::size_t>(w)],
                    seg, st_.env_steps + start,
                    *st_.worker_caches[static_cast<std::size_t>(w)],
                    rd.transitions.data() + start,
                    events[static_cast<std::size_t>(w)],
                    rd.bootstrap[static_cast<std::size_t>(w)]);
  };
  if (workers == 1) {
    run_worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(run_worker, w);
    for (auto& t : pool) t.join();
  }

  for (auto& ev : events) {
    for (const auto& e : ev) {
      rd.episodes.push_back(e);
      st_.run_avg.push(e.ret);
      st_.last_episode_return = e.ret;
      ++st_.episodes;
    }
  }
  st_.env_steps += cfg.rollout_length;

  // GAE per worker segment, then rollout-wide advantage normalization.
  const std::size_t n = rd.transitions.size();
  rd.advantages.resize(n);
  rd.returns.resize(n);
  for (int w = 0; w < workers; ++w) {
    const std::size_t start = static_cast<std::size_t>(rd.segment_start[static_cast<std::size_t>(w)]);
    std::vector<double> rews(static_cast<std::size_t>(seg)), vals(static_cast<std::size_t>(seg));
    std::vector<std::uint8_t> dones(static_cast<std::size_t>(seg));
    for (int i = 0; i < seg; ++i) {
      const Transition& tr = rd.transitions[start + static_cast<std::size_t>(i)];
      rews[static_cast<std::size_t>(i)] = tr.reward;
      vals[static_cast<std::size_t>(i)] = tr.value;
      dones[static_cast<std::size_t>(i)] = tr.done ? 1 : 0;
    }
    const GaeResult g = compute_gae(rews, vals, dones,
                                    rd.bootstrap[static_cast<std::size_t>(w)],
                                    cfg.gamma, cfg.gae_lambda);
    for (int i = 0; i < seg; ++i) {
      rd.advantages[start + static_cast<std::size_t>(i)] = g.advantages[static_cast<std::size_t>(i)];
      rd.returns[start + static_cast<std::size_t>(i)] = g.returns[static_cast<std::size_t>(i)];
    }
  }
  normalize_advantages(rd.advantages);

  // PPO epochs over shuffled minibatches.
  UpdateStats stats;
  const int mb_size = cfg.minibatch;
  const int n_mb = cfg.rollout_length / mb_size;
  std::vector<std::size_t> perm(n);
  Minibatch<float> mb;
  mb.x.resize(static_cast<std::size_t>(mb_size));
  mb.y.resize(static_cast<std::size_t>(mb_size));
  mb.actions.resize(static_cast<std::size_t>(mb_size));
  mb.old_logp.resize(mb_size);
  mb.advantages.resize(mb_size);
  mb.returns.resize(mb_size);

  auto params = tensor_ptrs<float>(st_.theta);
  auto grad_ptrs = const_tensor_ptrs<float>(st_.grads);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t i = n; i-- > 1;) {
      const std::size_t j = st_.shuffle_rng.index(i + 1);
      std::swap(perm[i], perm[j]);
    }
    for (int m = 0; m < n_mb; ++m) {
      for (int k = 0; k < mb_size; ++k) {
        const Transition& tr =
            rd.transitions[perm[static_cast<std::size_t>(m * mb_size + k)]];
        mb.x[static_cast<std::size_t>(k)] = &tr.x;
        mb.y[static_cast<std::size_t>(k)] = tr.y ? &*tr.y : nullptr;
        mb.actions[static_cast<std::size_t>(k)] = tr.action;
        mb.old_logp(k) = static_cast<float>(tr.log_prob);
        mb.advantages(k) = static_cast<float>(
            rd.advantages[perm[static_cast<std::size_t>(m * mb_size + k)]]);
        mb.returns(k) = static_cast<float>(
            rd.returns[perm[static_cast<std::size_t>(m * mb_size + k)]]);
      }
      zero_model_grads(st_.grads);
      const LossBreakdown<float> lb = minibatch_losses(
          st_.mc, st_.theta, st_.target_enc, mb, st_.sw, &st_.grads, st_.work);
      if (!std::isfinite(static_cast<double>(lb.total))) {
        throw std::runtime_error(
            "training fault: non-finite loss at env step " +
            std::to_string(st_.env_steps) + ", update " + std::to_string(st_.adam.t));
      }
      adam_step(params, grad_ptrs, st_.adam, static_cast<float>(cfg.learning_rate),
                static_cast<float>(cfg.adam_beta1), static_cast<float>(cfg.adam_beta2),
                static_cast<float>(cfg.adam_eps));
      ema_update(st_.target_enc, st_.theta.encoder);

      stats.add(static_cast<double>(lb.jepa), static_cast<double>(lb.actor),
                static_cast<double>(lb.critic), static_cast<double>(lb.reg),
                lb.mean_variance, lb.collapsed);
      if (lb.collapsed && st_.first_collapse_step < 0)
        st_.first_collapse_step = st_.env_steps;
      st_.min_mean_variance = std::min(st_.min_mean_variance, lb.mean_variance);
    }
  }

  TelemetryRecord rec;
  rec.step = st_.env_steps;
  rec.ret = st_.last_episode_return;
  if (st_.episodes > 0) rec.running_avg = st_.run_avg.mean();
  const double inv = stats.n > 0 ? 1.0 / static_cast<double>(stats.n) : 0.0;
  rec.mean_var = stats.sum_var * inv;
  rec.l_jepa = stats.sum_jepa * inv;
  rec.l_actor = stats.sum_actor * inv;
  rec.l_critic = stats.sum_critic * inv;
  rec.l_reg = stats.sum_reg * inv;
  return rec;
}

RunSummary Trainer::summary() const {
  RunSummary s;
  s.seed = st_.seed;
  s.label = st_.cfg.label();
  s.env_steps = st_.env_steps;
  s.episodes = st_.episodes;
  s.final_running_avg = st_.episodes > 0
                            ? st_.run_avg.mean()
                            : std::numeric_limits<double>::quiet_NaN();
  s.min_mean_variance = st_.min_mean_variance;
  s.collapsed_ever = st_.first_collapse_step >= 0;
  s.first_collapse_step = st_.first_collapse_step;
  s.scaled = st_.cfg.scaled_down();
  s.rollout_workers = st_.cfg.rollout_workers;
  return s;
}

// ---------------------------------------------------------------------------
// checkpointing

void Trainer::save_checkpoint(const std::string& path) const {
  const TrainState<float>& st = st_;
  ArchiveWriter w;

  visit_model_tensors(st.theta, [&](const std::string& n, const Matf& m) {
    w.add_f32(n, m);
  });
  visit_tensors(st.target_enc, "ema.enc", [&](const std::string& n, const Matf& m) {
    w.add_f32(n, m);
  });
  const auto names = model_tensor_names(st.theta);
  for (std::size_t i = 0; i < names.size(); ++i) {
    w.add_f32("adam.m." + names[i], st.adam.m[i]);
    w.add_f32("adam.v." + names[i], st.adam.v[i]);
  }

  json workers = json::array();
  for (std::size_t wi = 0; wi < st.workers.size(); ++wi) {
    const EnvWorker& ew = st.workers[wi];
    const CartState& cs = ew.env.state();
    json jw;
    jw["cart_state"] = {double_to_hex(cs.x), double_to_hex(cs.x_dot),
                        double_to_hex(cs.theta), double_to_hex(cs.theta_dot)};
    jw["episode_steps"] = ew.env.episode_steps();
    jw["episode_return"] = double_to_hex(ew.episode_return);
    jw["env_rng"] = ew.env.rng().save();
    jw["action_rng"] = ew.action_rng.save();
    jw["frames"] = static_cast<int>(ew.history.size());
    workers.push_back(jw);
    for (std::size_t k = 0; k < ew.history.size(); ++k) {
      // oldest first
      const FramePtr& f = ew.history.recent(ew.history.size() - 1 - k);
      w.add_f32("env.w" + std::to_string(wi) + ".frame" + std::to_string(k), *f);
    }
  }

  const auto ra_values = st.run_avg.values();
  Matd ra(static_cast<Index>(ra_values.size()), 1);
  for (Index i = 0; i < ra.rows(); ++i) ra(i, 0) = ra_values[static_cast<std::size_t>(i)];
  w.add_f64("aux.return_window", ra);

  json meta;
  meta["format"] = "train_state";
  meta["config"] = st.cfg.to_text();
  meta["seed"] = std::to_string(st.seed);
  meta["env_steps"] = std::to_string(st.env_steps);
  meta["episodes"] = std::to_string(st.episodes);
  meta["adam_t"] = std::to_string(st.adam.t);
  meta["shuffle_rng"] = st.shuffle_rng.save();
  meta["last_episode_return"] =
      st.last_episode_return ? double_to_hex(*st.last_episode_return) : "none";
  meta["min_mean_variance"] = double_to_hex(st.min_mean_variance);
  meta["first_collapse_step"] = std::to_string(st.first_collapse_step);
  meta["workers"] = workers.dump();

  w.set_meta("jepa_rl", meta.dump());
  w.write(path);
}

Trainer::Trainer(const std::string& checkpoint_path) {
  const Archive a = Archive::read(checkpoint_path);
  const json meta = json::parse(a.get_meta("jepa_rl"));
  const ExperimentConfig cfg = ExperimentConfig::from_text(meta.at("config").get<std::string>());
  cfg.validate();

  st_.cfg = cfg;
  st_.mc = cfg.model();
  st_.sw = LossSwitches::from_config(cfg);
  st_.seed = std::stoull(meta.at("seed").get<std::string>());

  st_.theta = make_model_params<float>(st_.mc);
  visit_model_tensors(st_.theta, [&](const std::string& n, Matf& m) {
    const Matf& src = a.get_f32(n);
    if (src.rows() != m.rows() || src.cols() != m.cols())
      throw std::runtime_error("checkpoint: shape mismatch for " + n);
    m = src;
  });
  st_.target_enc = make_encoder_params<float>(st_.mc.encoder);
  visit_tensors(st_.target_enc, "ema.enc", [&](const std::string& n, Matf& m) {
    m = a.get_f32(n);
  });
  st_.grads = make_model_grads<float>(st_.mc);
  st_.adam = AdamState<float>::make(const_tensor_ptrs<float>(st_.theta));
  const auto names = model_tensor_names(st_.theta);
  for (std::size_t i = 0; i < names.size(); ++i) {
    st_.adam.m[i] = a.get_f32("adam.m." + names[i]);
    st_.adam.v[i] = a.get_f32("adam.v." + names[i]);
  }
  st_.adam.t = std::stoll(meta.at("adam_t").get<std::string>());
  st_.shuffle_rng.load(meta.at("shuffle_rng").get<std::string>());
  st_.env_steps = std::stoll(meta.at("env_steps").get<std::string>());
  st_.episodes = std::stoll(meta.at("episodes").get<std::string>());
  st_.min_mean_variance = hex_to_double(meta.at("min_mean_variance").get<std::string>());
  st_.first_collapse_step = std::stoll(meta.at("first_collapse_step").get<std::string>());
  const std::string ler = meta.at("last_episode_return").get<std::string>();
  if (ler != "none") st_.last_episode_return = hex_to_double(ler);

  st_.run_avg = RunningAverage(cfg.running_avg_window);
  const Matd& ra = a.get_f64("aux.return_window");
  for (Index i = 0; i < ra.rows(); ++i) st_.run_avg.push(ra(i, 0));

  init_workers();
  const json workers = json::parse(meta.at("workers").get<std::string>());
  if (workers.size() != st_.workers.size())
    throw std::runtime_error("checkpoint: worker count mismatch");
  for (std::size_t wi = 0; wi < st_.workers.size(); ++wi) {
    EnvWorker& ew = st_.workers[wi];
    const json& jw = workers[wi];
    CartState cs;
    cs.x = hex_to_double(jw.at("cart_state")[0].get<std::string>());
    cs.x_dot = hex_to_double(jw.at("cart_state")[1].get<std::string>());
    cs.theta = hex_to_double(jw.at("cart_state")[2].get<std::string>());
    cs.theta_dot = hex_to_double(jw.at("cart_state")[3].get<std::string>());
    ew.env.restore(cs, jw.at("episode_steps").get<int>());
    ew.env.rng().load(jw.at("env_rng").get<std::string>());
    ew.action_rng.load(jw.at("action_rng").get<std::string>());
    ew.episode_return = hex_to_double(jw.at("episode_return").get<std::string>());
    ew.history.reset();
    const int frames = jw.at("frames").get<int>();
    for (int k = 0; k < frames; ++k) {
      ew.history.push(std::make_shared<Frame>(
          a.get_f32("env.w" + std::to_string(wi) + ".frame" + std::to_string(k))));
    }
  }
}

// ---------------------------------------------------------------------------
// full runs

RunSummary run_experiment(const ExperimentConfig& cfg, std::uint64_t seed,
                          const std::string& run_dir,
                          const std::string& resume_from) {
  fs::create_directories(run_dir);
  const std::string telemetry_path = run_dir + "/telemetry.csv";

  std::unique_ptr<Trainer> trainer;
  bool append = false;
  if (resume_from.empty()) {
    trainer = std::make_unique<Trainer>(cfg, seed);
  } else {
    trainer = std::make_unique<Trainer>(resume_from);
    append = fs::exists(telemetry_path);
  }

  std::ofstream csv(telemetry_path, append ? std::ios::app : std::ios::out);
  if (!csv) throw std::runtime_error("cannot open " + telemetry_path);
  if (!append) csv << kTelemetryHeader << "\n";

  const auto t0 = Clock::now();
  long long next_checkpoint =
      cfg.checkpoint_every > 0
          ? ((trainer->state().env_steps / cfg.checkpoint_every) + 1) * cfg.checkpoint_every
          : -1;
  long long rollouts = 0;
  while (!trainer->finished()) {
    TelemetryRecord rec;
    try {
      rec = trainer->step_cycle();
    } catch (const std::exception&) {
      trainer->save_checkpoint(run_dir + "/checkpoint_crash.ckpt");
      throw;
    }
    csv << telemetry_row_to_csv(rec) << "\n";
    csv.flush();
    ++rollouts;
    if (cfg.log_every > 0 && rollouts % cfg.log_every == 0) {
      std::fprintf(stderr, "[%s seed %llu] steps %lld  avg_return %s  mean_var %.3g\n",
                   cfg.label().c_str(), static_cast<unsigned long long>(seed),
                   trainer->state().env_steps,
                   rec.running_avg ? std::to_string(*rec.running_avg).c_str() : "-",
                   rec.mean_var);
    }
    if (next_checkpoint > 0 && trainer->state().env_steps >= next_checkpoint) {
      trainer->save_checkpoint(run_dir + "/checkpoint_step" +
                               std::to_string(trainer->state().env_steps) + ".ckpt");
      next_checkpoint += cfg.checkpoint_every;
    }
  }
  trainer->save_checkpoint(run_dir + "/checkpoint_final.ckpt");

  RunSummary s = trainer->summary();
  s.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  s.dir = run_dir;
  write_summary_json(s, run_dir + "/summary.json");
  return s;
}

void write_summary_json(const RunSummary& s, const std::string& path) {
  json j;
  j["seed"] = s.seed;
  j["label"] = s.label;
  j["env_steps"] = s.env_steps;
  j["episodes"] = s.episodes;
  if (std::isfinite(s.final_running_avg)) j["final_running_avg"] = s.final_running_avg;
  else j["final_running_avg"] = nullptr;
  j["min_mean_variance"] = s.min_mean_variance;
  j["collapsed_ever"] = s.collapsed_ever;
  j["first_collapse_step"] = s.first_collapse_step;
  j["scaled"] = s.scaled;
  j["wall_seconds"] = s.wall_seconds;
  j["rollout_workers"] = s.rollout_workers;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << j.dump(2) << "\n";
}

RunSummary read_summary_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  in >> j;
  RunSummary s;
  s.seed = j.at("seed").get<std::uint64_t>();
  s.label = j.at("label").get<std::string>();
  s.env_steps = j.at("env_steps").get<long long>();
  s.episodes = j.at("episodes").get<long long>();
  s.final_running_avg = j.at("final_running_avg").is_null()
                            ? std::numeric_limits<double>::quiet_NaN()
                            : j.at("final_running_avg").get<double>();
  s.min_mean_variance = j.at("min_mean_variance").get<double>();
  s.collapsed_ever = j.at("collapsed_ever").get<bool>();
  s.first_collapse_step = j.at("first_collapse_step").get<long long>();
  s.scaled = j.at("scaled").get<bool>();
  s.wall_seconds = j.at("wall_seconds").get<double>();
  s.rollout_workers = j.at("rollout_workers").get<int>();
  s.dir = path.substr(0, path.find_last_of('/'));
  return s;
}

LoadedModel load_model(const std::string& checkpoint_path) {
  const Archive a = Archive::read(checkpoint_path);
  const json meta = json::parse(a.get_meta("jepa_rl"));
  LoadedModel lm;
  lm.cfg = ExperimentConfig::from_text(meta.at("config").get<std::string>());
  lm.mc = lm.cfg.model();
  lm.theta = make_model_params<float>(lm.mc);
  visit_model_tensors(lm.theta, [&](const std::string& n, Matf& m) {
    m = a.get_f32(n);
  });
  lm.target_enc = make_encoder_params<float>(lm.mc.encoder);
  visit_tensors(lm.target_enc, "ema.enc", [&](const std::string& n, Matf& m) {
    m = a.get_f32(n);
  });
  return lm;
}

std::vector<double> evaluate(const LoadedModel& model, int episodes,
                             std::uint64_t seed, bool sample,
                             const std::string& dump_dir) {
  if (!dump_dir.empty()) fs::create_directories(dump_dir);
  EnvWorker w(derive_seed(seed, kTagEnvBase), derive_seed(seed, kTagActionBase),
              model.cfg.image_size, model.cfg.max_episode_steps);
  EncoderCache<float> cache;
  MlpHeadCache<float> hc;
  Mat<float> ctx, logits, probs, logp;
  std::vector<const ObservationWindow*> one(1);
  std::vector<double> returns;
  long long frame_idx = 0;

  for (int ep = 0; ep < episodes; ++ep) {
    w.begin_episode();
    double ret = 0.0;
    for (;;) {
      if (!dump_dir.empty()) {
        char name[64];
        std::snprintf(name, sizeof(name), "/frame_%06lld.pgm", frame_idx++);
        write_pgm(*w.history.recent(0), dump_dir + name);
      }
      ObservationWindow x = w.history.x_window();
      one[0] = &x;
      encoder_forward(model.mc.encoder, model.theta.encoder, one, cache, ctx);
      head_forward(model.theta.actor, ctx, hc, logits);
      softmax_rows(logits, probs, logp);
      int a;
      if (sample) {
        a = w.action_rng.uniform() < static_cast<double>(probs(0, 0)) ? 0 : 1;
      } else {
        a = probs(0, 0) >= probs(0, 1) ? 0 : 1;
      }
      const StepResult sr = w.env.step(a == 0 ? Action::Left : Action::Right);
      ret += sr.reward;
      w.history.push(std::make_shared<Frame>(render(w.env.state())));
      if (sr.terminated || sr.truncated) break;
    }
    returns.push_back(ret);
  }
  return returns;
}

}  // namespace jepa
