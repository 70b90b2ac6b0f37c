#include "jepa/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace jepa {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("bad boolean: " + v);
}

long long parse_int(const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("bad integer: " + v);
  }
}

double parse_double(const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("bad number: " + v);
  }
}

struct Field {
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

const std::vector<std::pair<std::string, Field>>& fields() {
  auto b = [](bool ExperimentConfig::* m) {
    return Field{[m](ExperimentConfig& c, const std::string& v) { c.*m = parse_bool(v); },
                 [m](const ExperimentConfig& c) { return c.*m ? "true" : "false"; }};
  };
  auto i = [](int ExperimentConfig::* m) {
    return Field{[m](ExperimentConfig& c, const std::string& v) { c.*m = static_cast<int>(parse_int(v)); },
                 [m](const ExperimentConfig& c) { return std::to_string(c.*m); }};
  };
  auto ll = [](long long ExperimentConfig::* m) {
    return Field{[m](ExperimentConfig& c, const std::string& v) { c.*m = parse_int(v); },
                 [m](const ExperimentConfig& c) { return std::to_string(c.*m); }};
  };
  auto d = [](double ExperimentConfig::* m) {
    return Field{[m](ExperimentConfig& c, const std::string& v) { c.*m = parse_double(v); },
                 [m](const ExperimentConfig& c) { return fmt_double(c.*m); }};
  };
  auto s = [](std::string ExperimentConfig::* m) {
    return Field{[m](ExperimentConfig& c, const std::string& v) { c.*m = v; },
                 [m](const ExperimentConfig& c) { return c.*m; }};
  };
  static const std::vector<std::pair<std::string, Field>> table = {
      {"use_jepa", b(&ExperimentConfig::use_jepa)},
      {"propagate_rl_grads", b(&ExperimentConfig::propagate_rl_grads)},
      {"use_reg", b(&ExperimentConfig::use_reg)},
      {"total_env_steps", ll(&ExperimentConfig::total_env_steps)},
      {"seeds", i(&ExperimentConfig::seeds)},
      {"out_dir", s(&ExperimentConfig::out_dir)},
      {"gamma", d(&ExperimentConfig::gamma)},
      {"gae_lambda", d(&ExperimentConfig::gae_lambda)},
      {"clip_eps", d(&ExperimentConfig::clip_eps)},
      {"epochs", i(&ExperimentConfig::epochs)},
      {"minibatch", i(&ExperimentConfig::minibatch)},
      {"value_coef", d(&ExperimentConfig::value_coef)},
      {"entropy_coef", d(&ExperimentConfig::entropy_coef)},
      {"rollout_length", i(&ExperimentConfig::rollout_length)},
      {"learning_rate", d(&ExperimentConfig::learning_rate)},
      {"adam_beta1", d(&ExperimentConfig::adam_beta1)},
      {"adam_beta2", d(&ExperimentConfig::adam_beta2)},
      {"adam_eps", d(&ExperimentConfig::adam_eps)},
      {"image_size", i(&ExperimentConfig::image_size)},
      {"patch_size", i(&ExperimentConfig::patch_size)},
      {"frames_per_window", i(&ExperimentConfig::frames_per_window)},
      {"d_emb", i(&ExperimentConfig::d_emb)},
      {"depth", i(&ExperimentConfig::depth)},
      {"heads", i(&ExperimentConfig::heads)},
      {"mlp_ratio", i(&ExperimentConfig::mlp_ratio)},
      {"predictor_hidden", i(&ExperimentConfig::predictor_hidden)},
      {"policy_hidden", i(&ExperimentConfig::policy_hidden)},
      {"jepa_coef", d(&ExperimentConfig::jepa_coef)},
      {"actor_coef", d(&ExperimentConfig::actor_coef)},
      {"critic_coef", d(&ExperimentConfig::critic_coef)},
      {"reg_coef", d(&ExperimentConfig::reg_coef)},
      {"max_episode_steps", i(&ExperimentConfig::max_episode_steps)},
      {"running_avg_window", i(&ExperimentConfig::running_avg_window)},
      {"checkpoint_every", ll(&ExperimentConfig::checkpoint_every)},
      {"rollout_workers", i(&ExperimentConfig::rollout_workers)},
      {"log_every", i(&ExperimentConfig::log_every)},
  };
  return table;
}

}  // namespace

void ExperimentConfig::validate() const {
  std::vector<std::string> errs;
  if (!use_jepa && !propagate_rl_grads)
    errs.push_back(
        "use_jepa=false with propagate_rl_grads=false leaves the encoder "
        "without any training signal; this configuration is rejected");
  if (total_env_steps <= 0) errs.push_back("total_env_steps must be positive");
  if (seeds <= 0) errs.push_back("seeds must be positive");
  if (gamma <= 0 || gamma > 1) errs.push_back("gamma must be in (0, 1]");
  if (gae_lambda < 0 || gae_lambda > 1) errs.push_back("gae_lambda must be in [0, 1]");
  if (clip_eps <= 0 || clip_eps >= 1) errs.push_back("clip_eps must be in (0, 1)");
  if (epochs <= 0) errs.push_back("epochs must be positive");
  if (minibatch < 2) errs.push_back("minibatch must be at least 2");
  if (rollout_length < minibatch || rollout_length % minibatch != 0)
    errs.push_back("rollout_length must be a positive multiple of minibatch");
  if (value_coef < 0 || entropy_coef < 0) errs.push_back("loss coefficients must be non-negative");
  if (learning_rate <= 0) errs.push_back("learning_rate must be positive");
  if (adam_beta1 <= 0 || adam_beta1 >= 1 || adam_beta2 <= 0 || adam_beta2 >= 1)
    errs.push_back("adam betas must be in (0, 1)");
  if (adam_eps <= 0) errs.push_back("adam_eps must be positive");
  if (max_episode_steps <= 0) errs.push_back("max_episode_steps must be positive");
  if (running_avg_window <= 0) errs.push_back("running_avg_window must be positive");
  if (rollout_workers <= 0 || rollout_length % rollout_workers != 0)
    errs.push_back("rollout_workers must divide rollout_length");
  try {
    model().validate();
  } catch (const std::exception& e) {
    errs.push_back(e.what());
  }
  if (!errs.empty()) {
    std::string msg = "invalid config:";
    for (const auto& e : errs) msg += "\n  - " + e;
    throw ConfigError(msg);
  }
}

PpoHyper ExperimentConfig::ppo() const {
  PpoHyper h;
  h.gamma = gamma;
  h.gae_lambda = gae_lambda;
  h.clip_eps = clip_eps;
  h.epochs = epochs;
  h.minibatch = minibatch;
  h.value_coef = value_coef;
  h.entropy_coef = entropy_coef;
  h.rollout_length = rollout_length;
  h.learning_rate = learning_rate;
  h.adam_beta1 = adam_beta1;
  h.adam_beta2 = adam_beta2;
  h.adam_eps = adam_eps;
  return h;
}

ModelConfig ExperimentConfig::model() const {
  ModelConfig m;
  m.encoder.image_size = image_size;
  m.encoder.patch_size = patch_size;
  m.encoder.frames_per_window = frames_per_window;
  m.encoder.d_emb = d_emb;
  m.encoder.depth = depth;
  m.encoder.heads = heads;
  m.encoder.mlp_ratio = mlp_ratio;
  m.predictor.d_emb = d_emb;
  m.predictor.hidden = predictor_hidden;
  m.policy.d_emb = d_emb;
  m.policy.hidden = policy_hidden;
  return m;
}

std::string ExperimentConfig::label() const {
  std::string l = use_jepa ? "jepa" : "nojepa";
  l += propagate_rl_grads ? "_grad" : "_nograd";
  l += use_reg ? "_reg" : "_noreg";
  return l;
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream os;
  for (const auto& [name, f] : fields()) os << name << " = " << f.get(*this) << "\n";
  return os.str();
}

ExperimentConfig ExperimentConfig::from_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream is(text);
  std::string line;
  std::vector<std::string> errs;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      errs.push_back("line " + std::to_string(lineno) + ": expected 'key = value'");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    bool found = false;
    for (const auto& [name, f] : fields()) {
      if (name == key) {
        try {
          f.set(cfg, value);
        } catch (const std::exception& e) {
          errs.push_back("line " + std::to_string(lineno) + ": key '" + key +
                         "': " + e.what());
        }
        found = true;
        break;
      }
    }
    if (!found) errs.push_back("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }
  if (!errs.empty()) {
    std::string msg = "config parse errors:";
    for (const auto& e : errs) msg += "\n  - " + e;
    throw ConfigError(msg);
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return from_text(os.str());
}

std::vector<ExperimentConfig> paper_sweep(const ExperimentConfig& base) {
  std::vector<ExperimentConfig> out;
  const bool flags[4][3] = {
      {false, true, false},
      {true, true, false},
      {true, false, false},
      {true, false, true},
  };
  for (const auto& f : flags) {
    ExperimentConfig c = base;
    c.use_jepa = f[0];
    c.propagate_rl_grads = f[1];
    c.use_reg = f[2];
    out.push_back(c);
  }
  return out;
}

}  // namespace jepa
