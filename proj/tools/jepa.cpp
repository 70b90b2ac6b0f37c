// Command-line entry point: train / sweep / eval / plot.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "jepa/config.hpp"
#include "jepa/render.hpp"
#include "jepa/telemetry.hpp"
#include "jepa/trainer.hpp"

namespace fs = std::filesystem;
using namespace jepa;

namespace {

int cmd_train(const std::string& config_path, std::uint64_t seed,
              const std::string& out_override, const std::string& resume,
              const std::string& dump_frames) {
  ExperimentConfig cfg = ExperimentConfig::from_file(config_path);
  if (!out_override.empty()) cfg.out_dir = out_override;
  cfg.validate();
  const std::string dir =
      cfg.out_dir + "/" + cfg.label() + "/seed_" + std::to_string(seed);
  const RunSummary s = run_experiment(cfg, seed, dir, resume);
  std::printf("run %s seed %llu: %lld env steps, %lld episodes, final avg return %.2f, "
              "min mean variance %.3g%s\n",
              s.label.c_str(), static_cast<unsigned long long>(s.seed), s.env_steps,
              s.episodes, s.final_running_avg, s.min_mean_variance,
              s.collapsed_ever ? " [collapsed]" : "");
  if (!dump_frames.empty()) {
    const LoadedModel lm = load_model(dir + "/checkpoint_final.ckpt");
    evaluate(lm, 1, seed, false, dump_frames);
    std::printf("frames written to %s\n", dump_frames.c_str());
  }
  return 0;
}

int cmd_sweep(const std::string& config_path, int seeds, const std::string& out_override,
              int jobs) {
  ExperimentConfig base = ExperimentConfig::from_file(config_path);
  if (!out_override.empty()) base.out_dir = out_override;
  if (seeds > 0) base.seeds = seeds;
  const std::vector<ExperimentConfig> configs = paper_sweep(base);
  for (const auto& c : configs) c.validate();

  struct Job {
    ExperimentConfig cfg;
    std::uint64_t seed;
    std::string dir;
  };
  std::vector<Job> queue;
  for (const auto& c : configs) {
    for (int k = 0; k < base.seeds; ++k) {
      const std::string dir =
          c.out_dir + "/" + c.label() + "/seed_" + std::to_string(k);
      queue.push_back({c, static_cast<std::uint64_t>(k), dir});
    }
  }

  std::mutex mu;
  std::size_t next = 0;
  std::vector<RunSummary> summaries(queue.size());
  auto worker = [&]() {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next >= queue.size()) return;
        i = next++;
      }
      summaries[i] = run_experiment(queue[i].cfg, queue[i].seed, queue[i].dir);
      {
        std::lock_guard<std::mutex> lock(mu);
        std::printf("done: %s seed %llu (avg return %.2f)\n",
                    summaries[i].label.c_str(),
                    static_cast<unsigned long long>(summaries[i].seed),
                    summaries[i].final_running_avg);
        std::fflush(stdout);
      }
    }
  };
  jobs = std::max(1, jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  nlohmann::json j = nlohmann::json::array();
  for (const auto& s : summaries) {
    j.push_back({{"label", s.label},
                 {"seed", s.seed},
                 {"final_running_avg", s.final_running_avg},
                 {"min_mean_variance", s.min_mean_variance},
                 {"collapsed_ever", s.collapsed_ever},
                 {"scaled", s.scaled},
                 {"dir", s.dir}});
  }
  std::ofstream out(base.out_dir + "/sweep_summary.json");
  out << j.dump(2) << "\n";
  std::printf("sweep summary written to %s/sweep_summary.json\n", base.out_dir.c_str());
  return 0;
}

int cmd_eval(const std::string& checkpoint, int episodes, std::uint64_t seed,
             bool sample, const std::string& dump_frames) {
  const LoadedModel lm = load_model(checkpoint);
  const std::vector<double> returns = evaluate(lm, episodes, seed, sample, dump_frames);
  double mean = 0.0;
  for (double r : returns) mean += r;
  mean /= static_cast<double>(returns.size());
  double var = 0.0;
  for (double r : returns) var += (r - mean) * (r - mean);
  var /= static_cast<double>(returns.size());
  for (std::size_t i = 0; i < returns.size(); ++i)
    std::printf("episode %zu: return %.0f\n", i, returns[i]);
  std::printf("mean return %.2f  (std %.2f over %zu episodes)\n", mean,
              std::sqrt(var), returns.size());
  return 0;
}

int cmd_plot(const std::string& runs_dir, const std::string& out_file) {
  std::vector<std::string> errors;
  std::vector<AggregateSeries> series;

  std::vector<fs::path> config_dirs;
  for (const auto& e : fs::directory_iterator(runs_dir)) {
    if (e.is_directory()) config_dirs.push_back(e.path());
  }
  std::sort(config_dirs.begin(), config_dirs.end());

  for (const auto& cdir : config_dirs) {
    std::vector<std::pair<std::string, std::vector<TelemetryRecord>>> runs;
    std::vector<fs::path> run_dirs;
    for (const auto& e : fs::directory_iterator(cdir)) {
      if (e.is_directory()) run_dirs.push_back(e.path());
    }
    std::sort(run_dirs.begin(), run_dirs.end());
    for (const auto& rdir : run_dirs) {
      const fs::path csv = rdir / "telemetry.csv";
      if (!fs::exists(csv)) {
        errors.push_back("missing telemetry: " + csv.string());
        continue;
      }
      try {
        runs.emplace_back(rdir.filename().string(), read_telemetry_csv(csv.string()));
      } catch (const std::exception& ex) {
        errors.push_back(std::string("corrupt telemetry: ") + ex.what());
      }
    }
    if (runs.empty()) continue;
    try {
      series.push_back(aggregate_runs(cdir.filename().string(), std::move(runs)));
    } catch (const std::exception& ex) {
      errors.push_back(ex.what());
    }
  }

  if (!errors.empty()) {
    std::fprintf(stderr, "plot: %zu problem(s):\n", errors.size());
    for (const auto& e : errors) std::fprintf(stderr, "  - %s\n", e.c_str());
    return 1;
  }
  if (series.empty()) {
    std::fprintf(stderr, "plot: no runs found under %s\n", runs_dir.c_str());
    return 1;
  }

  const std::string meta =
      "{\"running_avg_window\": \"trailing 20 episodes\", \"grid_step\": 500, "
      "\"band\": \"min-max across seeds\"}";
  const std::string svg =
      render_svg(series, "Running average episodic return", meta);
  std::ofstream out(out_file);
  if (!out) {
    std::fprintf(stderr, "plot: cannot open %s\n", out_file.c_str());
    return 1;
  }
  out << svg;
  std::printf("wrote %s (%zu configurations)\n", out_file.c_str(), series.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"JEPA representation learning for pixel CartPole"};
  app.require_subcommand(1);

  std::string config_path, out_dir, resume, dump_frames, checkpoint, runs_dir, out_file;
  std::uint64_t seed = 0;
  int seeds = 0, episodes = 10, jobs = 1;
  bool sample = false;

  auto* train = app.add_subcommand("train", "train one configuration for one seed");
  train->add_option("--config", config_path, "config file (key = value)")->required();
  train->add_option("--seed", seed, "run seed")->default_val(0);
  train->add_option("--out", out_dir, "override out_dir");
  train->add_option("--resume", resume, "resume from a checkpoint");
  train->add_option("--dump-frames", dump_frames, "write one evaluation episode's frames as PGM into DIR");

  auto* sweep = app.add_subcommand("sweep", "run all four studied configurations");
  sweep->add_option("--config", config_path, "base config file")->required();
  sweep->add_option("--seeds", seeds, "seeds per configuration (0 = config value)");
  sweep->add_option("--out", out_dir, "override out_dir");
  sweep->add_option("--jobs", jobs, "parallel runs")->default_val(1);

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  eval->add_option("--episodes", episodes, "episodes to play")->default_val(10);
  eval->add_option("--seed", seed, "evaluation seed")->default_val(0);
  eval->add_flag("--sample", sample, "sample actions instead of greedy");
  eval->add_option("--dump-frames", dump_frames, "write frames as PGM into DIR");

  auto* plot = app.add_subcommand("plot", "aggregate runs into an SVG");
  plot->add_option("--runs", runs_dir, "directory with <config>/<seed>/telemetry.csv")->required();
  plot->add_option("--out", out_file, "output SVG path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return cmd_train(config_path, seed, out_dir, resume, dump_frames);
    if (*sweep) return cmd_sweep(config_path, seeds, out_dir, jobs);
    if (*eval) return cmd_eval(checkpoint, episodes, seed, sample, dump_frames);
    if (*plot) return cmd_plot(runs_dir, out_file);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
