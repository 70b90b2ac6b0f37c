#pragma once

#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "jepa/core.hpp"

namespace jepa {

// One telemetry row; written after each rollout/update cycle. `ret` is the
// most recently completed episode's return and is absent before the first
// episode completes. CSV schema:
//   step,return,running_avg,mean_var,l_jepa,l_actor,l_critic,l_reg
struct TelemetryRecord {
  long long step = 0;
  std::optional<double> ret;
  std::optional<double> running_avg;
  double mean_var = 0.0;
  double l_jepa = 0.0;
  double l_actor = 0.0;
  double l_critic = 0.0;
  double l_reg = 0.0;
};

inline constexpr const char* kTelemetryHeader =
    "step,return,running_avg,mean_var,l_jepa,l_actor,l_critic,l_reg";

std::string telemetry_row_to_csv(const TelemetryRecord& r);
TelemetryRecord telemetry_row_from_csv(const std::string& line);

void write_telemetry_csv(const std::string& path,
                         const std::vector<TelemetryRecord>& records);
std::vector<TelemetryRecord> read_telemetry_csv(const std::string& path);

// Trailing mean over up to `window` most recent completed episodes.
class RunningAverage {
 public:
  explicit RunningAverage(int window) : window_(window > 0 ? window : 1) {}
  void push(double value) {
    values_.push_back(value);
    sum_ += value;
    if (static_cast<int>(values_.size()) > window_) {
      sum_ -= values_.front();
      values_.pop_front();
    }
  }
  bool empty() const { return values_.empty(); }
  std::size_t count() const { return values_.size(); }
  double mean() const {
    double s = 0.0;
    for (double v : values_) s += v;
    return values_.empty() ? 0.0 : s / static_cast<double>(values_.size());
  }
  std::vector<double> values() const { return {values_.begin(), values_.end()}; }

 private:
  int window_;
  std::deque<double> values_;
  double sum_ = 0.0;
};

// Trailing mean at every position of a return sequence.
std::vector<double> running_average(const std::vector<double>& returns, int window);

struct CollapseDetection {
  bool collapsed_ever = false;
  long long first_step = -1;
};

// First env step at which the mean embedding variance drops below the
// collapse threshold (strict inequality).
CollapseDetection detect_collapse(const std::vector<TelemetryRecord>& records);

// Aggregate of one configuration across seeds, interpolated onto a common
// env-step grid.
struct AggregateSeries {
  std::string label;
  std::vector<double> grid;
  std::vector<double> mean;
  std::vector<double> lo;
  std::vector<double> hi;
  int runs = 0;
};

// Linear interpolation of each run's running-average curve onto a grid with
// the given spacing, then pointwise mean and min-max band. Runs are sorted by
// name first, so the result does not depend on input order.
AggregateSeries aggregate_runs(const std::string& label,
                               std::vector<std::pair<std::string, std::vector<TelemetryRecord>>> runs,
                               long long grid_step = 500);

// SVG 1.1 document: one polyline per configuration mean plus a min-max band.
// Plot parameters are recorded in the <desc> element.
std::string render_svg(const std::vector<AggregateSeries>& series,
                       const std::string& title, const std::string& metadata_json);

}  // namespace jepa
