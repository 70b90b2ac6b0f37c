#include "jepa/telemetry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace jepa {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) {
  return v ? fmt(*v) : std::string();
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_num(const std::string& s, const char* what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error(std::string("telemetry: bad ") + what + ": '" + s + "'");
  }
}

}  // namespace

std::string telemetry_row_to_csv(const TelemetryRecord& r) {
  std::ostringstream os;
  os << r.step << ',' << fmt_opt(r.ret) << ',' << fmt_opt(r.running_avg) << ','
     << fmt(r.mean_var) << ',' << fmt(r.l_jepa) << ',' << fmt(r.l_actor) << ','
     << fmt(r.l_critic) << ',' << fmt(r.l_reg);
  return os.str();
}

TelemetryRecord telemetry_row_from_csv(const std::string& line) {
  const auto f = split_csv(line);
  if (f.size() != 8) throw std::runtime_error("telemetry: expected 8 fields, got row '" + line + "'");
  TelemetryRecord r;
  r.step = static_cast<long long>(parse_num(f[0], "step"));
  if (!f[1].empty()) r.ret = parse_num(f[1], "return");
  if (!f[2].empty()) r.running_avg = parse_num(f[2], "running_avg");
  r.mean_var = parse_num(f[3], "mean_var");
  r.l_jepa = parse_num(f[4], "l_jepa");
  r.l_actor = parse_num(f[5], "l_actor");
  r.l_critic = parse_num(f[6], "l_critic");
  r.l_reg = parse_num(f[7], "l_reg");
  return r;
}

void write_telemetry_csv(const std::string& path,
                         const std::vector<TelemetryRecord>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("telemetry: cannot open for writing: " + path);
  out << kTelemetryHeader << "\n";
  for (const auto& r : records) out << telemetry_row_to_csv(r) << "\n";
}

std::vector<TelemetryRecord> read_telemetry_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("telemetry: cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("telemetry: empty file: " + path);
  if (line != kTelemetryHeader)
    throw std::runtime_error("telemetry: bad header in " + path + ": '" + line + "'");
  std::vector<TelemetryRecord> out;
  long long prev_step = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    TelemetryRecord r = telemetry_row_from_csv(line);
    if (r.step <= prev_step)
      throw std::runtime_error("telemetry: env steps not strictly increasing in " + path);
    prev_step = r.step;
    out.push_back(r);
  }
  return out;
}

std::vector<double> running_average(const std::vector<double>& returns, int window) {
  RunningAverage ra(window);
  std::vector<double> out;
  out.reserve(returns.size());
  for (double r : returns) {
    ra.push(r);
    out.push_back(ra.mean());
  }
  return out;
}

CollapseDetection detect_collapse(const std::vector<TelemetryRecord>& records) {
  for (const auto& r : records) {
    if (std::isfinite(r.mean_var) && r.mean_var < kCollapseThreshold) {
      return {true, r.step};
    }
  }
  return {false, -1};
}

namespace {

// Piecewise-linear interpolation with endpoint clamping.
double interp(const std::vector<std::pair<double, double>>& pts, double x) {
  if (pts.empty()) return 0.0;
  if (x <= pts.front().first) return pts.front().second;
  if (x >= pts.back().first) return pts.back().second;
  std::size_t lo = 0, hi = pts.size() - 1;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    if (pts[mid].first <= x) lo = mid; else hi = mid;
  }
  const auto [x0, y0] = pts[lo];
  const auto [x1, y1] = pts[hi];
  if (x1 == x0) return y0;
  return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
}

}  // namespace

AggregateSeries aggregate_runs(
    const std::string& label,
    std::vector<std::pair<std::string, std::vector<TelemetryRecord>>> runs,
    long long grid_step) {
  if (runs.empty()) throw std::runtime_error("aggregate_runs: no runs for " + label);
  std::sort(runs.begin(), runs.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  std::vector<std::vector<std::pair<double, double>>> curves;
  long long max_common = -1;
  for (const auto& [name, records] : runs) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : records) {
      if (r.running_avg) pts.emplace_back(static_cast<double>(r.step), *r.running_avg);
    }
    if (pts.empty())
      throw std::runtime_error("aggregate_runs: run '" + name + "' has no return data");
    const long long last = static_cast<long long>(pts.back().first);
    max_common = max_common < 0 ? last : std::min(max_common, last);
    curves.push_back(std::move(pts));
  }

  AggregateSeries s;
  s.label = label;
  s.runs = static_cast<int>(curves.size());
  for (long long x = 0; x <= max_common; x += grid_step) {
    double sum = 0.0, lo = 0.0, hi = 0.0;
    for (std::size_t i = 0; i < curves.size(); ++i) {
      const double y = interp(curves[i], static_cast<double>(x));
      sum += y;
      if (i == 0) {
        lo = hi = y;
      } else {
        lo = std::min(lo, y);
        hi = std::max(hi, y);
      }
    }
    s.grid.push_back(static_cast<double>(x));
    s.mean.push_back(sum / static_cast<double>(curves.size()));
    s.lo.push_back(lo);
    s.hi.push_back(hi);
  }
  return s;
}

namespace {

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                          "#9467bd", "#8c564b"};

std::string coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace

std::string render_svg(const std::vector<AggregateSeries>& series,
                       const std::string& title,
                       const std::string& metadata_json) {
  const double width = 960, height = 560;
  const double ml = 80, mr = 200, mt = 50, mb = 70;
  const double pw = width - ml - mr, ph = height - mt - mb;

  double xmax = 1.0, ymax = 1.0;
  for (const auto& s : series) {
    if (!s.grid.empty()) xmax = std::max(xmax, s.grid.back());
    for (double v : s.hi) ymax = std::max(ymax, v);
  }
  ymax *= 1.05;

  auto px = [&](double x) { return ml + x / xmax * pw; };
  auto py = [&](double y) { return mt + ph - y / ymax * ph; };

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\""
     << width << "\" height=\"" << height << "\" viewBox=\"0 0 " << width
     << " " << height << "\">\n";
  os << "<desc>" << escape_xml(metadata_json) << "</desc>\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
     << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << ml << "\" y=\"28\" font-family=\"sans-serif\" font-size=\"17\">"
     << escape_xml(title) << "</text>\n";

  // axes
  os << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw
     << "\" y2=\"" << mt + ph << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
     << mt + ph << "\" stroke=\"black\"/>\n";
  const int ticks = 5;
  for (int i = 0; i <= ticks; ++i) {
    const double fx = xmax * i / ticks;
    os << "<line x1=\"" << coord(px(fx)) << "\" y1=\"" << mt + ph << "\" x2=\""
       << coord(px(fx)) << "\" y2=\"" << mt + ph + 5 << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << coord(px(fx)) << "\" y=\"" << mt + ph + 22
       << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">"
       << static_cast<long long>(fx) << "</text>\n";
    const double fy = ymax * i / ticks;
    os << "<line x1=\"" << ml - 5 << "\" y1=\"" << coord(py(fy)) << "\" x2=\"" << ml
       << "\" y2=\"" << coord(py(fy)) << "\" stroke=\"black\"/>\n";
    char ybuf[32];
    std::snprintf(ybuf, sizeof(ybuf), "%.4g", fy);
    os << "<text x=\"" << ml - 10 << "\" y=\"" << coord(py(fy) + 4)
       << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">"
       << ybuf << "</text>\n";
  }
  os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 18
     << "\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">"
        "env steps</text>\n";
  os << "<text x=\"22\" y=\"" << mt + ph / 2
     << "\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\" "
        "transform=\"rotate(-90 22 " << mt + ph / 2 << ")\">running avg return</text>\n";

  // bands then means, so every mean line stays visible
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
    if (s.grid.empty()) continue;
    os << "<polygon fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < s.grid.size(); ++i)
      os << coord(px(s.grid[i])) << "," << coord(py(s.hi[i])) << " ";
    for (std::size_t i = s.grid.size(); i-- > 0;)
      os << coord(px(s.grid[i])) << "," << coord(py(s.lo[i])) << " ";
    os << "\"/>\n";
  }
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
    if (s.grid.empty()) continue;
    os << "<polyline fill=\"none\" stroke=\"" << color
       << "\" stroke-width=\"1.8\" points=\"";
    for (std::size_t i = 0; i < s.grid.size(); ++i)
      os << coord(px(s.grid[i])) << "," << coord(py(s.mean[i])) << " ";
    os << "\"/>\n";
    const double ly = mt + 16 + 22 * static_cast<double>(si);
    os << "<line x1=\"" << ml + pw + 14 << "\" y1=\"" << ly << "\" x2=\""
       << ml + pw + 42 << "\" y2=\"" << ly << "\" stroke=\"" << color
       << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << ml + pw + 48 << "\" y=\"" << ly + 4
       << "\" font-family=\"sans-serif\" font-size=\"13\">" << escape_xml(s.label)
       << " (" << s.runs << " runs)</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace jepa
