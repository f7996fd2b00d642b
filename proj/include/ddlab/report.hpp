#pragma once

// Run configuration, SVG rendering and text summaries for sweep results.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "ddlab/emc.hpp"
#include "ddlab/sweep.hpp"

namespace ddlab {

inline constexpr const char* kDataDirEnv = "DDLAB_DATA_DIR";
inline constexpr const char* kSvgGeneratorComment = "<!-- generator: ddlab-svg 1 -->";

/// --data-dir flag, then $DDLAB_DATA_DIR, then ./data.
inline std::filesystem::path resolve_data_dir(const std::optional<std::string>& flag) {
  if (flag && !flag->empty()) return *flag;
  if (const char* env = std::getenv(kDataDirEnv); env && *env) return env;
  return "data";
}

struct RunConfig {
  Experiment experiment = Experiment::model;
  SweepSpec spec{};
  std::filesystem::path out_dir = "results";
  std::optional<std::string> data_dir;
  bool plot = true;
  bool log_x = true;
  MetricField plot_metric = MetricField::test_mse;
};

class ConfigError : public InputError {
public:
  using InputError::InputError;
};

namespace config_detail {

inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> parts;
  boost::split(parts, text, boost::is_any_of(","));
  for (auto& p : parts) boost::trim(p);
  parts.erase(std::remove(parts.begin(), parts.end(), std::string{}), parts.end());
  return parts;
}

inline double to_double(const std::string& s, const std::string& key) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + s + "' is not a number");
  }
}

inline long long to_int(const std::string& s, const std::string& key) {
  const double v = to_double(s, key);
  if (v != std::floor(v)) throw ConfigError("config key '" + key + "': '" + s + "' is not an integer");
  return static_cast<long long>(v);
}

/// "a, b, c" or "logspace(lo, hi, count)" or "linspace(lo, hi, count)".
inline std::vector<double> parse_axis(const std::string& text, const std::string& key) {
  std::string t = boost::trim_copy(text);
  for (const char* fn : {"logspace", "linspace"}) {
    const std::string prefix = std::string(fn) + "(";
    if (boost::starts_with(t, prefix) && boost::ends_with(t, ")")) {
      auto args = split_list(t.substr(prefix.size(), t.size() - prefix.size() - 1));
      if (args.size() != 3) throw ConfigError("config key '" + key + "': " + fn + " takes (lo, hi, count)");
      const double lo = to_double(args[0], key);
      const double hi = to_double(args[1], key);
      const long long count = to_int(args[2], key);
      if (count < 1) throw ConfigError("config key '" + key + "': count must be >= 1");
      std::vector<double> out;
      for (long long i = 0; i < count; ++i) {
        const double f = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
        out.push_back(std::string(fn) == "logspace" ? lo * std::pow(hi / lo, f) : lo + (hi - lo) * f);
      }
      return out;
    }
  }
  std::vector<double> out;
  for (const auto& p : split_list(t)) out.push_back(to_double(p, key));
  if (out.empty()) throw ConfigError("config key '" + key + "' is empty");
  return out;
}

template <class Int>
std::vector<Int> rounded_axis(const std::vector<double>& v) {
  std::vector<Int> out;
  for (double x : v) {
    const auto r = static_cast<Int>(std::llround(x));
    if (out.empty() || out.back() != r) out.push_back(r);
  }
  return out;
}

inline bool to_bool(const std::string& s, const std::string& key) {
  const auto l = boost::to_lower_copy(s);
  if (l == "true" || l == "yes" || l == "1" || l == "on") return true;
  if (l == "false" || l == "no" || l == "0" || l == "off") return false;
  throw ConfigError("config key '" + key + "': '" + s + "' is not a boolean");
}

}  // namespace config_detail

/// Apply one "section.key = value" setting. Used for config files and for
/// command-line overrides alike.
inline void apply_setting(RunConfig& cfg, const std::string& key, const std::string& raw) {
  using namespace config_detail;
  const std::string v = boost::trim_copy(raw);
  auto& s = cfg.spec;
  if (key == "experiment.name") {
    auto e = parse_experiment(v);
    if (!e) throw ConfigError("unknown experiment '" + v + "'");
    cfg.experiment = *e;
  } else if (key == "experiment.dataset") {
    if (v != "synthetic" && v != "fashion-mnist") throw ConfigError("unknown dataset '" + v + "'");
    s.dataset = v;
  } else if (key == "axes.model_dims") {
    s.model_dims = rounded_axis<Eigen::Index>(parse_axis(v, key));
  } else if (key == "axes.sample_sizes") {
    s.sample_sizes = rounded_axis<Eigen::Index>(parse_axis(v, key));
  } else if (key == "axes.noise_levels") {
    s.noise_levels = parse_axis(v, key);
  } else if (key == "axes.step_counts") {
    s.step_counts = rounded_axis<std::int64_t>(parse_axis(v, key));
  } else if (key == "axes.ridge_lambdas") {
    s.ridge_lambdas = parse_axis(v, key);
  } else if (key == "features.variance") {
    s.variance = v == "auto" ? 0.0 : to_double(v, key);
  } else if (key == "features.mode") {
    auto m = parse_feature_mode(v);
    if (!m) throw ConfigError("unknown feature mode '" + v + "'");
    s.mode = *m;
  } else if (key == "solver.method") {
    auto m = parse_solver_method(v);
    if (!m) throw ConfigError("unknown solver method '" + v + "'");
    s.solver.method = *m;
  } else if (key == "solver.rank_tol") {
    s.solver.rank_tol = to_double(v, key);
  } else if (key == "solver.ridge_lambda") {
    s.solver.ridge_lambda = to_double(v, key);
  } else if (key == "solver.step_size") {
    s.solver.step_size = to_double(v, key);
  } else if (key == "solver.step_scale") {
    if (v != "absolute" && v != "spectral") throw ConfigError("step_scale must be absolute or spectral");
    s.solver.step_scale = v == "spectral" ? StepScale::spectral : StepScale::absolute;
  } else if (key == "solver.num_steps") {
    s.solver.num_steps = to_int(v, key);
  } else if (key == "solver.schedule") {
    if (v != "constant" && v != "inverse-sqrt") throw ConfigError("schedule must be constant or inverse-sqrt");
    s.solver.schedule.kind = v == "constant" ? ScheduleKind::constant : ScheduleKind::inverse_sqrt;
  } else if (key == "solver.schedule_period") {
    s.solver.schedule.period = to_int(v, key);
  } else if (key == "synthetic.input_dim") {
    s.synthetic.input_dim = to_int(v, key);
  } else if (key == "synthetic.classes") {
    s.synthetic.num_classes = static_cast<int>(to_int(v, key));
  } else if (key == "synthetic.teacher_dim") {
    s.synthetic.teacher_dim = to_int(v, key);
  } else if (key == "synthetic.teacher_seed") {
    s.synthetic.teacher_seed = std::stoull(v);
  } else if (key == "run.replicates") {
    s.replicates = static_cast<int>(to_int(v, key));
  } else if (key == "run.seed") {
    try {
      s.base_seed = std::stoull(v);
    } catch (const std::exception&) {
      throw ConfigError("config key 'run.seed': '" + v + "' is not an unsigned integer");
    }
  } else if (key == "run.test_size") {
    s.test_size = to_int(v, key);
  } else if (key == "run.workers") {
    s.workers = static_cast<int>(to_int(v, key));
  } else if (key == "run.ensemble_k") {
    s.ensemble_k = static_cast<int>(to_int(v, key));
  } else if (key == "run.ensemble_independent_noise") {
    s.ensemble_independent_noise = to_bool(v, key);
  } else if (key == "run.noisy_test") {
    s.report_noisy_test = to_bool(v, key);
  } else if (key == "emc.enabled") {
    s.emc.enabled = to_bool(v, key);
  } else if (key == "emc.epsilon") {
    s.emc.epsilon = to_double(v, key);
  } else if (key == "emc.n_max") {
    s.emc.n_max = to_int(v, key);
  } else if (key == "emc.trials") {
    s.emc.trials = static_cast<int>(to_int(v, key));
  } else if (key == "emc.metric") {
    if (v != "classification" && v != "mse-threshold")
      throw ConfigError("emc.metric must be classification or mse-threshold");
    s.emc.metric.kind = v == "classification" ? ErrorMetric::Kind::classification : ErrorMetric::Kind::mse_threshold;
  } else if (key == "emc.tau") {
    s.emc.metric.tau = to_double(v, key);
  } else if (key == "output.dir") {
    cfg.out_dir = v;
  } else if (key == "output.plot") {
    cfg.plot = to_bool(v, key);
  } else if (key == "output.log_x") {
    cfg.log_x = to_bool(v, key);
  } else if (key == "output.metric") {
    auto m = parse_metric_field(v);
    if (!m) throw ConfigError("unknown metric '" + v + "'");
    cfg.plot_metric = *m;
  } else if (key == "data.dir") {
    cfg.data_dir = v;
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

/// INI-style text: [section] headers and key = value lines; '#' or ';' comments.
inline RunConfig parse_config(std::istream& in, RunConfig cfg = {}) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("config key '" + section + "' must live inside a [section]");
    for (const auto& [key, value] : body) apply_setting(cfg, section + "." + key, value.data());
  }
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path, RunConfig cfg = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  return parse_config(in, std::move(cfg));
}

// ---------------------------------------------------------------------------
// SVG

namespace svg_detail {

inline std::string f2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Scale {
  double lo = 0.0, hi = 1.0, px_lo = 0.0, px_hi = 1.0;
  bool log = false;

  double operator()(double v) const {
    const double a = log ? std::log10(lo) : lo;
    const double b = log ? std::log10(hi) : hi;
    const double x = log ? std::log10(v) : v;
    const double t = b > a ? (x - a) / (b - a) : 0.5;
    return px_lo + t * (px_hi - px_lo);
  }
};

// Piecewise-linear approximation of the viridis colormap.
inline std::string color(double t) {
  static constexpr double stops[][3] = {
      {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
  t = std::clamp(t, 0.0, 1.0);
  const double pos = t * 4.0;
  const int i = std::min(3, static_cast<int>(pos));
  const double f = pos - i;
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x",
                static_cast<int>(std::lround(stops[i][0] + f * (stops[i + 1][0] - stops[i][0]))),
                static_cast<int>(std::lround(stops[i][1] + f * (stops[i + 1][1] - stops[i][1]))),
                static_cast<int>(std::lround(stops[i][2] + f * (stops[i + 1][2] - stops[i][2]))));
  return buf;
}

inline const char* series_color(std::size_t i) {
  static constexpr const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                            "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};
  return palette[i % 8];
}

inline std::string header(int w, int h) {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n" + std::string(kSvgGeneratorComment) +
         "\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) + "\" height=\"" +
         std::to_string(h) + "\" viewBox=\"0 0 " + std::to_string(w) + " " + std::to_string(h) + "\">\n" +
         "<rect class=\"background\" x=\"0\" y=\"0\" width=\"" + std::to_string(w) + "\" height=\"" +
         std::to_string(h) + "\" fill=\"white\"/>\n";
}

inline std::string text(double x, double y, const std::string& s, const char* anchor = "middle", int size = 11) {
  return "<text x=\"" + f2(x) + "\" y=\"" + f2(y) + "\" font-family=\"sans-serif\" font-size=\"" +
         std::to_string(size) + "\" text-anchor=\"" + anchor + "\">" + escape(s) + "</text>\n";
}

inline std::string line(double x1, double y1, double x2, double y2, const char* stroke, const char* cls,
                        const char* dash = nullptr) {
  std::string out = "<line class=\"" + std::string(cls) + "\" x1=\"" + f2(x1) + "\" y1=\"" + f2(y1) + "\" x2=\"" +
                    f2(x2) + "\" y2=\"" + f2(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"1\"";
  if (dash) out += std::string(" stroke-dasharray=\"") + dash + "\"";
  return out + "/>\n";
}

}  // namespace svg_detail

struct LineStyle {
  MetricField metric = MetricField::test_mse;
  bool log_x = true;
  /// Log scale on y when every plotted value is positive.
  bool log_y = true;
  int width = 640;
  int height = 420;
  std::string title;
};

/// One polyline per series (cells grouped by `series_by`), a shaded +/-1 std
/// band when there are several replicates, and a dashed marker at the
/// interpolation threshold D = n when the plot has a single fixed n or D.
inline std::string render_line(const SweepResult& r, Axis x_axis, std::optional<Axis> series_by,
                               const LineStyle& style = {}) {
  using namespace svg_detail;
  if (r.cells.empty()) throw InputError("cannot plot an empty result");

  std::map<double, std::vector<CurvePoint>> series;
  for (const auto& c : r.cells) {
    auto st = cell_stat(c, style.metric);
    if (!st) continue;
    const double key = series_by ? axis_value(c.coord, *series_by) : 0.0;
    series[key].push_back({axis_value(c.coord, x_axis), st->mean, st->std});
  }
  if (series.empty()) throw InputError("result has no values for metric " + std::string(to_string(style.metric)));
  for (auto& [k, pts] : series)
    std::sort(pts.begin(), pts.end(), [](const CurvePoint& a, const CurvePoint& b) { return a.x < b.x; });

  const bool band = r.spec.replicates > 1;
  double xlo = INFINITY, xhi = -INFINITY, ylo = INFINITY, yhi = -INFINITY;
  for (const auto& [k, pts] : series)
    for (const auto& p : pts) {
      xlo = std::min(xlo, p.x);
      xhi = std::max(xhi, p.x);
      const double lo = band ? p.mean - p.std : p.mean;
      ylo = std::min(ylo, lo > 0 ? lo : p.mean);
      yhi = std::max(yhi, band ? p.mean + p.std : p.mean);
    }
  const bool log_x = style.log_x && xlo > 0.0;
  const bool log_y = style.log_y && ylo > 0.0;
  if (xhi == xlo) {
    xlo = log_x ? xlo / 2 : xlo - 1;
    xhi = log_x ? xhi * 2 : xhi + 1;
  }
  if (yhi == ylo) {
    ylo = log_y ? ylo / 2 : ylo - 1;
    yhi = log_y ? yhi * 2 : yhi + 1;
  }

  const double left = 70, right = style.width - 20.0, top = 40, bottom = style.height - 50.0;
  Scale sx{xlo, xhi, left, right, log_x};
  Scale sy{ylo, yhi, bottom, top, log_y};
  auto clampy = [&](double y) { return log_y && y <= 0 ? ylo : std::clamp(y, ylo, yhi); };

  std::string out = header(style.width, style.height);
  const std::string title =
      style.title.empty() ? std::string(to_string(r.experiment)) + " sweep: " + std::string(to_string(style.metric))
                          : style.title;
  out += text(style.width / 2.0, 22, title, "middle", 14);
  out += line(left, bottom, right, bottom, "black", "axis");
  out += line(left, bottom, left, top, "black", "axis");
  out += text(left, bottom + 16, label(xlo));
  out += text(right, bottom + 16, label(xhi));
  out += text(left - 6, bottom, label(ylo), "end");
  out += text(left - 6, top + 4, label(yhi), "end");
  out += text((left + right) / 2, style.height - 12.0,
              std::string(to_string(x_axis)) + (log_x ? " (log scale)" : ""));
  out += text(16, (top + bottom) / 2, std::string(to_string(style.metric)));

  std::size_t si = 0;
  for (const auto& [key, pts] : series) {
    const char* col = series_color(si++);
    if (band) {
      std::string poly;
      for (const auto& p : pts) poly += f2(sx(p.x)) + "," + f2(sy(clampy(p.mean + p.std))) + " ";
      for (auto it = pts.rbegin(); it != pts.rend(); ++it)
        poly += f2(sx(it->x)) + "," + f2(sy(clampy(it->mean - it->std))) + " ";
      poly.pop_back();
      out += "<polygon class=\"band\" points=\"" + poly + "\" fill=\"" + col + "\" fill-opacity=\"0.2\"/>\n";
    }
    std::string verts;
    for (const auto& p : pts) verts += f2(sx(p.x)) + "," + f2(sy(clampy(p.mean))) + " ";
    verts.pop_back();
    out += "<polyline class=\"series\" points=\"" + verts + "\" fill=\"none\" stroke=\"" + col +
           "\" stroke-width=\"2\"/>\n";
    if (series_by) out += text(right - 4, top + 14.0 * static_cast<double>(si), std::string(to_string(*series_by)) + "=" + label(key), "end");
  }

  // D = n marker: x is D with one fixed n, or x is n with one fixed D.
  std::optional<double> threshold;
  const auto& sp = r.spec;
  if (x_axis == Axis::model_dim && sp.sample_sizes.size() == 1 && !series_by)
    threshold = static_cast<double>(sp.sample_sizes.front());
  if (x_axis == Axis::sample_size && sp.model_dims.size() == 1 && !series_by)
    threshold = static_cast<double>(sp.model_dims.front());
  if (threshold && *threshold >= xlo && *threshold <= xhi) {
    const double x = sx(*threshold);
    out += line(x, bottom, x, top, "gray", "threshold", "4,3");
    out += text(x, top - 4, "D = n");
  }
  out += "</svg>\n";
  return out;
}

/// Grid result as a D x n heatmap with a color legend and the D = n diagonal.
inline std::string render_heatmap(const SweepResult& r, MetricField metric = MetricField::test_mse) {
  using namespace svg_detail;
  if (r.cells.empty()) throw InputError("cannot plot an empty result");
  if (r.experiment != Experiment::grid)
    throw InputError("heatmaps need a grid result, got '" + std::string(to_string(r.experiment)) + "'");
  const auto& dims = r.spec.model_dims;
  const auto& ns = r.spec.sample_sizes;

  std::vector<double> vals;
  for (const auto& c : r.cells)
    if (auto s = cell_stat(c, metric)) vals.push_back(s->mean);
  if (vals.empty()) throw InputError("result has no values for metric " + std::string(to_string(metric)));
  const double vmin = *std::min_element(vals.begin(), vals.end());
  const double vmax = *std::max_element(vals.begin(), vals.end());
  const bool log_c = vmin > 0.0;
  auto norm = [&](double v) {
    if (vmax == vmin) return 1.0;
    return log_c ? (std::log10(v) - std::log10(vmin)) / (std::log10(vmax) - std::log10(vmin))
                 : (v - vmin) / (vmax - vmin);
  };

  const int width = 720, height = 460;
  const double left = 70, top = 40, plot_w = 520, plot_h = 360;
  const double cw = plot_w / static_cast<double>(dims.size());
  const double ch = plot_h / static_cast<double>(ns.size());
  auto col_of = [&](Eigen::Index d) {
    return static_cast<double>(std::lower_bound(dims.begin(), dims.end(), d) - dims.begin());
  };
  auto row_of = [&](Eigen::Index n) {
    return static_cast<double>(std::lower_bound(ns.begin(), ns.end(), n) - ns.begin());
  };

  std::string out = header(width, height);
  out += text(left + plot_w / 2, 22, "grid: " + std::string(to_string(metric)) + (log_c ? " (log color)" : ""), "middle", 14);
  for (const auto& c : r.cells) {
    auto s = cell_stat(c, metric);
    if (!s) continue;
    const double x = left + col_of(c.coord.model_dim) * cw;
    const double y = top + plot_h - (row_of(c.coord.sample_size) + 1) * ch;
    out += "<rect class=\"cell\" x=\"" + f2(x) + "\" y=\"" + f2(y) + "\" width=\"" + f2(cw) + "\" height=\"" + f2(ch) +
           "\" fill=\"" + color(norm(s->mean)) + "\"><title>D=" + std::to_string(c.coord.model_dim) +
           " n=" + std::to_string(c.coord.sample_size) + " " + label(s->mean) + "</title></rect>\n";
  }

  // D = n diagonal in cell coordinates, interpolating D between columns
  // on a log scale.
  std::string diag;
  for (std::size_t ri = 0; ri < ns.size(); ++ri) {
    const double n = static_cast<double>(ns[ri]);
    if (n < static_cast<double>(dims.front()) || n > static_cast<double>(dims.back())) continue;
    std::size_t j = 0;
    while (j + 1 < dims.size() && static_cast<double>(dims[j + 1]) < n) ++j;
    double frac = 0.0;
    if (j + 1 < dims.size() && dims[j + 1] != dims[j])
      frac = std::log(n / static_cast<double>(dims[j])) /
             std::log(static_cast<double>(dims[j + 1]) / static_cast<double>(dims[j]));
    const double x = left + (static_cast<double>(j) + frac + 0.5) * cw;
    const double y = top + plot_h - (static_cast<double>(ri) + 0.5) * ch;
    diag += f2(x) + "," + f2(y) + " ";
  }
  if (!diag.empty()) {
    diag.pop_back();
    out += "<polyline class=\"diagonal\" points=\"" + diag +
           "\" fill=\"none\" stroke=\"white\" stroke-width=\"2\" stroke-dasharray=\"5,3\"/>\n";
  }

  for (std::size_t j = 0; j < dims.size(); ++j)
    if (dims.size() <= 8 || j % 3 == 0 || j + 1 == dims.size())
      out += text(left + (static_cast<double>(j) + 0.5) * cw, top + plot_h + 14, std::to_string(dims[j]), "middle", 9);
  for (std::size_t i = 0; i < ns.size(); ++i)
    out += text(left - 6, top + plot_h - (static_cast<double>(i) + 0.5) * ch + 3, std::to_string(ns[i]), "end", 9);
  out += text(left + plot_w / 2, height - 14.0, "model_dim D");
  out += text(18, top + plot_h / 2, "n");

  // Legend: ten swatches from scale minimum to scale maximum.
  const double lx = left + plot_w + 30, lh = plot_h / 10.0;
  for (int k = 0; k < 10; ++k) {
    const double t = static_cast<double>(k) / 9.0;
    out += "<rect class=\"legend\" x=\"" + f2(lx) + "\" y=\"" + f2(top + plot_h - (k + 1) * lh) +
           "\" width=\"20\" height=\"" + f2(lh) + "\" fill=\"" + color(t) + "\"/>\n";
  }
  out += text(lx + 24, top + plot_h, label(vmin), "start", 9);
  out += text(lx + 24, top + 8, label(vmax), "start", 9);
  out += "</svg>\n";
  return out;
}

// ---------------------------------------------------------------------------

namespace table_detail {

inline std::string fixed(double v, int prec = 6) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

inline std::string pm(const std::optional<Stat>& s) {
  return s ? fixed(s->mean) + " +/- " + fixed(s->std, 3) : std::string("NA");
}

}  // namespace table_detail

/// Fixed-column text table, one row per cell, plus a peak row when the swept
/// axis shows an interior test-mse peak.
inline std::string summary_table(const SweepResult& r, int smoothing_window = 3) {
  using namespace table_detail;
  static const std::vector<std::string> columns = {"D", "n", "noise", "steps", "lambda", "train_mse",
                                                   "train_err", "test_mse", "test_err", "emc", "regime"};
  std::vector<std::vector<std::string>> rows;
  for (const auto& c : r.cells) {
    std::string emc = "-", regime = "-";
    if (c.emc) {
      emc = std::to_string(c.emc->n_star) + (c.emc->censored ? "+" : "");
      regime = std::string(
          to_string(classify_regime(static_cast<double>(c.emc->n_star), static_cast<double>(c.coord.sample_size))));
    }
    rows.push_back({std::to_string(c.coord.model_dim), std::to_string(c.coord.sample_size), fixed(c.coord.noise),
                    std::to_string(c.coord.steps), fixed(c.coord.ridge_lambda), pm(c.summary.train_mse),
                    pm(c.summary.train_err), pm(c.summary.test_mse), pm(c.summary.test_err), emc, regime});
  }
  std::vector<std::size_t> width(columns.size());
  for (std::size_t j = 0; j < columns.size(); ++j) {
    width[j] = columns[j].size();
    for (const auto& row : rows) width[j] = std::max(width[j], row[j].size());
  }
  std::ostringstream os;
  os << "experiment: " << to_string(r.experiment) << "  replicates: " << r.spec.replicates
     << "  seed: " << r.spec.base_seed << '\n';
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) os << " | ";
      os << row[j] << std::string(width[j] - row[j].size(), ' ');
    }
    os << '\n';
  };
  emit(columns);
  std::size_t total = 0;
  for (auto w : width) total += w;
  os << std::string(total + 3 * (columns.size() - 1), '-') << '\n';
  for (const auto& row : rows) emit(row);

  if (r.experiment != Experiment::grid) {
    const Axis axis = primary_axis(r.experiment);
    const auto curve = curve_along(r, axis, MetricField::test_mse);
    if (auto peak = locate_peak(curve, smoothing_window))
      os << "peak: test_mse " << fixed(peak->height) << " at " << to_string(axis) << " = " << fixed(peak->x) << '\n';
  } else {
    for (auto n : r.spec.sample_sizes) {
      const auto curve = curve_along(r, Axis::model_dim, MetricField::test_mse, n);
      if (auto peak = locate_peak(curve, smoothing_window))
        os << "peak: n = " << n << " test_mse " << fixed(peak->height) << " at model_dim = " << fixed(peak->x)
           << '\n';
    }
  }
  return os.str();
}

}  // namespace ddlab
