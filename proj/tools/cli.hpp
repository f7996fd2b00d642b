#pragma once

// ddlab command line: sweep <experiment> | emc | plot <result-file> | fetch-data
//
// Exit codes: 0 success, 1 usage or configuration error, 2 data or format error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ddlab/data.hpp"
#include "ddlab/io.hpp"
#include "ddlab/report.hpp"
#include "ddlab/sweep.hpp"
#include "fetch_data.hpp"

namespace ddlab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string data_dir;
  std::optional<int> workers;
  std::optional<int> replicates;
  std::vector<std::string> settings;
};

inline void add_common(CLI::App* sc, CommonFlags& f) {
  sc->add_option("--config", f.config, "config file (INI sections)");
  sc->add_option("--seed", f.seed, "base seed");
  sc->add_option("--out", f.out, "output directory");
  sc->add_option("--data-dir", f.data_dir, std::string("dataset cache directory (default $") + kDataDirEnv + " or ./data)");
  sc->add_option("--workers", f.workers, "worker threads");
  sc->add_option("--replicates", f.replicates, "replicates per cell");
  sc->add_option("--set", f.settings, "override a config value: section.key=value");
}

inline RunConfig build_config(const CommonFlags& f) {
  RunConfig cfg = f.config.empty() ? RunConfig{} : load_config(f.config);
  for (const auto& kv : f.settings) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects section.key=value, got '" + kv + "'");
    apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (f.seed) cfg.spec.base_seed = *f.seed;
  if (!f.out.empty()) cfg.out_dir = f.out;
  if (!f.data_dir.empty()) cfg.data_dir = f.data_dir;
  if (f.workers) cfg.spec.workers = *f.workers;
  if (f.replicates) cfg.spec.replicates = *f.replicates;
  return cfg;
}

/// Resolve and load the dataset before any compute starts.
inline TaskSource make_source(const RunConfig& cfg) {
  if (cfg.spec.dataset == "synthetic") return TaskSource::synthetic(cfg.spec.synthetic);
  const auto dir = resolve_data_dir(cfg.data_dir);
  const auto missing = missing_fashion_mnist_files(dir);
  if (!missing.empty())
    throw DataError("missing dataset file: " + missing.front().string() + " (run `ddlab fetch-data`)");
  auto train = std::make_shared<const Dataset>(load_fashion_mnist(dir, Split::train));
  auto test = std::make_shared<const Dataset>(load_fashion_mnist(dir, Split::test));
  return TaskSource::from_pools("fashion-mnist", std::move(train), std::move(test));
}

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot write " + p.string());
  out << s;
}

/// SVGs for a result: a heatmap plus per-n slices for grids, one line plot
/// along the swept axis otherwise. Returns the files written.
inline std::vector<std::filesystem::path> write_plots(const SweepResult& r, const std::filesystem::path& dir,
                                                      const std::string& stem, const RunConfig& cfg) {
  std::vector<std::filesystem::path> written;
  LineStyle style;
  style.metric = cfg.plot_metric;
  style.log_x = cfg.log_x;
  if (r.experiment == Experiment::grid) {
    const auto heat = render_heatmap(r, cfg.plot_metric);
    const auto slices = render_line(r, Axis::model_dim, Axis::sample_size, style);
    write_text(dir / (stem + ".heatmap.svg"), heat);
    write_text(dir / (stem + ".svg"), slices);
    written = {dir / (stem + ".heatmap.svg"), dir / (stem + ".svg")};
  } else {
    const Axis x = primary_axis(r.experiment);
    style.log_x = cfg.log_x && x != Axis::ridge_lambda;
    const auto svg = render_line(r, x, std::nullopt, style);
    write_text(dir / (stem + ".svg"), svg);
    written = {dir / (stem + ".svg")};
  }
  return written;
}

inline int run_sweep(Experiment e, const CommonFlags& flags, std::ostream& out) {
  RunConfig cfg = build_config(flags);
  cfg.experiment = e;
  const TaskSource source = make_source(cfg);
  const SweepResult r = run_experiment(e, cfg.spec, source);
  std::filesystem::create_directories(cfg.out_dir);
  const std::string stem(to_string(e));
  persist(r, cfg.out_dir / (stem + ".json"));
  write_csv(r, cfg.out_dir / (stem + ".csv"));
  out << summary_table(r);
  out << "wrote " << (cfg.out_dir / (stem + ".json")).string() << '\n';
  out << "wrote " << (cfg.out_dir / (stem + ".csv")).string() << '\n';
  if (cfg.plot)
    for (const auto& p : write_plots(r, cfg.out_dir, stem, cfg)) out << "wrote " << p.string() << '\n';
  return kExitOk;
}

inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"ddlab: double descent laboratory for random-feature linear models"};
  app.name("ddlab");
  app.require_subcommand(1);

  CommonFlags sweep_flags, emc_flags;
  std::string experiment_name;
  auto* sweep = app.add_subcommand("sweep", "run an experiment: model, samples, epochs, ridge, grid, emc, ensemble");
  sweep->add_option("experiment", experiment_name, "experiment name")->required();
  add_common(sweep, sweep_flags);

  auto* emc = app.add_subcommand("emc", "estimate effective model complexity for each model_dims entry");
  add_common(emc, emc_flags);

  std::string plot_file, plot_out, plot_metric = "test_mse";
  bool plot_linear_x = false;
  auto* plot = app.add_subcommand("plot", "render SVG plots from a result JSON");
  plot->add_option("result-file", plot_file, "result JSON")->required();
  plot->add_option("--out", plot_out, "output directory (default: next to the result)");
  plot->add_option("--metric", plot_metric, "train_mse, train_err, test_mse, test_err, ...");
  plot->add_flag("--linear-x", plot_linear_x, "linear x axis");

  std::string fetch_dir, fetch_host = fetch::kFashionMnistHost;
  auto* fetch_cmd = app.add_subcommand("fetch-data", "download the Fashion-MNIST IDX files");
  fetch_cmd->add_option("--data-dir", fetch_dir, "dataset cache directory");
  fetch_cmd->add_option("--host", fetch_host, "download host");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*sweep) {
      auto e = parse_experiment(experiment_name);
      if (!e) {
        err << "error: unknown experiment '" << experiment_name << "'\n\n" << sweep->help();
        return kExitUsage;
      }
      return run_sweep(*e, sweep_flags, out);
    }
    if (*emc) return run_sweep(Experiment::emc, emc_flags, out);
    if (*plot) {
      const SweepResult r = load(plot_file);
      RunConfig cfg;
      auto m = parse_metric_field(plot_metric);
      if (!m) {
        err << "error: unknown metric '" << plot_metric << "'\n";
        return kExitUsage;
      }
      cfg.plot_metric = *m;
      cfg.log_x = !plot_linear_x;
      const std::filesystem::path p(plot_file);
      const auto dir = plot_out.empty() ? (p.has_parent_path() ? p.parent_path() : ".") : std::filesystem::path(plot_out);
      std::filesystem::create_directories(dir);
      for (const auto& f : write_plots(r, dir, p.stem().string(), cfg)) out << "wrote " << f.string() << '\n';
      return kExitOk;
    }
    if (*fetch_cmd) {
      const auto dir = resolve_data_dir(fetch_dir.empty() ? std::nullopt : std::optional<std::string>(fetch_dir));
      fetch::fetch_fashion_mnist(dir, fetch_host, out);
      return kExitOk;
    }
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace ddlab::cli
