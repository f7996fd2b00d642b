#include <gtest/gtest.h>

#include <cstdlib>
#include <regex>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "ddlab/report.hpp"

using namespace ddlab;

namespace {

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto at = text.find(needle); at != std::string::npos; at = text.find(needle, at + 1)) ++n;
  return n;
}

void expect_well_formed(const std::string& svg) {
  std::istringstream in(svg);
  boost::property_tree::ptree tree;
  EXPECT_NO_THROW(boost::property_tree::read_xml(in, tree));
  EXPECT_EQ(tree.count("svg"), 1u);
}

SweepResult run(Experiment e, SweepSpec s) { return run_experiment(e, s, TaskSource::synthetic(s.synthetic)); }

SweepSpec tiny() {
  SweepSpec s;
  s.base_seed = 5;
  s.replicates = 2;
  s.test_size = 100;
  return s;
}

SweepResult grid3() {
  auto s = tiny();
  s.model_dims = {5, 10, 20};
  s.sample_sizes = {5, 10, 20};
  s.noise_levels = {0.1};
  return run(Experiment::grid, s);
}

}  // namespace

TEST(RenderLine, SingleSeriesThreePoints) {
  auto s = tiny();
  s.model_dims = {5, 10, 20};
  s.sample_sizes = {10};
  const auto svg = render_line(run(Experiment::model, s), Axis::model_dim, std::nullopt);
  ASSERT_EQ(count(svg, "<polyline class=\"series\""), 1u);
  const std::regex points("<polyline class=\"series\"[^>]*points=\"([^\"]*)\"");
  std::smatch m;
  ASSERT_TRUE(std::regex_search(svg, m, points));
  std::istringstream pts(m[1].str());
  std::string v;
  std::size_t vertices = 0;
  while (pts >> v) ++vertices;
  EXPECT_EQ(vertices, 3u);
  EXPECT_EQ(count(svg, "class=\"band\""), 1u);
  EXPECT_EQ(count(svg, "class=\"threshold\""), 1u);
  expect_well_formed(svg);
}

TEST(RenderLine, NoBandForSingleReplicate) {
  auto s = tiny();
  s.replicates = 1;
  s.model_dims = {5, 10};
  s.sample_sizes = {10};
  EXPECT_EQ(count(render_line(run(Experiment::model, s), Axis::model_dim, std::nullopt), "class=\"band\""), 0u);
}

TEST(RenderLine, GridSlicesOnePolylinePerRow) {
  const auto svg = render_line(grid3(), Axis::model_dim, Axis::sample_size);
  EXPECT_EQ(count(svg, "<polyline class=\"series\""), 3u);
  expect_well_formed(svg);
}

TEST(RenderLine, EmptyResultRejected) {
  SweepResult empty;
  EXPECT_THROW(render_line(empty, Axis::model_dim, std::nullopt), InputError);
}

TEST(RenderLine, GeneratorCommentIsTheOnlyVersionedLine) {
  auto s = tiny();
  s.model_dims = {5, 10};
  s.sample_sizes = {10};
  const auto a = render_line(run(Experiment::model, s), Axis::model_dim, std::nullopt);
  const auto b = render_line(run(Experiment::model, s), Axis::model_dim, std::nullopt);
  EXPECT_EQ(a, b);
  EXPECT_EQ(count(a, kSvgGeneratorComment), 1u);
}

TEST(RenderHeatmap, OneRectPerCellAndLegend) {
  const auto svg = render_heatmap(grid3());
  EXPECT_EQ(count(svg, "<rect class=\"cell\""), 9u);
  EXPECT_GE(count(svg, "<rect class=\"legend\""), 2u);
  EXPECT_EQ(count(svg, "class=\"diagonal\""), 1u);
  expect_well_formed(svg);
}

TEST(RenderHeatmap, MaxCellUsesTopOfScale) {
  const auto r = grid3();
  const auto svg = render_heatmap(r);
  double best = -1;
  std::size_t best_i = 0;
  for (std::size_t i = 0; i < r.cells.size(); ++i)
    if (r.cells[i].summary.test_mse.mean > best) best = r.cells[i].summary.test_mse.mean, best_i = i;
  const std::regex cell("<rect class=\"cell\"[^>]*fill=\"(#[0-9a-f]{6})\"");
  std::vector<std::string> fills;
  for (auto it = std::sregex_iterator(svg.begin(), svg.end(), cell); it != std::sregex_iterator(); ++it)
    fills.push_back((*it)[1].str());
  ASSERT_EQ(fills.size(), 9u);
  EXPECT_EQ(fills[best_i], svg_detail::color(1.0));
}

TEST(RenderHeatmap, NonGridRejected) {
  auto s = tiny();
  s.model_dims = {5, 10};
  s.sample_sizes = {10};
  EXPECT_THROW(render_heatmap(run(Experiment::model, s)), InputError);
}

TEST(SummaryTable, FixedColumnsAndPeakRow) {
  auto s = tiny();
  s.replicates = 3;
  s.model_dims = {10, 20, 30, 36, 44, 60, 120, 240};
  s.sample_sizes = {40};
  s.noise_levels = {0.2};
  const auto table = summary_table(run(Experiment::model, s));
  std::istringstream in(table);
  std::string title, header;
  std::getline(in, title);
  std::getline(in, header);
  EXPECT_EQ(count(header, " | "), 10u);
  EXPECT_NE(table.find("peak: test_mse"), std::string::npos);
  EXPECT_EQ(table, summary_table(run(Experiment::model, s)));
}

TEST(SummaryTable, NoPeakRowOnMonotoneCurve) {
  auto s = tiny();
  s.model_dims = {5, 10};
  s.sample_sizes = {200};
  EXPECT_EQ(summary_table(run(Experiment::model, s)).find("peak:"), std::string::npos);
}

TEST(Config, ParsesSectionsAndAxes) {
  std::istringstream in(R"(
[experiment]
name = grid
[axes]
model_dims = logspace(20, 3200, 16)
sample_sizes = 100, 200
noise_levels = 0.1
[solver]
method = ridge
ridge_lambda = 0.5
[run]
seed = 77
replicates = 4
[output]
metric = test_err
)");
  const auto cfg = parse_config(in);
  EXPECT_EQ(cfg.experiment, Experiment::grid);
  ASSERT_EQ(cfg.spec.model_dims.size(), 16u);
  EXPECT_EQ(cfg.spec.model_dims.front(), 20);
  EXPECT_EQ(cfg.spec.model_dims.back(), 3200);
  EXPECT_EQ(cfg.spec.sample_sizes, (std::vector<Eigen::Index>{100, 200}));
  EXPECT_EQ(cfg.spec.solver.method, SolverMethod::ridge);
  EXPECT_EQ(cfg.spec.solver.ridge_lambda, 0.5);
  EXPECT_EQ(cfg.spec.base_seed, 77u);
  EXPECT_EQ(cfg.spec.replicates, 4);
  EXPECT_EQ(cfg.plot_metric, MetricField::test_err);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  RunConfig cfg;
  EXPECT_THROW(apply_setting(cfg, "axes.widths", "1"), ConfigError);
  EXPECT_THROW(apply_setting(cfg, "run.replicates", "many"), ConfigError);
  EXPECT_THROW(apply_setting(cfg, "solver.method", "adam"), ConfigError);
  std::istringstream orphan("seed = 3\n");
  EXPECT_THROW(parse_config(orphan), ConfigError);
}

TEST(DataDir, FlagThenEnvironmentThenDefault) {
  ::unsetenv(kDataDirEnv);
  EXPECT_EQ(resolve_data_dir(std::nullopt), std::filesystem::path("data"));
  ::setenv(kDataDirEnv, "/tmp/from-env", 1);
  EXPECT_EQ(resolve_data_dir(std::nullopt), std::filesystem::path("/tmp/from-env"));
  EXPECT_EQ(resolve_data_dir(std::string("/tmp/flag")), std::filesystem::path("/tmp/flag"));
  ::unsetenv(kDataDirEnv);
}
