#include <regex>
#include <sstream>

#include <gtest/gtest.h>

#include <topomacro/topomacro.hpp>

using namespace topomacro;

namespace {

int count(const std::string& text, const std::string& needle) {
  int n = 0;
  for (std::size_t pos = 0; (pos = text.find(needle, pos)) != std::string::npos; pos += needle.size()) ++n;
  return n;
}

PlotSeries series(std::string label, RewardScheme scheme, int n_targets, int episodes) {
  PlotSeries s;
  s.label = std::move(label);
  s.scheme = scheme;
  s.n_targets = n_targets;
  for (int i = 0; i < episodes; ++i) s.macro_steps.push_back(250 - i % 200);
  return s;
}

}  // namespace

TEST(Plot, TwoSeriesWithCapLine) {
  std::ostringstream os;
  write_learning_curves_svg(os, {series("intermediate", RewardScheme::Intermediate, 1, 150),
                                 series("terminal", RewardScheme::Terminal, 1, 150)});
  const auto svg = os.str();
  EXPECT_EQ(svg.rfind("<svg ", 0), 0u);
  EXPECT_EQ(count(svg, "class=\"series\""), 2);
  EXPECT_NE(svg.find("data-label=\"intermediate\""), std::string::npos);
  EXPECT_NE(svg.find("data-label=\"terminal\""), std::string::npos);
  EXPECT_EQ(count(svg, "class=\"cap\""), 1);
  EXPECT_NE(svg.find(">cap 250<"), std::string::npos);
  EXPECT_NE(svg.find("#1f77b4"), std::string::npos);
  EXPECT_NE(svg.find("#d62728"), std::string::npos);
  EXPECT_EQ(count(svg, "class=\"legend\""), 2);
  EXPECT_EQ(count(svg, "<g class=\"panel\""), 1);
}

TEST(Plot, OnePanelPerTargetCount) {
  std::ostringstream os;
  write_learning_curves_svg(os, {series("a", RewardScheme::Intermediate, 1, 10), series("b", RewardScheme::Terminal, 3, 10),
                                 series("c", RewardScheme::Intermediate, 2, 10)});
  const auto svg = os.str();
  EXPECT_EQ(count(svg, "<g class=\"panel\""), 3);
  EXPECT_LT(svg.find("data-targets=\"1\""), svg.find("data-targets=\"2\""));
  EXPECT_LT(svg.find("data-targets=\"2\""), svg.find("data-targets=\"3\""));
}

TEST(Plot, PolylineHasOnePointPerEpisode) {
  std::ostringstream os;
  write_learning_curves_svg(os, {series("x<&>", RewardScheme::Intermediate, 1, 37)});
  const auto svg = os.str();
  const std::regex points("points=\"([^\"]*)\"");
  std::smatch m;
  ASSERT_TRUE(std::regex_search(svg, m, points));
  EXPECT_EQ(count(m[1].str(), ","), 37);
  EXPECT_NE(svg.find("x&lt;&amp;&gt;"), std::string::npos);
}

TEST(Plot, TrailingMovingMedian) {
  EXPECT_EQ(moving_median({5, 1, 3, 9}, 3), (std::vector<double>{5, 3, 3, 3}));
  EXPECT_EQ(moving_median({4, 2}, 100), (std::vector<double>{4, 3}));
  EXPECT_TRUE(moving_median({}, 100).empty());
}

TEST(Plot, ReadsMacroStepsColumn) {
  std::istringstream in(std::string(kMetricsHeader) + "\n0,7,12,300,1,0.5,0.05,1\n1,8,3,40,1,0.25,0.05,1\n");
  EXPECT_EQ(read_macro_steps(in), (std::vector<int>{12, 3}));
  std::istringstream bad("episode,steps\n1,2\n");
  EXPECT_THROW(read_macro_steps(bad), Error);
  std::istringstream short_row(std::string(kMetricsHeader) + "\n0,7\n");
  EXPECT_THROW(read_macro_steps(short_row), Error);
}
