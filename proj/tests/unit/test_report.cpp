#include <doctest.h>

#include "neolus/error.hpp"
#include "neolus/report.hpp"

using namespace neolus;

namespace {

MetricsReport make(Task task, double corr, double second, int n = 10) {
  MetricsReport r;
  r.task = task;
  for (Level l : {Level::Frame, Level::Video, Level::Session}) {
    LevelMetrics m;
    m.count = n;
    m.spearman = corr;
    if (task == Task::Regression) m.mape = second;
    else m.accuracy = second;
    r.levels[l] = m;
    n /= 2;
  }
  return r;
}

}  // namespace

TEST_CASE("classification table layout and best marks") {
  const std::vector<LabeledReport> runs = {{{"resnet34", "224", "none"}, make(Task::Classification, 0.61, 0.8)},
                                           {{"resnet34+pp", "224", "none"}, make(Task::Classification, 0.7821, 0.87)}};
  const std::string t = render_table(runs);
  CHECK(t.find("corr_frame") != std::string::npos);
  CHECK(t.find("acc_session") != std::string::npos);
  CHECK(t.find("mape") == std::string::npos);
  CHECK(t.find("0.7821*") != std::string::npos);
  CHECK(t.find("0.61*") == std::string::npos);
  CHECK(t.find("0.87*") != std::string::npos);
}

TEST_CASE("regression marks the minimum MAPE") {
  const std::vector<LabeledReport> runs = {{{"a", "224", "none"}, make(Task::Regression, 0.5, 0.2)},
                                           {{"b", "224", "none"}, make(Task::Regression, 0.4, 0.1)}};
  const std::string t = render_table(runs);
  CHECK(t.find("0.1*") != std::string::npos);
  CHECK(t.find("0.2*") == std::string::npos);
  CHECK(t.find("0.5*") != std::string::npos);
}

TEST_CASE("blocks follow the cumulative augmentation order") {
  std::vector<LabeledReport> runs;
  for (const char* aug : {"hflip+rot+photo", "hflip", "none", "hflip+rot"})
    runs.push_back({{"resnet18", "224", aug}, make(Task::Regression, 0.3, 0.2)});
  const std::string t = render_table(runs);
  const auto p0 = t.find("== augmentation: none =="), p1 = t.find("== augmentation: hflip =="),
             p2 = t.find("== augmentation: hflip+rot =="), p3 = t.find("== augmentation: hflip+rot+photo ==");
  CHECK(p0 != std::string::npos);
  CHECK(p0 < p1);
  CHECK(p1 < p2);
  CHECK(p2 < p3);
}

TEST_CASE("errors") {
  CHECK_THROWS_AS(render_table(std::vector<LabeledReport>{}), ArgumentError);
  const std::vector<LabeledReport> mixed = {{{}, make(Task::Regression, 0.1, 0.1)},
                                            {{}, make(Task::Classification, 0.1, 0.9)}};
  CHECK_THROWS_AS(render_table(mixed), ArgumentError);
  CHECK_THROWS_AS(parse_table("garbage"), LoadError);
}

TEST_CASE("table parses back to six significant digits") {
  MetricsReport r = make(Task::Regression, 0.123456789, 0.0456789123, 180);
  r.levels[Level::Video].spearman.reset();
  const std::vector<LabeledReport> runs = {{{"tinynet", "224", "hflip+rot"}, r},
                                           {{"resnet50", "224", "hflip+rot"}, make(Task::Regression, -0.25, 1.5)}};
  const auto back = parse_table(render_table(runs));
  REQUIRE(back.size() == 2);
  CHECK(back[0].label.network == "tinynet");
  CHECK(back[0].label.augmentation == "hflip+rot");
  const auto& f = back[0].report.levels.at(Level::Frame);
  CHECK(*f.spearman == 0.123457);
  CHECK(*f.mape == 0.0456789);
  CHECK(f.count == 180);
  CHECK_FALSE(back[0].report.levels.at(Level::Video).spearman.has_value());
  CHECK(*back[1].report.levels.at(Level::Session).spearman == -0.25);
  CHECK(render_table(back) == render_table(runs));
}

TEST_CASE("scatter plot data and markers") {
  PredictionSet p = {{"P1", "S1", "V1", "a", 1.2, 480, std::nullopt}, {"P2", "S2", "V2", "b", 0.5, 225, std::nullopt}};
  const auto plot = scatter_data(p, Task::Regression, Level::Session);
  REQUIRE(plot.points.size() == 2);
  CHECK(plot.points[0].x == 450);
  CHECK(plot.points[0].y == 450);
  CHECK(plot.points[1].y == 225);
  CHECK(plot.points[0].group == "unknown");

  const Manifest m({{"P1", Center::Synthetic, Disease::None, 30}, {"P2", Center::Synthetic, Disease::TTN, 30},
                    {"P3", Center::Synthetic, Disease::RDS, 30}},
                   {{"S1", "P1", 450, 1, false}, {"S2", "P2", 300, 1, false}, {"S2b", "P2", 440, 2, true},
                    {"S3", "P3", 150, 1, false}, {"S3b", "P3", 440, 2, true}},
                   {});
  PredictionSet c = {{"P1", "S1", "V1", "a", 0.1, 450, 0}, {"P2", "S2", "V2", "b", 0.6, 300, 1},
                     {"P3", "S3", "V3", "c", 0.9, 150, 1}};
  const auto cp = scatter_data(c, Task::Classification, Level::Session, {}, &m);
  CHECK(cp.points[0].group == "healthy");
  CHECK(cp.points[1].group == "TTN");
  CHECK(cp.points[2].group == "RDS");
  CHECK(cp.points[0].y == doctest::Approx(0.9));
  const std::string svg = render_svg(cp);
  CHECK(svg.find("<circle") != std::string::npos);
  CHECK(svg.find("<polygon") != std::string::npos);
  CHECK(svg.find("<rect x=") != std::string::npos);
  const std::string csv = scatter_csv(cp);
  CHECK(csv.rfind("id,group,target_sf,value\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}
