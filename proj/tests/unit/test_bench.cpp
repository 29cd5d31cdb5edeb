#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pulsecancel/bench.hpp"
#include "pulsecancel/error.hpp"
#include "pulsecancel/scenario.hpp"
#include "test_util.hpp"

using namespace pulsecancel;
using namespace pulsecancel::bench;

namespace {

HrTrace trace_of(const std::vector<double>& times, const std::vector<double>& bpm, TraceTag tag = TraceTag::Peak) {
  HrTrace t;
  for (std::size_t i = 0; i < times.size(); ++i) t.entries.push_back({times[i], bpm[i], tag, 0.0});
  return t;
}

HrTrace uniform(double first, double last, double step, double bpm) {
  std::vector<double> t, v;
  for (double x = first; x <= last + 1e-9; x += step) {
    t.push_back(x);
    v.push_back(bpm);
  }
  return trace_of(t, v, TraceTag::Reference);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Rmse, ClosedFormCases) {
  const auto ref = uniform(10, 270, 1, 72.0);
  EXPECT_EQ(rmse(ref, ref), 0.0);
  auto plus2 = ref;
  for (auto& e : plus2.entries) e.hr_bpm += 2.0;
  EXPECT_DOUBLE_EQ(rmse(plus2, ref), 2.0);
  auto alt = ref;
  for (std::size_t i = 0; i < alt.size(); ++i) alt.entries[i].hr_bpm += i % 2 == 0 ? 3.0 : -3.0;
  EXPECT_DOUBLE_EQ(rmse(alt, ref), 3.0);
}

TEST(Rmse, PairsNearestWithinHalfStep) {
  const auto ref = trace_of({10, 11, 12}, {60, 70, 80});
  const auto tr = trace_of({10.4, 11.6, 14.0}, {61, 80, 0});
  const auto pairs = pair_traces(tr, ref);
  ASSERT_EQ(pairs.size(), 2U);
  EXPECT_DOUBLE_EQ(pairs[0].error_bpm, 1.0);
  EXPECT_DOUBLE_EQ(pairs[1].error_bpm, 0.0);
  EXPECT_EQ(pair_traces(tr, ref, 2.5).size(), 3U);
}

TEST(Rmse, NoOverlapIsAnError) {
  try {
    rmse(trace_of({100, 101}, {70, 70}), trace_of({10, 11}, {70, 70}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidData);
  }
}

TEST(IntervalRmse, TableLayoutFor280sRecord) {
  const auto ref = uniform(10, 270, 1, 72.0);
  const auto table = interval_rmse(ref, ref);
  ASSERT_EQ(table.rows.size(), 7U);
  for (std::size_t i = 0; i < 7; ++i) {
    EXPECT_DOUBLE_EQ(table.rows[i].start_s, 10.0 + 40.0 * static_cast<double>(i));
    EXPECT_DOUBLE_EQ(table.rows[i].end_s, 50.0 + 40.0 * static_cast<double>(i));
    EXPECT_EQ(table.rows[i].rmse_bpm, 0.0);
  }
  EXPECT_EQ(table.rows.back().count, 21U);  // 250..270
}

TEST(IntervalRmse, ErrorConfinedToOneRow) {
  const auto ref = uniform(10, 270, 1, 72.0);
  auto tr = ref;
  for (auto& e : tr.entries)
    if (e.time_s >= 90 && e.time_s < 130) e.hr_bpm += 5.0;
  const auto table = interval_rmse(tr, ref);
  for (const auto& r : table.rows) EXPECT_DOUBLE_EQ(r.rmse_bpm, r.start_s == 90.0 ? 5.0 : 0.0);
}

TEST(IntervalRmse, GapsBecomeNotes) {
  const auto ref = uniform(10, 270, 1, 72.0);
  auto tr = ref;
  std::erase_if(tr.entries, [](const TraceEntry& e) { return e.time_s >= 50 && e.time_s < 90; });
  const auto table = interval_rmse(tr, ref);
  EXPECT_EQ(table.rows.size(), 6U);
  ASSERT_EQ(table.notes.size(), 1U);
  EXPECT_NE(table.notes[0].find("50"), std::string::npos);
}

TEST(IntervalRmse, PropertyDecomposesOverallMse) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0, 4);
  for (int trial = 0; trial < 10; ++trial) {
    const auto ref = uniform(10, 270, 1, 70.0);
    auto tr = ref;
    for (auto& e : tr.entries) e.hr_bpm += g(rng);
    const auto table = interval_rmse(tr, ref);
    double weighted = 0;
    std::size_t n = 0;
    for (const auto& r : table.rows) {
      weighted += r.rmse_bpm * r.rmse_bpm * static_cast<double>(r.count);
      n += r.count;
    }
    EXPECT_EQ(n, tr.size());
    EXPECT_NEAR(weighted / static_cast<double>(n), std::pow(rmse(tr, ref), 2), 1e-9);
  }
}

namespace {

MonteCarloConfig small_run(unsigned threads) {
  MonteCarloConfig c;
  c.family = "masking";
  c.seeds = {1, 2};
  c.cpis = {15.0, 20.0};
  c.duration_s = 60.0;
  c.threads = threads;
  return c;
}

}  // namespace

TEST(MonteCarlo, CrossProductOrderAndDeterminism) {
  const auto a = monte_carlo(small_run(1));
  const auto b = monte_carlo(small_run(2));
  ASSERT_EQ(a.runs.size(), 2U * 2U * 2U);
  EXPECT_EQ(a.failures(), 0U);
  std::size_t i = 0;
  for (double cpi : {15.0, 20.0})
    for (std::uint64_t seed : {1, 2})
      for (Method m : {Method::Conventional, Method::Ahet}) {
        EXPECT_EQ(a.runs[i].cpi_s, cpi);
        EXPECT_EQ(a.runs[i].seed, seed);
        EXPECT_EQ(a.runs[i].method, m);
        EXPECT_EQ(a.runs[i].rmse_bpm, b.runs[i].rmse_bpm);
        EXPECT_GE(a.runs[i].rmse_bpm, 0.0);
        ++i;
      }
  ASSERT_EQ(a.intervals.size(), b.intervals.size());
  EXPECT_FALSE(a.intervals.empty());
  for (const auto& r : a.intervals) EXPECT_DOUBLE_EQ(r.row.end_s - r.row.start_s, 40.0);
  EXPECT_TRUE(a.median_rmse(20.0, Method::Ahet).has_value());
  EXPECT_FALSE(a.median_rmse(30.0, Method::Ahet).has_value());
}

TEST(MonteCarlo, FailuresAreRecordedNotFatal) {
  auto c = small_run(1);
  c.family = "no-such-family";
  const auto r = monte_carlo(c);
  EXPECT_EQ(r.failures(), r.runs.size());
  EXPECT_NE(r.runs[0].error.find("no-such-family"), std::string::npos);
  c.seeds = {1};
  EXPECT_THROW(monte_carlo(c), Error);
}

TEST(Report, CsvIsByteIdenticalAcrossReruns) {
  testutil::TempDir d1("bench"), d2("bench");
  auto a = monte_carlo(small_run(1));
  auto b = monte_carlo(small_run(2));
  write_report(a, d1.path());
  write_report(b, d2.path());
  for (const char* f : {"rmse.csv", "intervals.csv"}) EXPECT_EQ(slurp(d1 / f), slurp(d2 / f)) << f;
  const auto j = nlohmann::json::parse(slurp(d1 / "report.json"));
  EXPECT_EQ(j["runs"], 8);
  EXPECT_EQ(j["failures"], 0);
  EXPECT_EQ(j["median_rmse"].size(), 4U);
  EXPECT_EQ(slurp(d1 / "rmse.csv").substr(0, 32), "cpi_s,seed,method,rmse_bpm,statu");
}

TEST(TimeProfile, ConventionalIsTheUnit) {
  const auto cube = synth::synthesize_radar_cube(synth::make_family_scenario("clean", 2, 30.0));
  PipelineConfig pc;
  const auto rows = time_profile(cube, pc, {Method::Conventional, Method::Conventional}, 1);
  ASSERT_EQ(rows.size(), 2U);
  EXPECT_EQ(rows[0].normalized, 1.0);
  EXPECT_EQ(rows[1].normalized, 1.0);
  EXPECT_GT(rows[0].wall_s, 0.0);
  const auto ahet = time_profile(cube, pc, {Method::Ahet}, 1);
  ASSERT_EQ(ahet.size(), 1U);
  EXPECT_GT(ahet[0].normalized, 0.0);
  EXPECT_EQ(anchor_ratio(Method::Ahet), 1.305);
  EXPECT_EQ(anchor_ratio(Method::Conventional), 1.0);

  BenchReport r;
  r.timing = rows;
  testutil::TempDir d("timing");
  write_timing_csv(r, d / "timing.csv");
  EXPECT_EQ(slurp(d / "timing.csv").substr(0, 38), "method,wall_s,normalized,anchor_ratio\n");
}
