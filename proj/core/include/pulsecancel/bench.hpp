#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pulsecancel/pipeline.hpp"
#include "pulsecancel/types.hpp"

namespace pulsecancel::bench {

/// Pairs each trace entry with the nearest reference entry no further than
/// `tolerance_s` away (default: half the reference spacing, or 0.5 s).
struct PairedError {
  double time_s = 0.0;
  double error_bpm = 0.0;
};
std::vector<PairedError> pair_traces(const HrTrace& trace, const HrTrace& reference,
                                     std::optional<double> tolerance_s = std::nullopt);

/// Root mean squared BPM error over paired entries. Throws InvalidData when
/// nothing pairs.
double rmse(const HrTrace& trace, const HrTrace& reference, std::optional<double> tolerance_s = std::nullopt);

struct IntervalRow {
  double start_s = 0.0;
  double end_s = 0.0;
  double rmse_bpm = 0.0;
  std::size_t count = 0;
};

struct IntervalTable {
  std::vector<IntervalRow> rows;
  std::vector<std::string> notes;  // one per omitted empty interval
};

/// RMSE over consecutive [start, start + interval) spans beginning at
/// `first_start`, continuing while a paired entry can still fall inside.
IntervalTable interval_rmse(const HrTrace& trace, const HrTrace& reference, double interval_s = 40.0,
                            double first_start_s = 10.0);

struct RmseRecord {
  double cpi_s = 0.0;
  std::uint64_t seed = 0;
  Method method = Method::Conventional;
  double rmse_bpm = 0.0;
  bool ok = true;
  std::string error;
};

struct IntervalRecord {
  std::uint64_t seed = 0;
  Method method = Method::Conventional;
  IntervalRow row;
};

struct TimingRow {
  Method method = Method::Conventional;
  double wall_s = 0.0;
  double normalized = 1.0;  // wall_s / conventional wall_s
};

struct BenchReport {
  std::string family;
  std::vector<std::uint64_t> seeds;
  std::vector<double> cpis;
  std::vector<Method> methods;
  double primary_cpi = 20.0;
  std::vector<RmseRecord> runs;
  std::vector<IntervalRecord> intervals;
  std::vector<TimingRow> timing;

  /// Median RMSE over the successful runs of one (cpi, method) cell.
  std::optional<double> median_rmse(double cpi_s, Method method) const;
  std::size_t failures() const;
};

struct MonteCarloConfig {
  std::string family = "masking";
  std::vector<std::uint64_t> seeds;
  std::vector<double> cpis{15.0, 20.0, 30.0};
  std::vector<Method> methods{Method::Conventional, Method::Ahet};
  double duration_s = 280.0;
  double primary_cpi = 20.0;  // interval table is computed at this CPI
  double interval_s = 40.0;
  double interval_start_s = 10.0;
  PipelineConfig pipeline;
  unsigned threads = 0;       // 0: hardware concurrency
};

/// Runs every (seed, cpi, method) combination. Failures are recorded per run.
/// Results are ordered by (cpi, seed, method) regardless of thread count.
BenchReport monte_carlo(const MonteCarloConfig& config);

/// Wall time of each method over the same cube, preprocessing included. Each
/// method runs once untimed, then the minimum of `repeats` runs is kept.
std::vector<TimingRow> time_profile(const RadarCube& cube, const PipelineConfig& config,
                                    const std::vector<Method>& methods, std::size_t repeats = 3);

/// Reference ratio quoted for context in timing.csv (absent for methods without one).
std::optional<double> anchor_ratio(Method method);

void write_rmse_csv(const BenchReport& report, const std::filesystem::path& path);
void write_intervals_csv(const BenchReport& report, const std::filesystem::path& path);
void write_timing_csv(const BenchReport& report, const std::filesystem::path& path);
nlohmann::json report_to_json(const BenchReport& report);
/// rmse.csv, intervals.csv, timing.csv and report.json under `dir`.
void write_report(const BenchReport& report, const std::filesystem::path& dir);

}  // namespace pulsecancel::bench
