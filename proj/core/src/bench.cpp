#include "pulsecancel/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "pulsecancel/error.hpp"
#include "pulsecancel/preprocess.hpp"
#include "pulsecancel/scenario.hpp"

namespace pulsecancel::bench {
namespace fs = std::filesystem;
namespace {

double default_tolerance(const HrTrace& reference) {
  const auto& e = reference.entries;
  if (e.size() < 2) return 0.5;
  std::vector<double> gaps;
  gaps.reserve(e.size() - 1);
  for (std::size_t i = 1; i < e.size(); ++i) gaps.push_back(e[i].time_s - e[i - 1].time_s);
  std::nth_element(gaps.begin(), gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2), gaps.end());
  return gaps[gaps.size() / 2] / 2.0;
}

double rms(const std::vector<double>& sq_errors) {
  if (sq_errors.empty()) return 0.0;
  double s = 0.0;
  for (double v : sq_errors) s += v;
  return std::sqrt(s / static_cast<double>(sq_errors.size()));
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, fmt::format("cannot write {}", path.string()));
  return out;
}

std::size_t method_rank(const std::vector<Method>& methods, Method m) {
  return static_cast<std::size_t>(std::find(methods.begin(), methods.end(), m) - methods.begin());
}

}  // namespace

std::vector<PairedError> pair_traces(const HrTrace& trace, const HrTrace& reference, std::optional<double> tolerance_s) {
  const double tol = tolerance_s.value_or(default_tolerance(reference)) + 1e-9;
  const auto& ref = reference.entries;
  std::vector<PairedError> out;
  for (const auto& e : trace.entries) {
    auto it = std::lower_bound(ref.begin(), ref.end(), e.time_s,
                               [](const TraceEntry& r, double t) { return r.time_s < t; });
    const TraceEntry* best = nullptr;
    double best_gap = std::numeric_limits<double>::infinity();
    if (it != ref.end()) {
      best = &*it;
      best_gap = std::abs(it->time_s - e.time_s);
    }
    if (it != ref.begin()) {
      const auto prev = std::prev(it);
      const double gap = std::abs(prev->time_s - e.time_s);
      if (gap <= best_gap) {
        best = &*prev;
        best_gap = gap;
      }
    }
    if (best != nullptr && best_gap <= tol) out.push_back({e.time_s, e.hr_bpm - best->hr_bpm});
  }
  return out;
}

double rmse(const HrTrace& trace, const HrTrace& reference, std::optional<double> tolerance_s) {
  const auto pairs = pair_traces(trace, reference, tolerance_s);
  if (pairs.empty()) throw Error(ErrorCode::InvalidData, "trace and reference share no time support");
  std::vector<double> sq;
  sq.reserve(pairs.size());
  for (const auto& p : pairs) sq.push_back(p.error_bpm * p.error_bpm);
  return rms(sq);
}

IntervalTable interval_rmse(const HrTrace& trace, const HrTrace& reference, double interval_s, double first_start_s) {
  if (!(interval_s > 0)) throw Error(ErrorCode::InvalidArgument, "interval must be positive");
  const auto pairs = pair_traces(trace, reference);
  IntervalTable table;
  if (pairs.empty()) return table;
  const double last = pairs.back().time_s;
  for (std::size_t i = 0;; ++i) {
    const double start = first_start_s + static_cast<double>(i) * interval_s;
    if (start > last) break;
    const double end = start + interval_s;
    std::vector<double> sq;
    for (const auto& p : pairs) {
      if (p.time_s >= start && p.time_s < end) sq.push_back(p.error_bpm * p.error_bpm);
    }
    if (sq.empty()) {
      table.notes.push_back(fmt::format("interval {:g}-{:g}s has no paired entries", start, end));
      continue;
    }
    table.rows.push_back({start, end, rms(sq), sq.size()});
  }
  return table;
}

std::optional<double> BenchReport::median_rmse(double cpi_s, Method method) const {
  std::vector<double> v;
  for (const auto& r : runs) {
    if (r.ok && r.method == method && std::abs(r.cpi_s - cpi_s) < 1e-9) v.push_back(r.rmse_bpm);
  }
  if (v.empty()) return std::nullopt;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

std::size_t BenchReport::failures() const {
  return static_cast<std::size_t>(std::count_if(runs.begin(), runs.end(), [](const RmseRecord& r) { return !r.ok; }));
}

BenchReport monte_carlo(const MonteCarloConfig& config) {
  if (config.seeds.size() < 2) throw Error(ErrorCode::InvalidArgument, "monte_carlo needs at least 2 seeds");
  if (config.cpis.empty() || config.methods.empty()) throw Error(ErrorCode::InvalidArgument, "no CPIs or methods");

  BenchReport report;
  report.family = config.family;
  report.seeds = config.seeds;
  report.cpis = config.cpis;
  report.methods = config.methods;
  report.primary_cpi = config.primary_cpi;

  std::mutex sink;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < config.seeds.size(); i = next++) {
      const std::uint64_t seed = config.seeds[i];
      std::vector<RmseRecord> runs;
      std::vector<IntervalRecord> intervals;
      std::optional<PhaseSignal> phase;
      synth::Scenario scenario;
      std::string setup_error;
      try {
        scenario = synth::make_family_scenario(config.family, seed, config.duration_s);
        phase = preprocess::phase_from_cube(synth::synthesize_radar_cube(scenario), config.pipeline.preprocess);
      } catch (const std::exception& e) {
        setup_error = e.what();
      }
      for (double cpi : config.cpis) {
        for (Method m : config.methods) {
          RmseRecord rec{cpi, seed, m, 0.0, true, {}};
          try {
            if (!phase) throw Error(ErrorCode::InvalidData, setup_error);
            PipelineConfig pc = config.pipeline;
            pc.trace.cpi_s = cpi;
            const HrTrace trace = estimate_trace(*phase, pc, m);
            const HrTrace truth = synth::reference_trace(scenario, cpi, pc.trace.step_s);
            rec.rmse_bpm = rmse(trace, truth);
            if (std::abs(cpi - config.primary_cpi) < 1e-9) {
              for (const auto& row : interval_rmse(trace, truth, config.interval_s, config.interval_start_s).rows) {
                intervals.push_back({seed, m, row});
              }
            }
          } catch (const std::exception& e) {
            rec.ok = false;
            rec.error = e.what();
          }
          runs.push_back(std::move(rec));
        }
      }
      std::lock_guard lock(sink);
      report.runs.insert(report.runs.end(), runs.begin(), runs.end());
      report.intervals.insert(report.intervals.end(), intervals.begin(), intervals.end());
    }
  };

  unsigned threads = config.threads != 0 ? config.threads : std::max(1U, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(config.seeds.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  const auto seed_rank = [&](std::uint64_t s) {
    return static_cast<std::size_t>(std::find(config.seeds.begin(), config.seeds.end(), s) - config.seeds.begin());
  };
  std::sort(report.runs.begin(), report.runs.end(), [&](const RmseRecord& a, const RmseRecord& b) {
    const auto ka = std::tuple(std::find(config.cpis.begin(), config.cpis.end(), a.cpi_s) - config.cpis.begin(),
                               seed_rank(a.seed), method_rank(config.methods, a.method));
    const auto kb = std::tuple(std::find(config.cpis.begin(), config.cpis.end(), b.cpi_s) - config.cpis.begin(),
                               seed_rank(b.seed), method_rank(config.methods, b.method));
    return ka < kb;
  });
  std::stable_sort(report.intervals.begin(), report.intervals.end(), [&](const IntervalRecord& a, const IntervalRecord& b) {
    return std::tuple(seed_rank(a.seed), method_rank(config.methods, a.method), a.row.start_s) <
           std::tuple(seed_rank(b.seed), method_rank(config.methods, b.method), b.row.start_s);
  });
  return report;
}

std::vector<TimingRow> time_profile(const RadarCube& cube, const PipelineConfig& config,
                                    const std::vector<Method>& methods, std::size_t repeats) {
  using clock = std::chrono::steady_clock;
  repeats = std::max<std::size_t>(repeats, 1);
  auto measure = [&](Method m) {
    (void)estimate_trace(cube, config, m);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < repeats; ++r) {
      const auto t0 = clock::now();
      const HrTrace trace = estimate_trace(cube, config, m);
      const std::chrono::duration<double> dt = clock::now() - t0;
      if (trace.empty()) throw Error(ErrorCode::Numerical, "empty trace while timing");
      best = std::min(best, dt.count());
    }
    return best;
  };

  std::vector<TimingRow> rows;
  double baseline = 0.0;
  for (Method m : methods) {
    rows.push_back({m, measure(m), 1.0});
    if (m == Method::Conventional) baseline = rows.back().wall_s;
  }
  if (baseline == 0.0) baseline = measure(Method::Conventional);
  for (auto& r : rows) r.normalized = r.method == Method::Conventional ? 1.0 : r.wall_s / baseline;
  return rows;
}

std::optional<double> anchor_ratio(Method method) {
  switch (method) {
    case Method::Conventional: return 1.0;
    case Method::Ahet: return 1.305;
    case Method::EcaConventional: return std::nullopt;
  }
  return std::nullopt;
}

void write_rmse_csv(const BenchReport& report, const fs::path& path) {
  auto out = open_out(path);
  out << "cpi_s,seed,method,rmse_bpm,status\n";
  for (const auto& r : report.runs) {
    out << fmt::format("{:g},{},{},{},{}\n", r.cpi_s, r.seed, to_string(r.method),
                       r.ok ? fmt::format("{:.6g}", r.rmse_bpm) : std::string("nan"), r.ok ? "ok" : "failed");
  }
}

void write_intervals_csv(const BenchReport& report, const fs::path& path) {
  auto out = open_out(path);
  out << "seed,method,start_s,end_s,rmse_bpm,count\n";
  for (const auto& r : report.intervals) {
    out << fmt::format("{},{},{:g},{:g},{:.6g},{}\n", r.seed, to_string(r.method), r.row.start_s, r.row.end_s,
                       r.row.rmse_bpm, r.row.count);
  }
}

void write_timing_csv(const BenchReport& report, const fs::path& path) {
  auto out = open_out(path);
  out << "method,wall_s,normalized,anchor_ratio\n";
  for (const auto& t : report.timing) {
    const auto anchor = anchor_ratio(t.method);
    out << fmt::format("{},{:.6g},{:.3f},{}\n", to_string(t.method), t.wall_s, t.normalized,
                       anchor ? fmt::format("{:.3f}", *anchor) : std::string());
  }
}

nlohmann::json report_to_json(const BenchReport& report) {
  nlohmann::json j;
  j["family"] = report.family;
  j["seeds"] = report.seeds;
  j["cpis"] = report.cpis;
  j["primary_cpi"] = report.primary_cpi;
  nlohmann::json methods = nlohmann::json::array();
  for (Method m : report.methods) methods.push_back(std::string(to_string(m)));
  j["methods"] = methods;
  j["runs"] = report.runs.size();
  j["failures"] = report.failures();
  nlohmann::json medians = nlohmann::json::array();
  for (double cpi : report.cpis) {
    for (Method m : report.methods) {
      const auto med = report.median_rmse(cpi, m);
      medians.push_back({{"cpi_s", cpi}, {"method", std::string(to_string(m))},
                         {"median_rmse_bpm", med ? nlohmann::json(*med) : nlohmann::json(nullptr)}});
    }
  }
  j["median_rmse"] = medians;
  nlohmann::json timing = nlohmann::json::array();
  for (const auto& t : report.timing) {
    timing.push_back({{"method", std::string(to_string(t.method))}, {"wall_s", t.wall_s}, {"normalized", t.normalized}});
  }
  j["timing"] = timing;
  nlohmann::json errors = nlohmann::json::array();
  for (const auto& r : report.runs) {
    if (!r.ok) errors.push_back({{"cpi_s", r.cpi_s}, {"seed", r.seed}, {"method", std::string(to_string(r.method))}, {"error", r.error}});
  }
  j["errors"] = errors;
  return j;
}

void write_report(const BenchReport& report, const fs::path& dir) {
  fs::create_directories(dir);
  write_rmse_csv(report, dir / "rmse.csv");
  write_intervals_csv(report, dir / "intervals.csv");
  write_timing_csv(report, dir / "timing.csv");
  auto out = open_out(dir / "report.json");
  out << report_to_json(report).dump(2) << '\n';
}

}  // namespace pulsecancel::bench
