#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "pulsecancel/ahet.hpp"
#include "pulsecancel/anls.hpp"
#include "pulsecancel/eca.hpp"
#include "pulsecancel/pipeline.hpp"
#include "pulsecancel/preprocess.hpp"
#include "pulsecancel/scenario.hpp"
#include "pulsecancel/spectral.hpp"

using namespace pulsecancel;

namespace {

constexpr double kFs = 100.0;

std::vector<double> chest(std::size_t n, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.05);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / kFs;
    x[i] = 3.0 * std::sin(2 * std::numbers::pi * 0.26 * t) + 1.0 * std::sin(2 * std::numbers::pi * 0.52 * t + 0.9) +
           0.3 * std::sin(2 * std::numbers::pi * 0.78 * t + 1.7) + 0.2 * std::sin(2 * std::numbers::pi * 1.21 * t) + g(rng);
  }
  return x;
}

const RadarCube& cube_280s() {
  static const RadarCube cube = synth::synthesize_radar_cube(synth::make_family_scenario("masking", 3, 280.0));
  return cube;
}

const PhaseSignal& phase_280s() {
  static const PhaseSignal phase = preprocess::phase_from_cube(cube_280s(), {});
  return phase;
}

}  // namespace

static void BM_RangeProfiles(benchmark::State& state) {
  const auto& cube = cube_280s();
  for (auto _ : state) benchmark::DoNotOptimize(preprocess::range_profiles(cube));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cube.frames));
}
BENCHMARK(BM_RangeProfiles)->Unit(benchmark::kMillisecond);

static void BM_PhaseFromCube(benchmark::State& state) {
  const auto& cube = cube_280s();
  for (auto _ : state) benchmark::DoNotOptimize(preprocess::phase_from_cube(cube, {}));
}
BENCHMARK(BM_PhaseFromCube)->Unit(benchmark::kMillisecond);

static void BM_EstimateBreathing5s(benchmark::State& state) {
  const auto x = chest(500);
  for (auto _ : state) benchmark::DoNotOptimize(anls::estimate_breathing(x, kFs));
}
BENCHMARK(BM_EstimateBreathing5s)->Unit(benchmark::kMicrosecond);

static void BM_TrackBreathing(benchmark::State& state) {
  const auto p = PhaseSignal{chest(static_cast<std::size_t>(state.range(0)) * 100), kFs};
  for (auto _ : state) benchmark::DoNotOptimize(anls::track_breathing(p));
}
BENCHMARK(BM_TrackBreathing)->Arg(60)->Arg(280)->Unit(benchmark::kMillisecond);

static void BM_ResidualPower(benchmark::State& state) {
  const auto x = chest(2000);
  const bool hann = state.range(0) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(anls::residual_power(x, kFs, 0.2603, 3, true, hann));
}
BENCHMARK(BM_ResidualPower)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

static void BM_ReconstructReference(benchmark::State& state) {
  const auto p = PhaseSignal{chest(6000), kFs};
  const auto track = anls::track_breathing(p);
  for (auto _ : state) benchmark::DoNotOptimize(anls::reconstruct_reference(p, 1000, 2000, {}, &track));
}
BENCHMARK(BM_ReconstructReference)->Unit(benchmark::kMicrosecond);

static void BM_EcaCancel(benchmark::State& state) {
  const auto theta = chest(2000, 2);
  const auto ref = chest(2000, 3);
  eca::EcaConfig c;
  c.order = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(eca::eca_cancel(theta, std::span<const double>(ref), c));
}
BENCHMARK(BM_EcaCancel)->Arg(1)->Arg(5)->Arg(8)->Unit(benchmark::kMicrosecond);

static void BM_PowerSpectrum(benchmark::State& state) {
  const auto x = chest(2000);
  const auto pad = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(spectral::power_spectrum(x, kFs, pad));
}
BENCHMARK(BM_PowerSpectrum)->Arg(1)->Arg(8)->Unit(benchmark::kMicrosecond);

static void BM_TopPeaks(benchmark::State& state) {
  const auto s = spectral::power_spectrum(chest(2000), kFs, 8);
  for (auto _ : state) benchmark::DoNotOptimize(spectral::top_peaks(s, 0.7, 2.0, 2));
}
BENCHMARK(BM_TopPeaks)->Unit(benchmark::kMicrosecond);

static void BM_Trace280s(benchmark::State& state) {
  const auto method = static_cast<Method>(state.range(0));
  const PipelineConfig pc;
  const PhaseSignal& phase = phase_280s();  // built outside the timed loop
  for (auto _ : state) benchmark::DoNotOptimize(estimate_trace(phase, pc, method));
  state.SetLabel(std::string(to_string(method)));
}
BENCHMARK(BM_Trace280s)
    ->Arg(static_cast<int>(Method::Conventional))
    ->Arg(static_cast<int>(Method::EcaConventional))
    ->Arg(static_cast<int>(Method::Ahet))
    ->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
