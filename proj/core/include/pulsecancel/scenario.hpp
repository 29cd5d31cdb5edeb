#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pulsecancel/types.hpp"

namespace pulsecancel::synth {

struct Harmonic {
  double amplitude = 0.0;  // m
  double phase = 0.0;      // rad
};

enum class IntermodRule { HrMinusRr, HrPlusRr, HrPlus2Rr, Explicit };

std::string_view to_string(IntermodRule rule) noexcept;
IntermodRule parse_intermod_rule(std::string_view text);

struct ActiveInterval {
  double start_s = 0.0;
  double end_s = 0.0;
};

/// Displacement-domain interference tone. Its frequency follows `rule`
/// relative to the breathing and heartbeat fundamentals, or is given explicitly.
/// With no `active` intervals the tone is present for the whole record;
/// otherwise it is gated on inside each interval with raised-cosine edges.
struct IntermodTone {
  IntermodRule rule = IntermodRule::HrMinusRr;
  double explicit_frequency = 0.0;  // Hz, used only by IntermodRule::Explicit
  double amplitude = 0.0;           // m
  double phase = 0.0;               // rad
  std::vector<ActiveInterval> active;
  double ramp_s = 2.0;

  double frequency(double breathing_hz, double heartbeat_hz) const noexcept;
  double envelope(double t) const noexcept;
};

struct ClutterPath {
  double range_m = 0.0;
  double amplitude = 0.0;
};

struct Scenario {
  double nominal_distance = 1.0;       // m, carried as metadata for the cube
  double breathing_fundamental = 0.25; // Hz
  std::vector<Harmonic> breathing_harmonics;
  double heartbeat_fundamental = 1.2;  // Hz
  std::vector<Harmonic> heartbeat_harmonics;
  std::vector<IntermodTone> intermod_tones;
  std::vector<ClutterPath> clutter_paths;
  double phase_noise_std = 0.0;    // rad, white jitter per frame
  double complex_noise_std = 0.0;  // std of circular complex noise per sample
  double duration = 20.0;          // s
  std::uint64_t seed = 0;
  bool override_amplitude_limits = false;
  RadarConfig radar;

  /// Highest frequency present in the displacement model.
  double max_frequency() const noexcept;
  std::size_t frame_count() const;
  void validate() const;
};

/// Harmonic series with geometric amplitude decay; phases are all zero.
std::vector<Harmonic> harmonic_series(double fundamental_amplitude, std::size_t count, double decay = 0.5);

/// Scenario with 4 breathing and 2 heartbeat harmonics, no interference or noise.
Scenario default_scenario();

struct DisplacementComponents {
  std::vector<double> breathing;
  std::vector<double> heartbeat;
  std::vector<double> intermod;
};

/// Chest motion about the nominal distance (d_o is not included).
struct DisplacementSignal {
  std::vector<double> samples;  // m
  double sample_rate = 0.0;
  std::optional<DisplacementComponents> components;
};

DisplacementSignal synthesize_displacement(const Scenario& scenario, std::size_t n, double fs);

/// theta[n] = 4*pi/lambda * d[n].
PhaseSignal displacement_to_phase(const DisplacementSignal& d, const RadarConfig& config);

/// Unit-magnitude slow-time samples exp(j*(theta + jitter)) plus circular complex
/// noise whose total variance is complex_noise_std^2.
std::vector<cplx> synthesize_slow_time(const PhaseSignal& theta, double complex_noise_std, double phase_noise_std,
                                       std::uint64_t seed);

/// Full fast-time x slow-time IF cube (stop-and-hop: the target is frozen during each chirp).
RadarCube synthesize_radar_cube(const Scenario& scenario);

/// Ground truth: one entry per analysis window centre at the heartbeat fundamental.
HrTrace reference_trace(const Scenario& scenario, double cpi_s, double step_s);

/// Seeded scenario families used by the benchmarks and acceptance suite:
///   "masking"  - respiration harmonics plus gated intermodulation maskers;
///                even seeds mask only the fundamental region (f1 strong),
///                odd seeds also raise f2 and f3 above the heartbeat.
///   "harmonic" - third respiration harmonic comparable to the heartbeat, no maskers.
///   "clean"    - weak respiration harmonics, no maskers.
Scenario make_family_scenario(std::string_view family, std::uint64_t seed, double duration_s = 280.0);

nlohmann::json radar_to_json(const RadarConfig& config);
RadarConfig radar_from_json(const nlohmann::json& j);

Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Scenario& scenario);
Scenario load_scenario(const std::filesystem::path& path);
void save_scenario(const Scenario& scenario, const std::filesystem::path& path);

}  // namespace pulsecancel::synth
