#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace pulsecancel {

using cplx = std::complex<double>;

/// Propagation speed used throughout the simulator and the range axis.
/// The rounded value keeps range-bin arithmetic aligned with common radar tooling.
inline constexpr double kSpeedOfLight = 3.0e8;

constexpr double hz_to_bpm(double hz) noexcept { return hz * 60.0; }
constexpr double bpm_to_hz(double bpm) noexcept { return bpm / 60.0; }

/// FMCW chirp and frame timing. Defaults are a 77 GHz, 70 MHz/us,
/// 200-sample chirp at 4 Msps with a 10 ms frame period.
struct RadarConfig {
  double carrier_frequency = 77.0e9;  // Hz, chirp start
  double chirp_slope = 70.0e12;       // Hz/s
  double bandwidth = 3.5e9;           // Hz swept over the ADC window
  double chirp_duration = 50.0e-6;    // s
  std::size_t adc_samples_per_chirp = 200;
  double adc_sample_rate = 4.0e6;     // samples/s
  double frame_period = 0.01;         // s
  double transmit_power_scale = 1.0;  // target echo amplitude

  double wavelength() const noexcept { return kSpeedOfLight / carrier_frequency; }
  double frame_rate() const noexcept { return 1.0 / frame_period; }
  /// Range spanned by one fast-time FFT bin.
  double range_bin_width() const noexcept;
  /// Beat frequency of a point reflector at `range_m`.
  double beat_frequency(double range_m) const noexcept;
  /// Largest range whose beat frequency stays below adc_sample_rate / 2.
  double max_unambiguous_range() const noexcept;

  /// Throws Error(InvalidArgument) when any invariant is violated.
  void validate() const;
};

/// Complex IF samples, frame-major: iq[frame * fast_time + sample].
struct RadarCube {
  std::size_t frames = 0;
  std::size_t fast_time = 0;
  std::vector<cplx> iq;
  RadarConfig config;

  std::span<const cplx> frame(std::size_t f) const { return {iq.data() + f * fast_time, fast_time}; }
  std::span<cplx> frame(std::size_t f) { return {iq.data() + f * fast_time, fast_time}; }

  void validate() const;
};

/// Slow-time phase in radians at a single (or enhanced) range bin.
struct PhaseSignal {
  std::vector<double> samples;
  double sample_rate = 0.0;
  std::size_t source_bin = 0;
  bool enhanced = false;
  /// Samples whose complex value had zero magnitude and inherited the previous phase.
  std::size_t carried_samples = 0;

  std::size_t size() const noexcept { return samples.size(); }
  double duration() const noexcept { return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0; }
};

enum class TraceTag {
  Reliable1st,  // fundamental/harmonic pair from the strongest fundamental peak
  Reliable2nd,  // pair from the second-strongest fundamental peak
  Refined,      // output of the narrowed search around the stable mean
  Peak,         // plain strongest-peak estimate (baseline methods)
  Held,         // window failed; previous estimate carried forward
  Reference,    // ground truth
};

std::string_view to_string(TraceTag tag) noexcept;
TraceTag parse_trace_tag(std::string_view text);

struct TraceEntry {
  double time_s = 0.0;
  double hr_bpm = 0.0;
  TraceTag tag = TraceTag::Reference;
  double delta_hz = 0.0;  // credibility deviation; +inf when no pair was formed
};

struct HrTrace {
  std::vector<TraceEntry> entries;

  std::size_t size() const noexcept { return entries.size(); }
  bool empty() const noexcept { return entries.empty(); }
};

}  // namespace pulsecancel
