#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pulsecancel/types.hpp"

namespace pulsecancel::preprocess {

/// Range-time map after average cancellation. The per-bin means that were
/// removed are kept in `static_clutter` so the uncancelled profile of any bin
/// can be recovered as values + static_clutter.
struct RangeProfiles {
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::vector<cplx> values;          // frame-major, clutter removed
  std::vector<cplx> static_clutter;  // one entry per bin
  double bin_width = 0.0;            // m
  double sample_rate_slow = 0.0;     // Hz

  cplx at(std::size_t frame, std::size_t bin) const { return values[frame * bins + bin]; }
  double bin_range(std::size_t bin) const noexcept { return static_cast<double>(bin) * bin_width; }
  /// Uncancelled slow-time series of one bin.
  std::vector<cplx> raw_bin(std::size_t bin) const;
  /// Clutter-cancelled slow-time series of one bin.
  std::vector<cplx> cancelled_bin(std::size_t bin) const;
};

/// Hann-windowed fast-time FFT per frame followed by average cancellation.
RangeProfiles range_profiles(const RadarCube& cube);

/// Subtracts each bin's across-frame mean in place; returns the removed means.
std::vector<cplx> cancel_static(std::vector<cplx>& values, std::size_t frames, std::size_t bins);

/// Bin with the largest mean clutter-cancelled power whose centre range lies
/// in [min_range, max_range]. Ties go to the nearer bin.
std::size_t detect_target_bin(const RangeProfiles& profiles, double min_range, double max_range);

/// Adds multiples of 2*pi wherever consecutive samples jump by more than pi.
void unwrap(std::span<double> phase);

/// atan2 demodulation plus unwrapping. Zero-magnitude samples repeat the
/// previous phase and are counted in PhaseSignal::carried_samples.
PhaseSignal extract_phase(std::span<const cplx> slow_time, double sample_rate);
PhaseSignal extract_phase(const RangeProfiles& profiles, std::size_t bin);

/// Correlation-weighted average of zero-mean phases from bins within
/// `half_width` of the target. Neighbours whose Pearson correlation with the
/// target phase is below `min_corr` are ignored, as are bins whose mean
/// magnitude is below `min_magnitude` times the target's (their phase is
/// unreliable near window nulls). The target has weight 1 and its mean is kept.
PhaseSignal enhance_phase(const RangeProfiles& profiles, std::size_t target_bin, std::size_t half_width,
                          double min_corr, double min_magnitude = 0.1);

struct PreprocessConfig {
  double gate_min = 0.3;  // m
  double gate_max = 3.0;  // m
  std::size_t enhance_width = 2;
  double min_corr = 0.7;
  double min_magnitude = 0.1;  // neighbour mean |z| relative to the target bin
};

/// Cube to enhanced unwrapped phase at the detected target bin.
PhaseSignal phase_from_cube(const RadarCube& cube, const PreprocessConfig& config = {});

}  // namespace pulsecancel::preprocess
