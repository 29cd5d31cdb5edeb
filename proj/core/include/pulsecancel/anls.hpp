#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pulsecancel/types.hpp"

namespace pulsecancel::anls {

/// Harmonic series fitted at one fundamental. coefficients holds (sin, cos)
/// pairs per harmonic, in the units of the fitted data.
struct HarmonicModel {
  double fundamental = 0.0;  // Hz
  std::size_t order = 0;
  std::vector<double> coefficients;
  double offset = 0.0;       // fitted constant, zero unless the offset was estimated
  std::size_t window_start = 0;
  std::size_t length = 0;
  double residual_power = 0.0;
  double condition = 1.0;    // of the design, from the R diagonal
  bool low_snr = false;      // every harmonic below 3x the residual RMS

  /// sqrt(s^2 + c^2) per harmonic.
  std::vector<double> amplitudes() const;
  /// Harmonic part (offset excluded) at n = 0..count-1, relative to window_start.
  std::vector<double> evaluate(std::size_t count, double fs) const;
};

struct AnlsConfig {
  std::size_t order = 3;
  double grid_lo = 0.1;            // Hz
  double grid_hi = 0.5;            // Hz
  double grid_step = 1.0 / 600.0;  // Hz (0.1 BPM)
  double window_s = 5.0;
  double step_s = 1.0;
  bool estimate_offset = true;     // fit a constant alongside the harmonics
  bool refine = true;              // polish the CPI fundamental off the grid

  std::vector<double> grid() const;
  void validate() const;
};

/// Per-subwindow fits over a whole record.
struct BreathingTrack {
  std::vector<HarmonicModel> windows;
  double window_s = 0.0;
  double step_s = 0.0;
  double sample_rate = 0.0;
  std::size_t window_samples = 0;
  std::size_t step_samples = 0;
};

/// N x 2K matrix with columns sin(2 pi k f n / fs), cos(2 pi k f n / fs).
Eigen::MatrixXd harmonic_matrix(double f, std::size_t order, std::size_t n, double fs);

/// Least-squares amplitudes at a fixed fundamental via Householder QR.
HarmonicModel fit_amplitudes(std::span<const double> segment, double fs, double f, std::size_t order,
                             bool estimate_offset = false);

/// Residual power of the least-squares harmonic fit at `f`, solved through
/// closed-form Gram sums in O(N * order). Unweighted, it agrees with
/// fit_amplitudes(...).residual_power up to rounding. With `hann_weighted` the
/// squared errors carry a symmetric Hann weight (normalised by N), which keeps
/// strong tones outside the model from pulling the minimum.
double residual_power(std::span<const double> segment, double fs, double f, std::size_t order,
                      bool estimate_offset = false, bool hann_weighted = false);

/// Grid search for the fundamental minimising the residual power.
/// Ties resolve to the lower frequency.
HarmonicModel estimate_breathing(std::span<const double> segment, double fs, const AnlsConfig& config = {});

/// Sliding-window estimates over the whole record.
BreathingTrack track_breathing(const PhaseSignal& phase, const AnlsConfig& config = {});

struct Reference {
  std::vector<double> s_ref;
  HarmonicModel model;                   // full-window refit at the median fundamental
  std::vector<double> subwindow_fundamentals;
};

/// Median fundamental of the subwindows inside [start, start + length), then a
/// single refit over that span. Uses `track` when given, otherwise fits the
/// subwindows directly. With `refine` set, the median is first moved to the
/// vertex of a parabola through the Hann-weighted full-span residual power at
/// the median and one grid step either side (moving at most two grid steps,
/// and only when the cost drops).
Reference reconstruct_reference(const PhaseSignal& phase, std::size_t start, std::size_t length,
                                const AnlsConfig& config = {}, const BreathingTrack* track = nullptr);

}  // namespace pulsecancel::anls
