#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace pulsecancel::spectral {

enum class Taper { Hann, Rectangular };

std::string_view to_string(Taper taper) noexcept;
Taper parse_taper(std::string_view text);

/// One-sided power spectrum on a uniform grid starting at 0 Hz.
struct Spectrum {
  std::vector<double> frequencies;  // Hz
  std::vector<double> power;
  double resolution = 0.0;          // grid spacing, Hz
  double window_s = 0.0;
  std::size_t zero_pad_factor = 1;
  Taper taper = Taper::Hann;

  std::size_t size() const noexcept { return power.size(); }
  /// Native (unpadded) spacing fs / N.
  double native_resolution() const noexcept { return resolution * static_cast<double>(zero_pad_factor); }
  /// Index of the grid point closest to `hz`, clamped to the grid.
  std::size_t nearest_bin(double hz) const noexcept;
};

/// Builds a spectrum from an explicit power array with spacing `resolution`.
Spectrum make_spectrum(std::vector<double> power, double resolution);

/// Mean-removed, tapered, zero-padded |FFT|^2, one-sided. Scaled so that the
/// sum over the grid equals the energy of the tapered signal.
Spectrum power_spectrum(std::span<const double> signal, double fs, std::size_t zero_pad_factor = 8,
                        Taper taper = Taper::Hann);

struct Peak {
  double frequency = 0.0;  // Hz, after interpolation
  double power = 0.0;      // interpolated
  std::size_t bin = 0;     // host grid index
};

/// Peaks in descending order of host-bin power.
struct PeakList {
  std::vector<Peak> peaks;

  bool empty() const noexcept { return peaks.empty(); }
  std::size_t size() const noexcept { return peaks.size(); }
  const Peak& operator[](std::size_t i) const { return peaks[i]; }
};

/// Up to k strict local maxima with host bins inside [band_lo, band_hi]; the
/// first and last in-band bins never qualify. Each peak is refined by a
/// three-point parabola through the log powers. Equal powers order by
/// ascending frequency.
PeakList top_peaks(const Spectrum& spectrum, double band_lo, double band_hi, std::size_t k);

/// Strongest peak in the band, if any.
std::optional<Peak> strongest_peak(const Spectrum& spectrum, double band_lo, double band_hi);

}  // namespace pulsecancel::spectral
