#include "pulsecancel/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <fmt/format.h>

#include "fft.hpp"
#include "pulsecancel/error.hpp"

namespace pulsecancel::spectral {

std::string_view to_string(Taper taper) noexcept {
  return taper == Taper::Hann ? "hann" : "rectangular";
}

Taper parse_taper(std::string_view text) {
  if (text == "hann") return Taper::Hann;
  if (text == "rectangular" || text == "rect" || text == "none") return Taper::Rectangular;
  throw Error(ErrorCode::InvalidArgument, fmt::format("unknown taper '{}'", text));
}

std::size_t Spectrum::nearest_bin(double hz) const noexcept {
  if (power.empty() || resolution <= 0) return 0;
  const double idx = std::round(hz / resolution);
  if (idx <= 0) return 0;
  return std::min(static_cast<std::size_t>(idx), power.size() - 1);
}

Spectrum make_spectrum(std::vector<double> power, double resolution) {
  if (!(resolution > 0)) throw Error(ErrorCode::InvalidArgument, "spectrum resolution must be positive");
  Spectrum s;
  s.resolution = resolution;
  s.frequencies.resize(power.size());
  for (std::size_t i = 0; i < power.size(); ++i) s.frequencies[i] = static_cast<double>(i) * resolution;
  s.power = std::move(power);
  s.taper = Taper::Rectangular;
  return s;
}

Spectrum power_spectrum(std::span<const double> signal, double fs, std::size_t zero_pad_factor, Taper taper) {
  const std::size_t n = signal.size();
  if (n < 16) throw Error(ErrorCode::InvalidArgument, fmt::format("spectrum needs >= 16 samples, got {}", n));
  if (!(fs > 0)) throw Error(ErrorCode::InvalidArgument, "sample rate must be positive");
  if (zero_pad_factor == 0) throw Error(ErrorCode::InvalidArgument, "zero_pad_factor must be >= 1");

  const std::size_t len = n * zero_pad_factor;
  std::vector<double> buf(len, 0.0);
  const double mu = std::accumulate(signal.begin(), signal.end(), 0.0) / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    double w = 1.0;
    if (taper == Taper::Hann) w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1));
    buf[i] = (signal[i] - mu) * w;
  }
  std::vector<cplx> spec(len / 2 + 1);
  detail::rfft_forward(buf, spec);

  Spectrum s;
  s.resolution = fs / static_cast<double>(len);
  s.window_s = static_cast<double>(n) / fs;
  s.zero_pad_factor = zero_pad_factor;
  s.taper = taper;
  s.power.resize(spec.size());
  s.frequencies.resize(spec.size());
  const double inv = 1.0 / static_cast<double>(len);
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const bool edge = k == 0 || (len % 2 == 0 && k == len / 2);
    s.power[k] = (edge ? 1.0 : 2.0) * std::norm(spec[k]) * inv;
    s.frequencies[k] = static_cast<double>(k) * s.resolution;
  }
  return s;
}

PeakList top_peaks(const Spectrum& spectrum, double band_lo, double band_hi, std::size_t k) {
  PeakList out;
  const auto& p = spectrum.power;
  if (p.size() < 3 || k == 0 || !(band_lo <= band_hi)) return out;
  const double df = spectrum.resolution;

  const auto first = static_cast<std::size_t>(std::max(0.0, std::ceil(band_lo / df - 1e-9)));
  const auto last_d = std::floor(band_hi / df + 1e-9);
  if (last_d < 0) return out;
  const std::size_t last = std::min(static_cast<std::size_t>(last_d), p.size() - 1);

  std::vector<std::size_t> maxima;
  for (std::size_t i = first + 1; i + 1 <= last && i + 1 < p.size(); ++i) {
    if (p[i] > p[i - 1] && p[i] > p[i + 1]) maxima.push_back(i);
  }
  // Equal powers order by ascending frequency.
  const std::size_t keep = std::min(k, maxima.size());
  std::partial_sort(maxima.begin(), maxima.begin() + static_cast<std::ptrdiff_t>(keep), maxima.end(),
                    [&](std::size_t x, std::size_t y) { return p[x] > p[y] || (p[x] == p[y] && x < y); });
  maxima.resize(keep);

  for (const std::size_t i : maxima) {
    Peak pk;
    pk.bin = i;
    double offset = 0.0;
    double value = p[i];
    if (p[i - 1] > 0 && p[i + 1] > 0) {
      const double a = std::log(p[i - 1]), b = std::log(p[i]), c = std::log(p[i + 1]);
      const double denom = a - 2.0 * b + c;
      if (denom < 0) {
        offset = std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
        value = std::exp(b - 0.25 * (a - c) * offset);
      }
    } else {
      const double denom = p[i - 1] - 2.0 * p[i] + p[i + 1];
      if (denom < 0) {
        offset = std::clamp(0.5 * (p[i - 1] - p[i + 1]) / denom, -0.5, 0.5);
        value = p[i] - 0.25 * (p[i - 1] - p[i + 1]) * offset;
      }
    }
    pk.frequency = (static_cast<double>(i) + offset) * df;
    pk.power = value;
    out.peaks.push_back(pk);
  }
  return out;
}

std::optional<Peak> strongest_peak(const Spectrum& spectrum, double band_lo, double band_hi) {
  PeakList l = top_peaks(spectrum, band_lo, band_hi, 1);
  if (l.empty()) return std::nullopt;
  return l[0];
}

}  // namespace pulsecancel::spectral
