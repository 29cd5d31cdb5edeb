#include "pulsecancel/preprocess.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include <fmt/format.h>

#include "fft.hpp"
#include "pulsecancel/error.hpp"

namespace pulsecancel::preprocess {
namespace {

std::vector<double> hann(std::size_t n) {
  std::vector<double> w(n);
  const double denom = static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / denom);
  return w;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

double mean_magnitude(const std::vector<cplx>& z) {
  double s = 0.0;
  for (const cplx& v : z) s += std::abs(v);
  return z.empty() ? 0.0 : s / static_cast<double>(z.size());
}

double mean(std::span<const double> x) { return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size()); }

}  // namespace

std::vector<cplx> RangeProfiles::raw_bin(std::size_t bin) const {
  std::vector<cplx> out(frames);
  for (std::size_t f = 0; f < frames; ++f) out[f] = values[f * bins + bin] + static_clutter[bin];
  return out;
}

std::vector<cplx> RangeProfiles::cancelled_bin(std::size_t bin) const {
  std::vector<cplx> out(frames);
  for (std::size_t f = 0; f < frames; ++f) out[f] = values[f * bins + bin];
  return out;
}

std::vector<cplx> cancel_static(std::vector<cplx>& values, std::size_t frames, std::size_t bins) {
  std::vector<cplx> means(bins, cplx(0.0, 0.0));
  if (frames == 0) return means;
  for (std::size_t f = 0; f < frames; ++f)
    for (std::size_t b = 0; b < bins; ++b) means[b] += values[f * bins + b];
  for (auto& m : means) m /= static_cast<double>(frames);
  for (std::size_t f = 0; f < frames; ++f)
    for (std::size_t b = 0; b < bins; ++b) values[f * bins + b] -= means[b];
  return means;
}

RangeProfiles range_profiles(const RadarCube& cube) {
  cube.validate();
  const std::size_t n = cube.fast_time;
  if (n < 8) throw Error(ErrorCode::InvalidArgument, fmt::format("fast_time must be >= 8, got {}", n));

  RangeProfiles p;
  p.frames = cube.frames;
  p.bins = n / 2;
  p.bin_width = cube.config.range_bin_width();
  p.sample_rate_slow = cube.config.frame_rate();
  p.values.resize(p.frames * p.bins);

  const auto w = hann(n);
  std::vector<cplx> buf(n);
  for (std::size_t f = 0; f < cube.frames; ++f) {
    const auto row = cube.frame(f);
    for (std::size_t i = 0; i < n; ++i) buf[i] = row[i] * w[i];
    detail::fft_forward(buf);
    std::copy_n(buf.begin(), p.bins, p.values.begin() + static_cast<std::ptrdiff_t>(f * p.bins));
  }
  p.static_clutter = cancel_static(p.values, p.frames, p.bins);
  return p;
}

std::size_t detect_target_bin(const RangeProfiles& profiles, double min_range, double max_range) {
  if (!(min_range <= max_range)) throw Error(ErrorCode::InvalidArgument, "range gate must satisfy min <= max");
  std::size_t best = profiles.bins;
  double best_power = 0.0;
  bool any_bin = false;
  for (std::size_t b = 0; b < profiles.bins; ++b) {
    const double r = profiles.bin_range(b);
    if (r < min_range || r > max_range) continue;
    any_bin = true;
    double power = 0.0;
    for (std::size_t f = 0; f < profiles.frames; ++f) power += std::norm(profiles.at(f, b));
    power /= static_cast<double>(std::max<std::size_t>(profiles.frames, 1));
    if (power > best_power) {
      best_power = power;
      best = b;
    }
  }
  if (!any_bin) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("range gate [{}, {}] m contains no bins", min_range, max_range));
  }
  if (best == profiles.bins) {
    throw Error(ErrorCode::NoTarget, fmt::format("no target: zero power in gate [{}, {}] m", min_range, max_range));
  }
  return best;
}

void unwrap(std::span<double> phase) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  if (phase.empty()) return;
  double prev_raw = phase[0];
  double offset = 0.0;
  for (std::size_t i = 1; i < phase.size(); ++i) {
    const double raw = phase[i];
    const double d = raw - prev_raw;
    if (std::abs(d) > std::numbers::pi) offset -= kTwoPi * std::round(d / kTwoPi);
    prev_raw = raw;
    phase[i] = raw + offset;
  }
}

PhaseSignal extract_phase(std::span<const cplx> slow_time, double sample_rate) {
  PhaseSignal out;
  out.sample_rate = sample_rate;
  out.samples.resize(slow_time.size());
  double prev = 0.0;
  for (std::size_t i = 0; i < slow_time.size(); ++i) {
    const cplx z = slow_time[i];
    if (z.real() == 0.0 && z.imag() == 0.0) {
      out.samples[i] = prev;
      ++out.carried_samples;
    } else {
      out.samples[i] = std::atan2(z.imag(), z.real());
    }
    prev = out.samples[i];
  }
  unwrap(out.samples);
  return out;
}

PhaseSignal extract_phase(const RangeProfiles& profiles, std::size_t bin) {
  if (bin >= profiles.bins) throw Error(ErrorCode::InvalidArgument, fmt::format("bin {} out of range", bin));
  const auto series = profiles.raw_bin(bin);
  PhaseSignal out = extract_phase(series, profiles.sample_rate_slow);
  out.source_bin = bin;
  return out;
}

PhaseSignal enhance_phase(const RangeProfiles& profiles, std::size_t target_bin, std::size_t half_width,
                          double min_corr, double min_magnitude) {
  PhaseSignal target = extract_phase(profiles, target_bin);
  if (half_width == 0 || target.samples.size() < 2) return target;

  const std::size_t lo = target_bin >= half_width ? target_bin - half_width : 0;
  const std::size_t hi = std::min(profiles.bins - 1, target_bin + half_width);
  const double target_mean = mean(target.samples);
  const double magnitude_floor = min_magnitude * mean_magnitude(profiles.raw_bin(target_bin));

  std::vector<double> acc(target.samples.size());
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] = target.samples[i] - target_mean;
  double weight_sum = 1.0;
  std::size_t contributors = 0;

  for (std::size_t b = lo; b <= hi; ++b) {
    if (b == target_bin) continue;
    if (mean_magnitude(profiles.raw_bin(b)) < magnitude_floor) continue;
    const PhaseSignal nb = extract_phase(profiles, b);
    const double rho = pearson(target.samples, nb.samples);
    if (!(rho >= min_corr)) continue;
    const double m = mean(nb.samples);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += rho * (nb.samples[i] - m);
    weight_sum += rho;
    target.carried_samples += nb.carried_samples;
    ++contributors;
  }
  if (contributors == 0) return target;

  for (std::size_t i = 0; i < acc.size(); ++i) target.samples[i] = acc[i] / weight_sum + target_mean;
  target.enhanced = true;
  return target;
}

PhaseSignal phase_from_cube(const RadarCube& cube, const PreprocessConfig& config) {
  const RangeProfiles profiles = range_profiles(cube);
  const std::size_t bin = detect_target_bin(profiles, config.gate_min, config.gate_max);
  return enhance_phase(profiles, bin, config.enhance_width, config.min_corr, config.min_magnitude);
}

}  // namespace pulsecancel::preprocess
