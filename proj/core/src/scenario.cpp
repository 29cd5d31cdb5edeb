#include "pulsecancel/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "pulsecancel/error.hpp"
#include "pulsecancel/windowing.hpp"

namespace pulsecancel {

namespace synth {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require(bool ok, const std::string& msg) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, "scenario: " + msg);
}

void check_harmonics(const std::vector<Harmonic>& hs, const char* name) {
  for (const auto& h : hs) {
    require(std::isfinite(h.amplitude) && std::isfinite(h.phase), fmt::format("{} harmonic is not finite", name));
    require(h.amplitude >= 0, fmt::format("{} harmonic amplitude is negative", name));
  }
}

double raised_cosine(double x) { return 0.5 * (1.0 - std::cos(std::numbers::pi * std::clamp(x, 0.0, 1.0))); }

}  // namespace

std::string_view to_string(IntermodRule rule) noexcept {
  switch (rule) {
    case IntermodRule::HrMinusRr: return "HR-RR";
    case IntermodRule::HrPlusRr: return "HR+RR";
    case IntermodRule::HrPlus2Rr: return "HR+2RR";
    case IntermodRule::Explicit: return "explicit";
  }
  return "explicit";
}

IntermodRule parse_intermod_rule(std::string_view text) {
  for (IntermodRule r : {IntermodRule::HrMinusRr, IntermodRule::HrPlusRr, IntermodRule::HrPlus2Rr,
                         IntermodRule::Explicit}) {
    if (to_string(r) == text) return r;
  }
  throw Error(ErrorCode::InvalidData, fmt::format("unknown intermodulation rule '{}'", text));
}

double IntermodTone::frequency(double breathing_hz, double heartbeat_hz) const noexcept {
  switch (rule) {
    case IntermodRule::HrMinusRr: return heartbeat_hz - breathing_hz;
    case IntermodRule::HrPlusRr: return heartbeat_hz + breathing_hz;
    case IntermodRule::HrPlus2Rr: return heartbeat_hz + 2.0 * breathing_hz;
    case IntermodRule::Explicit: return explicit_frequency;
  }
  return explicit_frequency;
}

double IntermodTone::envelope(double t) const noexcept {
  if (active.empty()) return 1.0;
  double g = 0.0;
  for (const auto& iv : active) {
    if (t < iv.start_s || t > iv.end_s) continue;
    const double ramp = std::min(ramp_s, 0.5 * (iv.end_s - iv.start_s));
    if (ramp <= 0) return 1.0;
    const double rise = raised_cosine((t - iv.start_s) / ramp);
    const double fall = raised_cosine((iv.end_s - t) / ramp);
    g = std::max(g, std::min(rise, fall));
  }
  return g;
}

double Scenario::max_frequency() const noexcept {
  double f = 0.0;
  if (!breathing_harmonics.empty()) f = std::max(f, static_cast<double>(breathing_harmonics.size()) * breathing_fundamental);
  if (!heartbeat_harmonics.empty()) f = std::max(f, static_cast<double>(heartbeat_harmonics.size()) * heartbeat_fundamental);
  for (const auto& tone : intermod_tones) f = std::max(f, tone.frequency(breathing_fundamental, heartbeat_fundamental));
  return f;
}

std::size_t Scenario::frame_count() const {
  const double n = duration * radar.frame_rate();
  require(std::isfinite(n) && n >= 1.0, "duration must cover at least one frame");
  const double rounded = std::round(n);
  require(std::abs(n - rounded) <= 1e-6 * std::max(1.0, rounded),
          fmt::format("duration {} s is not a whole number of {} s frames", duration, radar.frame_period));
  return static_cast<std::size_t>(rounded);
}

void Scenario::validate() const {
  radar.validate();
  require(std::isfinite(breathing_fundamental) && breathing_fundamental >= 0.1 && breathing_fundamental <= 0.5,
          fmt::format("breathing fundamental {} Hz outside [0.1, 0.5]", breathing_fundamental));
  require(std::isfinite(heartbeat_fundamental) && heartbeat_fundamental >= 0.7 && heartbeat_fundamental <= 2.0,
          fmt::format("heartbeat fundamental {} Hz outside [0.7, 2.0]", heartbeat_fundamental));
  check_harmonics(breathing_harmonics, "breathing");
  check_harmonics(heartbeat_harmonics, "heartbeat");
  if (!override_amplitude_limits) {
    if (!breathing_harmonics.empty() && breathing_harmonics[0].amplitude > 0) {
      const double a = breathing_harmonics[0].amplitude;
      require(a >= 1e-4 && a <= 5e-3, fmt::format("breathing amplitude {} m outside [1e-4, 5e-3]", a));
    }
    if (!heartbeat_harmonics.empty() && heartbeat_harmonics[0].amplitude > 0) {
      const double b = heartbeat_harmonics[0].amplitude;
      require(b >= 1e-5 && b <= 5e-4, fmt::format("heartbeat amplitude {} m outside [1e-5, 5e-4]", b));
    }
  }
  for (const auto& tone : intermod_tones) {
    require(std::isfinite(tone.amplitude) && tone.amplitude >= 0, "intermodulation amplitude must be finite and >= 0");
    require(std::isfinite(tone.phase), "intermodulation phase must be finite");
    require(tone.frequency(breathing_fundamental, heartbeat_fundamental) > 0, "intermodulation frequency must be positive");
    require(tone.ramp_s >= 0, "intermodulation ramp must be non-negative");
    for (const auto& iv : tone.active) require(iv.end_s >= iv.start_s, "active interval ends before it starts");
  }
  const double max_range = radar.max_unambiguous_range();
  require(std::isfinite(nominal_distance) && nominal_distance > 0, "nominal distance must be positive");
  require(nominal_distance < max_range, fmt::format("nominal distance beyond unambiguous range {} m", max_range));
  for (const auto& path : clutter_paths) {
    require(path.range_m > 0 && path.range_m < max_range, "clutter range outside (0, unambiguous range)");
    require(std::isfinite(path.amplitude) && path.amplitude >= 0, "clutter amplitude must be finite and >= 0");
  }
  require(phase_noise_std >= 0 && complex_noise_std >= 0, "noise standard deviations must be >= 0");
  require(duration > 0, "duration must be positive");
  (void)frame_count();
  const double fmax = max_frequency();
  require(fmax <= radar.frame_rate() / 2.0,
          fmt::format("highest component {} Hz exceeds slow-time Nyquist {} Hz", fmax, radar.frame_rate() / 2.0));
}

std::vector<Harmonic> harmonic_series(double fundamental_amplitude, std::size_t count, double decay) {
  std::vector<Harmonic> out(count);
  double a = fundamental_amplitude;
  for (auto& h : out) {
    h.amplitude = a;
    a *= decay;
  }
  return out;
}

Scenario default_scenario() {
  Scenario s;
  s.breathing_harmonics = harmonic_series(1.0e-3, 4);
  s.heartbeat_harmonics = harmonic_series(1.5e-4, 2);
  return s;
}

DisplacementSignal synthesize_displacement(const Scenario& scenario, std::size_t n, double fs) {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "displacement needs at least two samples");
  if (!(fs > 0) || !std::isfinite(fs)) throw Error(ErrorCode::InvalidArgument, "sample rate must be positive");
  check_harmonics(scenario.breathing_harmonics, "breathing");
  check_harmonics(scenario.heartbeat_harmonics, "heartbeat");
  for (const auto& tone : scenario.intermod_tones) {
    require(std::isfinite(tone.amplitude) && std::isfinite(tone.phase), "intermodulation tone is not finite");
  }
  const double fmax = scenario.max_frequency();
  if (!(fs > 2.0 * fmax)) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("sample rate {} Hz does not exceed twice the highest component {} Hz", fs, fmax));
  }

  const double fb = scenario.breathing_fundamental;
  const double fh = scenario.heartbeat_fundamental;
  DisplacementComponents c;
  c.breathing.assign(n, 0.0);
  c.heartbeat.assign(n, 0.0);
  c.intermod.assign(n, 0.0);

  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    double b = 0.0;
    for (std::size_t k = 0; k < scenario.breathing_harmonics.size(); ++k) {
      const auto& h = scenario.breathing_harmonics[k];
      if (h.amplitude != 0.0) b += h.amplitude * std::sin(kTwoPi * static_cast<double>(k + 1) * fb * t + h.phase);
    }
    double hb = 0.0;
    for (std::size_t l = 0; l < scenario.heartbeat_harmonics.size(); ++l) {
      const auto& h = scenario.heartbeat_harmonics[l];
      if (h.amplitude != 0.0) hb += h.amplitude * std::sin(kTwoPi * static_cast<double>(l + 1) * fh * t + h.phase);
    }
    double im = 0.0;
    for (const auto& tone : scenario.intermod_tones) {
      if (tone.amplitude == 0.0) continue;
      const double g = tone.envelope(t);
      if (g != 0.0) im += g * tone.amplitude * std::sin(kTwoPi * tone.frequency(fb, fh) * t + tone.phase);
    }
    c.breathing[i] = b;
    c.heartbeat[i] = hb;
    c.intermod[i] = im;
  }

  DisplacementSignal d;
  d.sample_rate = fs;
  d.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) d.samples[i] = c.breathing[i] + c.heartbeat[i] + c.intermod[i];
  d.components = std::move(c);
  return d;
}

PhaseSignal displacement_to_phase(const DisplacementSignal& d, const RadarConfig& config) {
  const double lambda = config.wavelength();
  if (!std::isfinite(lambda) || !(lambda > 0)) throw Error(ErrorCode::InvalidArgument, "wavelength must be finite");
  const double scale = 4.0 * std::numbers::pi / lambda;
  PhaseSignal p;
  p.sample_rate = d.sample_rate;
  p.samples.resize(d.samples.size());
  std::transform(d.samples.begin(), d.samples.end(), p.samples.begin(), [scale](double x) { return scale * x; });
  return p;
}

std::vector<cplx> synthesize_slow_time(const PhaseSignal& theta, double complex_noise_std, double phase_noise_std,
                                       std::uint64_t seed) {
  if (complex_noise_std < 0 || phase_noise_std < 0) {
    throw Error(ErrorCode::InvalidArgument, "noise standard deviations must be >= 0");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double component_std = complex_noise_std / std::numbers::sqrt2;
  std::vector<cplx> out(theta.samples.size());
  for (std::size_t n = 0; n < out.size(); ++n) {
    double phase = theta.samples[n];
    if (phase_noise_std > 0) phase += phase_noise_std * normal(rng);
    cplx v = std::polar(1.0, phase);
    if (complex_noise_std > 0) {
      const double re = normal(rng);
      const double im = normal(rng);
      v += cplx(component_std * re, component_std * im);
    }
    out[n] = v;
  }
  return out;
}

RadarCube synthesize_radar_cube(const Scenario& scenario) {
  scenario.validate();
  const RadarConfig& cfg = scenario.radar;
  const std::size_t frames = scenario.frame_count();
  const std::size_t n_adc = cfg.adc_samples_per_chirp;
  const double fs_adc = cfg.adc_sample_rate;
  const double k_phase = 4.0 * std::numbers::pi / cfg.wavelength();
  // Fast-time phase is referenced to the centre of the ADC window.
  const double t_center = 0.5 * static_cast<double>(n_adc - 1) / fs_adc;

  const DisplacementSignal d = synthesize_displacement(scenario, frames, cfg.frame_rate());
  double peak_motion = 0.0;
  for (double x : d.samples) peak_motion = std::max(peak_motion, std::abs(x));
  const double max_range = cfg.max_unambiguous_range();
  if (scenario.nominal_distance + peak_motion > max_range) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("target at {} m beyond unambiguous range {} m", scenario.nominal_distance + peak_motion,
                            max_range));
  }

  auto add_tone = [&](std::span<cplx> out, double amplitude, double range_m, double extra_phase) {
    const double f_if = cfg.beat_frequency(range_m);
    const double start = kTwoPi * f_if * (-t_center) + k_phase * range_m + extra_phase;
    const cplx rot = std::polar(1.0, kTwoPi * f_if / fs_adc);
    cplx z = std::polar(amplitude, start);
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] += z;
      z *= rot;
    }
  };

  std::vector<cplx> clutter(n_adc, cplx{});
  for (const auto& path : scenario.clutter_paths) {
    if (path.amplitude != 0.0) add_tone(clutter, path.amplitude, path.range_m, 0.0);
  }

  RadarCube cube;
  cube.frames = frames;
  cube.fast_time = n_adc;
  cube.config = cfg;
  cube.iq.resize(frames * n_adc);

  std::mt19937_64 rng(scenario.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double component_std = scenario.complex_noise_std / std::numbers::sqrt2;
  for (std::size_t m = 0; m < frames; ++m) {
    auto row = cube.frame(m);
    std::copy(clutter.begin(), clutter.end(), row.begin());
    const double jitter = scenario.phase_noise_std > 0 ? scenario.phase_noise_std * normal(rng) : 0.0;
    if (cfg.transmit_power_scale != 0.0) {
      add_tone(row, cfg.transmit_power_scale, scenario.nominal_distance + d.samples[m], jitter);
    }
    if (scenario.complex_noise_std > 0) {
      for (auto& v : row) {
        const double re = normal(rng);
        const double im = normal(rng);
        v += cplx(component_std * re, component_std * im);
      }
    }
  }
  return cube;
}

HrTrace reference_trace(const Scenario& scenario, double cpi_s, double step_s) {
  if (cpi_s > scenario.duration + 1e-9) {
    throw Error(ErrorCode::InvalidArgument, "CPI longer than the scenario duration");
  }
  const WindowPlan plan = make_window_plan(scenario.frame_count(), scenario.radar.frame_rate(), cpi_s, step_s);
  HrTrace trace;
  trace.entries.reserve(plan.count);
  const double hr = hz_to_bpm(scenario.heartbeat_fundamental);
  for (std::size_t i = 0; i < plan.count; ++i) {
    trace.entries.push_back({plan.center_time(i), hr, TraceTag::Reference, 0.0});
  }
  return trace;
}

namespace {

struct FamilyRng {
  explicit FamilyRng(std::uint64_t seed) : rng(seed * 0x9E3779B97F4A7C15ULL + 0x2545F4914F6CDD1DULL) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
  double phase() { return uniform(0.0, kTwoPi); }
  std::mt19937_64 rng;
};

void randomize_phases(std::vector<Harmonic>& hs, FamilyRng& r) {
  for (auto& h : hs) h.phase = r.phase();
}

// Static wall behind the subject plus receiver noise, shared by all families.
void add_environment(Scenario& s, FamilyRng& r) {
  s.nominal_distance = r.uniform(0.8, 1.5);
  s.clutter_paths.push_back({r.uniform(2.0, 2.8), 2.0});
  s.complex_noise_std = 2.0;
  s.phase_noise_std = 0.02;
}

}  // namespace

Scenario make_family_scenario(std::string_view family, std::uint64_t seed, double duration_s) {
  FamilyRng r(seed);
  Scenario s;
  s.seed = seed;
  s.duration = duration_s;

  if (family == "masking") {
    const bool all_maskers = (seed % 2) == 1;
    // 3 * f_b >= 0.72 Hz keeps the third respiration harmonic inside the heartbeat band.
    s.breathing_fundamental = r.uniform(0.24, 0.29);
    // f1 = HR - RR lands within a fraction of a resolution cell of the 4th RR harmonic.
    s.heartbeat_fundamental = 5.0 * s.breathing_fundamental - r.uniform(0.01, 0.03);
    s.breathing_harmonics = harmonic_series(r.uniform(1.0e-3, 1.6e-3), 4);
    randomize_phases(s.breathing_harmonics, r);
    const double rr3 = s.breathing_harmonics[2].amplitude;
    s.heartbeat_harmonics = harmonic_series(rr3 * r.uniform(0.55, 0.8), 2);
    randomize_phases(s.heartbeat_harmonics, r);
    const double hb = s.heartbeat_harmonics[0].amplitude;

    std::vector<ActiveInterval> masked;
    double t = r.uniform(40.0, 60.0);
    while (t < duration_s) {
      const double len = r.uniform(25.0, 50.0);
      masked.push_back({t, std::min(t + len, duration_s)});
      t += len + r.uniform(25.0, 50.0);
    }
    auto tone = [&](IntermodRule rule, double rel) {
      IntermodTone tn;
      tn.rule = rule;
      tn.amplitude = hb * rel;
      tn.phase = r.phase();
      tn.active = masked;
      return tn;
    };
    s.intermod_tones.push_back(tone(IntermodRule::HrMinusRr, r.uniform(1.4, 2.2)));
    const double lo = all_maskers ? 1.4 : 0.3;
    const double hi = all_maskers ? 2.2 : 0.6;
    s.intermod_tones.push_back(tone(IntermodRule::HrPlusRr, r.uniform(lo, hi)));
    s.intermod_tones.push_back(tone(IntermodRule::HrPlus2Rr, r.uniform(lo, hi)));
  } else if (family == "harmonic" || family == "clean") {
    s.breathing_fundamental = r.uniform(0.2, 0.3);
    for (;;) {
      s.heartbeat_fundamental = r.uniform(1.0, 1.4);
      bool separated = true;
      for (int k = 1; k <= 5; ++k) {
        separated = separated && std::abs(s.heartbeat_fundamental - k * s.breathing_fundamental) >= 0.12;
      }
      if (separated) break;
    }
    const double decay = family == "harmonic" ? 0.5 : 0.2;
    s.breathing_harmonics = harmonic_series(r.uniform(1.0e-3, 1.6e-3), 4, decay);
    randomize_phases(s.breathing_harmonics, r);
    const double rr3 = family == "harmonic" ? s.breathing_harmonics[2].amplitude : 2.5e-4;
    s.heartbeat_harmonics = harmonic_series(rr3 * r.uniform(0.8, 1.25), 2);
    randomize_phases(s.heartbeat_harmonics, r);
  } else {
    throw Error(ErrorCode::InvalidArgument, fmt::format("unknown scenario family '{}'", family));
  }
  add_environment(s, r);
  s.validate();
  return s;
}

}  // namespace synth
}  // namespace pulsecancel
