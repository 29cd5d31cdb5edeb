#include "pulsecancel/ahet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>

#include <fmt/format.h>

#include "pulsecancel/error.hpp"
#include "pulsecancel/windowing.hpp"

namespace pulsecancel::ahet {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Pair {
  double hr = 0.0;
  double delta = kInf;
  bool reliable = false;
};

Pair pair_from(const spectral::Spectrum& s, double f_fund, const AhetConfig& c) {
  Pair p;
  const auto harm = spectral::strongest_peak(s, 2.0 * f_fund - c.ve, c.harmonic_ceiling);
  if (!harm) return p;
  const Credibility cr = credibility(f_fund, harm->frequency, c.ve);
  p.delta = cr.delta;
  p.reliable = cr.reliable;
  p.hr = 0.5 * f_fund + 0.5 * (harm->frequency / 2.0);
  return p;
}

// Narrowed search around the stable mean.
StepResult refine(const spectral::Spectrum& s, const TrackerState& st, const AhetConfig& c) {
  const double hb = *st.h_bar;
  const double lo = std::max(c.fund_lo, hb - c.va);
  const double hi = std::min(c.fund_hi, hb + c.va);
  const auto p1 = spectral::strongest_peak(s, lo, hi);
  const auto p2 = spectral::strongest_peak(s, 2.0 * (hb - c.va), std::min(c.harmonic_ceiling, 2.0 * (hb + c.va)));
  StepResult r;
  r.tag = TraceTag::Refined;
  r.delta_hz = kInf;
  if (p1 && p2) {
    r.hr_hz = 0.5 * p1->frequency + 0.5 * (p2->frequency / 2.0);
    r.delta_hz = std::abs(2.0 * p1->frequency - p2->frequency);
  } else if (p1) {
    r.hr_hz = p1->frequency;
  } else if (p2) {
    r.hr_hz = p2->frequency / 2.0;
  } else {
    r.hr_hz = st.last_estimate.value_or(hb);
  }
  return r;
}

struct WindowSpan {
  std::size_t start;
  std::size_t length;
  double center;
};

std::vector<WindowSpan> windows_for(const PhaseSignal& phase, const TraceConfig& cfg) {
  const WindowPlan plan = make_window_plan(phase.size(), phase.sample_rate, cfg.cpi_s, cfg.step_s);
  std::vector<WindowSpan> out;
  out.reserve(plan.count);
  for (std::size_t i = 0; i < plan.count; ++i) out.push_back({plan.start(i), plan.window, plan.center_time(i)});
  return out;
}

spectral::Spectrum spectrum_of(std::span<const double> x, double fs, const SpectrumConfig& c) {
  return spectral::power_spectrum(x, fs, c.zero_pad_factor, c.taper);
}

TraceEntry held_entry(double t, const std::optional<double>& last, const AhetConfig& c) {
  const double hz = last.value_or(0.5 * (c.fund_lo + c.fund_hi));
  return {t, hz_to_bpm(hz), TraceTag::Held, kInf};
}

template <typename SignalFn>
HrTrace peak_trace(const PhaseSignal& phase, const TraceConfig& cfg, SignalFn&& window_signal) {
  cfg.ahet.validate();
  HrTrace trace;
  std::optional<double> last;
  for (const auto& w : windows_for(phase, cfg)) {
    try {
      const std::vector<double> x = window_signal(w.start, w.length);
      const double hz = conventional_hr(spectrum_of(x, phase.sample_rate, cfg.spectrum), cfg.ahet);
      trace.entries.push_back({w.center, hz_to_bpm(hz), TraceTag::Peak, kInf});
      last = hz;
    } catch (const Error&) {
      trace.entries.push_back(held_entry(w.center, last, cfg.ahet));
    }
  }
  return trace;
}

}  // namespace

void AhetConfig::validate() const {
  if (!(ve > 0 && va > 0)) throw Error(ErrorCode::InvalidArgument, "V_e and V_a must be positive");
  if (!(fund_lo > 0 && fund_lo < fund_hi && 2.0 * fund_lo < harmonic_ceiling)) {
    throw Error(ErrorCode::InvalidArgument, "fundamental band and harmonic ceiling are not ordered");
  }
  if (stable_history_len == 0) throw Error(ErrorCode::InvalidArgument, "stable_history_len must be >= 1");
}

Credibility credibility(double f_fund, double f_harm, double ve) {
  const double delta = std::abs(2.0 * f_fund - f_harm);
  return {delta, delta <= ve};
}

StepResult ahet_step(const spectral::Spectrum& spectrum, const TrackerState& state, const AhetConfig& config) {
  config.validate();
  const auto fund = spectral::top_peaks(spectrum, config.fund_lo, config.fund_hi, 2);

  StepResult r;
  bool done = false;
  double first_delta = kInf;
  for (std::size_t i = 0; i < fund.size() && !done; ++i) {
    const Pair p = pair_from(spectrum, fund[i].frequency, config);
    if (i == 0) first_delta = p.delta;
    if (p.reliable) {
      r.hr_hz = p.hr;
      r.delta_hz = p.delta;
      r.tag = i == 0 ? TraceTag::Reliable1st : TraceTag::Reliable2nd;
      done = true;
    }
  }

  const bool jumped = done && state.last_estimate && std::abs(r.hr_hz - *state.last_estimate) > config.va;
  if ((!done || jumped) && state.h_bar) {
    r = refine(spectrum, state, config);
  } else if (!done) {
    if (state.last_estimate) {
      r.hr_hz = *state.last_estimate;
      r.tag = TraceTag::Held;
    } else if (!fund.empty()) {
      r.hr_hz = fund[0].frequency;
      r.tag = TraceTag::Peak;
    } else {
      r.hr_hz = 0.5 * (config.fund_lo + config.fund_hi);
      r.tag = TraceTag::Held;
    }
    r.delta_hz = first_delta;
  }
  r.hr_hz = std::clamp(r.hr_hz, config.fund_lo, config.fund_hi);

  r.state = state;
  const bool reliable = r.tag == TraceTag::Reliable1st || r.tag == TraceTag::Reliable2nd;
  const bool steady = !state.last_estimate || std::abs(r.hr_hz - *state.last_estimate) <= config.va;
  if (reliable && steady && !r.state.h_bar) {
    r.state.stable_history.push_back(r.hr_hz);
    if (r.state.stable_history.size() >= config.stable_history_len) {
      const auto& h = r.state.stable_history;
      r.state.h_bar = std::accumulate(h.begin(), h.end(), 0.0) / static_cast<double>(h.size());
    }
  }
  r.state.last_estimate = r.hr_hz;
  return r;
}

double conventional_hr(const spectral::Spectrum& spectrum, const AhetConfig& config) {
  const auto p = spectral::strongest_peak(spectrum, config.fund_lo, config.fund_hi);
  if (!p) {
    throw Error(ErrorCode::NoTarget, fmt::format("no spectral peak in [{}, {}] Hz", config.fund_lo, config.fund_hi));
  }
  return p->frequency;
}

eca::EcaResult cancel_window(const PhaseSignal& phase, std::size_t start, std::size_t length, const TraceConfig& cfg,
                             const anls::BreathingTrack* track) {
  const auto ref = anls::reconstruct_reference(phase, start, length, cfg.anls, track);
  std::vector<double> theta(phase.samples.begin() + static_cast<std::ptrdiff_t>(start),
                            phase.samples.begin() + static_cast<std::ptrdiff_t>(start + length));
  const double mean = std::accumulate(theta.begin(), theta.end(), 0.0) / static_cast<double>(length);
  for (double& v : theta) v -= mean;
  return eca::eca_cancel(theta, std::span<const double>(ref.s_ref), cfg.eca);
}

HrTrace ahet_trace(const PhaseSignal& phase, const TraceConfig& cfg) {
  cfg.ahet.validate();
  const auto windows = windows_for(phase, cfg);
  const anls::BreathingTrack track = anls::track_breathing(phase, cfg.anls);

  HrTrace trace;
  TrackerState state;
  for (const auto& w : windows) {
    try {
      const auto cancelled = cancel_window(phase, w.start, w.length, cfg, &track);
      const auto step = ahet_step(spectrum_of(cancelled.output, phase.sample_rate, cfg.spectrum), state, cfg.ahet);
      state = step.state;
      trace.entries.push_back({w.center, hz_to_bpm(step.hr_hz), step.tag, step.delta_hz});
    } catch (const Error&) {
      trace.entries.push_back(held_entry(w.center, state.last_estimate, cfg.ahet));
    }
  }
  return trace;
}

HrTrace conventional_trace(const PhaseSignal& phase, const TraceConfig& cfg) {
  return peak_trace(phase, cfg, [&](std::size_t start, std::size_t length) {
    return std::vector<double>(phase.samples.begin() + static_cast<std::ptrdiff_t>(start),
                               phase.samples.begin() + static_cast<std::ptrdiff_t>(start + length));
  });
}

HrTrace eca_conventional_trace(const PhaseSignal& phase, const TraceConfig& cfg) {
  const anls::BreathingTrack track = anls::track_breathing(phase, cfg.anls);
  return peak_trace(phase, cfg, [&](std::size_t start, std::size_t length) {
    return cancel_window(phase, start, length, cfg, &track).output;
  });
}

}  // namespace pulsecancel::ahet
