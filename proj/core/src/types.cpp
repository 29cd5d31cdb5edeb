#include "pulsecancel/types.hpp"

#include <cmath>

#include <fmt/format.h>

#include "pulsecancel/error.hpp"
#include "pulsecancel/windowing.hpp"

namespace pulsecancel {

double RadarConfig::range_bin_width() const noexcept {
  const double bin_hz = adc_sample_rate / static_cast<double>(adc_samples_per_chirp);
  return kSpeedOfLight * bin_hz / (2.0 * chirp_slope);
}

double RadarConfig::beat_frequency(double range_m) const noexcept {
  return 2.0 * chirp_slope * range_m / kSpeedOfLight;
}

double RadarConfig::max_unambiguous_range() const noexcept {
  return kSpeedOfLight * (adc_sample_rate / 2.0) / (2.0 * chirp_slope);
}

void RadarConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidArgument, "radar config: " + msg); };
  const double fields[] = {carrier_frequency, chirp_slope, bandwidth, chirp_duration,
                           adc_sample_rate, frame_period, transmit_power_scale};
  for (double v : fields) {
    if (!std::isfinite(v)) fail("non-finite parameter");
  }
  if (carrier_frequency <= 0) fail("carrier_frequency must be positive");
  if (chirp_slope <= 0) fail("chirp_slope must be positive");
  if (adc_samples_per_chirp < 2) fail("adc_samples_per_chirp must be at least 2");
  if (adc_sample_rate <= 0) fail("adc_sample_rate must be positive");
  if (frame_period <= 0) fail("frame_period must be positive");
  if (transmit_power_scale < 0) fail("transmit_power_scale must be non-negative");
  const double swept = chirp_slope * (static_cast<double>(adc_samples_per_chirp) / adc_sample_rate);
  if (std::abs(bandwidth - swept) > 1e-9 * std::abs(swept)) {
    fail(fmt::format("bandwidth {} Hz disagrees with slope x ADC window = {} Hz", bandwidth, swept));
  }
  const double lambda = wavelength();
  if (!(lambda > 0) || !std::isfinite(lambda)) fail("wavelength must be positive and finite");
}

void RadarCube::validate() const {
  if (iq.size() != frames * fast_time) {
    throw Error(ErrorCode::InvalidData,
                fmt::format("radar cube holds {} samples, expected {} x {}", iq.size(), frames, fast_time));
  }
  for (const cplx& v : iq) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      throw Error(ErrorCode::InvalidData, "radar cube contains non-finite samples");
    }
  }
}

std::string_view to_string(TraceTag tag) noexcept {
  switch (tag) {
    case TraceTag::Reliable1st: return "reliable-1st-peak";
    case TraceTag::Reliable2nd: return "reliable-2nd-peak";
    case TraceTag::Refined: return "refined";
    case TraceTag::Peak: return "peak";
    case TraceTag::Held: return "held";
    case TraceTag::Reference: return "reference";
  }
  return "reference";
}

TraceTag parse_trace_tag(std::string_view text) {
  for (TraceTag t : {TraceTag::Reliable1st, TraceTag::Reliable2nd, TraceTag::Refined, TraceTag::Peak,
                     TraceTag::Held, TraceTag::Reference}) {
    if (to_string(t) == text) return t;
  }
  throw Error(ErrorCode::InvalidData, fmt::format("unknown trace tag '{}'", text));
}

WindowPlan make_window_plan(std::size_t total, double sample_rate, double window_s, double step_s) {
  if (!(sample_rate > 0) || !(window_s > 0) || !(step_s > 0)) {
    throw Error(ErrorCode::InvalidArgument, "window, step and sample rate must be positive");
  }
  WindowPlan plan;
  plan.sample_rate = sample_rate;
  plan.window = static_cast<std::size_t>(std::llround(window_s * sample_rate));
  plan.step = static_cast<std::size_t>(std::llround(step_s * sample_rate));
  if (plan.window == 0 || plan.step == 0) {
    throw Error(ErrorCode::InvalidArgument, "window and step must span at least one sample");
  }
  if (plan.window > total) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("window of {} samples exceeds record of {} samples", plan.window, total));
  }
  plan.count = (total - plan.window) / plan.step + 1;
  return plan;
}

}  // namespace pulsecancel
