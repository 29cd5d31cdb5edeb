#include "pulsecancel/pipeline.hpp"

#include <span>

#include <fmt/format.h>

#include "pulsecancel/anls.hpp"
#include "pulsecancel/eca.hpp"
#include "pulsecancel/error.hpp"
#include "pulsecancel/windowing.hpp"

namespace pulsecancel {

std::string_view to_string(Method method) noexcept {
  switch (method) {
    case Method::Conventional: return "conventional";
    case Method::EcaConventional: return "eca-conventional";
    case Method::Ahet: return "ahet";
  }
  return "unknown";
}

Method parse_method(std::string_view text) {
  if (text == "conventional") return Method::Conventional;
  if (text == "eca-conventional" || text == "eca") return Method::EcaConventional;
  if (text == "ahet") return Method::Ahet;
  throw Error(ErrorCode::InvalidArgument, fmt::format("unknown method '{}'", text));
}

HrTrace estimate_trace(const PhaseSignal& phase, const PipelineConfig& config, Method method) {
  switch (method) {
    case Method::Conventional: return ahet::conventional_trace(phase, config.trace);
    case Method::EcaConventional: return ahet::eca_conventional_trace(phase, config.trace);
    case Method::Ahet: return ahet::ahet_trace(phase, config.trace);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown method");
}

HrTrace estimate_trace(const RadarCube& cube, const PipelineConfig& config, Method method) {
  return estimate_trace(preprocess::phase_from_cube(cube, config.preprocess), config, method);
}

std::vector<WindowSpectrum> window_spectra(const PhaseSignal& phase, const PipelineConfig& config, bool cancelled) {
  const auto& tc = config.trace;
  const WindowPlan plan = make_window_plan(phase.size(), phase.sample_rate, tc.cpi_s, tc.step_s);
  std::optional<anls::BreathingTrack> track;
  if (cancelled) track = anls::track_breathing(phase, tc.anls);

  std::vector<WindowSpectrum> out;
  out.reserve(plan.count);
  for (std::size_t i = 0; i < plan.count; ++i) {
    const std::size_t start = plan.start(i);
    const std::span<const double> theta(phase.samples.data() + start, plan.window);
    std::vector<double> x(theta.begin(), theta.end());
    if (cancelled) x = ahet::cancel_window(phase, start, plan.window, tc, &*track).output;
    out.push_back({plan.center_time(i),
                   spectral::power_spectrum(x, phase.sample_rate, tc.spectrum.zero_pad_factor, tc.spectrum.taper)});
  }
  return out;
}

}  // namespace pulsecancel
