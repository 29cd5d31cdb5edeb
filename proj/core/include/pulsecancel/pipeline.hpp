#pragma once

#include <string_view>
#include <vector>

#include "pulsecancel/ahet.hpp"
#include "pulsecancel/preprocess.hpp"
#include "pulsecancel/spectral.hpp"
#include "pulsecancel/types.hpp"

namespace pulsecancel {

enum class Method {
  Conventional,     // strongest peak before cancellation
  EcaConventional,  // strongest peak after cancellation
  Ahet,             // cancellation + harmonic-credibility tracker
};

std::string_view to_string(Method method) noexcept;
Method parse_method(std::string_view text);

struct PipelineConfig {
  preprocess::PreprocessConfig preprocess;
  ahet::TraceConfig trace;
};

HrTrace estimate_trace(const PhaseSignal& phase, const PipelineConfig& config, Method method);
HrTrace estimate_trace(const RadarCube& cube, const PipelineConfig& config, Method method);

struct WindowSpectrum {
  double center_s = 0.0;
  spectral::Spectrum spectrum;
};

/// Spectra of every analysis window, before (`cancelled` false) or after cancellation.
std::vector<WindowSpectrum> window_spectra(const PhaseSignal& phase, const PipelineConfig& config, bool cancelled);

}  // namespace pulsecancel
