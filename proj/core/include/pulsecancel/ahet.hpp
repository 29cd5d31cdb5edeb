#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "pulsecancel/anls.hpp"
#include "pulsecancel/eca.hpp"
#include "pulsecancel/spectral.hpp"
#include "pulsecancel/types.hpp"

namespace pulsecancel::ahet {

struct AhetConfig {
  double ve = 0.1;                 // Hz, fundamental/harmonic deviation threshold
  double va = 0.1;                 // Hz, consecutive-estimate threshold
  double fund_lo = 0.7;            // Hz
  double fund_hi = 2.0;            // Hz
  double harmonic_ceiling = 4.0;   // Hz
  std::size_t stable_history_len = 5;

  void validate() const;
};

struct TrackerState {
  std::vector<double> stable_history;  // Hz, collected until h_bar freezes
  std::optional<double> h_bar;         // Hz
  std::optional<double> last_estimate; // Hz
};

struct Credibility {
  double delta = 0.0;  // |2 f_fund - f_harm|, Hz
  bool reliable = false;
};

Credibility credibility(double f_fund, double f_harm, double ve);

struct StepResult {
  double hr_hz = 0.0;
  TraceTag tag = TraceTag::Reliable1st;
  double delta_hz = 0.0;  // +inf when no pair was formed
  TrackerState state;
};

/// One tracker update on a spectrum covering [fund_lo, harmonic_ceiling].
StepResult ahet_step(const spectral::Spectrum& spectrum, const TrackerState& state, const AhetConfig& config = {});

/// Strongest peak in the fundamental band. Throws NoTarget when there is none.
double conventional_hr(const spectral::Spectrum& spectrum, const AhetConfig& config = {});

struct SpectrumConfig {
  std::size_t zero_pad_factor = 8;
  spectral::Taper taper = spectral::Taper::Hann;
};

struct TraceConfig {
  double cpi_s = 20.0;
  double step_s = 1.0;
  SpectrumConfig spectrum;
  anls::AnlsConfig anls;
  eca::EcaConfig eca;
  AhetConfig ahet;
};

/// Reference reconstruction and cancellation for one analysis window. The
/// window mean is removed first; lag columns cannot represent a constant.
eca::EcaResult cancel_window(const PhaseSignal& phase, std::size_t start, std::size_t length, const TraceConfig& config,
                             const anls::BreathingTrack* track = nullptr);

/// Per window: reference reconstruction, cancellation, spectrum, tracker.
HrTrace ahet_trace(const PhaseSignal& phase, const TraceConfig& config = {});

/// Strongest fundamental-band peak of the uncancelled phase.
HrTrace conventional_trace(const PhaseSignal& phase, const TraceConfig& config = {});

/// Strongest fundamental-band peak after cancellation.
HrTrace eca_conventional_trace(const PhaseSignal& phase, const TraceConfig& config = {});

}  // namespace pulsecancel::ahet
