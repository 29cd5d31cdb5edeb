#pragma once

#include <cstddef>

namespace pulsecancel {

/// Sliding-window layout over a uniformly sampled record.
struct WindowPlan {
  std::size_t window = 0;  // samples per window
  std::size_t step = 0;    // samples between window starts
  std::size_t count = 0;   // number of complete windows
  double sample_rate = 0.0;

  std::size_t start(std::size_t i) const noexcept { return i * step; }
  /// Centre of window i in seconds from the record start.
  double center_time(std::size_t i) const noexcept {
    return (static_cast<double>(start(i)) + static_cast<double>(window) / 2.0) / sample_rate;
  }
};

/// Windows of `window_s` seconds every `step_s` seconds over `total` samples.
/// Throws when the window is longer than the record or the step is not positive.
WindowPlan make_window_plan(std::size_t total, double sample_rate, double window_s, double step_s);

}  // namespace pulsecancel
