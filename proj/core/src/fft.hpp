#pragma once

#include <span>

#include "pulsecancel/types.hpp"

namespace pulsecancel::detail {

// Thin wrappers over FFTW. Plans are cached per length behind a mutex; execution
// uses the new-array interface so concurrent callers are safe.

/// In-place forward complex DFT (no scaling).
void fft_forward(std::span<cplx> data);

/// Real-to-complex forward DFT. `out` must hold in.size() / 2 + 1 values.
void rfft_forward(std::span<const double> in, std::span<cplx> out);

}  // namespace pulsecancel::detail
