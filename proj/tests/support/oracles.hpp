#pragma once

// Reference implementations used only by the tests. They are deliberately
// naive (long double, O(N^2), normal equations) and share no code with the
// library.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace oracle {

using ld = long double;
constexpr ld kPi = 3.141592653589793238462643383279502884L;

inline std::vector<std::complex<ld>> naive_dft(std::span<const std::complex<double>> x) {
  const std::size_t n = x.size();
  std::vector<std::complex<ld>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<ld> acc = 0;
    for (std::size_t t = 0; t < n; ++t) {
      const ld a = -2 * kPi * static_cast<ld>((k * t) % n) / static_cast<ld>(n);
      acc += std::complex<ld>(x[t].real(), x[t].imag()) * std::complex<ld>(std::cos(a), std::sin(a));
    }
    out[k] = acc;
  }
  return out;
}

/// DTFT of a real sequence at one frequency (cycles per sample).
inline std::complex<ld> dtft(std::span<const double> x, ld cycles_per_sample) {
  std::complex<ld> acc = 0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    const ld a = -2 * kPi * cycles_per_sample * static_cast<ld>(t);
    acc += static_cast<ld>(x[t]) * std::complex<ld>(std::cos(a), std::sin(a));
  }
  return acc;
}

/// Column-major dense matrix in long double.
struct Mat {
  std::size_t rows = 0, cols = 0;
  std::vector<ld> a;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0) {}
  ld& operator()(std::size_t i, std::size_t j) { return a[j * rows + i]; }
  ld operator()(std::size_t i, std::size_t j) const { return a[j * rows + i]; }
};

/// Least squares by normal equations and Gaussian elimination with partial
/// pivoting, all in long double.
inline std::vector<ld> lstsq(const Mat& x, std::span<const double> y) {
  const std::size_t m = x.cols;
  std::vector<ld> g(m * m, 0), rhs(m, 0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      ld s = 0;
      for (std::size_t r = 0; r < x.rows; ++r) s += x(r, i) * x(r, j);
      g[i * m + j] = s;
    }
    ld s = 0;
    for (std::size_t r = 0; r < x.rows; ++r) s += x(r, i) * static_cast<ld>(y[r]);
    rhs[i] = s;
  }
  for (std::size_t c = 0; c < m; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < m; ++r)
      if (std::fabs(g[r * m + c]) > std::fabs(g[piv * m + c])) piv = r;
    if (g[piv * m + c] == 0) throw std::runtime_error("oracle: singular normal equations");
    for (std::size_t j = 0; j < m; ++j) std::swap(g[c * m + j], g[piv * m + j]);
    std::swap(rhs[c], rhs[piv]);
    for (std::size_t r = c + 1; r < m; ++r) {
      const ld f = g[r * m + c] / g[c * m + c];
      for (std::size_t j = c; j < m; ++j) g[r * m + j] -= f * g[c * m + j];
      rhs[r] -= f * rhs[c];
    }
  }
  std::vector<ld> w(m);
  for (std::size_t c = m; c-- > 0;) {
    ld s = rhs[c];
    for (std::size_t j = c + 1; j < m; ++j) s -= g[c * m + j] * w[j];
    w[c] = s / g[c * m + c];
  }
  return w;
}

/// y - X * lstsq(X, y).
inline std::vector<double> residual(const Mat& x, std::span<const double> y) {
  const auto w = lstsq(x, y);
  std::vector<double> out(y.size());
  for (std::size_t r = 0; r < x.rows; ++r) {
    ld s = y[r];
    for (std::size_t c = 0; c < x.cols; ++c) s -= x(r, c) * w[c];
    out[r] = static_cast<double>(s);
  }
  return out;
}

/// sin/cos harmonic design in long double, columns (sin, cos) per harmonic.
inline Mat harmonic_design(ld f, std::size_t order, std::size_t n, ld fs, bool with_offset = false) {
  Mat x(n, 2 * order + (with_offset ? 1 : 0));
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t k = 0; k < order; ++k) {
      const ld a = 2 * kPi * static_cast<ld>(k + 1) * f * static_cast<ld>(t) / fs;
      x(t, 2 * k) = std::sin(a);
      x(t, 2 * k + 1) = std::cos(a);
    }
    if (with_offset) x(t, 2 * order) = 1;
  }
  return x;
}

inline double norm(std::span<const double> v) {
  ld s = 0;
  for (double x : v) s += static_cast<ld>(x) * x;
  return static_cast<double>(std::sqrt(s));
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
  ld ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= a.size();
  mb /= b.size();
  ld sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return static_cast<double>(sab / std::sqrt(saa * sbb));
}

/// Phase of a displacement at 77 GHz with c = 3e8: 4 pi d / lambda.
inline double phase_of_displacement(double d_m, double carrier_hz = 77e9) {
  return static_cast<double>(4 * kPi * static_cast<ld>(d_m) * carrier_hz / 3.0e8L);
}

}  // namespace oracle
