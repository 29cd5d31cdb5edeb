#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "pulsecancel/anls.hpp"
#include "pulsecancel/error.hpp"
#include "test_util.hpp"

using namespace pulsecancel;
using namespace pulsecancel::anls;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kFs = 100.0;

std::vector<double> breathing(std::size_t n, double f, const std::vector<double>& amps, double offset = 0.0) {
  std::vector<double> x(n, offset);
  for (std::size_t k = 0; k < amps.size(); ++k) {
    testutil::add(x, testutil::tone(n, kFs, f * static_cast<double>(k + 1), amps[k], 0.4 * static_cast<double>(k) + 0.3));
  }
  return x;
}

std::vector<double> gaussian(std::size_t n, double sd, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, sd);
  std::vector<double> x(n);
  for (double& v : x) v = g(rng);
  return x;
}

double mean_square(const std::vector<double>& x) {
  double s = 0;
  for (double v : x) s += v * v;
  return s / static_cast<double>(x.size());
}

}  // namespace

TEST(HarmonicMatrix, QuarterPeriodColumns) {
  const auto h = harmonic_matrix(kFs / 4.0, 1, 8, kFs);
  const double s[] = {0, 1, 0, -1, 0, 1, 0, -1};
  const double c[] = {1, 0, -1, 0, 1, 0, -1, 0};
  for (int t = 0; t < 8; ++t) {
    EXPECT_NEAR(h(t, 0), s[t], 1e-12);
    EXPECT_NEAR(h(t, 1), c[t], 1e-12);
  }
}

TEST(HarmonicMatrix, CommensurateColumnsAreOrthogonal) {
  // 0.25 Hz at 100 Hz: 400-sample period, N = 1200 covers three periods.
  const auto h = harmonic_matrix(0.25, 4, 1200, kFs);
  const Eigen::MatrixXd g = h.transpose() * h;
  for (int i = 0; i < g.rows(); ++i)
    for (int j = 0; j < g.cols(); ++j)
      if (i != j) EXPECT_LT(std::abs(g(i, j)), 1e-9) << i << "," << j;
}

TEST(HarmonicMatrix, SingleRowAndNyquistGuard) {
  const auto h = harmonic_matrix(0.3, 3, 1, kFs);
  ASSERT_EQ(h.rows(), 1);
  for (int k = 0; k < 3; ++k) {
    EXPECT_EQ(h(0, 2 * k), 0.0);
    EXPECT_EQ(h(0, 2 * k + 1), 1.0);
  }
  EXPECT_THROW(harmonic_matrix(25.0, 2, 10, kFs), Error);
  EXPECT_THROW(harmonic_matrix(0.3, 0, 10, kFs), Error);
}

TEST(HarmonicMatrix, MatchesLongDoubleDesign) {
  const std::size_t n = 3000;
  const auto h = harmonic_matrix(0.2633, 3, n, kFs);
  const auto o = oracle::harmonic_design(0.2633L, 3, n, 100.0L);
  for (std::size_t t = 0; t < n; t += 7)
    for (std::size_t c = 0; c < 6; ++c)
      EXPECT_NEAR(h(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c)), static_cast<double>(o(t, c)), 1e-12);
}

TEST(FitAmplitudes, RecoversExactModel) {
  const std::size_t n = 2000;
  auto y = testutil::tone(n, kFs, 0.25, 2.0);
  testutil::add(y, testutil::tone(n, kFs, 0.5, 0.5));
  const auto m = fit_amplitudes(y, kFs, 0.25, 2);
  const auto a = m.amplitudes();
  EXPECT_NEAR(a[0], 2.0, 1e-10);
  EXPECT_NEAR(a[1], 0.5, 1e-10);
  EXPECT_LT(m.residual_power, 1e-18);
  EXPECT_FALSE(m.low_snr);
}

TEST(FitAmplitudes, IgnoresOrthogonalToneOnCommensurateWindow) {
  const std::size_t n = 2000;  // 5 cycles of 0.25 Hz, 26 of 1.3 Hz
  auto y = testutil::tone(n, kFs, 0.25, 2.0, 0.3);
  testutil::add(y, testutil::tone(n, kFs, 0.5, 0.5, 1.1));
  const auto clean = fit_amplitudes(y, kFs, 0.25, 2);
  testutil::add(y, testutil::tone(n, kFs, 1.3, 0.8, 0.2));
  const auto dirty = fit_amplitudes(y, kFs, 0.25, 2);
  for (std::size_t i = 0; i < clean.coefficients.size(); ++i) EXPECT_NEAR(dirty.coefficients[i], clean.coefficients[i], 1e-6);
}

TEST(FitAmplitudes, ZeroSegment) {
  const std::vector<double> y(500, 0.0);
  const auto m = fit_amplitudes(y, kFs, 0.3, 3);
  for (double c : m.coefficients) EXPECT_EQ(c, 0.0);
  EXPECT_EQ(m.residual_power, 0.0);
}

TEST(FitAmplitudes, RejectsShortAndAliasedDesigns) {
  const std::vector<double> y(6, 1.0);
  EXPECT_THROW(fit_amplitudes(y, kFs, 0.3, 3), Error);
  const std::vector<double> z(400, 1.0);
  EXPECT_THROW(fit_amplitudes(z, kFs, 20.0, 3), Error);
  try {
    fit_amplitudes(z, kFs, 1e-14, 1);
    FAIL() << "near-zero fundamental accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Numerical);
    EXPECT_NE(std::string(e.what()).find("condition"), std::string::npos);
  }
}

TEST(FitAmplitudes, AgreesWithNormalEquationOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::size_t n = 700 + 37 * seed;
    const double f = 0.17 + 0.013 * static_cast<double>(seed);
    auto y = breathing(n, 0.23, {1.0, 0.4, 0.1}, 0.7);
    testutil::add(y, gaussian(n, 0.2, seed));
    for (bool offset : {false, true}) {
      const auto m = fit_amplitudes(y, kFs, f, 3, offset);
      const auto o = oracle::harmonic_design(f, 3, n, 100.0L, offset);
      const auto w = oracle::lstsq(o, y);
      for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(m.coefficients[i], static_cast<double>(w[i]), 1e-8);
      if (offset) EXPECT_NEAR(m.offset, static_cast<double>(w[6]), 1e-8);
      EXPECT_NEAR(m.residual_power, mean_square(oracle::residual(o, y)), 1e-10);
    }
  }
}

TEST(FitAmplitudes, PropertyResidualIsOrthogonalToDesign) {
  const std::size_t n = 900;
  auto y = breathing(n, 0.21, {1.0, 0.5});
  testutil::add(y, gaussian(n, 0.3, 11));
  const auto m = fit_amplitudes(y, kFs, 0.205, 3);
  const auto h = harmonic_matrix(0.205, 3, n, kFs);
  const auto fit = m.evaluate(n, kFs);
  Eigen::VectorXd r(static_cast<Eigen::Index>(n));
  for (std::size_t t = 0; t < n; ++t) r[static_cast<Eigen::Index>(t)] = y[t] - fit[t];
  const double ynorm = oracle::norm(y);
  for (int c = 0; c < h.cols(); ++c) EXPECT_LT(std::abs(h.col(c).dot(r)), 1e-9 * h.col(c).norm() * ynorm);
}

TEST(FitAmplitudes, PropertyResidualMonotoneInOrder) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto y = breathing(600, 0.27, {1.0, 0.3, 0.2, 0.05});
    testutil::add(y, gaussian(600, 0.5, seed));
    double prev = INFINITY;
    for (std::size_t k = 1; k <= 5; ++k) {
      const double r = fit_amplitudes(y, kFs, 0.271, k, true).residual_power;
      EXPECT_LE(r, prev * (1 + 1e-12));
      prev = r;
    }
  }
}

TEST(ResidualPower, UnweightedMatchesQrFit) {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const std::size_t n = 500 + 211 * seed;
    auto y = breathing(n, 0.25, {1.0, 0.5, 0.25}, 3.0);
    testutil::add(y, gaussian(n, 0.1, seed));
    const double f = 0.24 + 0.003 * static_cast<double>(seed);
    for (bool offset : {false, true}) {
      const double qr = fit_amplitudes(y, kFs, f, 3, offset).residual_power;
      EXPECT_NEAR(residual_power(y, kFs, f, 3, offset), qr, 1e-9 * qr + 1e-15);
    }
  }
}

TEST(ResidualPower, HannWeightedMatchesWeightedOracle) {
  const std::size_t n = 1500;
  auto y = breathing(n, 0.26, {1.0, 0.5, 0.25}, -2.0);
  testutil::add(y, testutil::tone(n, kFs, 1.1, 0.3));
  testutil::add(y, gaussian(n, 0.05, 4));
  for (bool offset : {false, true}) {
    for (double f : {0.255, 0.26, 0.2637}) {
      auto o = oracle::harmonic_design(f, 3, n, 100.0L, offset);
      std::vector<double> wy(n);
      std::vector<oracle::ld> sw(n);
      for (std::size_t t = 0; t < n; ++t) {
        sw[t] = std::sqrt(0.5L - 0.5L * std::cos(2 * oracle::kPi * static_cast<oracle::ld>(t) / static_cast<oracle::ld>(n - 1)));
        wy[t] = static_cast<double>(sw[t] * y[t]);
        for (std::size_t c = 0; c < o.cols; ++c) o(t, c) *= sw[t];
      }
      const double expected = mean_square(oracle::residual(o, wy));
      EXPECT_NEAR(residual_power(y, kFs, f, 3, offset, true), expected, 1e-8 * expected) << f << " " << offset;
    }
  }
}

TEST(ResidualPower, RejectsBadArguments) {
  const std::vector<double> y(100, 0.0);
  EXPECT_THROW(residual_power(y, kFs, 0.3, 0), Error);
  EXPECT_THROW(residual_power(y, kFs, 0.0, 2), Error);
  EXPECT_THROW(residual_power(y, kFs, 30.0, 2), Error);
  EXPECT_THROW(residual_power(std::vector<double>(4, 0.0), kFs, 0.3, 2), Error);
}

TEST(EstimateBreathing, OnGridNoiselessIsExact) {
  const auto y = breathing(500, 0.26, {1e-3, 5e-4, 2.5e-4}, 0.8);
  const auto m = estimate_breathing(y, kFs);
  EXPECT_NEAR(m.fundamental, 0.26, 1e-9);
  EXPECT_LT(m.residual_power, 1e-20);
}

TEST(EstimateBreathing, OffGridWithinOneAndAHalfSteps) {
  const AnlsConfig c;
  for (double f : {0.2633, 0.3112, 0.1871}) {
    const auto y = breathing(500, f, {1.0, 0.5, 0.25});
    EXPECT_LE(std::abs(estimate_breathing(y, kFs, c).fundamental - f), 1.5 * c.grid_step) << f;
  }
}

TEST(EstimateBreathing, TiesResolveLow) {
  // A constant fits no harmonic anywhere: every grid residual is identical.
  const std::vector<double> y(500, 0.0);
  EXPECT_NEAR(estimate_breathing(y, kFs).fundamental, AnlsConfig{}.grid_lo, 1e-12);
}

TEST(EstimateBreathing, WhiteNoiseIsFlaggedLowSnr) {
  int flagged = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto y = gaussian(500, 1.0, 1000 + seed);
    double mean = 0;
    for (double v : y) mean += v;
    mean /= 500.0;
    double var = 0;
    for (double v : y) var += (v - mean) * (v - mean);
    var /= 500.0;
    const auto m = estimate_breathing(y, kFs);
    EXPECT_GT(m.residual_power, 0.95 * var);
    EXPECT_LE(m.residual_power, var);
    flagged += m.low_snr ? 1 : 0;
  }
  EXPECT_GE(flagged, 95);
}

TEST(TrackBreathing, WindowsTileTheRecord) {
  const auto p = testutil::phase_signal(breathing(2345, 0.25, {1.0, 0.3}), kFs);
  const auto t = track_breathing(p);
  EXPECT_EQ(t.window_samples, 500U);
  EXPECT_EQ(t.step_samples, 100U);
  ASSERT_EQ(t.windows.size(), (2345U - 500U) / 100U + 1U);
  for (std::size_t i = 0; i < t.windows.size(); ++i) {
    EXPECT_EQ(t.windows[i].window_start, 100 * i);
    EXPECT_EQ(t.windows[i].length, 500U);
    EXPECT_NEAR(t.windows[i].fundamental, 0.25, 1e-9);
  }
  EXPECT_THROW(track_breathing(testutil::phase_signal(std::vector<double>(300, 0.0), kFs)), Error);
}

TEST(ReconstructReference, StationaryNoiselessMatchesComponent) {
  const std::size_t n = 3000;
  const std::vector<double> amps = {1.2e-3, 6e-4, 3e-4};
  const auto truth = breathing(n, 0.26, amps);
  auto y = truth;
  for (double& v : y) v += 4.2;
  const auto p = testutil::phase_signal(y, kFs);
  const auto ref = reconstruct_reference(p, 500, 2000);
  ASSERT_EQ(ref.s_ref.size(), 2000U);
  EXPECT_EQ(ref.subwindow_fundamentals.size(), 16U);
  double err = 0, pow = 0;
  for (std::size_t t = 0; t < 2000; ++t) {
    err += std::pow(ref.s_ref[t] - truth[500 + t], 2);
    pow += truth[500 + t] * truth[500 + t];
  }
  EXPECT_LT(std::sqrt(err / pow), 1e-6);
  EXPECT_NEAR(ref.model.offset, 4.2, 1e-9);
}

TEST(ReconstructReference, MedianIgnoresOneCorruptedSubwindow) {
  const std::size_t n = 2000;
  auto y = breathing(n, 0.26, {1.0, 0.5, 0.25});
  for (std::size_t t = 1050; t < 1070; ++t) y[t] += 30.0;
  const auto p = testutil::phase_signal(y, kFs);
  AnlsConfig c;
  c.refine = false;
  const auto ref = reconstruct_reference(p, 0, n, c);
  ASSERT_EQ(ref.subwindow_fundamentals.size(), 16U);
  EXPECT_NEAR(ref.model.fundamental, 0.26, 1e-9);
}

TEST(ReconstructReference, NothingToReconstructWithoutBreathing) {
  const auto noise = gaussian(2000, 0.1, 8);
  const auto ref = reconstruct_reference(testutil::phase_signal(noise, kFs), 0, 2000);
  EXPECT_LT(mean_square(ref.s_ref), 1e-2 * mean_square(noise));
  const std::vector<double> flat(2000, 1.0);
  const auto z = reconstruct_reference(testutil::phase_signal(flat, kFs), 0, 2000);
  EXPECT_LT(mean_square(z.s_ref), 1e-20);
}

TEST(ReconstructReference, RefineMovesOffGridMedianTowardTruth) {
  const double f = 0.2608;  // 0.48 of a grid step above 0.26
  const auto y = breathing(2000, f, {1.0, 0.5, 0.25}, 1.0);
  const auto p = testutil::phase_signal(y, kFs);
  AnlsConfig plain;
  plain.refine = false;
  const double grid_f = reconstruct_reference(p, 0, 2000, plain).model.fundamental;
  const double refined = reconstruct_reference(p, 0, 2000).model.fundamental;
  EXPECT_LT(std::abs(refined - f), 0.1 * std::abs(grid_f - f));
  EXPECT_LE(std::abs(refined - grid_f), 2.0 * plain.grid_step + 1e-12);
}

TEST(ReconstructReference, SharedTrackGivesSameReference) {
  auto y = breathing(4000, 0.23, {1.0, 0.4, 0.2});
  testutil::add(y, gaussian(4000, 0.05, 2));
  const auto p = testutil::phase_signal(y, kFs);
  const auto track = track_breathing(p);
  const auto a = reconstruct_reference(p, 1000, 2000);
  const auto b = reconstruct_reference(p, 1000, 2000, {}, &track);
  EXPECT_EQ(a.subwindow_fundamentals, b.subwindow_fundamentals);
  EXPECT_EQ(a.s_ref, b.s_ref);
}

TEST(ReconstructReference, RejectsShortCpi) {
  const auto p = testutil::phase_signal(std::vector<double>(1000, 0.0), kFs);
  EXPECT_THROW(reconstruct_reference(p, 0, 400), Error);
  EXPECT_THROW(reconstruct_reference(p, 800, 500), Error);
}
