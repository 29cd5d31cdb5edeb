#include "pulsecancel/anls.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <numeric>

#include <fmt/format.h>

#include "pulsecancel/error.hpp"

namespace pulsecancel::anls {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kMaxCondition = 1e12;

// Writes sin/cos of omega * t for t = 0..n-1 using a rotation re-anchored every
// 64 samples, which keeps the error near machine precision.
template <typename Sink>
void for_each_phasor(double omega, std::size_t n, Sink&& sink) {
  const double cr = std::cos(omega), sr = std::sin(omega);
  double c = 1.0, s = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    if ((t & 63U) == 0) {
      const double a = std::fmod(omega * static_cast<double>(t), kTwoPi);
      c = std::cos(a);
      s = std::sin(a);
    }
    sink(t, c, s);
    const double nc = c * cr - s * sr;
    s = s * cr + c * sr;
    c = nc;
  }
}

// Same recurrence for harmonics 1..order of omega, advanced together so the
// independent chains overlap. sink(t, cos[], sin[]) sees harmonic k at index k-1.
template <typename Sink>
void for_each_harmonic_phasor(double omega, std::size_t order, std::size_t n, Sink&& sink) {
  std::vector<double> cr(order), sr(order), c(order), s(order);
  for (std::size_t k = 0; k < order; ++k) {
    cr[k] = std::cos(omega * static_cast<double>(k + 1));
    sr[k] = std::sin(omega * static_cast<double>(k + 1));
  }
  for (std::size_t t = 0; t < n; ++t) {
    if ((t & 63U) == 0) {
      for (std::size_t k = 0; k < order; ++k) {
        const double a = std::fmod(omega * static_cast<double>(k + 1) * static_cast<double>(t), kTwoPi);
        c[k] = std::cos(a);
        s[k] = std::sin(a);
      }
    }
    sink(t, c.data(), s.data());
    for (std::size_t k = 0; k < order; ++k) {
      const double nc = c[k] * cr[k] - s[k] * sr[k];
      s[k] = s[k] * cr[k] + c[k] * sr[k];
      c[k] = nc;
    }
  }
}

double r_condition(const Eigen::MatrixXd& r) {
  const Eigen::VectorXd d = r.diagonal().cwiseAbs();
  const double lo = d.minCoeff();
  if (!(lo > 0)) return std::numeric_limits<double>::infinity();
  return d.maxCoeff() / lo;
}

bool flag_low_snr(const HarmonicModel& m) {
  if (m.length == 0) return true;
  // Noise floor: residual RMS per sample, in the units of the amplitudes.
  const double floor = 3.0 * std::sqrt(m.residual_power);
  const auto amps = m.amplitudes();
  return std::all_of(amps.begin(), amps.end(), [&](double a) { return a < floor; });
}

double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

// Design data for one grid frequency: R of the (optionally centred) design and
// its column sums.
struct GridPoint {
  double f = 0.0;
  Eigen::MatrixXd r;
  Eigen::VectorXd u;
  double cond = 1.0;
};

// Solves R^T v = b for upper-triangular R (column-major), returns ||v||^2.
double projected_energy(const Eigen::MatrixXd& r, const double* b, double* v, std::size_t cols) {
  double energy = 0.0;
  for (std::size_t i = 0; i < cols; ++i) {
    double acc = b[i];
    for (std::size_t j = 0; j < i; ++j) acc -= r(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) * v[j];
    v[i] = acc / r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
    energy += v[i] * v[i];
  }
  return energy;
}

// Fits every window y[s .. s+n) for s in `starts` at each grid frequency and keeps
// the best projection. Window inner products with exp(j w t) come from prefix
// sums at block boundaries; each block is summed with a Goertzel recurrence run
// for all grid frequencies at once.
std::vector<HarmonicModel> grid_scan(std::span<const double> y, double fs, std::span<const std::size_t> starts,
                                     std::size_t n, const AnlsConfig& cfg) {
  const std::size_t order = cfg.order;
  const std::size_t cols = 2 * order;
  const std::size_t total = y.size();
  const bool offset = cfg.estimate_offset;
  const double nd = static_cast<double>(n);

  double global_mean = 0.0;
  if (offset) {
    for (double v : y) global_mean += v;
    global_mean /= static_cast<double>(total);
  }
  std::vector<double> yc(total);
  std::vector<double> s1(total + 1, 0.0), s2(total + 1, 0.0);
  for (std::size_t i = 0; i < total; ++i) {
    yc[i] = y[i] - global_mean;
    s1[i + 1] = s1[i] + yc[i];
    s2[i + 1] = s2[i] + yc[i] * yc[i];
  }

  const std::size_t m = starts.size();
  std::vector<double> energy(m), sums(m);
  for (std::size_t w = 0; w < m; ++w) {
    const std::size_t s = starts[w];
    sums[w] = s1[s + n] - s1[s];
    energy[w] = s2[s + n] - s2[s];
    if (offset) energy[w] -= sums[w] * sums[w] / nd;
  }

  std::vector<GridPoint> grid;
  for (double f : cfg.grid()) {
    if (static_cast<double>(order) * f >= fs / 2.0) break;
    Eigen::MatrixXd h = harmonic_matrix(f, order, n, fs);
    GridPoint gp;
    gp.f = f;
    gp.u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cols));
    if (offset) {
      gp.u = h.colwise().sum().transpose();
      h.rowwise() -= gp.u.transpose() / nd;
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(h);
    gp.r = qr.matrixQR().topRows(static_cast<Eigen::Index>(cols)).triangularView<Eigen::Upper>();
    gp.cond = r_condition(gp.r);
    if (gp.cond <= kMaxCondition) grid.push_back(std::move(gp));
  }
  if (grid.empty()) throw Error(ErrorCode::Numerical, "no well-conditioned grid frequency");

  // Block prefix sums for every (grid point, harmonic) frequency.
  std::size_t block = n;
  for (std::size_t s : starts) block = std::gcd(block, s);
  const std::size_t nblocks = (starts.back() + n) / block;
  const std::size_t nf = grid.size() * order;
  std::vector<double> omega(nf), coef(nf), cw(nf), sw(nf), cl(nf), sl(nf);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    for (std::size_t k = 0; k < order; ++k) {
      const std::size_t q = g * order + k;
      omega[q] = kTwoPi * static_cast<double>(k + 1) * grid[g].f / fs;
      coef[q] = 2.0 * std::cos(omega[q]);
      cw[q] = std::cos(omega[q]);
      sw[q] = std::sin(omega[q]);
      const double tail = std::fmod(omega[q] * static_cast<double>(block - 1), kTwoPi);
      cl[q] = std::cos(tail);
      sl[q] = std::sin(tail);
    }
  }
  // pre_*[b * nf + q]: sum of y[t] exp(j w_q t) over t < b * block.
  // rot_*[b * nf + q]: exp(j w_q b * block).
  std::vector<double> pre_re((nblocks + 1) * nf, 0.0), pre_im((nblocks + 1) * nf, 0.0);
  std::vector<double> rot_re((nblocks + 1) * nf), rot_im((nblocks + 1) * nf);
  std::vector<double> g1(nf), g2(nf);
  for (std::size_t blk = 0; blk <= nblocks; ++blk) {
    for (std::size_t q = 0; q < nf; ++q) {
      const double a = std::fmod(omega[q] * static_cast<double>(blk * block), kTwoPi);
      rot_re[blk * nf + q] = std::cos(a);
      rot_im[blk * nf + q] = std::sin(a);
    }
  }
  for (std::size_t blk = 0; blk < nblocks; ++blk) {
    std::fill(g1.begin(), g1.end(), 0.0);
    std::fill(g2.begin(), g2.end(), 0.0);
    const double* x = yc.data() + blk * block;
    for (std::size_t i = 0; i < block; ++i) {
      const double xi = x[i];
      for (std::size_t q = 0; q < nf; ++q) {
        const double s0 = xi + coef[q] * g1[q] - g2[q];
        g2[q] = g1[q];
        g1[q] = s0;
      }
    }
    const double* rr = rot_re.data() + blk * nf;
    const double* ri = rot_im.data() + blk * nf;
    double* pr = pre_re.data() + blk * nf;
    double* pi = pre_im.data() + blk * nf;
    for (std::size_t q = 0; q < nf; ++q) {
      // B = s[L-1] - exp(-jw) s[L-2] = sum x[i] exp(jw(L-1-i)); the block sum
      // with exp(+jw i) is conj(exp(-jw(L-1)) B).
      const double br = g1[q] - cw[q] * g2[q];
      const double bi = sw[q] * g2[q];
      const double ar = cl[q] * br + sl[q] * bi;
      const double ai = -(cl[q] * bi - sl[q] * br);
      pr[nf + q] = pr[q] + rr[q] * ar - ri[q] * ai;
      pi[nf + q] = pi[q] + rr[q] * ai + ri[q] * ar;
    }
  }

  std::vector<double> best_score(m, -1.0);
  std::vector<std::size_t> best_g(m, 0);
  std::vector<double> b(cols), v(cols);
  for (std::size_t w = 0; w < m; ++w) {
    const std::size_t s = starts[w];
    const std::size_t b0 = s / block, b1 = (s + n) / block;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      for (std::size_t k = 0; k < order; ++k) {
        const std::size_t q = g * order + k;
        const double dr = pre_re[b1 * nf + q] - pre_re[b0 * nf + q];
        const double di = pre_im[b1 * nf + q] - pre_im[b0 * nf + q];
        const double ca = rot_re[b0 * nf + q], sa = -rot_im[b0 * nf + q];
        b[2 * k] = sa * dr + ca * di;
        b[2 * k + 1] = ca * dr - sa * di;
      }
      if (offset) {
        for (std::size_t c = 0; c < cols; ++c) b[c] -= grid[g].u[static_cast<Eigen::Index>(c)] * sums[w] / nd;
      }
      const double score = projected_energy(grid[g].r, b.data(), v.data(), cols);
      if (score > best_score[w]) {
        best_score[w] = score;
        best_g[w] = g;
      }
    }
  }

  std::vector<HarmonicModel> best(m);
  for (std::size_t w = 0; w < m; ++w) {
    const GridPoint& gp = grid[best_g[w]];
    const std::size_t s = starts[w];
    const std::size_t b0 = s / block, b1 = (s + n) / block;
    for (std::size_t k = 0; k < order; ++k) {
      const std::size_t q = best_g[w] * order + k;
      const double dr = pre_re[b1 * nf + q] - pre_re[b0 * nf + q];
      const double di = pre_im[b1 * nf + q] - pre_im[b0 * nf + q];
      const double ca = rot_re[b0 * nf + q], sa = -rot_im[b0 * nf + q];
      b[2 * k] = sa * dr + ca * di;
      b[2 * k + 1] = ca * dr - sa * di;
    }
    if (offset) {
      for (std::size_t c = 0; c < cols; ++c) b[c] -= gp.u[static_cast<Eigen::Index>(c)] * sums[w] / nd;
    }
    (void)projected_energy(gp.r, b.data(), v.data(), cols);
    const Eigen::Map<const Eigen::VectorXd> vm(v.data(), static_cast<Eigen::Index>(cols));
    const Eigen::VectorXd coeff = gp.r.triangularView<Eigen::Upper>().solve(vm);

    HarmonicModel& hm = best[w];
    hm.fundamental = gp.f;
    hm.order = order;
    hm.coefficients.assign(coeff.data(), coeff.data() + coeff.size());
    hm.condition = gp.cond;
    hm.offset = offset ? (sums[w] - gp.u.dot(coeff)) / nd + global_mean : 0.0;
    hm.window_start = s;
    hm.length = n;
    hm.residual_power = std::max(0.0, (energy[w] - best_score[w]) / nd);
    hm.low_snr = flag_low_snr(hm);
  }
  return best;
}

std::vector<std::size_t> tile(std::size_t total, std::size_t window, std::size_t step, std::size_t base = 0) {
  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s + window <= total; s += step) starts.push_back(base + s);
  return starts;
}

std::size_t to_samples(double seconds, double fs) { return static_cast<std::size_t>(std::llround(seconds * fs)); }

}  // namespace

std::vector<double> HarmonicModel::amplitudes() const {
  std::vector<double> a(coefficients.size() / 2);
  for (std::size_t k = 0; k < a.size(); ++k) a[k] = std::hypot(coefficients[2 * k], coefficients[2 * k + 1]);
  return a;
}

std::vector<double> HarmonicModel::evaluate(std::size_t count, double fs) const {
  std::vector<double> out(count, 0.0);
  for (std::size_t k = 0; k < coefficients.size() / 2; ++k) {
    const double omega = kTwoPi * static_cast<double>(k + 1) * fundamental / fs;
    const double cs = coefficients[2 * k], cc = coefficients[2 * k + 1];
    for_each_phasor(omega, count, [&](std::size_t t, double c, double sn) { out[t] += cs * sn + cc * c; });
  }
  return out;
}

std::vector<double> AnlsConfig::grid() const {
  const auto count = static_cast<std::size_t>(std::floor((grid_hi - grid_lo) / grid_step + 1e-9)) + 1;
  std::vector<double> g(count);
  for (std::size_t i = 0; i < count; ++i) g[i] = grid_lo + static_cast<double>(i) * grid_step;
  return g;
}

void AnlsConfig::validate() const {
  if (order == 0) throw Error(ErrorCode::InvalidArgument, "harmonic order must be >= 1");
  if (!(grid_lo > 0 && grid_hi >= grid_lo && grid_step > 0)) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("invalid frequency grid {}:{}:{}", grid_lo, grid_hi, grid_step));
  }
  if (!(window_s > 0 && step_s > 0)) throw Error(ErrorCode::InvalidArgument, "ANLS window and step must be positive");
}

Eigen::MatrixXd harmonic_matrix(double f, std::size_t order, std::size_t n, double fs) {
  if (!(fs > 0)) throw Error(ErrorCode::InvalidArgument, "sample rate must be positive");
  if (order == 0) throw Error(ErrorCode::InvalidArgument, "harmonic order must be >= 1");
  if (!(static_cast<double>(order) * f < fs / 2.0)) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("harmonic {} of {} Hz reaches Nyquist ({} Hz)", order, f, fs / 2.0));
  }
  Eigen::MatrixXd h(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(2 * order));
  for (std::size_t k = 0; k < order; ++k) {
    const double omega = kTwoPi * static_cast<double>(k + 1) * f / fs;
    const auto cs = static_cast<Eigen::Index>(2 * k);
    for_each_phasor(omega, n, [&](std::size_t t, double c, double sn) {
      h(static_cast<Eigen::Index>(t), cs) = sn;
      h(static_cast<Eigen::Index>(t), cs + 1) = c;
    });
  }
  return h;
}

namespace {

// Least-squares fit; optionally returns the fitted harmonic part (offset excluded).
HarmonicModel fit_impl(std::span<const double> segment, double fs, double f, std::size_t order, bool estimate_offset,
                       std::vector<double>* harmonic_part) {
  const std::size_t n = segment.size();
  const std::size_t needed = 2 * order + 1 + (estimate_offset ? 1 : 0);
  if (n < needed) throw Error(ErrorCode::InvalidArgument, fmt::format("segment of {} samples is too short for order {}", n, order));

  Eigen::MatrixXd h = harmonic_matrix(f, order, n, fs);
  Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(segment.data(), static_cast<Eigen::Index>(n));
  Eigen::RowVectorXd col_mean = Eigen::RowVectorXd::Zero(h.cols());
  double y_mean = 0.0;
  if (estimate_offset) {
    col_mean = h.colwise().mean();
    y_mean = y.mean();
    h.rowwise() -= col_mean;
    y.array() -= y_mean;
  }

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(h);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(h.cols()).triangularView<Eigen::Upper>();
  const double cond = r_condition(r);
  if (!(cond <= kMaxCondition)) {
    throw Error(ErrorCode::Numerical, fmt::format("rank-deficient harmonic design at {} Hz (condition estimate {:.3g})", f, cond));
  }
  const Eigen::VectorXd coeff = qr.solve(y);
  const Eigen::VectorXd fitted = h * coeff;

  HarmonicModel m;
  m.fundamental = f;
  m.order = order;
  m.coefficients.assign(coeff.data(), coeff.data() + coeff.size());
  m.offset = estimate_offset ? y_mean - col_mean.dot(coeff) : 0.0;
  m.length = n;
  m.residual_power = (y - fitted).squaredNorm() / static_cast<double>(n);
  m.condition = cond;
  m.low_snr = flag_low_snr(m);
  if (harmonic_part != nullptr) {
    const double shift = col_mean.dot(coeff);
    harmonic_part->resize(n);
    for (std::size_t t = 0; t < n; ++t) (*harmonic_part)[t] = fitted[static_cast<Eigen::Index>(t)] + shift;
  }
  return m;
}

}  // namespace

HarmonicModel fit_amplitudes(std::span<const double> segment, double fs, double f, std::size_t order,
                             bool estimate_offset) {
  return fit_impl(segment, fs, f, order, estimate_offset, nullptr);
}

namespace {

// sum_{n<N} exp(i c n)
std::complex<double> dirichlet(double c, std::size_t n) {
  const double half = 0.5 * c;
  const double s = std::sin(half);
  const double nn = static_cast<double>(n);
  if (std::abs(s) < 1e-12) return {nn, 0.0};
  const double mag = std::sin(nn * half) / s;
  return std::polar(mag, (nn - 1.0) * half);
}

// Weighted sample sums of one segment: w*y, sum w*y^2, sum w*y.
struct WeightedSegment {
  std::vector<double> wy;
  double energy = 0.0;
  double total = 0.0;
  bool hann = false;
};

WeightedSegment weigh(std::span<const double> y, bool hann) {
  WeightedSegment w;
  w.hann = hann;
  w.wy.resize(y.size());
  const double step = kTwoPi / static_cast<double>(y.size() - 1);
  for_each_phasor(step, y.size(), [&](std::size_t t, double c, double) {
    const double wt = hann ? 0.5 - 0.5 * c : 1.0;
    w.wy[t] = wt * y[t];
    w.energy += w.wy[t] * y[t];
    w.total += w.wy[t];
  });
  return w;
}

double weighted_residual(const WeightedSegment& seg, double fs, double f, std::size_t order, bool estimate_offset) {
  const std::size_t n = seg.wy.size();
  const std::size_t p = 2 * order;
  const double omega = kTwoPi * f / fs;
  const double step = kTwoPi / static_cast<double>(n - 1);
  // sum_n w_n exp(i c n); the Hann weight splits into three shifted kernels.
  auto wsum = [&](double c) {
    if (!seg.hann) return dirichlet(c, n);
    return 0.5 * dirichlet(c, n) - 0.25 * dirichlet(c + step, n) - 0.25 * dirichlet(c - step, n);
  };

  // Column order: sin(k w n), cos(k w n) for k = 1..order.
  Eigen::MatrixXd g(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  Eigen::VectorXd sums(static_cast<Eigen::Index>(p));
  for (std::size_t k = 1; k <= order; ++k) {
    const auto dk = wsum(static_cast<double>(k) * omega);
    sums(static_cast<Eigen::Index>(2 * k - 2)) = dk.imag();
    sums(static_cast<Eigen::Index>(2 * k - 1)) = dk.real();
    for (std::size_t l = 1; l <= order; ++l) {
      const auto dm = wsum(static_cast<double>(static_cast<long>(k) - static_cast<long>(l)) * omega);
      const auto dp = wsum(static_cast<double>(k + l) * omega);
      const auto is = static_cast<Eigen::Index>(2 * k - 2), ic = is + 1;
      const auto js = static_cast<Eigen::Index>(2 * l - 2), jc = js + 1;
      g(is, js) = 0.5 * (dm.real() - dp.real());
      g(ic, jc) = 0.5 * (dm.real() + dp.real());
      g(is, jc) = 0.5 * (dp.imag() + dm.imag());
      g(ic, js) = 0.5 * (dp.imag() - dm.imag());
    }
  }

  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  for_each_harmonic_phasor(omega, order, n, [&](std::size_t t, const double* c, const double* sn) {
    const double y = seg.wy[t];
    for (std::size_t k = 0; k < order; ++k) {
      b(static_cast<Eigen::Index>(2 * k)) += y * sn[k];
      b(static_cast<Eigen::Index>(2 * k + 1)) += y * c[k];
    }
  });

  double energy = seg.energy;
  if (estimate_offset) {
    const double w0 = wsum(0.0).real();
    const double mean = seg.total / w0;
    energy -= seg.total * mean;
    b -= mean * sums;
    g -= sums * sums.transpose() / w0;
  }
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(g);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw Error(ErrorCode::Numerical, fmt::format("singular harmonic Gram matrix at {} Hz", f));
  }
  const double explained = b.dot(ldlt.solve(b));
  return std::max(0.0, (energy - explained) / static_cast<double>(n));
}

void check_residual_args(std::size_t n, double fs, double f, std::size_t order, bool estimate_offset) {
  if (order == 0) throw Error(ErrorCode::InvalidArgument, "harmonic order must be >= 1");
  if (n < 2 * order + 1 + (estimate_offset ? 1 : 0)) throw Error(ErrorCode::InvalidArgument, "segment too short for the order");
  if (!(fs > 0) || !(f > 0) || !(static_cast<double>(order) * f < fs / 2.0)) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("harmonic {} of {} Hz outside (0, Nyquist)", order, f));
  }
}

}  // namespace

double residual_power(std::span<const double> segment, double fs, double f, std::size_t order, bool estimate_offset,
                      bool hann_weighted) {
  check_residual_args(segment.size(), fs, f, order, estimate_offset);
  return weighted_residual(weigh(segment, hann_weighted), fs, f, order, estimate_offset);
}

HarmonicModel estimate_breathing(std::span<const double> segment, double fs, const AnlsConfig& config) {
  config.validate();
  const std::size_t n = segment.size();
  if (n < 2 * config.order + 2) throw Error(ErrorCode::InvalidArgument, fmt::format("segment of {} samples is too short", n));
  const std::size_t start = 0;
  const auto found = grid_scan(segment, fs, std::span<const std::size_t>(&start, 1), n, config);
  return fit_amplitudes(segment, fs, found.front().fundamental, config.order, config.estimate_offset);
}

BreathingTrack track_breathing(const PhaseSignal& phase, const AnlsConfig& config) {
  config.validate();
  const double fs = phase.sample_rate;
  BreathingTrack track;
  track.window_s = config.window_s;
  track.step_s = config.step_s;
  track.sample_rate = fs;
  track.window_samples = to_samples(config.window_s, fs);
  track.step_samples = std::max<std::size_t>(1, to_samples(config.step_s, fs));
  if (track.window_samples < 2 * config.order + 2 || track.window_samples > phase.size()) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("ANLS window of {} samples does not fit a record of {}", track.window_samples, phase.size()));
  }
  const auto starts = tile(phase.size(), track.window_samples, track.step_samples);
  track.windows = grid_scan(phase.samples, fs, starts, track.window_samples, config);
  return track;
}

namespace {

// One parabolic step on the Hann-weighted residual power through f0 and
// f0 +- one grid step; keeps f0 when the fit fails, the cost is not convex or
// the vertex does not lower it.
double refine_fundamental(std::span<const double> cpi, double fs, double f0, const AnlsConfig& config) {
  const WeightedSegment seg = weigh(cpi, true);
  auto cost = [&](double f) {
    check_residual_args(cpi.size(), fs, f, config.order, config.estimate_offset);
    return weighted_residual(seg, fs, f, config.order, config.estimate_offset);
  };
  const double h = config.grid_step;
  const double a = std::max(config.grid_lo, f0 - h), b = std::min(config.grid_hi, f0 + h);
  if (!(a < f0 && f0 < b)) return f0;
  try {
    const double ca = cost(a), cf = cost(f0), cb = cost(b);
    const double curvature = ca / ((a - f0) * (a - b)) + cf / ((f0 - a) * (f0 - b)) + cb / ((b - a) * (b - f0));
    if (!(curvature > 0)) return f0;
    const double slope = ca * (f0 + b) / ((a - f0) * (a - b)) + cf * (a + b) / ((f0 - a) * (f0 - b)) +
                         cb * (a + f0) / ((b - a) * (b - f0));
    const double vertex = std::clamp(slope / (2.0 * curvature), f0 - 2.0 * h, f0 + 2.0 * h);
    return cost(vertex) < cf ? vertex : f0;
  } catch (const Error&) {
    return f0;
  }
}

}  // namespace

Reference reconstruct_reference(const PhaseSignal& phase, std::size_t start, std::size_t length,
                                const AnlsConfig& config, const BreathingTrack* track) {
  config.validate();
  const double fs = phase.sample_rate;
  if (start + length > phase.size()) throw Error(ErrorCode::InvalidArgument, "reference window exceeds the record");
  const std::size_t sub = to_samples(config.window_s, fs);
  if (sub > length) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("CPI of {} samples is shorter than the ANLS window ({})", length, sub));
  }

  Reference ref;
  if (track != nullptr && track->sample_rate == fs && track->window_samples == sub) {
    for (const auto& w : track->windows) {
      if (w.window_start >= start && w.window_start + w.length <= start + length) ref.subwindow_fundamentals.push_back(w.fundamental);
    }
  }
  if (ref.subwindow_fundamentals.empty()) {
    const std::size_t step = std::max<std::size_t>(1, to_samples(config.step_s, fs));
    const auto starts = tile(length, sub, step);
    const std::span<const double> cpi(phase.samples.data() + start, length);
    for (const auto& w : grid_scan(cpi, fs, starts, sub, config)) ref.subwindow_fundamentals.push_back(w.fundamental);
  }
  if (ref.subwindow_fundamentals.empty()) throw Error(ErrorCode::InvalidArgument, "no ANLS subwindow inside the CPI");

  double f_hat = median(ref.subwindow_fundamentals);
  const std::span<const double> cpi(phase.samples.data() + start, length);
  if (config.refine) f_hat = refine_fundamental(cpi, fs, f_hat, config);
  ref.model = fit_impl(cpi, fs, f_hat, config.order, config.estimate_offset, &ref.s_ref);
  ref.model.window_start = start;
  return ref;
}

}  // namespace pulsecancel::anls
