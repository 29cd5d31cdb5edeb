#include "pulsecancel/eca.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "pulsecancel/error.hpp"

namespace pulsecancel::eca {

void EcaConfig::validate() const {
  if (order == 0) throw Error(ErrorCode::InvalidArgument, "ECA order must be >= 1");
  if (!(ridge >= 0)) throw Error(ErrorCode::InvalidArgument, "ECA ridge must be >= 0");
  if (!(max_condition > 1)) throw Error(ErrorCode::InvalidArgument, "ECA max_condition must exceed 1");
}

Eigen::MatrixXd lag_matrix(std::span<const double> s_ref, std::size_t order) {
  const std::size_t n = s_ref.size();
  if (order == 0) throw Error(ErrorCode::InvalidArgument, "lag order must be >= 1");
  if (order >= n) throw Error(ErrorCode::InvalidArgument, fmt::format("lag order {} must be below length {}", order, n));
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(order));
  for (std::size_t m = 0; m < order; ++m)
    for (std::size_t t = m; t < n; ++t) x(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(m)) = s_ref[t - m];
  return x;
}

EcaResult eca_cancel(std::span<const double> theta, const Eigen::MatrixXd& x, const EcaConfig& config) {
  config.validate();
  const auto rows = static_cast<Eigen::Index>(theta.size());
  if (x.rows() != rows) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("X has {} rows but theta has {}", x.rows(), rows));
  }
  const Eigen::Map<const Eigen::VectorXd> y(theta.data(), rows);
  const double y_energy = y.squaredNorm();

  EcaResult res;
  if (x.cols() == 0 || x.isZero(0.0)) {
    res.output.assign(theta.begin(), theta.end());
    res.weights.assign(static_cast<std::size_t>(x.cols()), 0.0);
    res.degenerate = true;
    return res;
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  const Eigen::VectorXd d = qr.matrixQR().diagonal().cwiseAbs();
  res.condition = d.minCoeff() > 0 ? d.maxCoeff() / d.minCoeff() : std::numeric_limits<double>::infinity();

  Eigen::VectorXd w;
  if (res.condition > config.max_condition && config.ridge > 0) {
    const auto m = x.cols();
    const double eps = config.ridge * x.squaredNorm() / static_cast<double>(m);
    Eigen::MatrixXd aug(rows + m, m);
    aug << x, std::sqrt(eps) * Eigen::MatrixXd::Identity(m, m);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(rows + m);
    rhs.head(rows) = y;
    w = aug.householderQr().solve(rhs);
    res.ridged = true;
  } else {
    w = qr.solve(y);
  }

  const Eigen::VectorXd out = y - x * w;
  res.output.assign(out.data(), out.data() + out.size());
  res.weights.assign(w.data(), w.data() + w.size());
  res.residual_ratio = y_energy > 0 ? out.squaredNorm() / y_energy : 0.0;
  return res;
}

EcaResult eca_cancel(std::span<const double> theta, std::span<const double> s_ref, const EcaConfig& config) {
  return eca_cancel(theta, lag_matrix(s_ref, config.order), config);
}

}  // namespace pulsecancel::eca
