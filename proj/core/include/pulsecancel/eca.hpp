#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace pulsecancel::eca {

struct EcaConfig {
  std::size_t order = 5;         // lags M
  double ridge = 1e-8;           // relative to the mean diagonal of X^T X
  double max_condition = 1e10;   // ridge is applied only above this

  void validate() const;
};

struct EcaResult {
  std::vector<double> output;   // theta - X w
  std::vector<double> weights;  // w
  double residual_ratio = 1.0;  // ||output||^2 / ||theta||^2
  double condition = 1.0;       // estimate for X from the pivoted R diagonal
  bool ridged = false;
  bool degenerate = false;      // X was all zero; output == theta
};

/// X[n, m] = s_ref[n - m] for n >= m, else 0.
Eigen::MatrixXd lag_matrix(std::span<const double> s_ref, std::size_t order);

/// Removes the least-squares projection of theta onto the columns of X.
EcaResult eca_cancel(std::span<const double> theta, const Eigen::MatrixXd& x, const EcaConfig& config = {});

/// Convenience: builds the lag matrix from `s_ref` first.
EcaResult eca_cancel(std::span<const double> theta, std::span<const double> s_ref, const EcaConfig& config);

}  // namespace pulsecancel::eca
