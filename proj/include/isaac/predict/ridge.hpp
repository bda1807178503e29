#pragma once

#include <Eigen/Dense>

namespace isaac::predict {

struct RidgeFit {
  double intercept = 0.0;
  Eigen::VectorXd coef;

  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
};

// Minimizes sum_i w_i (y_i - a - x_i b)^2 + lambda |b|^2 with the intercept
// unpenalized. Weights are rescaled to mean 1 first, so a constant weight
// vector has no effect. At lambda = 0 a rank-deficient design throws
// SingularSystem.
RidgeFit fit_ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w, double lambda);

}  // namespace isaac::predict
