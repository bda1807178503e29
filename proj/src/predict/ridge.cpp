#include "isaac/predict/ridge.hpp"

#include "isaac/util/error.hpp"

namespace isaac::predict {

Eigen::VectorXd RidgeFit::predict(const Eigen::MatrixXd& x) const {
  return (x * coef).array() + intercept;
}

RidgeFit fit_ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w, double lambda) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (y.size() != n || w.size() != n) throw Error(ErrorCode::kInvalidArgument, "ridge: row count mismatch");
  if (n == 0) throw Error(ErrorCode::kEmptyCorpus, "ridge: no rows");
  if (!(lambda >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "ridge: lambda must be >= 0");
  if ((w.array() < 0.0).any() || !(w.sum() > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "ridge: weights must be non-negative with positive sum");
  }
  const Eigen::VectorXd wn = w * (static_cast<double>(n) / w.sum());
  const double wsum = wn.sum();
  const Eigen::RowVectorXd xbar = (wn.transpose() * x) / wsum;
  const double ybar = wn.dot(y) / wsum;

  RidgeFit fit;
  if (p == 0) {
    fit.intercept = ybar;
    fit.coef.resize(0);
    return fit;
  }
  const Eigen::MatrixXd xc = x.rowwise() - xbar;
  const Eigen::VectorXd yc = y.array() - ybar;
  const Eigen::VectorXd sw = wn.array().sqrt();
  const Eigen::MatrixXd xw = sw.asDiagonal() * xc;
  const Eigen::VectorXd yw = sw.asDiagonal() * yc;

  if (lambda == 0.0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xw);
    if (qr.rank() < p) {
      throw Error(ErrorCode::kSingularSystem,
                  "design is rank deficient (rank " + std::to_string(qr.rank()) + " of " + std::to_string(p) +
                      "); use lambda > 0");
    }
    fit.coef = qr.solve(yw);
  } else {
    Eigen::MatrixXd a = xw.transpose() * xw;
    a.diagonal().array() += lambda;
    fit.coef = a.llt().solve(xw.transpose() * yw);
  }
  fit.intercept = ybar - xbar.dot(fit.coef);
  return fit;
}

}  // namespace isaac::predict
