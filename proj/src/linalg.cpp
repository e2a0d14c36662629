#include "linalg.hpp"

#include "dpanel/error.hpp"

#include <cmath>

namespace dpanel::linalg {

LeastSquares least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                           const std::vector<std::string>& names) {
  if (x.rows() < x.cols()) {
    throw EstimationError("fewer observations (" + std::to_string(x.rows()) + ") than regressors (" +
                          std::to_string(x.cols()) + ")");
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(kPivotTolerance);
  if (qr.rank() < x.cols()) {
    std::string cols;
    for (Eigen::Index k = qr.rank(); k < x.cols(); ++k) {
      const auto c = static_cast<std::size_t>(qr.colsPermutation().indices()(k));
      if (!cols.empty()) cols += ", ";
      cols += c < names.size() ? names[c] : "column " + std::to_string(c);
    }
    throw EstimationError("regressor matrix is rank deficient; collinear column(s): " + cols);
  }
  LeastSquares out;
  out.coefficients = qr.solve(y);
  const Eigen::Index k = x.cols();
  Eigen::MatrixXd r = qr.matrixR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
  Eigen::MatrixXd r_inv = r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
  Eigen::MatrixXd inner = r_inv * r_inv.transpose();
  const auto& perm = qr.colsPermutation();
  out.xtx_inverse = perm * inner * perm.transpose();
  return out;
}

SpdSolver::SpdSolver(const Eigen::MatrixXd& a, std::string what) : n_(a.rows()) {
  const Eigen::VectorXd diag = a.diagonal();
  if (n_ == 0 || !(diag.minCoeff() > 0)) throw EstimationError(what + " is singular or not positive definite");
  scale_ = diag.cwiseSqrt().cwiseInverse();
  ldlt_.compute(scale_.asDiagonal() * a * scale_.asDiagonal());
  if (ldlt_.info() != Eigen::Success) throw EstimationError("cannot factor " + what);
  const Eigen::VectorXd d = ldlt_.vectorD().cwiseAbs();
  const double dmax = n_ > 0 ? d.maxCoeff() : 0.0;
  if (n_ == 0 || !(dmax > 0) || d.minCoeff() < kPivotTolerance * dmax ||
      (ldlt_.vectorD().array() < 0).any()) {
    throw EstimationError(what + " is singular or not positive definite");
  }
}

Eigen::MatrixXd SpdSolver::solve(const Eigen::MatrixXd& rhs) const {
  return scale_.asDiagonal() * ldlt_.solve(scale_.asDiagonal() * rhs);
}

Eigen::MatrixXd SpdSolver::inverse() const {
  return symmetrize(solve(Eigen::MatrixXd::Identity(n_, n_)));
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a) { return 0.5 * (a + a.transpose()); }

}  // namespace dpanel::linalg
