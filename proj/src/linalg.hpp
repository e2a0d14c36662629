#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace dpanel::linalg {

// Relative pivot below which a factorization is treated as singular.
inline constexpr double kPivotTolerance = 1e-12;

// Least squares through column-pivoted QR. Throws EstimationError naming the
// collinear columns when X is rank deficient.
struct LeastSquares {
  Eigen::VectorXd coefficients;
  Eigen::MatrixXd xtx_inverse;
};
LeastSquares least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                           const std::vector<std::string>& names);

// Symmetric positive definite solve via pivoted LDL' on the diagonally
// equilibrated matrix, so the singularity test does not depend on column
// scaling. Throws EstimationError mentioning `what` when singular.
class SpdSolver {
 public:
  SpdSolver(const Eigen::MatrixXd& a, std::string what);
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;
  Eigen::MatrixXd inverse() const;

 private:
  Eigen::VectorXd scale_;
  Eigen::LDLT<Eigen::MatrixXd> ldlt_;
  Eigen::Index n_;
};

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a);

}  // namespace dpanel::linalg
