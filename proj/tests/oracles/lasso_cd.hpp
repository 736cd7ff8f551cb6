#ifndef RANDNET_TESTS_LASSO_CD_HPP
#define RANDNET_TESTS_LASSO_CD_HPP

#include <Eigen/Dense>

#include <cmath>

// Cyclic coordinate descent for min 1/2 ||r - D x||^2 + lambda ||x||_1 on an
// explicit dense D. Written independently of the FISTA encoder; used only as
// a test oracle.
namespace oracle {

struct LassoSolution {
  Eigen::VectorXd x;
  double objective = 0.0;
  int sweeps = 0;
};

inline double lasso_value(const Eigen::MatrixXd& d, const Eigen::VectorXd& r, const Eigen::VectorXd& x, double lambda) {
  return 0.5 * (r - d * x).squaredNorm() + lambda * x.lpNorm<1>();
}

inline LassoSolution lasso_coordinate_descent(const Eigen::MatrixXd& d, const Eigen::VectorXd& r, double lambda,
                                              int max_sweeps = 200000, double tol = 1e-15) {
  const Eigen::Index p = d.cols();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd residual = r;
  const Eigen::VectorXd col_sq = d.colwise().squaredNorm().transpose();
  LassoSolution sol;
  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    double max_delta = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (col_sq(j) == 0.0) continue;
      const double rho = d.col(j).dot(residual) + col_sq(j) * x(j);
      const double shrunk = std::copysign(std::max(std::abs(rho) - lambda, 0.0), rho) / col_sq(j);
      const double delta = shrunk - x(j);
      if (delta != 0.0) {
        residual -= delta * d.col(j);
        x(j) = shrunk;
      }
      max_delta = std::max(max_delta, std::abs(delta));
    }
    sol.sweeps = sweep;
    if (max_delta <= tol) break;
  }
  sol.x = x;
  sol.objective = lasso_value(d, r, x, lambda);
  return sol;
}

}  // namespace oracle

#endif  // RANDNET_TESTS_LASSO_CD_HPP
