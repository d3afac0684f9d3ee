#pragma once

#include <Eigen/Dense>
#include <vector>

namespace kflow {

/// Value, gradient and block-tridiagonal Hessian of an objective whose
/// variables are a sequence of slices x_0..x_{S-1}, coupled only to their
/// neighbours.
struct SliceModel {
  double value = 0.0;
  std::vector<Eigen::VectorXd> grad;
  std::vector<Eigen::MatrixXd> diag;   ///< d^2 / dx_m^2
  std::vector<Eigen::MatrixXd> upper;  ///< d^2 / dx_m dx_{m+1}
};

class SliceObjective {
 public:
  virtual ~SliceObjective() = default;
  /// +inf outside the domain.
  virtual double value(const std::vector<Eigen::VectorXd>& x) const = 0;
  virtual SliceModel model(const std::vector<Eigen::VectorXd>& x) const = 0;
};

struct NewtonOptions {
  double tol = 1e-8;
  int max_iter = 200;
  /// Entries are kept at or above this floor.
  double floor = 1e-12;
};

struct NewtonResult {
  std::vector<Eigen::VectorXd> x;
  double value = 0.0;
  /// max |basis^T grad| over slices at the returned point.
  double kkt = 0.0;
  int iterations = 0;
  int shifted_iterations = 0;
};

/// Modified Newton over x_m + basis * y_m (each slice moves inside the column
/// span of `basis`), positivity by fraction-to-boundary, Armijo backtracking,
/// and a Levenberg shift whenever the reduced Hessian is not positive
/// definite. Throws ConvergenceError at the iteration cap or when the line
/// search stalls.
NewtonResult minimize_slices(const SliceObjective& objective, std::vector<Eigen::VectorXd> x0,
                             const Eigen::MatrixXd& basis, const NewtonOptions& options);

}  // namespace kflow
