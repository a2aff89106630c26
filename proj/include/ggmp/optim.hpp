#pragma once

#include <Eigen/Core>

#include <functional>
#include <limits>

namespace ggmp {

/// Objective for minimization: returns f(x) and fills grad when non-null.
/// May return +inf to signal an infeasible point (the line search backs off).
using Objective =
    std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;

struct BfgsConfig {
  int max_iters = 100;
  double grad_tol = 1e-7;
  double rel_f_tol = 1e-10;
  double init_step = 1.0;
  int max_line_search = 40;
};

struct BfgsResult {
  Eigen::VectorXd x;
  double f = std::numeric_limits<double>::infinity();
  int iters = 0;
  bool converged = false;
};

/// Dense BFGS with Armijo backtracking. Small problems only (dims in the
/// tens); gradient-based callers own any parameter transforms.
BfgsResult bfgs_minimize(const Objective& fn, const Eigen::VectorXd& x0,
                         const BfgsConfig& config = {});

}  // namespace ggmp
