#include "ggmp/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace ggmp {

BfgsResult bfgs_minimize(const Objective& fn, const Eigen::VectorXd& x0,
                         const BfgsConfig& config) {
  const Eigen::Index n = x0.size();
  BfgsResult res;
  res.x = x0;

  Eigen::VectorXd grad(n);
  double f = fn(res.x, &grad);
  if (!std::isfinite(f)) throw std::runtime_error("bfgs_minimize: infeasible start point");
  res.f = f;

  Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(n, n);
  for (int it = 0; it < config.max_iters; ++it) {
    res.iters = it;
    if (grad.lpNorm<Eigen::Infinity>() < config.grad_tol) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd dir = -(h_inv * grad);
    double slope = grad.dot(dir);
    if (slope >= 0) {  // curvature update went bad, reset to steepest descent
      h_inv.setIdentity();
      dir = -grad;
      slope = grad.dot(dir);
    }

    double step = config.init_step;
    Eigen::VectorXd x_new;
    Eigen::VectorXd grad_new(n);
    double f_new = f;
    bool accepted = false;
    for (int ls = 0; ls < config.max_line_search; ++ls) {
      x_new = res.x + step * dir;
      f_new = fn(x_new, nullptr);
      if (std::isfinite(f_new) && f_new <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    f_new = fn(x_new, &grad_new);
    Eigen::VectorXd s = x_new - res.x;
    Eigen::VectorXd y = grad_new - grad;
    double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      // standard BFGS inverse-Hessian update
      Eigen::VectorXd hy = h_inv * y;
      double yhy = y.dot(hy);
      h_inv += ((sy + yhy) / (sy * sy)) * (s * s.transpose()) -
               (hy * s.transpose() + s * hy.transpose()) / sy;
    }

    bool tiny = std::abs(f - f_new) <= config.rel_f_tol * (std::abs(f) + 1e-12);
    res.x = x_new;
    f = f_new;
    grad = grad_new;
    res.f = f;
    if (tiny) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace ggmp
