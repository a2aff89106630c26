#include "ggmp/gp.hpp"

#include "ggmp/optim.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

namespace ggmp {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Lower Cholesky of C + jitter*I, escalating jitter from 1e-10 to 1e-4 of the
/// mean diagonal.
Eigen::MatrixXd chol_with_jitter(const Eigen::MatrixXd& C) {
  const double scale = std::max(C.diagonal().mean(), std::numeric_limits<double>::min());
  for (double rel = 1e-10; rel <= 1e-4 * 1.0000001; rel *= 10.0) {
    Eigen::MatrixXd Cj = C;
    Cj.diagonal().array() += rel * scale;
    Eigen::LLT<Eigen::MatrixXd> llt(Cj);
    if (llt.info() == Eigen::Success) return llt.matrixL();
  }
  throw std::runtime_error("kernel matrix not PD");
}

void check_params(const KernelParams& p) {
  if (!p.log_lengthscales.allFinite() || !std::isfinite(p.log_signal_variance))
    throw std::invalid_argument("kernel parameters must be finite");
}

}  // namespace

std::string to_string(KernelFamily f) {
  return f == KernelFamily::SquaredExponential ? "squared_exponential" : "matern52";
}

KernelFamily kernel_family_from_string(const std::string& s) {
  if (s == "squared_exponential" || s == "se" || s == "rbf")
    return KernelFamily::SquaredExponential;
  if (s == "matern52") return KernelFamily::Matern52;
  throw std::invalid_argument("unknown kernel family '" + s + "'");
}

Eigen::MatrixXd kernel_matrix(const KernelParams& params, const Eigen::MatrixXd& A,
                              const Eigen::MatrixXd& B) {
  check_params(params);
  if (A.cols() != params.dim() || B.cols() != params.dim())
    throw std::invalid_argument("kernel_matrix: input dimension mismatch");
  const double sf2 = std::exp(params.log_signal_variance);
  const Eigen::VectorXd inv_ell2 =
      (-2.0 * params.log_lengthscales.array()).exp().matrix();

  // scaled squared distance: sum_q (a_q - b_q)^2 / ell_q^2
  Eigen::MatrixXd u2 = Eigen::MatrixXd::Zero(A.rows(), B.rows());
  for (Eigen::Index q = 0; q < params.dim(); ++q) {
    Eigen::MatrixXd diff = A.col(q).replicate(1, B.rows()).rowwise() -
                           B.col(q).transpose();
    u2.noalias() += inv_ell2[q] * diff.cwiseProduct(diff);
  }

  if (params.family == KernelFamily::SquaredExponential)
    return sf2 * (-0.5 * u2.array()).exp().matrix();

  const double s5 = std::sqrt(5.0);
  Eigen::ArrayXXd u = u2.array().max(0.0).sqrt();
  return (sf2 * (1.0 + s5 * u + (5.0 / 3.0) * u2.array()) * (-s5 * u).exp()).matrix();
}

namespace {

struct LmlWorkspace {
  Eigen::MatrixXd K;  // kernel part only
  Eigen::MatrixXd L;  // chol of K + V
  Eigen::VectorXd alpha;
  double value = 0.0;
};

LmlWorkspace lml_core(const KernelParams& params, const GpTrainingData& data) {
  const Eigen::Index n = data.X.rows();
  if (n < 1) throw std::invalid_argument("gp: empty training data");
  if (data.targets.size() != n || data.noise_vars.size() != n)
    throw std::invalid_argument("gp: inconsistent training data sizes");

  LmlWorkspace ws;
  ws.K = kernel_matrix(params, data.X, data.X);
  Eigen::MatrixXd C = ws.K;
  C.diagonal() += data.noise_vars;
  ws.L = chol_with_jitter(C);

  Eigen::VectorXd r = data.targets.array() - data.prior_mean;
  ws.alpha = ws.L.triangularView<Eigen::Lower>().solve(r);
  double quad = ws.alpha.squaredNorm();
  double logdet = 2.0 * ws.L.diagonal().array().log().sum();
  ws.alpha = ws.L.transpose().triangularView<Eigen::Upper>().solve(ws.alpha);
  ws.value = -0.5 * (static_cast<double>(n) * std::log(kTwoPi) + logdet + quad);
  return ws;
}

}  // namespace

double log_marginal_likelihood(const KernelParams& params, const GpTrainingData& data) {
  return lml_core(params, data).value;
}

double log_marginal_likelihood_grad(const KernelParams& params, const GpTrainingData& data,
                                    Eigen::VectorXd& grad) {
  LmlWorkspace ws = lml_core(params, data);
  const Eigen::Index n = data.X.rows();
  const Eigen::Index d = params.dim();

  // M = alpha alpha^T - C^{-1}; dLML/dtheta = 0.5 tr(M dK/dtheta)
  Eigen::MatrixXd c_inv = Eigen::MatrixXd::Identity(n, n);
  ws.L.triangularView<Eigen::Lower>().solveInPlace(c_inv);
  c_inv = c_inv.transpose() * c_inv;
  Eigen::MatrixXd m = ws.alpha * ws.alpha.transpose() - c_inv;

  grad.resize(d + 1);
  const Eigen::VectorXd inv_ell2 = (-2.0 * params.log_lengthscales.array()).exp().matrix();

  if (params.family == KernelFamily::SquaredExponential) {
    for (Eigen::Index q = 0; q < d; ++q) {
      Eigen::MatrixXd diff = data.X.col(q).replicate(1, n).rowwise() -
                             data.X.col(q).transpose();
      Eigen::MatrixXd dk = ws.K.cwiseProduct(diff.cwiseProduct(diff)) * inv_ell2[q];
      grad[q] = 0.5 * m.cwiseProduct(dk).sum();
    }
  } else {
    const double s5 = std::sqrt(5.0);
    const double sf2 = std::exp(params.log_signal_variance);
    Eigen::MatrixXd u2 = Eigen::MatrixXd::Zero(n, n);
    std::vector<Eigen::MatrixXd> d2q(static_cast<std::size_t>(d));
    for (Eigen::Index q = 0; q < d; ++q) {
      Eigen::MatrixXd diff = data.X.col(q).replicate(1, n).rowwise() -
                             data.X.col(q).transpose();
      d2q[static_cast<std::size_t>(q)] = diff.cwiseProduct(diff) * inv_ell2[q];
      u2 += d2q[static_cast<std::size_t>(q)];
    }
    Eigen::ArrayXXd u = u2.array().max(0.0).sqrt();
    // dk/du2 = -(5 sf2/6) (1 + sqrt(5) u) exp(-sqrt(5) u); d u2/d log ell_q = -2 d2q
    Eigen::ArrayXXd dk_du2 = -(5.0 * sf2 / 6.0) * (1.0 + s5 * u) * (-s5 * u).exp();
    for (Eigen::Index q = 0; q < d; ++q) {
      Eigen::MatrixXd dk = (dk_du2 * (-2.0) * d2q[static_cast<std::size_t>(q)].array()).matrix();
      grad[q] = 0.5 * m.cwiseProduct(dk).sum();
    }
  }
  grad[d] = 0.5 * m.cwiseProduct(ws.K).sum();  // dK/dlog sf2 = K
  return ws.value;
}

TrainedGp finalize_gp(const KernelParams& params, const GpTrainingData& data) {
  LmlWorkspace ws = lml_core(params, data);
  TrainedGp gp;
  gp.params = params;
  gp.data = data;
  gp.chol = ws.L;
  gp.alpha = ws.alpha;
  gp.lml = ws.value;
  return gp;
}

TrainedGp train_gp(const GpTrainingData& data, const GpTrainConfig& config,
                   KernelFamily family) {
  const Eigen::Index n = data.X.rows();
  const Eigen::Index d = data.X.cols();
  if ((data.noise_vars.array() <= 0.0).any())
    throw std::invalid_argument("train_gp: noise variances must be positive");

  // data-derived scales
  Eigen::VectorXd ell0(d);
  for (Eigen::Index q = 0; q < d; ++q) {
    std::vector<double> dists;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) {
        double v = std::abs(data.X(i, q) - data.X(j, q));
        if (v > 0) dists.push_back(v);
      }
    if (dists.empty()) {
      ell0[q] = 1.0;
    } else {
      auto mid = dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2);
      std::nth_element(dists.begin(), mid, dists.end());
      ell0[q] = *mid;
    }
  }
  double target_var = 1e-12;
  if (n > 1) {
    double mean = data.targets.mean();
    target_var = std::max((data.targets.array() - mean).square().mean(), 1e-12);
  }

  Objective neg_lml = [&](const Eigen::VectorXd& theta, Eigen::VectorXd* grad) -> double {
    KernelParams p;
    p.family = family;
    p.log_lengthscales = theta.head(d);
    p.log_signal_variance = theta[d];
    if (theta.lpNorm<Eigen::Infinity>() > 30.0)
      return std::numeric_limits<double>::infinity();
    try {
      if (grad) {
        Eigen::VectorXd g;
        double v = log_marginal_likelihood_grad(p, data, g);
        *grad = -g;
        return std::isfinite(v) ? -v : std::numeric_limits<double>::infinity();
      }
      double v = log_marginal_likelihood(p, data);
      return std::isfinite(v) ? -v : std::numeric_limits<double>::infinity();
    } catch (const std::runtime_error&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> jitter(-1.5, 1.5);

  bool any_ok = false;
  double best_f = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_theta;
  for (int s = 0; s < config.starts; ++s) {
    Eigen::VectorXd theta(d + 1);
    for (Eigen::Index q = 0; q < d; ++q)
      theta[q] = std::log(ell0[q]) + (s == 0 ? 0.0 : jitter(rng));
    theta[d] = std::log(target_var) + (s == 0 ? 0.0 : jitter(rng));
    try {
      BfgsConfig bc;
      bc.max_iters = config.max_iters;
      bc.grad_tol = 1e-6;
      BfgsResult r = bfgs_minimize(neg_lml, theta, bc);
      if (r.f < best_f) {
        best_f = r.f;
        best_theta = r.x;
      }
      any_ok = true;
    } catch (const std::runtime_error&) {
      continue;  // this start was infeasible
    }
  }
  if (!any_ok) throw std::runtime_error("train_gp: all optimizer starts failed");

  KernelParams p;
  p.family = family;
  p.log_lengthscales = best_theta.head(d);
  p.log_signal_variance = best_theta[d];
  return finalize_gp(p, data);
}

void posterior_predict(const TrainedGp& gp, const Eigen::MatrixXd& Xstar,
                       Eigen::VectorXd& mean, Eigen::VectorXd& var) {
  const Eigen::Index m = Xstar.rows();
  Eigen::MatrixXd kxs = kernel_matrix(gp.params, gp.data.X, Xstar);  // N x m
  mean = (kxs.transpose() * gp.alpha).array() + gp.data.prior_mean;
  Eigen::MatrixXd w = gp.chol.triangularView<Eigen::Lower>().solve(kxs);
  const double kss = std::exp(gp.params.log_signal_variance);  // k(x*,x*) for both families
  var.resize(m);
  for (Eigen::Index i = 0; i < m; ++i)
    var[i] = std::max(kss - w.col(i).squaredNorm(), 0.0);
}

}  // namespace ggmp
