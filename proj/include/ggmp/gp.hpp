#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>

namespace ggmp {

enum class KernelFamily { SquaredExponential, Matern52 };

std::string to_string(KernelFamily f);
KernelFamily kernel_family_from_string(const std::string& s);

/// ARD kernel hyperparameters, stored in log space so the trainer can work
/// unconstrained. Exponentiated values must be strictly positive and finite.
struct KernelParams {
  KernelFamily family = KernelFamily::SquaredExponential;
  Eigen::VectorXd log_lengthscales;  // one per input dimension
  double log_signal_variance = 0.0;

  Eigen::Index dim() const { return log_lengthscales.size(); }
};

/// Inputs, regression targets, and fixed per-observation noise variances for
/// one scalar GP. Targets are used as-is; callers center them and record the
/// constant prior mean here.
struct GpTrainingData {
  Eigen::MatrixXd X;           // N x d
  Eigen::VectorXd targets;     // N
  Eigen::VectorXd noise_vars;  // N, strictly positive
  double prior_mean = 0.0;
};

struct TrainedGp {
  KernelParams params;
  GpTrainingData data;
  Eigen::MatrixXd chol;   // lower factor of K + V (+ jitter)
  Eigen::VectorXd alpha;  // (K+V)^{-1} (y - m)
  double lml = 0.0;
};

struct GpTrainConfig {
  int starts = 5;
  int max_iters = 60;
  std::uint64_t seed = 0;
};

/// Cross-kernel matrix between row sets A (n x d) and B (m x d).
Eigen::MatrixXd kernel_matrix(const KernelParams& params, const Eigen::MatrixXd& A,
                              const Eigen::MatrixXd& B);

/// log N(y | m, K+V) via Cholesky with escalating jitter. Throws if K+V cannot
/// be factorized even at the maximum jitter.
double log_marginal_likelihood(const KernelParams& params, const GpTrainingData& data);

/// Same value plus the gradient with respect to (log_lengthscales...,
/// log_signal_variance), in that order.
double log_marginal_likelihood_grad(const KernelParams& params, const GpTrainingData& data,
                                    Eigen::VectorXd& grad);

/// Multi-start BFGS ascent of the log marginal likelihood in log-parameter
/// space. Start scales derive from the data: lengthscale near the median
/// pairwise distance per dimension, signal variance near the target variance.
TrainedGp train_gp(const GpTrainingData& data, const GpTrainConfig& config = {},
                   KernelFamily family = KernelFamily::SquaredExponential);

/// Rebuilds the Cholesky cache for known hyperparameters (used after model load).
TrainedGp finalize_gp(const KernelParams& params, const GpTrainingData& data);

/// Posterior mean and variance at the query rows; variances clamped at 0.
void posterior_predict(const TrainedGp& gp, const Eigen::MatrixXd& Xstar,
                       Eigen::VectorXd& mean, Eigen::VectorXd& var);

}  // namespace ggmp
