#pragma once

#include "ggmp/dataset.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace ggmp {

/// Per-input fitted mixture parameters. Component order is the local EM
/// labeling until an AlignmentPlan is applied.
struct LocalMixtureFit {
  std::string input_id;
  Eigen::VectorXd weights;            // K, simplex
  Eigen::MatrixXd means;              // K x p
  std::vector<Eigen::MatrixXd> covs;  // K matrices, p x p, PSD
  Eigen::VectorXd responsibilities_sum;  // K, effective sample sizes
  double loglik = 0.0;

  Eigen::Index components() const { return weights.size(); }
  Eigen::Index dim() const { return means.cols(); }
};

struct EmConfig {
  int restarts = 4;
  int max_iters = 500;
  double rel_tol = 1e-7;           // |delta loglik| < rel_tol * T_n
  double var_floor_scale = 1e-6;   // floor = scale * per-coordinate sample variance
  std::uint64_t seed = 0;
  std::vector<double>* loglik_trace = nullptr;  // per-iteration trace of the best restart
};

/// EM fit of a K-component Gaussian mixture with k-means++ seeding and
/// restarts; best restart by final log-likelihood wins. Covariance diagonals
/// are floored; components whose responsibility mass collapses are reseeded
/// at the lowest-density sample.
LocalMixtureFit fit_gmm(const SampleBlock& block, int k, const EmConfig& config = {});

/// sum_t log sum_k w_k N(y_t | m_k, S_k), evaluated with log-sum-exp.
double gmm_log_likelihood(const LocalMixtureFit& fit, const Eigen::MatrixXd& samples);

/// Log density of each sample under each component: T x K.
Eigen::MatrixXd gmm_component_log_density(const LocalMixtureFit& fit,
                                          const Eigen::MatrixXd& samples);

}  // namespace ggmp
