#pragma once

#include "ggmp/dataset.hpp"

#include <Eigen/Core>

#include <vector>

namespace ggmp {

/// Precomputed component predictive log-densities at each training input's
/// evaluation support (samples or grid). Rows are evaluation points; columns
/// are components. Stored row-stabilized so mixture evaluation never
/// underflows: log q_n(y_m) = offset[m] + log(scaled.row(m) . w).
struct ComponentDensityTable {
  struct Entry {
    Eigen::MatrixXd scaled;         // exp(log_comp - rowmax), M x K
    Eigen::VectorXd offset;         // rowwise max of log_comp, M
    Eigen::VectorXd point_weights;  // 1/T_n (samples) or p_n * dy (grid)
  };
  std::vector<Entry> entries;
  int k = 0;

  static Entry make_entry(const Eigen::MatrixXd& log_comp,
                          const Eigen::VectorXd& point_weights);
  void add(const Eigen::MatrixXd& log_comp, const Eigen::VectorXd& point_weights);
};

/// Distributional log-likelihood sum_n sum_m a_{nm} log q_n(y_{nm}; w_n).
double dist_loglik(const ComponentDensityTable& table,
                   const std::vector<Eigen::VectorXd>& weights);

/// Shared-weight form; fills the gradient with respect to w when requested.
double dist_loglik_shared(const ComponentDensityTable& table, const Eigen::VectorXd& w,
                          Eigen::VectorXd* grad = nullptr);

struct Lemma1Decomposition {
  double loglik = 0.0;   // integral of p log q
  double entropy = 0.0;  // H(p)
  double kl = 0.0;       // KL(p || q), +inf when q vanishes where p > 0
};

/// Splits the per-density log-likelihood into -H(p) - KL(p||q) on a shared
/// grid; q holds density values at p's grid points.
Lemma1Decomposition lemma1_decomposition(const GriddedDensity& p, const Eigen::VectorXd& q);

struct SimplexOptConfig {
  double tol = 1e-8;
  int max_iters = 10000;
  double weight_floor = 1e-12;
};

/// Exponentiated-gradient ascent of the (concave) shared-weight objective
/// from w = 1/K. Iterates stay in the simplex interior; the result is
/// renormalized after flooring.
Eigen::VectorXd optimize_shared_weights(const ComponentDensityTable& table,
                                        const SimplexOptConfig& config = {});

/// Softmax-linear input-dependent weights with the last class as anchor
/// (beta_K = 0, b_K = 0). Beta is expressed in standardized coordinates.
struct XdepWeights {
  Eigen::MatrixXd beta;  // (K-1) x d
  Eigen::VectorXd bias;  // K-1
  Eigen::VectorXd x_mean, x_scale;

  Eigen::VectorXd weights_at(const Eigen::VectorXd& x) const;
};

/// Quasi-Newton ascent over {beta_k, b_k} initialized at the shared-weight
/// solution, so the achieved objective never drops below it.
XdepWeights optimize_xdep_weights(const ComponentDensityTable& table,
                                  const Eigen::MatrixXd& inputs,
                                  const Eigen::VectorXd& shared_w);

}  // namespace ggmp
