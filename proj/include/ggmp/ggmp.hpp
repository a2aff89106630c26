#pragma once

#include "ggmp/align.hpp"
#include "ggmp/dataset.hpp"
#include "ggmp/gp.hpp"
#include "ggmp/mixture.hpp"
#include "ggmp/weights.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace ggmp {

enum class WeightMode { Equal, Shared, InputDependent };

std::string to_string(WeightMode m);
WeightMode weight_mode_from_string(const std::string& s);

struct GgmpConfig {
  int k = 3;
  KernelFamily kernel = KernelFamily::SquaredExponential;
  // Alignment defaults to SortByMean for p = 1 and SequentialHungarian
  // (lexicographic input chain) for p > 1.
  bool force_hungarian = false;
  AlignCost align_cost = AlignCost::W2Squared;
  WeightMode weight_mode = WeightMode::Shared;
  EmConfig em;
  GpTrainConfig gp;
  SimplexOptConfig weight_opt;
  std::uint64_t seed = 0;
  int threads = 0;  // 0: GGMP_THREADS env or hardware concurrency
};

/// Closed-form K-component Gaussian mixture with diagonal component
/// covariances, the model's predictive at one query input.
struct PredictiveMixture {
  Eigen::VectorXd weights;  // K
  Eigen::MatrixXd means;    // K x p
  Eigen::MatrixXd vars;     // K x p

  Eigen::Index components() const { return weights.size(); }
  Eigen::Index dim() const { return means.cols(); }
};

struct GgmpModel {
  int k = 0;
  Eigen::Index p = 0, d = 0;
  std::vector<std::vector<TrainedGp>> gps;  // [component][output coordinate]
  WeightMode weight_mode = WeightMode::Shared;
  Eigen::VectorXd shared_weights;
  XdepWeights xdep;
  Eigen::MatrixXd avg_within_var;  // K x p, s_bar^2
  AlignmentPlan alignment;
  std::vector<LocalMixtureFit> fits;  // aligned
  std::vector<std::string> input_ids;
  GgmpConfig config;
  double train_objective = 0.0;  // distributional log-likelihood at the final weights
};

/// Three-stage fit: local mixtures, alignment, K*p heteroscedastic GPs, then
/// weight optimization. Fails fast with a stage-tagged error; never returns a
/// partial model.
GgmpModel fit(const DistributionValuedDataset& ds, const GgmpConfig& config);

PredictiveMixture component_predictive(const GgmpModel& model, const Eigen::VectorXd& xstar);

double log_density(const PredictiveMixture& mix, const Eigen::VectorXd& y);
double log_density(const GgmpModel& model, const Eigen::VectorXd& xstar,
                   const Eigen::VectorXd& y);

/// Ancestral sampling from the predictive mixture; deterministic per seed.
Eigen::MatrixXd sample(const GgmpModel& model, const Eigen::VectorXd& xstar,
                       Eigen::Index count, std::uint64_t seed);
Eigen::MatrixXd sample(const PredictiveMixture& mix, Eigen::Index count, std::uint64_t seed);

/// Component predictive table at the model's training inputs (the weight
/// optimization objective's ingredients), using per-input noise variances.
ComponentDensityTable training_density_table(const GgmpModel& model,
                                             const DistributionValuedDataset& ds);

/// Exact joint density of one scalar observation per input under the
/// per-input mixture model, expanded over all K^N component assignments.
/// Oracle only: requires K^N <= 10^6.
double brute_force_joint_likelihood(const Eigen::MatrixXd& means, const Eigen::MatrixXd& vars,
                                    const Eigen::MatrixXd& weights, const Eigen::VectorXd& y);

/// The same quantity as a product of per-input mixtures.
double product_of_sums_likelihood(const Eigen::MatrixXd& means, const Eigen::MatrixXd& vars,
                                  const Eigen::MatrixXd& weights, const Eigen::VectorXd& y);

void save_model(const GgmpModel& model, const std::string& path);
GgmpModel load_model(const std::string& path);

}  // namespace ggmp
