#pragma once

#include "ggmp/mixture.hpp"

#include <Eigen/Core>

#include <vector>

namespace ggmp {

enum class AlignMethod { SortByMean, SequentialHungarian };
enum class AlignCost { W2Squared, HellingerSquared };

/// Per-input relabeling permutations. permutations[n][k] is the local
/// component index that receives global label k at input n.
struct AlignmentPlan {
  std::vector<std::vector<int>> permutations;
  AlignMethod method = AlignMethod::SortByMean;
  std::vector<int> input_order;  // chain order used by sequential matching
};

/// Ascending-mean relabeling for univariate fits; ties broken by ascending
/// variance, then original index.
AlignmentPlan sort_align(const std::vector<LocalMixtureFit>& fits);

/// Squared 2-Wasserstein distance between Gaussians:
/// ||mu1-mu2||^2 + tr(S1 + S2 - 2 (S1^{1/2} S2 S1^{1/2})^{1/2}).
double w2_gaussian_sq(const Eigen::VectorXd& mu1, const Eigen::MatrixXd& s1,
                      const Eigen::VectorXd& mu2, const Eigen::MatrixXd& s2);

/// Squared Hellinger distance between Gaussians.
double hellinger_sq_gaussian(const Eigen::VectorXd& mu1, const Eigen::MatrixXd& s1,
                             const Eigen::VectorXd& mu2, const Eigen::MatrixXd& s2);

/// Exact min-cost assignment (Hungarian, O(K^3)). Returns row -> column.
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost);

/// Sequential matching along `order`: identity labels at the first input,
/// then each input's components are matched to the previous input's
/// relabeled components by minimum total pairwise cost.
AlignmentPlan hungarian_align(const std::vector<LocalMixtureFit>& fits,
                              const std::vector<int>& order,
                              AlignCost cost = AlignCost::W2Squared);

/// Chain order for sequential matching: inputs sorted lexicographically by x.
std::vector<int> lexicographic_order(const std::vector<Eigen::VectorXd>& xs);

/// Applies a plan, permuting (weights, means, covs, responsibility sums)
/// jointly per input. The mixture densities are unchanged.
std::vector<LocalMixtureFit> apply_alignment(const std::vector<LocalMixtureFit>& fits,
                                             const AlignmentPlan& plan);

}  // namespace ggmp
