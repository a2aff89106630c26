#pragma once

#include "ggmp/dataset.hpp"
#include "ggmp/ggmp.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <vector>

namespace ggmp {

/// Reference and predicted density values on one shared grid. Both must be
/// normalized under quad_weights within 1e-6.
struct DensityPair {
  Eigen::VectorXd grid;
  Eigen::VectorXd p_ref;
  Eigen::VectorXd q_pred;
  Eigen::VectorXd quad_weights;
};

struct DivergenceSet {
  double bhattacharyya = 0.0;
  double symmetric_kl = 0.0;
  double wasserstein1 = 0.0;
  double l1 = 0.0;
};

/// Bhattacharyya = -ln sum sqrt(p q) dy; symmetric KL with both densities
/// floored at 1e-12 before logs; W1 = sum |P - Q| dy over CDFs; L1 = sum
/// |p - q| dy. Throws on unnormalized input.
DivergenceSet divergences(const DensityPair& pair);

struct JointDivergences {
  double energy = 0.0;
  double sliced_w1 = 0.0;
};

/// Energy distance 2 E|X-Y| - E|X-X'| - E|Y-Y'| with all expectations over
/// full index grids (identical sample sets give exactly zero), plus sliced
/// W1 averaged over seeded random unit directions.
JointDivergences joint_divergences(const Eigen::MatrixXd& samples_ref,
                                   const Eigen::MatrixXd& samples_pred,
                                   int n_slices = 64, std::uint64_t seed = 0);

/// Exact 1-d Wasserstein-1 between two empirical distributions (any sizes),
/// integrating |F^-1 - G^-1| over the merged quantile breakpoints.
double empirical_w1(Eigen::VectorXd a, Eigen::VectorXd b);

/// CDF of a univariate Gaussian mixture.
double mixture_cdf(const PredictiveMixture& mix, double y);

/// Quantile by bisection on the mixture CDF to `tol`. The initial bracket
/// spans every component's mean +- 10 sd and is doubled when it fails to
/// bracket; more than 10 widenings is an error.
double mixture_quantile(const PredictiveMixture& mix, double u, double tol = 1e-10);

/// CRPS of a univariate mixture at y, by quadrature of (F - 1{y' >= y})^2
/// over a +-10-sd grid.
double crps_quadrature(const PredictiveMixture& mix, double y, int grid_points = 4096);

inline constexpr std::array<double, 3> kCoverageLevels = {0.5, 0.9, 0.95};

struct CalibrationRecord {
  std::vector<double> pit_values;                      // in [0,1]
  std::array<std::vector<bool>, 3> coverage_hits;      // per level in kCoverageLevels
  std::vector<double> log_scores;
  std::vector<double> crps_values;
};

struct CalibrationSummary {
  double pit_mean = 0.0, pit_std = 0.0;
  double cov50 = 0.0, cov90 = 0.0, cov95 = 0.0;
  double log_score = 0.0, crps = 0.0;
};

/// Scores one predictive mixture against held-out scalar observations.
/// Multivariate predictives are scored marginally per coordinate (PIT,
/// coverage, CRPS) while the log score uses the joint density.
void calibrate_mixture(const PredictiveMixture& mix, const Eigen::MatrixXd& samples,
                       CalibrationRecord& record);

/// Calibration across held-out inputs: blocks[i] holds observations at
/// inputs[i].
CalibrationRecord calibration(const GgmpModel& model, const std::vector<InputPoint>& inputs,
                              const std::vector<SampleBlock>& blocks);

CalibrationSummary summarize(const CalibrationRecord& record);

}  // namespace ggmp
