#pragma once

#include "ggmp/dataset.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <string>

namespace ggmp {

/// Latent trend of the synthetic benchmark:
/// 0.95 sin(1.05x - 0.30) + 0.55 sin(2.45x + 0.80) - 0.38 tanh(1.8x) + 0.075 x^3.
double latent_trend(double x);

/// Hierarchical 3-block x 4-sub-component conditional mixture field on
/// [-3, 3]. All parameter curves are fixed smooth closed forms; the seed only
/// drives sampling streams.
struct SyntheticField {
  std::uint64_t seed = 0;

  static constexpr int blocks = 3;
  static constexpr int subs = 4;

  /// Separation field s(x) = 1.6 sigmoid(2 sin(1.3 x)): controls both the
  /// block spacing and the block weights, so small-s regions are effectively
  /// single-mode and large-s regions carry three distinct modes.
  double separation(double x) const;

  /// Flattened 12-component parameters (weights w_b * alpha_bj on the
  /// simplex; index order b-major).
  void mixture_at(double x, Eigen::VectorXd& weights, Eigen::VectorXd& means,
                  Eigen::VectorXd& vars) const;

  /// Exact (analytically normalized) density and CDF of p(y|x).
  double density(double x, double y) const;
  double cdf(double x, double y) const;

  /// Density evaluated on a strictly increasing grid and renormalized under
  /// trapezoidal quadrature.
  Eigen::VectorXd conditional_density(double x, const Eigen::VectorXd& grid) const;

  /// T inverse-CDF draws (bisection to 1e-12); deterministic per
  /// (field seed, stream).
  Eigen::VectorXd draw_samples(double x, Eigen::Index t, std::uint64_t stream) const;
};

struct SyntheticBenchmark {
  DistributionValuedDataset data;                // inputs + sample blocks
  std::map<std::string, GriddedDensity> truth;   // exact densities, shared grid
  Eigen::VectorXd grid;
};

/// Default benchmark realization: n uniform inputs on [-3, 3], t draws per
/// input, exact truth densities on a shared 512-point grid spanning the
/// field's y-range with margin.
SyntheticBenchmark generate_benchmark(int n = 300, Eigen::Index t = 2000,
                                      std::uint64_t seed = 0, int grid_points = 512);

}  // namespace ggmp
