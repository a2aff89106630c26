#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace ggmp {

/// One observed input location x_n with an opaque identifier.
struct InputPoint {
  std::string id;
  Eigen::VectorXd x;
};

/// Raw output samples collected at one input. Rows are observations,
/// columns are output coordinates (T_n x p).
struct SampleBlock {
  std::string input_id;
  Eigen::MatrixXd samples;

  Eigen::Index count() const { return samples.rows(); }
  Eigen::Index dim() const { return samples.cols(); }
};

/// A univariate density discretized on a strictly increasing grid together
/// with the quadrature weights that normalize it: sum(density * quad_weights) = 1.
struct GriddedDensity {
  std::string input_id;
  Eigen::VectorXd grid;
  Eigen::VectorXd density;
  Eigen::VectorXd quad_weights;
};

/// Distribution-valued regression data: each input carries a whole output
/// distribution, as samples and/or a gridded density. Immutable after
/// construction by convention; safe to share across threads.
struct DistributionValuedDataset {
  std::vector<InputPoint> inputs;
  std::map<std::string, SampleBlock> sample_blocks;
  std::map<std::string, GriddedDensity> gridded;

  Eigen::Index size() const { return static_cast<Eigen::Index>(inputs.size()); }
  Eigen::Index input_dim() const { return inputs.empty() ? 0 : inputs.front().x.size(); }
  Eigen::Index output_dim() const;

  const SampleBlock& block(const std::string& id) const;
  bool has_block(const std::string& id) const { return sample_blocks.count(id) != 0; }
};

/// Trapezoidal quadrature weights for a strictly increasing grid:
/// interior Δy_l = (y_{l+1} - y_{l-1})/2, halved widths at the endpoints.
Eigen::VectorXd trapezoid_weights(const Eigen::VectorXd& grid);

/// Parse the sample CSV format `input_id,x1..xd,y1..yp`. Column roles come
/// from the header (x-columns named x*, y-columns named y*). Rows are grouped
/// by input_id preserving order within a block.
DistributionValuedDataset load_samples_csv(const std::string& path);

/// Parse the gridded format `input_id,x1..xd,y,density`. Quadrature weights
/// are trapezoidal over each block's grid; densities are renormalized if they
/// integrate to 1 only within 1e-6 and rejected otherwise.
DistributionValuedDataset load_gridded_csv(const std::string& path);

void save_samples_csv(const DistributionValuedDataset& ds, const std::string& path);
void save_gridded_csv(const DistributionValuedDataset& ds, const std::string& path);

/// Fixed-bin histogram of a univariate sample block. Bin edges span
/// [y_min, y_max] with B equal bins; grid points are bin centers and the
/// quadrature weights equal the bin width, so sum(density * weight) = 1.
GriddedDensity to_histogram(const SampleBlock& block, int bins);

/// Deterministic split over inputs (whole blocks move together).
/// ceil(N*(1-f)) inputs train; at least one input is always held out.
std::pair<DistributionValuedDataset, DistributionValuedDataset>
split_train_test(const DistributionValuedDataset& ds, double test_fraction,
                 std::uint64_t seed);

}  // namespace ggmp
