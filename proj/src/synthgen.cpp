#include "ggmp/synthgen.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

namespace ggmp {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

std::uint64_t mix_stream(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

double latent_trend(double x) {
  return 85.5 * std::sin(1.05 * x - 0.30) + 49.5 * std::sin(2.45 * x + 0.80) -
         34.2 * std::tanh(1.8 * x) + 6.75 * x * x * x;
}

double SyntheticField::separation(double x) const {
  return 252.0 * sigmoid(2.6 * std::sin(1.3 * x));
}

void SyntheticField::mixture_at(double x, Eigen::VectorXd& weights, Eigen::VectorXd& means,
                                Eigen::VectorXd& vars) const {
  const double f = latent_trend(x);
  const double s = separation(x);

  // block weights: softmax of small smooth logits, so every block keeps a
  // near-equal share of mass across the whole input range
  Eigen::Vector3d logits;
  logits[0] = -0.25 * std::cos(1.1 * x);
  logits[1] = 0.3 * std::sin(2.1 * x);
  logits[2] = 0.2 * std::sin(1.4 * x + 0.5);
  logits.array() -= logits.maxCoeff();
  Eigen::Vector3d wb = logits.array().exp();
  wb /= wb.sum();

  weights.resize(blocks * subs);
  means.resize(blocks * subs);
  vars.resize(blocks * subs);
  for (int b = 0; b < blocks; ++b) {
    const double offset = (b - 1) * s;
    // sub-component weights: softmax of small smooth logits
    // one anchor sub-component is heavier and broader than its siblings; a
    // clear pecking order keeps local fits from trading places along x
    Eigen::Vector4d sl;
    for (int j = 0; j < subs; ++j)
      sl[j] = 0.35 * std::sin(0.9 * x + 1.3 * j + 0.7 * b) +
              (b == 1 && j == 1 ? 0.5 : 0.0);
    sl.array() -= sl.maxCoeff();
    Eigen::Vector4d alpha = sl.array().exp();
    alpha /= alpha.sum();

    for (int j = 0; j < subs; ++j) {
      const int idx = b * subs + j;
      // sub-mode spread scales with the separation field: collapsed regions
      // stay unimodal, separated regions resolve into distinct sub-modes
      const double jitter =
          s * 0.32 * (j - 1.5) / 1.5 + 5.4 * std::sin(1.7 * x + 1.3 * j + b);
      const double sd =
          (4.5 + 12.96 * sigmoid(0.8 * std::sin(1.1 * x + 0.5 * j + b))) *
          (b == 1 && j == 1 ? 1.8 : 1.0);
      weights[idx] = wb[b] * alpha[j];
      means[idx] = f + offset + jitter;
      vars[idx] = sd * sd;
    }
  }
}

double SyntheticField::density(double x, double y) const {
  Eigen::VectorXd w, mu, var;
  mixture_at(x, w, mu, var);
  double p = 0;
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    double r = y - mu[k];
    p += w[k] * std::exp(-0.5 * r * r / var[k]) / std::sqrt(2.0 * M_PI * var[k]);
  }
  return p;
}

double SyntheticField::cdf(double x, double y) const {
  Eigen::VectorXd w, mu, var;
  mixture_at(x, w, mu, var);
  double f = 0;
  for (Eigen::Index k = 0; k < w.size(); ++k)
    f += w[k] * normal_cdf((y - mu[k]) / std::sqrt(var[k]));
  return f;
}

Eigen::VectorXd SyntheticField::conditional_density(double x,
                                                    const Eigen::VectorXd& grid) const {
  if (grid.size() < 2) throw std::invalid_argument("conditional_density: grid too small");
  for (Eigen::Index l = 1; l < grid.size(); ++l)
    if (grid[l] <= grid[l - 1])
      throw std::invalid_argument("conditional_density: grid not strictly increasing");
  Eigen::VectorXd dens(grid.size());
  for (Eigen::Index l = 0; l < grid.size(); ++l) dens[l] = density(x, grid[l]);
  double mass = dens.dot(trapezoid_weights(grid));
  if (mass <= 0) throw std::runtime_error("conditional_density: zero mass on grid");
  return dens / mass;
}

Eigen::VectorXd SyntheticField::draw_samples(double x, Eigen::Index t,
                                             std::uint64_t stream) const {
  if (t < 1) throw std::invalid_argument("draw_samples: T must be >= 1");
  Eigen::VectorXd w, mu, var;
  mixture_at(x, w, mu, var);
  double lo0 = std::numeric_limits<double>::infinity(), hi0 = -lo0;
  for (Eigen::Index k = 0; k < w.size(); ++k) {
    double sd = std::sqrt(var[k]);
    lo0 = std::min(lo0, mu[k] - 12 * sd);
    hi0 = std::max(hi0, mu[k] + 12 * sd);
  }
  std::mt19937_64 rng(mix_stream(seed, stream));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::VectorXd out(t);
  for (Eigen::Index i = 0; i < t; ++i) {
    double u = unif(rng);
    double lo = lo0, hi = hi0;
    int widenings = 0;
    while (cdf(x, lo) > u || cdf(x, hi) < u) {
      double span = hi - lo;
      lo -= span;
      hi += span;
      if (++widenings > 10) throw std::runtime_error("draw_samples: bracket failure");
    }
    while (hi - lo > 1e-12) {
      double mid = 0.5 * (lo + hi);
      (cdf(x, mid) < u ? lo : hi) = mid;
    }
    out[i] = 0.5 * (lo + hi);
  }
  return out;
}

SyntheticBenchmark generate_benchmark(int n, Eigen::Index t, std::uint64_t seed,
                                      int grid_points) {
  if (n < 2) throw std::invalid_argument("generate_benchmark: need at least 2 inputs");
  SyntheticField field;
  field.seed = seed;

  SyntheticBenchmark bench;
  double ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
  std::vector<double> xs(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double x = -3.0 + 6.0 * i / (n - 1);
    xs[static_cast<std::size_t>(i)] = x;
    Eigen::VectorXd w, mu, var;
    field.mixture_at(x, w, mu, var);
    for (Eigen::Index k = 0; k < mu.size(); ++k) {
      double sd = std::sqrt(var[k]);
      ymin = std::min(ymin, mu[k] - 3 * sd);
      ymax = std::max(ymax, mu[k] + 3 * sd);
    }
  }
  // global grid with margin so every density is representable
  double margin = 0.15 * (ymax - ymin);
  bench.grid = Eigen::VectorXd::LinSpaced(grid_points, ymin - margin, ymax + margin);
  Eigen::VectorXd qw = trapezoid_weights(bench.grid);

  for (int i = 0; i < n; ++i) {
    double x = xs[static_cast<std::size_t>(i)];
    std::string id = "x" + std::to_string(i);
    InputPoint ip;
    ip.id = id;
    ip.x = Eigen::VectorXd::Constant(1, x);
    bench.data.inputs.push_back(ip);

    SampleBlock block;
    block.input_id = id;
    // common random numbers: every input inverts the same uniform draws, so
    // sample sets vary smoothly along x instead of adding independent noise
    block.samples = field.draw_samples(x, t, 0);
    bench.data.sample_blocks[id] = std::move(block);

    GriddedDensity g;
    g.grid = bench.grid;
    g.quad_weights = qw;
    g.density = field.conditional_density(x, bench.grid);
    bench.truth[id] = std::move(g);
  }
  return bench;
}

}  // namespace ggmp
