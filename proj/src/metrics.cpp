#include "ggmp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace ggmp {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

void check_normalized(const Eigen::VectorXd& dens, const Eigen::VectorXd& w,
                      const char* which) {
  double mass = dens.dot(w);
  if (std::abs(mass - 1.0) > 1e-6)
    throw std::invalid_argument(std::string("divergences: ") + which +
                                " density not normalized (mass " + std::to_string(mass) + ")");
}

PredictiveMixture marginal(const PredictiveMixture& mix, Eigen::Index j) {
  PredictiveMixture m;
  m.weights = mix.weights;
  m.means = mix.means.col(j);
  m.vars = mix.vars.col(j);
  return m;
}

}  // namespace

DivergenceSet divergences(const DensityPair& pair) {
  const Eigen::Index m = pair.grid.size();
  if (pair.p_ref.size() != m || pair.q_pred.size() != m || pair.quad_weights.size() != m)
    throw std::invalid_argument("divergences: size mismatch");
  check_normalized(pair.p_ref, pair.quad_weights, "reference");
  check_normalized(pair.q_pred, pair.quad_weights, "predicted");

  DivergenceSet out;
  const Eigen::ArrayXd p = pair.p_ref.array(), q = pair.q_pred.array(),
                       w = pair.quad_weights.array();
  double bc = (w * (p * q).sqrt()).sum();
  out.bhattacharyya = -std::log(std::min(std::max(bc, 1e-300), 1.0));

  Eigen::ArrayXd pf = p.max(1e-12), qf = q.max(1e-12);
  out.symmetric_kl = (w * (pf - qf) * (pf / qf).log()).sum();

  double cp = 0, cq = 0, w1 = 0;
  for (Eigen::Index l = 0; l < m; ++l) {
    cp += p[l] * w[l];
    cq += q[l] * w[l];
    w1 += std::abs(cp - cq) * w[l];
  }
  out.wasserstein1 = w1;
  out.l1 = (w * (p - q).abs()).sum();
  return out;
}

double empirical_w1(Eigen::VectorXd a, Eigen::VectorXd b) {
  if (a.size() == 0 || b.size() == 0)
    throw std::invalid_argument("empirical_w1: empty sample set");
  std::sort(a.data(), a.data() + a.size());
  std::sort(b.data(), b.data() + b.size());
  const Eigen::Index n = a.size(), m = b.size();
  // integrate |F^-1(u) - G^-1(u)| over the union of breakpoints i/n, j/m
  double total = 0, u = 0;
  Eigen::Index i = 0, j = 0;
  while (i < n && j < m) {
    // next breakpoint is min((i+1)/n, (j+1)/m); compare exactly via cross products
    const Eigen::Index lhs = (i + 1) * m, rhs = (j + 1) * n;
    double next = lhs <= rhs ? static_cast<double>(i + 1) / static_cast<double>(n)
                             : static_cast<double>(j + 1) / static_cast<double>(m);
    total += (next - u) * std::abs(a[i] - b[j]);
    u = next;
    if (lhs <= rhs) ++i;
    if (rhs <= lhs) ++j;
  }
  return total;
}

JointDivergences joint_divergences(const Eigen::MatrixXd& samples_ref,
                                   const Eigen::MatrixXd& samples_pred, int n_slices,
                                   std::uint64_t seed) {
  const Eigen::Index n = samples_ref.rows(), m = samples_pred.rows();
  const Eigen::Index p = samples_ref.cols();
  if (n == 0 || m == 0) throw std::invalid_argument("joint_divergences: empty sample set");
  if (samples_pred.cols() != p)
    throw std::invalid_argument("joint_divergences: dimension mismatch");

  auto mean_pairwise = [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    double s = 0;
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < b.rows(); ++j)
        s += (a.row(i) - b.row(j)).norm();
    return s / (static_cast<double>(a.rows()) * static_cast<double>(b.rows()));
  };

  JointDivergences out;
  out.energy = 2.0 * mean_pairwise(samples_ref, samples_pred) -
               mean_pairwise(samples_ref, samples_ref) -
               mean_pairwise(samples_pred, samples_pred);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  double acc = 0;
  for (int s = 0; s < n_slices; ++s) {
    Eigen::VectorXd dir(p);
    do {
      for (Eigen::Index q = 0; q < p; ++q) dir[q] = normal(rng);
    } while (dir.norm() < 1e-12);
    dir /= dir.norm();
    acc += empirical_w1(samples_ref * dir, samples_pred * dir);
  }
  out.sliced_w1 = acc / n_slices;
  return out;
}

double mixture_cdf(const PredictiveMixture& mix, double y) {
  double f = 0;
  for (Eigen::Index c = 0; c < mix.components(); ++c)
    f += mix.weights[c] * normal_cdf((y - mix.means(c, 0)) / std::sqrt(mix.vars(c, 0)));
  return f;
}

double mixture_quantile(const PredictiveMixture& mix, double u, double tol) {
  if (u <= 0 || u >= 1) throw std::invalid_argument("mixture_quantile: u must be in (0,1)");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (Eigen::Index c = 0; c < mix.components(); ++c) {
    double sd = std::sqrt(mix.vars(c, 0));
    lo = std::min(lo, mix.means(c, 0) - 10 * sd);
    hi = std::max(hi, mix.means(c, 0) + 10 * sd);
  }
  int widenings = 0;
  while (mixture_cdf(mix, lo) > u || mixture_cdf(mix, hi) < u) {
    double span = hi - lo;
    lo -= span;
    hi += span;
    if (++widenings > 10)
      throw std::runtime_error("mixture_quantile: bracket widening failed");
  }
  for (int it = 0; it < 200 && hi - lo > tol; ++it) {
    double mid = 0.5 * (lo + hi);
    (mixture_cdf(mix, mid) < u ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double crps_quadrature(const PredictiveMixture& mix, double y, int grid_points) {
  double lo = y, hi = y;
  for (Eigen::Index c = 0; c < mix.components(); ++c) {
    double sd = std::sqrt(mix.vars(c, 0));
    lo = std::min(lo, mix.means(c, 0) - 10 * sd);
    hi = std::max(hi, mix.means(c, 0) + 10 * sd);
  }
  double h = (hi - lo) / (grid_points - 1);
  double acc = 0;
  for (int l = 0; l < grid_points; ++l) {
    double t = lo + h * l;
    double f = mixture_cdf(mix, t) - (t >= y ? 1.0 : 0.0);
    double w = (l == 0 || l == grid_points - 1) ? 0.5 * h : h;
    acc += w * f * f;
  }
  return acc;
}

void calibrate_mixture(const PredictiveMixture& mix, const Eigen::MatrixXd& samples,
                       CalibrationRecord& record) {
  const Eigen::Index p = mix.dim();
  if (samples.cols() != p)
    throw std::invalid_argument("calibrate_mixture: dimension mismatch");

  for (Eigen::Index t = 0; t < samples.rows(); ++t)
    record.log_scores.push_back(log_density(mix, samples.row(t).transpose()));

  for (Eigen::Index j = 0; j < p; ++j) {
    PredictiveMixture mj = marginal(mix, j);

    // shared CRPS grid: precompute F and the prefix/suffix integrals of
    // F^2 and (1-F)^2 once, then each observation is a table lookup
    double lo = samples.col(j).minCoeff(), hi = samples.col(j).maxCoeff();
    for (Eigen::Index c = 0; c < mj.components(); ++c) {
      double sd = std::sqrt(mj.vars(c, 0));
      lo = std::min(lo, mj.means(c, 0) - 10 * sd);
      hi = std::max(hi, mj.means(c, 0) + 10 * sd);
    }
    const int g = 4096;
    const double h = (hi - lo) / (g - 1);
    Eigen::VectorXd f(g), pre(g), suf(g);
    for (int l = 0; l < g; ++l) f[l] = mixture_cdf(mj, lo + h * l);
    pre[0] = 0;
    for (int l = 1; l < g; ++l)
      pre[l] = pre[l - 1] + 0.5 * h * (f[l - 1] * f[l - 1] + f[l] * f[l]);
    suf[g - 1] = 0;
    for (int l = g - 2; l >= 0; --l) {
      double a = 1 - f[l], b = 1 - f[l + 1];
      suf[l] = suf[l + 1] + 0.5 * h * (a * a + b * b);
    }

    std::array<std::pair<double, double>, 3> intervals;
    for (std::size_t lev = 0; lev < kCoverageLevels.size(); ++lev) {
      double gam = kCoverageLevels[lev];
      intervals[lev] = {mixture_quantile(mj, 0.5 * (1 - gam)),
                        mixture_quantile(mj, 0.5 * (1 + gam))};
    }

    for (Eigen::Index t = 0; t < samples.rows(); ++t) {
      double y = samples(t, j);
      record.pit_values.push_back(mixture_cdf(mj, y));
      for (std::size_t lev = 0; lev < kCoverageLevels.size(); ++lev)
        record.coverage_hits[lev].push_back(y >= intervals[lev].first &&
                                            y <= intervals[lev].second);
      double pos = std::clamp((y - lo) / h, 0.0, static_cast<double>(g - 1));
      int l = std::min(static_cast<int>(pos), g - 2);
      double frac = pos - l;
      double fy = f[l] + frac * (f[l + 1] - f[l]);
      // split the cell at y: left part contributes F^2, right part (1-F)^2
      double left = pre[l] + 0.5 * frac * h * (f[l] * f[l] + fy * fy);
      double right = suf[l + 1] +
                     0.5 * (1 - frac) * h *
                         ((1 - fy) * (1 - fy) + (1 - f[l + 1]) * (1 - f[l + 1]));
      record.crps_values.push_back(left + right);
    }
  }
}

CalibrationRecord calibration(const GgmpModel& model, const std::vector<InputPoint>& inputs,
                              const std::vector<SampleBlock>& blocks) {
  if (inputs.size() != blocks.size())
    throw std::invalid_argument("calibration: inputs/blocks size mismatch");
  CalibrationRecord record;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    PredictiveMixture mix = component_predictive(model, inputs[i].x);
    calibrate_mixture(mix, blocks[i].samples, record);
  }
  return record;
}

CalibrationSummary summarize(const CalibrationRecord& record) {
  CalibrationSummary s;
  auto mean_of = [](const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double acc = 0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(v.size());
  };
  s.pit_mean = mean_of(record.pit_values);
  double var = 0;
  for (double x : record.pit_values) var += (x - s.pit_mean) * (x - s.pit_mean);
  s.pit_std = record.pit_values.empty()
                  ? 0.0
                  : std::sqrt(var / static_cast<double>(record.pit_values.size()));
  auto frac = [](const std::vector<bool>& v) {
    if (v.empty()) return 0.0;
    double acc = 0;
    for (bool b : v) acc += b ? 1.0 : 0.0;
    return acc / static_cast<double>(v.size());
  };
  s.cov50 = frac(record.coverage_hits[0]);
  s.cov90 = frac(record.coverage_hits[1]);
  s.cov95 = frac(record.coverage_hits[2]);
  s.log_score = mean_of(record.log_scores);
  s.crps = mean_of(record.crps_values);
  return s;
}

}  // namespace ggmp
