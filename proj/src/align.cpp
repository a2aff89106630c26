#include "ggmp/align.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace ggmp {

namespace {

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& s) {
  if (s.rows() == 1) {
    if (s(0, 0) < -1e-12) throw std::runtime_error("matrix square root of non-PSD input");
    return Eigen::MatrixXd::Constant(1, 1, std::sqrt(std::max(s(0, 0), 0.0)));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("matrix square root: eigendecomposition failed");
  if (es.eigenvalues().minCoeff() < -1e-8 * std::max(1.0, es.eigenvalues().maxCoeff()))
    throw std::runtime_error("matrix square root of non-PSD input");
  Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double w2_gaussian_sq(const Eigen::VectorXd& mu1, const Eigen::MatrixXd& s1,
                      const Eigen::VectorXd& mu2, const Eigen::MatrixXd& s2) {
  if (mu1.size() != mu2.size() || s1.rows() != mu1.size() || s2.rows() != mu2.size())
    throw std::invalid_argument("w2_gaussian_sq: dimension mismatch");
  double mean_term = (mu1 - mu2).squaredNorm();
  if (mu1.size() == 1) {
    double sd1 = std::sqrt(std::max(s1(0, 0), 0.0));
    double sd2 = std::sqrt(std::max(s2(0, 0), 0.0));
    return mean_term + (sd1 - sd2) * (sd1 - sd2);
  }
  Eigen::MatrixXd r1 = psd_sqrt(s1);
  Eigen::MatrixXd cross = psd_sqrt(r1 * s2 * r1);
  double trace_term = s1.trace() + s2.trace() - 2.0 * cross.trace();
  return mean_term + std::max(trace_term, 0.0);
}

double hellinger_sq_gaussian(const Eigen::VectorXd& mu1, const Eigen::MatrixXd& s1,
                             const Eigen::VectorXd& mu2, const Eigen::MatrixXd& s2) {
  Eigen::MatrixXd avg = 0.5 * (s1 + s2);
  Eigen::LLT<Eigen::MatrixXd> llt(avg);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("hellinger_sq_gaussian: covariance not PD");
  Eigen::VectorXd d = mu1 - mu2;
  Eigen::VectorXd w = llt.matrixL().solve(d);
  double log_det_avg = 2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
  auto log_det = [](const Eigen::MatrixXd& m) {
    Eigen::LLT<Eigen::MatrixXd> f(m);
    if (f.info() != Eigen::Success)
      throw std::runtime_error("hellinger_sq_gaussian: covariance not PD");
    return 2.0 * Eigen::MatrixXd(f.matrixL()).diagonal().array().log().sum();
  };
  double bhatt = 0.125 * w.squaredNorm() +
                 0.5 * (log_det_avg - 0.5 * (log_det(s1) + log_det(s2)));
  return 1.0 - std::exp(-bhatt);
}

std::vector<int> solve_assignment(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw std::invalid_argument("solve_assignment: square matrix required");
  const double inf = std::numeric_limits<double>::infinity();
  // Hungarian algorithm with potentials; 1-based helpers.
  std::vector<double> u(n + 1, 0), v(n + 1, 0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      int i0 = p[j0], j1 = -1;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) { minv[j] = cur; way[j] = j0; }
        if (minv[j] < delta) { delta = minv[j]; j1 = j; }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) { u[p[j]] += delta; v[j] -= delta; }
        else minv[j] -= delta;
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] != 0) row_to_col[static_cast<std::size_t>(p[j] - 1)] = j - 1;
  return row_to_col;
}

AlignmentPlan sort_align(const std::vector<LocalMixtureFit>& fits) {
  if (fits.empty()) throw std::invalid_argument("sort_align: no fits");
  if (fits.front().dim() != 1)
    throw std::invalid_argument("sort_align: univariate outputs only");
  AlignmentPlan plan;
  plan.method = AlignMethod::SortByMean;
  plan.input_order.resize(fits.size());
  std::iota(plan.input_order.begin(), plan.input_order.end(), 0);
  for (const auto& fit : fits) {
    const int k = static_cast<int>(fit.components());
    std::vector<int> perm(static_cast<std::size_t>(k));
    std::iota(perm.begin(), perm.end(), 0);
    std::stable_sort(perm.begin(), perm.end(), [&](int a, int b) {
      double ma = fit.means(a, 0), mb = fit.means(b, 0);
      if (ma != mb) return ma < mb;
      double va = fit.covs[static_cast<std::size_t>(a)](0, 0);
      double vb = fit.covs[static_cast<std::size_t>(b)](0, 0);
      if (va != vb) return va < vb;
      return a < b;
    });
    plan.permutations.push_back(std::move(perm));
  }
  return plan;
}

std::vector<int> lexicographic_order(const std::vector<Eigen::VectorXd>& xs) {
  std::vector<int> order(xs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const auto& xa = xs[static_cast<std::size_t>(a)];
    const auto& xb = xs[static_cast<std::size_t>(b)];
    for (Eigen::Index q = 0; q < xa.size(); ++q) {
      if (xa[q] != xb[q]) return xa[q] < xb[q];
    }
    return a < b;
  });
  return order;
}

AlignmentPlan hungarian_align(const std::vector<LocalMixtureFit>& fits,
                              const std::vector<int>& order, AlignCost cost) {
  if (fits.empty()) throw std::invalid_argument("hungarian_align: no fits");
  if (order.size() != fits.size())
    throw std::invalid_argument("hungarian_align: order/fits size mismatch");
  const int k = static_cast<int>(fits.front().components());

  auto pair_cost = [&](const LocalMixtureFit& a, int ca, const LocalMixtureFit& b, int cb) {
    const Eigen::VectorXd mu1 = a.means.row(ca).transpose();
    const Eigen::VectorXd mu2 = b.means.row(cb).transpose();
    const Eigen::MatrixXd& s1 = a.covs[static_cast<std::size_t>(ca)];
    const Eigen::MatrixXd& s2 = b.covs[static_cast<std::size_t>(cb)];
    return cost == AlignCost::W2Squared ? w2_gaussian_sq(mu1, s1, mu2, s2)
                                        : hellinger_sq_gaussian(mu1, s1, mu2, s2);
  };

  AlignmentPlan plan;
  plan.method = AlignMethod::SequentialHungarian;
  plan.input_order = order;
  plan.permutations.assign(fits.size(), {});

  std::vector<int> identity(static_cast<std::size_t>(k));
  std::iota(identity.begin(), identity.end(), 0);
  plan.permutations[static_cast<std::size_t>(order[0])] = identity;

  std::vector<int> prev = identity;  // global label -> local index at previous input
  for (std::size_t step = 1; step < order.size(); ++step) {
    const LocalMixtureFit& prev_fit = fits[static_cast<std::size_t>(order[step - 1])];
    const LocalMixtureFit& cur_fit = fits[static_cast<std::size_t>(order[step])];
    Eigen::MatrixXd c(k, k);
    for (int gk = 0; gk < k; ++gk)
      for (int cc = 0; cc < k; ++cc)
        c(gk, cc) = pair_cost(prev_fit, prev[static_cast<std::size_t>(gk)], cur_fit, cc);
    std::vector<int> assign = solve_assignment(c);  // global label -> local index
    plan.permutations[static_cast<std::size_t>(order[step])] = assign;
    prev = assign;
  }
  return plan;
}

std::vector<LocalMixtureFit> apply_alignment(const std::vector<LocalMixtureFit>& fits,
                                             const AlignmentPlan& plan) {
  if (plan.permutations.size() != fits.size())
    throw std::invalid_argument("apply_alignment: plan/fits size mismatch");
  std::vector<LocalMixtureFit> out;
  out.reserve(fits.size());
  for (std::size_t n = 0; n < fits.size(); ++n) {
    const LocalMixtureFit& f = fits[n];
    const auto& perm = plan.permutations[n];
    LocalMixtureFit g = f;
    for (Eigen::Index k = 0; k < f.components(); ++k) {
      int src = perm[static_cast<std::size_t>(k)];
      g.weights[k] = f.weights[src];
      g.means.row(k) = f.means.row(src);
      g.covs[static_cast<std::size_t>(k)] = f.covs[static_cast<std::size_t>(src)];
      g.responsibilities_sum[k] = f.responsibilities_sum[src];
    }
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace ggmp
