#include "ggmp/mixture.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace ggmp {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

Eigen::VectorXd coordinate_variances(const Eigen::MatrixXd& y) {
  Eigen::RowVectorXd mean = y.colwise().mean();
  return ((y.rowwise() - mean).array().square().colwise().mean()).transpose();
}

/// T x 1 vector of log N(y_t | m, S) for one component.
Eigen::VectorXd component_log_density(const Eigen::MatrixXd& y, const Eigen::VectorXd& m,
                                      const Eigen::MatrixXd& s) {
  const Eigen::Index t = y.rows(), p = y.cols();
  if (p == 1) {
    double var = s(0, 0);
    return (-0.5 * (kLogTwoPi + std::log(var)) -
            0.5 / var * (y.col(0).array() - m[0]).square())
        .matrix();
  }
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("gmm: component covariance not PD");
  Eigen::MatrixXd centered = (y.rowwise() - m.transpose()).transpose();  // p x T
  Eigen::MatrixXd w = llt.matrixL().solve(centered);
  double logdet = 2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
  Eigen::VectorXd out(t);
  for (Eigen::Index i = 0; i < t; ++i)
    out[i] = -0.5 * (static_cast<double>(p) * kLogTwoPi + logdet + w.col(i).squaredNorm());
  return out;
}

std::vector<Eigen::Index> kmeanspp_seed(const Eigen::MatrixXd& y, int k,
                                        std::mt19937_64& rng) {
  const Eigen::Index t = y.rows();
  std::vector<Eigen::Index> centers;
  std::uniform_int_distribution<Eigen::Index> uni(0, t - 1);
  centers.push_back(uni(rng));
  Eigen::VectorXd d2 = (y.rowwise() - y.row(centers[0])).rowwise().squaredNorm();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  while (static_cast<int>(centers.size()) < k) {
    double total = d2.sum();
    Eigen::Index pick = 0;
    if (total <= 0) {
      pick = uni(rng);
    } else {
      double r = unif(rng) * total, acc = 0;
      for (Eigen::Index i = 0; i < t; ++i) {
        acc += d2[i];
        if (acc >= r) { pick = i; break; }
      }
    }
    centers.push_back(pick);
    d2 = d2.cwiseMin((y.rowwise() - y.row(pick)).rowwise().squaredNorm());
  }
  return centers;
}

struct EmState {
  Eigen::VectorXd weights;
  Eigen::MatrixXd means;              // K x p
  std::vector<Eigen::MatrixXd> covs;  // K of p x p
  Eigen::VectorXd resp_sum;
  double loglik = -std::numeric_limits<double>::infinity();
  std::vector<double> trace;
};

EmState run_em(const Eigen::MatrixXd& y, int k, const EmConfig& config,
               const Eigen::VectorXd& floor, std::mt19937_64& rng) {
  const Eigen::Index t = y.rows(), p = y.cols();
  EmState st;
  st.weights = Eigen::VectorXd::Constant(k, 1.0 / k);
  st.means.resize(k, p);
  auto seeds = kmeanspp_seed(y, k, rng);
  for (int c = 0; c < k; ++c) st.means.row(c) = y.row(seeds[static_cast<std::size_t>(c)]);

  Eigen::RowVectorXd gmean = y.colwise().mean();
  Eigen::MatrixXd centered = y.rowwise() - gmean;
  Eigen::MatrixXd global_cov = (centered.transpose() * centered) / static_cast<double>(t);
  for (Eigen::Index j = 0; j < p; ++j)
    global_cov(j, j) = std::max(global_cov(j, j), floor[j]);
  st.covs.assign(static_cast<std::size_t>(k), global_cov);
  st.resp_sum = Eigen::VectorXd::Constant(k, static_cast<double>(t) / k);

  Eigen::MatrixXd logp(t, k);
  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < config.max_iters; ++it) {
    // E-step
    for (int c = 0; c < k; ++c)
      logp.col(c) = component_log_density(y, st.means.row(c).transpose(),
                                          st.covs[static_cast<std::size_t>(c)])
                        .array() +
                    std::log(std::max(st.weights[c], 1e-300));
    Eigen::VectorXd row_max = logp.rowwise().maxCoeff();
    Eigen::MatrixXd resp = (logp.colwise() - row_max).array().exp();
    Eigen::VectorXd row_sum = resp.rowwise().sum();
    double ll = (row_max.array() + row_sum.array().log()).sum();
    st.loglik = ll;
    st.trace.push_back(ll);
    resp.array().colwise() /= row_sum.array();

    // M-step
    Eigen::VectorXd nk = resp.colwise().sum();
    for (int c = 0; c < k; ++c) {
      if (nk[c] < 1e-6 * static_cast<double>(t)) {
        // collapsed component: reseed at the lowest-density sample with a
        // broad covariance and let the next E-step assign it real mass
        Eigen::Index worst;
        (row_max.array() + row_sum.array().log()).minCoeff(&worst);
        st.means.row(c) = y.row(worst);
        st.covs[static_cast<std::size_t>(c)] = global_cov;
        nk[c] = 1.0;
        continue;
      }
      Eigen::VectorXd m = (resp.col(c).transpose() * y).transpose() / nk[c];
      Eigen::MatrixXd d = y.rowwise() - m.transpose();
      Eigen::MatrixXd s = (d.transpose() * (d.array().colwise() * resp.col(c).array()).matrix()) / nk[c];
      for (Eigen::Index j = 0; j < p; ++j) s(j, j) = std::max(s(j, j), floor[j]);
      st.means.row(c) = m.transpose();
      st.covs[static_cast<std::size_t>(c)] = s;
    }
    st.weights = nk / nk.sum();
    st.resp_sum = nk;

    if (it > 0 && std::abs(ll - prev_ll) < config.rel_tol * static_cast<double>(t)) break;
    prev_ll = ll;
  }
  // final log-likelihood under the last M-step parameters
  for (int c = 0; c < k; ++c)
    logp.col(c) = component_log_density(y, st.means.row(c).transpose(),
                                        st.covs[static_cast<std::size_t>(c)])
                      .array() +
                  std::log(std::max(st.weights[c], 1e-300));
  Eigen::VectorXd row_max = logp.rowwise().maxCoeff();
  st.loglik = (row_max.array() +
               (logp.colwise() - row_max).array().exp().rowwise().sum().log())
                  .sum();
  st.trace.push_back(st.loglik);
  return st;
}

}  // namespace

LocalMixtureFit fit_gmm(const SampleBlock& block, int k, const EmConfig& config) {
  const Eigen::Index t = block.count(), p = block.dim();
  if (k < 1) throw std::invalid_argument("fit_gmm: K must be >= 1");
  if (t < k)
    throw std::runtime_error("fit_gmm: too few samples for K components (input '" +
                             block.input_id + "', T=" + std::to_string(t) +
                             ", K=" + std::to_string(k) + ")");
  Eigen::VectorXd floor = coordinate_variances(block.samples);
  for (Eigen::Index j = 0; j < p; ++j)
    floor[j] = config.var_floor_scale * (floor[j] > 0 ? floor[j] : 1e-6);

  std::mt19937_64 rng(config.seed);
  EmState best;
  for (int r = 0; r < std::max(1, config.restarts); ++r) {
    EmState st = run_em(block.samples, k, config, floor, rng);
    if (st.loglik > best.loglik) best = std::move(st);
  }
  if (config.loglik_trace) *config.loglik_trace = best.trace;

  LocalMixtureFit fit;
  fit.input_id = block.input_id;
  fit.weights = best.weights;
  fit.means = best.means;
  fit.covs = best.covs;
  fit.responsibilities_sum = best.resp_sum;
  fit.loglik = best.loglik;
  return fit;
}

Eigen::MatrixXd gmm_component_log_density(const LocalMixtureFit& fit,
                                          const Eigen::MatrixXd& samples) {
  if (samples.cols() != fit.dim())
    throw std::invalid_argument("gmm: sample dimension mismatch");
  const Eigen::Index k = fit.components();
  Eigen::MatrixXd logp(samples.rows(), k);
  for (Eigen::Index c = 0; c < k; ++c)
    logp.col(c) = component_log_density(samples, fit.means.row(c).transpose(),
                                        fit.covs[static_cast<std::size_t>(c)]);
  return logp;
}

double gmm_log_likelihood(const LocalMixtureFit& fit, const Eigen::MatrixXd& samples) {
  Eigen::MatrixXd logp = gmm_component_log_density(fit, samples);
  for (Eigen::Index c = 0; c < fit.components(); ++c)
    logp.col(c).array() += std::log(std::max(fit.weights[c], 1e-300));
  Eigen::VectorXd row_max = logp.rowwise().maxCoeff();
  return (row_max.array() +
          (logp.colwise() - row_max).array().exp().rowwise().sum().log())
      .sum();
}

}  // namespace ggmp
