#include "ggmp/mixture.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace ggmp;

namespace {

SampleBlock make_block(const Eigen::VectorXd& v) {
  SampleBlock b;
  b.input_id = "t";
  b.samples = v;
  return b;
}

}  // namespace

TEST_CASE("K=1 EM fixed point: sample mean and MLE variance") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal(1.0, 2.0);
  Eigen::VectorXd v(200);
  for (int i = 0; i < 200; ++i) v[i] = normal(rng);
  LocalMixtureFit fit = fit_gmm(make_block(v), 1);
  double mean = v.mean();
  double var = (v.array() - mean).square().mean();
  CHECK(fit.weights[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fit.means(0, 0) == doctest::Approx(mean).epsilon(1e-10));
  CHECK(fit.covs[0](0, 0) == doctest::Approx(var).epsilon(1e-10));
}

TEST_CASE("well-separated two-component recovery") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> lo(-5.0, 0.1), hi(5.0, 0.1);
  Eigen::VectorXd v(1000);
  for (int i = 0; i < 500; ++i) v[i] = lo(rng);
  for (int i = 500; i < 1000; ++i) v[i] = hi(rng);
  LocalMixtureFit fit = fit_gmm(make_block(v), 2);
  double m0 = std::min(fit.means(0, 0), fit.means(1, 0));
  double m1 = std::max(fit.means(0, 0), fit.means(1, 0));
  CHECK(std::abs(m0 + 5.0) < 0.05);
  CHECK(std::abs(m1 - 5.0) < 0.05);
  CHECK(std::abs(fit.weights[0] - 0.5) < 0.05);
}

TEST_CASE("identical samples collapse safely to the floor") {
  Eigen::VectorXd v = Eigen::VectorXd::Constant(50, 3.0);
  LocalMixtureFit fit = fit_gmm(make_block(v), 2);
  CHECK(std::isfinite(fit.loglik));
  CHECK(fit.means(0, 0) == doctest::Approx(3.0));
  CHECK(fit.means(1, 0) == doctest::Approx(3.0));
  CHECK(fit.covs[0](0, 0) > 0);
  CHECK(fit.covs[1](0, 0) > 0);
  CHECK(fit.covs[0](0, 0) == doctest::Approx(fit.covs[1](0, 0)));
}

TEST_CASE("too few samples raises a named error") {
  Eigen::VectorXd v(2);
  v << 0.0, 1.0;
  CHECK_THROWS_WITH_AS(fit_gmm(make_block(v), 3), doctest::Contains("too few samples"),
                       std::runtime_error);
}

TEST_CASE("gmm_log_likelihood closed form and naive-sum oracle") {
  LocalMixtureFit fit;
  fit.input_id = "t";
  fit.weights = Eigen::VectorXd::Constant(1, 1.0);
  fit.means = Eigen::MatrixXd::Constant(1, 1, 0.7);
  fit.covs = {Eigen::MatrixXd::Constant(1, 1, 1.0)};
  fit.responsibilities_sum = Eigen::VectorXd::Constant(1, 1.0);
  Eigen::MatrixXd y = Eigen::MatrixXd::Constant(1, 1, 0.7);
  CHECK(gmm_log_likelihood(fit, y) == doctest::Approx(-0.5 * std::log(2 * M_PI)));

  // K=3 well-scaled mixture vs naive (no log-sum-exp) evaluation
  LocalMixtureFit mix;
  mix.input_id = "t";
  mix.weights = Eigen::Vector3d(0.5, 0.3, 0.2);
  mix.means = Eigen::Vector3d(-1.0, 0.0, 1.5);
  mix.covs = {Eigen::MatrixXd::Constant(1, 1, 0.5), Eigen::MatrixXd::Constant(1, 1, 1.0),
              Eigen::MatrixXd::Constant(1, 1, 0.8)};
  mix.responsibilities_sum = Eigen::Vector3d(1, 1, 1);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd samples(40, 1);
  for (int i = 0; i < 40; ++i) samples(i, 0) = normal(rng);
  double naive = 0;
  for (int i = 0; i < 40; ++i) {
    double s = 0;
    for (int c = 0; c < 3; ++c) {
      double var = mix.covs[static_cast<std::size_t>(c)](0, 0);
      double r = samples(i, 0) - mix.means(c, 0);
      s += mix.weights[c] * std::exp(-0.5 * r * r / var) / std::sqrt(2 * M_PI * var);
    }
    naive += std::log(s);
  }
  CHECK(gmm_log_likelihood(mix, samples) == doctest::Approx(naive).epsilon(1e-10));
}

TEST_CASE("EM log-likelihood trace is monotone") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> a(-2.0, 0.6), b(1.5, 0.4);
  Eigen::VectorXd v(600);
  for (int i = 0; i < 300; ++i) v[i] = a(rng);
  for (int i = 300; i < 600; ++i) v[i] = b(rng);
  std::vector<double> trace;
  EmConfig cfg;
  cfg.loglik_trace = &trace;
  fit_gmm(make_block(v), 3, cfg);
  REQUIRE(trace.size() >= 2);
  for (std::size_t i = 1; i < trace.size(); ++i)
    CHECK(trace[i] >= trace[i - 1] - 1e-9 * std::abs(trace[i - 1]));
}

TEST_CASE("responsibility mass sums to T and relabeling preserves likelihood") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(400);
  for (int i = 0; i < 400; ++i) v[i] = normal(rng) + (i % 2 ? 2.5 : -2.5);
  LocalMixtureFit fit = fit_gmm(make_block(v), 2);
  CHECK(fit.responsibilities_sum.sum() == doctest::Approx(400.0).epsilon(1e-8));
  CHECK(fit.weights.sum() == doctest::Approx(1.0).epsilon(1e-10));

  LocalMixtureFit swapped = fit;
  std::swap(swapped.weights[0], swapped.weights[1]);
  swapped.means.row(0).swap(swapped.means.row(1));
  std::swap(swapped.covs[0], swapped.covs[1]);
  Eigen::MatrixXd y = v;
  CHECK(gmm_log_likelihood(fit, y) == doctest::Approx(gmm_log_likelihood(swapped, y)));
}
