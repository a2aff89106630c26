#include "ggmp/gp.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>

using namespace ggmp;

namespace {

KernelParams se_params(double ell, double sf2, Eigen::Index d = 1) {
  KernelParams p;
  p.family = KernelFamily::SquaredExponential;
  p.log_lengthscales = Eigen::VectorXd::Constant(d, std::log(ell));
  p.log_signal_variance = std::log(sf2);
  return p;
}

// dense-formula LML oracle: -0.5 log|2 pi C| - 0.5 r' C^-1 r
double dense_lml(const KernelParams& params, const GpTrainingData& data) {
  Eigen::MatrixXd c = kernel_matrix(params, data.X, data.X);
  c.diagonal() += data.noise_vars;
  Eigen::VectorXd r = data.targets.array() - data.prior_mean;
  Eigen::MatrixXd ci = c.inverse();
  double logdet = std::log(c.determinant());
  const double n = static_cast<double>(data.X.rows());
  return -0.5 * (n * std::log(2 * M_PI) + logdet) - 0.5 * r.dot(ci * r);
}

GpTrainingData make_training_data(int n, int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.05, 0.5);
  GpTrainingData data;
  data.X.resize(n, d);
  data.targets.resize(n);
  data.noise_vars.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) data.X(i, j) = normal(rng);
    data.targets[i] = normal(rng);
    data.noise_vars[i] = unif(rng);
  }
  return data;
}

}  // namespace

TEST_CASE("kernel_matrix basic values") {
  KernelParams p = se_params(1.0, 1.0);
  Eigen::MatrixXd a(1, 1);
  a << 0.0;
  CHECK(kernel_matrix(p, a, a)(0, 0) == doctest::Approx(1.0));

  Eigen::MatrixXd b(2, 1);
  b << 0.0, 1.0;
  Eigen::MatrixXd k = kernel_matrix(p, b, b);
  CHECK(k(0, 1) == doctest::Approx(std::exp(-0.5)));
  CHECK(k(1, 0) == doctest::Approx(std::exp(-0.5)));
}

TEST_CASE("kernel_matrix symmetry on random inputs") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd a(5, 2);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 2; ++j) a(i, j) = normal(rng);
  for (auto family : {KernelFamily::SquaredExponential, KernelFamily::Matern52}) {
    KernelParams p = se_params(0.7, 1.3, 2);
    p.family = family;
    Eigen::MatrixXd k = kernel_matrix(p, a, a);
    CHECK((k - k.transpose()).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("matern52 closed form at one distance") {
  KernelParams p = se_params(0.8, 1.5);
  p.family = KernelFamily::Matern52;
  Eigen::MatrixXd a(1, 1), b(1, 1);
  a << 0.0;
  b << 0.6;
  double u = std::sqrt(5.0) * 0.6 / 0.8;
  double expected = 1.5 * (1.0 + u + u * u / 3.0) * std::exp(-u);
  CHECK(kernel_matrix(p, a, b)(0, 0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("LML closed forms at N=1") {
  GpTrainingData data;
  data.X = Eigen::MatrixXd::Zero(1, 1);
  data.targets = Eigen::VectorXd::Constant(1, 0.5);
  data.noise_vars = Eigen::VectorXd::Constant(1, 1e-300);
  KernelParams p = se_params(1.0, 1.0);
  CHECK(log_marginal_likelihood(p, data) ==
        doctest::Approx(-0.5 * std::log(2 * M_PI) - 0.125).epsilon(1e-9));

  data.targets[0] = 0.0;
  data.noise_vars[0] = 0.5;
  CHECK(log_marginal_likelihood(p, data) ==
        doctest::Approx(-0.5 * std::log(2 * M_PI * 1.5)).epsilon(1e-9));
}

TEST_CASE("LML matches dense-formula oracle at N=20") {
  for (auto family : {KernelFamily::SquaredExponential, KernelFamily::Matern52}) {
    GpTrainingData data = make_training_data(20, 2, 11);
    KernelParams p = se_params(0.9, 1.2, 2);
    p.family = family;
    CHECK(log_marginal_likelihood(p, data) ==
          doctest::Approx(dense_lml(p, data)).epsilon(1e-9));
  }
}

TEST_CASE("LML gradient matches central finite differences") {
  for (auto family : {KernelFamily::SquaredExponential, KernelFamily::Matern52}) {
    GpTrainingData data = make_training_data(15, 2, 29);
    KernelParams p = se_params(0.6, 0.8, 2);
    p.family = family;
    Eigen::VectorXd grad;
    log_marginal_likelihood_grad(p, data, grad);
    const double h = 1e-5;
    for (int q = 0; q < 3; ++q) {
      KernelParams lo = p, hi = p;
      if (q < 2) {
        lo.log_lengthscales[q] -= h;
        hi.log_lengthscales[q] += h;
      } else {
        lo.log_signal_variance -= h;
        hi.log_signal_variance += h;
      }
      double fd =
          (log_marginal_likelihood(hi, data) - log_marginal_likelihood(lo, data)) / (2 * h);
      CHECK(grad[q] == doctest::Approx(fd).epsilon(1e-4));
    }
  }
}

TEST_CASE("train_gp recovers a known lengthscale within a factor of two") {
  const int n = 120;
  const double ell = 0.5;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  GpTrainingData data;
  data.X.resize(n, 1);
  for (int i = 0; i < n; ++i) data.X(i, 0) = -3.0 + 6.0 * i / (n - 1);
  KernelParams truth = se_params(ell, 1.0);
  Eigen::MatrixXd k = kernel_matrix(truth, data.X, data.X);
  k.diagonal().array() += 1e-10;
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  Eigen::VectorXd z(n);
  for (int i = 0; i < n; ++i) z[i] = normal(rng);
  Eigen::VectorXd f = Eigen::MatrixXd(llt.matrixL()) * z;
  data.targets = f;
  data.noise_vars = Eigen::VectorXd::Constant(n, 1e-4);
  for (int i = 0; i < n; ++i) data.targets[i] += 1e-2 * normal(rng);

  GpTrainConfig cfg;
  cfg.seed = 1;
  TrainedGp gp = train_gp(data, cfg);
  double ell_hat = std::exp(gp.params.log_lengthscales[0]);
  CHECK(ell_hat >= 0.5 * ell);
  CHECK(ell_hat <= 2.0 * ell);
  // optimizer contract: at least as good as the default init
  CHECK(gp.lml >= log_marginal_likelihood(se_params(1.0, 1.0), data) - 1e-9);
}

TEST_CASE("train_gp survives constant targets with large noise") {
  GpTrainingData data;
  data.X = Eigen::VectorXd::LinSpaced(12, 0, 1);
  data.targets = Eigen::VectorXd::Constant(12, 2.0);
  data.prior_mean = 2.0;
  data.noise_vars = Eigen::VectorXd::Constant(12, 4.0);
  TrainedGp gp = train_gp(data);
  CHECK(std::isfinite(gp.lml));
  CHECK(std::exp(gp.params.log_signal_variance) < 1.0);
}

TEST_CASE("posterior one-point conditioning") {
  GpTrainingData data;
  data.X = Eigen::MatrixXd::Zero(1, 1);
  data.targets = Eigen::VectorXd::Constant(1, 0.8);
  data.noise_vars = Eigen::VectorXd::Constant(1, 1.0);
  TrainedGp gp = finalize_gp(se_params(1.0, 1.0), data);
  Eigen::VectorXd mean, var;
  posterior_predict(gp, Eigen::MatrixXd::Zero(1, 1), mean, var);
  CHECK(mean[0] == doctest::Approx(0.4).epsilon(1e-10));
  CHECK(var[0] == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("posterior interpolates noise-free data") {
  // short lengthscale keeps the Gram matrix well conditioned at tiny noise
  GpTrainingData data = make_training_data(8, 1, 17);
  data.noise_vars.setConstant(1e-12);
  data.X = Eigen::VectorXd::LinSpaced(8, -2, 2);
  TrainedGp gp = finalize_gp(se_params(0.25, 1.0), data);
  Eigen::VectorXd mean, var;
  posterior_predict(gp, data.X, mean, var);
  CHECK((mean - data.targets).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(var.maxCoeff() < 1e-6);
  CHECK(var.minCoeff() >= 0.0);
}

TEST_CASE("posterior reverts to the prior far from data") {
  GpTrainingData data = make_training_data(8, 1, 23);
  data.prior_mean = 1.5;
  data.targets.array() += 1.5;
  TrainedGp gp = finalize_gp(se_params(0.4, 2.0), data);
  Eigen::MatrixXd far(1, 1);
  far << 100.0;
  Eigen::VectorXd mean, var;
  posterior_predict(gp, far, mean, var);
  CHECK(mean[0] == doctest::Approx(1.5).epsilon(1e-6));
  CHECK(var[0] == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("posterior variance never exceeds the prior variance") {
  GpTrainingData data = make_training_data(25, 2, 31);
  TrainedGp gp = finalize_gp(se_params(0.7, 1.9, 2), data);
  Eigen::MatrixXd q = make_training_data(40, 2, 32).X;
  Eigen::VectorXd mean, var;
  posterior_predict(gp, q, mean, var);
  CHECK(var.maxCoeff() <= 1.9 + 1e-10);
}

TEST_CASE("heteroscedastic noise enters as an exact diagonal addition") {
  GpTrainingData data = make_training_data(12, 1, 41);
  KernelParams p = se_params(0.8, 1.1);
  data.noise_vars[3] *= 2.0;
  CHECK(log_marginal_likelihood(p, data) ==
        doctest::Approx(dense_lml(p, data)).epsilon(1e-9));
}

TEST_CASE("TrainedGp cache invariants") {
  GpTrainingData data = make_training_data(18, 1, 47);
  TrainedGp gp = finalize_gp(se_params(0.9, 1.4), data);
  Eigen::MatrixXd c = kernel_matrix(gp.params, data.X, data.X);
  c.diagonal() += data.noise_vars;
  Eigen::MatrixXd rec = gp.chol * gp.chol.transpose();
  CHECK((rec - c).cwiseAbs().maxCoeff() / c.cwiseAbs().maxCoeff() < 1e-8);
  Eigen::VectorXd r = data.targets.array() - data.prior_mean;
  CHECK((c * gp.alpha - r).cwiseAbs().maxCoeff() < 1e-8);
}
