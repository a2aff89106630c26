#include "ggmp/align.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace ggmp;

namespace {

LocalMixtureFit fit_1d(std::initializer_list<double> means,
                       std::initializer_list<double> vars) {
  LocalMixtureFit f;
  f.input_id = "t";
  const int k = static_cast<int>(means.size());
  f.weights = Eigen::VectorXd::Constant(k, 1.0 / k);
  f.means.resize(k, 1);
  int i = 0;
  for (double m : means) f.means(i++, 0) = m;
  i = 0;
  for (double v : vars) f.covs.push_back(Eigen::MatrixXd::Constant(1, 1, v));
  f.responsibilities_sum = Eigen::VectorXd::Constant(k, 1.0);
  return f;
}

double exhaustive_assignment_min(const Eigen::MatrixXd& cost) {
  const int k = static_cast<int>(cost.rows());
  std::vector<int> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0;
    for (int i = 0; i < k; ++i) c += cost(i, perm[static_cast<std::size_t>(i)]);
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

TEST_CASE("sort_align orders component means ascending") {
  std::vector<LocalMixtureFit> fits = {fit_1d({3, 1, 2}, {1, 1, 1})};
  AlignmentPlan plan = sort_align(fits);
  auto aligned = apply_alignment(fits, plan);
  CHECK(aligned[0].means(0, 0) == doctest::Approx(1));
  CHECK(aligned[0].means(1, 0) == doctest::Approx(2));
  CHECK(aligned[0].means(2, 0) == doctest::Approx(3));

  std::vector<LocalMixtureFit> sorted = {fit_1d({1, 2, 3}, {1, 1, 1})};
  AlignmentPlan ident = sort_align(sorted);
  CHECK(ident.permutations[0] == std::vector<int>{0, 1, 2});
}

TEST_CASE("sorting minimizes the pairwise squared-mean cost under preserved ranks") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int k = 2; k <= 5; ++k) {
    // two inputs with identical rank order of means
    Eigen::VectorXd base(k), shift(k);
    for (int c = 0; c < k; ++c) base[c] = 3.0 * c + unif(rng);
    for (int c = 0; c < k; ++c) shift[c] = 3.0 * c + unif(rng);
    std::vector<int> scramble(static_cast<std::size_t>(k));
    std::iota(scramble.begin(), scramble.end(), 0);
    std::shuffle(scramble.begin(), scramble.end(), rng);

    LocalMixtureFit a, b;
    a = fit_1d({}, {});
    a.weights = Eigen::VectorXd::Constant(k, 1.0 / k);
    a.means.resize(k, 1);
    b = a;
    a.covs.clear();
    b.covs.clear();
    for (int c = 0; c < k; ++c) {
      a.means(c, 0) = base[scramble[static_cast<std::size_t>(c)]];
      b.means(c, 0) = shift[scramble[static_cast<std::size_t>((c + 1) % k)]];
      a.covs.push_back(Eigen::MatrixXd::Identity(1, 1));
      b.covs.push_back(Eigen::MatrixXd::Identity(1, 1));
    }
    a.responsibilities_sum = b.weights;
    b.responsibilities_sum = b.weights;

    std::vector<LocalMixtureFit> fits = {a, b};
    auto aligned = apply_alignment(fits, sort_align(fits));
    double sort_cost = 0;
    for (int c = 0; c < k; ++c) {
      double d = aligned[0].means(c, 0) - aligned[1].means(c, 0);
      sort_cost += d * d;
    }
    // exhaustive minimum over all relabelings of input b
    Eigen::MatrixXd cost(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        double d = aligned[0].means(i, 0) - aligned[1].means(j, 0);
        cost(i, j) = d * d;
      }
    CHECK(sort_cost == doctest::Approx(exhaustive_assignment_min(cost)).epsilon(1e-12));
  }
}

TEST_CASE("w2_gaussian_sq closed forms") {
  Eigen::VectorXd mu0 = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd mu2(2);
  mu2 << 2.0, 0.0;
  Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);
  CHECK(w2_gaussian_sq(mu0, eye, mu0, eye) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(w2_gaussian_sq(mu0, eye, mu2, eye) == doctest::Approx(4.0));

  Eigen::VectorXd a = Eigen::VectorXd::Zero(1), b = Eigen::VectorXd::Constant(1, 1.0);
  Eigen::MatrixXd s1 = Eigen::MatrixXd::Constant(1, 1, 1.0);
  Eigen::MatrixXd s4 = Eigen::MatrixXd::Constant(1, 1, 4.0);
  CHECK(w2_gaussian_sq(a, s1, b, s4) == doctest::Approx(2.0));

  // symmetry and the general Bures path agreeing with the 1-d formula
  Eigen::MatrixXd c1(2, 2), c2(2, 2);
  c1 << 1.0, 0.3, 0.3, 0.8;
  c2 << 0.5, -0.1, -0.1, 1.2;
  CHECK(w2_gaussian_sq(mu0, c1, mu2, c2) ==
        doctest::Approx(w2_gaussian_sq(mu2, c2, mu0, c1)).epsilon(1e-10));
}

TEST_CASE("hellinger_sq between identical and simple Gaussians") {
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(1);
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(1, 1);
  CHECK(hellinger_sq_gaussian(mu, s, mu, s) == doctest::Approx(0.0).epsilon(1e-12));
  // 1-d closed form: H^2 = 1 - sqrt(2 s1 s2 / (s1^2+s2^2)) exp(-d^2/(4(s1^2+s2^2)))
  Eigen::VectorXd b = Eigen::VectorXd::Constant(1, 1.0);
  Eigen::MatrixXd s2 = Eigen::MatrixXd::Constant(1, 1, 4.0);
  double expected = 1.0 - std::sqrt(2.0 * 1.0 * 2.0 / 5.0) * std::exp(-1.0 / 20.0);
  CHECK(hellinger_sq_gaussian(mu, s, b, s2) == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("solve_assignment equals the exhaustive minimum") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    int k = 2 + static_cast<int>(rng() % 4);  // 2..5
    Eigen::MatrixXd cost(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) cost(i, j) = unif(rng);
    auto assign = solve_assignment(cost);
    double c = 0;
    std::vector<bool> used(static_cast<std::size_t>(k), false);
    for (int i = 0; i < k; ++i) {
      c += cost(i, assign[static_cast<std::size_t>(i)]);
      used[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])] = true;
    }
    CHECK(std::all_of(used.begin(), used.end(), [](bool b) { return b; }));
    CHECK(c == doctest::Approx(exhaustive_assignment_min(cost)).epsilon(1e-12));
  }
}

TEST_CASE("hungarian_align basics") {
  // K=1: all-identity plan
  std::vector<LocalMixtureFit> single = {fit_1d({0.0}, {1.0}), fit_1d({1.0}, {2.0})};
  AlignmentPlan p1 = hungarian_align(single, {0, 1});
  CHECK(p1.permutations[0] == std::vector<int>{0});
  CHECK(p1.permutations[1] == std::vector<int>{0});

  // crossing means with distinct variances: W2 keeps variance-consistent tracks
  // input 0: components (mean 0, var 0.01) and (mean 0.2, var 4.0)
  // input 1: components (mean 0.2, var 0.01) and (mean 0, var 4.0)
  std::vector<LocalMixtureFit> cross = {fit_1d({0.0, 0.2}, {0.01, 4.0}),
                                        fit_1d({0.2, 0.0}, {0.01, 4.0})};
  AlignmentPlan p2 = hungarian_align(cross, {0, 1});
  CHECK(p2.permutations[0] == std::vector<int>{0, 1});
  // low-variance track stays together even though means crossed
  CHECK(p2.permutations[1] == std::vector<int>{0, 1});
  // mean sorting would have swapped instead
  auto sorted = sort_align(cross);
  CHECK(sorted.permutations[1] == std::vector<int>{1, 0});
}

TEST_CASE("apply_alignment group properties") {
  std::vector<LocalMixtureFit> fits = {fit_1d({2.0, -1.0, 0.5}, {0.3, 0.6, 0.9})};
  fits[0].weights = Eigen::Vector3d(0.2, 0.5, 0.3);

  AlignmentPlan ident;
  ident.permutations = {{0, 1, 2}};
  auto same = apply_alignment(fits, ident);
  CHECK(same[0].means == fits[0].means);

  AlignmentPlan plan;
  plan.permutations = {{2, 0, 1}};
  auto moved = apply_alignment(fits, plan);
  // inverse permutation restores the original
  AlignmentPlan inverse;
  inverse.permutations = {{1, 2, 0}};
  auto back = apply_alignment(moved, inverse);
  CHECK((back[0].means - fits[0].means).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back[0].weights - fits[0].weights).cwiseAbs().maxCoeff() == 0.0);

  // mixture density unchanged by relabeling
  Eigen::MatrixXd y(5, 1);
  y << -2, -1, 0, 1, 2;
  CHECK(gmm_log_likelihood(fits[0], y) ==
        doctest::Approx(gmm_log_likelihood(moved[0], y)).epsilon(1e-12));
}

TEST_CASE("lexicographic order sorts by coordinates in sequence") {
  std::vector<Eigen::VectorXd> xs(3);
  xs[0] = Eigen::Vector2d(1.0, 2.0);
  xs[1] = Eigen::Vector2d(0.0, 5.0);
  xs[2] = Eigen::Vector2d(1.0, 1.0);
  CHECK(lexicographic_order(xs) == std::vector<int>{1, 2, 0});
}
