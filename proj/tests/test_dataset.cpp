#include "ggmp/dataset.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

using namespace ggmp;
namespace fs = std::filesystem;

namespace {

fs::path write_temp(const std::string& name, const std::string& content) {
  fs::path p = fs::temp_directory_path() / name;
  std::ofstream out(p);
  out << content;
  return p;
}

}  // namespace

TEST_CASE("load_samples_csv groups rows by input id") {
  auto p = write_temp("ggmp_ds1.csv",
                      "input_id,x1,y1\n"
                      "a,0.0,1.0\n"
                      "a,0.0,2.0\n"
                      "b,1.0,3.0\n");
  auto ds = load_samples_csv(p.string());
  CHECK(ds.size() == 2);
  CHECK(ds.block("a").count() == 2);
  CHECK(ds.block("b").count() == 1);
  CHECK(ds.block("a").samples(1, 0) == doctest::Approx(2.0));
  CHECK(ds.inputs[1].x[0] == doctest::Approx(1.0));
}

TEST_CASE("load_samples_csv rejects empty files") {
  auto p = write_temp("ggmp_ds_empty.csv", "input_id,x1,y1\n");
  CHECK_THROWS_WITH_AS(load_samples_csv(p.string()), doctest::Contains("no records"),
                       std::runtime_error);
}

TEST_CASE("load_samples_csv names the malformed line") {
  auto p = write_temp("ggmp_ds_bad.csv",
                      "input_id,x1,y1\n"
                      "a,0.0,1.0\n"
                      "a,0.0,oops\n");
  CHECK_THROWS_WITH_AS(load_samples_csv(p.string()), doctest::Contains("line 3"),
                       std::runtime_error);
}

TEST_CASE("to_histogram on {0,1} with two bins") {
  SampleBlock block;
  block.input_id = "a";
  block.samples.resize(2, 1);
  block.samples << 0.0, 1.0;
  GriddedDensity g = to_histogram(block, 2);
  CHECK(g.grid[0] == doctest::Approx(0.25));
  CHECK(g.grid[1] == doctest::Approx(0.75));
  CHECK(g.density[0] == doctest::Approx(1.0));
  CHECK(g.density[1] == doctest::Approx(1.0));
  CHECK(g.quad_weights[0] == doctest::Approx(0.5));
  CHECK(g.quad_weights[1] == doctest::Approx(0.5));
}

TEST_CASE("to_histogram rejects degenerate support") {
  SampleBlock block;
  block.input_id = "a";
  block.samples = Eigen::MatrixXd::Constant(5, 1, 3.0);
  CHECK_THROWS_WITH_AS(to_histogram(block, 4), doctest::Contains("degenerate"),
                       std::runtime_error);
}

TEST_CASE("to_histogram is normalized for any block") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  SampleBlock block;
  block.input_id = "a";
  block.samples.resize(400, 1);
  for (int i = 0; i < 400; ++i) block.samples(i, 0) = normal(rng);
  GriddedDensity g = to_histogram(block, 32);
  CHECK(g.density.dot(g.quad_weights) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("histogram converges in L1 to the generating density") {
  // T = 1e5 draws from N(0,1), B ~ T^{1/3}
  const int t = 100000, b = 46;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  SampleBlock block;
  block.input_id = "a";
  block.samples.resize(t, 1);
  for (int i = 0; i < t; ++i) block.samples(i, 0) = normal(rng);
  GriddedDensity g = to_histogram(block, b);
  double l1 = 0;
  for (Eigen::Index l = 0; l < g.grid.size(); ++l) {
    double truth = std::exp(-0.5 * g.grid[l] * g.grid[l]) / std::sqrt(2 * M_PI);
    l1 += std::abs(g.density[l] - truth) * g.quad_weights[l];
  }
  CHECK(l1 < 0.1);
}

TEST_CASE("trapezoid weights on a uniform grid") {
  Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(5, 0.0, 4.0);
  Eigen::VectorXd w = trapezoid_weights(grid);
  CHECK(w[0] == doctest::Approx(0.5));
  CHECK(w[1] == doctest::Approx(1.0));
  CHECK(w[3] == doctest::Approx(1.0));
  CHECK(w[4] == doctest::Approx(0.5));
}

TEST_CASE("split_train_test sizes and determinism") {
  DistributionValuedDataset ds;
  for (int i = 0; i < 10; ++i) {
    InputPoint ip;
    ip.id = "i" + std::to_string(i);
    ip.x = Eigen::VectorXd::Constant(1, i);
    ds.inputs.push_back(ip);
    SampleBlock b;
    b.input_id = ip.id;
    b.samples = Eigen::MatrixXd::Constant(3, 1, i);
    ds.sample_blocks[ip.id] = b;
  }
  auto [train, test] = split_train_test(ds, 0.2, 7);
  CHECK(train.size() == 8);
  CHECK(test.size() == 2);
  for (const auto& ip : test.inputs)
    CHECK(!train.has_block(ip.id));

  auto [train2, test2] = split_train_test(ds, 0.2, 7);
  REQUIRE(test2.size() == test.size());
  for (std::size_t i = 0; i < test.inputs.size(); ++i)
    CHECK(test.inputs[i].id == test2.inputs[i].id);
}

TEST_CASE("split_train_test always holds out at least one input") {
  DistributionValuedDataset ds;
  for (int i = 0; i < 2; ++i) {
    InputPoint ip;
    ip.id = "i" + std::to_string(i);
    ip.x = Eigen::VectorXd::Constant(1, i);
    ds.inputs.push_back(ip);
    SampleBlock b;
    b.input_id = ip.id;
    b.samples = Eigen::MatrixXd::Constant(3, 1, i);
    ds.sample_blocks[ip.id] = b;
  }
  auto [train, test] = split_train_test(ds, 0.2, 0);
  CHECK(train.size() == 1);
  CHECK(test.size() == 1);
}

TEST_CASE("gridded CSV round trip") {
  DistributionValuedDataset ds;
  InputPoint ip;
  ip.id = "a";
  ip.x = Eigen::VectorXd::Constant(1, 0.5);
  ds.inputs.push_back(ip);
  GriddedDensity g;
  g.input_id = "a";
  g.grid = Eigen::VectorXd::LinSpaced(101, -4.0, 4.0);
  g.quad_weights = trapezoid_weights(g.grid);
  g.density = (-0.5 * g.grid.array().square()).exp() / std::sqrt(2 * M_PI);
  g.density /= g.density.dot(g.quad_weights);
  ds.gridded["a"] = g;

  fs::path p = fs::temp_directory_path() / "ggmp_grid_rt.csv";
  save_gridded_csv(ds, p.string());
  auto back = load_gridded_csv(p.string());
  REQUIRE(back.size() == 1);
  const auto& gb = back.gridded.at("a");
  REQUIRE(gb.grid.size() == g.grid.size());
  CHECK((gb.density - g.density).cwiseAbs().maxCoeff() < 1e-9);
}
