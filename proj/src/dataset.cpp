#include "ggmp/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace ggmp {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double parse_number(const std::string& s, std::size_t line_no, const std::string& col) {
  // strtod instead of stod: underflowing values (subnormal magnitudes) must
  // round toward zero rather than fail, since densities legitimately underflow
  const char* begin = s.c_str();
  char* end = nullptr;
  errno = 0;
  double v = std::strtod(begin, &end);
  bool ok = end != begin;
  if (ok && errno == ERANGE && std::abs(v) > 1.0) ok = false;  // overflow
  while (ok && *end != '\0') {
    if (!std::isspace(static_cast<unsigned char>(*end))) ok = false;
    ++end;
  }
  if (!ok || !std::isfinite(v))
    throw std::runtime_error("line " + std::to_string(line_no) + ": cannot parse '" + s +
                             "' in column " + col);
  return v;
}

struct Header {
  int d = 0;
  int p = 0;
  bool gridded = false;
};

Header parse_header(const std::string& line) {
  Header h;
  auto cols = split_line(line);
  if (cols.empty() || cols[0] != "input_id")
    throw std::runtime_error("header must start with input_id");
  std::size_t i = 1;
  while (i < cols.size() && cols[i].rfind('x', 0) == 0) { ++h.d; ++i; }
  if (h.d == 0) throw std::runtime_error("header names no x columns");
  if (i < cols.size() && cols[i] == "y" && i + 1 < cols.size() && cols[i + 1] == "density") {
    h.gridded = true;
    h.p = 1;
    i += 2;
  } else {
    while (i < cols.size() && cols[i].rfind('y', 0) == 0) { ++h.p; ++i; }
  }
  if (h.p == 0) throw std::runtime_error("header names no y columns");
  if (i != cols.size()) throw std::runtime_error("unexpected trailing header columns");
  return h;
}

}  // namespace

Eigen::Index DistributionValuedDataset::output_dim() const {
  if (!sample_blocks.empty()) return sample_blocks.begin()->second.dim();
  if (!gridded.empty()) return 1;
  return 0;
}

const SampleBlock& DistributionValuedDataset::block(const std::string& id) const {
  auto it = sample_blocks.find(id);
  if (it == sample_blocks.end())
    throw std::runtime_error("no sample block for input '" + id + "'");
  return it->second;
}

Eigen::VectorXd trapezoid_weights(const Eigen::VectorXd& grid) {
  const Eigen::Index m = grid.size();
  if (m < 2) throw std::invalid_argument("trapezoid_weights: need at least 2 grid points");
  for (Eigen::Index i = 1; i < m; ++i)
    if (!(grid[i] > grid[i - 1]))
      throw std::invalid_argument("trapezoid_weights: grid not strictly increasing");
  Eigen::VectorXd w(m);
  w[0] = 0.5 * (grid[1] - grid[0]);
  w[m - 1] = 0.5 * (grid[m - 1] - grid[m - 2]);
  for (Eigen::Index i = 1; i + 1 < m; ++i) w[i] = 0.5 * (grid[i + 1] - grid[i - 1]);
  return w;
}

DistributionValuedDataset load_samples_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": no records");
  Header h = parse_header(line);
  if (h.gridded) throw std::runtime_error(path + ": gridded header passed to sample loader");

  DistributionValuedDataset ds;
  std::map<std::string, std::vector<Eigen::VectorXd>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cols = split_line(line);
    if (static_cast<int>(cols.size()) != 1 + h.d + h.p)
      throw std::runtime_error("line " + std::to_string(line_no) + ": expected " +
                               std::to_string(1 + h.d + h.p) + " fields, got " +
                               std::to_string(cols.size()));
    const std::string& id = cols[0];
    Eigen::VectorXd x(h.d), y(h.p);
    for (int q = 0; q < h.d; ++q) x[q] = parse_number(cols[1 + q], line_no, "x" + std::to_string(q + 1));
    for (int j = 0; j < h.p; ++j) y[j] = parse_number(cols[1 + h.d + j], line_no, "y" + std::to_string(j + 1));
    auto it = rows.find(id);
    if (it == rows.end()) ds.inputs.push_back({id, x});
    rows[id].push_back(y);
  }
  if (ds.inputs.empty()) throw std::runtime_error(path + ": no records");
  for (const auto& ip : ds.inputs) {
    const auto& ys = rows.at(ip.id);
    SampleBlock b;
    b.input_id = ip.id;
    b.samples.resize(static_cast<Eigen::Index>(ys.size()), h.p);
    for (std::size_t t = 0; t < ys.size(); ++t) b.samples.row(static_cast<Eigen::Index>(t)) = ys[t];
    ds.sample_blocks.emplace(ip.id, std::move(b));
  }
  return ds;
}

DistributionValuedDataset load_gridded_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": no records");
  Header h = parse_header(line);
  if (!h.gridded) throw std::runtime_error(path + ": expected `y,density` columns");

  DistributionValuedDataset ds;
  std::map<std::string, std::vector<std::pair<double, double>>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cols = split_line(line);
    if (static_cast<int>(cols.size()) != 3 + h.d)
      throw std::runtime_error("line " + std::to_string(line_no) + ": expected " +
                               std::to_string(3 + h.d) + " fields");
    const std::string& id = cols[0];
    Eigen::VectorXd x(h.d);
    for (int q = 0; q < h.d; ++q) x[q] = parse_number(cols[1 + q], line_no, "x" + std::to_string(q + 1));
    double y = parse_number(cols[1 + h.d], line_no, "y");
    double dens = parse_number(cols[2 + h.d], line_no, "density");
    if (dens < 0) throw std::runtime_error("line " + std::to_string(line_no) + ": negative density");
    if (rows.find(id) == rows.end()) ds.inputs.push_back({id, x});
    rows[id].emplace_back(y, dens);
  }
  if (ds.inputs.empty()) throw std::runtime_error(path + ": no records");
  for (const auto& ip : ds.inputs) {
    const auto& pts = rows.at(ip.id);
    GriddedDensity g;
    g.input_id = ip.id;
    g.grid.resize(static_cast<Eigen::Index>(pts.size()));
    g.density.resize(static_cast<Eigen::Index>(pts.size()));
    for (std::size_t l = 0; l < pts.size(); ++l) {
      g.grid[static_cast<Eigen::Index>(l)] = pts[l].first;
      g.density[static_cast<Eigen::Index>(l)] = pts[l].second;
    }
    g.quad_weights = trapezoid_weights(g.grid);
    double mass = g.density.dot(g.quad_weights);
    if (std::abs(mass - 1.0) > 1e-6)
      throw std::runtime_error("input '" + ip.id + "': density integrates to " +
                               std::to_string(mass) + ", not 1");
    g.density /= mass;
    ds.gridded.emplace(ip.id, std::move(g));
  }
  return ds;
}

void save_samples_csv(const DistributionValuedDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  const Eigen::Index d = ds.input_dim(), p = ds.output_dim();
  out << "input_id";
  for (Eigen::Index q = 0; q < d; ++q) out << ",x" << (q + 1);
  for (Eigen::Index j = 0; j < p; ++j) out << ",y" << (j + 1);
  out << "\n";
  out.precision(17);
  for (const auto& ip : ds.inputs) {
    const SampleBlock& b = ds.block(ip.id);
    for (Eigen::Index t = 0; t < b.count(); ++t) {
      out << ip.id;
      for (Eigen::Index q = 0; q < d; ++q) out << ',' << ip.x[q];
      for (Eigen::Index j = 0; j < p; ++j) out << ',' << b.samples(t, j);
      out << "\n";
    }
  }
}

void save_gridded_csv(const DistributionValuedDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  const Eigen::Index d = ds.input_dim();
  out << "input_id";
  for (Eigen::Index q = 0; q < d; ++q) out << ",x" << (q + 1);
  out << ",y,density\n";
  out.precision(17);
  for (const auto& ip : ds.inputs) {
    auto it = ds.gridded.find(ip.id);
    if (it == ds.gridded.end()) continue;
    const GriddedDensity& g = it->second;
    for (Eigen::Index l = 0; l < g.grid.size(); ++l) {
      out << ip.id;
      for (Eigen::Index q = 0; q < d; ++q) out << ',' << ip.x[q];
      out << ',' << g.grid[l] << ',' << g.density[l] << "\n";
    }
  }
}

GriddedDensity to_histogram(const SampleBlock& block, int bins) {
  if (block.dim() != 1) throw std::invalid_argument("to_histogram: univariate blocks only");
  if (bins < 2) throw std::invalid_argument("to_histogram: need at least 2 bins");
  const Eigen::Index t = block.count();
  double lo = block.samples.col(0).minCoeff();
  double hi = block.samples.col(0).maxCoeff();
  if (!(hi > lo)) throw std::runtime_error("to_histogram: degenerate support");
  const double width = (hi - lo) / bins;
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(bins);
  for (Eigen::Index i = 0; i < t; ++i) {
    int b = static_cast<int>((block.samples(i, 0) - lo) / width);
    b = std::clamp(b, 0, bins - 1);
    counts[b] += 1.0;
  }
  GriddedDensity g;
  g.input_id = block.input_id;
  g.grid.resize(bins);
  for (int b = 0; b < bins; ++b) g.grid[b] = lo + (b + 0.5) * width;
  g.density = counts / (static_cast<double>(t) * width);
  g.quad_weights = Eigen::VectorXd::Constant(bins, width);
  return g;
}

std::pair<DistributionValuedDataset, DistributionValuedDataset>
split_train_test(const DistributionValuedDataset& ds, double test_fraction, std::uint64_t seed) {
  const Eigen::Index n = ds.size();
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw std::invalid_argument("split_train_test: test_fraction must be in (0,1)");
  if (n < 2) throw std::invalid_argument("split_train_test: need at least 2 inputs");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  Eigen::Index n_train = static_cast<Eigen::Index>(
      std::ceil(static_cast<double>(n) * (1.0 - test_fraction)));
  if (n_train >= n) n_train = n - 1;  // always hold out at least one input
  if (n_train < 1) n_train = 1;

  DistributionValuedDataset train, test;
  auto copy_input = [&](DistributionValuedDataset& dst, Eigen::Index i) {
    const InputPoint& ip = ds.inputs[static_cast<std::size_t>(i)];
    dst.inputs.push_back(ip);
    auto sit = ds.sample_blocks.find(ip.id);
    if (sit != ds.sample_blocks.end()) dst.sample_blocks.emplace(ip.id, sit->second);
    auto git = ds.gridded.find(ip.id);
    if (git != ds.gridded.end()) dst.gridded.emplace(ip.id, git->second);
  };
  std::vector<Eigen::Index> train_idx(order.begin(), order.begin() + n_train);
  std::vector<Eigen::Index> test_idx(order.begin() + n_train, order.end());
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  for (Eigen::Index i : train_idx) copy_input(train, i);
  for (Eigen::Index i : test_idx) copy_input(test, i);
  return {std::move(train), std::move(test)};
}

}  // namespace ggmp
