#include "ggmp/ggmp.hpp"

#include "ggmp/parallel.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <stdexcept>

namespace ggmp {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 step over seed ^ stream
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double log_normal_pdf(double y, double mean, double var) {
  double r = y - mean;
  return -0.5 * (kLogTwoPi + std::log(var)) - 0.5 * r * r / var;
}

[[noreturn]] void stage_error(const std::string& stage, const std::string& what) {
  throw std::runtime_error("[" + stage + "] " + what);
}

}  // namespace

std::string to_string(WeightMode m) {
  switch (m) {
    case WeightMode::Equal: return "equal";
    case WeightMode::Shared: return "shared";
    case WeightMode::InputDependent: return "input-dependent";
  }
  return "shared";
}

WeightMode weight_mode_from_string(const std::string& s) {
  if (s == "equal") return WeightMode::Equal;
  if (s == "shared") return WeightMode::Shared;
  if (s == "input-dependent" || s == "xdep") return WeightMode::InputDependent;
  throw std::invalid_argument("unknown weight mode '" + s + "'");
}

GgmpModel fit(const DistributionValuedDataset& ds, const GgmpConfig& config) {
  const Eigen::Index n = ds.size();
  if (n < 1) stage_error("fit", "empty dataset");
  if (config.k < 1) stage_error("fit", "K must be >= 1");
  const Eigen::Index p = ds.output_dim();
  const Eigen::Index d = ds.input_dim();

  for (const auto& ip : ds.inputs) {
    if (!ds.has_block(ip.id))
      stage_error("fit", "input '" + ip.id + "' has no sample block");
    const auto& b = ds.block(ip.id);
    if (b.count() < config.k)
      stage_error("fit", "input '" + ip.id + "' has T=" + std::to_string(b.count()) +
                             " samples, fewer than K=" + std::to_string(config.k));
    if (b.count() < 10 * config.k)
      std::cerr << "warning: input '" << ip.id << "' has only " << b.count()
                << " samples for K=" << config.k << " components\n";
  }

  GgmpModel model;
  model.k = config.k;
  model.p = p;
  model.d = d;
  model.config = config;
  for (const auto& ip : ds.inputs) model.input_ids.push_back(ip.id);

  // stage 1: local mixture fits
  std::vector<LocalMixtureFit> raw_fits(static_cast<std::size_t>(n));
  try {
    parallel_for(
        static_cast<std::size_t>(n),
        [&](std::size_t i) {
          EmConfig em = config.em;
          // common random numbers across inputs: identical seeding makes
          // k-means++ pick comparable quantile positions in neighboring local
          // distributions, which keeps component labels consistent along x
          em.seed = mix_seed(config.seed, 0x10ca1);
          em.loglik_trace = nullptr;
          (void)i;
          raw_fits[i] = fit_gmm(ds.block(ds.inputs[i].id), config.k, em);
        },
        config.threads);
  } catch (const std::exception& e) {
    stage_error("local-fit", e.what());
  }

  // stage 2: alignment
  try {
    if (p == 1 && !config.force_hungarian) {
      model.alignment = sort_align(raw_fits);
    } else {
      std::vector<Eigen::VectorXd> xs;
      for (const auto& ip : ds.inputs) xs.push_back(ip.x);
      model.alignment = hungarian_align(raw_fits, lexicographic_order(xs), config.align_cost);
    }
    model.fits = apply_alignment(raw_fits, model.alignment);
  } catch (const std::exception& e) {
    stage_error("align", e.what());
  }

  // stage 3a: per-component, per-coordinate GP training
  Eigen::MatrixXd x_mat(n, d);
  for (Eigen::Index i = 0; i < n; ++i) x_mat.row(i) = ds.inputs[static_cast<std::size_t>(i)].x;

  model.gps.assign(static_cast<std::size_t>(config.k), {});
  for (auto& row : model.gps) row.resize(static_cast<std::size_t>(p));
  model.avg_within_var.resize(config.k, p);

  std::vector<std::pair<int, Eigen::Index>> jobs;
  for (int c = 0; c < config.k; ++c)
    for (Eigen::Index j = 0; j < p; ++j) jobs.emplace_back(c, j);
  try {
    parallel_for(
        jobs.size(),
        [&](std::size_t idx) {
          auto [c, j] = jobs[idx];
          GpTrainingData data;
          data.X = x_mat;
          data.targets.resize(n);
          data.noise_vars.resize(n);
          for (Eigen::Index i = 0; i < n; ++i) {
            const auto& f = model.fits[static_cast<std::size_t>(i)];
            data.targets[i] = f.means(c, j);
            data.noise_vars[i] = f.covs[static_cast<std::size_t>(c)](j, j);
          }
          data.prior_mean = data.targets.mean();
          double tvar = (data.targets.array() - data.prior_mean).square().mean();
          double floor = std::max(1e-8 * tvar, 1e-12);
          data.noise_vars = data.noise_vars.cwiseMax(floor);
          GpTrainConfig gc = config.gp;
          gc.seed = mix_seed(config.seed, 0x5000 + idx);
          model.gps[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)] =
              train_gp(data, gc, config.kernel);
          model.avg_within_var(c, j) = data.noise_vars.mean();
        },
        config.threads);
  } catch (const std::exception& e) {
    stage_error("gp-train", e.what());
  }

  // stage 3b: weights
  try {
    if (config.weight_mode == WeightMode::Equal || config.k == 1) {
      model.weight_mode = config.weight_mode == WeightMode::Equal ? WeightMode::Equal
                                                                  : config.weight_mode;
      model.shared_weights = Eigen::VectorXd::Constant(config.k, 1.0 / config.k);
      if (config.weight_mode != WeightMode::Equal && config.k == 1)
        model.weight_mode = WeightMode::Shared;
      ComponentDensityTable table = training_density_table(model, ds);
      model.train_objective = dist_loglik_shared(table, model.shared_weights);
    } else {
      ComponentDensityTable table = training_density_table(model, ds);
      model.shared_weights = optimize_shared_weights(table, config.weight_opt);
      model.weight_mode = WeightMode::Shared;
      model.train_objective = dist_loglik_shared(table, model.shared_weights);
      if (config.weight_mode == WeightMode::InputDependent) {
        model.xdep = optimize_xdep_weights(table, x_mat, model.shared_weights);
        model.weight_mode = WeightMode::InputDependent;
        std::vector<Eigen::VectorXd> per_input;
        for (Eigen::Index i = 0; i < n; ++i)
          per_input.push_back(model.xdep.weights_at(x_mat.row(i).transpose()));
        model.train_objective = dist_loglik(table, per_input);
      }
    }
  } catch (const std::exception& e) {
    stage_error("weight-opt", e.what());
  }
  return model;
}

ComponentDensityTable training_density_table(const GgmpModel& model,
                                             const DistributionValuedDataset& ds) {
  const Eigen::Index n = model.gps.empty() ? 0 : model.gps[0][0].data.X.rows();
  const Eigen::Index p = model.p;
  const int k = model.k;

  Eigen::MatrixXd x_mat = model.gps[0][0].data.X;
  // posterior at the training inputs, per (component, coordinate)
  std::vector<std::vector<Eigen::VectorXd>> mu(static_cast<std::size_t>(k)),
      var(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    mu[static_cast<std::size_t>(c)].resize(static_cast<std::size_t>(p));
    var[static_cast<std::size_t>(c)].resize(static_cast<std::size_t>(p));
    for (Eigen::Index j = 0; j < p; ++j) {
      const TrainedGp& gp = model.gps[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)];
      Eigen::VectorXd m, v;
      posterior_predict(gp, x_mat, m, v);
      // per-input predictive variance: GP posterior + local within-component
      mu[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)] = m;
      var[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)] = v + gp.data.noise_vars;
    }
  }

  ComponentDensityTable table;
  table.k = k;
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::string& id = model.input_ids[static_cast<std::size_t>(i)];
    auto sit = ds.sample_blocks.find(id);
    if (sit != ds.sample_blocks.end()) {
      const Eigen::MatrixXd& y = sit->second.samples;
      Eigen::MatrixXd log_comp = Eigen::MatrixXd::Zero(y.rows(), k);
      for (int c = 0; c < k; ++c)
        for (Eigen::Index j = 0; j < p; ++j) {
          double m = mu[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)][i];
          double v = var[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)][i];
          log_comp.col(c).array() +=
              -0.5 * (kLogTwoPi + std::log(v)) -
              0.5 / v * (y.col(j).array() - m).square();
        }
      table.add(log_comp, Eigen::VectorXd::Constant(y.rows(), 1.0 / y.rows()));
    } else {
      auto git = ds.gridded.find(id);
      if (git == ds.gridded.end())
        throw std::runtime_error("input '" + id + "' has neither samples nor grid");
      const GriddedDensity& g = git->second;
      Eigen::MatrixXd log_comp(g.grid.size(), k);
      for (int c = 0; c < k; ++c) {
        double m = mu[static_cast<std::size_t>(c)][0][i];
        double v = var[static_cast<std::size_t>(c)][0][i];
        log_comp.col(c) = (-0.5 * (kLogTwoPi + std::log(v)) -
                           0.5 / v * (g.grid.array() - m).square())
                              .matrix();
      }
      table.add(log_comp, g.density.cwiseProduct(g.quad_weights));
    }
  }
  return table;
}

PredictiveMixture component_predictive(const GgmpModel& model, const Eigen::VectorXd& xstar) {
  if (xstar.size() != model.d)
    throw std::invalid_argument("component_predictive: query dimension mismatch");
  PredictiveMixture mix;
  mix.means.resize(model.k, model.p);
  mix.vars.resize(model.k, model.p);
  Eigen::MatrixXd xq = xstar.transpose();
  for (int c = 0; c < model.k; ++c)
    for (Eigen::Index j = 0; j < model.p; ++j) {
      Eigen::VectorXd m, v;
      posterior_predict(model.gps[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)], xq,
                        m, v);
      mix.means(c, j) = m[0];
      mix.vars(c, j) = v[0] + model.avg_within_var(c, j);
    }
  switch (model.weight_mode) {
    case WeightMode::Equal:
      mix.weights = Eigen::VectorXd::Constant(model.k, 1.0 / model.k);
      break;
    case WeightMode::Shared:
      mix.weights = model.shared_weights;
      break;
    case WeightMode::InputDependent:
      mix.weights = model.xdep.weights_at(xstar);
      break;
  }
  return mix;
}

double log_density(const PredictiveMixture& mix, const Eigen::VectorXd& y) {
  if (y.size() != mix.dim()) throw std::invalid_argument("log_density: dimension mismatch");
  const Eigen::Index k = mix.components();
  Eigen::VectorXd b(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    double lp = std::log(std::max(mix.weights[c], 1e-300));
    for (Eigen::Index j = 0; j < mix.dim(); ++j)
      lp += log_normal_pdf(y[j], mix.means(c, j), mix.vars(c, j));
    b[c] = lp;
  }
  double bmax = b.maxCoeff();
  return bmax + std::log((b.array() - bmax).exp().sum());
}

double log_density(const GgmpModel& model, const Eigen::VectorXd& xstar,
                   const Eigen::VectorXd& y) {
  return log_density(component_predictive(model, xstar), y);
}

Eigen::MatrixXd sample(const PredictiveMixture& mix, Eigen::Index count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd out(count, mix.dim());
  Eigen::VectorXd cdf(mix.components());
  double acc = 0;
  for (Eigen::Index c = 0; c < mix.components(); ++c) {
    acc += mix.weights[c];
    cdf[c] = acc;
  }
  for (Eigen::Index i = 0; i < count; ++i) {
    double u = unif(rng) * acc;
    Eigen::Index c = 0;
    while (c + 1 < mix.components() && u > cdf[c]) ++c;
    for (Eigen::Index j = 0; j < mix.dim(); ++j)
      out(i, j) = mix.means(c, j) + std::sqrt(mix.vars(c, j)) * normal(rng);
  }
  return out;
}

Eigen::MatrixXd sample(const GgmpModel& model, const Eigen::VectorXd& xstar,
                       Eigen::Index count, std::uint64_t seed) {
  return sample(component_predictive(model, xstar), count, seed);
}

double product_of_sums_likelihood(const Eigen::MatrixXd& means, const Eigen::MatrixXd& vars,
                                  const Eigen::MatrixXd& weights, const Eigen::VectorXd& y) {
  const Eigen::Index n = means.rows(), k = means.cols();
  double prod = 1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = 0;
    for (Eigen::Index c = 0; c < k; ++c)
      s += weights(i, c) * std::exp(log_normal_pdf(y[i], means(i, c), vars(i, c)));
    prod *= s;
  }
  return prod;
}

double brute_force_joint_likelihood(const Eigen::MatrixXd& means, const Eigen::MatrixXd& vars,
                                    const Eigen::MatrixXd& weights, const Eigen::VectorXd& y) {
  const Eigen::Index n = means.rows(), k = means.cols();
  double combos = std::pow(static_cast<double>(k), static_cast<double>(n));
  if (combos > 1e6)
    throw std::invalid_argument("brute_force_joint_likelihood: K^N budget exceeded");

  std::vector<Eigen::Index> assign(static_cast<std::size_t>(n), 0);
  double total = 0.0;
  for (;;) {
    double term = 1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index c = assign[static_cast<std::size_t>(i)];
      term *= weights(i, c) * std::exp(log_normal_pdf(y[i], means(i, c), vars(i, c)));
    }
    total += term;
    Eigen::Index pos = 0;
    while (pos < n) {
      if (++assign[static_cast<std::size_t>(pos)] < k) break;
      assign[static_cast<std::size_t>(pos)] = 0;
      ++pos;
    }
    if (pos == n) break;
  }
  return total;
}

// ---------------------------------------------------------------------------
// serialization

namespace {

using nlohmann::json;

json vec_to_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vec_from_json(const json& j) {
  auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json mat_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    rows.push_back(vec_to_json(m.row(i).transpose()));
  return rows;
}

Eigen::MatrixXd mat_from_json(const json& j, Eigen::Index cols_hint = -1) {
  if (j.empty()) return Eigen::MatrixXd(0, std::max<Eigen::Index>(cols_hint, 0));
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()),
                    static_cast<Eigen::Index>(j[0].size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    m.row(i) = vec_from_json(j[static_cast<std::size_t>(i)]).transpose();
  return m;
}

constexpr int kFormatVersion = 1;

}  // namespace

void save_model(const GgmpModel& model, const std::string& path) {
  json j;
  j["format_version"] = kFormatVersion;
  j["k"] = model.k;
  j["p"] = model.p;
  j["d"] = model.d;
  j["weight_mode"] = to_string(model.weight_mode);
  j["shared_weights"] = vec_to_json(model.shared_weights);
  if (model.weight_mode == WeightMode::InputDependent) {
    j["xdep"] = {{"beta", mat_to_json(model.xdep.beta)},
                 {"bias", vec_to_json(model.xdep.bias)},
                 {"x_mean", vec_to_json(model.xdep.x_mean)},
                 {"x_scale", vec_to_json(model.xdep.x_scale)}};
  }
  j["avg_within_var"] = mat_to_json(model.avg_within_var);
  j["train_objective"] = model.train_objective;
  j["input_ids"] = model.input_ids;

  j["alignment"] = {
      {"method",
       model.alignment.method == AlignMethod::SortByMean ? "sort" : "hungarian"},
      {"input_order", model.alignment.input_order},
      {"permutations", model.alignment.permutations}};

  json fits = json::array();
  for (const auto& f : model.fits) {
    json covs = json::array();
    for (const auto& s : f.covs) covs.push_back(mat_to_json(s));
    fits.push_back({{"input_id", f.input_id},
                    {"weights", vec_to_json(f.weights)},
                    {"means", mat_to_json(f.means)},
                    {"covs", covs},
                    {"resp_sum", vec_to_json(f.responsibilities_sum)},
                    {"loglik", f.loglik}});
  }
  j["fits"] = fits;

  json gps = json::array();
  for (const auto& row : model.gps) {
    json jrow = json::array();
    for (const auto& gp : row) {
      jrow.push_back({{"family", to_string(gp.params.family)},
                      {"log_lengthscales", vec_to_json(gp.params.log_lengthscales)},
                      {"log_signal_variance", gp.params.log_signal_variance},
                      {"X", mat_to_json(gp.data.X)},
                      {"targets", vec_to_json(gp.data.targets)},
                      {"noise_vars", vec_to_json(gp.data.noise_vars)},
                      {"prior_mean", gp.data.prior_mean}});
    }
    gps.push_back(jrow);
  }
  j["gps"] = gps;

  j["config"] = {{"k", model.config.k},
                 {"kernel", to_string(model.config.kernel)},
                 {"weight_mode", to_string(model.config.weight_mode)},
                 {"seed", model.config.seed},
                 {"em_restarts", model.config.em.restarts},
                 {"gp_starts", model.config.gp.starts}};

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << j.dump(1) << "\n";
}

GgmpModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("model file '" + path + "': invalid JSON: " + e.what());
  }
  if (!j.contains("format_version") || j["format_version"].get<int>() != kFormatVersion)
    throw std::runtime_error("model file '" + path + "': unsupported schema version");

  GgmpModel model;
  model.k = j["k"].get<int>();
  model.p = j["p"].get<Eigen::Index>();
  model.d = j["d"].get<Eigen::Index>();
  model.weight_mode = weight_mode_from_string(j["weight_mode"].get<std::string>());
  model.shared_weights = vec_from_json(j["shared_weights"]);
  if (model.weight_mode == WeightMode::InputDependent) {
    model.xdep.beta = mat_from_json(j["xdep"]["beta"], model.d);
    model.xdep.bias = vec_from_json(j["xdep"]["bias"]);
    model.xdep.x_mean = vec_from_json(j["xdep"]["x_mean"]);
    model.xdep.x_scale = vec_from_json(j["xdep"]["x_scale"]);
  }
  model.avg_within_var = mat_from_json(j["avg_within_var"]);
  model.train_objective = j["train_objective"].get<double>();
  model.input_ids = j["input_ids"].get<std::vector<std::string>>();

  model.alignment.method = j["alignment"]["method"].get<std::string>() == "sort"
                               ? AlignMethod::SortByMean
                               : AlignMethod::SequentialHungarian;
  model.alignment.input_order = j["alignment"]["input_order"].get<std::vector<int>>();
  model.alignment.permutations =
      j["alignment"]["permutations"].get<std::vector<std::vector<int>>>();

  for (const auto& jf : j["fits"]) {
    LocalMixtureFit f;
    f.input_id = jf["input_id"].get<std::string>();
    f.weights = vec_from_json(jf["weights"]);
    f.means = mat_from_json(jf["means"]);
    for (const auto& jc : jf["covs"]) f.covs.push_back(mat_from_json(jc));
    f.responsibilities_sum = vec_from_json(jf["resp_sum"]);
    f.loglik = jf["loglik"].get<double>();
    model.fits.push_back(std::move(f));
  }

  for (const auto& jrow : j["gps"]) {
    std::vector<TrainedGp> row;
    for (const auto& jgp : jrow) {
      KernelParams params;
      params.family = kernel_family_from_string(jgp["family"].get<std::string>());
      params.log_lengthscales = vec_from_json(jgp["log_lengthscales"]);
      params.log_signal_variance = jgp["log_signal_variance"].get<double>();
      GpTrainingData data;
      data.X = mat_from_json(jgp["X"], model.d);
      data.targets = vec_from_json(jgp["targets"]);
      data.noise_vars = vec_from_json(jgp["noise_vars"]);
      data.prior_mean = jgp["prior_mean"].get<double>();
      row.push_back(finalize_gp(params, data));
    }
    model.gps.push_back(std::move(row));
  }

  model.config.k = j["config"]["k"].get<int>();
  model.config.kernel = kernel_family_from_string(j["config"]["kernel"].get<std::string>());
  model.config.weight_mode =
      weight_mode_from_string(j["config"]["weight_mode"].get<std::string>());
  model.config.seed = j["config"]["seed"].get<std::uint64_t>();
  return model;
}

}  // namespace ggmp
