// ggmp command-line front end: synth / fit / predict / eval / ablate-weights.
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.

#include "ggmp/dataset.hpp"
#include "ggmp/ggmp.hpp"
#include "ggmp/metrics.hpp"
#include "ggmp/parallel.hpp"
#include "ggmp/synthgen.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace ggmp;

namespace {

constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

struct CliError : std::runtime_error {
  int code;
  CliError(int c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

std::string effective_config(const CLI::App& cmd) {
  std::ostringstream out;
  for (const CLI::Option* opt : cmd.get_options()) {
    const auto& lnames = opt->get_lnames();
    std::string name = lnames.empty() ? std::string() : lnames.front();
    if (name.empty() || name == "help" || name == "config") continue;
    std::string value = opt->count() ? opt->results()[0] : opt->get_default_str();
    if (opt->get_expected_min() == 0) value = opt->count() ? "true" : "false";
    out << name << " = " << value << "\n";
  }
  return out.str();
}

void write_sidecar_config(const fs::path& dir, const std::string& cfg) {
  std::ofstream out(dir / "run_config.txt");
  out << cfg;
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw CliError(2, "cannot parse number '" + tok + "'");
    }
  }
  return out;
}

GgmpConfig build_config(int k, const std::string& kernel, const std::string& weights,
                        const std::string& align, const std::string& align_cost,
                        int em_restarts, int gp_starts, std::uint64_t seed, int threads) {
  GgmpConfig cfg;
  cfg.k = k;
  cfg.kernel = kernel_family_from_string(kernel);
  cfg.weight_mode = weight_mode_from_string(weights);
  if (align == "hungarian")
    cfg.force_hungarian = true;
  else if (align != "auto" && align != "sort")
    throw CliError(2, "unknown alignment '" + align + "'");
  cfg.align_cost = align_cost == "hellinger" ? AlignCost::HellingerSquared : AlignCost::W2Squared;
  cfg.em.restarts = em_restarts;
  cfg.gp.starts = gp_starts;
  cfg.seed = seed;
  cfg.threads = threads;
  return cfg;
}

// ---------------------------------------------------------------------------

int run_synth(const fs::path& out_dir, int n, int t, std::uint64_t seed, int grid_points,
              bool truth, const std::string& cfg_echo) {
  if (!fs::is_directory(out_dir))
    throw CliError(kExitData, "output directory '" + out_dir.string() + "' does not exist");
  SyntheticBenchmark bench = generate_benchmark(n, t, seed, grid_points);
  save_samples_csv(bench.data, (out_dir / "samples.csv").string());
  if (truth) {
    DistributionValuedDataset truth_ds;
    truth_ds.inputs = bench.data.inputs;
    for (auto& [id, g] : bench.truth) truth_ds.gridded[id] = g;
    save_gridded_csv(truth_ds, (out_dir / "truth.csv").string());
  }
  write_sidecar_config(out_dir, cfg_echo);
  std::cout << "wrote " << (out_dir / "samples.csv").string() << " (" << n << " inputs x " << t
            << " samples)" << (truth ? " + truth.csv" : "") << "\n";
  return 0;
}

int run_fit(const std::string& data_path, const std::string& out_path, const GgmpConfig& cfg,
            double test_fraction, std::uint64_t split_seed, const std::string& cfg_echo) {
  DistributionValuedDataset ds;
  try {
    ds = load_samples_csv(data_path);
  } catch (const std::exception& e) {
    throw CliError(kExitData, e.what());
  }
  DistributionValuedDataset train = ds;
  if (test_fraction > 0)
    train = split_train_test(ds, test_fraction, split_seed).first;
  GgmpModel model = fit(train, cfg);
  save_model(model, out_path);
  std::cout << cfg_echo;
  std::cout << "train_objective = " << model.train_objective << "\n";
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int run_predict(const std::string& model_path, const std::string& x_str, int n_samples,
                std::uint64_t seed, const std::string& grid_str, const std::string& out_path) {
  GgmpModel model;
  try {
    model = load_model(model_path);
  } catch (const std::exception& e) {
    throw CliError(kExitData, e.what());
  }
  std::vector<double> xv = parse_double_list(x_str);
  if (static_cast<Eigen::Index>(xv.size()) != model.d)
    throw CliError(kExitData, "query has " + std::to_string(xv.size()) +
                                  " coordinates, model expects " + std::to_string(model.d));
  Eigen::VectorXd x = Eigen::Map<Eigen::VectorXd>(xv.data(), static_cast<Eigen::Index>(xv.size()));
  PredictiveMixture mix = component_predictive(model, x);

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw CliError(kExitData, "cannot write '" + out_path + "'");
    out = &file;
  }

  if (!grid_str.empty()) {
    // density slice for plotting: lo:hi:count
    std::vector<double> parts;
    std::stringstream ss(grid_str);
    std::string tok;
    try {
      while (std::getline(ss, tok, ':')) parts.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw CliError(2, "--grid expects lo:hi:count");
    }
    if (parts.size() != 3 || parts[2] < 2 || parts[1] <= parts[0])
      throw CliError(2, "--grid expects lo:hi:count");
    if (model.p != 1) throw CliError(kExitData, "--grid requires a univariate model");
    *out << "y,density\n";
    int count = static_cast<int>(parts[2]);
    for (int l = 0; l < count; ++l) {
      double y = parts[0] + (parts[1] - parts[0]) * l / (count - 1);
      *out << y << "," << std::exp(log_density(mix, Eigen::VectorXd::Constant(1, y))) << "\n";
    }
  } else if (n_samples > 0) {
    Eigen::MatrixXd draws = sample(mix, n_samples, seed);
    for (Eigen::Index j = 0; j < model.p; ++j) *out << (j ? "," : "") << "y" << (j + 1);
    *out << "\n";
    for (Eigen::Index i = 0; i < draws.rows(); ++i) {
      for (Eigen::Index j = 0; j < draws.cols(); ++j) *out << (j ? "," : "") << draws(i, j);
      *out << "\n";
    }
  } else {
    *out << "component,weight";
    for (Eigen::Index j = 0; j < model.p; ++j)
      *out << ",mean" << (j + 1) << ",var" << (j + 1);
    *out << "\n";
    for (int c = 0; c < model.k; ++c) {
      *out << c << "," << mix.weights[c];
      for (Eigen::Index j = 0; j < model.p; ++j)
        *out << "," << mix.means(c, j) << "," << mix.vars(c, j);
      *out << "\n";
    }
  }
  return 0;
}

int run_eval(const std::string& model_path, const std::string& data_path,
             const std::string& truth_path, const std::string& which,
             const std::string& out_path, std::uint64_t seed, int threads,
             const std::string& cfg_echo) {
  GgmpModel model;
  DistributionValuedDataset ds, truth;
  try {
    model = load_model(model_path);
    ds = load_samples_csv(data_path);
    if (!truth_path.empty()) truth = load_gridded_csv(truth_path);
  } catch (const CliError&) {
    throw;
  } catch (const std::exception& e) {
    throw CliError(kExitData, e.what());
  }
  bool want_div = which == "all" || which == "divergence";
  bool want_cal = which == "all" || which == "calibration";
  bool want_joint = which == "all" || which == "joint";
  if (!want_div && !want_cal && !want_joint)
    throw CliError(2, "unknown metric group '" + which + "'");
  if (want_div && truth_path.empty()) {
    if (which == "divergence")
      throw CliError(kExitData, "divergence metrics require --truth");
    want_div = false;  // "all" degrades to what is computable
  }

  const std::string label = model.k == 1 ? "GP_1" : "GGMP_" + std::to_string(model.k);

  std::vector<std::pair<std::string, std::pair<double, double>>> rows;
  auto mean_std = [](const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::make_pair(m, std::sqrt(s / static_cast<double>(v.size())));
  };

  if (want_div) {
    std::vector<double> bh(ds.inputs.size()), kl(ds.inputs.size()), w1(ds.inputs.size()),
        l1(ds.inputs.size());
    parallel_for(
        ds.inputs.size(),
        [&](std::size_t i) {
          const auto& ip = ds.inputs[i];
          auto it = truth.gridded.find(ip.id);
          if (it == truth.gridded.end())
            throw CliError(kExitData, "no truth density for input '" + ip.id + "'");
          const GriddedDensity& g = it->second;
          PredictiveMixture mix = component_predictive(model, ip.x);
          DensityPair pair;
          pair.grid = g.grid;
          pair.quad_weights = g.quad_weights;
          pair.p_ref = g.density;
          pair.q_pred.resize(g.grid.size());
          for (Eigen::Index l = 0; l < g.grid.size(); ++l)
            pair.q_pred[l] =
                std::exp(log_density(mix, Eigen::VectorXd::Constant(1, g.grid[l])));
          double mass = pair.q_pred.dot(pair.quad_weights);
          pair.q_pred /= mass;  // clip the far tails lost outside the grid
          DivergenceSet d = divergences(pair);
          bh[i] = d.bhattacharyya;
          kl[i] = d.symmetric_kl;
          w1[i] = d.wasserstein1;
          l1[i] = d.l1;
        },
        threads);
    rows.push_back({"bhattacharyya", mean_std(bh)});
    rows.push_back({"symmetric_kl", mean_std(kl)});
    rows.push_back({"wasserstein1", mean_std(w1)});
    rows.push_back({"l1", mean_std(l1)});
  }

  if (want_cal) {
    std::vector<InputPoint> inputs;
    std::vector<SampleBlock> blocks;
    for (const auto& ip : ds.inputs)
      if (ds.has_block(ip.id)) {
        inputs.push_back(ip);
        blocks.push_back(ds.block(ip.id));
      }
    if (inputs.empty()) throw CliError(kExitData, "calibration requires sample blocks");
    CalibrationRecord rec = calibration(model, inputs, blocks);
    CalibrationSummary s = summarize(rec);
    rows.push_back({"pit_mean", {s.pit_mean, 0.0}});
    rows.push_back({"pit_std", {s.pit_std, 0.0}});
    rows.push_back({"cov50", {s.cov50, 0.0}});
    rows.push_back({"cov90", {s.cov90, 0.0}});
    rows.push_back({"cov95", {s.cov95, 0.0}});
    rows.push_back({"log_score", mean_std(rec.log_scores)});
    rows.push_back({"crps", mean_std(rec.crps_values)});
  }

  if (want_joint) {
    std::vector<double> energy, sliced;
    for (const auto& ip : ds.inputs) {
      if (!ds.has_block(ip.id)) continue;
      const Eigen::MatrixXd& ref = ds.block(ip.id).samples;
      Eigen::MatrixXd pred = sample(model, ip.x, ref.rows(), seed + energy.size());
      JointDivergences jd = joint_divergences(ref, pred, 64, seed);
      energy.push_back(jd.energy);
      sliced.push_back(jd.sliced_w1);
    }
    if (energy.empty()) throw CliError(kExitData, "joint metrics require sample blocks");
    rows.push_back({"energy", mean_std(energy)});
    rows.push_back({"sliced_w1", mean_std(sliced)});
  }

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw CliError(kExitData, "cannot write '" + out_path + "'");
    out = &file;
  }
  std::istringstream cfg(cfg_echo);
  for (std::string line; std::getline(cfg, line);) *out << "# " << line << "\n";
  *out << "model,k,metric,mean,std\n";
  for (const auto& [name, ms] : rows)
    *out << label << "," << model.k << "," << name << "," << ms.first << "," << ms.second
         << "\n";
  return 0;
}

int run_ablate(const std::string& data_path, const std::string& k_list, bool xdep,
               const std::string& kernel, std::uint64_t seed, int threads,
               const std::string& out_path, const std::string& cfg_echo) {
  DistributionValuedDataset ds;
  try {
    ds = load_samples_csv(data_path);
  } catch (const std::exception& e) {
    throw CliError(kExitData, e.what());
  }
  std::vector<double> ks = parse_double_list(k_list);

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw CliError(kExitData, "cannot write '" + out_path + "'");
    out = &file;
  }
  std::istringstream cfg(cfg_echo);
  for (std::string line; std::getline(cfg, line);) *out << "# " << line << "\n";
  *out << "k,loglik_equal,loglik_shared,lift_shared_pct";
  if (xdep) *out << ",loglik_xdep,lift_xdep_pct";
  *out << "\n";

  for (double kd : ks) {
    int k = static_cast<int>(kd);
    GgmpConfig cfg2 = build_config(k, kernel, xdep ? "input-dependent" : "shared", "auto",
                                   "w2", 4, 5, seed, threads);
    GgmpModel model = fit(ds, cfg2);
    ComponentDensityTable table = training_density_table(model, ds);
    double l_equal =
        dist_loglik_shared(table, Eigen::VectorXd::Constant(k, 1.0 / k));
    double l_shared = dist_loglik_shared(table, model.shared_weights);
    auto lift = [&](double l) { return (l - l_equal) / std::abs(l_equal) * 100.0; };
    *out << k << "," << l_equal << "," << l_shared << "," << lift(l_shared);
    if (xdep) {
      Eigen::MatrixXd x_mat(ds.size(), ds.input_dim());
      for (Eigen::Index i = 0; i < ds.size(); ++i)
        x_mat.row(i) = ds.inputs[static_cast<std::size_t>(i)].x;
      std::vector<Eigen::VectorXd> per_input;
      for (Eigen::Index i = 0; i < ds.size(); ++i)
        per_input.push_back(model.xdep.weights_at(x_mat.row(i).transpose()));
      double l_xdep = dist_loglik(table, per_input);
      *out << "," << l_xdep << "," << lift(l_xdep);
    }
    *out << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GGMP: multimodal distribution-valued regression"};
  app.require_subcommand(1);

  // ---- synth
  auto* synth = app.add_subcommand("synth", "generate the synthetic benchmark");
  std::string s_out = ".";
  int s_n = 300, s_t = 2000, s_grid = 512;
  std::uint64_t s_seed = 0;
  bool s_truth = false;
  synth->add_option("--out", s_out, "output directory")->capture_default_str();
  synth->add_option("--n", s_n, "number of inputs")->capture_default_str();
  synth->add_option("--t", s_t, "samples per input")->capture_default_str();
  synth->add_option("--seed", s_seed, "RNG seed")->capture_default_str();
  synth->add_option("--grid-points", s_grid, "truth grid resolution")->capture_default_str();
  synth->add_flag("--truth", s_truth, "also write exact gridded densities");
  synth->set_config("--config");

  // ---- fit
  auto* fitc = app.add_subcommand("fit", "fit a model to a samples CSV");
  std::string f_data, f_out = "model.json", f_kernel = "se", f_weights = "shared",
              f_align = "auto", f_align_cost = "w2";
  int f_k = 3, f_em_restarts = 4, f_gp_starts = 5, f_threads = 0;
  std::uint64_t f_seed = 0, f_split_seed = 0;
  double f_test_fraction = 0.0;
  fitc->add_option("--data", f_data, "samples CSV")->required();
  fitc->add_option("--out", f_out, "model output path")->capture_default_str();
  fitc->add_option("--k", f_k, "mixture components")->capture_default_str();
  fitc->add_option("--kernel", f_kernel, "se|matern52")->capture_default_str();
  fitc->add_option("--weights", f_weights, "equal|shared|input-dependent")
      ->capture_default_str();
  fitc->add_option("--align", f_align, "auto|sort|hungarian")->capture_default_str();
  fitc->add_option("--align-cost", f_align_cost, "w2|hellinger")->capture_default_str();
  fitc->add_option("--em-restarts", f_em_restarts, "EM restarts")->capture_default_str();
  fitc->add_option("--gp-starts", f_gp_starts, "GP optimizer starts")->capture_default_str();
  fitc->add_option("--seed", f_seed, "RNG seed")->capture_default_str();
  fitc->add_option("--threads", f_threads, "worker cap (0: GGMP_THREADS or auto)")
      ->capture_default_str();
  fitc->add_option("--test-fraction", f_test_fraction, "held-out input fraction")
      ->capture_default_str();
  fitc->add_option("--split-seed", f_split_seed, "train/test split seed")
      ->capture_default_str();
  fitc->set_config("--config");

  // ---- predict
  auto* pred = app.add_subcommand("predict", "predictive mixture at a query input");
  std::string p_model, p_x, p_grid, p_out;
  int p_samples = 0;
  std::uint64_t p_seed = 0;
  pred->add_option("--model", p_model, "model JSON")->required();
  pred->add_option("--x", p_x, "query input, comma-separated")->required();
  pred->add_option("--samples", p_samples, "draw this many samples instead");
  pred->add_option("--seed", p_seed, "sampling seed")->capture_default_str();
  pred->add_option("--grid", p_grid, "emit a density slice lo:hi:count");
  pred->add_option("--out", p_out, "output CSV (default stdout)");
  pred->set_config("--config");

  // ---- eval
  auto* evalc = app.add_subcommand("eval", "score a model against held-out data");
  std::string e_model, e_data, e_truth, e_metrics = "all", e_out;
  std::uint64_t e_seed = 0;
  int e_threads = 0;
  evalc->add_option("--model", e_model, "model JSON")->required();
  evalc->add_option("--data", e_data, "held-out samples CSV")->required();
  evalc->add_option("--truth", e_truth, "gridded truth CSV (for divergences)");
  evalc->add_option("--metrics", e_metrics, "all|divergence|calibration|joint")
      ->capture_default_str();
  evalc->add_option("--seed", e_seed, "seed for sampling-based metrics")
      ->capture_default_str();
  evalc->add_option("--threads", e_threads, "worker cap")->capture_default_str();
  evalc->add_option("--out", e_out, "metrics CSV (default stdout)");
  evalc->set_config("--config");

  // ---- ablate-weights
  auto* abl = app.add_subcommand("ablate-weights", "weight-optimization ablation");
  std::string a_data, a_ks = "3,5,10,25", a_kernel = "se", a_out;
  bool a_xdep = false;
  std::uint64_t a_seed = 0;
  int a_threads = 0;
  abl->add_option("--data", a_data, "samples CSV")->required();
  abl->add_option("--k", a_ks, "comma-separated K values")->capture_default_str();
  abl->add_flag("--xdep", a_xdep, "include input-dependent weights");
  abl->add_option("--kernel", a_kernel, "se|matern52")->capture_default_str();
  abl->add_option("--seed", a_seed, "RNG seed")->capture_default_str();
  abl->add_option("--threads", a_threads, "worker cap")->capture_default_str();
  abl->add_option("--out", a_out, "ablation CSV (default stdout)");
  abl->set_config("--config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed())
      return run_synth(s_out, s_n, s_t, s_seed, s_grid, s_truth, effective_config(*synth));
    if (fitc->parsed()) {
      GgmpConfig cfg = build_config(f_k, f_kernel, f_weights, f_align, f_align_cost,
                                    f_em_restarts, f_gp_starts, f_seed, f_threads);
      return run_fit(f_data, f_out, cfg, f_test_fraction, f_split_seed,
                     effective_config(*fitc));
    }
    if (pred->parsed())
      return run_predict(p_model, p_x, p_samples, p_seed, p_grid, p_out);
    if (evalc->parsed())
      return run_eval(e_model, e_data, e_truth, e_metrics, e_out, e_seed, e_threads,
                      effective_config(*evalc));
    if (abl->parsed())
      return run_ablate(a_data, a_ks, a_xdep, a_kernel, a_seed, a_threads, a_out,
                        effective_config(*abl));
  } catch (const CliError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return 2;
}
