#include "ggmp/weights.hpp"

#include "ggmp/optim.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ggmp {

ComponentDensityTable::Entry ComponentDensityTable::make_entry(
    const Eigen::MatrixXd& log_comp, const Eigen::VectorXd& point_weights) {
  if (log_comp.rows() != point_weights.size())
    throw std::invalid_argument("ComponentDensityTable: row/weight count mismatch");
  if ((point_weights.array() < 0).any())
    throw std::invalid_argument("ComponentDensityTable: negative point weight");
  Entry e;
  e.offset = log_comp.rowwise().maxCoeff();
  e.scaled = (log_comp.colwise() - e.offset).array().exp();
  e.point_weights = point_weights;
  return e;
}

void ComponentDensityTable::add(const Eigen::MatrixXd& log_comp,
                                const Eigen::VectorXd& point_weights) {
  if (k == 0) k = static_cast<int>(log_comp.cols());
  if (log_comp.cols() != k)
    throw std::invalid_argument("ComponentDensityTable: component count mismatch");
  entries.push_back(make_entry(log_comp, point_weights));
}

namespace {

double entry_loglik(const ComponentDensityTable::Entry& e, const Eigen::VectorXd& w,
                    Eigen::VectorXd* grad) {
  Eigen::VectorXd s = e.scaled * w;
  Eigen::ArrayXd safe = s.array().max(1e-300);
  double f = (e.point_weights.array() * (e.offset.array() + safe.log())).sum();
  if (grad) {
    Eigen::VectorXd ratio = (e.point_weights.array() / safe).matrix();
    grad->noalias() += e.scaled.transpose() * ratio;
  }
  return f;
}

}  // namespace

double dist_loglik(const ComponentDensityTable& table,
                   const std::vector<Eigen::VectorXd>& weights) {
  if (weights.size() != table.entries.size())
    throw std::invalid_argument("dist_loglik: weight count mismatch");
  double f = 0.0;
  for (std::size_t n = 0; n < table.entries.size(); ++n)
    f += entry_loglik(table.entries[n], weights[n], nullptr);
  return f;
}

double dist_loglik_shared(const ComponentDensityTable& table, const Eigen::VectorXd& w,
                          Eigen::VectorXd* grad) {
  if (grad) grad->setZero(table.k);
  double f = 0.0;
  for (const auto& e : table.entries) f += entry_loglik(e, w, grad);
  return f;
}

Lemma1Decomposition lemma1_decomposition(const GriddedDensity& p, const Eigen::VectorXd& q) {
  if (q.size() != p.grid.size())
    throw std::invalid_argument("lemma1_decomposition: grid size mismatch");
  Lemma1Decomposition out;
  bool kl_infinite = false;
  for (Eigen::Index l = 0; l < p.grid.size(); ++l) {
    double pl = p.density[l], ql = q[l], a = p.quad_weights[l];
    if (pl <= 0) continue;
    out.entropy -= a * pl * std::log(pl);
    if (ql <= 0) {
      kl_infinite = true;
      continue;
    }
    out.loglik += a * pl * std::log(ql);
    out.kl += a * pl * std::log(pl / ql);
  }
  if (kl_infinite) {
    out.kl = std::numeric_limits<double>::infinity();
    out.loglik = -std::numeric_limits<double>::infinity();
  }
  return out;
}

Eigen::VectorXd optimize_shared_weights(const ComponentDensityTable& table,
                                        const SimplexOptConfig& config) {
  if (table.entries.empty()) throw std::invalid_argument("optimize_shared_weights: empty table");
  const int k = table.k;
  Eigen::VectorXd w = Eigen::VectorXd::Constant(k, 1.0 / k);
  Eigen::VectorXd grad(k);
  double f = dist_loglik_shared(table, w, &grad);
  double step = 1.0;
  for (int it = 0; it < config.max_iters; ++it) {
    // stationarity on the simplex: mirror gradient w .* (g - w'g)
    double avg = w.dot(grad);
    Eigen::VectorXd mirror = w.array() * (grad.array() - avg);
    if (mirror.lpNorm<Eigen::Infinity>() < config.tol) break;

    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      Eigen::ArrayXd logw_new = w.array().log() + step * (grad.array() - avg);
      logw_new -= logw_new.maxCoeff();
      Eigen::VectorXd w_new = logw_new.exp().matrix();
      w_new = w_new.cwiseMax(config.weight_floor);
      w_new /= w_new.sum();
      Eigen::VectorXd grad_new(k);
      double f_new = dist_loglik_shared(table, w_new, &grad_new);
      if (std::isfinite(f_new) && f_new >= f) {
        bool improved = f_new > f;
        w = w_new;
        f = f_new;
        grad = grad_new;
        accepted = true;
        if (improved) step *= 1.3;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }
  w = w.cwiseMax(config.weight_floor);
  return w / w.sum();
}

Eigen::VectorXd XdepWeights::weights_at(const Eigen::VectorXd& x) const {
  const int km1 = static_cast<int>(bias.size());
  Eigen::VectorXd z(km1 + 1);
  Eigen::VectorXd xs = ((x - x_mean).array() / x_scale.array()).matrix();
  z.head(km1) = beta * xs + bias;
  z[km1] = 0.0;
  z.array() -= z.maxCoeff();
  Eigen::VectorXd w = z.array().exp();
  return w / w.sum();
}

XdepWeights optimize_xdep_weights(const ComponentDensityTable& table,
                                  const Eigen::MatrixXd& inputs,
                                  const Eigen::VectorXd& shared_w) {
  const int k = table.k;
  const Eigen::Index n = inputs.rows(), d = inputs.cols();
  if (static_cast<std::size_t>(n) != table.entries.size())
    throw std::invalid_argument("optimize_xdep_weights: input/table size mismatch");
  if (shared_w.size() != k)
    throw std::invalid_argument("optimize_xdep_weights: shared weight size mismatch");

  XdepWeights model;
  model.x_mean = inputs.colwise().mean();
  model.x_scale.resize(d);
  for (Eigen::Index q = 0; q < d; ++q) {
    double sd = std::sqrt((inputs.col(q).array() - model.x_mean[q]).square().mean());
    model.x_scale[q] = sd > 0 ? sd : 1.0;
  }
  Eigen::MatrixXd xs = (inputs.rowwise() - model.x_mean.transpose());
  xs.array().rowwise() /= model.x_scale.transpose().array();

  const int km1 = k - 1;
  if (km1 == 0) {
    model.beta.resize(0, d);
    model.bias.resize(0);
    return model;
  }

  // theta = [vec(beta row-major), bias]; anchor class K has zero logits
  auto unpack = [&](const Eigen::VectorXd& theta, Eigen::MatrixXd& beta, Eigen::VectorXd& bias) {
    beta = Eigen::Map<const Eigen::MatrixXd>(theta.data(), km1, d);
    bias = theta.tail(km1);
  };

  Objective neg_obj = [&](const Eigen::VectorXd& theta, Eigen::VectorXd* grad) -> double {
    Eigen::MatrixXd beta;
    Eigen::VectorXd bias;
    unpack(theta, beta, bias);
    Eigen::MatrixXd gbeta = Eigen::MatrixXd::Zero(km1, d);
    Eigen::VectorXd gbias = Eigen::VectorXd::Zero(km1);
    double f = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::VectorXd z(k);
      z.head(km1) = beta * xs.row(i).transpose() + bias;
      z[km1] = 0.0;
      z.array() -= z.maxCoeff();
      Eigen::VectorXd w = z.array().exp();
      w /= w.sum();
      const auto& e = table.entries[static_cast<std::size_t>(i)];
      Eigen::VectorXd s = (e.scaled * w).cwiseMax(1e-300);
      f += (e.point_weights.array() * (e.offset.array() + s.array().log())).sum();
      if (grad) {
        // d/dz_k of sum_m a_m log q = w_k (sum_m a_m E_mk / s_m - sum_m a_m)
        Eigen::VectorXd ratio = (e.point_weights.array() / s.array()).matrix();
        Eigen::VectorXd gz =
            w.array() * ((e.scaled.transpose() * ratio).array() - e.point_weights.sum());
        gbeta.noalias() -= gz.head(km1) * xs.row(i);
        gbias -= gz.head(km1);
      }
    }
    if (!std::isfinite(f)) return std::numeric_limits<double>::infinity();
    if (grad) {
      grad->resize(km1 * d + km1);
      Eigen::Map<Eigen::MatrixXd>(grad->data(), km1, d) = gbeta;
      grad->tail(km1) = gbias;
    }
    return -f;
  };

  Eigen::VectorXd theta0 = Eigen::VectorXd::Zero(km1 * d + km1);
  const double anchor = std::log(std::max(shared_w[k - 1], 1e-300));
  for (int c = 0; c < km1; ++c)
    theta0[km1 * static_cast<int>(d) + c] = std::log(std::max(shared_w[c], 1e-300)) - anchor;

  BfgsConfig bc;
  bc.max_iters = 200;
  bc.grad_tol = 1e-7;
  BfgsResult r = bfgs_minimize(neg_obj, theta0, bc);
  unpack(r.x, model.beta, model.bias);
  return model;
}

}  // namespace ggmp
