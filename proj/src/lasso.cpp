#include "hdnsm/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace hdnsm {

namespace {

// log(1 + exp(v)) without overflow
double softplus(double v) {
  if (v > 35.0) return v;
  if (v < -35.0) return std::exp(v);
  return std::log1p(std::exp(v));
}

std::vector<Eigen::Index> active_rows(const Eigen::VectorXd& w) {
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < w.size(); ++i)
    if (w[i] > 0.0) rows.push_back(i);
  return rows;
}

std::vector<Eigen::Index> nonzero_support(const Eigen::VectorXd& coef) {
  std::vector<Eigen::Index> s;
  for (Eigen::Index j = 0; j < coef.size(); ++j)
    if (coef[j] != 0.0) s.push_back(j);
  return s;
}

double logistic_loss(const Eigen::VectorXd& eta, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& w, Eigen::Index n_full) {
  double loss = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i)
    loss += w[i] * (softplus(eta[i]) - y[i] * eta[i]);
  return loss / static_cast<double>(n_full);
}

}  // namespace

LassoFit solve_weighted_lasso(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                              const Eigen::VectorXd& obs_weights, const PenaltyLoadings& loadings,
                              double lambda, const TuningConfig& config,
                              const Eigen::VectorXd* warm_start) {
  const Eigen::Index n = design.rows();
  const Eigen::Index m = design.cols();
  if (response.size() != n || obs_weights.size() != n || loadings.diag.size() != m)
    throw std::invalid_argument("solve_weighted_lasso: inconsistent dimensions");

  const auto rows = active_rows(obs_weights);
  if (rows.empty()) throw std::runtime_error("empty local window");
  const Eigen::Index na = static_cast<Eigen::Index>(rows.size());

  Eigen::MatrixXd b(na, m);
  Eigen::VectorXd yv(na), wv(na);
  for (Eigen::Index k = 0; k < na; ++k) {
    b.row(k) = design.row(rows[k]);
    yv[k] = response[rows[k]];
    wv[k] = obs_weights[rows[k]];
  }
  const Eigen::MatrixXd wb = wv.asDiagonal() * b;

  const double dn = static_cast<double>(n);
  Eigen::VectorXd colsq(m);
  for (Eigen::Index j = 0; j < m; ++j) colsq[j] = wb.col(j).dot(b.col(j)) / dn;

  Eigen::VectorXd gamma = warm_start ? *warm_start : Eigen::VectorXd::Zero(m);
  for (Eigen::Index j = 0; j < m; ++j)
    if (colsq[j] <= 0.0) gamma[j] = 0.0;  // zero-variance column inside the window

  Eigen::VectorXd resid = yv - b * gamma;

  LassoFit fit;
  fit.lambda = lambda;
  fit.loadings = loadings;
  fit.converged = false;

  int sweeps = 0;
  while (sweeps < config.lasso_max_sweeps) {
    double max_delta = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (colsq[j] <= 0.0) continue;
      const double rho = wb.col(j).dot(resid) / dn + colsq[j] * gamma[j];
      const double thr = lambda * loadings.diag[j] / dn;
      double gj = 0.0;
      const double excess = std::abs(rho) - thr;
      if (excess > 0.0) gj = std::copysign(excess, rho) / colsq[j];
      const double d = gj - gamma[j];
      if (d != 0.0) {
        resid -= d * b.col(j);
        gamma[j] = gj;
        max_delta = std::max(max_delta, std::abs(d));
      }
    }
    ++sweeps;
    if (max_delta < config.lasso_tol) {
      fit.converged = true;
      break;
    }
  }

  fit.coefficients = gamma;
  fit.support = nonzero_support(gamma);
  fit.sweeps = sweeps;
  fit.objective_value = 0.5 * resid.dot(wv.asDiagonal() * resid) / dn +
                        lambda / dn * loadings.diag.dot(gamma.cwiseAbs());
  return fit;
}

LassoFit solve_weighted_logistic_lasso(const Eigen::MatrixXd& design,
                                       const Eigen::VectorXd& response,
                                       const Eigen::VectorXd& obs_weights,
                                       const PenaltyLoadings& loadings, double lambda,
                                       const TuningConfig& config,
                                       const Eigen::VectorXd* warm_start) {
  const Eigen::Index n = design.rows();
  const Eigen::Index m = design.cols();
  if (response.size() != n || obs_weights.size() != n || loadings.diag.size() != m)
    throw std::invalid_argument("solve_weighted_logistic_lasso: inconsistent dimensions");
  for (Eigen::Index i = 0; i < n; ++i)
    if (response[i] != 0.0 && response[i] != 1.0)
      throw std::invalid_argument("logistic response must be 0/1");

  const auto rows = active_rows(obs_weights);
  if (rows.empty()) throw std::runtime_error("empty local window");

  bool all_same = true;
  for (std::size_t k = 1; k < rows.size(); ++k)
    if (response[rows[k]] != response[rows[0]]) {
      all_same = false;
      break;
    }
  LassoFit fit;
  fit.lambda = lambda;
  fit.loadings = loadings;
  if (all_same) {
    // degenerate window: keep the zero fit, fitted probability Lambda(0) = 0.5
    fit.coefficients = Eigen::VectorXd::Zero(m);
    fit.degenerate = true;
    Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
    fit.objective_value = logistic_loss(eta, response, obs_weights, n);
    return fit;
  }

  const Eigen::VectorXd quarter_weights = obs_weights / 4.0;
  Eigen::VectorXd theta = warm_start ? *warm_start : Eigen::VectorXd::Zero(m);
  Eigen::VectorXd working(n);

  constexpr int kMaxMajorization = 1000;
  int total_sweeps = 0;
  bool converged = false;
  for (int iter = 0; iter < kMaxMajorization; ++iter) {
    const Eigen::VectorXd eta = design * theta;
    for (Eigen::Index i = 0; i < n; ++i)
      working[i] = eta[i] + 4.0 * (response[i] - logistic_cdf(eta[i]));
    LassoFit inner = solve_weighted_lasso(design, working, quarter_weights, loadings, lambda,
                                          config, &theta);
    total_sweeps += inner.sweeps;
    const double change = (inner.coefficients - theta).cwiseAbs().maxCoeff();
    theta = inner.coefficients;
    if (change < config.lasso_tol) {
      converged = true;
      break;
    }
  }

  fit.coefficients = theta;
  fit.support = nonzero_support(theta);
  fit.sweeps = total_sweeps;
  fit.converged = converged;
  fit.objective_value = logistic_loss(design * theta, response, obs_weights, n) +
                        lambda / static_cast<double>(n) * loadings.diag.dot(theta.cwiseAbs());
  return fit;
}

PenaltyLoadings compute_loadings(FitKind kind, const Dataset& data, const Eigen::MatrixXd& basis,
                                 const KernelSpec& kernel, double t, std::optional<double> u,
                                 double h, int iterations, double lambda,
                                 const TuningConfig& config) {
  if (iterations < 0) throw std::invalid_argument("loading iterations must be >= 0");
  if (kind == FitKind::Logistic && !u.has_value())
    throw std::invalid_argument("logistic loadings require a threshold u");
  const Eigen::Index n = data.n();
  const Eigen::Index m = basis.cols();
  const double dn = static_cast<double>(n);

  Eigen::VectorXd kw(n);
  for (Eigen::Index i = 0; i < n; ++i) kw[i] = kernel_eval(kernel, (data.t[i] - t) / h);
  if ((kw.array() > 0.0).count() == 0) throw std::runtime_error("empty local window");

  Eigen::VectorXd target(n);
  if (kind == FitKind::LS) {
    target = data.y;
  } else if (kind == FitKind::Logistic) {
    for (Eigen::Index i = 0; i < n; ++i) target[i] = data.y[i] <= *u ? 1.0 : 0.0;
  } else {
    target = kw / h;
  }

  // Turns per-observation residual factors s_i into loadings
  //   l_j^2 = sum_i s_i^2 b_ij^2.
  auto build = [&](const Eigen::VectorXd& s, int iteration) {
    Eigen::VectorXd l2 = Eigen::VectorXd::Zero(m);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (s[i] == 0.0) continue;
      l2 += (s[i] * s[i]) * basis.row(i).transpose().cwiseAbs2();
    }
    PenaltyLoadings out;
    out.diag = l2.cwiseSqrt();
    out.context = kind;
    out.iteration = iteration;
    const Eigen::Index first = config.penalize_intercept ? 0 : 1;
    double min_pos = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = first; j < m; ++j)
      if (out.diag[j] > 0.0) min_pos = std::min(min_pos, out.diag[j]);
    if (!std::isfinite(min_pos)) {
      // all residual factors vanish (e.g. the window contains no y <= u);
      // the downstream fit is degenerate, so unit loadings are a safe stand-in
      out.diag.setOnes();
      out.adjusted_zero_entries = true;
    } else {
      for (Eigen::Index j = first; j < m; ++j)
        if (out.diag[j] <= 0.0) {
          out.diag[j] = min_pos;
          out.adjusted_zero_entries = true;
        }
    }
    if (!config.penalize_intercept && m > 0) out.diag[0] = 0.0;
    return out;
  };

  // s_i for iteration k given the residual e_i:
  //   LS/Logistic: s_i = e_i kw_i h^{-1/2} / sqrt(n)
  //   Density:     s_i = e_i h^{1/2} / sqrt(n), e_i = h^{-1} kw_i - fhat_i
  Eigen::VectorXd resid = target;  // residual at a zero fit
  auto factors = [&](const Eigen::VectorXd& e) {
    Eigen::VectorXd s(n);
    if (kind == FitKind::Density) {
      s = e * std::sqrt(h / dn);
    } else {
      for (Eigen::Index i = 0; i < n; ++i) s[i] = e[i] * kw[i] / std::sqrt(h * dn);
    }
    return s;
  };

  PenaltyLoadings loadings = build(factors(resid), 0);
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(m);
  for (int k = 1; k <= iterations; ++k) {
    if (kind == FitKind::LS) {
      LassoFit f = solve_weighted_lasso(basis, data.y, kw, loadings, lambda, config, &coef);
      coef = f.coefficients;
      resid = data.y - basis * coef;
    } else if (kind == FitKind::Logistic) {
      LassoFit f = solve_weighted_logistic_lasso(basis, target, kw, loadings, lambda, config, &coef);
      coef = f.coefficients;
      const Eigen::VectorXd eta = basis * coef;
      for (Eigen::Index i = 0; i < n; ++i) resid[i] = target[i] - logistic_cdf(eta[i]);
    } else {
      const Eigen::VectorXd two = Eigen::VectorXd::Constant(n, 2.0);
      LassoFit f = solve_weighted_lasso(basis, target, two, loadings, lambda, config, &coef);
      coef = f.coefficients;
      resid = target - basis * coef;
    }
    loadings = build(factors(resid), k);
  }
  return loadings;
}

LassoFit post_lasso_refit(const LassoFit& fit, FitKind kind, const Eigen::MatrixXd& design,
                          const Eigen::VectorXd& response, const Eigen::VectorXd& obs_weights,
                          const TuningConfig& config) {
  const Eigen::Index n = design.rows();
  const Eigen::Index m = design.cols();
  const auto& support = fit.support;
  const Eigen::Index s = static_cast<Eigen::Index>(support.size());
  const double dn = static_cast<double>(n);

  LassoFit out;
  out.lambda = 0.0;
  out.loadings = fit.loadings;
  out.coefficients = Eigen::VectorXd::Zero(m);
  if (s == 0) {
    if (kind == FitKind::Logistic) {
      out.objective_value = logistic_loss(Eigen::VectorXd::Zero(n), response, obs_weights, n);
      out.degenerate = fit.degenerate;
    } else {
      out.objective_value = 0.5 * response.dot(obs_weights.asDiagonal() * response) / dn;
    }
    return out;
  }

  const auto rows = active_rows(obs_weights);
  if (rows.empty()) throw std::runtime_error("empty local window");
  const Eigen::Index na = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd b(na, s);
  Eigen::VectorXd yv(na), wv(na);
  for (Eigen::Index k = 0; k < na; ++k) {
    for (Eigen::Index jj = 0; jj < s; ++jj) b(k, jj) = design(rows[k], support[jj]);
    yv[k] = response[rows[k]];
    wv[k] = obs_weights[rows[k]];
  }

  Eigen::VectorXd beta(s);
  if (kind != FitKind::Logistic) {
    Eigen::MatrixXd gram = b.transpose() * wv.asDiagonal() * b;
    const Eigen::VectorXd rhs = b.transpose() * (wv.cwiseProduct(yv));
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) {
      gram.diagonal().array() += 1e-10;
      llt.compute(gram);
    }
    beta = llt.solve(rhs);
    for (Eigen::Index jj = 0; jj < s; ++jj) out.coefficients[support[jj]] = beta[jj];
    const Eigen::VectorXd resid = yv - b * beta;
    out.objective_value = 0.5 * resid.dot(wv.asDiagonal() * resid) / dn;
  } else {
    bool all_same = true;
    for (Eigen::Index k = 1; k < na; ++k)
      if (yv[k] != yv[0]) {
        all_same = false;
        break;
      }
    if (all_same) {
      out.degenerate = true;
      out.objective_value = logistic_loss(Eigen::VectorXd::Zero(n), response, obs_weights, n);
      return out;
    }
    beta.setZero();
    for (Eigen::Index jj = 0; jj < s; ++jj) beta[jj] = fit.coefficients[support[jj]];
    Eigen::VectorXd eta = b * beta;
    double obj = logistic_loss(eta, yv, wv, n);
    constexpr int kMaxNewton = 100;
    for (int iter = 0; iter < kMaxNewton; ++iter) {
      Eigen::VectorXd p(na), curv(na);
      for (Eigen::Index k = 0; k < na; ++k) {
        p[k] = logistic_cdf(eta[k]);
        curv[k] = wv[k] * std::max(p[k] * (1.0 - p[k]), 1e-10);
      }
      const Eigen::VectorXd grad = b.transpose() * (wv.cwiseProduct(p - yv)) / dn;
      if (grad.cwiseAbs().maxCoeff() < 1e-10) break;
      Eigen::MatrixXd hess = b.transpose() * curv.asDiagonal() * b / dn;
      Eigen::LLT<Eigen::MatrixXd> llt(hess);
      if (llt.info() != Eigen::Success) {
        hess.diagonal().array() += 1e-10;
        llt.compute(hess);
      }
      const Eigen::VectorXd step = llt.solve(grad);
      double scale = 1.0;
      for (int half = 0; half < 40; ++half) {
        const Eigen::VectorXd cand = beta - scale * step;
        const Eigen::VectorXd eta_c = b * cand;
        const double obj_c = logistic_loss(eta_c, yv, wv, n);
        if (obj_c <= obj + 1e-14) {
          beta = cand;
          eta = eta_c;
          obj = obj_c;
          break;
        }
        scale *= 0.5;
      }
      out.sweeps = iter + 1;
    }
    for (Eigen::Index jj = 0; jj < s; ++jj) out.coefficients[support[jj]] = beta[jj];
    out.objective_value = obj;
  }
  out.support = nonzero_support(out.coefficients);
  out.converged = true;
  return out;
}

NuisanceSet fit_nuisances_at(double t, const Dataset& data, const Eigen::MatrixXd& basis,
                             std::span<const double> u_grid, double h, const KernelSpec& kernel,
                             const PenaltyLevels& penalties, const TuningConfig& config,
                             bool use_post_lasso) {
  const Eigen::Index n = data.n();
  NuisanceSet ns;
  ns.t = t;
  ns.h = h;
  ns.u_grid.assign(u_grid.begin(), u_grid.end());
  ns.use_post_lasso = use_post_lasso;

  Eigen::VectorXd kw(n);
  for (Eigen::Index i = 0; i < n; ++i) kw[i] = kernel_eval(kernel, (data.t[i] - t) / h);
  if ((kw.array() > 0.0).count() == 0)
    throw std::runtime_error("empty kernel window at t=" + std::to_string(t));

  // penalized local LS for nu_t
  const PenaltyLoadings ls_load =
      compute_loadings(FitKind::LS, data, basis, kernel, t, std::nullopt, h,
                       config.loading_iterations, penalties.lambda_regression, config);
  ns.ls_fit = solve_weighted_lasso(basis, data.y, kw, ls_load, penalties.lambda_regression, config);
  ns.ls_post = post_lasso_refit(ns.ls_fit, FitKind::LS, basis, data.y, kw, config);

  // penalized conditional density for f_t
  const double lambda_dens = penalties.lambda_density / h;
  const PenaltyLoadings d_load = compute_loadings(FitKind::Density, data, basis, kernel, t,
                                                  std::nullopt, h, config.loading_iterations,
                                                  lambda_dens, config);
  const Eigen::VectorXd dens_target = kw / h;
  const Eigen::VectorXd two = Eigen::VectorXd::Constant(n, 2.0);
  ns.density_fit = solve_weighted_lasso(basis, dens_target, two, d_load, lambda_dens, config);
  ns.density_post = post_lasso_refit(ns.density_fit, FitKind::Density, basis, dens_target,
                                     Eigen::VectorXd::Ones(n), config);

  // penalized local MLE for phi_{t,u}, one fit per u-grid point
  ns.logistic_fits.reserve(ns.u_grid.size());
  Eigen::VectorXd warm = Eigen::VectorXd::Zero(basis.cols());
  Eigen::VectorXd yu(n);
  for (double u : ns.u_grid) {
    for (Eigen::Index i = 0; i < n; ++i) yu[i] = data.y[i] <= u ? 1.0 : 0.0;
    const PenaltyLoadings l_load =
        compute_loadings(FitKind::Logistic, data, basis, kernel, t, u, h,
                         config.loading_iterations, penalties.lambda_regression, config);
    LassoFit lf = solve_weighted_logistic_lasso(basis, yu, kw, l_load,
                                                penalties.lambda_regression, config, &warm);
    warm = lf.coefficients;
    LassoFit pf = post_lasso_refit(lf, FitKind::Logistic, basis, yu, kw, config);
    ns.logistic_fits.emplace_back(std::move(lf), std::move(pf));
  }

  // floored density predictions for the active flavor
  Eigen::VectorXd pred = basis * ns.active_density().coefficients;
  std::vector<double> pos;
  for (Eigen::Index i = 0; i < n; ++i)
    if (pred[i] > 0.0) pos.push_back(pred[i]);
  double median_pos = 0.0;
  if (!pos.empty()) {
    std::nth_element(pos.begin(), pos.begin() + pos.size() / 2, pos.end());
    median_pos = pos[pos.size() / 2];
    if (pos.size() % 2 == 0) {
      const double lower = *std::max_element(pos.begin(), pos.begin() + pos.size() / 2);
      median_pos = 0.5 * (median_pos + lower);
    }
  }
  const double floor = config.density_floor * std::max(median_pos, 1e-3);
  ns.density_values = pred.cwiseMax(floor);
  return ns;
}

}  // namespace hdnsm
