#include "hdnsm/dose_response.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace hdnsm {

namespace {

std::vector<double> linspace(double lo, double hi, int count) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(count));
  if (count == 1) {
    out.push_back(0.5 * (lo + hi));
    return out;
  }
  for (int k = 0; k < count; ++k)
    out.push_back(lo + (hi - lo) * static_cast<double>(k) / (count - 1));
  return out;
}

Eigen::VectorXd kernel_weights(const Eigen::VectorXd& treatment, double t, double h,
                               const KernelSpec& kernel) {
  Eigen::VectorXd kw(treatment.size());
  for (Eigen::Index i = 0; i < treatment.size(); ++i)
    kw[i] = kernel_eval(kernel, (treatment[i] - t) / h);
  return kw;
}

}  // namespace

double empirical_quantile(std::vector<double> values, double level) {
  if (values.empty()) throw std::invalid_argument("empirical_quantile: empty sample");
  std::sort(values.begin(), values.end());
  const auto m = static_cast<double>(values.size());
  auto idx = static_cast<std::ptrdiff_t>(std::ceil(level * m)) - 1;
  idx = std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(values.size()) - 1);
  return values[static_cast<std::size_t>(idx)];
}

RunGrids default_grids(const Dataset& data, const TuningConfig& config,
                       std::span<const double> tau_list, std::span<const double> extra_t) {
  RunGrids grids;
  grids.tau_list.assign(tau_list.begin(), tau_list.end());
  std::sort(grids.tau_list.begin(), grids.tau_list.end());

  std::vector<double> tv(data.t.data(), data.t.data() + data.t.size());
  const double t_lo = empirical_quantile(tv, 0.2);
  const double t_hi = empirical_quantile(tv, 0.8);
  grids.t_grid = linspace(t_lo, t_hi, config.t_grid_size);
  for (double t : extra_t)
    if (t >= t_lo && t <= t_hi) grids.t_grid.push_back(t);
  std::sort(grids.t_grid.begin(), grids.t_grid.end());
  grids.t_grid.erase(std::unique(grids.t_grid.begin(), grids.t_grid.end()), grids.t_grid.end());

  std::vector<double> yv(data.y.data(), data.y.data() + data.y.size());
  const double u_lo = empirical_quantile(yv, 0.02);
  const double u_hi = empirical_quantile(yv, 0.98);
  grids.u_grid = linspace(u_lo, u_hi, config.u_grid_size);
  return grids;
}

Eigen::VectorXd dr_contributions(const Eigen::VectorXd& outcome, const Eigen::VectorXd& pred,
                                 const Eigen::VectorXd& density, const Eigen::VectorXd& kw,
                                 double h) {
  return ((outcome - pred).array() * kw.array() / (density.array() * h) + pred.array()).matrix();
}

double weighted_moment(const Eigen::VectorXd& contributions, const Eigen::VectorXd* weights) {
  if (!weights) return contributions.sum() / static_cast<double>(contributions.size());
  if (weights->size() != contributions.size())
    throw std::invalid_argument("weighted_moment: weight length mismatch");
  return weights->dot(contributions) / weights->sum();
}

double dr_mean(double t, const DRMomentInputs& inputs, const Dataset& data,
               const Eigen::VectorXd* weights) {
  if (inputs.nuisances.t != t)
    throw std::invalid_argument("dr_mean: nuisances fitted at a different t");
  const Eigen::MatrixXd basis = data.basis();
  const Eigen::VectorXd pred = basis * inputs.nuisances.active_ls().coefficients;
  const Eigen::VectorXd kw = kernel_weights(data.t, t, inputs.h, inputs.kernel);
  return weighted_moment(dr_contributions(data.y, pred, inputs.nuisances.density_values, kw,
                                          inputs.h),
                         weights);
}

double dr_cdf(double t, double u, const DRMomentInputs& inputs, const Dataset& data,
              const Eigen::VectorXd* weights) {
  if (inputs.nuisances.t != t)
    throw std::invalid_argument("dr_cdf: nuisances fitted at a different t");
  const auto& ug = inputs.nuisances.u_grid;
  const auto it = std::find(ug.begin(), ug.end(), u);
  if (it == ug.end()) throw std::invalid_argument("dr_cdf: u not on the fitted u-grid");
  const auto k = static_cast<std::size_t>(it - ug.begin());
  const Eigen::MatrixXd basis = data.basis();
  Eigen::VectorXd yu(data.n()), pred(data.n());
  const Eigen::VectorXd eta = basis * inputs.nuisances.active_logistic(k).coefficients;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    yu[i] = data.y[i] <= u ? 1.0 : 0.0;
    pred[i] = logistic_cdf(eta[i]);
  }
  const Eigen::VectorXd kw = kernel_weights(data.t, t, inputs.h, inputs.kernel);
  const double v = weighted_moment(
      dr_contributions(yu, pred, inputs.nuisances.density_values, kw, inputs.h), weights);
  return std::clamp(v, 0.0, 1.0);
}

EstimationContext prepare_context(const Dataset& data, const RunGrids& grids,
                                  const TuningConfig& config, bool use_post_lasso,
                                  ExecMode mode) {
  if (grids.t_grid.empty() || grids.u_grid.empty())
    throw std::invalid_argument("prepare_context: empty grid");
  EstimationContext ctx;
  ctx.kernel = make_kernel(config.kernel);
  ctx.use_post_lasso = use_post_lasso;
  ctx.t_grid = grids.t_grid;
  ctx.u_grid = grids.u_grid;
  ctx.tau_list = grids.tau_list;
  ctx.treatment = data.t;

  if (config.bandwidth_override) {
    ctx.h = *config.bandwidth_override;
  } else {
    const double med_tau = grids.tau_list.empty()
                               ? 0.5
                               : grids.tau_list[grids.tau_list.size() / 2];
    ctx.h = config.bandwidth_scale *
            rot_bandwidth(std::span<const double>(data.t.data(),
                                                  static_cast<std::size_t>(data.t.size())),
                          med_tau);
  }
  ctx.penalties = penalty_lambda(data.n(), data.p() + 1, ctx.h, config.ell_n_constant);

  const Eigen::MatrixXd basis = data.basis();
  const auto nt = static_cast<std::int64_t>(ctx.t_grid.size());
  const auto nu = static_cast<Eigen::Index>(ctx.u_grid.size());
  const Eigen::Index n = data.n();
  ctx.nuisances.resize(static_cast<std::size_t>(nt));
  ctx.pi_mu.resize(n, nt);
  ctx.pi_alpha.assign(static_cast<std::size_t>(nt), Eigen::MatrixXd(n, nu));

  std::vector<std::string> errors(static_cast<std::size_t>(nt));
  for_each_index(mode, nt, [&](std::int64_t ti) {
    try {
      const double t = ctx.t_grid[static_cast<std::size_t>(ti)];
      NuisanceSet ns = fit_nuisances_at(t, data, basis, ctx.u_grid, ctx.h, ctx.kernel,
                                        ctx.penalties, config, use_post_lasso);
      const Eigen::VectorXd kw = kernel_weights(data.t, t, ctx.h, ctx.kernel);
      const Eigen::VectorXd nu_pred = basis * ns.active_ls().coefficients;
      ctx.pi_mu.col(ti) = dr_contributions(data.y, nu_pred, ns.density_values, kw, ctx.h);
      Eigen::VectorXd yu(n), phi(n);
      for (Eigen::Index k = 0; k < nu; ++k) {
        const double u = ctx.u_grid[static_cast<std::size_t>(k)];
        const Eigen::VectorXd eta = basis * ns.active_logistic(static_cast<std::size_t>(k))
                                                .coefficients;
        for (Eigen::Index i = 0; i < n; ++i) {
          yu[i] = data.y[i] <= u ? 1.0 : 0.0;
          phi[i] = logistic_cdf(eta[i]);
        }
        ctx.pi_alpha[static_cast<std::size_t>(ti)].col(k) =
            dr_contributions(yu, phi, ns.density_values, kw, ctx.h);
      }
      ctx.nuisances[static_cast<std::size_t>(ti)] = std::move(ns);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(ti)] = e.what();
    }
  });
  for (const auto& err : errors)
    if (!err.empty()) throw std::runtime_error(err);
  return ctx;
}

CurveEstimate estimate_curves_from(const EstimationContext& ctx, const Eigen::VectorXd* weights,
                                   ExecMode mode) {
  CurveEstimate curve;
  curve.t_grid = ctx.t_grid;
  curve.u_grid = ctx.u_grid;
  curve.tau_list = ctx.tau_list;
  curve.used_post_lasso = ctx.use_post_lasso;

  const auto nt = static_cast<std::int64_t>(ctx.t_grid.size());
  const auto nu = static_cast<Eigen::Index>(ctx.u_grid.size());
  const auto ntau = static_cast<Eigen::Index>(ctx.tau_list.size());
  curve.mu.resize(nt);
  curve.alpha_raw.resize(nt, nu);
  curve.alpha_rearranged.resize(nt, nu);
  curve.q.resize(ntau, nt);

  for_each_index(mode, nt, [&](std::int64_t ti) {
    curve.mu[ti] = weighted_moment(ctx.pi_mu.col(ti), weights);
    std::vector<double> row(static_cast<std::size_t>(nu));
    for (Eigen::Index k = 0; k < nu; ++k) {
      const double v =
          weighted_moment(ctx.pi_alpha[static_cast<std::size_t>(ti)].col(k), weights);
      const double clipped = std::clamp(v, 0.0, 1.0);
      curve.alpha_raw(ti, k) = clipped;
      row[static_cast<std::size_t>(k)] = clipped;
    }
    MonotoneCurve mono = rearrange(ctx.u_grid, row);
    for (Eigen::Index k = 0; k < nu; ++k)
      curve.alpha_rearranged(ti, k) = mono.values[static_cast<std::size_t>(k)];
    for (Eigen::Index a = 0; a < ntau; ++a)
      curve.q(a, ti) = invert_cdf(mono, ctx.tau_list[static_cast<std::size_t>(a)]);
  });

  derivative_curves(curve, ctx.treatment, ctx.h, ctx.kernel, weights, mode);
  return curve;
}

CurveEstimate estimate_curves(const Dataset& data, const RunGrids& grids,
                              const TuningConfig& config, bool use_post_lasso,
                              const Eigen::VectorXd* weights, ExecMode mode) {
  const EstimationContext ctx = prepare_context(data, grids, config, use_post_lasso, mode);
  return estimate_curves_from(ctx, weights, mode);
}

void derivative_curves(CurveEstimate& curve, const Eigen::VectorXd& treatment, double h,
                       const KernelSpec& kernel, const Eigen::VectorXd* weights, ExecMode mode) {
  const auto nt = static_cast<std::int64_t>(curve.t_grid.size());
  const auto ntau = static_cast<Eigen::Index>(curve.tau_list.size());
  const Eigen::Index n = treatment.size();
  if (curve.mu.size() != static_cast<Eigen::Index>(nt))
    throw std::invalid_argument("derivative_curves: mu not populated");

  // observations with q-hat defined (T_i inside the t-grid span)
  std::vector<double> vt;
  std::vector<Eigen::Index> vi;
  for (Eigen::Index i = 0; i < n; ++i)
    if (treatment[i] >= curve.t_grid.front() && treatment[i] <= curve.t_grid.back()) {
      vt.push_back(treatment[i]);
      vi.push_back(i);
    }
  const auto nv = static_cast<std::size_t>(vt.size());

  std::vector<double> mu_grid(curve.mu.data(), curve.mu.data() + curve.mu.size());
  std::vector<double> mu_at(nv);
  for (std::size_t k = 0; k < nv; ++k) mu_at[k] = interp_linear(curve.t_grid, mu_grid, vt[k]);

  std::vector<std::vector<double>> q_at(static_cast<std::size_t>(ntau),
                                        std::vector<double>(nv));
  for (Eigen::Index a = 0; a < ntau; ++a) {
    std::vector<double> qg(static_cast<std::size_t>(nt));
    for (std::int64_t ti = 0; ti < nt; ++ti) qg[static_cast<std::size_t>(ti)] = curve.q(a, ti);
    for (std::size_t k = 0; k < nv; ++k)
      q_at[static_cast<std::size_t>(a)][k] = interp_linear(curve.t_grid, qg, vt[k]);
  }

  Eigen::VectorXd wsub;
  const Eigen::VectorXd* wptr = nullptr;
  if (weights) {
    wsub.resize(static_cast<Eigen::Index>(nv));
    for (std::size_t k = 0; k < nv; ++k) wsub[static_cast<Eigen::Index>(k)] = (*weights)[vi[k]];
    wptr = &wsub;
  }

  curve.mu_slope.resize(nt);
  curve.q_slope.resize(ntau, nt);
  for_each_index(mode, nt, [&](std::int64_t ti) {
    const double t = curve.t_grid[static_cast<std::size_t>(ti)];
    curve.mu_slope[ti] = local_linear_fit(vt, mu_at, t, h, kernel, wptr).slope;
    for (Eigen::Index a = 0; a < ntau; ++a)
      curve.q_slope(a, ti) =
          local_linear_fit(vt, q_at[static_cast<std::size_t>(a)], t, h, kernel, wptr).slope;
  });
}

}  // namespace hdnsm
