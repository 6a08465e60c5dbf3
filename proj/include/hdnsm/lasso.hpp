#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "hdnsm/dataset.hpp"
#include "hdnsm/kernel.hpp"

namespace hdnsm {

enum class FitKind { LS, Logistic, Density };

// Diagonal penalty weights, one entry per basis column.
struct PenaltyLoadings {
  Eigen::VectorXd diag;
  FitKind context = FitKind::LS;
  int iteration = 0;
  // Zero-norm columns inside the window get the smallest positive loading.
  bool adjusted_zero_entries = false;
};

struct LassoFit {
  Eigen::VectorXd coefficients;
  std::vector<Eigen::Index> support;
  double lambda = 0.0;
  PenaltyLoadings loadings;
  double objective_value = 0.0;
  int sweeps = 0;
  bool converged = true;
  // All responses identical within the positive-weight window (logistic only).
  bool degenerate = false;
};

// Minimizes (1/2n) sum_i w_i (y_i - b_i'g)^2 + (lambda/n) sum_j l_j |g_j|
// by cyclic coordinate descent with soft-thresholding.
LassoFit solve_weighted_lasso(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                              const Eigen::VectorXd& obs_weights, const PenaltyLoadings& loadings,
                              double lambda, const TuningConfig& config,
                              const Eigen::VectorXd* warm_start = nullptr);

// Minimizes (1/n) sum_i w_i M(y_i, b_i; th) + (lambda/n) sum_j l_j |th_j|
// with the logistic deviance M, by quadratic majorization (curvature 1/4)
// around the current iterate with an inner coordinate-descent solve.
LassoFit solve_weighted_logistic_lasso(const Eigen::MatrixXd& design,
                                       const Eigen::VectorXd& response,
                                       const Eigen::VectorXd& obs_weights,
                                       const PenaltyLoadings& loadings, double lambda,
                                       const TuningConfig& config,
                                       const Eigen::VectorXd* warm_start = nullptr);

// Iterated penalty loadings. Iteration 0 is the pilot formula
//   LS:        l_j = || Y b_j(X) K((T-t)/h) h^{-1/2} ||_{Pn,2}
//   Logistic:  l_j = || Y_u b_j(X) K((T-t)/h) h^{-1/2} ||_{Pn,2}
//   Density:   l_j = || h^{-1/2} K((T-t)/h) b_j(X) ||_{Pn,2}
// and each later iteration refits with the previous loadings and replaces
// the outcome by the corresponding residual.
PenaltyLoadings compute_loadings(FitKind kind, const Dataset& data, const Eigen::MatrixXd& basis,
                                 const KernelSpec& kernel, double t, std::optional<double> u,
                                 double h, int iterations, double lambda,
                                 const TuningConfig& config);

// Unpenalized kernel-weighted refit restricted to fit.support.
// LS/Density by normal equations (ridge jitter 1e-10 on a singular Gram),
// Logistic by Newton. Coordinates outside the support stay exactly zero.
LassoFit post_lasso_refit(const LassoFit& fit, FitKind kind, const Eigen::MatrixXd& design,
                          const Eigen::VectorXd& response, const Eigen::VectorXd& obs_weights,
                          const TuningConfig& config);

// First-stage fits at one treatment level.
struct NuisanceSet {
  double t = 0.0;
  double h = 0.0;
  LassoFit ls_fit, ls_post;                                 // nu_t
  LassoFit density_fit, density_post;                       // f_t
  std::vector<double> u_grid;
  std::vector<std::pair<LassoFit, LassoFit>> logistic_fits;  // phi_{t,u}: (lasso, post)
  Eigen::VectorXd density_values;  // floored f-hat(X_i), active flavor
  bool use_post_lasso = true;

  const LassoFit& active_ls() const { return use_post_lasso ? ls_post : ls_fit; }
  const LassoFit& active_density() const { return use_post_lasso ? density_post : density_fit; }
  const LassoFit& active_logistic(std::size_t k) const {
    return use_post_lasso ? logistic_fits[k].second : logistic_fits[k].first;
  }
};

NuisanceSet fit_nuisances_at(double t, const Dataset& data, const Eigen::MatrixXd& basis,
                             std::span<const double> u_grid, double h, const KernelSpec& kernel,
                             const PenaltyLevels& penalties, const TuningConfig& config,
                             bool use_post_lasso);

inline double logistic_cdf(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace hdnsm
