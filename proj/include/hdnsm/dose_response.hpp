#pragma once

#include <Eigen/Dense>
#include <vector>

#include "hdnsm/dataset.hpp"
#include "hdnsm/exec.hpp"
#include "hdnsm/kernel.hpp"
#include "hdnsm/lasso.hpp"
#include "hdnsm/quantile.hpp"

namespace hdnsm {

// Estimated dose-response objects on the (t, u, tau) grids.
struct CurveEstimate {
  std::vector<double> t_grid;
  std::vector<double> u_grid;
  std::vector<double> tau_list;
  Eigen::VectorXd mu;                // per t
  Eigen::MatrixXd alpha_raw;         // t x u, clipped to [0,1]
  Eigen::MatrixXd alpha_rearranged;  // t x u, nondecreasing along u
  Eigen::MatrixXd q;                 // tau x t
  Eigen::VectorXd mu_slope;          // per t
  Eigen::MatrixXd q_slope;           // tau x t
  bool used_post_lasso = true;
};

struct RunGrids {
  std::vector<double> t_grid;
  std::vector<double> u_grid;
  std::vector<double> tau_list;
};

// Default grids: t equally spaced on [Q_T(0.2), Q_T(0.8)] (optionally merged
// with extra points), u equally spaced on [Q_Y(0.02), Q_Y(0.98)].
RunGrids default_grids(const Dataset& data, const TuningConfig& config,
                       std::span<const double> tau_list,
                       std::span<const double> extra_t = {});

// Empirical quantile with the left-continuous inf rule.
double empirical_quantile(std::vector<double> values, double level);

struct DRMomentInputs {
  const NuisanceSet& nuisances;
  double h;
  KernelSpec kernel;
};

// Per-observation doubly-robust moment contributions
//   (outcome_i - pred_i) K_i / (density_i h) + pred_i.
Eigen::VectorXd dr_contributions(const Eigen::VectorXd& outcome, const Eigen::VectorXd& pred,
                                 const Eigen::VectorXd& density, const Eigen::VectorXd& kw,
                                 double h);

// Multiplier-normalized average; weights == nullptr means eta == 1.
double weighted_moment(const Eigen::VectorXd& contributions, const Eigen::VectorXd* weights);

double dr_mean(double t, const DRMomentInputs& inputs, const Dataset& data,
               const Eigen::VectorXd* weights = nullptr);
double dr_cdf(double t, double u, const DRMomentInputs& inputs, const Dataset& data,
              const Eigen::VectorXd* weights = nullptr);

// Stage-1 output plus precomputed per-observation moment contributions, so
// bootstrap replicates only reweight.
struct EstimationContext {
  KernelSpec kernel;
  double h = 0.0;
  PenaltyLevels penalties;
  std::vector<double> t_grid, u_grid, tau_list;
  bool use_post_lasso = true;
  std::vector<NuisanceSet> nuisances;     // per t
  Eigen::VectorXd treatment;              // T_i, for the stage-3 regressions
  Eigen::MatrixXd pi_mu;                  // n x |T|
  std::vector<Eigen::MatrixXd> pi_alpha;  // per t: n x |U|
};

EstimationContext prepare_context(const Dataset& data, const RunGrids& grids,
                                  const TuningConfig& config, bool use_post_lasso,
                                  ExecMode mode = ExecMode::parallel);

// Stages 2-3 given fixed first-stage fits.
CurveEstimate estimate_curves_from(const EstimationContext& ctx,
                                   const Eigen::VectorXd* weights = nullptr,
                                   ExecMode mode = ExecMode::parallel);

// Full three-stage pipeline.
CurveEstimate estimate_curves(const Dataset& data, const RunGrids& grids,
                              const TuningConfig& config, bool use_post_lasso = true,
                              const Eigen::VectorXd* weights = nullptr,
                              ExecMode mode = ExecMode::parallel);

// Stage 3: local-linear slopes of interpolated mu-hat and q-hat at each grid t.
void derivative_curves(CurveEstimate& curve, const Eigen::VectorXd& treatment, double h,
                       const KernelSpec& kernel, const Eigen::VectorXd* weights = nullptr,
                       ExecMode mode = ExecMode::serial);

}  // namespace hdnsm
