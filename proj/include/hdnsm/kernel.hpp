#pragma once

#include <optional>
#include <span>

namespace hdnsm {

enum class KernelKind { Epanechnikov, Uniform };

// Compactly supported symmetric density used for treatment localization.
// kappa2 is the second moment of the kernel.
struct KernelSpec {
  KernelKind kind = KernelKind::Epanechnikov;
  double support_halfwidth = 1.0;
  double kappa2 = 0.2;
};

KernelSpec make_kernel(KernelKind kind);

double kernel_eval(const KernelSpec& spec, double u);

// Tuning knobs shared by the first-stage solvers and the grid builders.
struct TuningConfig {
  std::optional<double> bandwidth_override;
  double bandwidth_scale = 1.0;
  double ell_n_constant = 1.1;
  int loading_iterations = 2;
  double lasso_tol = 1e-7;
  int lasso_max_sweeps = 10000;
  double density_floor = 0.05;
  // The leading constant basis column is exempt from the L1 penalty by
  // default; penalizing it makes the fit spread the level across many
  // correlated covariate columns instead.
  bool penalize_intercept = false;
  int u_grid_size = 50;
  int t_grid_size = 25;
  KernelKind kernel = KernelKind::Epanechnikov;
};

// Undersmoothed rule-of-thumb bandwidth
//   h = n^{-1/10} * C(tau) * 1.08 * sd(T) * n^{-1/5},
// with C(0.5) = 1.095 and C(tau) = 1.13 otherwise.
double rot_constant(double tau);
double rot_bandwidth_from_sd(double sd_t, double tau, long n);
double rot_bandwidth(std::span<const double> t_sample, double tau);

// Penalty levels: ell_n = c * sqrt(log(log(nh))) and
//   lambda = ell_n * sqrt(log(p v nh) * nh)   (local LS / MLE)
//   lambda = ell_n * sqrt(log(p v n)  * nh)   (conditional density)
struct PenaltyLevels {
  double ell_n = 0.0;
  double lambda_regression = 0.0;
  double lambda_density = 0.0;
};

PenaltyLevels penalty_lambda(long n, long p, double h, double ell_constant);

}  // namespace hdnsm
