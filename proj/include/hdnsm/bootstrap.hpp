#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "hdnsm/dose_response.hpp"
#include "hdnsm/exec.hpp"

namespace hdnsm {

// Ones is a test hook: every replicate reproduces the point estimate.
enum class MultiplierKind { Exponential, Normal, Ones };

struct MultiplierSpec {
  MultiplierKind distribution = MultiplierKind::Exponential;
  int B = 200;
  std::uint64_t seed = 0;
};

// i.i.d. unit-mean multipliers; deterministic given (seed, b) via a
// counter-based stream split, independent of thread scheduling.
Eigen::VectorXd draw_multipliers(const MultiplierSpec& spec, Eigen::Index n, int b);

// Replicate statistic arrays; failed replicates hold NaN.
struct BootstrapDraws {
  Eigen::MatrixXd mu;                    // B x |T|
  Eigen::MatrixXd mu_slope;              // B x |T|
  std::vector<Eigen::MatrixXd> q;        // per tau: B x |T|
  std::vector<Eigen::MatrixXd> q_slope;  // per tau: B x |T|
  int b_requested = 0;
  int b_effective = 0;
  int failures = 0;
};

BootstrapDraws bootstrap_curves(const EstimationContext& ctx, const MultiplierSpec& spec,
                                ExecMode mode = ExecMode::parallel);

struct ConfidenceBand {
  double level_alpha = 0.05;
  Eigen::VectorXd mu_lo, mu_hi;
  Eigen::VectorXd mu_slope_lo, mu_slope_hi;
  Eigen::MatrixXd q_lo, q_hi;              // tau x t
  Eigen::MatrixXd q_slope_lo, q_slope_hi;  // tau x t
  int b_effective = 0;
};

// Modified percentile interval: center draws at the point estimate, take
// Q* = max(-Q(alpha/2), Q(1-alpha/2)) and return point +- Q*.
ConfidenceBand modified_percentile_ci(const BootstrapDraws& draws, const CurveEstimate& point,
                                      double alpha);

// Left-continuous empirical quantile (inf rule) of an unsorted sample.
double empirical_quantile_inf(std::vector<double> values, double level);

// Q* half-width from draws of one statistic; NaNs are dropped, fewer than
// 10 effective replicates is an error.
double modified_halfwidth(const std::vector<double>& draws, double point, double alpha);

}  // namespace hdnsm
