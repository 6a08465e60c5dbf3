#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hdnsm/bootstrap.hpp"
#include "hdnsm/dataset.hpp"
#include "hdnsm/dose_response.hpp"
#include "hdnsm/exec.hpp"

namespace hdnsm {

struct DgpConfig {
  long n = 250;
  long p = 100;
  double copula_decay = 5.0;  // latent correlation entry decay^{-|j-k|}
  std::uint64_t seed = 1;
};

// S(x) = sum_j (2 x_j - 1) / 2^j; always inside (-1, 1).
double dgp_index(const Eigen::Ref<const Eigen::RowVectorXd>& x_row);

// The treatment equation V = T + (1/2) w(T) S with w(T) = (1-cos(pi T))/2 - T.
double dgp_treatment_warp(double t);
double dgp_solve_treatment(double v, double s);

// True nuisance functions implied by the generating process, as functions of
// the index s = S(x):
//   f_{T|X}(t|x)   = 1 + (s/2)(pi sin(pi t)/2 - 1)
//   P(Y<=u|X,T=t)  = Lambda(logit(u) - c),  c = -s/2 + (t-1/2)^2
//   E(Y|X,T=t)     = e^c (e^c - 1 - c) / (e^c - 1)^2
double dgp_true_density(double s, double t);
double dgp_true_cdf_regression(double s, double t, double u);
double dgp_true_outcome_regression(double s, double t);

Dataset simulate_dgp(const DgpConfig& cfg);

struct OracleTruth {
  std::vector<double> t_grid;
  std::vector<double> tau_list;
  Eigen::VectorXd mu_true;        // per t
  Eigen::VectorXd mu_se;
  Eigen::VectorXd mu_slope_true;  // central differences over t_grid
  Eigen::VectorXd mu_slope_se;
  Eigen::MatrixXd q_true;         // tau x t
  Eigen::MatrixXd q_se;
  Eigen::MatrixXd q_slope_true;   // tau x t, central differences over t_grid
  Eigen::MatrixXd q_slope_se;
  long mc_size = 0;
};

OracleTruth oracle_truth(const DgpConfig& cfg, std::span<const double> t_grid,
                         std::span<const double> tau_list, long mc_size = 1000000,
                         ExecMode mode = ExecMode::parallel);

struct McStudyConfig {
  int replications = 100;
  int bootstrap_reps = 200;
  MultiplierKind multiplier = MultiplierKind::Exponential;
  std::vector<double> tau_list = {0.25, 0.5, 0.75};
  std::vector<double> t_eval = {0.3, 0.5, 0.7};
  double ci_alpha = 0.05;
  long oracle_draws = 1000000;
  bool use_post_lasso = true;
};

struct McReportRow {
  std::string statistic;  // "mu" | "q" | "mu_slope" | "q_slope"
  double tau = 0.0;       // NaN for the mu family
  double t = 0.0;
  double truth = 0.0;
  double bias = 0.0;
  double rmse = 0.0;
  double coverage = 0.0;
  double avg_ci_width = 0.0;
  int replicates_used = 0;
};

struct McReport {
  std::vector<McReportRow> rows;
  int replications = 0;
  int bootstrap_reps = 0;
  int failed_replications = 0;
  DgpConfig dgp;
  McStudyConfig study;
};

McReport run_mc_study(const DgpConfig& dgp, const TuningConfig& tuning,
                      const McStudyConfig& study, ExecMode mode = ExecMode::parallel);

}  // namespace hdnsm
