#include <doctest.h>

#include <cmath>
#include <vector>

#include "hdnsm/simulation.hpp"

using namespace hdnsm;

TEST_CASE("treatment equation solves exactly when the index is zero") {
  for (double v : {0.01, 0.3, 0.5, 0.77, 0.99})
    CHECK(dgp_solve_treatment(v, 0.0) == doctest::Approx(v).epsilon(1e-12));
}

TEST_CASE("treatment solution satisfies its defining equation") {
  for (double v : {0.05, 0.25, 0.5, 0.75, 0.95}) {
    for (double s : {-0.9, -0.3, 0.0, 0.4, 0.9}) {
      const double t = dgp_solve_treatment(v, s);
      CHECK(t >= 0.0);
      CHECK(t <= 1.0);
      const double resid = v - t - 0.5 * dgp_treatment_warp(t) * s;
      CHECK(std::abs(resid) <= 1e-10);
    }
  }
}

TEST_CASE("simulated data respects the DGP invariants") {
  DgpConfig cfg;
  cfg.n = 2000;
  cfg.p = 30;
  cfg.seed = 11;
  const Dataset data = simulate_dgp(cfg);
  REQUIRE(data.n() == 2000);
  REQUIRE(data.p() == 30);
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    CHECK(data.t[i] >= 0.0);
    CHECK(data.t[i] <= 1.0);
    CHECK(data.y[i] > 0.0);
    CHECK(data.y[i] < 1.0);
    const double s = dgp_index(data.x.row(i));
    CHECK(std::abs(s) < 1.0);
    for (Eigen::Index j = 0; j < data.p(); ++j) {
      CHECK(data.x(i, j) > 0.0);
      CHECK(data.x(i, j) < 1.0);
    }
  }
}

TEST_CASE("simulation is reproducible and seeds matter") {
  DgpConfig cfg;
  cfg.n = 100;
  cfg.p = 10;
  cfg.seed = 42;
  const Dataset a = simulate_dgp(cfg);
  const Dataset b = simulate_dgp(cfg);
  CHECK(a.y == b.y);
  CHECK(a.t == b.t);
  CHECK(a.x == b.x);
  cfg.seed = 43;
  const Dataset c = simulate_dgp(cfg);
  CHECK((a.y - c.y).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("index definition matches the geometric sum") {
  Eigen::RowVectorXd x(3);
  x << 1.0, 0.0, 0.5;
  // (2*1-1)/2 + (2*0-1)/4 + (2*0.5-1)/8 = 0.5 - 0.25 + 0 = 0.25
  CHECK(dgp_index(x) == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("closed-form nuisance truths") {
  const double s = 0.4, t = 0.3;
  const double c = -s / 2.0 + (t - 0.5) * (t - 0.5);
  CHECK(dgp_true_density(s, t) ==
        doctest::Approx(1.0 + 0.5 * s * (M_PI * std::sin(M_PI * t) / 2.0 - 1.0)).epsilon(1e-14));
  const double u = 0.35;
  CHECK(dgp_true_cdf_regression(s, t, u) ==
        doctest::Approx(1.0 / (1.0 + std::exp(-(std::log(u / (1.0 - u)) - c)))).epsilon(1e-12));
  // E[Lambda(U + c)] with logistic U: e^c (e^c - 1 - c)/(e^c - 1)^2
  const double k = std::expm1(c);
  CHECK(dgp_true_outcome_regression(s, t) ==
        doctest::Approx((1.0 + k) * (k - c) / (k * k)).epsilon(1e-12));
  // small-c continuity: limit is 1/2 + c/6
  CHECK(dgp_true_outcome_regression(0.0, 0.5) == doctest::Approx(0.5).epsilon(1e-10));
  const double tiny = dgp_true_outcome_regression(-2e-7, 0.5);  // c = 1e-7
  CHECK(tiny == doctest::Approx(0.5 + 1e-7 / 6.0).epsilon(1e-9));
}

TEST_CASE("outcome regression truth agrees with quadrature over the logistic density") {
  for (double c : {-0.4, -0.05, 0.1, 0.6}) {
    double acc = 0.0;
    const int m = 400000;
    for (int i = 0; i < m; ++i) {
      const double q = (i + 0.5) / m;
      const double u = std::log(q / (1.0 - q));  // logistic draw by inverse CDF
      acc += 1.0 / (1.0 + std::exp(-(u + c)));
    }
    acc /= m;
    const double s = -2.0 * c;  // choose t = 1/2 so c = -s/2
    CHECK(dgp_true_outcome_regression(s, 0.5) == doctest::Approx(acc).epsilon(1e-5));
  }
}

TEST_CASE("oracle truth is symmetric about t = 1/2 and nearly exact in the mean") {
  DgpConfig cfg;
  cfg.n = 250;
  cfg.p = 20;
  cfg.seed = 3;
  const std::vector<double> t_grid = {0.3, 0.5, 0.7};
  const std::vector<double> taus = {0.25, 0.5, 0.75};
  const OracleTruth truth = oracle_truth(cfg, t_grid, taus, 200000, ExecMode::serial);
  // (t - 1/2)^2 symmetry: values at 0.3 and 0.7 agree within MC error
  CHECK(std::abs(truth.mu_true[0] - truth.mu_true[2]) <
        3.0 * (truth.mu_se[0] + truth.mu_se[2]));
  for (int k = 0; k < 3; ++k)
    CHECK(std::abs(truth.q_true(k, 0) - truth.q_true(k, 2)) <
          3.0 * (truth.q_se(k, 0) + truth.q_se(k, 2)));
  // mu(0.5) < mu(0.7): the quadratic shift is increasing away from 1/2
  CHECK(truth.mu_true[1] < truth.mu_true[2]);
  // the median at t=0.5 is Lambda(median of W) which concentrates near 0.5
  CHECK(truth.q_true(1, 1) == doctest::Approx(0.5).epsilon(0.02));
  CHECK(truth.mu_se.allFinite());
  CHECK(truth.q_se.allFinite());
}

TEST_CASE("mc study smoke run produces a well-formed report") {
  DgpConfig dgp;
  dgp.n = 100;
  dgp.p = 20;
  dgp.seed = 9;
  TuningConfig tuning;
  tuning.t_grid_size = 7;
  tuning.u_grid_size = 12;
  McStudyConfig study;
  study.replications = 1;
  study.bootstrap_reps = 12;
  study.oracle_draws = 20000;
  study.tau_list = {0.5};
  study.t_eval = {0.5};
  const McReport report = run_mc_study(dgp, tuning, study, ExecMode::serial);
  CHECK(report.replications == 1);
  CHECK(!report.rows.empty());
  for (const auto& row : report.rows) {
    CHECK(row.coverage >= 0.0);
    CHECK(row.coverage <= 1.0);
    CHECK(row.rmse >= std::abs(row.bias) - 1e-12);
    CHECK(std::isfinite(row.avg_ci_width));
  }
}
