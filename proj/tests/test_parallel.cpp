#include <doctest.h>

#include "hdnsm/bootstrap.hpp"
#include "hdnsm/simulation.hpp"

using namespace hdnsm;

// The parallel path must be an exact drop-in for the serial reference.
TEST_CASE("serial and parallel estimation agree bit-for-bit") {
  DgpConfig dgp;
  dgp.n = 150;
  dgp.p = 10;
  dgp.seed = 61;
  const Dataset data = simulate_dgp(dgp);
  TuningConfig cfg;
  cfg.t_grid_size = 9;
  cfg.u_grid_size = 15;
  const std::vector<double> taus = {0.25, 0.5, 0.75};
  const RunGrids grids = default_grids(data, cfg, taus);

  EstimationContext serial_ctx = prepare_context(data, grids, cfg, true, ExecMode::serial);
  EstimationContext parallel_ctx = prepare_context(data, grids, cfg, true, ExecMode::parallel);
  CHECK(serial_ctx.pi_mu == parallel_ctx.pi_mu);
  for (std::size_t k = 0; k < serial_ctx.pi_alpha.size(); ++k)
    CHECK(serial_ctx.pi_alpha[k] == parallel_ctx.pi_alpha[k]);

  const CurveEstimate a = estimate_curves_from(serial_ctx, nullptr, ExecMode::serial);
  const CurveEstimate b = estimate_curves_from(parallel_ctx, nullptr, ExecMode::parallel);
  CHECK(a.mu == b.mu);
  CHECK(a.q == b.q);
  CHECK(a.mu_slope == b.mu_slope);
  CHECK(a.q_slope == b.q_slope);
  CHECK(a.alpha_rearranged == b.alpha_rearranged);
}

TEST_CASE("serial and parallel bootstrap agree bit-for-bit") {
  DgpConfig dgp;
  dgp.n = 120;
  dgp.p = 8;
  dgp.seed = 62;
  const Dataset data = simulate_dgp(dgp);
  TuningConfig cfg;
  cfg.t_grid_size = 7;
  cfg.u_grid_size = 12;
  const RunGrids grids = default_grids(data, cfg, std::vector<double>{0.5});
  EstimationContext ctx = prepare_context(data, grids, cfg, true, ExecMode::serial);
  MultiplierSpec spec;
  spec.B = 16;
  spec.seed = 9;
  const BootstrapDraws s = bootstrap_curves(ctx, spec, ExecMode::serial);
  const BootstrapDraws p = bootstrap_curves(ctx, spec, ExecMode::parallel);
  CHECK(s.mu == p.mu);
  CHECK(s.mu_slope == p.mu_slope);
  CHECK(s.q[0] == p.q[0]);
  CHECK(s.q_slope[0] == p.q_slope[0]);
}

TEST_CASE("serial and parallel oracle truth agree") {
  DgpConfig cfg;
  cfg.n = 100;
  cfg.p = 10;
  cfg.seed = 5;
  const std::vector<double> t_grid = {0.4, 0.6};
  const std::vector<double> taus = {0.5};
  const OracleTruth a = oracle_truth(cfg, t_grid, taus, 50000, ExecMode::serial);
  const OracleTruth b = oracle_truth(cfg, t_grid, taus, 50000, ExecMode::parallel);
  CHECK(a.mu_true == b.mu_true);
  CHECK(a.q_true == b.q_true);
}
