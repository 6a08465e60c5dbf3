#include "hdnsm/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "hdnsm/rng.hpp"
#include "hdnsm/stats.hpp"

namespace hdnsm {

namespace {

constexpr double kPi = 3.14159265358979323846;

Eigen::MatrixXd copula_cholesky(long p, double decay) {
  Eigen::MatrixXd corr(p, p);
  for (long j = 0; j < p; ++j)
    for (long k = 0; k < p; ++k) corr(j, k) = std::pow(decay, -std::abs(j - k));
  Eigen::LLT<Eigen::MatrixXd> llt(corr);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("copula correlation matrix is not positive definite");
  return llt.matrixL();
}

double logit(double v) { return std::log(v / (1.0 - v)); }

}  // namespace

double dgp_index(const Eigen::Ref<const Eigen::RowVectorXd>& x_row) {
  double s = 0.0;
  double scale = 0.5;
  for (Eigen::Index j = 0; j < x_row.size(); ++j) {
    s += (2.0 * x_row[j] - 1.0) * scale;
    scale *= 0.5;
  }
  return s;
}

double dgp_treatment_warp(double t) { return 0.5 * (1.0 - std::cos(kPi * t)) - t; }

double dgp_solve_treatment(double v, double s) {
  if (!(v >= 0.0 && v <= 1.0))
    throw std::runtime_error("treatment equation bracket failure at V=" + std::to_string(v) +
                             ", S=" + std::to_string(s));
  auto g = [s](double t) { return t + 0.5 * dgp_treatment_warp(t) * s; };
  double lo = 0.0, hi = 1.0;
  // g(0)=0, g(1)=1, so the root is bracketed; bisect from the left bracket
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) < v)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double dgp_true_density(double s, double t) {
  return 1.0 + 0.5 * s * (0.5 * kPi * std::sin(kPi * t) - 1.0);
}

double dgp_true_cdf_regression(double s, double t, double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  const double c = -0.5 * s + (t - 0.5) * (t - 0.5);
  return logistic_cdf(logit(u) - c);
}

double dgp_true_outcome_regression(double s, double t) {
  const double c = -0.5 * s + (t - 0.5) * (t - 0.5);
  if (std::abs(c) < 1e-5) return 0.5 + c / 6.0;
  const double k = std::expm1(c);
  return (1.0 + k) * (k - c) / (k * k);
}

Dataset simulate_dgp(const DgpConfig& cfg) {
  if (cfg.n < 1 || cfg.p < 1) throw std::invalid_argument("simulate_dgp: n and p must be >= 1");
  if (!(cfg.copula_decay > 1.0))
    throw std::invalid_argument("simulate_dgp: copula decay must exceed 1");
  const long n = cfg.n, p = cfg.p;
  const Eigen::MatrixXd chol = copula_cholesky(p, cfg.copula_decay);

  Dataset data;
  data.y.resize(n);
  data.t.resize(n);
  data.x.resize(n, p);
  data.x_names.reserve(static_cast<std::size_t>(p));
  for (long j = 0; j < p; ++j) data.x_names.push_back("x" + std::to_string(j + 1));

  const CounterStream stream(cfg.seed, 0);
  const auto draws_per_obs = static_cast<std::uint64_t>(p + 2);
  Eigen::VectorXd z(p);
  for (long i = 0; i < n; ++i) {
    const auto base = static_cast<std::uint64_t>(i) * draws_per_obs;
    for (long j = 0; j < p; ++j) z[j] = normal_quantile(stream.uniform(base + j));
    const Eigen::VectorXd latent = chol.template triangularView<Eigen::Lower>() * z;
    for (long j = 0; j < p; ++j) data.x(i, j) = normal_cdf(latent[j]);
    const double s = dgp_index(data.x.row(i));
    const double v = stream.uniform(base + p);
    const double u_logistic = logit(stream.uniform(base + p + 1));
    const double t = dgp_solve_treatment(v, s);
    data.t[i] = t;
    data.y[i] = logistic_cdf(u_logistic - 0.5 * s + (t - 0.5) * (t - 0.5));
  }
  return data;
}

OracleTruth oracle_truth(const DgpConfig& cfg, std::span<const double> t_grid,
                         std::span<const double> tau_list, long mc_size, ExecMode mode) {
  if (mc_size < 10000) throw std::invalid_argument("oracle_truth: mc_size too small");
  const long p = cfg.p;
  const Eigen::MatrixXd chol = copula_cholesky(p, cfg.copula_decay);

  // Y(t) = Lambda(W + (t-1/2)^2) with W = U - S/2, so one W sample serves
  // every treatment level.
  std::vector<double> w(static_cast<std::size_t>(mc_size));
  constexpr std::int64_t kChunk = 4096;
  const std::int64_t nchunks = (mc_size + kChunk - 1) / kChunk;
  for_each_index(mode, nchunks, [&](std::int64_t c) {
    const CounterStream stream(cfg.seed ^ 0x6f7261636c65ULL, static_cast<std::uint64_t>(c));
    Eigen::VectorXd z(p);
    const auto draws_per_obs = static_cast<std::uint64_t>(p + 1);
    const std::int64_t lo = c * kChunk;
    const std::int64_t hi = std::min<std::int64_t>(lo + kChunk, mc_size);
    for (std::int64_t g = lo; g < hi; ++g) {
      const auto base = static_cast<std::uint64_t>(g - lo) * draws_per_obs;
      for (long j = 0; j < p; ++j) z[j] = normal_quantile(stream.uniform(base + j));
      const Eigen::VectorXd latent = chol.template triangularView<Eigen::Lower>() * z;
      double s = 0.0, scale = 0.5;
      for (long j = 0; j < p; ++j) {
        s += (2.0 * normal_cdf(latent[j]) - 1.0) * scale;
        scale *= 0.5;
      }
      const double u_logistic = logit(stream.uniform(base + p));
      w[static_cast<std::size_t>(g)] = u_logistic - 0.5 * s;
    }
  });
  std::vector<double> sorted_w = w;
  std::sort(sorted_w.begin(), sorted_w.end());
  const double m = static_cast<double>(mc_size);

  OracleTruth truth;
  truth.t_grid.assign(t_grid.begin(), t_grid.end());
  truth.tau_list.assign(tau_list.begin(), tau_list.end());
  truth.mc_size = mc_size;
  const auto nt = static_cast<Eigen::Index>(truth.t_grid.size());
  const auto ntau = static_cast<Eigen::Index>(truth.tau_list.size());
  truth.mu_true.resize(nt);
  truth.mu_se.resize(nt);
  truth.mu_slope_true.resize(nt);
  truth.mu_slope_se.resize(nt);
  truth.q_true.resize(ntau, nt);
  truth.q_se.resize(ntau, nt);
  truth.q_slope_true.resize(ntau, nt);
  truth.q_slope_se.resize(ntau, nt);

  for_each_index(mode, nt, [&](std::int64_t ti) {
    const double c = (truth.t_grid[static_cast<std::size_t>(ti)] - 0.5) *
                     (truth.t_grid[static_cast<std::size_t>(ti)] - 0.5);
    double sum = 0.0, sumsq = 0.0;
    for (double wi : w) {
      const double y = logistic_cdf(wi + c);
      sum += y;
      sumsq += y * y;
    }
    const double mean = sum / m;
    truth.mu_true[ti] = mean;
    truth.mu_se[ti] = std::sqrt(std::max(sumsq / m - mean * mean, 0.0) / m);
  });

  for (Eigen::Index ti = 0; ti < nt; ++ti) {
    const Eigen::Index lo = std::max<Eigen::Index>(ti - 1, 0);
    const Eigen::Index hi = std::min<Eigen::Index>(ti + 1, nt - 1);
    const double dt =
        truth.t_grid[static_cast<std::size_t>(hi)] - truth.t_grid[static_cast<std::size_t>(lo)];
    truth.mu_slope_true[ti] = (truth.mu_true[hi] - truth.mu_true[lo]) / dt;
    truth.mu_slope_se[ti] =
        std::sqrt(truth.mu_se[hi] * truth.mu_se[hi] + truth.mu_se[lo] * truth.mu_se[lo]) / dt;
  }

  auto sorted_quantile = [&](double level) {
    auto idx = static_cast<std::ptrdiff_t>(std::ceil(level * m)) - 1;
    idx = std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(mc_size) - 1);
    return sorted_w[static_cast<std::size_t>(idx)];
  };

  for (Eigen::Index a = 0; a < ntau; ++a) {
    const double tau = truth.tau_list[static_cast<std::size_t>(a)];
    const double w_tau = sorted_quantile(tau);
    const double delta = 0.005;
    const double density =
        2.0 * delta / (sorted_quantile(std::min(tau + delta, 1.0 - 1.0 / m)) -
                       sorted_quantile(std::max(tau - delta, 1.0 / m)));
    const double se_w = std::sqrt(tau * (1.0 - tau) / m) / density;
    for (Eigen::Index ti = 0; ti < nt; ++ti) {
      const double c = (truth.t_grid[static_cast<std::size_t>(ti)] - 0.5) *
                       (truth.t_grid[static_cast<std::size_t>(ti)] - 0.5);
      const double q = logistic_cdf(w_tau + c);
      truth.q_true(a, ti) = q;
      truth.q_se(a, ti) = q * (1.0 - q) * se_w;
    }
    // slope by finite differences of the truth; the quantile error w_tau is
    // shared across t, so its contribution to the slope scales with the
    // difference of the CDF derivatives
    for (Eigen::Index ti = 0; ti < nt; ++ti) {
      const Eigen::Index lo = std::max<Eigen::Index>(ti - 1, 0);
      const Eigen::Index hi = std::min<Eigen::Index>(ti + 1, nt - 1);
      const double dt = truth.t_grid[static_cast<std::size_t>(hi)] -
                        truth.t_grid[static_cast<std::size_t>(lo)];
      truth.q_slope_true(a, ti) = (truth.q_true(a, hi) - truth.q_true(a, lo)) / dt;
      const double lam_hi = truth.q_true(a, hi) * (1.0 - truth.q_true(a, hi));
      const double lam_lo = truth.q_true(a, lo) * (1.0 - truth.q_true(a, lo));
      truth.q_slope_se(a, ti) = std::abs(lam_hi - lam_lo) * se_w / dt;
    }
  }
  return truth;
}

McReport run_mc_study(const DgpConfig& dgp, const TuningConfig& tuning,
                      const McStudyConfig& study, ExecMode mode) {
  if (study.replications < 1) throw std::invalid_argument("run_mc_study: R must be >= 1");
  const double nan = std::numeric_limits<double>::quiet_NaN();

  // oracle grid: each evaluation point with +-0.01 neighbors so the slope
  // truth is a central difference at the point itself
  std::vector<double> oracle_grid;
  constexpr double kSlopeStep = 0.01;
  for (double te : study.t_eval) {
    oracle_grid.push_back(te - kSlopeStep);
    oracle_grid.push_back(te);
    oracle_grid.push_back(te + kSlopeStep);
  }
  std::sort(oracle_grid.begin(), oracle_grid.end());
  oracle_grid.erase(std::unique(oracle_grid.begin(), oracle_grid.end()), oracle_grid.end());
  const OracleTruth truth =
      oracle_truth(dgp, oracle_grid, study.tau_list, study.oracle_draws, mode);

  std::vector<std::size_t> eval_idx;
  for (double te : study.t_eval) {
    const auto it = std::find(truth.t_grid.begin(), truth.t_grid.end(), te);
    if (it == truth.t_grid.end()) throw std::logic_error("run_mc_study: eval point lost");
    eval_idx.push_back(static_cast<std::size_t>(it - truth.t_grid.begin()));
  }

  const int R = study.replications;
  const auto ne = study.t_eval.size();
  const auto ntau = study.tau_list.size();
  struct Cell {
    double est = std::numeric_limits<double>::quiet_NaN();
    double width = 0.0;
    bool covered = false;
    bool valid = false;
  };
  // layout: [r][family slot]; mu family first, then q/q_slope by tau
  const std::size_t mu_slots = ne, slope_slots = ne;
  const std::size_t q_slots = ntau * ne;
  std::vector<std::vector<Cell>> mu_cells(R), mu_slope_cells(R), q_cells(R), q_slope_cells(R);
  std::vector<char> failed(static_cast<std::size_t>(R), 0);

  const ExecMode inner = (R > 1 && mode == ExecMode::parallel) ? ExecMode::serial : mode;
  for_each_index(mode, R, [&](std::int64_t r) {
    auto& mu_row = mu_cells[static_cast<std::size_t>(r)];
    auto& mus_row = mu_slope_cells[static_cast<std::size_t>(r)];
    auto& q_row = q_cells[static_cast<std::size_t>(r)];
    auto& qs_row = q_slope_cells[static_cast<std::size_t>(r)];
    mu_row.resize(mu_slots);
    mus_row.resize(slope_slots);
    q_row.resize(q_slots);
    qs_row.resize(q_slots);
    try {
      DgpConfig rep_cfg = dgp;
      rep_cfg.seed = splitmix64(dgp.seed ^ splitmix64(0x7265700000ULL + static_cast<std::uint64_t>(r)));
      const Dataset data = simulate_dgp(rep_cfg);
      const RunGrids grids = default_grids(data, tuning, study.tau_list, study.t_eval);
      const EstimationContext ctx =
          prepare_context(data, grids, tuning, study.use_post_lasso, inner);
      const CurveEstimate point = estimate_curves_from(ctx, nullptr, inner);
      MultiplierSpec mspec;
      mspec.distribution = study.multiplier;
      mspec.B = study.bootstrap_reps;
      mspec.seed = splitmix64(dgp.seed ^ splitmix64(0x626f6f740000ULL + static_cast<std::uint64_t>(r)));
      const BootstrapDraws draws = bootstrap_curves(ctx, mspec, inner);
      const ConfidenceBand band = modified_percentile_ci(draws, point, study.ci_alpha);

      for (std::size_t e = 0; e < ne; ++e) {
        const double te = study.t_eval[e];
        const auto it = std::find(point.t_grid.begin(), point.t_grid.end(), te);
        if (it == point.t_grid.end()) continue;  // outside this replicate's span
        const auto ti = static_cast<Eigen::Index>(it - point.t_grid.begin());
        const std::size_t oi = eval_idx[e];
        auto fill = [](Cell& cell, double est, double lo, double hi, double tr) {
          cell.est = est;
          cell.width = hi - lo;
          cell.covered = (tr >= lo && tr <= hi);
          cell.valid = true;
        };
        fill(mu_row[e], point.mu[ti], band.mu_lo[ti], band.mu_hi[ti],
             truth.mu_true[static_cast<Eigen::Index>(oi)]);
        fill(mus_row[e], point.mu_slope[ti], band.mu_slope_lo[ti], band.mu_slope_hi[ti],
             truth.mu_slope_true[static_cast<Eigen::Index>(oi)]);
        for (std::size_t a = 0; a < ntau; ++a) {
          const auto ai = static_cast<Eigen::Index>(a);
          fill(q_row[a * ne + e], point.q(ai, ti), band.q_lo(ai, ti), band.q_hi(ai, ti),
               truth.q_true(ai, static_cast<Eigen::Index>(oi)));
          fill(qs_row[a * ne + e], point.q_slope(ai, ti), band.q_slope_lo(ai, ti),
               band.q_slope_hi(ai, ti), truth.q_slope_true(ai, static_cast<Eigen::Index>(oi)));
        }
      }
    } catch (const std::exception&) {
      failed[static_cast<std::size_t>(r)] = 1;
    }
  });

  McReport report;
  report.replications = R;
  report.bootstrap_reps = study.bootstrap_reps;
  report.dgp = dgp;
  report.study = study;
  for (char f : failed) report.failed_replications += f;

  auto aggregate = [&](const std::string& name, double tau, double t, double tr,
                       auto&& cell_of_rep) {
    double sum = 0.0, sumsq = 0.0, wsum = 0.0;
    int used = 0, covered = 0;
    for (int r = 0; r < R; ++r) {
      if (failed[static_cast<std::size_t>(r)]) continue;
      const Cell& cell = cell_of_rep(r);
      if (!cell.valid) continue;
      const double e = cell.est - tr;
      sum += e;
      sumsq += e * e;
      wsum += cell.width;
      covered += cell.covered ? 1 : 0;
      ++used;
    }
    McReportRow row;
    row.statistic = name;
    row.tau = tau;
    row.t = t;
    row.truth = tr;
    row.replicates_used = used;
    if (used > 0) {
      row.bias = sum / used;
      row.rmse = std::sqrt(sumsq / used);
      row.coverage = static_cast<double>(covered) / used;
      row.avg_ci_width = wsum / used;
    } else {
      row.bias = row.rmse = row.coverage = row.avg_ci_width = nan;
    }
    report.rows.push_back(row);
  };

  for (std::size_t e = 0; e < ne; ++e) {
    const auto oi = static_cast<Eigen::Index>(eval_idx[e]);
    aggregate("mu", nan, study.t_eval[e], truth.mu_true[oi],
              [&](int r) -> const Cell& { return mu_cells[static_cast<std::size_t>(r)][e]; });
    aggregate("mu_slope", nan, study.t_eval[e], truth.mu_slope_true[oi], [&](int r) -> const Cell& {
      return mu_slope_cells[static_cast<std::size_t>(r)][e];
    });
    for (std::size_t a = 0; a < ntau; ++a) {
      const auto ai = static_cast<Eigen::Index>(a);
      aggregate("q", study.tau_list[a], study.t_eval[e], truth.q_true(ai, oi),
                [&](int r) -> const Cell& {
                  return q_cells[static_cast<std::size_t>(r)][a * ne + e];
                });
      aggregate("q_slope", study.tau_list[a], study.t_eval[e], truth.q_slope_true(ai, oi),
                [&](int r) -> const Cell& {
                  return q_slope_cells[static_cast<std::size_t>(r)][a * ne + e];
                });
    }
  }
  return report;
}

}  // namespace hdnsm
