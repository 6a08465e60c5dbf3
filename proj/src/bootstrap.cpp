#include "hdnsm/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "hdnsm/rng.hpp"
#include "hdnsm/stats.hpp"

namespace hdnsm {

Eigen::VectorXd draw_multipliers(const MultiplierSpec& spec, Eigen::Index n, int b) {
  Eigen::VectorXd eta(n);
  if (spec.distribution == MultiplierKind::Ones) {
    eta.setOnes();
    return eta;
  }
  const CounterStream stream(spec.seed, static_cast<std::uint64_t>(b));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = stream.uniform(static_cast<std::uint64_t>(i));
    if (spec.distribution == MultiplierKind::Exponential)
      eta[i] = -std::log1p(-u);
    else
      eta[i] = 1.0 + normal_quantile(u);
  }
  return eta;
}

BootstrapDraws bootstrap_curves(const EstimationContext& ctx, const MultiplierSpec& spec,
                                ExecMode mode) {
  if (spec.B < 1) throw std::invalid_argument("bootstrap_curves: B must be >= 1");
  const auto nt = static_cast<Eigen::Index>(ctx.t_grid.size());
  const auto ntau = static_cast<Eigen::Index>(ctx.tau_list.size());
  const Eigen::Index n = ctx.treatment.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();

  BootstrapDraws draws;
  draws.b_requested = spec.B;
  draws.mu.setConstant(spec.B, nt, nan);
  draws.mu_slope.setConstant(spec.B, nt, nan);
  draws.q.assign(static_cast<std::size_t>(ntau), Eigen::MatrixXd::Constant(spec.B, nt, nan));
  draws.q_slope.assign(static_cast<std::size_t>(ntau),
                       Eigen::MatrixXd::Constant(spec.B, nt, nan));

  std::vector<char> failed(static_cast<std::size_t>(spec.B), 0);
  for_each_index(mode, spec.B, [&](std::int64_t b) {
    try {
      const Eigen::VectorXd eta = draw_multipliers(spec, n, static_cast<int>(b));
      const CurveEstimate rep = estimate_curves_from(ctx, &eta, ExecMode::serial);
      draws.mu.row(b) = rep.mu.transpose();
      draws.mu_slope.row(b) = rep.mu_slope.transpose();
      for (Eigen::Index a = 0; a < ntau; ++a) {
        draws.q[static_cast<std::size_t>(a)].row(b) = rep.q.row(a);
        draws.q_slope[static_cast<std::size_t>(a)].row(b) = rep.q_slope.row(a);
      }
    } catch (const std::exception&) {
      failed[static_cast<std::size_t>(b)] = 1;
    }
  });
  for (char f : failed) draws.failures += f;
  draws.b_effective = spec.B - draws.failures;
  return draws;
}

double empirical_quantile_inf(std::vector<double> values, double level) {
  if (values.empty()) throw std::invalid_argument("empirical_quantile_inf: empty sample");
  std::sort(values.begin(), values.end());
  const auto m = static_cast<double>(values.size());
  auto idx = static_cast<std::ptrdiff_t>(std::ceil(level * m)) - 1;
  idx = std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(values.size()) - 1);
  return values[static_cast<std::size_t>(idx)];
}

double modified_halfwidth(const std::vector<double>& draws, double point, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha out of range");
  std::vector<double> centered;
  centered.reserve(draws.size());
  for (double v : draws)
    if (std::isfinite(v)) centered.push_back(v - point);
  if (centered.size() < 10) throw std::runtime_error("insufficient replicates");
  const double q_lo = empirical_quantile_inf(centered, alpha / 2.0);
  const double q_hi = empirical_quantile_inf(centered, 1.0 - alpha / 2.0);
  return std::max(-q_lo, q_hi);
}

namespace {

std::vector<double> column(const Eigen::MatrixXd& m, Eigen::Index j) {
  std::vector<double> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)] = m(i, j);
  return out;
}

}  // namespace

ConfidenceBand modified_percentile_ci(const BootstrapDraws& draws, const CurveEstimate& point,
                                      double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha out of range");
  const auto nt = static_cast<Eigen::Index>(point.t_grid.size());
  const auto ntau = static_cast<Eigen::Index>(point.tau_list.size());
  ConfidenceBand band;
  band.level_alpha = alpha;
  band.b_effective = draws.b_effective;
  band.mu_lo.resize(nt);
  band.mu_hi.resize(nt);
  band.mu_slope_lo.resize(nt);
  band.mu_slope_hi.resize(nt);
  band.q_lo.resize(ntau, nt);
  band.q_hi.resize(ntau, nt);
  band.q_slope_lo.resize(ntau, nt);
  band.q_slope_hi.resize(ntau, nt);
  for (Eigen::Index ti = 0; ti < nt; ++ti) {
    double w = modified_halfwidth(column(draws.mu, ti), point.mu[ti], alpha);
    band.mu_lo[ti] = point.mu[ti] - w;
    band.mu_hi[ti] = point.mu[ti] + w;
    w = modified_halfwidth(column(draws.mu_slope, ti), point.mu_slope[ti], alpha);
    band.mu_slope_lo[ti] = point.mu_slope[ti] - w;
    band.mu_slope_hi[ti] = point.mu_slope[ti] + w;
    for (Eigen::Index a = 0; a < ntau; ++a) {
      w = modified_halfwidth(column(draws.q[static_cast<std::size_t>(a)], ti), point.q(a, ti),
                             alpha);
      band.q_lo(a, ti) = point.q(a, ti) - w;
      band.q_hi(a, ti) = point.q(a, ti) + w;
      w = modified_halfwidth(column(draws.q_slope[static_cast<std::size_t>(a)], ti),
                             point.q_slope(a, ti), alpha);
      band.q_slope_lo(a, ti) = point.q_slope(a, ti) - w;
      band.q_slope_hi(a, ti) = point.q_slope(a, ti) + w;
    }
  }
  return band;
}

}  // namespace hdnsm
