#include "hdnsm/quantile.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hdnsm {

MonotoneCurve rearrange(std::span<const double> u_grid, std::span<const double> values) {
  if (u_grid.size() != values.size())
    throw std::invalid_argument("rearrange: grid/value length mismatch");
  MonotoneCurve out;
  out.u_grid.assign(u_grid.begin(), u_grid.end());
  out.values.assign(values.begin(), values.end());
  std::stable_sort(out.values.begin(), out.values.end());
  return out;
}

double invert_cdf(const MonotoneCurve& curve, double tau, bool* saturated) {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("tau out of range");
  if (curve.values.empty()) throw std::invalid_argument("invert_cdf: empty curve");
  if (saturated) *saturated = false;
  for (std::size_t k = 0; k < curve.values.size(); ++k)
    if (curve.values[k] >= tau) return curve.u_grid[k];
  if (saturated) *saturated = true;
  return curve.u_grid.back();
}

LocalLinearFit local_linear_fit(std::span<const double> points_t, std::span<const double> points_y,
                                double t, double h, const KernelSpec& kernel,
                                const Eigen::VectorXd* multipliers) {
  if (points_t.size() != points_y.size())
    throw std::invalid_argument("local_linear_fit: length mismatch");
  const std::size_t n = points_t.size();
  // normal equations for y ~ b0 + b1 (T - t)
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, sy = 0.0, sxy = 0.0;
  double first_t = 0.0;
  bool distinct = false, any = false;
  for (std::size_t i = 0; i < n; ++i) {
    double w = kernel_eval(kernel, (points_t[i] - t) / h);
    if (multipliers) w *= (*multipliers)[static_cast<Eigen::Index>(i)];
    if (w == 0.0) continue;
    const double d = points_t[i] - t;
    if (!any) {
      first_t = points_t[i];
      any = true;
    } else if (points_t[i] != first_t) {
      distinct = true;
    }
    s0 += w;
    s1 += w * d;
    s2 += w * d * d;
    sy += w * points_y[i];
    sxy += w * d * points_y[i];
  }
  const double det = s0 * s2 - s1 * s1;
  if (!any || !distinct || det == 0.0 || s0 <= 0.0)
    throw std::runtime_error("degenerate local design");
  LocalLinearFit fit;
  fit.center_t = t;
  fit.intercept = (s2 * sy - s1 * sxy) / det;
  fit.slope = (s0 * sxy - s1 * sy) / det;
  fit.effective_weight_sum = s0;
  return fit;
}

double interp_linear(std::span<const double> grid, std::span<const double> values, double x) {
  if (grid.empty()) throw std::invalid_argument("interp_linear: empty grid");
  if (x <= grid.front()) return values.front();
  if (x >= grid.back()) return values.back();
  const auto it = std::upper_bound(grid.begin(), grid.end(), x);
  const std::size_t k = static_cast<std::size_t>(it - grid.begin());
  const double x0 = grid[k - 1], x1 = grid[k];
  const double w = (x - x0) / (x1 - x0);
  return (1.0 - w) * values[k - 1] + w * values[k];
}

}  // namespace hdnsm
