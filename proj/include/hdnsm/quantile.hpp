#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "hdnsm/kernel.hpp"

namespace hdnsm {

struct MonotoneCurve {
  std::vector<double> u_grid;
  std::vector<double> values;  // nondecreasing, within [0,1]
};

// Increasing rearrangement of a curve sampled on a uniform grid. With the
// affine grid-to-[0,1] map this is exactly a stable ascending sort of the
// values; the grid is unchanged.
MonotoneCurve rearrange(std::span<const double> u_grid, std::span<const double> values);

// inf{u in grid : curve(u) >= tau}; saturates at the last grid point when
// the curve never reaches tau.
double invert_cdf(const MonotoneCurve& curve, double tau, bool* saturated = nullptr);

struct LocalLinearFit {
  double center_t = 0.0;
  double intercept = 0.0;
  double slope = 0.0;
  double effective_weight_sum = 0.0;
};

// Weighted least squares of y on (1, T - t) with weights eta_i K((T_i-t)/h).
LocalLinearFit local_linear_fit(std::span<const double> points_t, std::span<const double> points_y,
                                double t, double h, const KernelSpec& kernel,
                                const Eigen::VectorXd* multipliers = nullptr);

// Piecewise-linear interpolation of (grid, values) at x; grid sorted ascending.
double interp_linear(std::span<const double> grid, std::span<const double> values, double x);

}  // namespace hdnsm
