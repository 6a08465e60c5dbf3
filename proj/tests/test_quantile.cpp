#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "hdnsm/quantile.hpp"
#include "rearrange_oracle.hpp"

using namespace hdnsm;

TEST_CASE("rearrange sorts values and keeps the grid") {
  std::vector<double> grid = {0.0, 0.5, 1.0};
  std::vector<double> vals = {0.3, 0.1, 0.2};
  const MonotoneCurve c = rearrange(grid, vals);
  CHECK(c.values == std::vector<double>{0.1, 0.2, 0.3});
  CHECK(c.u_grid == grid);

  std::vector<double> mono = {0.1, 0.2, 0.9};
  CHECK(rearrange(grid, mono).values == mono);
}

TEST_CASE("rearrange matches the integral-definition oracle") {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> grid(50), vals(50);
  for (int i = 0; i < 50; ++i) grid[i] = i / 49.0;
  for (int rep = 0; rep < 5; ++rep) {
    for (auto& v : vals) v = unif(rng);
    const MonotoneCurve c = rearrange(grid, vals);
    const std::vector<double> oracle = oracles::rearrange_by_quadrature(vals);
    for (int i = 0; i < 50; ++i) CHECK(c.values[i] == oracle[i]);
  }
}

TEST_CASE("rearrange properties") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> grid(30), vals(30);
  for (int i = 0; i < 30; ++i) grid[i] = i / 29.0;
  for (auto& v : vals) v = unif(rng);
  const MonotoneCurve c = rearrange(grid, vals);
  CHECK(std::is_sorted(c.values.begin(), c.values.end()));
  // multiset equality
  std::vector<double> sorted_in = vals;
  std::sort(sorted_in.begin(), sorted_in.end());
  CHECK(c.values == sorted_in);
  // idempotence
  CHECK(rearrange(grid, c.values).values == c.values);
}

TEST_CASE("invert_cdf inf rule") {
  MonotoneCurve c{{0.0, 1.0, 2.0}, {0.0, 0.5, 1.0}};
  CHECK(invert_cdf(c, 0.5) == 1.0);
  CHECK(invert_cdf(c, 0.51) == 2.0);
  MonotoneCurve all_above{{0.0, 1.0, 2.0}, {0.2, 0.5, 1.0}};
  CHECK(invert_cdf(all_above, 0.1) == 0.0);  // tau below all values: min grid point
  bool saturated = false;
  MonotoneCurve low{{0.0, 1.0}, {0.1, 0.2}};
  CHECK(invert_cdf(low, 0.9, &saturated) == 1.0);
  CHECK(saturated);
  CHECK_THROWS_WITH(invert_cdf(c, 1.5), doctest::Contains("tau out of range"));
}

TEST_CASE("invert_cdf is nondecreasing in tau and consistent with the curve") {
  MonotoneCurve c{{0.0, 0.25, 0.5, 0.75, 1.0}, {0.05, 0.2, 0.55, 0.7, 0.95}};
  double prev = -1.0;
  for (double tau : {0.1, 0.2, 0.3, 0.5, 0.6, 0.9}) {
    const double q = invert_cdf(c, tau);
    CHECK(q >= prev);
    prev = q;
    const auto it = std::find(c.u_grid.begin(), c.u_grid.end(), q);
    const auto idx = static_cast<std::size_t>(it - c.u_grid.begin());
    if (c.values[idx] >= tau && idx > 0) CHECK(c.values[idx - 1] < tau);
  }
}

TEST_CASE("local linear fit recovers an affine function exactly") {
  std::vector<double> t, y;
  for (int i = 0; i < 15; ++i) {
    t.push_back(0.1 + 0.05 * i);
    y.push_back(2.0 + 3.0 * (t.back() - 0.4));
  }
  const KernelSpec epan = make_kernel(KernelKind::Epanechnikov);
  const LocalLinearFit f = local_linear_fit(t, y, 0.4, 0.3, epan);
  CHECK(f.slope == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(f.intercept == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("local linear fit matches a direct normal-equations oracle") {
  std::vector<double> t(20), y(20);
  for (int i = 0; i < 20; ++i) {
    t[i] = -0.15 + 0.3 * i / 19.0;
    y[i] = std::sin(t[i]);
  }
  const KernelSpec unif = make_kernel(KernelKind::Uniform);
  const double tc = 0.0, h = 0.1;
  const LocalLinearFit f = local_linear_fit(t, y, tc, h, unif);
  // dense 2x2 solve on the same weighted problem
  double s0 = 0, s1 = 0, s2 = 0, r0 = 0, r1 = 0;
  for (int i = 0; i < 20; ++i) {
    const double w = kernel_eval(unif, (t[i] - tc) / h);
    const double d = t[i] - tc;
    s0 += w;
    s1 += w * d;
    s2 += w * d * d;
    r0 += w * y[i];
    r1 += w * d * y[i];
  }
  const double det = s0 * s2 - s1 * s1;
  const double slope = (s0 * r1 - s1 * r0) / det;
  const double intercept = (s2 * r0 - s1 * r1) / det;
  CHECK(f.slope == doctest::Approx(slope).epsilon(1e-12));
  CHECK(f.intercept == doctest::Approx(intercept).epsilon(1e-12));
}

TEST_CASE("local linear slope is invariant to constant shifts in y") {
  std::mt19937 rng(3);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> t(25), y(25), y_shift(25);
  for (int i = 0; i < 25; ++i) {
    t[i] = i / 24.0;
    y[i] = gauss(rng);
    y_shift[i] = y[i] + 7.5;
  }
  const KernelSpec epan = make_kernel(KernelKind::Epanechnikov);
  const LocalLinearFit a = local_linear_fit(t, y, 0.5, 0.2, epan);
  const LocalLinearFit b = local_linear_fit(t, y_shift, 0.5, 0.2, epan);
  CHECK(a.slope == doctest::Approx(b.slope).epsilon(1e-12));
}

TEST_CASE("degenerate local design throws") {
  std::vector<double> t = {0.5, 0.5, 0.5};
  std::vector<double> y = {1.0, 2.0, 3.0};
  const KernelSpec epan = make_kernel(KernelKind::Epanechnikov);
  CHECK_THROWS_WITH(local_linear_fit(t, y, 0.5, 0.1, epan),
                    doctest::Contains("degenerate local design"));
  std::vector<double> t1 = {0.5};
  std::vector<double> y1 = {1.0};
  CHECK_THROWS(local_linear_fit(t1, y1, 0.5, 0.1, epan));
}

TEST_CASE("interp_linear clamps and interpolates") {
  std::vector<double> g = {0.0, 1.0, 2.0};
  std::vector<double> v = {1.0, 3.0, 2.0};
  CHECK(interp_linear(g, v, 0.5) == doctest::Approx(2.0));
  CHECK(interp_linear(g, v, 1.25) == doctest::Approx(2.75));
  CHECK(interp_linear(g, v, -1.0) == 1.0);
  CHECK(interp_linear(g, v, 9.0) == 2.0);
}
