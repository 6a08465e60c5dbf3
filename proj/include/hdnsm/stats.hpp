#pragma once

namespace hdnsm {

double normal_cdf(double x);

// Inverse standard normal CDF (Acklam's rational approximation with one
// Halley refinement step); accurate to ~1e-15 on (0,1).
double normal_quantile(double p);

}  // namespace hdnsm
