#include "hdnsm/kernel.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace hdnsm {

KernelSpec make_kernel(KernelKind kind) {
  KernelSpec spec;
  spec.kind = kind;
  spec.support_halfwidth = 1.0;
  spec.kappa2 = (kind == KernelKind::Epanechnikov) ? 1.0 / 5.0 : 1.0 / 3.0;
  return spec;
}

double kernel_eval(const KernelSpec& spec, double u) {
  if (std::abs(u) > spec.support_halfwidth) return 0.0;
  switch (spec.kind) {
    case KernelKind::Epanechnikov:
      return 0.75 * (1.0 - u * u);
    case KernelKind::Uniform:
      return 0.5;
  }
  return 0.0;
}

double rot_constant(double tau) { return tau == 0.5 ? 1.095 : 1.13; }

double rot_bandwidth_from_sd(double sd_t, double tau, long n) {
  if (sd_t <= 0.0) throw std::invalid_argument("constant treatment");
  const double nn = static_cast<double>(n);
  const double h_rot = rot_constant(tau) * 1.08 * sd_t * std::pow(nn, -0.2);
  return std::pow(nn, -0.1) * h_rot;
}

double rot_bandwidth(std::span<const double> t_sample, double tau) {
  const long n = static_cast<long>(t_sample.size());
  if (n < 2) throw std::invalid_argument("need at least two observations for a bandwidth");
  const double mean = std::accumulate(t_sample.begin(), t_sample.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : t_sample) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1));
  return rot_bandwidth_from_sd(sd, tau, n);
}

PenaltyLevels penalty_lambda(long n, long p, double h, double ell_constant) {
  const double nh = static_cast<double>(n) * h;
  if (!(nh > std::exp(1.0))) throw std::invalid_argument("bandwidth too small for penalty rule");
  if (p < 1) throw std::invalid_argument("p must be positive");
  PenaltyLevels out;
  out.ell_n = ell_constant * std::sqrt(std::log(std::log(nh)));
  const double pd = static_cast<double>(p);
  out.lambda_regression = out.ell_n * std::sqrt(std::log(std::max(pd, nh)) * nh);
  out.lambda_density =
      out.ell_n * std::sqrt(std::log(std::max(pd, static_cast<double>(n))) * nh);
  return out;
}

}  // namespace hdnsm
