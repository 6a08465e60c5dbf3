#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "hdnsm/lasso.hpp"

// Independent reference solvers used by both the unit and acceptance suites.
namespace oracles {

inline double lasso_objective(const Eigen::MatrixXd& b, const Eigen::VectorXd& y,
                              const Eigen::VectorXd& w, const Eigen::VectorXd& l, double lambda,
                              const Eigen::VectorXd& g) {
  const double n = static_cast<double>(b.rows());
  const Eigen::VectorXd r = y - b * g;
  return 0.5 * r.dot(w.asDiagonal() * r) / n + lambda / n * l.dot(g.cwiseAbs());
}

// Exhaustive search over sign patterns: on each orthant the penalized problem
// is a linear system; keep KKT-feasible candidates and return the best.
inline Eigen::VectorXd lasso_by_sign_enumeration(const Eigen::MatrixXd& b,
                                                 const Eigen::VectorXd& y,
                                                 const Eigen::VectorXd& w,
                                                 const Eigen::VectorXd& l, double lambda) {
  const Eigen::Index n = b.rows(), p = b.cols();
  const double dn = static_cast<double>(n);
  long total = 1;
  for (Eigen::Index j = 0; j < p; ++j) total *= 3;

  Eigen::VectorXd best = Eigen::VectorXd::Zero(p);
  double best_obj = std::numeric_limits<double>::infinity();
  std::vector<int> sign(p);
  for (long code = 0; code < total; ++code) {
    long c = code;
    std::vector<Eigen::Index> active;
    for (Eigen::Index j = 0; j < p; ++j) {
      sign[j] = static_cast<int>(c % 3) - 1;
      c /= 3;
      if (sign[j] != 0) active.push_back(j);
    }
    const Eigen::Index a = static_cast<Eigen::Index>(active.size());
    Eigen::VectorXd g = Eigen::VectorXd::Zero(p);
    if (a > 0) {
      Eigen::MatrixXd ba(n, a);
      Eigen::VectorXd la(a), sa(a);
      for (Eigen::Index k = 0; k < a; ++k) {
        ba.col(k) = b.col(active[k]);
        la[k] = l[active[k]];
        sa[k] = sign[active[k]];
      }
      const Eigen::MatrixXd gram = ba.transpose() * w.asDiagonal() * ba / dn;
      const Eigen::VectorXd rhs =
          ba.transpose() * (w.cwiseProduct(y)) / dn - lambda / dn * la.cwiseProduct(sa);
      const Eigen::VectorXd ga = gram.fullPivLu().solve(rhs);
      bool sign_ok = true;
      for (Eigen::Index k = 0; k < a; ++k)
        if (ga[k] * sa[k] < 0.0) sign_ok = false;  // allow zeros on the boundary
      if (!sign_ok) continue;
      for (Eigen::Index k = 0; k < a; ++k) g[active[k]] = ga[k];
    }
    // subgradient feasibility for the inactive coordinates
    const Eigen::VectorXd r = y - b * g;
    bool feasible = true;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (sign[j] != 0) continue;
      if (std::abs(b.col(j).dot(w.cwiseProduct(r)) / dn) > lambda * l[j] / dn + 1e-9)
        feasible = false;
    }
    if (!feasible) continue;
    const double obj = lasso_objective(b, y, w, l, lambda, g);
    if (obj < best_obj) {
      best_obj = obj;
      best = g;
    }
  }
  return best;
}

// Max KKT violation of a candidate lasso solution.
inline double lasso_kkt_violation(const Eigen::MatrixXd& b, const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& w, const Eigen::VectorXd& l,
                                  double lambda, const Eigen::VectorXd& g) {
  const double dn = static_cast<double>(b.rows());
  const Eigen::VectorXd r = y - b * g;
  double worst = 0.0;
  for (Eigen::Index j = 0; j < b.cols(); ++j) {
    const double grad = b.col(j).dot(w.cwiseProduct(r)) / dn;
    const double thr = lambda * l[j] / dn;
    const double viol = g[j] != 0.0 ? std::abs(grad - thr * (g[j] > 0 ? 1.0 : -1.0))
                                    : std::max(0.0, std::abs(grad) - thr);
    worst = std::max(worst, viol);
  }
  return worst;
}

// Same check for the weighted logistic lasso (gradient uses y - Lambda(eta)).
inline double logistic_kkt_violation(const Eigen::MatrixXd& b, const Eigen::VectorXd& y,
                                     const Eigen::VectorXd& w, const Eigen::VectorXd& l,
                                     double lambda, const Eigen::VectorXd& g) {
  const double dn = static_cast<double>(b.rows());
  const Eigen::VectorXd eta = b * g;
  Eigen::VectorXd r(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) r[i] = y[i] - hdnsm::logistic_cdf(eta[i]);
  double worst = 0.0;
  for (Eigen::Index j = 0; j < b.cols(); ++j) {
    const double grad = b.col(j).dot(w.cwiseProduct(r)) / dn;
    const double thr = lambda * l[j] / dn;
    const double viol = g[j] != 0.0 ? std::abs(grad - thr * (g[j] > 0 ? 1.0 : -1.0))
                                    : std::max(0.0, std::abs(grad) - thr);
    worst = std::max(worst, viol);
  }
  return worst;
}

}  // namespace oracles
