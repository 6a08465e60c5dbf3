#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace hdnsm {

// Raw sample: outcome Y, continuous treatment T, controls X (n x p).
struct Dataset {
  Eigen::VectorXd y;
  Eigen::VectorXd t;
  Eigen::MatrixXd x;
  std::vector<std::string> x_names;

  Eigen::Index n() const { return y.size(); }
  Eigen::Index p() const { return x.cols(); }

  // Regression basis b(X): a constant column followed by the columns of X.
  // The constant is penalized like any other coordinate.
  Eigen::MatrixXd basis() const {
    Eigen::MatrixXd b(x.rows(), x.cols() + 1);
    b.col(0).setOnes();
    b.rightCols(x.cols()) = x;
    return b;
  }

  std::string basis_name(Eigen::Index j) const {
    if (j == 0) return "(const)";
    const auto k = static_cast<std::size_t>(j - 1);
    if (k < x_names.size()) return x_names[k];
    return "x" + std::to_string(j);
  }
};

}  // namespace hdnsm
