#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace osc {

struct LeastSquares {
  Eigen::VectorXd coef;
  Eigen::VectorXd stderr_;
  double rms = 0.0;
  double condition = 0.0;
};

/// Solves min |A c - b| by SVD; condition is the ratio of extreme singular values.
LeastSquares least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& b);

/// Upper quantile of Student's t with `dof` degrees of freedom.
double student_t_quantile(double p, double dof);

/// Slope of log(statistic) against log(parameter) with a one-sided upper confidence limit.
struct TrendTest {
  double slope = 0.0;
  double slope_upper = 0.0;
  double span_decades = 0.0;
  std::size_t n = 0;
  bool bounded = false;
};

TrendTest trend_test(const std::vector<double>& parameter, const std::vector<double>& statistic,
                     double max_slope = 0.05, double confidence = 0.95, double min_decades = 2.5);

}  // namespace osc
