#include "osclab/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/students_t.hpp>

#include "osclab/error.hpp"

namespace osc {

LeastSquares least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  if (a.rows() < a.cols() || a.cols() == 0) throw Error(ErrorCode::insufficient_data, "underdetermined least squares");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  LeastSquares out;
  out.condition = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : INFINITY;
  out.coef = svd.solve(b);
  Eigen::VectorXd res = a * out.coef - b;
  out.rms = std::sqrt(res.squaredNorm() / static_cast<double>(a.rows()));
  out.stderr_ = Eigen::VectorXd::Zero(a.cols());
  auto dof = a.rows() - a.cols();
  if (dof > 0 && std::isfinite(out.condition)) {
    double s2 = res.squaredNorm() / static_cast<double>(dof);
    Eigen::MatrixXd cov = (a.transpose() * a).inverse() * s2;
    for (Eigen::Index i = 0; i < a.cols(); ++i) out.stderr_(i) = std::sqrt(std::max(0.0, cov(i, i)));
  }
  return out;
}

double student_t_quantile(double p, double dof) {
  boost::math::students_t dist(dof);
  return boost::math::quantile(dist, p);
}

TrendTest trend_test(const std::vector<double>& parameter, const std::vector<double>& statistic, double max_slope,
                     double confidence, double min_decades) {
  if (parameter.size() != statistic.size()) throw Error(ErrorCode::validation, "trend test size mismatch");
  std::vector<double> x, y;
  for (std::size_t i = 0; i < parameter.size(); ++i) {
    if (parameter[i] > 0.0 && statistic[i] > 0.0 && std::isfinite(statistic[i])) {
      x.push_back(std::log(parameter[i]));
      y.push_back(std::log(statistic[i]));
    }
  }
  TrendTest t;
  t.n = x.size();
  if (t.n < 3) throw Error(ErrorCode::insufficient_data, "trend test needs at least 3 positive samples");
  auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  t.span_decades = (*hi - *lo) / std::log(10.0);
  Eigen::MatrixXd a(t.n, 2);
  Eigen::VectorXd b(t.n);
  for (std::size_t i = 0; i < t.n; ++i) {
    a(i, 0) = 1.0;
    a(i, 1) = x[i];
    b(i) = y[i];
  }
  LeastSquares ls = least_squares(a, b);
  t.slope = ls.coef(1);
  t.slope_upper = t.slope + student_t_quantile(confidence, static_cast<double>(t.n - 2)) * ls.stderr_(1);
  t.bounded = t.slope_upper <= max_slope && t.span_decades >= min_decades - 1e-9;
  return t;
}

}  // namespace osc
