#include "osclab/numeric.hpp"

#include "osclab/error.hpp"

namespace osc {

std::vector<double> linspace(double a, double b, std::size_t n) {
  if (n == 0) return {};
  if (n == 1) return {a};
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  v.back() = b;
  return v;
}

std::vector<double> logspace(double a, double b, std::size_t n) {
  if (!(a > 0.0) || !(b > 0.0)) throw Error(ErrorCode::validation, "log-spaced grid needs positive endpoints");
  auto e = linspace(std::log(a), std::log(b), n);
  for (auto& v : e) v = std::exp(v);
  if (n > 0) {
    e.front() = a;
    e.back() = b;
  }
  return e;
}

}  // namespace osc
