#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "osclab/phase.hpp"

namespace osc {

/// Radial cutoff: 1 on |x| <= rho0, 0 on |x| >= rho, C-infinity smoothstep in between.
struct BumpSpec {
  double rho = 0.5;
  double rho0 = 0.25;
};

BumpSpec make_bump(double rho, std::optional<double> rho0 = std::nullopt);
double bump_value(const BumpSpec& b, double r) noexcept;
/// d/dr of bump_value.
double bump_derivative(const BumpSpec& b, double r) noexcept;

inline constexpr std::int64_t kDefaultPanelBudget = std::int64_t{1} << 27;

struct QuadOptions {
  double tol = 1e-8;  ///< absolute
  std::int64_t panel_budget = kDefaultPanelBudget;
  int threads = 1;
};

struct Quad2DResult {
  std::complex<double> value;
  double abs_error = 0.0;
  std::int64_t panels = 0;
  bool converged = false;
};

/// Integral of exp(i(lambda S(x) + mu.x)) phi(x) over R^2.
Quad2DResult integrate_T(const Phase& phase, double lambda, double mu1, double mu2, const BumpSpec& bump,
                         const QuadOptions& opt = {});
Quad2DResult integrate_U(const Phase& phase, double lambda, const BumpSpec& bump, const QuadOptions& opt = {});
/// Integral of exp(-lambda S(x) + i mu.x) phi(x). Needs lambda >= 0 and S >= 0 on supp phi (NegativePhase).
Quad2DResult integrate_R(const Phase& phase, double lambda, double mu1, double mu2, const BumpSpec& bump,
                         const QuadOptions& opt = {});

/// Values of integrate_T(phase, t, x) at each point x. Points are distributed over threads.
std::vector<Quad2DResult> kernel_T_grid(const Phase& phase, double t, const BumpSpec& bump,
                                        const std::vector<std::array<double, 2>>& points, const QuadOptions& opt = {});

/// f(t, k) returns the k-th derivative of a univariate function at t.
using Derivatives1D = std::function<double(double t, int k)>;

Derivatives1D polynomial_1d(std::vector<double> coeffs);

struct VdcInput {
  Derivatives1D f;
  Derivatives1D amplitude;
  double a = -1.0;
  double b = 1.0;
  int n = 2;
  double lambda = 1.0;
  double C = 0.0;        ///< upper bound of sum_{i=2..n} |f^(i)|
  double C_lower = 0.0;  ///< lower bound of the same sum
  double C_bound = 0.0;  ///< constant in front of the decay bound
  double tol = 1e-10;
};

struct VdcResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double lhs_error = 0.0;
  double amplitude_sup = 0.0;
  double amplitude_variation = 0.0;
  bool holds = false;
};

/// Throws HypothesisViolated when the derivative sum leaves [C_lower, C] on the interval.
VdcResult vdc_check_1d(const VdcInput& in);

/// Adaptive Gauss-Kronrod value of int_a^b exp(i lambda f) g for smooth f, g.
struct Quad1DResult {
  std::complex<double> value;
  double abs_error = 0.0;
  std::int64_t panels = 0;
};
Quad1DResult oscillatory_1d(const Derivatives1D& f, const Derivatives1D& g, double a, double b, double lambda,
                            double tol);

}  // namespace osc
