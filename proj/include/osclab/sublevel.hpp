#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "osclab/error.hpp"
#include "osclab/newton_polygon.hpp"
#include "osclab/phase.hpp"
#include "osclab/resolution.hpp"
#include "osclab/stats.hpp"

namespace osc {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// coeff * x^a * y^b with real exponents; non-integer exponents need x, y >= 0.
struct PowerTerm {
  double a = 0.0;
  double b = 0.0;
  double coeff = 1.0;
};

/// Function whose sublevel sets are measured. Interval bounds are available when `terms` is set.
class SublevelFunction {
 public:
  static SublevelFunction from_polynomial(const Polynomial& p);
  static SublevelFunction monomial(double a, double b, double coeff = 1.0);
  static SublevelFunction power_sum(std::vector<PowerTerm> terms);
  /// Point evaluation only; usable with the Monte Carlo method.
  static SublevelFunction opaque(Field2D f);

  double eval(double x, double y) const;
  Interval range(double x0, double x1, double y0, double y1) const;
  /// Gradient of the power-sum form.
  std::array<double, 2> gradient(double x, double y) const;
  bool has_bounds() const noexcept { return !terms_.empty(); }
  bool needs_nonnegative() const noexcept { return nonneg_; }

 private:
  std::vector<PowerTerm> terms_;
  Field2D f_;
  bool nonneg_ = false;
};

/// Axis-aligned box, optionally intersected with a wedge.
struct SublevelRegion {
  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
  std::optional<Wedge> wedge;

  static SublevelRegion rectangle(double x0, double x1, double y0, double y1);
  static SublevelRegion of_wedge(const Wedge& w);
  double box_area() const noexcept { return (x1 - x0) * (y1 - y0); }
  bool contains(double x, double y) const;
};

enum class SublevelMethod { adaptive, monte_carlo };

std::string method_name(SublevelMethod m);
SublevelMethod parse_method(const std::string& s);

struct SublevelOptions {
  SublevelMethod method = SublevelMethod::adaptive;
  std::int64_t budget = std::int64_t{1} << 22;  ///< cells (adaptive) or samples (Monte Carlo)
  std::uint64_t seed = 0;
  int threads = 1;
  double rel_tol = 1e-3;  ///< adaptive: stop when boundary mass <= rel_tol * measure
  int max_depth = 24;     ///< per axis
};

struct SublevelEstimate {
  double r = 0.0;
  double measure = 0.0;
  double uncertainty = 0.0;  ///< adaptive: boundary mass; Monte Carlo: 99% half-width
  SublevelMethod method = SublevelMethod::adaptive;
  std::uint64_t seed = 0;
  std::int64_t cells = 0;
};

/// Thrown when the adaptive budget runs out; carries the bracket reached so far.
class SublevelBudgetExceeded : public Error {
 public:
  explicit SublevelBudgetExceeded(SublevelEstimate best);
  const SublevelEstimate& best() const noexcept { return best_; }

 private:
  SublevelEstimate best_;
};

/// Area of {(x, y) in region : |f(x, y)| < r} for 0 < r < 1/2.
SublevelEstimate measure_sublevel(const SublevelFunction& f, const SublevelRegion& region, double r,
                                  const SublevelOptions& opt = {});

/// measure_sublevel over a grid of r; throws Internal if the bracketed measure decreases with r.
std::vector<SublevelEstimate> sublevel_scan(const SublevelFunction& f, const SublevelRegion& region,
                                            const std::vector<double>& r_grid, const SublevelOptions& opt = {});

/// Area of {x^a y^b < r} in the unit square.
double monomial_sublevel_exact(int a, int b, double r);

/// Default r grid: 12 points log-spaced in [1e-7, 1e-1].
std::vector<double> default_r_grid();

struct SublevelFit {
  double epsilon = 0.0;
  int m = 0;
  double C = 0.0;
  double rms = 0.0;
  double condition = 0.0;
  std::size_t n = 0;
};

/// Fits log A = log C + epsilon log r + m log|log r| for m in {0, 1}.
SublevelFit fit_sublevel_law(const std::vector<SublevelEstimate>& samples);

struct SublevelBoundRow {
  double r = 0.0;
  double measure = 0.0;
  double uncertainty = 0.0;
  double ratio = 0.0;
};

struct SublevelBoundReport {
  std::vector<SublevelBoundRow> rows;
  TrendTest trend;
  bool bounded = false;
};

/// Ratio of |{x^alpha y^beta < r} within the region| to r^epsilon |ln r|^m, tested for growth as r -> 0.
SublevelBoundReport check_sublevel_bound(const SublevelRegion& region, double alpha_i, double beta_i,
                                         double epsilon, int m, const std::vector<double>& r_grid,
                                         const SublevelOptions& opt = {});
SublevelBoundReport check_sublevel_bound(const SublevelRegion& region, double alpha_i, double beta_i,
                                         const DecayLaw& law, const std::vector<double>& r_grid,
                                         const SublevelOptions& opt = {});

}  // namespace osc
