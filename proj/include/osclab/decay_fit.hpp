#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "osclab/newton_polygon.hpp"
#include "osclab/phase.hpp"
#include "osclab/quadrature.hpp"
#include "osclab/stats.hpp"

namespace osc {

enum class IntegralKind { oscillatory, damped };

struct ScanPoint {
  double lambda1 = 0.0;
  double mu1 = 0.0;
  double mu2 = 0.0;
};

struct ScanRow {
  double lambda1 = 0.0;
  double mu1 = 0.0;
  double mu2 = 0.0;
  double abs_value = 0.0;
  double abs_error = 0.0;
  double regime_ratio = 0.0;  ///< |mu| / |lambda1|, infinite at lambda1 = 0

  /// Rows whose error exceeds 1% of the value are kept out of fits and sups.
  bool low_confidence() const noexcept { return !(abs_error <= 0.01 * abs_value); }
};

struct ScanReport {
  std::string phase_label;
  BumpSpec bump;
  IntegralKind kind = IntegralKind::oscillatory;
  std::string config_hash;
  std::vector<ScanRow> rows;
};

struct ScanOptions {
  QuadOptions quad;
  int threads = 1;  ///< rows are distributed; each quadrature runs single-threaded
};

/// Evaluates T (or R for the damped kind) at every point; row order follows the input.
ScanReport scan_points(const Phase& phase, const BumpSpec& bump, const std::vector<ScanPoint>& points,
                       IntegralKind kind, const ScanOptions& opt = {});

/// Needs at least 8 positive, log-spaced lambda values.
ScanReport scan_lambda(const Phase& phase, const BumpSpec& bump, const std::vector<double>& lambdas, double mu1,
                       double mu2, const ScanOptions& opt = {});

struct FitResult {
  double epsilon_hat = 0.0;
  int m_hat = 0;
  double C_hat = 0.0;
  double rms_residual = 0.0;
  std::size_t n_points = 0;
  double condition = 0.0;
};

/// Fits log|T| = log C - epsilon log lambda + m log log lambda for m in {0, 1}; ties within 1% go to m = 0.
FitResult fit_decay(const ScanReport& report);

std::string scan_csv_header();
void write_scan_csv(std::ostream& os, const ScanReport& report);
/// Reads rows written by write_scan_csv; lines starting with '#' are skipped.
ScanReport read_scan_csv(std::istream& is);

/// One row of a sup table: the statistic at a parameter value and where the sup was attained.
struct SupRow {
  double parameter = 0.0;
  double statistic = 0.0;
  ScanPoint argmax;
  std::size_t samples = 0;
};

struct BoundednessReport {
  std::string statistic;
  std::vector<SupRow> table;
  TrendTest trend;
  bool bounded = false;
  /// Spread of log10(statistic) around its mean, in decades.
  double flatness_decades = 0.0;
  std::string note;
  ScanReport scan;
};

struct MuDecayOptions {
  ScanOptions scan;
  std::array<double, 2> direction{1.0, 0.0};           ///< unit direction of mu
  std::vector<double> lambda_ratios = {};               ///< |lambda1| / |mu|; empty selects the default grid
  double lambda_max = 1e5;                              ///< lambda1 values above this are skipped
};

/// Default |lambda1| / |mu| grid: 13 points log-spaced in [0.1, 100].
std::vector<double> default_lambda_ratios();

/// sup over lambda1 (both signs and 0) of |T(lambda1, |mu| e)| |mu|^(1/2), tested for growth in |mu|.
BoundednessReport check_mu_decay(const Phase& phase, const BumpSpec& bump, const std::vector<double>& mu_grid,
                                 const MuDecayOptions& opt = {});

struct UniformDecayOptions {
  ScanOptions scan;
  std::vector<double> mu_ratios = {0.0, 0.01, 0.03, 0.1, 0.2};  ///< |mu| / lambda1
  std::vector<std::array<double, 2>> directions = {{1.0, 0.0}, {0.70710678118654752, 0.70710678118654752}};
  double delta = 0.1;  ///< regime split |mu| <= delta |lambda1|
};

/// sup over mu of |T| lambda1^eps / (ln lambda1)^m, tested for growth in lambda1. Needs eps <= 1/3.
BoundednessReport check_uniform_decay(const Phase& phase, const BumpSpec& bump, const DecayLaw& law,
                                      const std::vector<double>& lambda_grid, const UniformDecayOptions& opt = {});

struct DampedBoundReport {
  BoundednessReport lambda_branch;  ///< sup over mu of |R| lambda1^eps / (ln lambda1)^m against lambda1
  BoundednessReport mu_branch;      ///< sup over lambda1 of |R| |mu| against |mu|
  bool bounded = false;
};

/// Both branches of |R| <= C min(lambda1^-eps (ln lambda1)^m, |mu|^-1). Mu is taken along `direction`.
DampedBoundReport check_damped_bound(const Phase& phase, const BumpSpec& bump, const std::vector<double>& lambda_grid,
                                     const std::vector<double>& mu_grid, const DecayLaw& law,
                                     const ScanOptions& opt = {}, std::array<double, 2> direction = {1.0, 0.0});

/// sup-table from arbitrary rows: groups by `key`, weighs each row by `weight`.
std::vector<SupRow> sup_table(const ScanReport& scan, const std::vector<double>& key,
                              const std::vector<double>& weight);

}  // namespace osc
