#pragma once

#include <array>
#include <complex>
#include <optional>
#include <vector>

#include "osclab/newton_polygon.hpp"
#include "osclab/phase.hpp"
#include "osclab/quadrature.hpp"
#include "osclab/stats.hpp"

namespace osc {

enum class Space { physical, frequency };

/// n x n samples on the periodic box [-L, L)^2, row index along x1.
/// Physical samples sit at x_j = -L + j h with h = 2L/n; frequency samples at xi_k = pi k / L in FFT order.
struct GridField {
  int n = 0;
  double L = 0.0;
  Space space = Space::physical;
  std::vector<std::complex<double>> samples;

  double h() const noexcept { return 2.0 * L / n; }
  double dxi() const noexcept { return M_PI / L; }
  double x(int j) const noexcept { return -L + j * h(); }
  /// Signed wavenumber of FFT index k times dxi.
  double xi(int k) const noexcept { return (k < n / 2 ? k : k - n) * dxi(); }
  std::complex<double>& at(int i, int j) { return samples[static_cast<std::size_t>(i) * n + j]; }
  const std::complex<double>& at(int i, int j) const { return samples[static_cast<std::size_t>(i) * n + j]; }
};

inline constexpr int kMaxGrid = 4096;

/// Validates 64 <= n <= kMaxGrid (power of two) and L > 0.
void validate_grid(int n, double L);
GridField zero_field(int n, double L, Space space);

/// Approximates the continuous transform f^(xi) = int f(x) e^{-i x.xi} dx.
GridField to_frequency(const GridField& f);
GridField to_physical(const GridField& f);

/// Compactly supported datum: g^ is a radial bump of radius rho (plateau rho0); g is translated by `shift`.
struct DatumSpec {
  double rho = 0.5;
  double rho0 = 0.25;
  std::array<double, 2> shift{0.0, 0.0};
};

/// Physical field whose transform is the datum bump. UnresolvedSupport when fewer than 8 modes fall inside.
GridField make_datum(const DatumSpec& datum, int n, double L);

/// Multiplier e^{i t S(xi)}.
GridField evolve_dispersive(const GridField& g, const Phase& phase, double t);
/// Multiplier e^{-t S(xi)}; NegativeSymbol when S < 0 on the support of g^.
GridField evolve_dissipative(const GridField& g, const Phase& phase, double t);
/// Multiplier S(xi)^-delta with modes below eta zeroed. DeltaTooLarge unless delta < epsilon of the law;
/// ZeroSymbolMode when eta = 0 and a supported mode has S = 0.
GridField fractional_solve(const GridField& g, const Phase& phase, double delta, double eta, const DecayLaw& law);

struct NormResult {
  double value = 0.0;
  double boundary_fraction = 0.0;  ///< share of |f|^p in the outer ring max(|x1|, |x2|) >= 0.9 L
};

/// Riemann-sum L^p norm of the samples as given; p = infinity gives the max modulus.
NormResult lp_norm_sampled(const GridField& f, double p);
/// L^p norm of the trigonometric interpolant: for p > 2 the sum runs on a 2x oversampled grid when it fits.
NormResult lp_norm(const GridField& f, double p);
/// Trigonometric interpolation onto factor * n points per axis over the same box; factor in {1, 2, 4}.
GridField oversample(const GridField& f, int factor);
/// (sum |f^|^2 / (2L)^2)^(1/2), equal to the physical L^2 norm by Parseval.
double frequency_l2_norm(const GridField& f);

struct EtaConvergence {
  std::vector<double> eta;
  std::vector<double> differences;  ///< ||f_k - f_{k+1}||_q
  double last_norm = 0.0;
  bool converged = false;
};

/// Throws NotConverging if the last relative difference is not below tol or the differences grow.
EtaConvergence eta_convergence(const GridField& g, const Phase& phase, double delta, const DecayLaw& law,
                               const std::vector<double>& eta, double q, double tol = 1e-6);

struct GridParams {
  int n = 1024;
  double L = 64.0;
  DatumSpec datum;
  /// n and L are doubled together per time until the boundary mass drops below 1e-4 or n would exceed this.
  int max_n = 2048;
};

struct DecayRow {
  double t = 0.0;
  double norm_q = 0.0;
  double norm_p = 0.0;
  double ratio = 0.0;
  double bound_value = 0.0;
  double boundary_mass = 0.0;
  int n = 0;  ///< grid actually used for this row
  double L = 0.0;
};

struct DecayCheckReport {
  std::vector<DecayRow> rows;
  TrendTest trend;
  bool bounded = false;
  double safe_horizon = 0.0;  ///< t beyond L^2 / (4 pi) is dropped
  std::vector<double> dropped_t;
  std::vector<double> polluted_t;  ///< rows whose boundary mass stayed above 1e-4; excluded from the trend
  std::string note;
};

/// Default time grid: 12 points log-spaced in [1, 100].
std::vector<double> default_t_grid();

/// ||f(t)||_q / (B(t) ||g||_p) for the dispersive flow with B(t) = (|t|+2)^{4 eps e} (ln(|t|+2))^{-4 m e},
/// e = 1/q - 1/p + 3/4 <= 0.
DecayCheckReport check_dispersive_decay(const Phase& phase, const DecayLaw& law, double p, double q,
                                        const std::vector<double>& t_grid, const GridParams& grid = {});
/// Same for the dissipative flow with B(t) = (t+2)^{2 eps e} (ln(t+2))^{-2 m e}, e = 1/q - 1/p + 1/2 <= 0.
DecayCheckReport check_dissipative_decay(const Phase& phase, const DecayLaw& law, double p, double q,
                                         const std::vector<double>& t_grid, const GridParams& grid = {});

struct FractionalBoundReport {
  std::vector<double> ratios;          ///< ||f||_q / ||g||_p per datum on the base grid
  std::vector<double> ratios_refined;  ///< same with n and L doubled
  double max_ratio = 0.0;
  double max_ratio_refined = 0.0;
  double relative_change = 0.0;
  bool bounded = false;  ///< max does not grow by more than 10% under refinement
};

/// Needs delta < eps and 1/q - 1/p + 1/2 + delta/(2 eps) <= 0 (strict unless m = 0 and p != 1, q != inf).
FractionalBoundReport check_fractional_bound(const Phase& phase, const DecayLaw& law, double delta, double p, double q,
                                             const std::vector<DatumSpec>& corpus, const GridParams& grid,
                                             double eta = 1e-9);

/// g convolved with (2 pi)^-2 T(t, .) on the periodic grid, the kernel evaluated by quadrature and
/// periodized over the (2 images + 1)^2 nearest copies of the period cell. Radial phases tabulate T on a
/// radial grid of spacing h/4 and interpolate; axis-even phases reuse values across reflections.
GridField kernel_convolution(const GridField& g, const Phase& phase, double t, const BumpSpec& cutoff,
                             const QuadOptions& opt = {}, int images = 1);

/// Relative L^2 distance ||a - b|| / ||b||.
double relative_l2_error(const GridField& a, const GridField& b);

}  // namespace osc
