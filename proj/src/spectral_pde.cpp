#include "osclab/spectral_pde.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>

#include "osclab/error.hpp"
#include "osclab/numeric.hpp"

namespace osc {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// Unnormalized in-place 2D DFT; sign is FFTW_FORWARD or FFTW_BACKWARD.
void dft2(std::vector<std::complex<double>>& data, int n, int sign) {
  const std::size_t count = static_cast<std::size_t>(n) * n;
  fftw_complex* buf = fftw_alloc_complex(count);
  if (!buf) throw Error(ErrorCode::internal, "FFT buffer allocation failed");
  auto* view = reinterpret_cast<std::complex<double>*>(buf);
  std::copy(data.begin(), data.end(), view);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft_2d(n, n, buf, buf, sign, FFTW_ESTIMATE);
  }
  if (!plan) {
    fftw_free(buf);
    throw Error(ErrorCode::internal, "FFT planning failed");
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  std::copy(view, view + count, data.begin());
  fftw_free(buf);
}

GridField frequency_of(const GridField& g) { return g.space == Space::frequency ? g : to_frequency(g); }

double support_threshold(const GridField& f) {
  double mx = 0.0;
  for (const auto& v : f.samples) mx = std::max(mx, std::abs(v));
  return 1e-12 * mx;
}

template <class Multiplier>
GridField apply_multiplier(const GridField& g, Multiplier mult) {
  GridField f = frequency_of(g);
  const double thr = support_threshold(f);
  for (int i = 0; i < f.n; ++i) {
    const double a = f.xi(i);
    for (int j = 0; j < f.n; ++j) f.at(i, j) = mult(a, f.xi(j), f.at(i, j), std::abs(f.at(i, j)) > thr);
  }
  return to_physical(f);
}

void require_nonnegative_on_support(const GridField& fhat, const Phase& phase) {
  const double thr = support_threshold(fhat);
  for (int i = 0; i < fhat.n; ++i) {
    for (int j = 0; j < fhat.n; ++j) {
      if (std::abs(fhat.at(i, j)) <= thr) continue;
      double s = phase.eval(fhat.xi(i), fhat.xi(j));
      if (s < -1e-12) {
        throw Error(ErrorCode::negative_symbol, "symbol is negative (" + std::to_string(s) + ") at xi = (" +
                                                    std::to_string(fhat.xi(i)) + ", " + std::to_string(fhat.xi(j)) + ")");
      }
    }
  }
}

void validate_exponents(double p, double q) {
  if (!(p >= 1.0) || std::isinf(p)) throw Error(ErrorCode::hypothesis_violated, "p must lie in [1, inf)");
  if (!(q > 1.0)) throw Error(ErrorCode::hypothesis_violated, "q must lie in (1, inf]");
}

constexpr double kBoundaryMassLimit = 1e-4;

double safe_pow(double base, double e) { return e == 0.0 ? 1.0 : std::pow(base, e); }

enum class Flow { dispersive, dissipative };

DecayCheckReport decay_check(Flow flow, const Phase& phase, const DecayLaw& law, double p, double q,
                             const std::vector<double>& t_grid, const GridParams& grid) {
  validate_exponents(p, q);
  const double inv_q = std::isinf(q) ? 0.0 : 1.0 / q;
  const double offset = flow == Flow::dispersive ? 0.75 : 0.5;
  const double e = inv_q - 1.0 / p + offset;
  if (e > 1e-15) throw Error(ErrorCode::hypothesis_violated, "exponents need 1/q - 1/p + " + std::to_string(offset) + " <= 0");
  if (std::abs(e) <= 1e-15 && (p == 1.0 || std::isinf(q))) {
    throw Error(ErrorCode::hypothesis_violated, "the endpoint case excludes p = 1 and q = inf");
  }
  if (t_grid.empty()) throw Error(ErrorCode::validation, "empty t grid");
  const double scale = flow == Flow::dispersive ? 4.0 : 2.0;
  const double eps = law.epsilon.to_double();

  DecayCheckReport rep;
  if (flow == Flow::dispersive && eps > 0.5) {
    rep.note = "epsilon > 1/2 lies outside the stated range of the dispersive estimate; ratios are reported anyway";
  }
  rep.safe_horizon = grid.L * grid.L / (4.0 * M_PI);
  // Level k holds the datum on the grid with n and L scaled by 2^k.
  struct Level {
    GridField ghat;
    double gp = 0.0;
  };
  std::vector<Level> levels;
  auto level = [&](std::size_t k) -> const Level& {
    while (levels.size() <= k) {
      const int scale_k = 1 << levels.size();
      GridField g = make_datum(grid.datum, grid.n * scale_k, grid.L * scale_k);
      Level lv{to_frequency(g), lp_norm(g, p).value};
      if (flow == Flow::dissipative) require_nonnegative_on_support(lv.ghat, phase);
      levels.push_back(std::move(lv));
    }
    return levels[k];
  };
  level(0);
  std::vector<double> ts, ratios;
  for (double t : t_grid) {
    if (flow == Flow::dissipative && !(t >= 0.0)) throw Error(ErrorCode::validation, "dissipative flow needs t >= 0");
    if (std::abs(t) > rep.safe_horizon) {
      rep.dropped_t.push_back(t);
      continue;
    }
    std::size_t k = 0;
    NormResult nq;
    while (true) {
      const Level& lv = level(k);
      GridField f = flow == Flow::dispersive ? evolve_dispersive(lv.ghat, phase, t) : evolve_dissipative(lv.ghat, phase, t);
      nq = lp_norm(f, q);
      if (nq.boundary_fraction < kBoundaryMassLimit || grid.n * (2 << k) > grid.max_n) break;
      ++k;
    }
    const double gp = level(k).gp;
    const double tt = std::abs(t) + 2.0;
    const double bound = safe_pow(tt, scale * eps * e) * safe_pow(std::log(tt), -scale * law.m * e);
    DecayRow row{t, nq.value, gp, nq.value / (bound * gp), bound, nq.boundary_fraction, grid.n << k, grid.L * (1 << k)};
    if (nq.boundary_fraction >= kBoundaryMassLimit) {
      rep.polluted_t.push_back(t);
      rep.rows.push_back(row);
      continue;
    }
    rep.rows.push_back(row);
    if (t > 0.0) {
      ts.push_back(t);
      ratios.push_back(row.ratio);
    }
  }
  rep.trend = trend_test(ts, ratios, 0.05, 0.95, 1.5);
  rep.bounded = rep.trend.bounded;
  auto add_note = [&](const std::string& extra) { rep.note = rep.note.empty() ? extra : rep.note + "; " + extra; };
  if (!rep.dropped_t.empty()) {
    add_note(std::to_string(rep.dropped_t.size()) + " time(s) beyond the periodization horizon dropped");
  }
  if (!rep.polluted_t.empty()) {
    add_note(std::to_string(rep.polluted_t.size()) + " time(s) kept out of the trend: boundary mass above 1e-4 at n = " +
             std::to_string(grid.max_n));
  }
  return rep;
}

bool is_radial(const Phase& phase) {
  const double angles[] = {0.3, 1.1, 2.0};
  const double radii[] = {0.4, 0.9, 1.7};
  for (double r : radii) {
    double ref = phase.eval(r, 0.0);
    for (double a : angles) {
      double v = phase.eval(r * std::cos(a), r * std::sin(a));
      if (std::abs(v - ref) > 1e-12 * std::max(1.0, std::abs(ref))) return false;
    }
  }
  return true;
}

bool is_even_even(const Phase& phase) {
  for (const auto& t : phase.terms()) {
    if (t.alpha % 2 != 0 || t.beta % 2 != 0) return false;
  }
  return true;
}

}  // namespace

void validate_grid(int n, double L) {
  if (n < 64 || n > kMaxGrid || (n & (n - 1)) != 0) throw Error(ErrorCode::validation, "grid size must be a power of two in [64, 4096]");
  if (!(L > 0.0) || !std::isfinite(L)) throw Error(ErrorCode::validation, "domain half-width must be positive");
}

GridField zero_field(int n, double L, Space space) {
  validate_grid(n, L);
  GridField f;
  f.n = n;
  f.L = L;
  f.space = space;
  f.samples.assign(static_cast<std::size_t>(n) * n, {0.0, 0.0});
  return f;
}

GridField to_frequency(const GridField& f) {
  if (f.space != Space::physical) throw Error(ErrorCode::validation, "field is already in frequency space");
  GridField out = f;
  dft2(out.samples, f.n, FFTW_FORWARD);
  const double h2 = f.h() * f.h();
  for (int i = 0; i < f.n; ++i) {
    for (int j = 0; j < f.n; ++j) out.at(i, j) *= ((i + j) % 2 ? -h2 : h2);
  }
  out.space = Space::frequency;
  return out;
}

GridField to_physical(const GridField& f) {
  if (f.space != Space::frequency) throw Error(ErrorCode::validation, "field is already in physical space");
  GridField out = f;
  const double w = 1.0 / (4.0 * f.L * f.L);
  for (int i = 0; i < f.n; ++i) {
    for (int j = 0; j < f.n; ++j) out.at(i, j) *= ((i + j) % 2 ? -w : w);
  }
  dft2(out.samples, f.n, FFTW_BACKWARD);
  out.space = Space::physical;
  return out;
}

GridField make_datum(const DatumSpec& datum, int n, double L) {
  if (!(datum.rho > 0.0) || !(datum.rho0 > 0.0 && datum.rho0 < datum.rho)) {
    throw Error(ErrorCode::validation, "datum bump needs 0 < rho0 < rho");
  }
  GridField f = zero_field(n, L, Space::frequency);
  const BumpSpec b{datum.rho, datum.rho0};
  int inside = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double a = f.xi(i), c = f.xi(j);
      const double r = std::hypot(a, c);
      if (r < datum.rho) ++inside;
      const double v = bump_value(b, r);
      if (v == 0.0) continue;
      const double ph = -(a * datum.shift[0] + c * datum.shift[1]);
      f.at(i, j) = v * std::complex<double>(std::cos(ph), std::sin(ph));
    }
  }
  if (inside < 8) {
    throw Error(ErrorCode::unresolved_support,
                "only " + std::to_string(inside) + " frequency modes inside the datum support; increase L");
  }
  if (datum.rho > M_PI * n / (2.0 * L)) {
    throw Error(ErrorCode::unresolved_support, "datum support exceeds the grid band limit");
  }
  return to_physical(f);
}

GridField evolve_dispersive(const GridField& g, const Phase& phase, double t) {
  if (!std::isfinite(t)) throw Error(ErrorCode::validation, "t must be finite");
  return apply_multiplier(g, [&](double a, double c, std::complex<double> v, bool) {
    const double arg = t * phase.eval(a, c);
    return v * std::complex<double>(std::cos(arg), std::sin(arg));
  });
}

GridField evolve_dissipative(const GridField& g, const Phase& phase, double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw Error(ErrorCode::validation, "dissipative flow needs finite t >= 0");
  GridField ghat = frequency_of(g);
  require_nonnegative_on_support(ghat, phase);
  return apply_multiplier(ghat, [&](double a, double c, std::complex<double> v, bool supported) {
    if (!supported) return std::complex<double>{};
    return v * std::exp(-t * phase.eval(a, c));
  });
}

GridField fractional_solve(const GridField& g, const Phase& phase, double delta, double eta, const DecayLaw& law) {
  if (!(delta > 0.0)) throw Error(ErrorCode::validation, "delta must be positive");
  if (!(eta >= 0.0)) throw Error(ErrorCode::validation, "eta must be nonnegative");
  if (!(delta < law.epsilon.to_double())) {
    throw Error(ErrorCode::delta_too_large, "delta must be below epsilon = " + law.epsilon.str());
  }
  GridField ghat = frequency_of(g);
  require_nonnegative_on_support(ghat, phase);
  return apply_multiplier(ghat, [&](double a, double c, std::complex<double> v, bool supported) {
    if (!supported) return std::complex<double>{};
    const double s = phase.eval(a, c);
    if (s < eta) return std::complex<double>{};
    if (s <= 0.0) {
      throw Error(ErrorCode::zero_symbol_mode, "symbol vanishes at a supported mode xi = (" + std::to_string(a) + ", " +
                                                   std::to_string(c) + "); use eta > 0");
    }
    return v * std::pow(s, -delta);
  });
}

GridField oversample(const GridField& f, int factor) {
  if (f.space != Space::physical) throw Error(ErrorCode::validation, "oversample needs a physical field");
  if (factor != 1 && factor != 2 && factor != 4) throw Error(ErrorCode::validation, "oversampling factor must be 1, 2 or 4");
  if (factor == 1) return f;
  const int m = f.n * factor;
  validate_grid(m, f.L);
  const GridField fh = to_frequency(f);
  GridField wide = zero_field(m, f.L, Space::frequency);
  auto slot = [&](int k) { return k < f.n / 2 ? k : k - f.n + m; };
  for (int i = 0; i < f.n; ++i) {
    for (int j = 0; j < f.n; ++j) wide.at(slot(i), slot(j)) = fh.at(i, j);
  }
  return to_physical(wide);
}

NormResult lp_norm(const GridField& f, double p) {
  if (f.space != Space::physical) throw Error(ErrorCode::validation, "lp_norm needs a physical field");
  if (!(p >= 1.0)) throw Error(ErrorCode::validation, "p must be >= 1");
  if (p > 2.0 && 2 * f.n <= kMaxGrid) return lp_norm_sampled(oversample(f, 2), p);
  return lp_norm_sampled(f, p);
}

NormResult lp_norm_sampled(const GridField& f, double p) {
  const double ring = 0.9 * f.L;
  double mx = 0.0, mx_ring = 0.0;
  for (int i = 0; i < f.n; ++i) {
    for (int j = 0; j < f.n; ++j) {
      const double a = std::abs(f.at(i, j));
      mx = std::max(mx, a);
      if (std::max(std::abs(f.x(i)), std::abs(f.x(j))) >= ring) mx_ring = std::max(mx_ring, a);
    }
  }
  NormResult out;
  if (mx == 0.0) return out;
  if (std::isinf(p)) {
    out.value = mx;
    out.boundary_fraction = mx_ring / mx;
    return out;
  }
  NeumaierSum total, outer;
  for (int i = 0; i < f.n; ++i) {
    const bool row_ring = std::abs(f.x(i)) >= ring;
    for (int j = 0; j < f.n; ++j) {
      const double v = std::pow(std::abs(f.at(i, j)) / mx, p);
      total.add(v);
      if (row_ring || std::abs(f.x(j)) >= ring) outer.add(v);
    }
  }
  const double h2 = f.h() * f.h();
  out.value = mx * std::pow(h2 * total.value(), 1.0 / p);
  out.boundary_fraction = outer.value() / total.value();
  return out;
}

double frequency_l2_norm(const GridField& f) {
  if (f.space != Space::frequency) throw Error(ErrorCode::validation, "frequency_l2_norm needs a frequency field");
  NeumaierSum s;
  for (const auto& v : f.samples) s.add(std::norm(v));
  return std::sqrt(s.value()) / (2.0 * f.L);
}

EtaConvergence eta_convergence(const GridField& g, const Phase& phase, double delta, const DecayLaw& law,
                               const std::vector<double>& eta, double q, double tol) {
  if (eta.size() < 3) throw Error(ErrorCode::validation, "eta sequence needs at least 3 values");
  for (std::size_t i = 1; i < eta.size(); ++i) {
    if (!(eta[i] < eta[i - 1])) throw Error(ErrorCode::validation, "eta sequence must decrease");
  }
  EtaConvergence out;
  out.eta = eta;
  GridField ghat = frequency_of(g);
  GridField prev = fractional_solve(ghat, phase, delta, eta[0], law);
  for (std::size_t k = 1; k < eta.size(); ++k) {
    GridField cur = fractional_solve(ghat, phase, delta, eta[k], law);
    GridField diff = cur;
    for (std::size_t i = 0; i < diff.samples.size(); ++i) diff.samples[i] -= prev.samples[i];
    out.differences.push_back(lp_norm(diff, q).value);
    out.last_norm = lp_norm(cur, q).value;
    prev = std::move(cur);
  }
  const std::size_t m = out.differences.size();
  const bool small = out.differences[m - 1] <= tol * out.last_norm;
  const bool decreasing = out.differences[m - 1] <= out.differences[m - 2];
  out.converged = small && decreasing;
  if (!out.converged) {
    throw Error(ErrorCode::not_converging, "eta sequence exhausted with last relative difference " +
                                               std::to_string(out.differences[m - 1] / std::max(out.last_norm, 1e-300)));
  }
  return out;
}

std::vector<double> default_t_grid() { return logspace(1.0, 100.0, 12); }

DecayCheckReport check_dispersive_decay(const Phase& phase, const DecayLaw& law, double p, double q,
                                        const std::vector<double>& t_grid, const GridParams& grid) {
  return decay_check(Flow::dispersive, phase, law, p, q, t_grid, grid);
}

DecayCheckReport check_dissipative_decay(const Phase& phase, const DecayLaw& law, double p, double q,
                                         const std::vector<double>& t_grid, const GridParams& grid) {
  return decay_check(Flow::dissipative, phase, law, p, q, t_grid, grid);
}

FractionalBoundReport check_fractional_bound(const Phase& phase, const DecayLaw& law, double delta, double p, double q,
                                             const std::vector<DatumSpec>& corpus, const GridParams& grid, double eta) {
  const double eps = law.epsilon.to_double();
  if (!(delta < eps)) throw Error(ErrorCode::delta_too_large, "delta must be below epsilon = " + law.epsilon.str());
  validate_exponents(p, q);
  const double inv_q = std::isinf(q) ? 0.0 : 1.0 / q;
  const double e = inv_q - 1.0 / p + 0.5 + delta / (2.0 * eps);
  if (e > 1e-15) throw Error(ErrorCode::hypothesis_violated, "exponents need 1/q - 1/p + 1/2 + delta/(2 eps) <= 0");
  if (std::abs(e) <= 1e-15 && (law.m != 0 || p == 1.0 || std::isinf(q))) {
    throw Error(ErrorCode::hypothesis_violated, "the endpoint case needs m = 0, p != 1 and q != inf");
  }
  if (corpus.empty()) throw Error(ErrorCode::validation, "datum corpus is empty");
  FractionalBoundReport rep;
  auto ratio = [&](const DatumSpec& d, int n, double L) {
    GridField g = make_datum(d, n, L);
    GridField f = fractional_solve(g, phase, delta, eta, law);
    return lp_norm(f, q).value / lp_norm(g, p).value;
  };
  for (const auto& d : corpus) {
    rep.ratios.push_back(ratio(d, grid.n, grid.L));
    rep.ratios_refined.push_back(ratio(d, 2 * grid.n, 2 * grid.L));
  }
  rep.max_ratio = *std::max_element(rep.ratios.begin(), rep.ratios.end());
  rep.max_ratio_refined = *std::max_element(rep.ratios_refined.begin(), rep.ratios_refined.end());
  rep.relative_change = std::abs(rep.max_ratio_refined - rep.max_ratio) / rep.max_ratio;
  rep.bounded = rep.max_ratio_refined <= 1.1 * rep.max_ratio;
  return rep;
}

GridField kernel_convolution(const GridField& g, const Phase& phase, double t, const BumpSpec& cutoff,
                             const QuadOptions& opt, int images) {
  if (images < 0 || images > 4) throw Error(ErrorCode::validation, "images must lie in [0, 4]");
  GridField gp = g.space == Space::physical ? g : to_physical(g);
  const int n = gp.n;
  const double h = gp.h();
  const long span = static_cast<long>(images) * n;
  std::vector<std::complex<double>> kernel(static_cast<std::size_t>(n) * n);
  auto offset = [n](int i) { return static_cast<long>(i < n / 2 ? i : i - n); };
  auto check = [](const std::vector<Quad2DResult>& values) {
    for (const auto& v : values) {
      if (!v.converged) throw Error(ErrorCode::budget_exceeded, "kernel quadrature did not converge");
    }
  };
  if (is_radial(phase)) {
    // Quintic Lagrange interpolation on a uniform radial table.
    const double dr = h / 4;
    const double rmax = std::sqrt(2.0) * h * double(span + n / 2) + 4 * dr;
    const std::size_t m = static_cast<std::size_t>(std::ceil(rmax / dr)) + 4;
    std::vector<std::array<double, 2>> pts(m);
    for (std::size_t k = 0; k < m; ++k) pts[k] = {dr * double(k), 0.0};
    const std::vector<Quad2DResult> table = kernel_T_grid(phase, t, cutoff, pts, opt);
    check(table);
    auto at = [&](double r) {
      const double u = r / dr;
      long k0 = std::clamp(static_cast<long>(std::floor(u)) - 2, 0L, static_cast<long>(m) - 6);
      std::complex<double> sum = 0.0;
      for (long a = 0; a < 6; ++a) {
        double w = 1.0;
        for (long b = 0; b < 6; ++b) {
          if (b != a) w *= (u - double(k0 + b)) / double(a - b);
        }
        sum += w * table[static_cast<std::size_t>(k0 + a)].value;
      }
      return sum;
    };
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        std::complex<double> sum = 0.0;
        for (long a = -span; a <= span; a += n) {
          for (long b = -span; b <= span; b += n) {
            const double di = double(offset(i) + a), dj = double(offset(j) + b);
            sum += at(h * std::sqrt(di * di + dj * dj));
          }
        }
        kernel[static_cast<std::size_t>(i) * n + j] = sum;
      }
    }
  } else {
    const bool even = is_even_even(phase);
    std::map<std::array<long, 2>, std::size_t> index;
    std::vector<std::array<double, 2>> points;
    std::vector<std::vector<std::size_t>> slots(kernel.size());
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        for (long a = -span; a <= span; a += n) {
          for (long b = -span; b <= span; b += n) {
            std::array<long, 2> key{offset(i) + a, offset(j) + b};
            if (even) key = {std::labs(key[0]), std::labs(key[1])};
            auto [it, fresh] = index.try_emplace(key, points.size());
            if (fresh) points.push_back({h * double(key[0]), h * double(key[1])});
            slots[static_cast<std::size_t>(i) * n + j].push_back(it->second);
          }
        }
      }
    }
    const std::vector<Quad2DResult> values = kernel_T_grid(phase, t, cutoff, points, opt);
    check(values);
    for (std::size_t k = 0; k < kernel.size(); ++k) {
      for (std::size_t s : slots[k]) kernel[k] += values[s].value;
    }
  }
  std::vector<std::complex<double>> data = gp.samples;
  const double norm = 1.0 / (4.0 * M_PI * M_PI);
  dft2(kernel, n, FFTW_FORWARD);
  dft2(data, n, FFTW_FORWARD);
  const double w = norm * h * h / (double(n) * double(n));
  for (std::size_t k = 0; k < data.size(); ++k) data[k] *= kernel[k] * w;
  dft2(data, n, FFTW_BACKWARD);
  GridField out = gp;
  out.samples = std::move(data);
  return out;
}

double relative_l2_error(const GridField& a, const GridField& b) {
  if (a.n != b.n || a.space != b.space) throw Error(ErrorCode::validation, "fields live on different grids");
  NeumaierSum num, den;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    num.add(std::norm(a.samples[i] - b.samples[i]));
    den.add(std::norm(b.samples[i]));
  }
  return std::sqrt(num.value() / den.value());
}

}  // namespace osc
