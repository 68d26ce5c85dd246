#include "osclab/resolution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "osclab/error.hpp"
#include "osclab/numeric.hpp"
#include "osclab/stats.hpp"

namespace osc {

namespace {

double binomial(int n, int k) {
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

// Relative step for a k-th central difference: 1e-4, widened where rounding would dominate.
double relative_step(int k) {
  return std::max(1e-4, std::pow(std::numeric_limits<double>::epsilon(), 1.0 / (k + 2)));
}

double central_difference(const Field2D& f, double x, double y, int l, int m) {
  if (l == 0 && m == 0) return f(x, y);
  double hx = x * relative_step(l);
  double hy = (y != 0.0 ? std::abs(y) : 1.0) * relative_step(m);
  NeumaierSum sum;
  for (int i = 0; i <= l; ++i) {
    for (int j = 0; j <= m; ++j) {
      double w = binomial(l, i) * binomial(m, j) * (((i + j) % 2) ? -1.0 : 1.0);
      sum.add(w * f(x + (0.5 * l - i) * hx, y + (0.5 * m - j) * hy));
    }
  }
  return sum.value() / (std::pow(hx, l) * std::pow(hy, m));
}

double falling(double a, int k) {
  double v = 1.0;
  for (int i = 0; i < k; ++i) v *= a - i;
  return v;
}

std::vector<double> x_samples(const Wedge& w, int grid) { return logspace(w.b * 1e-3, w.b, grid); }

}  // namespace

ShearMap make_shear(int sign, std::vector<ShearTerm> psi) {
  if (sign != 1 && sign != -1) throw Error(ErrorCode::validation, "shear sign must be +1 or -1");
  std::int64_t common = 1;
  for (std::size_t i = 0; i < psi.size(); ++i) {
    if (psi[i].exponent < Rational(1)) throw Error(ErrorCode::validation, "shear exponents must be >= 1");
    if (i > 0 && !(psi[i - 1].exponent < psi[i].exponent)) {
      throw Error(ErrorCode::validation, "shear exponents must be strictly increasing");
    }
    if (!std::isfinite(psi[i].coeff)) throw Error(ErrorCode::validation, "non-finite shear coefficient");
    common = std::lcm(common, psi[i].exponent.den());
  }
  if (common > 64) throw Error(ErrorCode::validation, "shear exponents need a common denominator <= 64");
  return ShearMap{sign, std::move(psi)};
}

ShearMap inverse_shear(const ShearMap& s) {
  ShearMap inv = s;
  for (auto& t : inv.psi) t.coeff = -s.sign * t.coeff;
  return inv;
}

ShearedPhase apply_shear(const Polynomial& p, const ShearMap& shear) {
  ShearedPhase out;
  bool integer = std::all_of(shear.psi.begin(), shear.psi.end(), [](const ShearTerm& t) { return t.exponent.is_integer(); });
  if (integer) {
    auto exact_of = [](double c) -> std::optional<Rational> {
      if (std::abs(c) < 9e15 && c == std::nearbyint(c)) return Rational(static_cast<std::int64_t>(c));
      return std::nullopt;
    };
    Polynomial y_new = Polynomial::monomial(0, 1, shear.sign, Rational(shear.sign));
    for (const auto& t : shear.psi) {
      y_new = y_new + Polynomial::monomial(static_cast<int>(t.exponent.num()), 0, t.coeff, exact_of(t.coeff));
    }
    Polynomial composed;
    for (const auto& t : p.terms()) {
      composed = composed + (Polynomial::monomial(t.alpha, 0, 1.0, Rational(1)) * y_new.pow(t.beta)).scaled(t.coeff, t.exact);
    }
    Polynomial exact = composed.pruned(1e-13);
    out.exact = exact;
    out.eval = [exact](double x, double y) { return exact.eval(x, y); };
    return out;
  }
  out.positive_x_only = true;
  out.eval = [p, shear](double x, double y) {
    if (!(x > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    NeumaierSum psi;
    for (const auto& t : shear.psi) psi.add(t.coeff * std::pow(x, t.exponent.to_double()));
    return p.eval(x, shear.sign * y + psi.value());
  };
  return out;
}

ShearedPhase apply_shear(const Phase& phase, const ShearMap& shear) { return apply_shear(phase.poly(), shear); }

double WedgeBound::at(double x) const { return coeff * std::pow(x, exponent.to_double()); }

Wedge make_wedge(double b, WedgeBound upper, std::optional<WedgeBound> lower) {
  if (!(b > 0.0)) throw Error(ErrorCode::validation, "wedge needs b > 0");
  if (!(upper.coeff > 0.0)) throw Error(ErrorCode::validation, "wedge upper coefficient must be positive");
  if (upper.exponent < Rational(1)) throw Error(ErrorCode::validation, "wedge upper exponent must be >= 1");
  if (lower) {
    if (!(lower->coeff > 0.0)) throw Error(ErrorCode::validation, "wedge lower coefficient must be positive");
    if (!(upper.exponent < lower->exponent)) {
      throw Error(ErrorCode::validation, "wedge lower exponent must exceed the upper one");
    }
  }
  return Wedge{b, upper, lower};
}

MonomializationReport check_comparability(const ShearedPhase& f, const Wedge& wedge, Rational alpha_i, int beta_i,
                                          const ComparabilityOptions& opt) {
  if (opt.grid < 16) throw Error(ErrorCode::validation, "comparability grid must be >= 16");
  if (beta_i < 0) throw Error(ErrorCode::validation, "beta_i must be nonnegative");
  if (opt.l_max < 0 || Rational(opt.l_max) > alpha_i) throw Error(ErrorCode::validation, "l_max must be <= floor(alpha_i)");
  if (opt.m_max < 0 || opt.m_max > beta_i) throw Error(ErrorCode::validation, "m_max must be <= beta_i");
  if (!(opt.delta_tol > 0.0 && opt.delta_tol < 1.0)) throw Error(ErrorCode::validation, "delta_tol must lie in (0, 1)");

  const double alpha = alpha_i.to_double();
  auto xs = x_samples(wedge, opt.grid);
  std::vector<std::pair<double, double>> pts;
  for (double x : xs) {
    double lo = wedge.lower ? wedge.lower->at(x) : 0.0;
    double hi = wedge.upper.at(x);
    if (!(hi > lo)) throw Error(ErrorCode::degenerate_wedge, "wedge is empty at x = " + std::to_string(x));
    for (double u : logspace(1e-2, 0.99, opt.grid)) pts.emplace_back(x, lo + (hi - lo) * u);
  }

  MonomializationReport rep;
  rep.alpha_i = alpha_i;
  rep.beta_i = beta_i;
  rep.exact_derivatives = f.exact.has_value();
  const double bound = (1.0 + opt.delta_tol) / (1.0 - opt.delta_tol);
  rep.pass = true;
  for (int l = 0; l <= opt.l_max; ++l) {
    for (int m = 0; m <= opt.m_max; ++m) {
      std::optional<Polynomial> deriv;
      if (f.exact) deriv = partial_derivative(*f.exact, l, m);
      double lo = INFINITY, hi = -INFINITY, amin = INFINITY, amax = 0.0;
      bool same_sign = true;
      int sign = 0;
      for (auto [x, y] : pts) {
        double d = deriv ? deriv->eval(x, y) : central_difference(f.eval, x, y, l, m);
        double model = std::pow(x, alpha - l);
        if (beta_i > 0) model *= std::pow(y, beta_i - m);
        double ratio = d / model;
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
        amin = std::min(amin, std::abs(ratio));
        amax = std::max(amax, std::abs(ratio));
        int s = ratio > 0 ? 1 : (ratio < 0 ? -1 : 0);
        if (s == 0 || (sign != 0 && s != sign)) same_sign = false;
        if (sign == 0) sign = s;
      }
      OrderRatio o;
      o.l = l;
      o.m = m;
      o.ratio_min = lo;
      o.ratio_max = hi;
      o.constant = sign * std::sqrt(amin * amax);
      o.pass = same_sign && std::isfinite(amax) && amax <= bound * amin;
      rep.pass = rep.pass && o.pass;
      if (l == 0 && m == 0) rep.d_i = o.constant;
      rep.orders.push_back(o);
    }
  }
  return rep;
}

PrincipalPart principal_part(const Polynomial& f, Rational M) {
  if (f.empty()) throw Error(ErrorCode::validation, "principal part of the zero polynomial");
  if (!(M > Rational(0))) throw Error(ErrorCode::validation, "weight M must be positive");
  PrincipalPart pp;
  bool first = true;
  for (const auto& t : f.terms()) {
    Rational w = Rational(t.alpha) + M * Rational(t.beta);
    if (first || w < pp.alpha_min) pp.alpha_min = w;
    first = false;
  }
  std::vector<Term> r;
  for (const auto& t : f.terms()) {
    if (Rational(t.alpha) + M * Rational(t.beta) == pp.alpha_min) {
      Term q = t;
      q.alpha = 0;
      r.push_back(q);
    }
  }
  pp.r = Polynomial(std::move(r));
  return pp;
}

PrincipalPartReport check_principal_part(const ShearedPhase& f, const Wedge& wedge, const Polynomial& r,
                                         Rational alpha_i, const PrincipalPartOptions& opt) {
  if (wedge.lower) throw Error(ErrorCode::validation, "principal-part check needs a wedge with zero lower boundary");
  if (opt.grid < 16) throw Error(ErrorCode::validation, "grid must be >= 16");
  if (opt.l_max < 0) throw Error(ErrorCode::validation, "l_max must be nonnegative");
  for (const auto& t : r.terms()) {
    if (t.alpha != 0) throw Error(ErrorCode::validation, "r must be a polynomial in y alone");
  }
  const double H = wedge.upper.coeff;
  const double M = wedge.upper.exponent.to_double();
  const double alpha = alpha_i.to_double();

  // Sign changes or near-zeros of r / y^k on [0, H], k the lowest power of y in r.
  int k = kMaxExponent;
  for (const auto& t : r.terms()) k = std::min(k, t.beta);
  std::vector<Term> reduced;
  for (Term t : r.terms()) {
    t.beta -= k;
    reduced.push_back(t);
  }
  const Polynomial rs(std::move(reduced));
  const int scan = 4096;
  double rmax = 0.0;
  std::vector<double> rv(scan + 1);
  for (int i = 0; i <= scan; ++i) {
    rv[i] = rs.eval(0.0, H * i / scan);
    rmax = std::max(rmax, std::abs(rv[i]));
  }
  if (rmax == 0.0) throw Error(ErrorCode::root_in_range, "r vanishes identically");
  for (int i = 0; i <= scan; ++i) {
    double y = H * i / scan;
    if (std::abs(rv[i]) <= 1e-12 * rmax) throw Error(ErrorCode::root_in_range, "r vanishes at y = " + std::to_string(y));
    if (i > 0 && (rv[i] > 0) != (rv[i - 1] > 0)) {
      double a = H * (i - 1) / scan, b = y;
      for (int it = 0; it < 60; ++it) {
        double mid = 0.5 * (a + b);
        if ((rs.eval(0.0, mid) > 0) == (rv[i - 1] > 0)) a = mid; else b = mid;
      }
      throw Error(ErrorCode::root_in_range, "r changes sign near y = " + std::to_string(0.5 * (a + b)));
    }
  }

  std::optional<Polynomial> residual;
  if (f.exact && wedge.upper.exponent.is_integer() && alpha_i.is_integer()) {
    int Mi = static_cast<int>(wedge.upper.exponent.num());
    std::vector<Term> terms;
    for (const auto& t : f.exact->terms()) {
      Term q = t;
      q.alpha = t.alpha + Mi * t.beta;
      terms.push_back(q);
    }
    for (const auto& t : r.terms()) {
      Term q = t;
      q.alpha = static_cast<int>(alpha_i.num());
      q.coeff = -t.coeff;
      if (t.exact) q.exact = -*t.exact;
      terms.push_back(q);
    }
    residual = Polynomial(std::move(terms)).pruned(1e-13);
  }
  Field2D e = [&](double x, double y) { return f.eval(x, std::pow(x, M) * y) - std::pow(x, alpha) * r.eval(0.0, y); };

  auto xs = x_samples(wedge, opt.grid);
  auto ys = linspace(0.0, H, opt.grid);
  PrincipalPartReport rep;
  rep.delta_est = INFINITY;
  for (int l = 0; l <= opt.l_max; ++l) {
    std::optional<Polynomial> d;
    if (residual) d = partial_derivative(*residual, l, 0);
    std::vector<double> lx, ly;
    bool zero = true;
    for (double x : xs) {
      double g = 0.0, scale = 0.0;
      for (double y : ys) {
        double v = d ? d->eval(x, y) : central_difference(e, x, y, l, 0);
        g = std::max(g, std::abs(v));
        scale = std::max(scale, std::abs(falling(alpha, l) * std::pow(x, alpha - l) * r.eval(0.0, y)));
      }
      double floor = (d ? 1e-13 : 1e-6) * std::max(scale, std::pow(x, alpha - l));
      if (g > floor) {
        zero = false;
        lx.push_back(x);
        ly.push_back(g);
      }
    }
    ResidualOrder o;
    o.l = l;
    o.zero_residual = zero || lx.size() < 3;
    if (o.zero_residual) {
      o.fitted_exponent = INFINITY;
      o.delta_est = INFINITY;
    } else {
      TrendTest t = trend_test(lx, ly, INFINITY, 0.95, 0.0);
      o.fitted_exponent = t.slope;
      o.delta_est = t.slope - (alpha - l);
    }
    rep.delta_est = std::min(rep.delta_est, o.delta_est);
    rep.orders.push_back(o);
  }
  rep.pass = rep.delta_est > opt.min_delta;
  return rep;
}

}  // namespace osc
