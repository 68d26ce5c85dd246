#include "osclab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "osclab/error.hpp"
#include "osclab/numeric.hpp"
#include "osclab/parallel.hpp"

namespace osc {

namespace {

#ifndef OSC_NK
#define OSC_NK 21
#endif
#ifndef OSC_PV
#define OSC_PV 10.0
#endif
constexpr int kNodes = OSC_NK;
// Largest phase change per panel that the embedded Gauss rule still resolves.
constexpr double kPanelVariation = OSC_PV;
constexpr double kDropExponent = 46.0;
constexpr int kInitialAnglePanels = 32;
constexpr int kMaxRayDepth = 24;
constexpr int kMaxAngleDepth = 30;

struct Rule {
  std::array<double, kNodes> x{};
  std::array<double, kNodes> wk{};
  std::array<double, kNodes> wg{};
};

const Rule& gk15() {
  static const Rule rule = [] {
    using Kronrod = boost::math::quadrature::gauss_kronrod<double, kNodes>;
    using Gauss = boost::math::quadrature::gauss<double, kNodes / 2>;
    Rule r;
    const auto& ka = Kronrod::abscissa();
    const auto& kw = Kronrod::weights();
    const auto& ga = Gauss::abscissa();
    const auto& gw = Gauss::weights();
    constexpr int mid = kNodes / 2;
    for (int i = 0; i <= mid; ++i) {
      r.x[mid + i] = ka[i];
      r.x[mid - i] = -ka[i];
      r.wk[mid + i] = r.wk[mid - i] = kw[i];
      double g = 0.0;
      for (std::size_t j = 0; j < ga.size(); ++j) {
        if (std::abs(ga[j] - ka[i]) < 1e-14) g = gw[j];
      }
      r.wg[mid + i] = r.wg[mid - i] = g;
    }
    return r;
  }();
  return rule;
}

double ess(double t) noexcept { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }
double ess_prime(double t) noexcept { return t > 0.0 ? std::exp(-1.0 / t) / (t * t) : 0.0; }

enum class Kind { oscillatory, damped };

struct Problem {
  Kind kind = Kind::oscillatory;
  double lambda = 0.0;
  double mu1 = 0.0;
  double mu2 = 0.0;
  BumpSpec bump;
  double ray_tol = 0.0;
  std::vector<Term> terms;
  int degree = 0;
};

struct RayResult {
  std::complex<double> value;
  double error = 0.0;
  std::int64_t panels = 0;
};

// Integrates a(r) exp(E(r)) r dr along one ray, where E carries lambda S(r e) and mu.e r.
class RayIntegrator {
 public:
  explicit RayIntegrator(const Problem& pb)
      : pb_(pb), p_(pb.degree + 1), dp_(pb.degree + 1), taylor_(pb.degree + 1) {
    std::size_t n = kBatch * kNodes;
    for (auto* v : {&r_, &q_, &arg_, &mag_, &sin_, &cos_, &tmp_}) v->resize(n);
  }

  RayResult integrate(double theta) {
    setup(theta);
    RayResult out;
    partition(out);
    const double density = pb_.ray_tol / pb_.bump.rho;
    int depth = 0;
    while (!work_.empty()) {
      next_.clear();
      for (std::size_t start = 0; start < work_.size(); start += kBatch) {
        std::size_t n = std::min(kBatch, work_.size() - start);
        evaluate(&work_[start], n);
        out.panels += static_cast<std::int64_t>(n);
        for (std::size_t i = 0; i < n; ++i) {
          const Segment& sg = work_[start + i];
          double err = std::abs(k_[i] - g_[i]);
          if (err <= density * (sg.b - sg.a) || depth >= kMaxRayDepth) {
            out.value += k_[i];
            out.error += err;
          } else {
            double m = 0.5 * (sg.a + sg.b);
            next_.push_back({sg.a, m});
            next_.push_back({m, sg.b});
          }
        }
      }
      std::swap(work_, next_);
      ++depth;
    }
    return out;
  }

 private:
  struct Segment {
    double a;
    double b;
  };
  static constexpr std::size_t kBatch = 48;

  void setup(double theta) {
    double c = std::cos(theta);
    double s = std::sin(theta);
    std::fill(p_.begin(), p_.end(), 0.0);
    for (const auto& t : pb_.terms) p_[t.alpha + t.beta] += pb_.lambda * t.coeff * ipow(c, t.alpha) * ipow(s, t.beta);
    for (int k = 1; k <= pb_.degree; ++k) dp_[k - 1] = k * p_[k];
    dp_[pb_.degree] = 0.0;
    nu_ = pb_.mu1 * c + pb_.mu2 * s;
  }

  // Splits [0, rho] into panels of bounded phase change; damped stretches below exp(-46) are dropped.
  void partition(RayResult& out) {
    work_.clear();
    const double rho = pb_.bump.rho;
    const double rho0 = pb_.bump.rho0;
    double r = 0.0;
    while (r < rho) {
      double stop = r < rho0 ? rho0 : rho;
      double hcap = r < rho0 ? 0.5 * rho0 : 0.5 * (rho - rho0);
      double hmax = std::min(stop - r, hcap);
      if (stop - r < 1.5 * hmax) hmax = stop - r;
      if (pb_.kind == Kind::damped) {
        double dropped = try_drop(r, hmax);
        if (dropped > 0.0) {
          out.error += bound_dropped(r, r + dropped);
          r = (r + dropped >= stop - 1e-15 * rho) ? stop : r + dropped;
          continue;
        }
      }
      double h = step(r, hmax, 1e-9 * rho);
      if (stop - r - h < 0.25 * h) h = stop - r;
      double b = (r + h >= stop - 1e-15 * rho) ? stop : r + h;
      work_.push_back({r, b});
      r = b;
    }
  }

  double horner(const std::vector<double>& q, int deg, double r) const noexcept {
    double v = q[deg];
    for (int k = deg - 1; k >= 0; --k) v = v * r + q[k];
    return v;
  }

  double rate_at(double r) const noexcept {
    double d = horner(dp_, pb_.degree - 1, r);
    if (pb_.kind == Kind::oscillatory) return std::abs(d + nu_);
    return std::abs(d) + std::abs(nu_);
  }

  double max_rate(double r, double h) const noexcept {
    return std::max({rate_at(r), rate_at(r + 0.5 * h), rate_at(r + h)});
  }

  // Largest h <= hmax whose sampled phase change stays below kPanelVariation.
  double step(double r, double hmax, double hmin) const noexcept {
    double rate = max_rate(r, hmax);
    if (rate * hmax <= kPanelVariation) return hmax;
    double h = std::max(kPanelVariation / rate, hmin);
    for (int it = 0; it < 4; ++it) {
      double trial = std::min(hmax, kPanelVariation / max_rate(r, h));
      if (trial <= h * 1.01 || max_rate(r, trial) * trial > kPanelVariation) break;
      h = trial;
    }
    return h;
  }

  // Lower bound of lambda S on [r, r + h] from the Taylor expansion at r.
  double lower_bound(double r, double h) {
    int n = pb_.degree;
    std::copy(p_.begin(), p_.end(), taylor_.begin());
    for (int k = 0; k < n; ++k) {
      for (int j = n - 1; j >= k; --j) taylor_[j] += r * taylor_[j + 1];
    }
    double lb = taylor_[0];
    double hk = 1.0;
    for (int k = 1; k <= n; ++k) {
      hk *= h;
      lb += std::min(0.0, taylor_[k]) * hk;
    }
    return lb;
  }

  double try_drop(double r, double hmax) {
    if (horner(p_, pb_.degree, r) <= kDropExponent) return 0.0;
    double h = hmax;
    for (int i = 0; i < 12; ++i, h *= 0.5) {
      if (lower_bound(r, h) > kDropExponent) return h;
    }
    return 0.0;
  }

  double bound_dropped(double a, double b) const noexcept {
    return std::exp(-kDropExponent) * 0.5 * (b * b - a * a);
  }

  // Kronrod and Gauss sums for n consecutive segments, evaluated as one vector pass.
  void evaluate(const Segment* seg, std::size_t n) {
    const Rule& rule = gk15();
    const std::size_t m = n * kNodes;
    const int deg = pb_.degree;
    double* r = r_.data();
    double* q = q_.data();
    double* arg = arg_.data();
    double* mag = mag_.data();
    double* tmp = tmp_.data();
    for (std::size_t i = 0; i < n; ++i) {
      const double c = 0.5 * (seg[i].a + seg[i].b);
      const double h = 0.5 * (seg[i].b - seg[i].a);
      for (int j = 0; j < kNodes; ++j) r[i * kNodes + j] = c + h * rule.x[j];
    }
    for (std::size_t j = 0; j < m; ++j) q[j] = p_[deg];
    for (int k = deg - 1; k >= 0; --k) {
      const double pk = p_[k];
      for (std::size_t j = 0; j < m; ++j) q[j] = q[j] * r[j] + pk;
    }
    // r * bump(r), with bump = 1 / (1 + exp(1/(1-s) - 1/s)) on the transition.
    const double rho0 = pb_.bump.rho0;
    const double inv_w = 1.0 / (pb_.bump.rho - rho0);
    for (std::size_t j = 0; j < m; ++j) {
      double s = std::min(std::max((r[j] - rho0) * inv_w, 1e-6), 1.0 - 1e-6);
      tmp[j] = std::min(std::max(1.0 / (1.0 - s) - 1.0 / s, -700.0), 700.0);
    }
    exp_block(tmp, mag, m);
    for (std::size_t j = 0; j < m; ++j) mag[j] = r[j] <= rho0 ? r[j] : r[j] / (1.0 + mag[j]);
    if (pb_.kind == Kind::oscillatory) {
      for (std::size_t j = 0; j < m; ++j) arg[j] = q[j] + nu_ * r[j];
    } else {
      for (std::size_t j = 0; j < m; ++j) {
        arg[j] = nu_ * r[j];
        tmp[j] = -q[j];
      }
      exp_block(tmp, q, m);
      for (std::size_t j = 0; j < m; ++j) mag[j] *= q[j];
    }
    sincos_block(arg, sin_.data(), cos_.data(), m);
    for (std::size_t i = 0; i < n; ++i) {
      const double h = 0.5 * (seg[i].b - seg[i].a);
      const double* mg = mag + i * kNodes;
      const double* cs = cos_.data() + i * kNodes;
      const double* sn = sin_.data() + i * kNodes;
      double kr = 0, ki = 0, gr = 0, gi = 0;
      for (int j = 0; j < kNodes; ++j) {
        double mr = mg[j] * cs[j];
        double mi = mg[j] * sn[j];
        kr += rule.wk[j] * mr;
        ki += rule.wk[j] * mi;
        gr += rule.wg[j] * mr;
        gi += rule.wg[j] * mi;
      }
      k_[i] = {kr * h, ki * h};
      g_[i] = {gr * h, gi * h};
    }
  }

  const Problem& pb_;
  std::vector<double> p_;
  std::vector<double> dp_;
  std::vector<double> taylor_;
  double nu_ = 0.0;
  std::vector<Segment> work_;
  std::vector<Segment> next_;
  std::vector<double> r_, q_, arg_, mag_, sin_, cos_, tmp_;
  std::array<std::complex<double>, kBatch> k_{};
  std::array<std::complex<double>, kBatch> g_{};
};

struct AngleState {
  std::complex<double> value;
  double error = 0.0;
  std::int64_t panels = 0;
  std::int64_t budget = 0;
  bool budget_hit = false;
};

void angle_panel(RayIntegrator& ray, double ta, double tb, double tol_density, int depth, AngleState& st) {
  const Rule& rule = gk15();
  const double c = 0.5 * (ta + tb);
  const double h = 0.5 * (tb - ta);
  std::complex<double> k, g;
  double inner = 0.0;
  for (int j = 0; j < kNodes; ++j) {
    RayResult rr = ray.integrate(c + h * rule.x[j]);
    st.panels += rr.panels;
    k += rule.wk[j] * rr.value;
    g += rule.wg[j] * rr.value;
    inner += rule.wk[j] * rr.error;
  }
  ++st.panels;
  k *= h;
  g *= h;
  double err = std::abs(k - g) + h * inner;
  bool out_of_budget = st.panels >= st.budget;
  if (err <= tol_density * (tb - ta) || depth >= kMaxAngleDepth || out_of_budget) {
    if (out_of_budget && err > tol_density * (tb - ta)) st.budget_hit = true;
    st.value += k;
    st.error += err;
    return;
  }
  double m = 0.5 * (ta + tb);
  angle_panel(ray, ta, m, tol_density, depth + 1, st);
  angle_panel(ray, m, tb, tol_density, depth + 1, st);
}

Quad2DResult run(Problem pb, const QuadOptions& opt) {
  if (!(opt.tol > 0.0)) throw Error(ErrorCode::validation, "tolerance must be positive");
  if (opt.panel_budget <= 0) throw Error(ErrorCode::validation, "panel budget must be positive");
  const double two_pi = 2.0 * std::numbers::pi;
  pb.ray_tol = opt.tol / (4.0 * two_pi);
  const int n0 = kInitialAnglePanels;
  std::vector<AngleState> states(n0);
  parallel_for(n0, opt.threads, [&](std::size_t i) {
    RayIntegrator ray(pb);
    AngleState& st = states[i];
    st.budget = std::max<std::int64_t>(1, opt.panel_budget / n0);
    double ta = two_pi * static_cast<double>(i) / n0;
    double tb = two_pi * static_cast<double>(i + 1) / n0;
    angle_panel(ray, ta, tb, 0.75 * opt.tol / two_pi, 0, st);
  });
  Quad2DResult res;
  bool budget_hit = false;
  for (const auto& st : states) {
    res.value += st.value;
    res.abs_error += st.error;
    res.panels += st.panels;
    budget_hit = budget_hit || st.budget_hit;
  }
  res.converged = !budget_hit && res.panels <= opt.panel_budget && res.abs_error <= opt.tol;
  return res;
}

Problem make_problem(Kind kind, const Phase& phase, double lambda, double mu1, double mu2, const BumpSpec& bump) {
  if (!std::isfinite(lambda) || !std::isfinite(mu1) || !std::isfinite(mu2)) {
    throw Error(ErrorCode::validation, "non-finite frequency");
  }
  make_bump(bump.rho, bump.rho0);
  Problem pb;
  pb.kind = kind;
  pb.lambda = lambda;
  pb.mu1 = mu1;
  pb.mu2 = mu2;
  pb.bump = bump;
  pb.terms = phase.terms();
  pb.degree = phase.poly().total_degree();
  return pb;
}

void require_nonnegative(const Phase& phase, const BumpSpec& bump) {
  double smin = 0.0;
  double smax = 0.0;
  const int na = 128;
  const int nr = 64;
  for (int i = 0; i < na; ++i) {
    double th = 2.0 * std::numbers::pi * (i + 0.5) / na;
    for (int j = 1; j <= nr; ++j) {
      double r = bump.rho * j / nr;
      double v = phase.eval(r * std::cos(th), r * std::sin(th));
      smin = std::min(smin, v);
      smax = std::max(smax, std::abs(v));
    }
  }
  if (smin < -1e-12 * std::max(smax, 1e-300)) {
    throw Error(ErrorCode::negative_phase, "phase takes negative values on the support of the cutoff");
  }
}

}  // namespace

BumpSpec make_bump(double rho, std::optional<double> rho0) {
  BumpSpec b;
  b.rho = rho;
  b.rho0 = rho0.value_or(0.5 * rho);
  if (!(b.rho > 0.0) || b.rho > 1.0) throw Error(ErrorCode::validation, "bump radius must lie in (0, 1]");
  if (!(b.rho0 > 0.0) || !(b.rho0 < b.rho)) throw Error(ErrorCode::validation, "plateau radius must lie in (0, rho)");
  return b;
}

double bump_value(const BumpSpec& b, double r) noexcept {
  r = std::abs(r);
  if (r <= b.rho0) return 1.0;
  if (r >= b.rho) return 0.0;
  double s = (r - b.rho0) / (b.rho - b.rho0);
  return 1.0 / (1.0 + std::exp(1.0 / (1.0 - s) - 1.0 / s));
}

double bump_derivative(const BumpSpec& b, double r) noexcept {
  double sign = r < 0.0 ? -1.0 : 1.0;
  r = std::abs(r);
  if (r <= b.rho0 || r >= b.rho) return 0.0;
  double w = b.rho - b.rho0;
  double s = (r - b.rho0) / w;
  double u = ess(1.0 - s);
  double v = ess(s);
  double du = -ess_prime(1.0 - s);
  double dv = ess_prime(s);
  return sign * (du * v - u * dv) / ((u + v) * (u + v) * w);
}

Quad2DResult integrate_T(const Phase& phase, double lambda, double mu1, double mu2, const BumpSpec& bump,
                         const QuadOptions& opt) {
  return run(make_problem(Kind::oscillatory, phase, lambda, mu1, mu2, bump), opt);
}

Quad2DResult integrate_U(const Phase& phase, double lambda, const BumpSpec& bump, const QuadOptions& opt) {
  return integrate_T(phase, lambda, 0.0, 0.0, bump, opt);
}

Quad2DResult integrate_R(const Phase& phase, double lambda, double mu1, double mu2, const BumpSpec& bump,
                         const QuadOptions& opt) {
  if (lambda < 0.0) throw Error(ErrorCode::validation, "damped integral needs lambda >= 0");
  Problem pb = make_problem(Kind::damped, phase, lambda, mu1, mu2, bump);
  require_nonnegative(phase, bump);
  return run(std::move(pb), opt);
}

std::vector<Quad2DResult> kernel_T_grid(const Phase& phase, double t, const BumpSpec& bump,
                                        const std::vector<std::array<double, 2>>& points, const QuadOptions& opt) {
  std::vector<Quad2DResult> out(points.size());
  QuadOptions single = opt;
  single.threads = 1;
  parallel_for(points.size(), opt.threads, [&](std::size_t i) {
    out[i] = integrate_T(phase, t, points[i][0], points[i][1], bump, single);
  });
  return out;
}

Derivatives1D polynomial_1d(std::vector<double> coeffs) {
  return [c = std::move(coeffs)](double t, int k) {
    double v = 0.0;
    for (int j = static_cast<int>(c.size()) - 1; j >= k; --j) {
      double f = 1.0;
      for (int i = 0; i < k; ++i) f *= j - i;
      v = v * t + f * c[j];
    }
    return v;
  };
}

Quad1DResult oscillatory_1d(const Derivatives1D& f, const Derivatives1D& g, double a, double b, double lambda,
                            double tol) {
  const Rule& rule = gk15();
  Quad1DResult out;
  const double density = tol / (b - a);
  std::function<void(double, double, int)> adapt = [&](double x0, double x1, int depth) {
    double c = 0.5 * (x0 + x1);
    double h = 0.5 * (x1 - x0);
    double arg[kNodes], s[kNodes], co[kNodes], amp[kNodes];
    for (int j = 0; j < kNodes; ++j) {
      double t = c + h * rule.x[j];
      arg[j] = lambda * f(t, 0);
      amp[j] = g(t, 0);
    }
    sincos_block(arg, s, co, kNodes);
    std::complex<double> k, gg;
    for (int j = 0; j < kNodes; ++j) {
      std::complex<double> v(amp[j] * co[j], amp[j] * s[j]);
      k += rule.wk[j] * v;
      gg += rule.wg[j] * v;
    }
    k *= h;
    gg *= h;
    ++out.panels;
    double err = std::abs(k - gg);
    if (err <= density * (x1 - x0) || depth >= 40) {
      out.value += k;
      out.abs_error += err;
      return;
    }
    adapt(x0, c, depth + 1);
    adapt(c, x1, depth + 1);
  };
  double x = a;
  while (x < b) {
    double h = b - x;
    for (int it = 0; it < 3; ++it) {
      double rate = lambda * std::max({std::abs(f(x, 1)), std::abs(f(x + 0.5 * h, 1)), std::abs(f(x + h, 1))});
      if (rate * h <= kPanelVariation) break;
      h = std::max(kPanelVariation / rate, 1e-12 * (b - a));
    }
    if (b - x - h < 0.25 * h) h = b - x;
    adapt(x, x + h, 0);
    x = (x + h >= b) ? b : x + h;
  }
  return out;
}

VdcResult vdc_check_1d(const VdcInput& in) {
  if (!(in.b > in.a)) throw Error(ErrorCode::validation, "empty interval");
  if (in.n < 2) throw Error(ErrorCode::validation, "derivative order n must be at least 2");
  if (!in.f || !in.amplitude) throw Error(ErrorCode::validation, "missing phase or amplitude");
  const int samples = 4096;
  VdcResult res;
  double prev = in.amplitude(in.a, 0);
  for (int i = 0; i <= samples; ++i) {
    double t = in.a + (in.b - in.a) * i / samples;
    double sum = 0.0;
    for (int k = 2; k <= in.n; ++k) sum += std::abs(in.f(t, k));
    double slack = 1e-12 * std::max(1.0, in.C);
    if (sum < in.C_lower - slack || sum > in.C + slack) {
      throw Error(ErrorCode::hypothesis_violated, "derivative sum leaves [C', C] at t = " + std::to_string(t));
    }
    double g = in.amplitude(t, 0);
    res.amplitude_sup = std::max(res.amplitude_sup, std::abs(g));
    if (i > 0) res.amplitude_variation += std::abs(g - prev);
    prev = g;
  }
  Quad1DResult q = oscillatory_1d(in.f, in.amplitude, in.a, in.b, in.lambda, in.tol);
  res.lhs = std::abs(q.value);
  res.lhs_error = q.abs_error;
  res.rhs = in.C_bound * (res.amplitude_sup + res.amplitude_variation) *
            std::pow(1.0 + std::abs(in.lambda), -1.0 / in.n);
  res.holds = res.lhs <= res.rhs;
  return res;
}

}  // namespace osc
