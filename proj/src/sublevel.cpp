#include "osclab/sublevel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <random>
#include <sstream>

#include "osclab/numeric.hpp"
#include "osclab/parallel.hpp"

namespace osc {

namespace {

bool is_integer_exponent(double a) { return a == std::floor(a); }

Interval power_range(double lo, double hi, double a) {
  if (a == 0.0) return {1.0, 1.0};
  double pl = std::pow(lo, a), ph = std::pow(hi, a);
  if (lo >= 0.0) return {pl, ph};
  const long k = static_cast<long>(a);
  const bool even = (k % 2) == 0;
  if (hi <= 0.0) return even ? Interval{ph, pl} : Interval{pl, ph};
  return even ? Interval{0.0, std::max(pl, ph)} : Interval{pl, ph};
}

Interval multiply(Interval u, Interval v) {
  double p[4] = {u.lo * v.lo, u.lo * v.hi, u.hi * v.lo, u.hi * v.hi};
  return {*std::min_element(p, p + 4), *std::max_element(p, p + 4)};
}

enum class State { inside, outside, boundary };

struct Cell {
  double x0, x1, y0, y1;
  int dx, dy;
  double width;
  std::int64_t id;
  double area() const { return (x1 - x0) * (y1 - y0); }
};

struct ByArea {
  bool operator()(const Cell& a, const Cell& b) const {
    double aa = a.area(), ab = b.area();
    if (aa != ab) return aa < ab;
    return a.id > b.id;
  }
};

class Classifier {
 public:
  Classifier(const SublevelFunction& f, const SublevelRegion& region, double r) : f_(f), region_(region), r_(r) {}

  State classify(Cell& c) const {
    State w = wedge_state(c);
    if (w == State::outside) {
      c.width = 0.0;
      return State::outside;
    }
    Interval v = f_.range(c.x0, c.x1, c.y0, c.y1);
    c.width = v.hi - v.lo;
    if (v.lo >= r_ || v.hi <= -r_) return State::outside;
    bool f_inside = v.lo > -r_ && v.hi < r_;
    if (f_inside && w == State::inside) return State::inside;
    return State::boundary;
  }

  // Split across the direction in which the relevant level curve varies most over the cell.
  bool prefer_x_split(const Cell& c) const {
    const double w = c.x1 - c.x0, h = c.y1 - c.y0;
    const double x = 0.5 * (c.x0 + c.x1), y = 0.5 * (c.y0 + c.y1);
    double gx, gy;
    Interval v = f_.range(c.x0, c.x1, c.y0, c.y1);
    if (v.lo > -r_ && v.hi < r_ && region_.wedge) {
      const Wedge& wd = *region_.wedge;
      const WedgeBound& near = (wd.lower && std::abs(y - wd.lower->at(x)) < std::abs(y - wd.upper.at(x))) ? *wd.lower : wd.upper;
      double e = near.exponent.to_double();
      gx = near.coeff * e * std::pow(x, e - 1.0);
      gy = 1.0;
    } else {
      auto g = f_.gradient(x, y);
      gx = g[0];
      gy = g[1];
    }
    double sx = std::abs(gx) * w, sy = std::abs(gy) * h;
    if (sx == sy) return w >= h;
    return sx > sy;
  }

  // Fraction of a 4x4 midpoint sample inside the sublevel set.
  double sample_fraction(const Cell& c) const {
    int hits = 0;
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        double x = c.x0 + (c.x1 - c.x0) * (i + 0.5) / 4.0;
        double y = c.y0 + (c.y1 - c.y0) * (j + 0.5) / 4.0;
        if (region_.contains(x, y) && std::abs(f_.eval(x, y)) < r_) ++hits;
      }
    }
    return hits / 16.0;
  }

 private:
  State wedge_state(const Cell& c) const {
    if (!region_.wedge) return State::inside;
    const Wedge& w = *region_.wedge;
    double lo_x0 = w.lower ? w.lower->at(c.x0) : 0.0;
    double lo_x1 = w.lower ? w.lower->at(c.x1) : 0.0;
    double up_x0 = w.upper.at(c.x0);
    double up_x1 = w.upper.at(c.x1);
    if (c.y1 <= lo_x0 || c.y0 >= up_x1) return State::outside;
    if (c.y0 >= lo_x1 && c.y1 <= up_x0) return State::inside;
    return State::boundary;
  }

  const SublevelFunction& f_;
  const SublevelRegion& region_;
  double r_;
};

void validate_r(double r) {
  if (!(r > 0.0 && r < 0.5)) throw Error(ErrorCode::validation, "sublevel level r must lie in (0, 1/2)");
}

void validate_region(const SublevelFunction& f, const SublevelRegion& region) {
  if (!(region.x1 > region.x0 && region.y1 > region.y0)) throw Error(ErrorCode::validation, "empty region");
  if (f.needs_nonnegative() && (region.x0 < 0.0 || region.y0 < 0.0)) {
    throw Error(ErrorCode::validation, "non-integer exponents need a region in the closed positive quadrant");
  }
}

SublevelEstimate adaptive(const SublevelFunction& f, const SublevelRegion& region, double r, const SublevelOptions& opt) {
  if (!f.has_bounds()) throw Error(ErrorCode::validation, "adaptive method needs a polynomial or power-sum function");
  Classifier cls(f, region, r);
  std::priority_queue<Cell, std::vector<Cell>, ByArea> open;
  std::vector<Cell> frozen;
  std::int64_t next_id = 0, cells = 1;
  double inside = 0.0, boundary = 0.0;
  auto admit = [&](Cell c) {
    State s = cls.classify(c);
    if (s == State::inside) inside += c.area();
    if (s != State::boundary) return;
    boundary += c.area();
    open.push(c);
  };
  admit(Cell{region.x0, region.x1, region.y0, region.y1, 0, 0, 0.0, next_id++});

  const double floor = 1e-15 * region.box_area();
  bool out_of_budget = false;
  while (!open.empty() && boundary > std::max(opt.rel_tol * inside, floor)) {
    if (cells + 2 > opt.budget) {
      out_of_budget = true;
      break;
    }
    Cell c = open.top();
    open.pop();
    boundary -= c.area();
    auto halves = [&](bool along_x) {
      std::array<Cell, 2> h{c, c};
      if (along_x) {
        double m = 0.5 * (c.x0 + c.x1);
        h[0].x1 = m;
        h[1].x0 = m;
        ++h[0].dx;
        ++h[1].dx;
      } else {
        double m = 0.5 * (c.y0 + c.y1);
        h[0].y1 = m;
        h[1].y0 = m;
        ++h[0].dy;
        ++h[1].dy;
      }
      return h;
    };
    bool along_x = cls.prefer_x_split(c);
    if ((along_x ? c.dx : c.dy) >= opt.max_depth) {
      frozen.push_back(c);
      boundary += c.area();
      continue;
    }
    for (Cell k : halves(along_x)) {
      k.id = next_id++;
      admit(k);
    }
    cells += 2;
  }

  SublevelEstimate est;
  est.r = r;
  est.method = SublevelMethod::adaptive;
  est.seed = opt.seed;
  est.cells = cells;
  NeumaierSum partial;
  std::vector<Cell> rest = frozen;
  while (!open.empty()) {
    rest.push_back(open.top());
    open.pop();
  }
  std::sort(rest.begin(), rest.end(), [](const Cell& a, const Cell& b) { return a.id < b.id; });
  NeumaierSum bmass;
  for (const Cell& c : rest) {
    partial.add(cls.sample_fraction(c) * c.area());
    bmass.add(c.area());
  }
  est.measure = inside + partial.value();
  est.uncertainty = bmass.value();
  if (out_of_budget) throw SublevelBudgetExceeded(est);
  return est;
}

SublevelEstimate monte_carlo(const SublevelFunction& f, const SublevelRegion& region, double r, const SublevelOptions& opt) {
  constexpr std::int64_t kBlock = 1 << 16;
  if (opt.budget < 1) throw Error(ErrorCode::validation, "Monte Carlo budget must be positive");
  const std::int64_t blocks = (opt.budget + kBlock - 1) / kBlock;
  std::vector<std::int64_t> hits(static_cast<std::size_t>(blocks), 0);
  parallel_for(static_cast<std::size_t>(blocks), opt.threads, [&](std::size_t k) {
    std::seed_seq seq{static_cast<std::uint32_t>(opt.seed), static_cast<std::uint32_t>(opt.seed >> 32),
                      static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
    std::mt19937_64 gen(seq);
    auto unit = [&gen] { return static_cast<double>(gen() >> 11) * 0x1.0p-53; };
    std::int64_t count = std::min(kBlock, opt.budget - static_cast<std::int64_t>(k) * kBlock);
    std::int64_t h = 0;
    for (std::int64_t i = 0; i < count; ++i) {
      double x = region.x0 + (region.x1 - region.x0) * unit();
      double y = region.y0 + (region.y1 - region.y0) * unit();
      if (region.contains(x, y) && std::abs(f.eval(x, y)) < r) ++h;
    }
    hits[k] = h;
  });
  std::int64_t total = 0;
  for (auto h : hits) total += h;
  const double n = static_cast<double>(opt.budget);
  const double p = total / n;
  constexpr double z = 2.5758293035489004;  // 99% two-sided normal quantile
  SublevelEstimate est;
  est.r = r;
  est.method = SublevelMethod::monte_carlo;
  est.seed = opt.seed;
  est.cells = blocks;
  est.measure = p * region.box_area();
  est.uncertainty = std::max(z * std::sqrt(p * (1.0 - p) / n), z * z / n) * region.box_area();
  return est;
}

}  // namespace

SublevelFunction SublevelFunction::from_polynomial(const Polynomial& p) {
  std::vector<PowerTerm> t;
  for (const auto& term : p.terms()) t.push_back({double(term.alpha), double(term.beta), term.coeff});
  if (t.empty()) t.push_back({0.0, 0.0, 0.0});
  return power_sum(std::move(t));
}

SublevelFunction SublevelFunction::monomial(double a, double b, double coeff) { return power_sum({{a, b, coeff}}); }

SublevelFunction SublevelFunction::power_sum(std::vector<PowerTerm> terms) {
  if (terms.empty()) throw Error(ErrorCode::validation, "power sum needs at least one term");
  SublevelFunction f;
  for (const auto& t : terms) {
    if (!(t.a >= 0.0 && t.b >= 0.0) || !std::isfinite(t.a) || !std::isfinite(t.b) || !std::isfinite(t.coeff)) {
      throw Error(ErrorCode::validation, "power-sum exponents must be finite and nonnegative");
    }
    if (!is_integer_exponent(t.a) || !is_integer_exponent(t.b)) f.nonneg_ = true;
  }
  f.terms_ = std::move(terms);
  return f;
}

SublevelFunction SublevelFunction::opaque(Field2D fn) {
  if (!fn) throw Error(ErrorCode::validation, "empty evaluator");
  SublevelFunction f;
  f.f_ = std::move(fn);
  return f;
}

double SublevelFunction::eval(double x, double y) const {
  if (f_) return f_(x, y);
  NeumaierSum s;
  for (const auto& t : terms_) s.add(t.coeff * std::pow(x, t.a) * std::pow(y, t.b));
  return s.value();
}

std::array<double, 2> SublevelFunction::gradient(double x, double y) const {
  double gx = 0.0, gy = 0.0;
  for (const auto& t : terms_) {
    if (t.a != 0.0) gx += t.coeff * t.a * std::pow(x, t.a - 1.0) * std::pow(y, t.b);
    if (t.b != 0.0) gy += t.coeff * t.b * std::pow(x, t.a) * std::pow(y, t.b - 1.0);
  }
  return {gx, gy};
}

Interval SublevelFunction::range(double x0, double x1, double y0, double y1) const {
  double lo = 0.0, hi = 0.0, mag = 0.0;
  for (const auto& t : terms_) {
    Interval v = multiply(power_range(x0, x1, t.a), power_range(y0, y1, t.b));
    v = t.coeff >= 0 ? Interval{t.coeff * v.lo, t.coeff * v.hi} : Interval{t.coeff * v.hi, t.coeff * v.lo};
    lo += v.lo;
    hi += v.hi;
    mag += std::abs(v.lo) + std::abs(v.hi);
  }
  // Outward padding for rounding in the sums above.
  double pad = 8.0 * std::numeric_limits<double>::epsilon() * mag;
  return {lo - pad, hi + pad};
}

SublevelRegion SublevelRegion::rectangle(double x0, double x1, double y0, double y1) {
  if (!(x1 > x0 && y1 > y0)) throw Error(ErrorCode::validation, "rectangle must have positive area");
  return SublevelRegion{x0, x1, y0, y1, std::nullopt};
}

SublevelRegion SublevelRegion::of_wedge(const Wedge& w) {
  return SublevelRegion{0.0, w.b, 0.0, w.upper.at(w.b), w};
}

bool SublevelRegion::contains(double x, double y) const {
  if (x < x0 || x > x1 || y < y0 || y > y1) return false;
  if (!wedge) return true;
  double lo = wedge->lower ? wedge->lower->at(x) : 0.0;
  return y > lo && y < wedge->upper.at(x);
}

std::string method_name(SublevelMethod m) { return m == SublevelMethod::adaptive ? "adaptive-det" : "monte-carlo"; }

SublevelMethod parse_method(const std::string& s) {
  if (s == "adaptive-det" || s == "adaptive") return SublevelMethod::adaptive;
  if (s == "monte-carlo" || s == "mc") return SublevelMethod::monte_carlo;
  throw Error(ErrorCode::validation, "unknown sublevel method '" + s + "'");
}

namespace {
std::string bracket_message(const SublevelEstimate& e) {
  std::ostringstream os;
  os.precision(17);
  os << "adaptive budget exhausted at r = " << e.r << "; measure in [" << e.measure - e.uncertainty << ", "
     << e.measure + e.uncertainty << "]";
  return os.str();
}
}  // namespace

SublevelBudgetExceeded::SublevelBudgetExceeded(SublevelEstimate best)
    : Error(ErrorCode::budget_exceeded, bracket_message(best)), best_(best) {}

SublevelEstimate measure_sublevel(const SublevelFunction& f, const SublevelRegion& region, double r,
                                  const SublevelOptions& opt) {
  validate_r(r);
  validate_region(f, region);
  if (opt.max_depth < 1 || opt.max_depth > 60) throw Error(ErrorCode::validation, "max_depth must lie in [1, 60]");
  if (!(opt.rel_tol > 0.0)) throw Error(ErrorCode::validation, "rel_tol must be positive");
  return opt.method == SublevelMethod::adaptive ? adaptive(f, region, r, opt) : monte_carlo(f, region, r, opt);
}

std::vector<SublevelEstimate> sublevel_scan(const SublevelFunction& f, const SublevelRegion& region,
                                            const std::vector<double>& r_grid, const SublevelOptions& opt) {
  std::vector<SublevelEstimate> out(r_grid.size());
  SublevelOptions inner = opt;
  if (opt.method == SublevelMethod::adaptive) {
    inner.threads = 1;
    parallel_for(r_grid.size(), opt.threads, [&](std::size_t i) { out[i] = measure_sublevel(f, region, r_grid[i], inner); });
  } else {
    for (std::size_t i = 0; i < r_grid.size(); ++i) out[i] = measure_sublevel(f, region, r_grid[i], inner);
  }
  std::vector<std::size_t> idx(out.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return out[a].r < out[b].r; });
  for (std::size_t k = 1; k < idx.size(); ++k) {
    const auto& lo = out[idx[k - 1]];
    const auto& hi = out[idx[k]];
    if (hi.measure + hi.uncertainty < lo.measure - lo.uncertainty) {
      throw Error(ErrorCode::internal, "sublevel measure decreased between r = " + std::to_string(lo.r) + " and " +
                                           std::to_string(hi.r));
    }
  }
  return out;
}

double monomial_sublevel_exact(int a, int b, double r) {
  if (a < 0 || b < 0 || a + b < 1) throw Error(ErrorCode::validation, "need a, b >= 0 and a + b >= 1");
  if (!(r > 0.0 && r < 1.0)) throw Error(ErrorCode::validation, "need 0 < r < 1");
  if (a == 0) std::swap(a, b);
  const double sa = std::pow(r, 1.0 / a);
  if (b == 0) return sa;
  if (a == b) return sa - sa * std::log(sa);
  const double sb = std::pow(r, 1.0 / b);
  return sa + (sb - sa) * b / double(b - a);
}

std::vector<double> default_r_grid() { return logspace(1e-7, 1e-1, 12); }

SublevelFit fit_sublevel_law(const std::vector<SublevelEstimate>& samples) {
  std::vector<double> lr, la;
  for (const auto& s : samples) {
    if (s.measure > 0.0 && s.r > 0.0 && s.r < 1.0) {
      lr.push_back(std::log(s.r));
      la.push_back(std::log(s.measure));
    }
  }
  if (lr.size() < 6) throw Error(ErrorCode::insufficient_data, "sublevel fit needs at least 6 positive samples");
  auto [mn, mx] = std::minmax_element(lr.begin(), lr.end());
  if ((*mx - *mn) / std::log(10.0) < 3.0 - 1e-9) {
    throw Error(ErrorCode::insufficient_data, "sublevel samples must span at least 3 decades in r");
  }
  const auto n = static_cast<Eigen::Index>(lr.size());
  Eigen::MatrixXd A(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    A(i, 0) = 1.0;
    A(i, 1) = lr[i];
  }
  SublevelFit best;
  for (int m = 0; m <= 1; ++m) {
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = la[i] - m * std::log(std::abs(lr[i]));
    LeastSquares ls = least_squares(A, y);
    if (ls.condition > 1e8) throw Error(ErrorCode::ill_conditioned, "sublevel design matrix is ill-conditioned");
    SublevelFit fit{ls.coef(1), m, std::exp(ls.coef(0)), ls.rms, ls.condition, lr.size()};
    if (m == 0 || fit.rms < 0.99 * best.rms) best = fit;
  }
  return best;
}

SublevelBoundReport check_sublevel_bound(const SublevelRegion& region, double alpha_i, double beta_i, double epsilon,
                                         int m, const std::vector<double>& r_grid, const SublevelOptions& opt) {
  if (!(epsilon > 0.0)) throw Error(ErrorCode::validation, "law exponent must be positive");
  if (m < 0) throw Error(ErrorCode::validation, "log power must be nonnegative");
  auto est = sublevel_scan(SublevelFunction::monomial(alpha_i, beta_i), region, r_grid, opt);
  SublevelBoundReport rep;
  std::vector<double> inv_r, ratio;
  for (const auto& e : est) {
    double model = std::pow(e.r, epsilon) * std::pow(std::abs(std::log(e.r)), m);
    rep.rows.push_back({e.r, e.measure, e.uncertainty, e.measure / model});
    inv_r.push_back(1.0 / e.r);
    ratio.push_back(e.measure / model);
  }
  rep.trend = trend_test(inv_r, ratio);
  rep.bounded = rep.trend.bounded;
  return rep;
}

SublevelBoundReport check_sublevel_bound(const SublevelRegion& region, double alpha_i, double beta_i,
                                         const DecayLaw& law, const std::vector<double>& r_grid,
                                         const SublevelOptions& opt) {
  return check_sublevel_bound(region, alpha_i, beta_i, law.epsilon.to_double(), law.m, r_grid, opt);
}

}  // namespace osc
