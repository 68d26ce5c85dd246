#include "osclab/decay_fit.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "osclab/error.hpp"
#include "osclab/numeric.hpp"
#include "osclab/parallel.hpp"

namespace osc {

namespace {

void require_log_spaced(const std::vector<double>& g, std::size_t min_points, const char* what) {
  if (g.size() < min_points) {
    throw Error(ErrorCode::validation, std::string(what) + " grid needs at least " + std::to_string(min_points) + " points");
  }
  for (double v : g) {
    if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorCode::validation, std::string(what) + " grid must be positive");
  }
  const double step = std::log(g[1] / g[0]);
  if (!(step > 0.0)) throw Error(ErrorCode::validation, std::string(what) + " grid must increase");
  for (std::size_t i = 1; i < g.size(); ++i) {
    if (std::abs(std::log(g[i] / g[i - 1]) - step) > 1e-6 * std::abs(step)) {
      throw Error(ErrorCode::validation, std::string(what) + " grid must be log-spaced");
    }
  }
}

// Upper bound on |value| from a row: the value itself when it is resolved, value plus error otherwise.
double row_bound(const ScanRow& r) { return r.low_confidence() ? r.abs_value + r.abs_error : r.abs_value; }

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(17);
  os << v;
  return os.str();
}

double parse_double(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  std::istringstream is(s);
  is.imbue(std::locale::classic());
  double v;
  if (!(is >> v) || !is.eof()) throw Error(ErrorCode::schema, "bad number '" + s + "' in scan CSV");
  return v;
}

std::string growth_note(const BoundednessReport& r, const BumpSpec& bump) {
  if (r.bounded) return "";
  std::ostringstream os;
  os << "no boundedness at the tested support; a growing trend may mean the support is too large for this phase, "
        "retry with rho = "
     << bump.rho / 2;
  return os.str();
}

BoundednessReport finish(std::string name, std::vector<SupRow> table, ScanReport scan) {
  BoundednessReport rep;
  rep.statistic = std::move(name);
  std::vector<double> p, s;
  for (const auto& row : table) {
    p.push_back(row.parameter);
    s.push_back(row.statistic);
  }
  rep.trend = trend_test(p, s);
  rep.bounded = rep.trend.bounded;
  double mean = 0.0;
  std::size_t n = 0;
  for (double v : s) {
    if (v > 0) {
      mean += std::log10(v);
      ++n;
    }
  }
  if (n > 0) {
    mean /= n;
    for (double v : s) {
      if (v > 0) rep.flatness_decades = std::max(rep.flatness_decades, std::abs(std::log10(v) - mean));
    }
  }
  rep.table = std::move(table);
  rep.note = growth_note(rep, scan.bump);
  rep.scan = std::move(scan);
  return rep;
}

}  // namespace

ScanReport scan_points(const Phase& phase, const BumpSpec& bump, const std::vector<ScanPoint>& points, IntegralKind kind,
                       const ScanOptions& opt) {
  ScanReport rep;
  rep.phase_label = phase.label();
  rep.bump = bump;
  rep.kind = kind;
  rep.rows.resize(points.size());
  QuadOptions q = opt.quad;
  q.threads = 1;
  parallel_for(points.size(), opt.threads, [&](std::size_t i) {
    const ScanPoint& p = points[i];
    Quad2DResult res = kind == IntegralKind::oscillatory ? integrate_T(phase, p.lambda1, p.mu1, p.mu2, bump, q)
                                                         : integrate_R(phase, p.lambda1, p.mu1, p.mu2, bump, q);
    ScanRow& row = rep.rows[i];
    row.lambda1 = p.lambda1;
    row.mu1 = p.mu1;
    row.mu2 = p.mu2;
    row.abs_value = std::abs(res.value);
    row.abs_error = res.converged ? res.abs_error : std::max(res.abs_error, q.tol);
    double mu = std::hypot(p.mu1, p.mu2);
    row.regime_ratio = p.lambda1 == 0.0 ? (mu == 0.0 ? 0.0 : std::numeric_limits<double>::infinity())
                                        : mu / std::abs(p.lambda1);
  });
  return rep;
}

ScanReport scan_lambda(const Phase& phase, const BumpSpec& bump, const std::vector<double>& lambdas, double mu1,
                       double mu2, const ScanOptions& opt) {
  require_log_spaced(lambdas, 8, "lambda");
  std::vector<ScanPoint> pts;
  for (double l : lambdas) pts.push_back({l, mu1, mu2});
  return scan_points(phase, bump, pts, IntegralKind::oscillatory, opt);
}

FitResult fit_decay(const ScanReport& report) {
  std::vector<double> ll, lv;
  for (const auto& r : report.rows) {
    if (r.low_confidence() || !(r.abs_value > 0.0) || !(std::abs(r.lambda1) > 2.0)) continue;
    ll.push_back(std::log(std::abs(r.lambda1)));
    lv.push_back(std::log(r.abs_value));
  }
  if (ll.size() < 8) throw Error(ErrorCode::insufficient_data, "decay fit needs at least 8 usable rows");
  auto [lo, hi] = std::minmax_element(ll.begin(), ll.end());
  if ((*hi - *lo) / std::log(10.0) < 2.5 - 1e-9) {
    throw Error(ErrorCode::insufficient_data, "decay fit rows must span at least 2.5 decades");
  }
  const auto n = static_cast<Eigen::Index>(ll.size());
  Eigen::MatrixXd A(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    A(i, 0) = 1.0;
    A(i, 1) = -ll[i];
  }
  FitResult best;
  for (int m = 0; m <= 1; ++m) {
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = lv[i] - m * std::log(ll[i]);
    LeastSquares ls = least_squares(A, y);
    if (ls.condition > 1e8) throw Error(ErrorCode::ill_conditioned, "decay fit design matrix is ill-conditioned");
    FitResult f{ls.coef(1), m, std::exp(ls.coef(0)), ls.rms, ll.size(), ls.condition};
    if (m == 0 || f.rms_residual < 0.99 * best.rms_residual) best = f;
  }
  return best;
}

std::string scan_csv_header() { return "lambda1,mu1,mu2,abs_value,abs_error,regime_ratio"; }

void write_scan_csv(std::ostream& os, const ScanReport& report) {
  os << scan_csv_header() << '\n';
  for (const auto& r : report.rows) {
    os << format_double(r.lambda1) << ',' << format_double(r.mu1) << ',' << format_double(r.mu2) << ','
       << format_double(r.abs_value) << ',' << format_double(r.abs_error) << ',' << format_double(r.regime_ratio)
       << '\n';
  }
}

ScanReport read_scan_csv(std::istream& is) {
  ScanReport rep;
  std::string line;
  bool header = false;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != scan_csv_header()) throw Error(ErrorCode::schema, "unexpected scan CSV header '" + line + "'");
      header = true;
      continue;
    }
    std::vector<double> v;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) v.push_back(parse_double(cell));
    if (v.size() != 6) throw Error(ErrorCode::schema, "scan CSV row needs 6 columns");
    rep.rows.push_back({v[0], v[1], v[2], v[3], v[4], v[5]});
  }
  if (!header) throw Error(ErrorCode::schema, "scan CSV has no header");
  return rep;
}

std::vector<SupRow> sup_table(const ScanReport& scan, const std::vector<double>& key, const std::vector<double>& weight) {
  if (key.size() != scan.rows.size() || weight.size() != scan.rows.size()) {
    throw Error(ErrorCode::internal, "sup_table needs one key and weight per row");
  }
  std::map<double, SupRow> groups;
  for (std::size_t i = 0; i < key.size(); ++i) {
    SupRow& g = groups[key[i]];
    g.parameter = key[i];
    double s = row_bound(scan.rows[i]) * weight[i];
    if (g.samples == 0 || s > g.statistic) {
      g.statistic = s;
      g.argmax = {scan.rows[i].lambda1, scan.rows[i].mu1, scan.rows[i].mu2};
    }
    ++g.samples;
  }
  std::vector<SupRow> out;
  for (auto& [k, g] : groups) out.push_back(g);
  return out;
}

std::vector<double> default_lambda_ratios() { return logspace(0.1, 100.0, 13); }

BoundednessReport check_mu_decay(const Phase& phase, const BumpSpec& bump, const std::vector<double>& mu_grid,
                                 const MuDecayOptions& opt) {
  require_log_spaced(mu_grid, 3, "mu");
  const double dn = std::hypot(opt.direction[0], opt.direction[1]);
  if (!(dn > 0.0)) throw Error(ErrorCode::validation, "mu direction must be nonzero");
  const double e1 = opt.direction[0] / dn, e2 = opt.direction[1] / dn;
  std::vector<double> ratios = opt.lambda_ratios.empty() ? default_lambda_ratios() : opt.lambda_ratios;
  std::vector<ScanPoint> pts;
  std::vector<double> key, weight;
  for (double mu : mu_grid) {
    auto add = [&](double l) {
      pts.push_back({l, mu * e1, mu * e2});
      key.push_back(mu);
      weight.push_back(std::sqrt(mu));
    };
    add(0.0);
    for (double k : ratios) {
      if (!(k > 0.0)) throw Error(ErrorCode::validation, "lambda ratios must be positive");
      if (k * mu > opt.lambda_max) continue;
      add(k * mu);
      add(-k * mu);
    }
  }
  ScanReport scan = scan_points(phase, bump, pts, IntegralKind::oscillatory, opt.scan);
  auto table = sup_table(scan, key, weight);
  return finish("sup_lambda |T| |mu|^(1/2)", std::move(table), std::move(scan));
}

BoundednessReport check_uniform_decay(const Phase& phase, const BumpSpec& bump, const DecayLaw& law,
                                      const std::vector<double>& lambda_grid, const UniformDecayOptions& opt) {
  if (!uniform_bound_applicable(law)) {
    throw Error(ErrorCode::not_applicable, "uniform bound needs epsilon <= 1/3, got " + law.epsilon.str());
  }
  require_log_spaced(lambda_grid, 3, "lambda");
  if (lambda_grid.front() <= 2.0) throw Error(ErrorCode::validation, "lambda grid must stay above 2");
  const double eps = law.epsilon.to_double();
  std::vector<ScanPoint> pts;
  std::vector<double> key, weight;
  for (double l : lambda_grid) {
    double w = std::pow(l, eps) / std::pow(std::log(l), law.m);
    auto add = [&](double m1, double m2) {
      pts.push_back({l, m1, m2});
      key.push_back(l);
      weight.push_back(w);
    };
    bool zero_done = false;
    for (double q : opt.mu_ratios) {
      if (!(q >= 0.0)) throw Error(ErrorCode::validation, "mu ratios must be nonnegative");
      if (q == 0.0) {
        if (!zero_done) add(0.0, 0.0);
        zero_done = true;
        continue;
      }
      for (const auto& d : opt.directions) {
        double dn = std::hypot(d[0], d[1]);
        if (!(dn > 0.0)) throw Error(ErrorCode::validation, "mu direction must be nonzero");
        add(q * l * d[0] / dn, q * l * d[1] / dn);
      }
    }
  }
  ScanReport scan = scan_points(phase, bump, pts, IntegralKind::oscillatory, opt.scan);
  auto table = sup_table(scan, key, weight);
  BoundednessReport rep = finish("sup_mu |T| lambda^eps / (ln lambda)^m", std::move(table), std::move(scan));
  std::size_t fast = 0;
  for (const auto& row : rep.table) {
    if (std::hypot(row.argmax.mu1, row.argmax.mu2) > opt.delta * row.argmax.lambda1) ++fast;
  }
  if (fast > 0) {
    std::string extra = std::to_string(fast) + " sup(s) attained with |mu| > delta |lambda1|";
    rep.note = rep.note.empty() ? extra : rep.note + "; " + extra;
  }
  return rep;
}

DampedBoundReport check_damped_bound(const Phase& phase, const BumpSpec& bump, const std::vector<double>& lambda_grid,
                                     const std::vector<double>& mu_grid, const DecayLaw& law, const ScanOptions& opt,
                                     std::array<double, 2> direction) {
  require_log_spaced(lambda_grid, 3, "lambda");
  require_log_spaced(mu_grid, 3, "mu");
  if (lambda_grid.front() <= 2.0) throw Error(ErrorCode::validation, "lambda grid must stay above 2");
  const double dn = std::hypot(direction[0], direction[1]);
  if (!(dn > 0.0)) throw Error(ErrorCode::validation, "mu direction must be nonzero");
  const double e1 = direction[0] / dn, e2 = direction[1] / dn;
  const double eps = law.epsilon.to_double();

  std::vector<ScanPoint> pts;
  for (double l : lambda_grid) {
    pts.push_back({l, 0.0, 0.0});
    for (double mu : mu_grid) pts.push_back({l, mu * e1, mu * e2});
  }
  ScanReport scan = scan_points(phase, bump, pts, IntegralKind::damped, opt);

  std::vector<double> lkey, lweight;
  for (const auto& r : scan.rows) {
    lkey.push_back(r.lambda1);
    lweight.push_back(std::pow(r.lambda1, eps) / std::pow(std::log(r.lambda1), law.m));
  }
  ScanReport mscan = scan;
  mscan.rows.clear();
  std::vector<double> mkey, mweight;
  for (const auto& r : scan.rows) {
    double mu = std::hypot(r.mu1, r.mu2);
    if (mu == 0.0) continue;
    mscan.rows.push_back(r);
    mkey.push_back(mu);
    mweight.push_back(mu);
  }
  DampedBoundReport rep;
  rep.lambda_branch = finish("sup_mu |R| lambda^eps / (ln lambda)^m", sup_table(scan, lkey, lweight), scan);
  auto mtable = sup_table(mscan, mkey, mweight);
  rep.mu_branch = finish("sup_lambda |R| |mu|", std::move(mtable), std::move(mscan));
  rep.bounded = rep.lambda_branch.bounded && rep.mu_branch.bounded;
  return rep;
}

}  // namespace osc
