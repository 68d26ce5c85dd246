#include "osclab/harness.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "osclab/decay_fit.hpp"
#include "osclab/error.hpp"
#include "osclab/newton_polygon.hpp"
#include "osclab/numeric.hpp"
#include "osclab/phase.hpp"
#include "osclab/quadrature.hpp"
#include "osclab/resolution.hpp"
#include "osclab/spectral_pde.hpp"
#include "osclab/sublevel.hpp"

namespace osc {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------- schema

json make_schema() {
  const json number = {{"type", "number"}};
  const json integer = {{"type", "integer"}};
  const json boolean = {{"type", "boolean"}};
  const json string = {{"type", "string"}};
  const json rational = {{"type", json::array({"integer", "string", "array"})},
                         {"description", "integer, \"num/den\" or [num, den]"}};
  const json grid = {{"type", json::array({"object", "array"})},
                     {"description", "{min, max, n} log-spaced, or an explicit list"},
                     {"properties", {{"min", number}, {"max", number}, {"n", integer}}}};
  const json numbers = {{"type", "array"}, {"items", number}};
  const json bound = {{"type", "object"},
                      {"required", {"coeff", "exponent"}},
                      {"properties", {{"coeff", number}, {"exponent", rational}}},
                      {"additionalProperties", false}};
  const json datum = {{"type", "object"},
                      {"properties", {{"rho", number}, {"rho0", number}, {"shift", numbers}}},
                      {"additionalProperties", false}};
  json props = {
      {"subcommand",
       {{"type", "string"},
        {"enum", {"predict", "integrate", "scan", "fit", "sublevel", "resolution-check", "pde", "report"}}}},
      {"phase", {{"type", json::array({"string", "array"})}, {"description", "[[alpha, beta, num, den], ...]"}}},
      {"label", string},
      {"seed", {{"type", "integer"}, {"minimum", 0}}},
      {"threads", {{"type", "integer"}, {"minimum", 1}}},
      {"outdir", string},
      {"tol", {{"type", "number"}, {"exclusiveMinimum", 0}}},
      {"panel_budget", {{"type", "integer"}, {"minimum", 1}}},
      {"bump",
       {{"type", "object"},
        {"properties", {{"rho", number}, {"rho0", number}}},
        {"additionalProperties", false}}},
      {"adapted", boolean},
      {"law",
       {{"type", "object"},
        {"required", {"epsilon", "m"}},
        {"properties", {{"epsilon", rational}, {"m", integer}}},
        {"additionalProperties", false}}},
      {"lambda1", number},
      {"mu1", number},
      {"mu2", number},
      {"damped", boolean},
      {"lambda", grid},
      {"mu", grid},
      {"check", {{"type", "string"}, {"enum", {"none", "mu-decay", "uniform-decay", "damped-bound"}}}},
      {"direction", numbers},
      {"directions", {{"type", "array"}, {"items", numbers}}},
      {"lambda_ratios", numbers},
      {"lambda_max", number},
      {"mu_ratios", numbers},
      {"delta_regime", number},
      {"input", string},
      {"region",
       {{"type", "object"},
        {"properties", {{"x0", number}, {"x1", number}, {"y0", number}, {"y1", number}}},
        {"additionalProperties", false}}},
      {"wedge",
       {{"type", "object"},
        {"required", {"b", "upper"}},
        {"properties", {{"b", number}, {"upper", bound}, {"lower", bound}}},
        {"additionalProperties", false}}},
      {"r", grid},
      {"method", {{"type", "string"}, {"enum", {"adaptive-det", "monte-carlo"}}}},
      {"budget", {{"type", "integer"}, {"minimum", 1}}},
      {"rel_tol", number},
      {"monomial",
       {{"type", "object"},
        {"required", {"alpha", "beta"}},
        {"properties", {{"alpha", number}, {"beta", number}}},
        {"additionalProperties", false}}},
      {"shear",
       {{"type", "object"},
        {"required", {"sign", "psi"}},
        {"properties",
         {{"sign", integer},
          {"psi",
           {{"type", "array"},
            {"items",
             {{"type", "object"},
              {"required", {"exponent", "coeff"}},
              {"properties", {{"exponent", rational}, {"coeff", number}}},
              {"additionalProperties", false}}}}}}},
        {"additionalProperties", false}}},
      {"alpha_i", rational},
      {"beta_i", integer},
      {"l_max", integer},
      {"m_max", integer},
      {"grid_points", integer},
      {"delta_tol", number},
      {"principal",
       {{"type", "object"},
        {"required", {"M"}},
        {"properties", {{"M", rational}, {"l_max", integer}, {"min_delta", number}}},
        {"additionalProperties", false}}},
      {"kind", {{"type", "string"}, {"enum", {"dispersive", "dissipative", "fractional"}}}},
      {"p", number},
      {"q", {{"type", json::array({"number", "string"})}, {"description", "number or \"inf\""}}},
      {"t", grid},
      {"delta", number},
      {"eta", number},
      {"n", integer},
      {"L", number},
      {"datum", datum},
      {"corpus", {{"type", "array"}, {"items", datum}}},
      {"runs", {{"type", "array"}, {"items", string}}},
  };
  json rules = json::array();
  auto rule = [&](const char* sub, std::vector<std::string> required) {
    rules.push_back({{"if", {{"properties", {{"subcommand", {{"const", sub}}}}}}}, {"then", {{"required", required}}}});
  };
  rule("predict", {"phase"});
  rule("integrate", {"phase"});
  rule("scan", {"phase"});
  rule("fit", {});
  rule("sublevel", {"phase"});
  rule("resolution-check", {"phase", "wedge", "alpha_i", "beta_i"});
  rule("pde", {"phase", "kind"});
  rule("report", {"runs"});
  return {{"$schema", "http://json-schema.org/draft-07/schema#"},
          {"title", "osclab run configuration"},
          {"type", "object"},
          {"required", {"subcommand"}},
          {"properties", props},
          {"additionalProperties", false},
          {"allOf", rules}};
}

bool type_matches(const json& v, const std::string& t) {
  if (t == "number") return v.is_number();
  if (t == "integer") return v.is_number_integer();
  if (t == "boolean") return v.is_boolean();
  if (t == "string") return v.is_string();
  if (t == "object") return v.is_object();
  if (t == "array") return v.is_array();
  return false;
}

// Subset of JSON Schema used by make_schema.
void check_schema(const json& v, const json& s, const std::string& path) {
  auto fail = [&](const std::string& why) { throw Error(ErrorCode::schema, (path.empty() ? "config" : path) + ": " + why); };
  if (s.contains("type")) {
    bool ok = false;
    if (s["type"].is_array()) {
      for (const auto& t : s["type"]) ok = ok || type_matches(v, t.get<std::string>());
    } else {
      ok = type_matches(v, s["type"].get<std::string>());
    }
    if (!ok) fail("expected type " + s["type"].dump());
  }
  if (s.contains("const") && v != s["const"]) fail("expected " + s["const"].dump());
  if (s.contains("enum")) {
    bool ok = false;
    for (const auto& e : s["enum"]) ok = ok || v == e;
    if (!ok) fail("value " + v.dump() + " not in " + s["enum"].dump());
  }
  if (v.is_number()) {
    if (s.contains("minimum") && v.get<double>() < s["minimum"].get<double>()) fail("below minimum");
    if (s.contains("exclusiveMinimum") && v.get<double>() <= s["exclusiveMinimum"].get<double>()) fail("must exceed minimum");
  }
  if (v.is_object()) {
    if (s.contains("required")) {
      for (const auto& k : s["required"]) {
        if (!v.contains(k.get<std::string>())) fail("missing key '" + k.get<std::string>() + "'");
      }
    }
    if (s.contains("properties")) {
      for (const auto& [k, item] : v.items()) {
        if (s["properties"].contains(k)) {
          check_schema(item, s["properties"][k], path.empty() ? k : path + "." + k);
        } else if (s.value("additionalProperties", true) == false) {
          fail("unknown key '" + k + "'");
        }
      }
    }
  }
  if (v.is_array() && s.contains("items")) {
    for (std::size_t i = 0; i < v.size(); ++i) check_schema(v[i], s["items"], path + "[" + std::to_string(i) + "]");
  }
  if (s.contains("allOf")) {
    for (const auto& sub : s["allOf"]) {
      if (sub.contains("if")) {
        bool cond = true;
        try {
          check_schema(v, sub["if"], path);
        } catch (const Error&) {
          cond = false;
        }
        if (cond && sub.contains("then")) check_schema(v, sub["then"], path);
      } else {
        check_schema(v, sub, path);
      }
    }
  }
}

const std::map<std::string, std::set<std::string>>& allowed_keys() {
  static const std::set<std::string> common = {"subcommand", "seed", "threads", "outdir", "label"};
  static const std::set<std::string> quad = {"tol", "panel_budget", "bump"};
  auto with = [](std::set<std::string> a, const std::set<std::string>& b) {
    a.insert(b.begin(), b.end());
    return a;
  };
  static const std::map<std::string, std::set<std::string>> m = {
      {"predict", with(common, {"phase", "adapted"})},
      {"integrate", with(with(common, quad), {"phase", "lambda1", "mu1", "mu2", "damped"})},
      {"scan", with(with(common, quad), {"phase", "lambda", "mu1", "mu2", "damped"})},
      {"fit", with(with(common, quad),
                   {"phase", "input", "lambda", "mu1", "mu2", "check", "mu", "direction", "directions", "lambda_ratios",
                    "lambda_max", "mu_ratios", "delta_regime", "law", "adapted"})},
      {"sublevel", with(common, {"phase", "region", "wedge", "r", "method", "budget", "rel_tol", "monomial", "law",
                                 "adapted"})},
      {"resolution-check", with(common, {"phase", "shear", "wedge", "alpha_i", "beta_i", "l_max", "m_max",
                                         "grid_points", "delta_tol", "principal"})},
      {"pde", with(common, {"phase", "kind", "p", "q", "t", "delta", "eta", "n", "L", "datum", "corpus", "law",
                            "adapted"})},
      {"report", with(common, {"runs"})},
  };
  return m;
}

// ---------------------------------------------------------------- parsing helpers

Rational parse_rational(const json& v, const std::string& what) {
  if (v.is_number_integer()) return Rational(v.get<std::int64_t>());
  if (v.is_array()) {
    if (v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer()) {
      throw Error(ErrorCode::schema, what + " must be [num, den] with integers");
    }
    if (v[1].get<std::int64_t>() == 0) throw Error(ErrorCode::validation, what + " has a zero denominator");
    return Rational(v[0].get<std::int64_t>(), v[1].get<std::int64_t>());
  }
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    auto slash = s.find('/');
    try {
      std::size_t used = 0;
      if (slash == std::string::npos) {
        auto num = std::stoll(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return Rational(num);
      }
      std::size_t u1 = 0, u2 = 0;
      auto num = std::stoll(s.substr(0, slash), &u1);
      auto den = std::stoll(s.substr(slash + 1), &u2);
      if (u1 != slash || u2 != s.size() - slash - 1) throw std::invalid_argument(s);
      if (den == 0) throw Error(ErrorCode::validation, what + " has a zero denominator");
      return Rational(num, den);
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::schema, what + " is not a rational: '" + s + "'");
    }
  }
  throw Error(ErrorCode::schema, what + " must be a rational");
}

json rational_json(const Rational& r) { return r.str(); }

std::vector<double> parse_grid(const json& g, const std::string& what) {
  if (g.is_array()) {
    std::vector<double> v;
    for (const auto& x : g) {
      if (!x.is_number()) throw Error(ErrorCode::schema, what + " entries must be numbers");
      v.push_back(x.get<double>());
    }
    if (v.empty()) throw Error(ErrorCode::validation, what + " grid is empty");
    return v;
  }
  for (const char* k : {"min", "max", "n"}) {
    if (!g.contains(k)) throw Error(ErrorCode::schema, what + " grid needs '" + k + "'");
  }
  const int n = g["n"].get<int>();
  if (n < 1) throw Error(ErrorCode::validation, what + " grid needs n >= 1");
  return logspace(g["min"].get<double>(), g["max"].get<double>(), static_cast<std::size_t>(n));
}

json grid_json(double lo, double hi, int n) { return {{"min", lo}, {"max", hi}, {"n", n}}; }

Phase parse_phase(const json& cfg) {
  const json& ph = cfg.at("phase");
  std::string literal = ph.is_string() ? ph.get<std::string>() : ph.dump();
  return Phase::from_literal(literal, cfg.value("label", std::string{}));
}

double parse_q(const json& v) {
  if (v.is_number()) return v.get<double>();
  const std::string s = v.get<std::string>();
  if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
  throw Error(ErrorCode::schema, "q must be a number or \"inf\"");
}

BumpSpec parse_bump(const json& cfg) {
  const json b = cfg.value("bump", json::object());
  return make_bump(b.value("rho", 0.5), b.contains("rho0") ? std::optional<double>(b["rho0"].get<double>()) : std::nullopt);
}

QuadOptions parse_quad(const json& cfg) {
  QuadOptions q;
  q.tol = cfg.value("tol", 1e-8);
  q.panel_budget = cfg.value("panel_budget", kDefaultPanelBudget);
  q.threads = cfg.value("threads", 1);
  return q;
}

WedgeBound parse_bound(const json& b) { return WedgeBound{b.at("coeff").get<double>(), parse_rational(b.at("exponent"), "wedge exponent")}; }

Wedge parse_wedge(const json& w) {
  std::optional<WedgeBound> lower;
  if (w.contains("lower")) lower = parse_bound(w["lower"]);
  return make_wedge(w.at("b").get<double>(), parse_bound(w.at("upper")), lower);
}

DatumSpec parse_datum(const json& d, const DatumSpec& fallback) {
  DatumSpec s = fallback;
  s.rho = d.value("rho", fallback.rho);
  s.rho0 = d.value("rho0", s.rho / 2);
  if (d.contains("shift")) {
    if (d["shift"].size() != 2) throw Error(ErrorCode::validation, "datum shift needs two entries");
    s.shift = {d["shift"][0].get<double>(), d["shift"][1].get<double>()};
  }
  return s;
}

DecayLaw law_of(const json& cfg, const Phase& phase, bool sublevel_pair) {
  if (cfg.contains("law")) {
    DecayLaw l{parse_rational(cfg["law"]["epsilon"], "law epsilon"), cfg["law"]["m"].get<int>(), std::nullopt};
    if (!(l.epsilon > Rational(0)) || (l.m != 0 && l.m != 1)) throw Error(ErrorCode::validation, "law needs epsilon > 0, m in {0, 1}");
    return l;
  }
  DecayLaw l = predict_decay(newton_polygon(phase.poly()), cfg.value("adapted", false) ? Adapted::asserted : Adapted::unknown);
  return sublevel_pair ? sublevel_decay(l).law : l;
}

json law_json(const DecayLaw& l) { return {{"epsilon", rational_json(l.epsilon)}, {"epsilon_value", l.epsilon.to_double()}, {"m", l.m}}; }

std::string crossing_name(Crossing c) {
  switch (c) {
    case Crossing::vertex: return "vertex";
    case Crossing::edge: return "edge";
    case Crossing::vertical_ray: return "vertical-ray";
    case Crossing::horizontal_ray: return "horizontal-ray";
  }
  return "unknown";
}

// ---------------------------------------------------------------- outputs

struct Output {
  std::vector<std::pair<std::string, std::string>> files;
  json summary = json::object();
  std::optional<std::pair<ErrorCode, std::string>> soft_error;
};

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(17);
  os << v;
  return os.str();
}

std::string csv_comment(const std::string& hash) { return std::string("# config_hash=") + hash + " version=" + kVersion + "\n"; }

std::string json_file(json body, const std::string& hash) {
  body["_meta"] = {{"config_hash", hash}, {"version", kVersion}};
  return body.dump(2) + "\n";
}

std::string scan_csv(const ScanReport& r, const std::string& hash) {
  std::ostringstream os;
  os << csv_comment(hash);
  write_scan_csv(os, r);
  return os.str();
}

std::string sup_csv(const std::vector<SupRow>& t, const std::string& hash) {
  std::ostringstream os;
  os << csv_comment(hash) << "parameter,statistic,argmax_lambda1,argmax_mu1,argmax_mu2,samples\n";
  for (const auto& r : t) {
    os << fmt(r.parameter) << ',' << fmt(r.statistic) << ',' << fmt(r.argmax.lambda1) << ',' << fmt(r.argmax.mu1) << ','
       << fmt(r.argmax.mu2) << ',' << r.samples << '\n';
  }
  return os.str();
}

json trend_json(const TrendTest& t) {
  return {{"slope", t.slope}, {"slope_upper", t.slope_upper}, {"span_decades", t.span_decades}, {"n", t.n}, {"bounded", t.bounded}};
}

json boundedness_json(const BoundednessReport& r) {
  return {{"statistic", r.statistic},
          {"trend", trend_json(r.trend)},
          {"bounded", r.bounded},
          {"flatness_decades", r.flatness_decades},
          {"note", r.note}};
}

// ---------------------------------------------------------------- subcommands

Output do_predict(const json& cfg, const std::string& hash) {
  Phase phase = parse_phase(cfg);
  NewtonPolygon np = newton_polygon(phase.poly());
  NewtonDistance nd = newton_distance_info(np);
  DecayLaw law = predict_decay(np, cfg.value("adapted", false) ? Adapted::asserted : Adapted::unknown);
  SublevelLaw sub = sublevel_decay(law);
  json verts = json::array(), edges = json::array(), cands = json::array();
  for (const auto& v : np.vertices) verts.push_back({v.alpha, v.beta});
  for (const auto& e : np.edges) {
    edges.push_back({{"from", {e.from.alpha, e.from.beta}}, {"to", {e.to.alpha, e.to.beta}}, {"slope", rational_json(e.slope)}});
  }
  for (const auto& c : sub.candidates) cands.push_back(law_json(c));
  json body = {{"phase", phase.to_literal()},
               {"label", phase.label()},
               {"vertices", verts},
               {"edges", edges},
               {"newton_distance", rational_json(nd.d)},
               {"crossing", crossing_name(nd.crossing)},
               {"epsilon", rational_json(law.epsilon)},
               {"epsilon_value", law.epsilon.to_double()},
               {"m", law.m},
               {"ambiguity", sub.ambiguous},
               {"sublevel", {{"law", law_json(sub.law)}, {"ambiguous", sub.ambiguous}, {"candidates", cands}}},
               {"uniform_bound_applicable", uniform_bound_applicable(law)}};
  Output out;
  out.files.push_back({"predict.json", json_file(body, hash)});
  out.summary = {{"predicted", law_json(law)}};
  return out;
}

Output do_integrate(const json& cfg, const std::string& hash) {
  Phase phase = parse_phase(cfg);
  BumpSpec bump = parse_bump(cfg);
  QuadOptions q = parse_quad(cfg);
  const double l = cfg.value("lambda1", 0.0), m1 = cfg.value("mu1", 0.0), m2 = cfg.value("mu2", 0.0);
  const bool damped = cfg.value("damped", false);
  Quad2DResult r = damped ? integrate_R(phase, l, m1, m2, bump, q) : integrate_T(phase, l, m1, m2, bump, q);
  json body = {{"re", r.value.real()}, {"im", r.value.imag()}, {"abs_error", r.abs_error}, {"panels", r.panels}, {"converged", r.converged}};
  Output out;
  out.files.push_back({"result.json", json_file(body, hash)});
  out.summary = body;
  if (!r.converged) out.soft_error = {{ErrorCode::budget_exceeded, "quadrature stopped before reaching the tolerance"}};
  return out;
}

ScanReport run_scan(const json& cfg, const Phase& phase, const std::string& hash) {
  BumpSpec bump = parse_bump(cfg);
  ScanOptions so{parse_quad(cfg), cfg.value("threads", 1)};
  std::vector<double> lambdas = parse_grid(cfg.value("lambda", grid_json(1e2, 1e5, 12)), "lambda");
  const double m1 = cfg.value("mu1", 0.0), m2 = cfg.value("mu2", 0.0);
  ScanReport rep;
  if (cfg.value("damped", false)) {
    std::vector<ScanPoint> pts;
    for (double l : lambdas) pts.push_back({l, m1, m2});
    rep = scan_points(phase, bump, pts, IntegralKind::damped, so);
  } else {
    rep = scan_lambda(phase, bump, lambdas, m1, m2, so);
  }
  rep.config_hash = hash;
  return rep;
}

Output do_scan(const json& cfg, const std::string& hash) {
  Phase phase = parse_phase(cfg);
  ScanReport rep = run_scan(cfg, phase, hash);
  Output out;
  out.files.push_back({"scan.csv", scan_csv(rep, hash)});
  std::size_t low = 0;
  for (const auto& r : rep.rows) low += r.low_confidence();
  out.summary = {{"rows", rep.rows.size()}, {"low_confidence", low}};
  return out;
}

Output do_fit(const json& cfg, const std::string& hash) {
  Output out;
  const std::string check = cfg.value("check", std::string("none"));
  if (check == "none") {
    ScanReport rep;
    std::optional<Phase> phase;
    if (cfg.contains("input")) {
      std::ifstream in(cfg["input"].get<std::string>());
      if (!in) throw Error(ErrorCode::io, "cannot read scan file " + cfg["input"].get<std::string>());
      rep = read_scan_csv(in);
      if (cfg.contains("phase")) phase = parse_phase(cfg);
    } else {
      if (!cfg.contains("phase")) throw Error(ErrorCode::schema, "fit needs either 'input' or 'phase'");
      phase = parse_phase(cfg);
      rep = run_scan(cfg, *phase, hash);
      out.files.push_back({"scan.csv", scan_csv(rep, hash)});
    }
    FitResult f = fit_decay(rep);
    json body = {{"epsilon_hat", f.epsilon_hat}, {"m_hat", f.m_hat}, {"C_hat", f.C_hat}, {"rms_residual", f.rms_residual},
                 {"n_points", f.n_points}};
    if (phase && (cfg.contains("law") || cfg.value("adapted", false))) body["predicted"] = law_json(law_of(cfg, *phase, false));
    out.files.push_back({"fit.json", json_file(body, hash)});
    out.summary = body;
    return out;
  }
  if (!cfg.contains("phase")) throw Error(ErrorCode::schema, "boundedness checks need 'phase'");
  Phase phase = parse_phase(cfg);
  BumpSpec bump = parse_bump(cfg);
  ScanOptions so{parse_quad(cfg), cfg.value("threads", 1)};
  auto direction = [](const json& d) {
    if (d.size() != 2) throw Error(ErrorCode::validation, "directions need two components");
    return std::array<double, 2>{d[0].get<double>(), d[1].get<double>()};
  };
  json body;
  if (check == "mu-decay") {
    MuDecayOptions o;
    o.scan = so;
    if (cfg.contains("direction")) o.direction = direction(cfg["direction"]);
    if (cfg.contains("lambda_ratios")) o.lambda_ratios = cfg["lambda_ratios"].get<std::vector<double>>();
    o.lambda_max = cfg.value("lambda_max", o.lambda_max);
    BoundednessReport r = check_mu_decay(phase, bump, parse_grid(cfg.value("mu", grid_json(10, 1e4, 7)), "mu"), o);
    body = boundedness_json(r);
    out.files.push_back({"sup.csv", sup_csv(r.table, hash)});
    out.files.push_back({"scan.csv", scan_csv(r.scan, hash)});
  } else if (check == "uniform-decay") {
    UniformDecayOptions o;
    o.scan = so;
    if (cfg.contains("mu_ratios")) o.mu_ratios = cfg["mu_ratios"].get<std::vector<double>>();
    if (cfg.contains("directions")) {
      o.directions.clear();
      for (const auto& d : cfg["directions"]) o.directions.push_back(direction(d));
    }
    o.delta = cfg.value("delta_regime", o.delta);
    DecayLaw law = law_of(cfg, phase, false);
    BoundednessReport r = check_uniform_decay(phase, bump, law, parse_grid(cfg.value("lambda", grid_json(1e2, 1e5, 10)), "lambda"), o);
    body = boundedness_json(r);
    body["law"] = law_json(law);
    out.files.push_back({"sup.csv", sup_csv(r.table, hash)});
    out.files.push_back({"scan.csv", scan_csv(r.scan, hash)});
  } else {
    DecayLaw law = law_of(cfg, phase, true);
    std::array<double, 2> dir = cfg.contains("direction") ? direction(cfg["direction"]) : std::array<double, 2>{1.0, 0.0};
    DampedBoundReport r = check_damped_bound(phase, bump, parse_grid(cfg.value("lambda", grid_json(1e2, 1e5, 12)), "lambda"),
                                             parse_grid(cfg.value("mu", grid_json(10, 1e4, 7)), "mu"), law, so, dir);
    body = {{"lambda_branch", boundedness_json(r.lambda_branch)}, {"mu_branch", boundedness_json(r.mu_branch)},
            {"bounded", r.bounded}, {"law", law_json(law)}};
    out.files.push_back({"sup_lambda.csv", sup_csv(r.lambda_branch.table, hash)});
    out.files.push_back({"sup_mu.csv", sup_csv(r.mu_branch.table, hash)});
    out.files.push_back({"scan.csv", scan_csv(r.lambda_branch.scan, hash)});
  }
  body["check"] = check;
  out.files.push_back({"check.json", json_file(body, hash)});
  out.summary = {{"check", check}, {"bounded", body["bounded"]}};
  return out;
}

Output do_sublevel(const json& cfg, const std::string& hash) {
  Phase phase = parse_phase(cfg);
  SublevelFunction f = SublevelFunction::from_polynomial(phase.poly());
  SublevelRegion region = SublevelRegion::rectangle(0, 1, 0, 1);
  if (cfg.contains("wedge") && cfg.contains("region")) throw Error(ErrorCode::validation, "give either 'region' or 'wedge'");
  if (cfg.contains("wedge")) region = SublevelRegion::of_wedge(parse_wedge(cfg["wedge"]));
  if (cfg.contains("region")) {
    const json& r = cfg["region"];
    region = SublevelRegion::rectangle(r.value("x0", 0.0), r.value("x1", 1.0), r.value("y0", 0.0), r.value("y1", 1.0));
  }
  SublevelOptions opt;
  opt.method = parse_method(cfg.value("method", std::string("adaptive-det")));
  if (opt.method == SublevelMethod::monte_carlo) opt.budget = std::int64_t{1} << 22;
  opt.budget = cfg.value("budget", opt.budget);
  opt.seed = cfg.value("seed", std::uint64_t{0});
  opt.threads = cfg.value("threads", 1);
  opt.rel_tol = cfg.value("rel_tol", opt.rel_tol);
  std::vector<double> grid = cfg.contains("r") ? parse_grid(cfg["r"], "r") : default_r_grid();
  auto est = sublevel_scan(f, region, grid, opt);
  std::ostringstream os;
  os << csv_comment(hash) << "r,measure,uncertainty,method,seed\n";
  for (const auto& e : est) os << fmt(e.r) << ',' << fmt(e.measure) << ',' << fmt(e.uncertainty) << ',' << method_name(e.method) << ',' << e.seed << '\n';
  Output out;
  out.files.push_back({"sublevel.csv", os.str()});
  json body = json::object();
  try {
    SublevelFit fit = fit_sublevel_law(est);
    body["fit"] = {{"epsilon", fit.epsilon}, {"m", fit.m}, {"C", fit.C}, {"rms", fit.rms}, {"n", fit.n}};
  } catch (const Error& e) {
    if (e.code() != ErrorCode::insufficient_data) throw;
    body["fit_note"] = e.what();
  }
  if (cfg.contains("law") || cfg.value("adapted", false)) body["predicted"] = law_json(law_of(cfg, phase, true));
  if (cfg.contains("monomial")) {
    DecayLaw law = law_of(cfg, phase, true);
    SublevelBoundReport b = check_sublevel_bound(region, cfg["monomial"]["alpha"].get<double>(), cfg["monomial"]["beta"].get<double>(),
                                                 law, grid, opt);
    json rows = json::array();
    for (const auto& r : b.rows) rows.push_back({{"r", r.r}, {"measure", r.measure}, {"uncertainty", r.uncertainty}, {"ratio", r.ratio}});
    body["bound"] = {{"law", law_json(law)}, {"trend", trend_json(b.trend)}, {"bounded", b.bounded}, {"rows", rows}};
  }
  out.files.push_back({"law.json", json_file(body, hash)});
  out.summary = body.contains("fit") ? json{{"fit", body["fit"]}} : json::object();
  return out;
}

Output do_resolution(const json& cfg, const std::string& hash) {
  Phase phase = parse_phase(cfg);
  ShearMap shear = make_shear(1, {});
  if (cfg.contains("shear")) {
    std::vector<ShearTerm> psi;
    for (const auto& t : cfg["shear"]["psi"]) psi.push_back({parse_rational(t.at("exponent"), "shear exponent"), t.at("coeff").get<double>()});
    shear = make_shear(cfg["shear"]["sign"].get<int>(), std::move(psi));
  }
  ShearedPhase sheared = apply_shear(phase, shear);
  Wedge wedge = parse_wedge(cfg["wedge"]);
  const Rational alpha = parse_rational(cfg["alpha_i"], "alpha_i");
  const int beta = cfg["beta_i"].get<int>();
  ComparabilityOptions co;
  co.l_max = cfg.value("l_max", 0);
  co.m_max = cfg.value("m_max", 0);
  co.grid = cfg.value("grid_points", co.grid);
  co.delta_tol = cfg.value("delta_tol", co.delta_tol);
  MonomializationReport mr = check_comparability(sheared, wedge, alpha, beta, co);
  json orders = json::array();
  for (const auto& o : mr.orders) {
    orders.push_back({{"l", o.l}, {"m", o.m}, {"ratio_min", o.ratio_min}, {"ratio_max", o.ratio_max}, {"constant", o.constant}, {"pass", o.pass}});
  }
  json body = {{"comparability",
                {{"alpha_i", rational_json(mr.alpha_i)}, {"beta_i", mr.beta_i}, {"d_i", mr.d_i},
                 {"exact_derivatives", mr.exact_derivatives}, {"orders", orders}, {"pass", mr.pass}}}};
  bool pass = mr.pass;
  if (cfg.contains("principal")) {
    const json& p = cfg["principal"];
    if (!sheared.exact) throw Error(ErrorCode::validation, "principal part needs an integer-exponent shear");
    PrincipalPart pp = principal_part(*sheared.exact, parse_rational(p["M"], "M"));
    PrincipalPartOptions po;
    po.l_max = p.value("l_max", 0);
    po.grid = cfg.value("grid_points", po.grid);
    po.min_delta = p.value("min_delta", po.min_delta);
    PrincipalPartReport pr = check_principal_part(sheared, wedge, pp.r, pp.alpha_min, po);
    json rows = json::array();
    for (const auto& o : pr.orders) {
      rows.push_back({{"l", o.l}, {"fitted_exponent", o.fitted_exponent}, {"delta_est", o.delta_est}, {"zero_residual", o.zero_residual}});
    }
    body["principal"] = {{"alpha_min", rational_json(pp.alpha_min)}, {"r", format_polynomial(pp.r)},
                         {"terms", pp.r.terms().size()}, {"orders", rows}, {"delta_est", pr.delta_est}, {"pass", pr.pass}};
    pass = pass && pr.pass;
  }
  body["pass"] = pass;
  Output out;
  out.files.push_back({"resolution.json", json_file(body, hash)});
  out.summary = {{"pass", pass}};
  return out;
}

Output do_pde(const json& cfg, const std::string& hash) {
  Phase phase = parse_phase(cfg);
  const std::string kind = cfg["kind"].get<std::string>();
  GridParams grid;
  grid.n = cfg.value("n", grid.n);
  grid.L = cfg.value("L", grid.L);
  if (cfg.contains("datum")) grid.datum = parse_datum(cfg["datum"], grid.datum);
  const double p = cfg.value("p", 1.01);
  const double q = cfg.contains("q") ? parse_q(cfg["q"]) : 100.0;
  Output out;
  std::ostringstream os;
  json body = {{"kind", kind}, {"p", p}, {"q", q}};
  if (kind == "fractional") {
    const double delta = cfg.value("delta", 0.25);
    const double eta = cfg.value("eta", 1e-9);
    std::vector<DatumSpec> corpus;
    if (cfg.contains("corpus")) {
      for (const auto& d : cfg["corpus"]) corpus.push_back(parse_datum(d, grid.datum));
    } else {
      corpus.push_back(grid.datum);
    }
    SublevelLaw sl = sublevel_decay(law_of(cfg, phase, false));
    std::vector<DecayLaw> laws = cfg.contains("law") ? std::vector<DecayLaw>{law_of(cfg, phase, true)} : sl.candidates;
    if (laws.empty()) laws.push_back(sl.law);
    os << csv_comment(hash) << "delta,norm_q,norm_p,ratio,bound_value,boundary_mass\n";
    json per_law = json::array();
    for (const DecayLaw& law : laws) {
      FractionalBoundReport r = check_fractional_bound(phase, law, delta, p, q, corpus, grid, eta);
      per_law.push_back({{"law", law_json(law)}, {"ratios", r.ratios}, {"ratios_refined", r.ratios_refined},
                         {"max_ratio", r.max_ratio}, {"max_ratio_refined", r.max_ratio_refined},
                         {"relative_change", r.relative_change}, {"bounded", r.bounded}});
    }
    for (const auto& d : corpus) {
      GridField g = make_datum(d, grid.n, grid.L);
      GridField f = fractional_solve(g, phase, delta, eta, laws.front());
      NormResult nq = lp_norm(f, q), np = lp_norm(g, p);
      os << fmt(delta) << ',' << fmt(nq.value) << ',' << fmt(np.value) << ',' << fmt(nq.value / np.value) << ','
         << fmt(1.0) << ',' << fmt(nq.boundary_fraction) << '\n';
    }
    body["delta"] = delta;
    body["eta"] = eta;
    body["laws"] = per_law;
    bool bounded = true;
    for (const auto& l : per_law) bounded = bounded && l["bounded"].get<bool>();
    body["bounded"] = bounded;
  } else {
    std::vector<double> ts = cfg.contains("t") ? parse_grid(cfg["t"], "t") : default_t_grid();
    std::vector<DecayLaw> laws;
    if (cfg.contains("law")) {
      laws.push_back(law_of(cfg, phase, false));
    } else if (kind == "dispersive") {
      laws.push_back(law_of(cfg, phase, false));
    } else {
      SublevelLaw sl = sublevel_decay(law_of(cfg, phase, false));
      laws = sl.candidates.empty() ? std::vector<DecayLaw>{sl.law} : sl.candidates;
    }
    os << csv_comment(hash) << "t,norm_q,norm_p,ratio,bound_value,boundary_mass\n";
    json per_law = json::array();
    bool bounded = true;
    for (std::size_t k = 0; k < laws.size(); ++k) {
      DecayCheckReport r = kind == "dispersive" ? check_dispersive_decay(phase, laws[k], p, q, ts, grid)
                                                : check_dissipative_decay(phase, laws[k], p, q, ts, grid);
      if (k == 0) {
        for (const auto& row : r.rows) {
          os << fmt(row.t) << ',' << fmt(row.norm_q) << ',' << fmt(row.norm_p) << ',' << fmt(row.ratio) << ','
             << fmt(row.bound_value) << ',' << fmt(row.boundary_mass) << '\n';
        }
      }
      per_law.push_back({{"law", law_json(laws[k])}, {"trend", trend_json(r.trend)}, {"bounded", r.bounded},
                         {"safe_horizon", r.safe_horizon}, {"dropped_t", r.dropped_t}, {"polluted_t", r.polluted_t},
                         {"note", r.note}});
      if (k == 0) {
        json grids = json::array();
        for (const auto& row : r.rows) grids.push_back({{"t", row.t}, {"n", row.n}, {"L", row.L}});
        body["row_grids"] = grids;
      }
      bounded = bounded && r.bounded;
    }
    body["laws"] = per_law;
    body["bounded"] = bounded;
  }
  out.files.push_back({"pde.csv", os.str()});
  out.files.push_back({"pde.json", json_file(body, hash)});
  out.summary = {{"bounded", body["bounded"]}};
  return out;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot read " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

std::string resolve_run_dir(const std::string& entry, const std::string& root) {
  if (fs::exists(fs::path(entry) / "manifest.json")) return entry;
  fs::path under = fs::path(root) / entry;
  if (fs::exists(under / "manifest.json")) return under.string();
  throw Error(ErrorCode::io, "no run record at '" + entry + "'");
}

Output do_report(const json& cfg, const std::string& hash, const std::string& root) {
  std::vector<RunRecord> recs;
  for (const auto& r : cfg["runs"]) recs.push_back(load_record(resolve_run_dir(r.get<std::string>(), root)));
  if (recs.empty()) throw Error(ErrorCode::validation, "report needs at least one run");
  std::string phase;
  for (const auto& r : recs) {
    if (r.phase.empty()) continue;
    if (phase.empty()) phase = r.phase;
    if (r.phase != phase) throw Error(ErrorCode::mixed_phases, "runs use different phases: " + phase + " and " + r.phase);
  }
  struct Series {
    const char* file;
    const char* name;
    int x, y, err;
  };
  const Series series[] = {{"scan.csv", "abs_value", 0, 3, 4},   {"sup.csv", "sup_statistic", 0, 1, -1},
                           {"sup_lambda.csv", "sup_lambda", 0, 1, -1}, {"sup_mu.csv", "sup_mu", 0, 1, -1},
                           {"sublevel.csv", "measure", 0, 1, 2}, {"pde.csv", "ratio", 0, 3, -1}};
  std::ostringstream bundle, text;
  bundle << csv_comment(hash) << "run,subcommand,series,x,y,y_err\n";
  text << "phase: " << (phase.empty() ? "(none)" : phase) << "\n";
  for (const auto& r : recs) {
    for (const auto& s : series) {
      if (std::find(r.files.begin(), r.files.end(), s.file) == r.files.end()) continue;
      auto rows = read_csv(fs::path(r.directory) / s.file);
      for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& c = rows[i];
        bundle << r.config_hash << ',' << r.subcommand << ',' << s.name << ',' << c.at(s.x) << ',' << c.at(s.y) << ','
               << (s.err >= 0 ? c.at(s.err) : std::string()) << '\n';
      }
    }
    text << "run " << r.config_hash << " (" << r.subcommand << ")";
    const json& sm = r.summary;
    if (sm.contains("predicted")) {
      text << ": predicted epsilon " << sm["predicted"]["epsilon"].get<std::string>() << ", m " << sm["predicted"]["m"];
    }
    if (sm.contains("epsilon_hat")) {
      text << ": fitted epsilon " << fmt(sm["epsilon_hat"].get<double>()) << ", m " << sm["m_hat"];
      if (sm.contains("predicted")) {
        double d = sm["epsilon_hat"].get<double>() - sm["predicted"]["epsilon_value"].get<double>();
        text << " (difference " << fmt(d) << ")";
      }
    }
    if (sm.contains("fit")) text << ": sublevel fit epsilon " << fmt(sm["fit"]["epsilon"].get<double>()) << ", m " << sm["fit"]["m"];
    if (sm.contains("bounded")) text << ": bounded " << (sm["bounded"].get<bool>() ? "yes" : "no");
    if (sm.contains("pass")) text << ": pass " << (sm["pass"].get<bool>() ? "yes" : "no");
    text << "\n";
  }
  Output out;
  out.files.push_back({"bundle.csv", bundle.str()});
  out.files.push_back({"summary.txt", text.str()});
  out.summary = {{"runs", recs.size()}};
  return out;
}

std::string now_utc() {
  std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::io, "write failed for " + path.string());
}

}  // namespace

const json& config_schema() {
  static const json s = make_schema();
  return s;
}

json resolve_config(const json& config) {
  if (!config.is_object()) throw Error(ErrorCode::schema, "config must be a JSON object");
  check_schema(config, config_schema(), "");
  const std::string sub = config["subcommand"].get<std::string>();
  const auto& allowed = allowed_keys().at(sub);
  for (const auto& [k, v] : config.items()) {
    if (!allowed.count(k)) throw Error(ErrorCode::schema, "key '" + k + "' does not apply to subcommand " + sub);
  }
  json r = config;
  if (!r.contains("seed")) r["seed"] = 0;
  if (!r.contains("threads")) r["threads"] = 1;
  if (r.contains("phase")) {
    Phase ph = parse_phase(r);
    r["phase"] = ph.to_literal();
    if (!r.contains("label")) r["label"] = ph.label();
  }
  if (allowed.count("tol") && !r.contains("tol")) r["tol"] = 1e-8;
  if (allowed.count("panel_budget") && !r.contains("panel_budget")) r["panel_budget"] = kDefaultPanelBudget;
  if (allowed.count("bump")) {
    BumpSpec b = parse_bump(r);
    r["bump"] = {{"rho", b.rho}, {"rho0", b.rho0}};
  }
  return r;
}

std::string config_hash(const json& resolved) {
  json c = resolved;
  c.erase("threads");
  c.erase("outdir");
  const std::string text = c.dump();
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::internal, "SHA-256 failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < 8; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return os.str();
}

std::string cache_root(const json& config) {
  if (config.contains("outdir")) return config["outdir"].get<std::string>();
  if (const char* env = std::getenv("OSC_CACHE_DIR"); env && *env) return env;
  return "osclab-out";
}

json record_to_json(const RunRecord& r) {
  return {{"config_hash", r.config_hash}, {"version", r.version},   {"created", r.created}, {"subcommand", r.subcommand},
          {"phase", r.phase},             {"directory", r.directory}, {"files", r.files},   {"summary", r.summary},
          {"cached", r.cached}};
}

RunRecord load_record(const std::string& directory) {
  fs::path mpath = fs::path(directory) / "manifest.json";
  std::ifstream in(mpath);
  if (!in) throw Error(ErrorCode::io, "cannot read " + mpath.string());
  json m;
  try {
    m = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::schema, "malformed manifest " + mpath.string() + ": " + e.what());
  }
  RunRecord r;
  r.config_hash = m.value("config_hash", "");
  r.version = m.value("version", "");
  r.created = m.value("created", "");
  r.subcommand = m.value("subcommand", "");
  r.phase = m.value("phase", "");
  r.files = m.value("files", std::vector<std::string>{});
  r.summary = m.value("summary", json::object());
  r.directory = directory;
  return r;
}

RunRecord run(const json& config) {
  json resolved = resolve_config(config);
  const std::string hash = config_hash(resolved);
  const std::string root = cache_root(resolved);
  const fs::path dir = fs::path(root) / hash;
  if (fs::exists(dir / "manifest.json")) {
    RunRecord rec = load_record(dir.string());
    bool complete = rec.config_hash == hash;
    for (const auto& f : rec.files) complete = complete && fs::exists(dir / f);
    if (complete) {
      rec.cached = true;
      return rec;
    }
  }
  const std::string sub = resolved["subcommand"].get<std::string>();
  Output out;
  if (sub == "predict") out = do_predict(resolved, hash);
  else if (sub == "integrate") out = do_integrate(resolved, hash);
  else if (sub == "scan") out = do_scan(resolved, hash);
  else if (sub == "fit") out = do_fit(resolved, hash);
  else if (sub == "sublevel") out = do_sublevel(resolved, hash);
  else if (sub == "resolution-check") out = do_resolution(resolved, hash);
  else if (sub == "pde") out = do_pde(resolved, hash);
  else out = do_report(resolved, hash, root);

  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io, "cannot create " + dir.string() + ": " + ec.message());
  RunRecord rec;
  rec.config_hash = hash;
  rec.version = kVersion;
  rec.created = now_utc();
  rec.subcommand = sub;
  rec.phase = resolved.value("phase", std::string{});
  rec.directory = dir.string();
  rec.summary = out.summary;
  if (out.soft_error) {
    rec.summary["error"] = {{"code", error_name(out.soft_error->first)}, {"message", out.soft_error->second}};
  }
  for (const auto& [name, text] : out.files) {
    write_text(dir / name, text);
    rec.files.push_back(name);
  }
  json manifest = record_to_json(rec);
  manifest.erase("directory");
  manifest.erase("cached");
  manifest["config"] = resolved;
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  return rec;
}

}  // namespace osc
