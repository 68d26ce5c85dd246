#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "osclab/osclab.h"

using nlohmann::json;

namespace {

// "min:max:n" becomes a log-spaced grid object, "a,b,c" an explicit list.
json parse_grid(const std::string& s) {
  if (s.find(':') != std::string::npos) {
    std::stringstream ss(s);
    std::string a, b, n;
    std::getline(ss, a, ':');
    std::getline(ss, b, ':');
    std::getline(ss, n);
    return {{"min", std::stod(a)}, {"max", std::stod(b)}, {"n", std::stoi(n)}};
  }
  json v = json::array();
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) v.push_back(std::stod(item));
  return v;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) v.push_back(std::stod(item));
  return v;
}

// "eps,m" with eps written as an integer or "num/den".
json parse_law(const std::string& s) {
  auto comma = s.find(',');
  if (comma == std::string::npos) throw std::invalid_argument("--law expects EPSILON,M");
  return {{"epsilon", s.substr(0, comma)}, {"m", std::stoi(s.substr(comma + 1))}};
}

json parse_json_arg(const std::string& s) { return json::parse(s); }

// Collects the flags a subcommand exposes; only flags given on the command line reach the config.
struct Flags {
  std::map<std::string, std::string> text;
  std::map<std::string, double> num;
  std::map<std::string, long long> integer;
  std::map<std::string, bool> toggles;
  std::vector<std::string> runs;
};

void add_text(CLI::App* app, Flags& f, const std::string& flag, const std::string& key, const std::string& help) {
  app->add_option(flag, f.text[key], help);
}
void add_num(CLI::App* app, Flags& f, const std::string& flag, const std::string& key, const std::string& help) {
  app->add_option(flag, f.num[key], help);
}
void add_int(CLI::App* app, Flags& f, const std::string& flag, const std::string& key, const std::string& help) {
  app->add_option(flag, f.integer[key], help);
}
void add_toggle(CLI::App* app, Flags& f, const std::string& flag, const std::string& key, const std::string& help) {
  app->add_flag(flag, f.toggles[key], help);
}

void apply(CLI::App* app, const Flags& f, json& cfg, const std::map<std::string, std::string>& flag_of) {
  auto flag_given = [&](const std::string& key) {
    auto it = flag_of.find(key);
    const std::string flag = it == flag_of.end() ? "--" + key : it->second;
    return app->get_option(flag)->count() > 0;
  };
  static const std::vector<std::string> grids = {"lambda", "mu", "r", "t"};
  static const std::vector<std::string> lists = {"direction", "lambda_ratios", "mu_ratios"};
  static const std::vector<std::string> raw_json = {"wedge", "shear", "principal", "region_json", "datum_json", "directions"};
  for (const auto& [k, v] : f.text) {
    if (!flag_given(k)) continue;
    if (std::find(grids.begin(), grids.end(), k) != grids.end()) {
      cfg[k] = parse_grid(v);
    } else if (std::find(lists.begin(), lists.end(), k) != lists.end()) {
      cfg[k] = parse_list(v);
    } else if (k == "law") {
      cfg["law"] = parse_law(v);
    } else if (k == "region") {
      auto r = parse_list(v);
      if (r.size() != 4) throw std::invalid_argument("--region expects x0,x1,y0,y1");
      cfg["region"] = {{"x0", r[0]}, {"x1", r[1]}, {"y0", r[2]}, {"y1", r[3]}};
    } else if (k == "monomial") {
      auto r = parse_list(v);
      if (r.size() != 2) throw std::invalid_argument("--monomial expects ALPHA,BETA");
      cfg["monomial"] = {{"alpha", r[0]}, {"beta", r[1]}};
    } else if (k == "q") {
      if (v == "inf" || v == "infinity") {
        cfg["q"] = "inf";
      } else {
        cfg["q"] = std::stod(v);
      }
    } else if (k == "alpha_i") {
      cfg["alpha_i"] = v;
    } else if (std::find(raw_json.begin(), raw_json.end(), k) != raw_json.end()) {
      cfg[k] = parse_json_arg(v);
    } else {
      cfg[k] = v;
    }
  }
  for (const auto& [k, v] : f.num) {
    if (!flag_given(k)) continue;
    if (k == "rho" || k == "rho0") {
      cfg["bump"][k] = v;
    } else if (k == "datum_rho" || k == "datum_rho0") {
      cfg["datum"][k.substr(6)] = v;
    } else {
      cfg[k] = v;
    }
  }
  for (const auto& [k, v] : f.integer) {
    if (flag_given(k)) cfg[k] = v;
  }
  for (const auto& [k, v] : f.toggles) {
    if (flag_given(k)) cfg[k] = v;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"osclab: oscillatory integral decay laboratory"};
  app.require_subcommand(0, 1);
  app.set_version_flag("--version", std::string(osc_version()));
  std::string config_path, out_dir;
  long long seed = 0, threads = 1;
  app.add_option("--config", config_path, "JSON config file; flags override its keys");
  app.add_option("--out", out_dir, "cache root directory");
  app.add_option("--seed", seed, "random seed")->check(CLI::NonNegativeNumber);
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  bool print_schema = false;
  app.add_flag("--print-schema", print_schema, "print the config schema and exit");

  struct Sub {
    CLI::App* app;
    Flags flags;
    std::map<std::string, std::string> flag_of;
  };
  std::map<std::string, Sub> subs;
  auto sub = [&](const std::string& name, const std::string& help) -> Sub& {
    Sub& s = subs[name];
    s.app = app.add_subcommand(name, help);
    return s;
  };
  auto text = [](Sub& s, const std::string& flag, const std::string& key, const std::string& help) {
    add_text(s.app, s.flags, flag, key, help);
    s.flag_of[key] = flag;
  };
  auto num = [](Sub& s, const std::string& flag, const std::string& key, const std::string& help) {
    add_num(s.app, s.flags, flag, key, help);
    s.flag_of[key] = flag;
  };
  auto integer = [](Sub& s, const std::string& flag, const std::string& key, const std::string& help) {
    add_int(s.app, s.flags, flag, key, help);
    s.flag_of[key] = flag;
  };
  auto toggle = [](Sub& s, const std::string& flag, const std::string& key, const std::string& help) {
    add_toggle(s.app, s.flags, flag, key, help);
    s.flag_of[key] = flag;
  };
  auto quad_flags = [&](Sub& s) {
    num(s, "--tol", "tol", "quadrature tolerance");
    num(s, "--rho", "rho", "bump support radius");
    num(s, "--rho0", "rho0", "bump plateau radius");
    integer(s, "--panel-budget", "panel_budget", "quadrature panel budget");
  };
  const char* phase_help = "phase literal [[alpha,beta,num,den],...]";

  Sub& predict = sub("predict", "Newton polygon and predicted decay law");
  text(predict, "--phase", "phase", phase_help);
  toggle(predict, "--adapted", "adapted", "assert the coordinates are adapted");

  Sub& integ = sub("integrate", "one oscillatory or damped integral");
  text(integ, "--phase", "phase", phase_help);
  num(integ, "--lambda1", "lambda1", "frequency parameter");
  num(integ, "--mu1", "mu1", "linear frequency in x");
  num(integ, "--mu2", "mu2", "linear frequency in y");
  toggle(integ, "--damped", "damped", "use exp(-lambda1 S) damping");
  quad_flags(integ);

  Sub& scan = sub("scan", "integral magnitudes over a lambda grid");
  text(scan, "--phase", "phase", phase_help);
  text(scan, "--lambda", "lambda", "grid MIN:MAX:N or a comma list");
  num(scan, "--mu1", "mu1", "linear frequency in x");
  num(scan, "--mu2", "mu2", "linear frequency in y");
  toggle(scan, "--damped", "damped", "damped integrals");
  quad_flags(scan);

  Sub& fit = sub("fit", "fit a decay law or run a boundedness check");
  text(fit, "--phase", "phase", phase_help);
  text(fit, "--input", "input", "scan CSV to fit");
  text(fit, "--lambda", "lambda", "lambda grid MIN:MAX:N or list");
  text(fit, "--mu", "mu", "|mu| grid MIN:MAX:N or list");
  text(fit, "--check", "check", "none | mu-decay | uniform-decay | damped-bound");
  text(fit, "--direction", "direction", "mu direction D1,D2");
  text(fit, "--law", "law", "decay law EPSILON,M");
  text(fit, "--lambda-ratios", "lambda_ratios", "lambda/|mu| ratios for mu-decay");
  text(fit, "--mu-ratios", "mu_ratios", "|mu|/lambda ratios for uniform-decay");
  num(fit, "--lambda-max", "lambda_max", "largest |lambda1| in mu-decay scans");
  num(fit, "--delta-regime", "delta_regime", "regime split |mu| = delta lambda");
  toggle(fit, "--adapted", "adapted", "assert the coordinates are adapted");
  quad_flags(fit);

  Sub& sl = sub("sublevel", "sublevel-set measures over an r grid");
  text(sl, "--phase", "phase", phase_help);
  text(sl, "--r", "r", "r grid MIN:MAX:N or list");
  text(sl, "--method", "method", "adaptive-det | monte-carlo");
  text(sl, "--region", "region", "rectangle X0,X1,Y0,Y1");
  text(sl, "--wedge", "wedge", "wedge as JSON");
  text(sl, "--monomial", "monomial", "check |x^a y^b| against the law: A,B");
  text(sl, "--law", "law", "sublevel law EPSILON,M");
  integer(sl, "--budget", "budget", "cell or sample budget");
  num(sl, "--rel-tol", "rel_tol", "adaptive stopping tolerance");
  toggle(sl, "--adapted", "adapted", "assert the coordinates are adapted");

  Sub& res = sub("resolution-check", "verify a shear, wedge and monomial comparability");
  text(res, "--phase", "phase", phase_help);
  text(res, "--shear", "shear", "shear as JSON {sign, psi:[{exponent, coeff}]}");
  text(res, "--wedge", "wedge", "wedge as JSON {b, upper, lower}");
  text(res, "--alpha-i", "alpha_i", "monomial x exponent");
  integer(res, "--beta-i", "beta_i", "monomial y exponent");
  integer(res, "--l-max", "l_max", "highest x derivative");
  integer(res, "--m-max", "m_max", "highest y derivative");
  integer(res, "--grid-points", "grid_points", "samples per axis");
  num(res, "--delta-tol", "delta_tol", "comparability tolerance");
  text(res, "--principal", "principal", "principal-part check as JSON {M, l_max, min_delta}");

  Sub& pde = sub("pde", "spectral evolution and norm-ratio checks");
  text(pde, "--phase", "phase", phase_help);
  text(pde, "--kind", "kind", "dispersive | dissipative | fractional");
  num(pde, "--p", "p", "source exponent");
  text(pde, "--q", "q", "target exponent or inf");
  text(pde, "--tgrid", "t", "t grid MIN:MAX:N or list");
  num(pde, "--delta", "delta", "fractional order");
  num(pde, "--eta", "eta", "symbol cutoff");
  integer(pde, "--n", "n", "grid points per axis");
  num(pde, "--L", "L", "half period");
  num(pde, "--datum-rho", "datum_rho", "datum frequency support radius");
  num(pde, "--datum-rho0", "datum_rho0", "datum frequency plateau radius");
  text(pde, "--law", "law", "decay law EPSILON,M");
  toggle(pde, "--adapted", "adapted", "assert the coordinates are adapted");

  Sub& rep = sub("report", "merge run directories into one bundle");
  rep.app->add_option("runs", rep.flags.runs, "run directories or hashes")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  if (print_schema) {
    std::printf("%s\n", osc_config_schema());
    return 0;
  }
  std::string name;
  for (auto& [n, s] : subs) {
    if (s.app->parsed()) name = n;
  }
  if (name.empty()) {
    std::fprintf(stderr, "UsageError: a subcommand is required\n%s", app.help().c_str());
    return 1;
  }
  Sub& s = subs.at(name);
  json cfg = json::object();
  try {
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) {
        std::fprintf(stderr, "IOError: cannot read %s\n", config_path.c_str());
        return 2;
      }
      cfg = json::parse(in);
      if (!cfg.is_object()) throw std::invalid_argument("config file must hold a JSON object");
    }
    cfg["subcommand"] = name;
    apply(s.app, s.flags, cfg, s.flag_of);
    if (name == "report") cfg["runs"] = s.flags.runs;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "UsageError: %s\n", e.what());
    return 1;
  }
  if (!out_dir.empty()) cfg["outdir"] = out_dir;
  if (app.get_option("--seed")->count()) cfg["seed"] = seed;
  if (app.get_option("--threads")->count()) cfg["threads"] = threads;

  osc_record* rec = nullptr;
  int rc = osc_run(cfg.dump().c_str(), &rec);
  if (rec) std::printf("%s\n", osc_record_json(rec));
  if (rc != OSC_OK) std::fprintf(stderr, "%s\n", osc_last_error());
  osc_record_free(rec);
  return rc;
}
