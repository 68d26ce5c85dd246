#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "osclab/error.hpp"
#include "test_util.hpp"
#include "osclab/harness.hpp"
#include "osclab/osclab.h"

using namespace osc;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("osclab-unit-" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int cli(const std::string& args) {
  const std::string cmd = std::string(OSCLAB_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("schema validation") {
  CHECK(code_of([] { resolve_config(json::array()); }) == ErrorCode::schema);
  CHECK(code_of([] { resolve_config({{"phase", "[[2,2,1,1]]"}}); }) == ErrorCode::schema);
  CHECK(code_of([] { resolve_config({{"subcommand", "nope"}}); }) == ErrorCode::schema);
  CHECK(code_of([] { resolve_config({{"subcommand", "predict"}}); }) == ErrorCode::schema);
  CHECK(code_of([] { resolve_config({{"subcommand", "predict"}, {"phase", "[[2,2,1,1]]"}, {"colour", 1}}); }) ==
        ErrorCode::schema);
  CHECK(code_of([] { resolve_config({{"subcommand", "predict"}, {"phase", "[[2,2,1,1]]"}, {"tol", 1e-8}}); }) ==
        ErrorCode::schema);
  CHECK(code_of([] { resolve_config({{"subcommand", "integrate"}, {"phase", "[[2,2,1,1]]"}, {"tol", -1.0}}); }) ==
        ErrorCode::schema);
  CHECK(code_of([] { resolve_config({{"subcommand", "predict"}, {"phase", "[[1,x]]"}}); }) == ErrorCode::validation);
  json r = resolve_config({{"subcommand", "integrate"}, {"phase", json::array({json::array({2, 2, 1, 1})})}});
  CHECK(r["phase"] == "[[2,2,1,1]]");
  CHECK(r["tol"] == 1e-8);
  CHECK(r["bump"]["rho0"] == 0.25);
  CHECK(r["seed"] == 0);
  CHECK(config_schema()["properties"].contains("subcommand"));
}

TEST_CASE("config hash is canonical") {
  json a = {{"subcommand", "predict"}, {"phase", "[[2,2,1,1]]"}, {"adapted", true}};
  json b = json::parse(R"({"adapted": true, "phase": "[[2,2,1,1]]", "subcommand": "predict", "threads": 8})");
  json c = a;
  c["outdir"] = "/elsewhere";
  const std::string h = config_hash(resolve_config(a));
  CHECK(h.size() == 16);
  CHECK(config_hash(resolve_config(b)) == h);
  CHECK(config_hash(resolve_config(c)) == h);
  json d = a;
  d["seed"] = 3;
  CHECK(config_hash(resolve_config(d)) != h);
}

TEST_CASE("cache root precedence") {
  ::setenv("OSC_CACHE_DIR", "/tmp/from-env", 1);
  CHECK(cache_root({{"outdir", "x"}}) == "x");
  CHECK(cache_root(json::object()) == "/tmp/from-env");
  ::unsetenv("OSC_CACHE_DIR");
  CHECK(cache_root(json::object()) == "osclab-out");
}

TEST_CASE("predict run, cache hit and headers") {
  fs::path root = fresh_dir("predict");
  json cfg = {{"subcommand", "predict"}, {"phase", "[[2,2,1,1]]"}, {"adapted", true}, {"outdir", root.string()}};
  RunRecord a = run(cfg);
  CHECK_FALSE(a.cached);
  json out = json::parse(slurp(fs::path(a.directory) / "predict.json"));
  CHECK(out["epsilon"] == "1/2");
  CHECK(out["m"] == 1);
  CHECK(out["newton_distance"] == "2");
  CHECK(out["_meta"]["config_hash"] == a.config_hash);
  const std::string first = slurp(fs::path(a.directory) / "predict.json");
  RunRecord b = run(cfg);
  CHECK(b.cached);
  CHECK(b.config_hash == a.config_hash);
  CHECK(slurp(fs::path(b.directory) / "predict.json") == first);

  json unasserted = cfg;
  unasserted.erase("adapted");
  CHECK(code_of([&] { run(unasserted); }) == ErrorCode::not_asserted);
}

TEST_CASE("scan and fit runs write CSV with a header comment") {
  fs::path root = fresh_dir("scan");
  json cfg = {{"subcommand", "scan"},
              {"phase", "[[2,0,1,1],[0,2,1,1]]"},
              {"lambda", {{"min", 100}, {"max", 1e4}, {"n", 8}}},
              {"outdir", root.string()}};
  RunRecord r = run(cfg);
  const std::string csv = slurp(fs::path(r.directory) / "scan.csv");
  CHECK(csv.rfind("# config_hash=" + r.config_hash + " version=" + kVersion + "\n", 0) == 0);
  CHECK(csv.find("lambda1,mu1,mu2,abs_value,abs_error,regime_ratio\n") != std::string::npos);

  json fit = {{"subcommand", "fit"},
              {"input", (fs::path(r.directory) / "scan.csv").string()},
              {"outdir", root.string()}};
  CHECK(code_of([&] { run(fit); }) == ErrorCode::insufficient_data);
}

TEST_CASE("integrate with an exhausted budget still records the result") {
  fs::path root = fresh_dir("budget");
  json cfg = {{"subcommand", "integrate"}, {"phase", "[[2,0,1,1],[0,2,1,1]]"}, {"lambda1", 1e4},
              {"panel_budget", 16}, {"outdir", root.string()}};
  osc_record* rec = nullptr;
  CHECK(osc_run(cfg.dump().c_str(), &rec) == OSC_ERR_NUMERICAL);
  REQUIRE(rec != nullptr);
  CHECK(std::string(osc_last_error_name()) == "BudgetExceeded");
  json res = json::parse(slurp(fs::path(osc_record_directory(rec)) / "result.json"));
  CHECK(res["converged"] == false);
  osc_record_free(rec);
}

TEST_CASE("report merges runs and rejects mixed phases") {
  fs::path root = fresh_dir("report");
  auto predict = [&](const char* phase) {
    return run({{"subcommand", "predict"}, {"phase", phase}, {"adapted", true}, {"outdir", root.string()}});
  };
  RunRecord a = predict("[[2,2,1,1]]");
  RunRecord s = run({{"subcommand", "sublevel"},
                     {"phase", "[[2,2,1,1]]"},
                     {"r", {{"min", 1e-6}, {"max", 1e-1}, {"n", 8}}},
                     {"outdir", root.string()}});
  RunRecord rep = run({{"subcommand", "report"}, {"runs", {a.directory, s.config_hash}}, {"outdir", root.string()}});
  const std::string bundle = slurp(fs::path(rep.directory) / "bundle.csv");
  CHECK(bundle.find("run,subcommand,series,x,y,y_err") != std::string::npos);
  CHECK(bundle.find(",sublevel,measure,") != std::string::npos);
  const std::string text = slurp(fs::path(rep.directory) / "summary.txt");
  CHECK(text.find("predicted epsilon 1/2") != std::string::npos);
  CHECK(text.find("sublevel fit epsilon") != std::string::npos);

  RunRecord b = predict("[[2,0,1,1],[0,2,1,1]]");
  CHECK(code_of([&] { run({{"subcommand", "report"}, {"runs", {a.directory, b.directory}}, {"outdir", root.string()}}); }) ==
        ErrorCode::mixed_phases);
}

TEST_CASE("C API status codes") {
  osc_record* rec = nullptr;
  CHECK(osc_run(nullptr, &rec) == OSC_ERR_USAGE);
  CHECK(osc_run("{not json", &rec) == OSC_ERR_VALIDATION);
  CHECK(std::string(osc_last_error_name()) == "SchemaError");
  CHECK(osc_run(R"({"subcommand":"predict","phase":"[[1,0,1,1]]"})", &rec) == OSC_ERR_VALIDATION);
  CHECK(rec == nullptr);
  char* hash = nullptr;
  REQUIRE(osc_config_hash(R"({"subcommand":"predict","phase":"[[2,2,1,1]]","threads":4})", &hash) == OSC_OK);
  char* hash1 = nullptr;
  REQUIRE(osc_config_hash(R"({"phase":"[[2,2,1,1]]","subcommand":"predict"})", &hash1) == OSC_OK);
  CHECK(std::string(hash) == std::string(hash1));
  osc_string_free(hash);
  osc_string_free(hash1);
  osc_phase* ph = nullptr;
  REQUIRE(osc_phase_parse("[[2,2,1,1]]", &ph) == OSC_OK);
  double v = 0;
  CHECK(osc_phase_eval(ph, 1.0, 2.0, &v) == OSC_OK);
  CHECK(v == 4.0);
  CHECK(std::string(osc_phase_literal(ph)) == "[[2,2,1,1]]");
  osc_phase_free(ph);
  CHECK(osc_phase_parse("[[0,0,1,1]]", &ph) == OSC_ERR_VALIDATION);
  CHECK(std::string(osc_version()) == kVersion);
  CHECK(json::parse(osc_config_schema())["type"] == "object");
}

TEST_CASE("CLI exit codes") {
  fs::path root = fresh_dir("cli");
  const std::string out = "--out " + root.string();
  CHECK(cli(out + " predict --phase '[[2,2,1,1]]' --adapted") == 0);
  CHECK(cli(out + " predict --phase '[[1,x' --adapted") == 2);
  CHECK(cli(out + " predict --no-such-flag") == 1);
  CHECK(cli(out) == 1);
  CHECK(cli(out + " integrate --phase '[[2,0,1,1],[0,2,1,1]]' --lambda1 10000 --panel-budget 16") == 3);
  CHECK(cli(out + " pde --kind fractional --phase '[[2,0,1,1],[0,2,1,1]]' --delta 1 --n 128 --L 32") == 2);
  CHECK(cli("--config /nonexistent/config.json predict") == 2);
}

TEST_CASE("resolution-check runs the principal-part check with the principal weight") {
  fs::path dir = fresh_dir("principal");
  json cfg = {{"subcommand", "resolution-check"}, {"phase", "[[2,2,1,1]]"}, {"outdir", dir.string()},
              {"wedge", {{"b", 0.5}, {"upper", {{"coeff", 1.0}, {"exponent", 1}}}}}, {"alpha_i", 2}, {"beta_i", 2},
              {"principal", {{"M", 1}}}};
  RunRecord r = run(cfg);
  json body = json::parse(slurp(fs::path(r.directory) / "resolution.json"));
  CHECK(body["principal"]["alpha_min"] == "4");
  CHECK(body["principal"]["r"] == "y^2");
  CHECK(body["principal"]["pass"] == true);
  CHECK(body["pass"] == true);
}
