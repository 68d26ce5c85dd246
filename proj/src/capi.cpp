#include "osclab/osclab.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "osclab/error.hpp"
#include "osclab/harness.hpp"
#include "osclab/phase.hpp"

struct osc_record {
  osc::RunRecord record;
  std::string json;
};

struct osc_phase {
  osc::Phase phase;
  std::string literal;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_error_name;

void clear_error() {
  g_error.clear();
  g_error_name.clear();
}

int fail(int status, const char* name, const std::string& message) {
  g_error_name = name;
  g_error = message;
  return status;
}

int status_of(osc::ErrorCode code) { return osc::is_numerical(code) ? OSC_ERR_NUMERICAL : OSC_ERR_VALIDATION; }

template <class F>
int guarded(F&& body) {
  clear_error();
  try {
    return body();
  } catch (const osc::Error& e) {
    return fail(status_of(e.code()), osc::error_name(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(OSC_ERR_VALIDATION, "SchemaError", std::string("SchemaError: ") + e.what());
  } catch (const std::bad_alloc&) {
    return fail(OSC_ERR_NUMERICAL, "Overflow", "Overflow: out of memory");
  } catch (const std::exception& e) {
    return fail(OSC_ERR_NUMERICAL, "InternalError", std::string("InternalError: ") + e.what());
  }
}

nlohmann::json parse_config(const char* text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw osc::Error(osc::ErrorCode::schema, std::string("config is not valid JSON: ") + e.what());
  }
}

char* dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

}  // namespace

extern "C" {

const char* osc_version(void) { return osc::kVersion; }
const char* osc_last_error(void) { return g_error.c_str(); }
const char* osc_last_error_name(void) { return g_error_name.c_str(); }

int osc_run(const char* config_json, osc_record** out) {
  if (!config_json || !out) return fail(OSC_ERR_USAGE, "UsageError", "osc_run needs a config and an output pointer");
  *out = nullptr;
  return guarded([&] {
    auto* rec = new osc_record{osc::run(parse_config(config_json)), {}};
    rec->json = osc::record_to_json(rec->record).dump(2);
    *out = rec;
    const auto& s = rec->record.summary;
    if (s.contains("error")) {
      const std::string name = s["error"].value("code", "BudgetExceeded");
      return fail(OSC_ERR_NUMERICAL, name.c_str(), name + ": " + s["error"].value("message", ""));
    }
    return static_cast<int>(OSC_OK);
  });
}

const char* osc_record_json(const osc_record* rec) { return rec ? rec->json.c_str() : nullptr; }
const char* osc_record_directory(const osc_record* rec) { return rec ? rec->record.directory.c_str() : nullptr; }
const char* osc_record_hash(const osc_record* rec) { return rec ? rec->record.config_hash.c_str() : nullptr; }
int osc_record_cached(const osc_record* rec) { return rec && rec->record.cached ? 1 : 0; }
void osc_record_free(osc_record* rec) { delete rec; }

int osc_resolve_config(const char* config_json, char** out) {
  if (!config_json || !out) return fail(OSC_ERR_USAGE, "UsageError", "osc_resolve_config needs a config and an output pointer");
  *out = nullptr;
  return guarded([&] {
    *out = dup(osc::resolve_config(parse_config(config_json)).dump());
    return static_cast<int>(OSC_OK);
  });
}

int osc_config_hash(const char* config_json, char** out) {
  if (!config_json || !out) return fail(OSC_ERR_USAGE, "UsageError", "osc_config_hash needs a config and an output pointer");
  *out = nullptr;
  return guarded([&] {
    *out = dup(osc::config_hash(osc::resolve_config(parse_config(config_json))));
    return static_cast<int>(OSC_OK);
  });
}

const char* osc_config_schema(void) {
  static const std::string s = osc::config_schema().dump(2);
  return s.c_str();
}

void osc_string_free(char* s) { std::free(s); }

int osc_phase_parse(const char* literal, osc_phase** out) {
  if (!literal || !out) return fail(OSC_ERR_USAGE, "UsageError", "osc_phase_parse needs a literal and an output pointer");
  *out = nullptr;
  return guarded([&] {
    osc::Phase p = osc::Phase::from_literal(literal);
    std::string lit = p.to_literal();
    *out = new osc_phase{std::move(p), std::move(lit)};
    return static_cast<int>(OSC_OK);
  });
}

const char* osc_phase_literal(const osc_phase* phase) { return phase ? phase->literal.c_str() : nullptr; }

int osc_phase_eval(const osc_phase* phase, double x, double y, double* out) {
  if (!phase || !out) return fail(OSC_ERR_USAGE, "UsageError", "osc_phase_eval needs a phase and an output pointer");
  clear_error();
  *out = phase->phase.eval(x, y);
  return OSC_OK;
}

void osc_phase_free(osc_phase* phase) { delete phase; }

}  // extern "C"
