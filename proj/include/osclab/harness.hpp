#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace osc {

inline constexpr const char* kVersion = "0.1.0";

/// Manifest of one run directory.
struct RunRecord {
  std::string config_hash;
  std::string version;
  std::string created;
  std::string subcommand;
  std::string phase;  ///< canonical phase literal, empty when the run has none
  std::string directory;
  std::vector<std::string> files;
  nlohmann::json summary;
  bool cached = false;
};

/// Checks keys and types against the schema and fills defaults. Throws SchemaError or ValidationError.
nlohmann::json resolve_config(const nlohmann::json& config);

/// First 16 hex digits of SHA-256 over the sorted-key dump of the resolved config without threads and outdir.
std::string config_hash(const nlohmann::json& resolved);

/// Cache root: the config's outdir, else $OSC_CACHE_DIR, else "osclab-out".
std::string cache_root(const nlohmann::json& config);

/// Resolves, hashes and dispatches the config; a repeated identical config returns the cached record.
RunRecord run(const nlohmann::json& config);

/// Reads <dir>/manifest.json.
RunRecord load_record(const std::string& directory);

nlohmann::json record_to_json(const RunRecord& r);

/// The published config schema as JSON Schema.
const nlohmann::json& config_schema();

}  // namespace osc
