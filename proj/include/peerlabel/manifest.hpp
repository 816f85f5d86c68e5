#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace peerlabel {

/// Stage ordering or manifest/config mismatch. Maps to exit code 2.
struct StageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StageRecord {
  bool completed = false;
  std::map<std::string, std::string> inputs;   // file name -> sha256
  std::map<std::string, std::string> outputs;  // file name -> sha256
  nlohmann::json info = nlohmann::json::object();
};

/// Audit record for one run directory. Holds no timestamps, absolute paths
/// or credentials, so identical mock-provider runs serialize to identical
/// bytes.
struct RunManifest {
  std::string run_id;
  nlohmann::json config = nlohmann::json::object();  // flat key -> value
  std::map<std::string, StageRecord> stages;

  static constexpr const char* kFileName = "manifest.json";
  static const std::vector<std::string>& stage_order();

  static RunManifest load(const std::filesystem::path& run_dir);  // empty manifest if absent
  void save(const std::filesystem::path& run_dir) const;
  std::string serialize() const;

  /// Records `value` under `key`; a different existing value is a StageError.
  void bind_config(const std::string& key, const nlohmann::json& value);
  /// The configured value for `key`, if any.
  std::optional<nlohmann::json> config_value(const std::string& key) const;

  bool completed(const std::string& stage) const;
  /// Requires `stage` completed and its outputs unchanged on disk.
  void require(const std::string& stage, const std::filesystem::path& run_dir) const;
  /// Stores `record`; if its outputs changed, later stages lose their markers.
  void complete(const std::string& stage, StageRecord record);
};

}  // namespace peerlabel
