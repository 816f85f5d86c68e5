#include "peerlabel/manifest.hpp"

#include <algorithm>

#include "peerlabel/hash.hpp"

namespace peerlabel {

const std::vector<std::string>& RunManifest::stage_order() {
  static const std::vector<std::string> order{"ingest", "label", "verify", "report"};
  return order;
}

RunManifest RunManifest::load(const std::filesystem::path& run_dir) {
  RunManifest m;
  const auto path = run_dir / kFileName;
  if (!std::filesystem::exists(path)) return m;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
    m.run_id = j.at("run_id").get<std::string>();
    m.config = j.at("config");
    for (const auto& [name, s] : j.at("stages").items()) {
      StageRecord r;
      r.completed = s.at("completed").get<bool>();
      r.inputs = s.at("inputs").get<std::map<std::string, std::string>>();
      r.outputs = s.at("outputs").get<std::map<std::string, std::string>>();
      r.info = s.value("info", nlohmann::json::object());
      m.stages.emplace(name, std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw StageError("unreadable manifest " + path.string() + ": " + e.what());
  }
  return m;
}

std::string RunManifest::serialize() const {
  nlohmann::json j;
  j["run_id"] = run_id;
  j["config"] = config;
  j["stages"] = nlohmann::json::object();
  for (const auto& [name, r] : stages) {
    j["stages"][name] = {{"completed", r.completed}, {"inputs", r.inputs}, {"outputs", r.outputs}, {"info", r.info}};
  }
  return j.dump(2) + "\n";
}

void RunManifest::save(const std::filesystem::path& run_dir) const { write_file_atomic(run_dir / kFileName, serialize()); }

void RunManifest::bind_config(const std::string& key, const nlohmann::json& value) {
  if (auto it = config.find(key); it != config.end()) {
    if (*it != value) {
      throw StageError("config mismatch for '" + key + "': run has " + it->dump() + ", requested " + value.dump() +
                       " (use a new --run-dir)");
    }
    return;
  }
  config[key] = value;
}

std::optional<nlohmann::json> RunManifest::config_value(const std::string& key) const {
  if (auto it = config.find(key); it != config.end()) return *it;
  return std::nullopt;
}

bool RunManifest::completed(const std::string& stage) const {
  auto it = stages.find(stage);
  return it != stages.end() && it->second.completed;
}

void RunManifest::require(const std::string& stage, const std::filesystem::path& run_dir) const {
  if (!completed(stage)) throw StageError("stage '" + stage + "' has not completed in " + run_dir.string());
  for (const auto& [file, hash] : stages.at(stage).outputs) {
    const auto path = run_dir / file;
    if (!std::filesystem::exists(path) || sha256_file(path) != hash) {
      throw StageError("output " + file + " of stage '" + stage + "' changed since it was recorded");
    }
  }
}

void RunManifest::complete(const std::string& stage, StageRecord record) {
  const auto& order = stage_order();
  const auto pos = std::find(order.begin(), order.end(), stage);
  auto it = stages.find(stage);
  const bool changed = it == stages.end() || it->second.outputs != record.outputs;
  record.completed = true;
  stages[stage] = std::move(record);
  if (changed && pos != order.end()) {
    for (auto later = pos + 1; later != order.end(); ++later) {
      if (auto s = stages.find(*later); s != stages.end()) s->second.completed = false;
    }
  }
}

}  // namespace peerlabel
