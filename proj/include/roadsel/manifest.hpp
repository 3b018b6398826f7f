#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace roadsel {

inline constexpr int kManifestVersion = 1;

/// Reproducibility record written next to the outputs of every mutating command.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;  // full argument list, replayable
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json seeds = nlohmann::json::object();
  std::vector<std::pair<std::string, std::string>> inputs;  // path, sha256
  std::vector<std::string> outputs;
  double duration_seconds = 0.0;

  void add_input(const std::filesystem::path& path);
};

nlohmann::json to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& doc);

// "<path>.manifest.json"
std::filesystem::path manifest_path_for(const std::filesystem::path& output);
void save_manifest(const std::filesystem::path& path, const RunManifest& m);
RunManifest load_manifest(const std::filesystem::path& path);

}  // namespace roadsel
