#include "roadsel/manifest.hpp"

#include "roadsel/errors.hpp"
#include "roadsel/io.hpp"

namespace roadsel {

using nlohmann::json;

void RunManifest::add_input(const std::filesystem::path& path) {
  inputs.emplace_back(path.string(), io::sha256_file(path));
}

json to_json(const RunManifest& m) {
  json inputs = json::array();
  for (const auto& [path, digest] : m.inputs) inputs.push_back({{"path", path}, {"sha256", digest}});
  return {{"format", "roadsel-manifest"},
          {"format_version", kManifestVersion},
          {"command", m.command},
          {"argv", m.argv},
          {"config", m.config},
          {"seeds", m.seeds},
          {"inputs", inputs},
          {"outputs", m.outputs},
          {"duration_seconds", m.duration_seconds}};
}

RunManifest manifest_from_json(const json& doc) {
  try {
    if (doc.at("format").get<std::string>() != "roadsel-manifest") throw ValidationError("not a run manifest");
    if (doc.at("format_version").get<int>() != kManifestVersion) {
      throw ValidationError("unsupported manifest format_version");
    }
    RunManifest m;
    m.command = doc.at("command").get<std::string>();
    m.argv = doc.at("argv").get<std::vector<std::string>>();
    m.config = doc.value("config", json::object());
    m.seeds = doc.value("seeds", json::object());
    for (const auto& i : doc.value("inputs", json::array())) {
      m.inputs.emplace_back(i.at("path").get<std::string>(), i.at("sha256").get<std::string>());
    }
    m.outputs = doc.value("outputs", std::vector<std::string>{});
    m.duration_seconds = doc.value("duration_seconds", 0.0);
    return m;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed run manifest: ") + e.what());
  }
}

std::filesystem::path manifest_path_for(const std::filesystem::path& output) {
  return std::filesystem::path(output.string() + ".manifest.json");
}

void save_manifest(const std::filesystem::path& path, const RunManifest& m) {
  io::write_file_atomic(path, to_json(m).dump(2) + "\n");
}

RunManifest load_manifest(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(io::read_file(path));
  } catch (const json::exception& e) {
    throw ValidationError("manifest " + path.string() + " is not valid JSON: " + e.what());
  }
  return manifest_from_json(doc);
}

}  // namespace roadsel
