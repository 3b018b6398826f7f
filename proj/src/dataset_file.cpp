#include "roadsel/dataset_file.hpp"

#include <algorithm>
#include <mutex>

#include "roadsel/errors.hpp"
#include "roadsel/io.hpp"

namespace roadsel::data {
namespace {

using nlohmann::json;

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

std::vector<std::shared_ptr<const DatasetAdapter>>& registry() {
  static std::vector<std::shared_ptr<const DatasetAdapter>> r = {std::make_shared<CanonicalAdapter>()};
  return r;
}

DatasetEntry read_entry(const json& e, std::size_t index) {
  std::string id = "#" + std::to_string(index);
  try {
    if (!e.is_object()) throw ValidationError("entry is not an object");
    id = e.at("id").get<std::string>();
    const auto& pts = e.at("points");
    if (!pts.is_array()) throw ValidationError("points is not a list");
    std::vector<geometry::Point2D> points;
    points.reserve(pts.size());
    for (const auto& p : pts) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
        throw ValidationError("point " + std::to_string(points.size()) + " is not an [x, y] pair");
      }
      points.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    std::optional<Label> label;
    if (e.contains("label") && !e["label"].is_null()) {
      const auto& l = e["label"];
      if (!l.is_string() || !(label = parse_label(l.get<std::string>()))) {
        throw ValidationError("label must be \"PASS\" or \"FAIL\", got " + l.dump());
      }
    }
    DatasetEntry out{geometry::Road(id, std::move(points), label), json::object()};
    if (e.contains("meta")) {
      if (!e["meta"].is_object()) throw ValidationError("meta must be an object");
      out.meta = e["meta"];
    }
    return out;
  } catch (const json::exception& ex) {
    throw ValidationError("dataset entry '" + id + "': " + ex.what());
  } catch (const ValidationError& ex) {
    const std::string what = ex.what();
    if (what.rfind("road '", 0) == 0) throw;
    throw ValidationError("dataset entry '" + id + "': " + what);
  }
}

}  // namespace

std::size_t Dataset::count(Label label) const {
  return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(), [&](const DatasetEntry& e) {
    return e.road.label() == label;
  }));
}

std::size_t Dataset::unlabeled() const { return unlabeled_ids().size(); }

std::vector<std::string> Dataset::unlabeled_ids() const {
  std::vector<std::string> ids;
  for (const auto& e : entries) {
    if (!e.road.label()) ids.push_back(e.road.id());
  }
  return ids;
}

json to_json(const Dataset& ds) {
  json entries = json::array();
  for (const auto& e : ds.entries) {
    json points = json::array();
    for (const auto& p : e.road.points()) points.push_back({p.x, p.y});
    json item = {{"id", e.road.id()}, {"points", std::move(points)}};
    if (e.road.label()) item["label"] = std::string(to_string(*e.road.label()));
    item["meta"] = e.meta;
    entries.push_back(std::move(item));
  }
  return {{"format", "roadsel-dataset"}, {"format_version", kDatasetFormatVersion}, {"entries", std::move(entries)}};
}

bool CanonicalAdapter::accepts(const json& doc) const {
  return doc.is_object() && doc.contains("entries") && doc.contains("format_version");
}

Dataset CanonicalAdapter::read(const json& doc) const {
  if (!doc.at("format_version").is_number_integer() || doc["format_version"].get<int>() != kDatasetFormatVersion) {
    throw ValidationError("unsupported dataset format_version " + doc["format_version"].dump());
  }
  const auto& entries = doc.at("entries");
  if (!entries.is_array()) throw ValidationError("dataset entries must be a list");
  Dataset ds;
  ds.entries.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) ds.entries.push_back(read_entry(entries[i], i));
  return ds;
}

void register_adapter(std::shared_ptr<const DatasetAdapter> adapter) {
  std::lock_guard lock(registry_mutex());
  registry().push_back(std::move(adapter));
}

std::vector<std::shared_ptr<const DatasetAdapter>> adapters() {
  std::lock_guard lock(registry_mutex());
  return registry();
}

Dataset dataset_from_json(const json& doc) {
  for (const auto& a : adapters()) {
    if (a->accepts(doc)) return a->read(doc);
  }
  throw ValidationError("no dataset adapter recognizes this document");
}

Dataset parse_dataset(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("dataset is not valid JSON: ") + e.what());
  }
  return dataset_from_json(doc);
}

std::string serialize_dataset(const Dataset& ds) { return to_json(ds).dump() + "\n"; }

Dataset load_dataset(const std::filesystem::path& path) { return parse_dataset(io::read_file(path)); }

void save_dataset(const std::filesystem::path& path, const Dataset& ds) {
  io::write_file_atomic(path, serialize_dataset(ds));
}

}  // namespace roadsel::data
