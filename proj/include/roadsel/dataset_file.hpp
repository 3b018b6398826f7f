#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "roadsel/geometry.hpp"

namespace roadsel::data {

inline constexpr int kDatasetFormatVersion = 1;

struct DatasetEntry {
  geometry::Road road;
  nlohmann::json meta = nlohmann::json::object();  // free-form: generator/driver parameters, provenance
};

struct Dataset {
  std::vector<DatasetEntry> entries;

  std::size_t size() const { return entries.size(); }
  std::size_t count(Label label) const;
  std::size_t unlabeled() const;
  // Ids of entries without a label, in file order.
  std::vector<std::string> unlabeled_ids() const;
};

/// Canonical document:
/// {"format": "roadsel-dataset", "format_version": 1,
///  "entries": [{"id", "points": [[x, y], ...], "label": "PASS"|"FAIL" (optional), "meta": {...}}]}
nlohmann::json to_json(const Dataset& ds);

/// Reads entries written by some external tool. Adapters are tried in
/// registration order; the first whose accepts() returns true parses the document.
class DatasetAdapter {
 public:
  virtual ~DatasetAdapter() = default;
  virtual std::string name() const = 0;
  virtual bool accepts(const nlohmann::json& doc) const = 0;
  // Throws ValidationError naming the offending entry id.
  virtual Dataset read(const nlohmann::json& doc) const = 0;
};

class CanonicalAdapter final : public DatasetAdapter {
 public:
  std::string name() const override { return "canonical"; }
  bool accepts(const nlohmann::json& doc) const override;
  Dataset read(const nlohmann::json& doc) const override;
};

void register_adapter(std::shared_ptr<const DatasetAdapter> adapter);
std::vector<std::shared_ptr<const DatasetAdapter>> adapters();

Dataset dataset_from_json(const nlohmann::json& doc);
Dataset parse_dataset(std::string_view text);
std::string serialize_dataset(const Dataset& ds);

Dataset load_dataset(const std::filesystem::path& path);
void save_dataset(const std::filesystem::path& path, const Dataset& ds);

}  // namespace roadsel::data
