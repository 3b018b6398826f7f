#pragma once

#include <filesystem>

#include <json.hpp>

#include "roadsel/nn/model.hpp"

namespace roadsel::nn {

inline constexpr int kCheckpointVersion = 1;

// Self-describing checkpoint document; weight arrays are nested lists, one H x D / H x H
// row-major matrix per gate.
nlohmann::json to_json(const BiLstmClassifier& model);
BiLstmClassifier classifier_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& doc);

void save_checkpoint(const std::filesystem::path& path, const BiLstmClassifier& model);
BiLstmClassifier load_checkpoint(const std::filesystem::path& path);

}  // namespace roadsel::nn
