#include "roadsel/nn/checkpoint.hpp"

#include <array>
#include <string>

#include "roadsel/errors.hpp"
#include "roadsel/io.hpp"

namespace roadsel::nn {
namespace {

using nlohmann::json;

constexpr std::array<const char*, kNumGates> kGateNames = {"input", "forget", "output", "candidate"};
constexpr std::array<const char*, 2> kDirNames = {"forward", "backward"};

template <typename Block>
json matrix_rows(const Block& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

template <typename Block>
void read_rows(const json& rows, Block m, const std::string& what) {
  if (!rows.is_array() || static_cast<Eigen::Index>(rows.size()) != m.rows()) {
    throw ValidationError("checkpoint field " + what + " has the wrong number of rows");
  }
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const auto& row = rows[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != m.cols()) {
      throw ValidationError("checkpoint field " + what + " has the wrong number of columns");
    }
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
}

template <typename Vec>
void read_vector(const json& arr, Vec v, const std::string& what) {
  if (!arr.is_array() || static_cast<Eigen::Index>(arr.size()) != v.size()) {
    throw ValidationError("checkpoint field " + what + " has the wrong length");
  }
  for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = arr[static_cast<std::size_t>(k)].get<double>();
}

}  // namespace

json to_json(const TrainConfig& cfg) {
  return {{"epochs", cfg.epochs},
          {"batch_size", cfg.batch_size},
          {"learning_rate", cfg.learning_rate},
          {"adam_beta1", cfg.adam_beta1},
          {"adam_beta2", cfg.adam_beta2},
          {"adam_epsilon", cfg.adam_epsilon},
          {"rng_seed", cfg.rng_seed},
          {"hidden_size", cfg.hidden_size},
          {"bce_clamp_epsilon", cfg.bce_clamp_epsilon},
          {"shuffle_each_epoch", cfg.shuffle_each_epoch},
          {"standardize_features", cfg.standardize_features},
          {"grad_clip_norm", cfg.grad_clip_norm},
          {"precision", cfg.precision == Precision::kFloat32 ? "float32" : "float64"}};
}

TrainConfig train_config_from_json(const json& doc) {
  TrainConfig cfg;
  cfg.epochs = doc.value("epochs", cfg.epochs);
  cfg.batch_size = doc.value("batch_size", cfg.batch_size);
  cfg.learning_rate = doc.value("learning_rate", cfg.learning_rate);
  cfg.adam_beta1 = doc.value("adam_beta1", cfg.adam_beta1);
  cfg.adam_beta2 = doc.value("adam_beta2", cfg.adam_beta2);
  cfg.adam_epsilon = doc.value("adam_epsilon", cfg.adam_epsilon);
  cfg.rng_seed = doc.value("rng_seed", cfg.rng_seed);
  cfg.hidden_size = doc.value("hidden_size", cfg.hidden_size);
  cfg.bce_clamp_epsilon = doc.value("bce_clamp_epsilon", cfg.bce_clamp_epsilon);
  cfg.shuffle_each_epoch = doc.value("shuffle_each_epoch", cfg.shuffle_each_epoch);
  cfg.standardize_features = doc.value("standardize_features", cfg.standardize_features);
  cfg.grad_clip_norm = doc.value("grad_clip_norm", cfg.grad_clip_norm);
  cfg.precision = doc.value("precision", std::string("float64")) == "float32" ? Precision::kFloat32
                                                                              : Precision::kFloat64;
  return cfg;
}

json to_json(const BiLstmClassifier& model) {
  const auto& p = model.params;
  const int H = p.hidden();
  json doc;
  doc["format"] = "roadsel-checkpoint";
  doc["format_version"] = kCheckpointVersion;
  doc["kind"] = "its4sdc";
  doc["hidden_size"] = H;
  doc["input_size"] = p.input();
  for (int d = 0; d < 2; ++d) {
    const auto dir = static_cast<Direction>(d);
    json gates;
    for (int g = 0; g < kNumGates; ++g) {
      gates[kGateNames[g]] = {{"W", matrix_rows(p.W(dir).middleRows(g * H, H))},
                              {"U", matrix_rows(p.U(dir).middleRows(g * H, H))},
                              {"b", std::vector<double>(p.b(dir).data() + g * H, p.b(dir).data() + (g + 1) * H)}};
    }
    doc[kDirNames[d]] = std::move(gates);
  }
  doc["dense"] = {{"weights", std::vector<double>(p.dense_w().data(), p.dense_w().data() + 2 * H)},
                  {"bias", p.dense_b()}};
  doc["feature_standardization"] = {{"enabled", model.scaler.enabled},
                                    {"mean", model.scaler.mean},
                                    {"scale", model.scaler.scale}};
  doc["train_config"] = to_json(model.config);
  return doc;
}

BiLstmClassifier classifier_from_json(const json& doc) {
  try {
    if (doc.value("kind", std::string()) != "its4sdc") {
      throw ValidationError("checkpoint is not a recurrent classifier (kind=" + doc.value("kind", std::string("?")) +
                            ")");
    }
    if (doc.at("format_version").get<int>() != kCheckpointVersion) {
      throw ValidationError("unsupported checkpoint format_version");
    }
    const int H = doc.at("hidden_size").get<int>();
    const int D = doc.at("input_size").get<int>();
    BiLstmClassifier model;
    model.params = ParamSet(H, D);
    auto& p = model.params;
    for (int d = 0; d < 2; ++d) {
      const auto dir = static_cast<Direction>(d);
      const auto& gates = doc.at(kDirNames[d]);
      for (int g = 0; g < kNumGates; ++g) {
        const auto& gate = gates.at(kGateNames[g]);
        const std::string where = std::string(kDirNames[d]) + "." + kGateNames[g];
        read_rows(gate.at("W"), p.W(dir).middleRows(g * H, H), where + ".W");
        read_rows(gate.at("U"), p.U(dir).middleRows(g * H, H), where + ".U");
        read_vector(gate.at("b"), p.b(dir).segment(g * H, H), where + ".b");
      }
    }
    read_vector(doc.at("dense").at("weights"), p.dense_w(), "dense.weights");
    p.dense_b() = doc.at("dense").at("bias").get<double>();
    const auto& fs = doc.at("feature_standardization");
    model.scaler.enabled = fs.at("enabled").get<bool>();
    model.scaler.mean = fs.at("mean").get<std::array<double, 2>>();
    model.scaler.scale = fs.at("scale").get<std::array<double, 2>>();
    model.config = train_config_from_json(doc.at("train_config"));
    return model;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const BiLstmClassifier& model) {
  io::write_file_atomic(path, to_json(model).dump(1) + "\n");
}

BiLstmClassifier load_checkpoint(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(io::read_file(path));
  } catch (const json::exception& e) {
    throw ValidationError("cannot parse checkpoint " + path.string() + ": " + e.what());
  }
  return classifier_from_json(doc);
}

}  // namespace roadsel::nn
