#pragma once

#include <string>
#include <string_view>

#include "json.hpp"

#include "eyeedge/nn/model.hpp"
#include "eyeedge/nn/train.hpp"

namespace eyeedge::nn {

inline constexpr int kConfigSchemaVersion = 1;

// The model/schedule definition file shipped as configs/models.json,
// compiled into the library.
std::string_view builtin_config_text();
const nlohmann::json& builtin_config();

nlohmann::json load_config_file(const std::string& path);

// size: "reference" or "tiny"; name: "cnn", "cnn_gru" or "cnn_lstm".
ModelConfig model_config(const nlohmann::json& config, const std::string& size, const std::string& name);
ModelConfig model_config(const std::string& size, const std::string& name);

LayerSpec layer_from_json(const nlohmann::json& j);
nlohmann::json layer_to_json(const LayerSpec& spec);

// Learning rate, decay and batch size from the "train" section; epochs and
// seed are left at their defaults.
TrainConfig train_config(const nlohmann::json& config);

}  // namespace eyeedge::nn
