#include "eyeedge/nn/config.hpp"

#include "eyeedge/common/bytes.hpp"

namespace eyeedge::nn {

using nlohmann::json;

const json& builtin_config() {
  static const json parsed = json::parse(builtin_config_text());
  return parsed;
}

json load_config_file(const std::string& path) {
  json j = json::parse(read_file_text(path));
  if (j.value("schema_version", 0) != kConfigSchemaVersion) {
    throw std::invalid_argument(path + ": unsupported config schema_version");
  }
  return j;
}

LayerSpec layer_from_json(const json& j) {
  LayerSpec s;
  s.kind = layer_kind_from_string(j.at("kind").get<std::string>());
  switch (s.kind) {
    case LayerKind::conv2d:
    case LayerKind::depthwise_conv: {
      const auto k = j.at("kernel");
      if (k.is_array()) {
        s.kernel_h = k.at(0).get<std::size_t>();
        s.kernel_w = k.at(1).get<std::size_t>();
      } else {
        s.kernel_h = s.kernel_w = k.get<std::size_t>();
      }
      s.stride = j.value("stride", std::size_t{1});
      const std::string pad = j.value("padding", std::string("valid"));
      if (pad != "valid" && pad != "same") throw std::invalid_argument("padding must be valid or same");
      s.padding = pad == "same" ? Padding::same : Padding::valid;
      if (s.kind == LayerKind::conv2d) s.units = j.at("filters").get<std::size_t>();
      break;
    }
    case LayerKind::pointwise_conv:
      s.units = j.at("filters").get<std::size_t>();
      break;
    case LayerKind::max_pool:
      s.kernel_h = s.kernel_w = j.at("size").get<std::size_t>();
      s.stride = j.value("stride", s.kernel_h);
      break;
    case LayerKind::activation: {
      const std::string fn = j.at("fn").get<std::string>();
      if (fn != "relu" && fn != "linear") throw std::invalid_argument("activation must be relu or linear");
      s.activation = fn == "relu" ? Activation::relu : Activation::linear;
      break;
    }
    case LayerKind::flatten:
      break;
    case LayerKind::dense:
    case LayerKind::gru:
    case LayerKind::lstm:
      s.units = j.at("units").get<std::size_t>();
      break;
  }
  return s;
}

json layer_to_json(const LayerSpec& s) {
  json j;
  j["kind"] = to_string(s.kind);
  switch (s.kind) {
    case LayerKind::conv2d:
    case LayerKind::depthwise_conv:
      j["kernel"] = {s.kernel_h, s.kernel_w};
      j["stride"] = s.stride;
      j["padding"] = s.padding == Padding::same ? "same" : "valid";
      if (s.kind == LayerKind::conv2d) j["filters"] = s.units;
      break;
    case LayerKind::pointwise_conv:
      j["filters"] = s.units;
      break;
    case LayerKind::max_pool:
      j["size"] = s.kernel_h;
      j["stride"] = s.stride;
      break;
    case LayerKind::activation:
      j["fn"] = s.activation == Activation::relu ? "relu" : "linear";
      break;
    case LayerKind::flatten:
      break;
    case LayerKind::dense:
    case LayerKind::gru:
    case LayerKind::lstm:
      j["units"] = s.units;
      break;
  }
  return j;
}

ModelConfig model_config(const json& config, const std::string& size, const std::string& name) {
  const json& models = config.at("models");
  if (!models.contains(size)) throw std::invalid_argument("no model size '" + size + "' in config");
  if (!models.at(size).contains(name)) throw std::invalid_argument("no model '" + name + "' of size " + size);
  const json& m = models.at(size).at(name);
  ModelConfig mc;
  mc.name = name;
  mc.input_shape = m.at("input").get<Shape>();
  mc.window = m.value("window", std::size_t{1});
  if (m.contains("trunk")) {
    for (const json& l : config.at("trunks").at(m.at("trunk").get<std::string>())) {
      mc.layers.push_back(layer_from_json(l));
    }
  }
  for (const json& l : m.at("head")) mc.layers.push_back(layer_from_json(l));
  return mc;
}

ModelConfig model_config(const std::string& size, const std::string& name) {
  return model_config(builtin_config(), size, name);
}

TrainConfig train_config(const json& config) {
  TrainConfig cfg;
  if (config.contains("train")) {
    const json& t = config.at("train");
    cfg.learning_rate = t.value("learning_rate", cfg.learning_rate);
    cfg.decay = t.value("decay", cfg.decay);
    cfg.batch_size = t.value("batch_size", cfg.batch_size);
  }
  cfg.validate();
  return cfg;
}

}  // namespace eyeedge::nn
