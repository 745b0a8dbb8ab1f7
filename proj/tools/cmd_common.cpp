#include <filesystem>
#include <iostream>
#include <map>

#include "commands.hpp"
#include "eyeedge/common/bytes.hpp"
#include "eyeedge/nn/config.hpp"

namespace eyeedge::cli {

void echo_config(const std::string& command, const nlohmann::json& resolved) {
  nlohmann::json j = resolved;
  j["command"] = command;
  std::cout << "config " << j.dump() << '\n';
}

const nlohmann::json& models_config(const std::string& path) {
  if (path.empty()) return nn::builtin_config();
  static std::map<std::string, nlohmann::json> loaded;
  auto it = loaded.find(path);
  if (it == loaded.end()) it = loaded.emplace(path, nn::load_config_file(path)).first;
  return it->second;
}

std::string variant_of(const nn::ModelGraph& graph) {
  if (graph.dtype == nn::DType::f16) return "quantised";
  if (graph.has_masks()) return "pruned";
  return "baseline";
}

std::string label_of(const nn::ModelGraph& graph) {
  const std::string v = variant_of(graph);
  return v == "baseline" ? graph.name : graph.name + "_" + v;
}

void ensure_dir(const std::string& dir) { std::filesystem::create_directories(dir); }

void write_text(const std::string& dir, const std::string& name, const std::string& text) {
  ensure_dir(dir);
  const std::string path = (std::filesystem::path(dir) / name).string();
  write_file_text(path, text);
  std::cout << "wrote " << path << '\n';
}

}  // namespace eyeedge::cli
