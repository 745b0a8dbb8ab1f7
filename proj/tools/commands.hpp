#pragma once

#include <functional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "eyeedge/nn/model.hpp"

namespace eyeedge::cli {

using Runner = std::function<int()>;

// Each adds its subcommand to `app`; when that subcommand is selected the
// parse callback stores its action in `run`.
void add_synth(CLI::App& app, Runner& run);
void add_train(CLI::App& app, Runner& run);
void add_optimize(CLI::App& app, Runner& run);
void add_eval(CLI::App& app, Runner& run);
void add_report(CLI::App& app, Runner& run);
void add_heatmap(CLI::App& app, Runner& run);
void add_bench(CLI::App& app, Runner& run);
void add_serve(CLI::App& app, Runner& run);
void add_client(CLI::App& app, Runner& run);

// Prints the fully resolved options of a run as one JSON line.
void echo_config(const std::string& command, const nlohmann::json& resolved);

// The model definition file, or the compiled-in one for an empty path.
const nlohmann::json& models_config(const std::string& path);

// baseline, quantised (half storage) or pruned (carries masks).
std::string variant_of(const nn::ModelGraph& graph);
// Model name plus the variant when it is not the baseline.
std::string label_of(const nn::ModelGraph& graph);

void ensure_dir(const std::string& dir);
void write_text(const std::string& dir, const std::string& name, const std::string& text);

}  // namespace eyeedge::cli
