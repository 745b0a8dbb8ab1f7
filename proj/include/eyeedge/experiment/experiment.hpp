#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eyeedge/eval/metrics.hpp"
#include "eyeedge/nn/train.hpp"
#include "eyeedge/pipeline/preprocess.hpp"

namespace eyeedge::experiment {

// A dataset directory loaded and preprocessed once.
struct PreparedData {
  std::vector<pipeline::Recording> recordings;
  std::vector<pipeline::PreparedRecording> prepared;

  // Sequences of the given recordings, in that order.
  nn::Dataset subset(const std::vector<std::size_t>& recs) const;
  std::vector<std::size_t> all() const;
  std::size_t skipped_frames() const;
};

PreparedData prepare_data(const std::string& dataset_dir, std::uint8_t face_threshold = 24);

// Recording-level split: recording i is held out when i % every == every - 1.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};
Split holdout_split(std::size_t recordings, std::size_t every = 5);

// One row per kept frame of the listed recordings, in example order.
struct PredictionRow {
  std::string recording;
  std::string position;
  std::size_t frame = 0;  // source frame index in the recording
  Gaze truth;
  Gaze pred;
  friend bool operator==(const PredictionRow&, const PredictionRow&) = default;
};

std::vector<PredictionRow> predict_rows(const nn::ModelGraph& graph, const PreparedData& data,
                                        const std::vector<std::size_t>& recs);
// Screen centre of each recording's device for every kept frame.
std::vector<PredictionRow> centre_rows(const PreparedData& data, const std::vector<std::size_t>& recs);

std::string predictions_csv(const std::vector<PredictionRow>& rows);
std::vector<PredictionRow> parse_predictions_csv(const std::string& text);

eval::EvalResult evaluate_rows(const std::string& model, std::size_t params, const std::vector<PredictionRow>& rows);

// Euclidean errors grouped by position tag (groups with fewer than two
// errors are left out). Empty when fewer than two groups remain.
std::optional<eval::AnovaResult> position_anova(const std::vector<PredictionRow>& rows);

// k-fold cross-validation over recordings: a fresh model per fold, built
// from `config` with a seed derived from cfg.seed and the fold number.
std::vector<eval::FoldResult> cross_validate(const nn::ModelConfig& config, const PreparedData& data, std::size_t k,
                                             const nn::TrainConfig& cfg);

struct TradeoffRow {
  std::string model;
  std::string variant;  // baseline, quantised or pruned
  double rmse_cm = 0.0;
  double r2 = 0.0;
  double mean_euclid_cm = 0.0;
  double delta_rmse_cm = 0.0;  // against the baseline row of the same model
  double delta_r2 = 0.0;
};

// Rows must list each model's baseline before its other variants.
std::vector<TradeoffRow> tradeoff_rows(const std::vector<std::pair<std::string, eval::EvalResult>>& variants);
std::string tradeoff_csv(const std::vector<TradeoffRow>& rows);
std::string tradeoff_markdown(const std::vector<TradeoffRow>& rows);

}  // namespace eyeedge::experiment
