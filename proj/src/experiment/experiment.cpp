#include "eyeedge/experiment/experiment.hpp"

#include <algorithm>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "eyeedge/common/rng.hpp"

namespace eyeedge::experiment {

nn::Dataset PreparedData::subset(const std::vector<std::size_t>& recs) const {
  nn::Dataset d;
  for (std::size_t i : recs) d.sequences.push_back(prepared.at(i).sequence);
  return d;
}

std::vector<std::size_t> PreparedData::all() const {
  std::vector<std::size_t> v(recordings.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = i;
  return v;
}

std::size_t PreparedData::skipped_frames() const {
  std::size_t n = 0;
  for (const auto& p : prepared) n += p.skipped;
  return n;
}

PreparedData prepare_data(const std::string& dataset_dir, std::uint8_t face_threshold) {
  PreparedData d;
  const pipeline::BrightRegionDetector detector(face_threshold);
  for (const std::string& manifest : pipeline::load_dataset_index(dataset_dir + "/dataset.json")) {
    d.recordings.push_back(pipeline::load_recording(manifest));
    d.prepared.push_back(pipeline::prepare_recording(d.recordings.back(), detector));
  }
  if (d.recordings.empty()) throw std::runtime_error("dataset " + dataset_dir + " lists no recordings");
  return d;
}

Split holdout_split(std::size_t recordings, std::size_t every) {
  if (every < 2) throw std::invalid_argument("holdout interval must be at least 2");
  Split s;
  for (std::size_t i = 0; i < recordings; ++i) (i % every == every - 1 ? s.test : s.train).push_back(i);
  if (s.train.empty() || s.test.empty()) throw std::invalid_argument("too few recordings for a train/test split");
  return s;
}

namespace {

std::vector<PredictionRow> rows_for(const PreparedData& data, const std::vector<std::size_t>& recs,
                                    const std::vector<Gaze>& preds) {
  std::vector<PredictionRow> out;
  std::size_t k = 0;
  for (std::size_t r : recs) {
    const auto& rec = data.recordings.at(r);
    const auto& p = data.prepared.at(r);
    for (std::size_t j = 0; j < p.sequence.labels.size(); ++j) {
      out.push_back({rec.id, pipeline::to_string(rec.position), p.frame_index[j], p.sequence.labels[j], preds.at(k++)});
    }
  }
  if (k != preds.size()) throw std::logic_error("prediction count differs from example count");
  return out;
}

std::vector<Gaze> truths_of(const std::vector<PredictionRow>& rows) {
  std::vector<Gaze> v;
  for (const auto& r : rows) v.push_back(r.truth);
  return v;
}

std::vector<Gaze> preds_of(const std::vector<PredictionRow>& rows) {
  std::vector<Gaze> v;
  for (const auto& r : rows) v.push_back(r.pred);
  return v;
}

std::string exact(double v) {
  std::ostringstream s;
  s << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return s.str();
}

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

}  // namespace

std::vector<PredictionRow> predict_rows(const nn::ModelGraph& graph, const PreparedData& data,
                                        const std::vector<std::size_t>& recs) {
  return rows_for(data, recs, nn::predict_dataset(graph, data.subset(recs)));
}

std::vector<PredictionRow> centre_rows(const PreparedData& data, const std::vector<std::size_t>& recs) {
  std::vector<Gaze> preds;
  for (std::size_t r : recs) {
    const auto& dev = data.recordings.at(r).device;
    preds.insert(preds.end(), data.prepared.at(r).sequence.labels.size(),
                 Gaze{dev.screen_w_cm() / 2, dev.screen_h_cm() / 2});
  }
  return rows_for(data, recs, preds);
}

std::string predictions_csv(const std::vector<PredictionRow>& rows) {
  std::ostringstream os;
  os << "recording,position,frame,true_x_cm,true_y_cm,pred_x_cm,pred_y_cm\n";
  for (const auto& r : rows) {
    os << r.recording << ',' << r.position << ',' << r.frame << ',' << exact(r.truth.x) << ',' << exact(r.truth.y)
       << ',' << exact(r.pred.x) << ',' << exact(r.pred.y) << '\n';
  }
  return os.str();
}

std::vector<PredictionRow> parse_predictions_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "recording,position,frame,true_x_cm,true_y_cm,pred_x_cm,pred_y_cm") {
    throw std::runtime_error("predictions CSV has an unexpected header");
  }
  std::vector<PredictionRow> rows;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    std::vector<std::string> c;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) c.push_back(cell);
    if (c.size() != 7) throw std::runtime_error("predictions CSV line " + std::to_string(n) + ": expected 7 cells");
    try {
      rows.push_back({c[0], c[1], std::stoul(c[2]), {std::stod(c[3]), std::stod(c[4])}, {std::stod(c[5]), std::stod(c[6])}});
    } catch (const std::logic_error&) {
      throw std::runtime_error("predictions CSV line " + std::to_string(n) + ": bad number");
    }
  }
  if (rows.empty()) throw std::runtime_error("predictions CSV has no rows");
  return rows;
}

eval::EvalResult evaluate_rows(const std::string& model, std::size_t params, const std::vector<PredictionRow>& rows) {
  const auto p = preds_of(rows), t = truths_of(rows);
  eval::EvalResult r = eval::evaluate(p, t);
  r.model = model;
  r.params = params;
  return r;
}

std::optional<eval::AnovaResult> position_anova(const std::vector<PredictionRow>& rows) {
  std::vector<std::vector<double>> groups;
  for (const char* pos : {"below", "level", "above"}) {
    std::vector<Gaze> p, t;
    for (const auto& r : rows) {
      if (r.position == pos) {
        p.push_back(r.pred);
        t.push_back(r.truth);
      }
    }
    if (p.size() >= 2) groups.push_back(eval::euclid_errors(p, t));
  }
  if (groups.size() < 2) return std::nullopt;
  try {
    return eval::anova_oneway(groups);
  } catch (const eval::UndefinedStatistic&) {
    return std::nullopt;
  }
}

std::vector<eval::FoldResult> cross_validate(const nn::ModelConfig& config, const PreparedData& data, std::size_t k,
                                             const nn::TrainConfig& cfg) {
  const auto folds = eval::kfold_indices(data.recordings.size(), k, cfg.seed);
  std::vector<eval::FoldResult> out;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<std::size_t> train;
    for (std::size_t g = 0; g < folds.size(); ++g) {
      if (g != f) train.insert(train.end(), folds[g].begin(), folds[g].end());
    }
    std::sort(train.begin(), train.end());
    nn::TrainConfig fc = cfg;
    fc.seed = derive_seed(cfg.seed, f);
    const nn::ModelGraph init = nn::build_graph(config, derive_seed(fc.seed, 0));
    const nn::ModelGraph trained = nn::train_adam(init, data.subset(train), fc).graph;
    const auto rows = predict_rows(trained, data, folds[f]);
    const auto r = evaluate_rows(config.name, 0, rows);
    out.push_back({f, r.n, r.mean_euclid_cm, r.rmse_cm, r.r2});
  }
  return out;
}

std::vector<TradeoffRow> tradeoff_rows(const std::vector<std::pair<std::string, eval::EvalResult>>& variants) {
  std::vector<TradeoffRow> out;
  std::map<std::string, const eval::EvalResult*> baseline;
  for (const auto& [variant, r] : variants) {
    if (variant == "baseline") baseline[r.model] = &r;
    const auto it = baseline.find(r.model);
    if (it == baseline.end()) throw std::invalid_argument("no baseline listed before " + r.model + "/" + variant);
    out.push_back({r.model, variant, r.rmse_cm, r.r2, r.mean_euclid_cm, r.rmse_cm - it->second->rmse_cm,
                   r.r2 - it->second->r2});
  }
  return out;
}

std::string tradeoff_csv(const std::vector<TradeoffRow>& rows) {
  std::ostringstream os;
  os << "model,variant,rmse_cm,r2,mean_euclid_cm,delta_rmse_cm,delta_r2\n";
  for (const auto& r : rows) {
    os << r.model << ',' << r.variant << ',' << exact(r.rmse_cm) << ',' << exact(r.r2) << ','
       << exact(r.mean_euclid_cm) << ',' << exact(r.delta_rmse_cm) << ',' << exact(r.delta_r2) << '\n';
  }
  return os.str();
}

std::string tradeoff_markdown(const std::vector<TradeoffRow>& rows) {
  std::ostringstream os;
  os << "| Model | Variant | RMSE (cm) | R² | Mean Euclid (cm) | ΔRMSE (cm) | ΔR² | RMSE direction |\n"
     << "|---|---|---:|---:|---:|---:|---:|---|\n";
  for (const auto& r : rows) {
    const char* dir = r.variant == "baseline" ? "-" : r.delta_rmse_cm > 0 ? "up" : r.delta_rmse_cm < 0 ? "down" : "same";
    os << "| " << r.model << " | " << r.variant << " | " << fixed(r.rmse_cm, 3) << " | " << fixed(r.r2, 3) << " | "
       << fixed(r.mean_euclid_cm, 3) << " | " << fixed(r.delta_rmse_cm, 3) << " | " << fixed(r.delta_r2, 3) << " | "
       << dir << " |\n";
  }
  return os.str();
}

}  // namespace eyeedge::experiment
