#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <filesystem>

#include "eyeedge/experiment/experiment.hpp"
#include "eyeedge/nn/config.hpp"
#include "eyeedge/synth/synth.hpp"

using namespace eyeedge;
using namespace eyeedge::experiment;
namespace fs = std::filesystem;

namespace {

struct SmallDataset {
  fs::path dir;
  PreparedData data;
  SmallDataset() {
    dir = fs::temp_directory_path() / ("eyeedge_exp_" + std::to_string(getpid()));
    synth::DatasetParams p;
    p.recordings = 6;
    p.seed = 9;
    p.path.duration_s = 2.0;
    synth::gen_dataset(dir.string(), p);
    data = prepare_data(dir.string());
  }
  ~SmallDataset() { fs::remove_all(dir); }
};

const SmallDataset& small() {
  static SmallDataset d;
  return d;
}

}  // namespace

TEST_CASE("recording-level holdout split") {
  const Split s = holdout_split(20, 5);
  CHECK(s.test == std::vector<std::size_t>{4, 9, 14, 19});
  CHECK(s.train.size() == 16);
  CHECK_THROWS_AS(holdout_split(3, 5), std::invalid_argument);
  CHECK_THROWS_AS(holdout_split(10, 1), std::invalid_argument);
}

TEST_CASE("prepared synthetic data") {
  const auto& d = small().data;
  REQUIRE(d.recordings.size() == 6);
  CHECK(d.skipped_frames() == 0);
  CHECK(d.subset({1, 3}).sequences.size() == 2);
  CHECK(d.subset(d.all()).frame_count() == 6 * 20);
}

TEST_CASE("centre predictor rows") {
  const auto& d = small().data;
  const auto rows = centre_rows(d, {0, 2});
  REQUIRE(rows.size() == 40);
  const auto& dev = d.recordings[2].device;
  CHECK(rows[20].recording == d.recordings[2].id);
  CHECK(rows[20].pred.x == dev.screen_w_cm() / 2);
  CHECK(rows[20].pred.y == dev.screen_h_cm() / 2);
  CHECK(rows[20].truth == d.prepared[2].sequence.labels[0]);
  CHECK(rows[5].frame == d.prepared[0].frame_index[5]);
}

TEST_CASE("model predictions line up with examples") {
  const auto& d = small().data;
  const nn::ModelGraph g = nn::build_graph(nn::model_config("tiny", "cnn_gru"), 4);
  const auto rows = predict_rows(g, d, {1, 4});
  const auto direct = nn::predict_dataset(g, d.subset({1, 4}));
  REQUIRE(rows.size() == direct.size());
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(rows[i].pred == direct[i]);
  CHECK(rows.front().position == pipeline::to_string(d.recordings[1].position));
}

TEST_CASE("predictions csv round trip and evaluation") {
  std::vector<PredictionRow> rows{{"p000_below", "below", 0, {0, 0}, {3, 4}},
                                  {"p000_below", "below", 1, {1.0 / 3, 2}, {1, 2}},
                                  {"p000_level", "level", 0, {5, 5}, {5, 5.1}}};
  const auto back = parse_predictions_csv(predictions_csv(rows));
  CHECK(back == rows);
  const auto r = evaluate_rows("m", 7, rows);
  CHECK(r.model == "m");
  CHECK(r.params == 7);
  CHECK(r.n == 3);
  CHECK(r.rmse_cm >= r.mean_euclid_cm);
  CHECK_THROWS(parse_predictions_csv("a,b\n"));
  CHECK_THROWS(parse_predictions_csv("recording,position,frame,true_x_cm,true_y_cm,pred_x_cm,pred_y_cm\nx,y,1,2\n"));
}

TEST_CASE("position anova") {
  std::vector<PredictionRow> rows;
  const double errs[3][3] = {{1, 2, 3}, {2, 3, 4}, {5, 6, 7}};
  const char* pos[3] = {"below", "level", "above"};
  for (int g = 0; g < 3; ++g) {
    for (int i = 0; i < 3; ++i) rows.push_back({"r", pos[g], 0, {0, 0}, {errs[g][i], 0}});
  }
  const auto a = position_anova(rows);
  REQUIRE(a);
  CHECK(a->df_between == 2);
  CHECK(a->df_within == 6);
  // Group means 2, 3, 6; grand 11/3; SSB = 3*(25/9 + 4/9 + 49/9) = 26, SSW = 6.
  CHECK(a->f == doctest::Approx((26.0 / 2) / (6.0 / 6)));
  rows.resize(3);
  CHECK_FALSE(position_anova(rows));
}

TEST_CASE("cross-validation over recordings") {
  const auto& d = small().data;
  nn::TrainConfig cfg;
  cfg.epochs = 1;
  cfg.seed = 2;
  const auto folds = cross_validate(nn::model_config("tiny", "cnn"), d, 3, cfg);
  REQUIRE(folds.size() == 3);
  std::size_t n = 0;
  for (const auto& f : folds) {
    n += f.n;
    CHECK(f.n == 40);
    CHECK(std::isfinite(f.rmse_cm));
  }
  CHECK(n == 120);
  const auto again = cross_validate(nn::model_config("tiny", "cnn"), d, 3, cfg);
  CHECK(again[1].rmse_cm == folds[1].rmse_cm);
}

TEST_CASE("accuracy trade-off rows") {
  eval::EvalResult b{"cnn", 0, 10, 1.2, 1.5, 0.8, {}};
  eval::EvalResult q{"cnn", 0, 10, 1.3, 1.7, 0.75, {}};
  eval::EvalResult p{"cnn", 0, 10, 1.1, 1.4, 0.82, {}};
  const auto rows = tradeoff_rows({{"baseline", b}, {"quantised", q}, {"pruned", p}});
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].delta_rmse_cm == 0.0);
  CHECK(rows[1].delta_rmse_cm == doctest::Approx(0.2));
  CHECK(rows[2].delta_r2 == doctest::Approx(0.02));
  const std::string md = tradeoff_markdown(rows);
  CHECK(md.find("| cnn | quantised | 1.700 | 0.750 | 1.300 | 0.200 | -0.050 | up |") != std::string::npos);
  CHECK(md.find("| down |") != std::string::npos);
  CHECK(tradeoff_csv(rows).find("model,variant,rmse_cm") == 0);
  CHECK_THROWS_AS(tradeoff_rows({{"quantised", q}}), std::invalid_argument);
}
