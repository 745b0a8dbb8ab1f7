#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <sstream>

#include "commands.hpp"
#include "eyeedge/bench/reference_tables.hpp"
#include "eyeedge/common/bytes.hpp"
#include "eyeedge/common/rng.hpp"
#include "eyeedge/eval/metrics.hpp"
#include "eyeedge/experiment/experiment.hpp"
#include "eyeedge/nn/config.hpp"
#include "eyeedge/nn/container.hpp"
#include "eyeedge/opt/prune.hpp"
#include "eyeedge/opt/quantize.hpp"
#include "eyeedge/serve/heatmap.hpp"
#include "eyeedge/synth/synth.hpp"

namespace eyeedge::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string exact(double v) {
  std::ostringstream s;
  s << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return s.str();
}

std::vector<std::size_t> eval_recordings(const experiment::PreparedData& data, const std::string& split,
                                         std::size_t holdout) {
  if (split == "all") return data.all();
  return experiment::holdout_split(data.recordings.size(), holdout).test;
}

opt::SparsitySchedule schedule_from(const json& config) {
  opt::SparsitySchedule s;
  if (config.contains("pruning")) {
    const json& p = config.at("pruning");
    s.initial = p.value("initial_sparsity", s.initial);
    s.final = p.value("final_sparsity", s.final);
    s.total_steps = p.value("total_steps", s.total_steps);
    s.interval = p.value("interval", s.interval);
  }
  s.validate();
  return s;
}

}  // namespace

void add_synth(CLI::App& app, Runner& run) {
  struct Opts {
    std::string out;
    std::size_t n = 20;
    std::uint64_t seed = 0;
    double duration = 20.0;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("synth", "Generate a synthetic recording dataset");
  sub->add_option("--out", o->out, "Output dataset directory")->required();
  sub->add_option("--n", o->n, "Number of recordings")->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--seed", o->seed, "Random seed")->capture_default_str();
  sub->add_option("--duration", o->duration, "Seconds per recording")->capture_default_str()->check(
      CLI::PositiveNumber);
  sub->callback([o, &run] {
    run = [o] {
      echo_config("synth", {{"out", o->out}, {"n", o->n}, {"seed", o->seed}, {"duration_s", o->duration}});
      synth::DatasetParams p;
      p.recordings = o->n;
      p.seed = o->seed;
      p.path.duration_s = o->duration;
      const std::string index = synth::gen_dataset(o->out, p);
      std::cout << "wrote " << o->n << " recordings, index " << index << '\n';
      return 0;
    };
  });
}

void add_train(CLI::App& app, Runner& run) {
  struct Opts {
    std::string data, model = "cnn_gru", size = "tiny", out, loss_csv, cv_out, config;
    std::size_t epochs = 3, holdout = 5, folds = 0;
    std::uint64_t seed = 0;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("train", "Train a model on a dataset's training recordings");
  sub->add_option("--data", o->data, "Dataset directory")->required();
  sub->add_option("--model", o->model, "cnn, cnn_gru or cnn_lstm")
      ->capture_default_str()
      ->check(CLI::IsMember({"cnn", "cnn_gru", "cnn_lstm"}));
  sub->add_option("--size", o->size, "tiny or reference")->capture_default_str()->check(
      CLI::IsMember({"tiny", "reference"}));
  sub->add_option("--epochs", o->epochs, "Training epochs")->capture_default_str();
  sub->add_option("--seed", o->seed, "Seed for initialisation and shuffling")->capture_default_str();
  sub->add_option("--holdout-every", o->holdout, "Hold out every n-th recording for testing (0 trains on all)")
      ->capture_default_str();
  sub->add_option("--folds", o->folds, "Also run k-fold cross-validation over recordings");
  sub->add_option("--cv-out", o->cv_out, "Cross-validation fold CSV (with --folds)");
  sub->add_option("--config", o->config, "Model definition JSON (default: built in)");
  sub->add_option("--out", o->out, "Output model container")->required();
  sub->add_option("--loss-csv", o->loss_csv, "Per-epoch training loss CSV");
  sub->callback([o, &run] {
    run = [o] {
      const json& config = models_config(o->config);
      nn::TrainConfig cfg = nn::train_config(config);
      cfg.epochs = o->epochs;
      cfg.seed = derive_seed(o->seed, 1);
      echo_config("train", {{"data", o->data}, {"model", o->model}, {"size", o->size}, {"epochs", o->epochs},
                            {"seed", o->seed}, {"holdout_every", o->holdout}, {"folds", o->folds},
                            {"learning_rate", cfg.learning_rate}, {"decay", cfg.decay},
                            {"batch_size", cfg.batch_size}, {"out", o->out}});
      if (o->folds > 0 && o->cv_out.empty()) throw CLI::ValidationError("--folds needs --cv-out");

      const auto data = experiment::prepare_data(o->data);
      const auto recs =
          o->holdout == 0 ? data.all() : experiment::holdout_split(data.recordings.size(), o->holdout).train;
      const nn::ModelConfig mc = nn::model_config(config, o->size, o->model);
      const nn::ModelGraph init = nn::build_graph(mc, derive_seed(o->seed, 0));
      std::cout << "training " << o->model << " (" << nn::param_count(init) << " parameters) on " << recs.size()
                << " recordings, " << data.subset(recs).frame_count() << " frames\n";
      const nn::TrainResult r = nn::train_adam(init, data.subset(recs), cfg);
      std::ostringstream loss;
      loss << "epoch,loss_cm2\n";
      for (std::size_t e = 0; e < r.epoch_loss.size(); ++e) {
        std::cout << "epoch " << e + 1 << " loss " << r.epoch_loss[e] << " cm^2\n";
        loss << e + 1 << ',' << exact(r.epoch_loss[e]) << '\n';
      }
      if (fs::path(o->out).has_parent_path()) ensure_dir(fs::path(o->out).parent_path().string());
      nn::save_model(r.graph, o->out);
      std::cout << "wrote " << o->out << '\n';
      if (!o->loss_csv.empty()) write_file_text(o->loss_csv, loss.str());

      if (o->folds > 0) {
        eval::EvalResult cv;
        cv.model = o->model;
        cv.params = nn::param_count(init);
        cv.folds = experiment::cross_validate(mc, data, o->folds, cfg);
        write_file_text(o->cv_out, eval::folds_csv({cv}));
        std::cout << "wrote " << o->cv_out << '\n';
      }
      return 0;
    };
  });
}

void add_optimize(CLI::App& app, Runner& run) {
  struct Opts {
    std::string mode, model, out, report_dir = ".", data, config;
    std::size_t holdout = 5, fine_tune_epochs = 0;
    std::uint64_t seed = 0;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("optimize", "Quantise or prune a trained model");
  sub->add_option("--mode", o->mode, "quantize or prune")->required()->check(CLI::IsMember({"quantize", "prune"}));
  sub->add_option("--model", o->model, "Input model container")->required()->check(CLI::ExistingFile);
  sub->add_option("--out", o->out, "Output model container")->required();
  sub->add_option("--report-dir", o->report_dir, "Directory for the optimisation report")->capture_default_str();
  sub->add_option("--data", o->data, "Dataset directory; adds RMSE before/after on the held-out recordings");
  sub->add_option("--holdout-every", o->holdout, "Held-out recording interval")->capture_default_str();
  sub->add_option("--fine-tune-epochs", o->fine_tune_epochs, "Prune: epochs of masked fine-tuning between steps")
      ->capture_default_str();
  sub->add_option("--seed", o->seed, "Seed for fine-tuning")->capture_default_str();
  sub->add_option("--config", o->config, "Model definition JSON with train and pruning sections");
  sub->callback([o, &run] {
    run = [o] {
      const json& config = models_config(o->config);
      json echo{{"mode", o->mode}, {"model", o->model}, {"out", o->out}, {"report_dir", o->report_dir},
                {"data", o->data}, {"holdout_every", o->holdout}, {"seed", o->seed}};
      const nn::ModelGraph g = nn::load_model(o->model);
      std::optional<experiment::PreparedData> data;
      experiment::Split split;
      if (!o->data.empty()) {
        data = experiment::prepare_data(o->data);
        split = experiment::holdout_split(data->recordings.size(), o->holdout);
      }
      const auto rmse_of = [&](const nn::ModelGraph& m) {
        return experiment::evaluate_rows(m.name, 0, experiment::predict_rows(m, *data, split.test)).rmse_cm;
      };

      nn::ModelGraph result;
      opt::OptimisationReport rep;
      if (o->mode == "quantize") {
        echo_config("optimize", echo);
        result = opt::quantize_half(g);
        rep.model = g.name;
        rep.method = "quantize";
        rep.baseline_bytes = opt::serialized_size(g, nn::Encoding::dense);
        rep.optimised_bytes = opt::serialized_size(result, nn::Encoding::dense);
        nn::save_model(result, o->out, nn::Encoding::dense);
      } else {
        const opt::SparsitySchedule sched = schedule_from(config);
        echo["schedule"] = {{"initial", sched.initial}, {"final", sched.final}, {"total_steps", sched.total_steps},
                            {"interval", sched.interval}};
        echo["fine_tune_epochs"] = o->fine_tune_epochs;
        echo_config("optimize", echo);
        std::optional<opt::FineTune> ft;
        nn::Dataset train;
        if (o->fine_tune_epochs > 0) {
          if (!data) throw CLI::ValidationError("--fine-tune-epochs needs --data");
          train = data->subset(split.train);
          nn::TrainConfig cfg = nn::train_config(config);
          cfg.epochs = o->fine_tune_epochs;
          cfg.seed = derive_seed(o->seed, 2);
          ft = opt::FineTune{cfg, &train};
        }
        opt::PruneOutcome out = opt::prune_model(g, sched, ft);
        result = std::move(out.graph);
        rep = std::move(out.report);
        nn::save_model(result, o->out, nn::Encoding::sparse);
      }
      if (data) {
        rep.rmse_before = rmse_of(g);
        rep.rmse_after = rmse_of(result);
      }
      std::cout << "wrote " << o->out << " (" << rep.baseline_bytes << " -> " << rep.optimised_bytes << " bytes)\n";
      write_text(o->report_dir, "optimisation_" + o->mode + ".csv", rep.to_csv());
      write_text(o->report_dir, "optimisation_" + o->mode + ".md", rep.to_markdown());
      return 0;
    };
  });
}

void add_eval(CLI::App& app, Runner& run) {
  struct Opts {
    std::string predictions, name = "predictions", data, split = "test", out = ".";
    std::vector<std::string> models;
    std::size_t holdout = 5;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("eval", "Accuracy of models on held-out recordings, or of a predictions CSV");
  auto* pred = sub->add_option("--predictions", o->predictions, "Predictions CSV to score")->check(CLI::ExistingFile);
  sub->add_option("--name", o->name, "Row name for --predictions")->capture_default_str();
  auto* models = sub->add_option("--model", o->models, "Model container (repeatable)")->check(CLI::ExistingFile);
  sub->add_option("--data", o->data, "Dataset directory (with --model)");
  sub->add_option("--split", o->split, "test or all")->capture_default_str()->check(CLI::IsMember({"test", "all"}));
  sub->add_option("--holdout-every", o->holdout, "Held-out recording interval")->capture_default_str();
  sub->add_option("--out", o->out, "Output directory")->capture_default_str();
  pred->excludes(models);
  sub->callback([o, &run] {
    run = [o] {
      echo_config("eval", {{"predictions", o->predictions}, {"name", o->name}, {"models", o->models},
                           {"data", o->data}, {"split", o->split}, {"holdout_every", o->holdout}, {"out", o->out}});
      std::vector<eval::EvalResult> results;
      std::ostringstream anova;
      anova << std::setprecision(std::numeric_limits<double>::max_digits10);
      anova << "model,f,df_between,df_within,p\n";
      const auto add = [&](const std::string& name, std::size_t params, const std::vector<experiment::PredictionRow>& rows) {
        results.push_back(experiment::evaluate_rows(name, params, rows));
        if (const auto a = experiment::position_anova(rows)) {
          anova << name << ',' << a->f << ',' << a->df_between << ',' << a->df_within << ',' << a->p << '\n';
        }
      };
      if (!o->predictions.empty()) {
        add(o->name, 0, experiment::parse_predictions_csv(read_file_text(o->predictions)));
      } else {
        if (o->models.empty() || o->data.empty()) {
          throw CLI::ValidationError("eval needs --predictions, or --model with --data");
        }
        const auto data = experiment::prepare_data(o->data);
        const auto recs = eval_recordings(data, o->split, o->holdout);
        add("centre", 0, experiment::centre_rows(data, recs));
        for (const auto& path : o->models) {
          const nn::ModelGraph g = nn::load_model(path);
          const auto rows = experiment::predict_rows(g, data, recs);
          write_text(o->out, "predictions_" + label_of(g) + ".csv", experiment::predictions_csv(rows));
          add(label_of(g), nn::param_count(g), rows);
        }
      }
      for (const auto& r : results) {
        std::cout << r.model << ": n " << r.n << ", RMSE " << r.rmse_cm << " cm, mean Euclid " << r.mean_euclid_cm
                  << " cm, R2 " << r.r2 << '\n';
      }
      write_text(o->out, "eval.csv", eval::eval_csv(results));
      write_text(o->out, "eval.md", eval::eval_markdown(results));
      write_text(o->out, "eval_anova_position.csv", anova.str());
      return 0;
    };
  });
}

void add_report(CLI::App& app, Runner& run) {
  struct Opts {
    std::vector<std::string> models;
    std::string data, out = ".";
    std::size_t holdout = 5;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand(
      "report", "Accuracy trade-off across model variants, plus fps and energy replays of the reference tables");
  sub->add_option("--model", o->models, "Model container (repeatable; variant read from the file)")
      ->check(CLI::ExistingFile);
  sub->add_option("--data", o->data, "Dataset directory (with --model)");
  sub->add_option("--holdout-every", o->holdout, "Held-out recording interval")->capture_default_str();
  sub->add_option("--out", o->out, "Output directory")->capture_default_str();
  sub->callback([o, &run] {
    run = [o] {
      echo_config("report", {{"models", o->models}, {"data", o->data}, {"holdout_every", o->holdout},
                             {"out", o->out}});
      if (!o->models.empty()) {
        if (o->data.empty()) throw CLI::ValidationError("--model needs --data");
        const auto data = experiment::prepare_data(o->data);
        const auto recs = experiment::holdout_split(data.recordings.size(), o->holdout).test;
        std::map<std::string, std::map<int, eval::EvalResult>> by_model;
        const std::map<std::string, int> order{{"baseline", 0}, {"quantised", 1}, {"pruned", 2}};
        for (const auto& path : o->models) {
          const nn::ModelGraph g = nn::load_model(path);
          by_model[g.name][order.at(variant_of(g))] =
              experiment::evaluate_rows(g.name, nn::param_count(g), experiment::predict_rows(g, data, recs));
        }
        std::vector<std::pair<std::string, eval::EvalResult>> variants;
        const char* names[3] = {"baseline", "quantised", "pruned"};
        for (const auto& [model, vs] : by_model) {
          for (const auto& [v, r] : vs) variants.emplace_back(names[v], r);
        }
        const auto rows = experiment::tradeoff_rows(variants);
        const auto centre = experiment::evaluate_rows("centre", 0, experiment::centre_rows(data, recs));
        write_text(o->out, "accuracy_tradeoff.csv", experiment::tradeoff_csv(rows));
        std::ostringstream md;
        md << "Accuracy on held-out recordings\n\n"
           << experiment::tradeoff_markdown(rows) << "\nCentre-of-screen predictor RMSE: " << std::fixed
           << std::setprecision(3) << centre.rmse_cm << " cm\n";
        write_text(o->out, "accuracy_tradeoff.md", md.str());
      }

      std::ostringstream timing, energy;
      timing << "model,device,variant,stage_sum_ms,total_ms,fps\n";
      for (const auto& r : bench::replay_timing_table()) {
        timing << r.model << ',' << r.device << ',' << r.variant << ',' << exact(r.stage_sum_ms) << ','
               << exact(r.total_ms) << ',' << std::fixed << std::setprecision(2) << r.fps << std::defaultfloat << '\n';
      }
      energy << "model,device,variant,total_mwh,additional_mwh,idle_mwh,recomputed_additional_mwh\n";
      for (const auto& r : bench::replay_energy_table()) {
        energy << r.model << ',' << r.device << ',' << r.variant << ',' << exact(r.total_mwh) << ','
               << exact(r.additional_mwh) << ',' << exact(r.idle_mwh) << ',' << exact(r.recomputed_mwh) << '\n';
      }
      write_text(o->out, "replay_timing.csv", timing.str());
      write_text(o->out, "replay_energy.csv", energy.str());
      return 0;
    };
  });
}

void add_heatmap(CLI::App& app, Runner& run) {
  struct Opts {
    std::string points, out = ".";
    serve::GridSpec grid;
    int cell_px = 8;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("heatmap", "Bin gaze points into a screen grid and render it");
  sub->add_option("--points", o->points,
                  "CSV with pred_x_cm/pred_y_cm (predictions) or x_cm/y_cm (transcripts, cloud logs) columns")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--rows", o->grid.rows, "Grid rows")->capture_default_str();
  sub->add_option("--cols", o->grid.cols, "Grid columns")->capture_default_str();
  sub->add_option("--width-cm", o->grid.width_cm, "Screen width covered")->capture_default_str();
  sub->add_option("--height-cm", o->grid.height_cm, "Screen height covered")->capture_default_str();
  sub->add_option("--cell-px", o->cell_px, "Pixels per cell side")->capture_default_str()->check(
      CLI::PositiveNumber);
  sub->add_option("--out", o->out, "Output directory")->capture_default_str();
  sub->callback([o, &run] {
    run = [o] {
      echo_config("heatmap", {{"points", o->points}, {"rows", o->grid.rows}, {"cols", o->grid.cols},
                              {"width_cm", o->grid.width_cm}, {"height_cm", o->grid.height_cm},
                              {"cell_px", o->cell_px}, {"out", o->out}});
      std::istringstream in(read_file_text(o->points));
      std::string line;
      std::getline(in, line);
      std::vector<std::string> header;
      {
        std::istringstream hs(line);
        std::string c;
        while (std::getline(hs, c, ',')) header.push_back(c);
      }
      const auto col = [&](const std::string& name) -> long {
        for (std::size_t i = 0; i < header.size(); ++i) {
          if (header[i] == name) return static_cast<long>(i);
        }
        return -1;
      };
      long xi = col("pred_x_cm"), yi = col("pred_y_cm");
      if (xi < 0 || yi < 0) {
        xi = col("x_cm");
        yi = col("y_cm");
      }
      if (xi < 0 || yi < 0) throw std::runtime_error("no x/y centimetre columns in " + o->points);
      std::vector<Gaze> pts;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> c;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) c.push_back(cell);
        if (static_cast<long>(c.size()) <= std::max(xi, yi)) throw std::runtime_error("short row: " + line);
        pts.push_back({std::stod(c[xi]), std::stod(c[yi])});
      }
      const serve::HeatmapGrid grid = serve::heatmap_accumulate(pts, o->grid);
      std::cout << pts.size() << " points, " << grid.total() << " inside the grid, " << grid.out_of_extent
                << " outside\n";
      ensure_dir(o->out);
      pipeline::write_pnm((fs::path(o->out) / "heatmap.pgm").string(), serve::heatmap_render(grid, o->cell_px));
      std::cout << "wrote " << (fs::path(o->out) / "heatmap.pgm").string() << '\n';
      write_text(o->out, "heatmap.csv", serve::heatmap_csv(grid));
      return 0;
    };
  });
}

}  // namespace eyeedge::cli
