#include <signal.h>

#include <cmath>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

#include "commands.hpp"
#include "eyeedge/bench/runner.hpp"
#include "eyeedge/common/bytes.hpp"
#include "eyeedge/experiment/experiment.hpp"
#include "eyeedge/nn/container.hpp"
#include "eyeedge/serve/client.hpp"
#include "eyeedge/serve/service.hpp"

namespace eyeedge::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Blocks until SIGINT/SIGTERM, or for `seconds` when positive. The signals
// must already be blocked in every thread.
void wait_for_shutdown(double seconds) {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  if (seconds > 0) {
    timespec ts{static_cast<time_t>(seconds), static_cast<long>(std::fmod(seconds, 1.0) * 1e9)};
    sigtimedwait(&set, nullptr, &ts);
  } else {
    int sig = 0;
    sigwait(&set, &sig);
  }
}

void block_shutdown_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
}

std::vector<std::string> split_colon(const std::string& s, std::size_t parts) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i + 1 < parts; ++i) {
    const auto c = s.find(':', start);
    if (c == std::string::npos) throw CLI::ValidationError("expected " + std::to_string(parts) + " ':'-separated parts in " + s);
    out.push_back(s.substr(start, c - start));
    start = c + 1;
  }
  out.push_back(s.substr(start));
  return out;
}

}  // namespace

void add_bench(CLI::App& app, Runner& run) {
  struct Opts {
    std::vector<std::string> models;
    std::string data, split = "test", out = ".", power_log, idle_log;
    std::size_t holdout = 5, limit = 0;
    double interval = 1.0;
    int repeats = 1;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("bench", "Per-stage timing, CPU/memory sampling and optional energy per frame");
  sub->add_option("--model", o->models, "Model container (repeatable; variant read from the file)")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--data", o->data, "Dataset directory")->required();
  sub->add_option("--split", o->split, "test or all")->capture_default_str()->check(CLI::IsMember({"test", "all"}));
  sub->add_option("--holdout-every", o->holdout, "Held-out recording interval")->capture_default_str();
  sub->add_option("--recordings", o->limit, "Use at most this many recordings (0 = all)")->capture_default_str();
  sub->add_option("--interval", o->interval, "Resource sampling interval, seconds")->capture_default_str()->check(
      CLI::PositiveNumber);
  sub->add_option("--repeats", o->repeats, "Passes over the recordings per model")->capture_default_str()->check(
      CLI::PositiveNumber);
  auto* power = sub->add_option("--power-log", o->power_log, "Power CSV (t_s,volts,amps) timed from the bench start")
                    ->check(CLI::ExistingFile);
  auto* idle = sub->add_option("--idle-log", o->idle_log, "Idle power CSV of the same device")->check(CLI::ExistingFile);
  power->needs(idle);
  idle->needs(power);
  sub->add_option("--out", o->out, "Output directory")->capture_default_str();
  sub->callback([o, &run] {
    run = [o] {
      echo_config("bench", {{"models", o->models}, {"data", o->data}, {"split", o->split},
                            {"holdout_every", o->holdout}, {"recordings", o->limit}, {"interval_s", o->interval},
                            {"repeats", o->repeats}, {"power_log", o->power_log}, {"idle_log", o->idle_log},
                            {"out", o->out}});
      std::vector<pipeline::Recording> recs;
      {
        std::vector<pipeline::Recording> all;
        for (const auto& m : pipeline::load_dataset_index(o->data + "/dataset.json")) {
          all.push_back(pipeline::load_recording(m));
        }
        std::vector<std::size_t> pick(all.size());
        for (std::size_t i = 0; i < pick.size(); ++i) pick[i] = i;
        if (o->split == "test") pick = experiment::holdout_split(all.size(), o->holdout).test;
        if (o->limit > 0 && pick.size() > o->limit) pick.resize(o->limit);
        for (std::size_t i : pick) recs.push_back(all[i]);
      }
      std::vector<bench::BenchCase> cases;
      for (const auto& path : o->models) {
        auto g = std::make_shared<const nn::ModelGraph>(nn::load_model(path));
        cases.push_back({g->name, variant_of(*g), g});
      }
      bench::BenchOptions bo;
      bo.sample_interval_s = o->interval;
      bo.repeats = o->repeats;
      const auto results = bench::run_bench(cases, recs, bo);
      std::optional<bench::PowerLogs> logs;
      if (!o->power_log.empty()) {
        logs = bench::PowerLogs{bench::ingest_power_log(o->power_log).samples,
                                bench::ingest_power_log(o->idle_log).samples};
      }
      bench::BenchReport rep = bench::build_report(results, logs);

      // Sampler overhead on the first model's inference of one frame.
      const nn::ModelGraph first = nn::widen(*cases.front().graph);
      const nn::Tensor frame(first.input_shape, std::vector<float>(nn::shape_size(first.input_shape), 0.5f));
      std::vector<nn::Tensor> window(first.window, frame);
      const auto overhead = bench::measure_sampler_overhead(
          [&] { (void)nn::model_forward(first, window); }, 50, o->interval);
      std::ostringstream note;
      note << std::fixed << std::setprecision(3) << "- sampler overhead on " << label_of(*cases.front().graph)
           << " inference: " << overhead.mean_without_ms << " ms without, " << overhead.mean_with_ms
           << " ms with (" << overhead.change_pct << "%)\n";
      rep.notes += note.str();
      for (const auto& p : bench::write_reports(o->out, rep)) std::cout << "wrote " << p << '\n';
      std::cout << bench::timing_markdown(rep.timing);
      return 0;
    };
  });
}

void add_serve(CLI::App& app, Runner& run) {
  struct Opts {
    std::string role, host = "127.0.0.1", model, fetch, registry, cloud, name, registry_dir, log, heatmap_out;
    std::vector<std::string> registers;
    std::uint16_t port = 0;
    double duration = 0;
    std::size_t batch = 50;
    serve::GridSpec grid;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("serve", "Run the edge server or the cloud stub until interrupted");
  sub->add_option("--role", o->role, "edge or cloud")->required()->check(CLI::IsMember({"edge", "cloud"}));
  sub->add_option("--host", o->host, "Bind address")->capture_default_str();
  sub->add_option("--port", o->port, "Bind port (0 picks one)")->capture_default_str();
  sub->add_option("--duration", o->duration, "Stop after this many seconds (0 = until SIGINT/SIGTERM)")
      ->capture_default_str();
  sub->add_option("--model", o->model, "edge: model container")->check(CLI::ExistingFile);
  sub->add_option("--fetch", o->fetch, "edge: NAME:VERSION to fetch from --registry");
  sub->add_option("--registry", o->registry, "edge: cloud stub HOST:PORT for --fetch");
  sub->add_option("--name", o->name, "edge: model name announced to clients (default: the model's own)");
  sub->add_option("--cloud", o->cloud, "edge: cloud stub HOST:PORT receiving gaze logs");
  sub->add_option("--upsync-batch", o->batch, "edge: points per log upload")->capture_default_str();
  sub->add_option("--registry-dir", o->registry_dir, "cloud: model registry directory");
  sub->add_option("--register", o->registers, "cloud: NAME:VERSION:FILE to add to the registry (repeatable)");
  sub->add_option("--log", o->log, "cloud: CSV file receiving gaze points");
  sub->add_option("--heatmap-out", o->heatmap_out, "cloud: write heatmap.pgm/csv of received points on exit");
  sub->add_option("--rows", o->grid.rows, "cloud heatmap rows")->capture_default_str();
  sub->add_option("--cols", o->grid.cols, "cloud heatmap columns")->capture_default_str();
  sub->add_option("--width-cm", o->grid.width_cm, "cloud heatmap width")->capture_default_str();
  sub->add_option("--height-cm", o->grid.height_cm, "cloud heatmap height")->capture_default_str();
  sub->callback([o, &run] {
    run = [o] {
      echo_config("serve", {{"role", o->role}, {"host", o->host}, {"port", o->port}, {"duration_s", o->duration},
                            {"model", o->model}, {"fetch", o->fetch}, {"registry", o->registry},
                            {"name", o->name}, {"cloud", o->cloud}, {"upsync_batch", o->batch},
                            {"registry_dir", o->registry_dir}, {"register", o->registers}, {"log", o->log},
                            {"heatmap_out", o->heatmap_out}});
      block_shutdown_signals();
      if (o->role == "cloud") {
        if (o->registry_dir.empty()) throw CLI::ValidationError("cloud role needs --registry-dir");
        for (const auto& r : o->registers) {
          const auto parts = split_colon(r, 3);
          serve::register_model(o->registry_dir, parts[0], parts[1], read_file_bytes(parts[2]));
          std::cout << "registered " << parts[0] << "/" << parts[1] << '\n';
        }
        serve::CloudConfig cc{o->host, o->port, o->registry_dir, o->log};
        serve::CloudStub cloud(cc);
        cloud.start();
        std::cout << "cloud listening on " << o->host << ':' << cloud.port() << std::endl;
        wait_for_shutdown(o->duration);
        cloud.stop();
        const auto grid = cloud.heatmap(o->grid);
        std::cout << "received " << cloud.points().size() << " gaze points\n";
        if (!o->heatmap_out.empty()) {
          ensure_dir(o->heatmap_out);
          pipeline::write_pnm((fs::path(o->heatmap_out) / "heatmap.pgm").string(), serve::heatmap_render(grid));
          write_text(o->heatmap_out, "heatmap.csv", serve::heatmap_csv(grid));
        }
        return 0;
      }

      serve::EdgeConfig ec;
      ec.host = o->host;
      ec.port = o->port;
      if (!o->model.empty() == !o->fetch.empty()) throw CLI::ValidationError("edge role needs exactly one of --model, --fetch");
      if (!o->model.empty()) {
        ec.model = std::make_shared<const nn::ModelGraph>(nn::load_model(o->model));
      } else {
        if (o->registry.empty()) throw CLI::ValidationError("--fetch needs --registry");
        const auto parts = split_colon(o->fetch, 2);
        ec.model = std::make_shared<const nn::ModelGraph>(
            nn::decode_container(serve::model_fetch(serve::parse_endpoint(o->registry), parts[0], parts[1])));
        std::cout << "fetched " << o->fetch << " from " << o->registry << '\n';
      }
      ec.model_name = o->name.empty() ? ec.model->name : o->name;
      if (!o->cloud.empty()) {
        ec.cloud_enabled = true;
        ec.cloud = serve::parse_endpoint(o->cloud);
      }
      ec.upsync_batch = o->batch;
      serve::EdgeServer edge(ec);
      edge.start();
      std::cout << "edge serving " << ec.model_name << " on " << o->host << ':' << edge.port() << std::endl;
      wait_for_shutdown(o->duration);
      edge.stop();
      return 0;
    };
  });
}

void add_client(CLI::App& app, Runner& run) {
  struct Opts {
    std::string server, recording, model, client = "phone-sim", out;
    double fps = 20.0;
    std::size_t frames = 0;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("client", "Stream a recording's frames to an edge server");
  sub->add_option("--server", o->server, "Edge HOST:PORT")->required();
  sub->add_option("--recording", o->recording, "Recording manifest.json")->required()->check(CLI::ExistingFile);
  sub->add_option("--fps", o->fps, "Send rate (0 = as fast as responses arrive)")->capture_default_str();
  sub->add_option("--frames", o->frames, "Send at most this many frames (0 = all)")->capture_default_str();
  sub->add_option("--model", o->model, "Model name to request (default: whatever the edge serves)");
  sub->add_option("--client-id", o->client, "Client name sent in the handshake")->capture_default_str();
  sub->add_option("--out", o->out, "Transcript CSV");
  sub->callback([o, &run] {
    run = [o] {
      echo_config("client", {{"server", o->server}, {"recording", o->recording}, {"fps", o->fps},
                             {"frames", o->frames}, {"model", o->model}, {"client_id", o->client},
                             {"out", o->out}});
      auto frames = serve::load_frames(pipeline::load_recording(o->recording));
      if (o->frames > 0 && frames.size() > o->frames) frames.resize(o->frames);
      serve::StreamOptions so;
      so.fps = o->fps;
      so.model = o->model;
      so.client = o->client;
      const serve::Transcript t = serve::client_stream(frames, serve::parse_endpoint(o->server), so);
      double rtt = 0;
      for (double r : t.rtt_ms) rtt += r;
      std::cout << "sent " << t.frames_sent << " frames, " << t.responses.size() << " responses ("
                << t.missing_face() << " without a face), mean round trip "
                << (t.rtt_ms.empty() ? 0.0 : rtt / static_cast<double>(t.rtt_ms.size())) << " ms, wall "
                << t.wall_ms << " ms\n";
      if (!o->out.empty()) {
        write_file_text(o->out, serve::transcript_csv(t));
        std::cout << "wrote " << o->out << '\n';
      }
      if (t.error) {
        std::cerr << "error: " << *t.error << '\n';
        return 1;
      }
      return 0;
    };
  });
}

}  // namespace eyeedge::cli
