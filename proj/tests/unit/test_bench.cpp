#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <sstream>
#include <thread>

#include "eyeedge/bench/energy.hpp"
#include "eyeedge/bench/reference_tables.hpp"
#include "eyeedge/bench/report.hpp"
#include "eyeedge/bench/resources.hpp"
#include "eyeedge/bench/runner.hpp"
#include "eyeedge/bench/timing.hpp"
#include "eyeedge/common/bytes.hpp"
#include "eyeedge/common/rng.hpp"
#include "eyeedge/nn/config.hpp"
#include "eyeedge/opt/prune.hpp"
#include "eyeedge/opt/quantize.hpp"
#include "eyeedge/pipeline/face.hpp"

using namespace eyeedge;
using namespace eyeedge::bench;
namespace fs = std::filesystem;

namespace {

const std::string kFixtures = std::string(EYEEDGE_SOURCE_DIR) + "/tests/fixtures";

std::string two_dp(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << v;
  return os.str();
}

std::vector<PowerSample> constant_log(double volts, double amps, double t_end, double step) {
  std::vector<PowerSample> s;
  const auto n = static_cast<std::size_t>(std::llround(t_end / step));
  for (std::size_t i = 0; i <= n; ++i) s.push_back({static_cast<double>(i) * step, volts, amps});
  return s;
}

// Scripted CPU-time source.
class FakeProbe : public ProcessProbe {
 public:
  explicit FakeProbe(double cpu_per_read) : step_(cpu_per_read) {}
  std::optional<ProcessSnapshot> read() override {
    cpu_ += step_;
    return ProcessSnapshot{cpu_, 42.0};
  }

 private:
  double step_;
  double cpu_ = 0.0;
};

std::vector<BenchCase> nine_cases() {
  std::vector<BenchCase> cases;
  for (const char* name : {"cnn", "cnn_gru", "cnn_lstm"}) {
    const nn::ModelGraph g = nn::build_graph(nn::model_config("tiny", name), 5);
    cases.push_back({name, "baseline", std::make_shared<const nn::ModelGraph>(g)});
    cases.push_back({name, "quantised", std::make_shared<const nn::ModelGraph>(opt::quantize_half(g))});
    cases.push_back({name, "pruned", std::make_shared<const nn::ModelGraph>(
                                         opt::prune_model(g, opt::SparsitySchedule{}, std::nullopt).graph)});
  }
  return cases;
}

std::vector<TimingRow> fixture_timing_rows() {
  return {{"cnn", "baseline", 400, 1.25, 3.5, 0.75, 12.125, 17.875},
          {"cnn", "quantised", 400, 1.25, 3.5, 0.75, 6.0625, 11.8125},
          {"cnn", "pruned", 400, 1.25, 3.5, 0.75, 11.5, 17.25}};
}

}  // namespace

TEST_CASE("fps from frame time") {
  CHECK(two_dp(fps_of(122.70)) == "8.15");
  CHECK(two_dp(fps_of(130.99)) == "7.63");
  CHECK(fps_of(1000.0) == 1.0);
  CHECK_THROWS_AS(fps_of(0.0), std::invalid_argument);
  CHECK_THROWS_AS(fps_of(-3.0), std::invalid_argument);
  CHECK_THROWS_AS(fps_of(NAN), std::invalid_argument);
}

TEST_CASE("mean and sample deviation") {
  const Stat s = mean_std({2, 4, 4, 4, 5, 5, 7, 9});
  CHECK(s.mean == 5.0);
  CHECK(s.std == doctest::Approx(std::sqrt(32.0 / 7.0)).epsilon(1e-15));
  CHECK(mean_std({3}).std == 0.0);
  CHECK(mean_std({}).mean == 0.0);
}

TEST_CASE("stage timing on a recording") {
  const auto rec = pipeline::load_recording(kFixtures + "/rec3/manifest.json");
  const nn::ModelGraph g = nn::build_graph(nn::model_config("tiny", "cnn_gru"), 1);
  pipeline::GazeEstimator est(g, std::make_shared<pipeline::BrightRegionDetector>());
  const auto first = time_stages(est, rec);
  est.reset();
  const auto second = time_stages(est, rec);
  REQUIRE(first.size() == 3);
  for (const auto* run : {&first, &second}) {
    for (const FrameTiming& f : *run) {
      CHECK(f.face_found);
      CHECK(f.read_ms >= 0);
      CHECK(f.face_ms >= 0);
      CHECK(f.preproc_ms >= 0);
      CHECK(f.infer_ms > 0);
      CHECK(f.stage_sum() <= f.total_ms);
    }
  }
  const TimingSummary a = summarize(first), b = summarize(second);
  CHECK(a.frames == 3);
  CHECK(a.missing_face == 0);
  MESSAGE("infer mean ms: " << a.infer.mean << " then " << b.infer.mean);
  // Repeat runs agree within the larger of a few deviations and a loose
  // relative band; both values are kept for the report.
  const double noise = 4 * std::hypot(a.infer.std, b.infer.std) + 0.5 * std::max(a.infer.mean, b.infer.mean);
  CHECK(std::abs(a.infer.mean - b.infer.mean) <= noise);
}

TEST_CASE("resource sampler arithmetic with a scripted probe") {
  ResourceSampler sampler(std::make_unique<FakeProbe>(0.05), 0.1);
  sampler.start();
  std::this_thread::sleep_for(std::chrono::milliseconds(550));
  sampler.stop();
  const auto s = sampler.samples();
  REQUIRE(s.size() >= 4);
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    CHECK(s[i].cpu_pct == doctest::Approx(50.0).epsilon(0.35));
    CHECK(s[i].mem_mb == 42.0);
    CHECK(s[i + 1].t_s > s[i].t_s);
  }
}

TEST_CASE("a run shorter than a tenth of an interval still gets one sample") {
  ResourceSampler sampler(std::make_unique<FakeProbe>(0.0), 10.0);
  sampler.start();
  sampler.stop();
  const auto s = sampler.samples();
  REQUIRE(s.size() == 1);
  CHECK(s[0].mem_mb == 42.0);
  CHECK(s[0].cpu_pct >= 0.0);
}

TEST_CASE("resource sampler on this process") {
  SUBCASE("sleeping process uses almost no cpu; sample count follows the interval") {
    ResourceSampler sampler(getpid(), 0.2);
    sampler.start();
    std::this_thread::sleep_for(std::chrono::milliseconds(1500));
    sampler.stop();
    const auto s = sampler.samples();
    CHECK(std::abs(static_cast<double>(s.size()) - 1.5 / 0.2) <= 1.0);
    const ResourceSample m = mean_resources(s);
    CHECK(m.cpu_pct < 15.0);
    CHECK(m.mem_mb > 0.0);
    for (const auto& x : s) CHECK(x.cpu_pct >= 0.0);
  }
  SUBCASE("busy loop on two workers") {
    const unsigned cores = std::max(1u, std::thread::hardware_concurrency());
    std::atomic<bool> stop{false};
    ResourceSampler sampler(getpid(), 0.25);
    sampler.start();
    std::vector<std::thread> workers;
    for (int w = 0; w < 2; ++w) {
      workers.emplace_back([&] {
        volatile double x = 0;
        while (!stop) x = x + 1.0;
      });
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(1500));
    stop = true;
    for (auto& w : workers) w.join();
    sampler.stop();
    const ResourceSample m = mean_resources(sampler.samples());
    MESSAGE("busy-loop cpu % with 2 workers on " << cores << " cores: " << m.cpu_pct);
    // Two spinning workers can use at most min(2, cores) cores.
    CHECK(m.cpu_pct > 70.0 * std::min(2u, cores));
    if (cores >= 2) CHECK(m.cpu_pct > 100.0);
  }
}

TEST_CASE("resource sampler closes when the process exits") {
  const pid_t child = fork();
  REQUIRE(child >= 0);
  if (child == 0) {
    std::this_thread::sleep_for(std::chrono::milliseconds(300));
    _exit(0);
  }
  ResourceSampler sampler(child, 0.1);
  sampler.start();
  int status = 0;
  waitpid(child, &status, 0);
  std::this_thread::sleep_for(std::chrono::milliseconds(400));
  CHECK(sampler.target_exited());
  const auto n = sampler.samples().size();
  CHECK(n <= 4);
  std::this_thread::sleep_for(std::chrono::milliseconds(250));
  CHECK(sampler.samples().size() == n);
  sampler.stop();
}

TEST_CASE("power log parsing") {
  SUBCASE("three rows parse exactly") {
    const PowerLog log = parse_power_csv("t_s,volts,amps\n0,5.0,0.2\n0.1,5.01,0.25\n0.2,4.99,0.3\n");
    REQUIRE(log.samples.size() == 3);
    CHECK(log.samples[1].t_s == 0.1);
    CHECK(log.samples[1].volts == 5.01);
    CHECK(log.samples[2].amps == 0.3);
    CHECK(log.negative_rows.empty());
  }
  SUBCASE("time must increase") {
    CHECK_THROWS_AS(parse_power_csv("t_s,volts,amps\n0,5,1\n0.2,5,1\n0.1,5,1\n"), PowerLogError);
    CHECK_THROWS_AS(parse_power_csv("t_s,volts,amps\n0,5,1\n0,5,1\n"), PowerLogError);
  }
  SUBCASE("empty input") {
    CHECK_THROWS_AS(parse_power_csv(""), PowerLogError);
    CHECK_THROWS_AS(parse_power_csv("t_s,volts,amps\n"), PowerLogError);
  }
  SUBCASE("malformed rows") {
    CHECK_THROWS_AS(parse_power_csv("time,v,a\n0,5,1\n"), PowerLogError);
    CHECK_THROWS_AS(parse_power_csv("t_s,volts,amps\n0,5\n"), PowerLogError);
    CHECK_THROWS_AS(parse_power_csv("t_s,volts,amps\n0,5,x\n"), PowerLogError);
  }
  SUBCASE("negative readings are flagged, not dropped") {
    const PowerLog log = parse_power_csv("t_s,volts,amps\n0,5,0.1\n0.1,5,-0.01\n");
    CHECK(log.samples.size() == 2);
    REQUIRE(log.negative_rows.size() == 1);
    CHECK(log.negative_rows[0] == 2);
  }
  SUBCASE("file fixture") {
    const PowerLog log = ingest_power_log(kFixtures + "/power3.csv");
    CHECK(log.samples.size() == 3);
  }
}

TEST_CASE("energy integration") {
  SUBCASE("constant power for an hour") {
    const auto s = constant_log(5.0, 0.2, 3600, 0.1);
    CHECK(energy_mwh(s, 0, 3600) == doctest::Approx(1000.0).epsilon(1e-12));
  }
  SUBCASE("zero current") {
    CHECK(energy_mwh(constant_log(5.0, 0.0, 100, 0.1), 0, 100) == 0.0);
  }
  SUBCASE("linear current ramp") {
    const std::vector<PowerSample> two{{0, 5, 0}, {3600, 5, 1}};
    CHECK(energy_mwh(two, 0, 3600) == doctest::Approx(2500.0).epsilon(1e-15));
    std::vector<PowerSample> dense;
    for (int i = 0; i <= 36000; ++i) dense.push_back({i * 0.1, 5.0, i / 36000.0});
    CHECK(energy_mwh(dense, 0, 3600) == doctest::Approx(2500.0).epsilon(1e-12));
  }
  SUBCASE("exact between samples on piecewise-linear power") {
    const std::vector<PowerSample> ramp{{0, 5, 0}, {3600, 5, 1}};
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
      double a = rng.uniform(0, 3600), b = rng.uniform(0, 3600);
      if (a > b) std::swap(a, b);
      // 5 W/h ramp: integral of 5 t / 3600 W from a to b, in mWh.
      const double exact = 5.0 * (b * b - a * a) / (2 * 3600) / 3.6;
      CHECK(energy_mwh(ramp, a, b) == doctest::Approx(exact).epsilon(1e-12));
    }
  }
  SUBCASE("additive over adjacent intervals") {
    Rng rng(3);
    std::vector<PowerSample> s;
    double t = 0;
    for (int i = 0; i < 500; ++i) {
      s.push_back({t, rng.uniform(4.8, 5.2), rng.uniform(0.1, 1.5)});
      t += rng.uniform(0.05, 0.15);
    }
    for (int i = 0; i < 200; ++i) {
      double x[3] = {rng.uniform(0, s.back().t_s), rng.uniform(0, s.back().t_s), rng.uniform(0, s.back().t_s)};
      std::sort(x, x + 3);
      CHECK(std::abs(energy_mwh(s, x[0], x[1]) + energy_mwh(s, x[1], x[2]) - energy_mwh(s, x[0], x[2])) <= 1e-9);
    }
  }
  SUBCASE("bounds") {
    const auto s = constant_log(5, 1, 10, 0.1);
    CHECK_THROWS_AS(energy_mwh(s, -1, 5), std::out_of_range);
    CHECK_THROWS_AS(energy_mwh(s, 5, 11), std::out_of_range);
    CHECK_THROWS_AS(energy_mwh(s, 6, 5), std::invalid_argument);
    CHECK(energy_mwh(s, 4, 4) == 0.0);
  }
}

TEST_CASE("idle subtraction") {
  CHECK(additional_energy(0.7053, 0.7053) == 0.0);
  CHECK(0.7053 - 0.2954 == doctest::Approx(0.4099).epsilon(1e-12));
  CHECK(additional_energy(0.7053, 0.7053 - 0.2954) == doctest::Approx(0.2954).epsilon(1e-12));

  const auto run = constant_log(5.0, 1.0, 100, 0.1);   // 5 W
  const auto idle = constant_log(5.0, 0.4, 30, 0.1);   // 2 W
  const EnergySummary e = summarize_energy(run, 10, 46, idle);
  CHECK(e.total_mwh == doctest::Approx(5.0 * 36 / 3.6));
  CHECK(e.idle_mwh == doctest::Approx(2.0 * 36 / 3.6));
  CHECK(e.additional_mwh == doctest::Approx(3.0 * 36 / 3.6));
  const EnergySummary f = per_frame(e, 360);
  CHECK(f.total_mwh == doctest::Approx(e.total_mwh / 360));
  CHECK(f.additional_mwh == doctest::Approx(e.additional_mwh / 360));
  CHECK_THROWS_AS(per_frame(e, 0), std::invalid_argument);
}

TEST_CASE("published energy rows are consistent with idle subtraction") {
  const auto rows = replay_energy_table();
  CHECK(rows.size() == 36);
  for (const auto& r : rows) {
    CHECK(std::abs(r.recomputed_mwh - r.additional_mwh) <= 1e-4);
    CHECK(r.idle_mwh >= 0.0);
  }
  CHECK(rows[3].idle_mwh == doctest::Approx(0.4099).epsilon(1e-9));
}

TEST_CASE("published timing rows replay") {
  const auto rows = replay_timing_table();
  REQUIRE(rows.size() == 36);
  std::size_t mismatched = 0;
  for (const auto& r : rows) {
    if (std::abs(r.stage_sum_ms - r.total_ms) > 0.02) {
      ++mismatched;
      MESSAGE(r.model << " " << r.device << " " << r.variant << ": stages sum to " << r.stage_sum_ms
                      << " ms, total printed as " << r.total_ms);
    }
  }
  CHECK(mismatched < rows.size() / 4);
  for (const auto& r : rows) {
    if (r.model == "cnn_gru" && r.device == "Intel NUC" && r.variant == "quantised") CHECK(two_dp(r.fps) == "8.15");
    if (r.model == "cnn_lstm" && r.device == "Intel NUC" && r.variant == "quantised") CHECK(two_dp(r.fps) == "7.63");
  }
}

TEST_CASE("report tables") {
  const auto rows = fixture_timing_rows();
  SUBCASE("csv parses back to equal values") {
    CHECK(parse_timing_csv(timing_csv(rows)) == rows);
    std::vector<ResourceRow> res{{"cnn", "baseline", 10, 174.95, 1356.95}, {"cnn", "pruned", 10, 1.0 / 3, 0.1}};
    CHECK(parse_resources_csv(resources_csv(res)) == res);
    std::vector<EnergyRow> en{{"cnn_gru", "quantised", 7, 0.3897, 0.1095}, {"x", "pruned", 1, 1e-7, -2e-8}};
    CHECK(parse_energy_csv(energy_csv(en)) == en);
  }
  SUBCASE("names with separators are refused") {
    auto bad = rows;
    bad[0].model = "a,b";
    CHECK_THROWS_AS(timing_csv(bad), std::invalid_argument);
  }
  SUBCASE("golden files") {
    BenchReport rep;
    rep.timing = rows;
    rep.resources = {{"cnn", "baseline", 400, 61.66, 1949.62}, {"cnn", "quantised", 400, 60.69, 309.33},
                     {"cnn", "pruned", 400, 59.66, 1699.62}};
    rep.energy = {{"cnn", "baseline", 400, 1.0727, 0.8784}, {"cnn", "quantised", 400, 0.4138, 0.3326},
                  {"cnn", "pruned", 400, 1.0369, 0.8497}};
    const fs::path dir = fs::temp_directory_path() / ("eyeedge_bench_" + std::to_string(getpid()));
    const auto written = write_reports(dir.string(), rep);
    CHECK(written.size() == 6);
    for (const char* name : {"bench_timing.csv", "bench_timing.md", "bench_resources.csv", "bench_resources.md",
                             "bench_energy.csv", "bench_energy.md"}) {
      INFO(std::string(name));
      CHECK(read_file_text((dir / name).string()) == read_file_text(kFixtures + "/bench_golden/" + name));
    }
    fs::remove_all(dir);
  }
}

TEST_CASE("bench run over three models and three variants") {
  const auto rec = pipeline::load_recording(kFixtures + "/rec3/manifest.json");
  const std::vector<pipeline::Recording> recs{rec, rec};
  BenchOptions opt;
  opt.sample_interval_s = 0.05;
  opt.repeats = 2;
  const auto results = run_bench(nine_cases(), recs, opt);
  REQUIRE(results.size() == 9);

  PowerLogs power{constant_log(5.0, 2.0, results.back().t1_s + 1, 0.1), constant_log(5.0, 0.8, 5, 0.1)};
  const BenchReport rep = build_report(results, power);
  CHECK(rep.timing.size() == 9);
  CHECK(rep.resources.size() == 9);
  REQUIRE(rep.energy.size() == 9);

  std::size_t measured = 0, reported = 0;
  for (std::size_t i = 0; i < 9; ++i) {
    measured += results[i].frames.size();
    reported += rep.timing[i].frames;
    CHECK(results[i].passes.size() == 2);
    CHECK(rep.timing[i].frames == 12);
    CHECK(rep.timing[i].total_ms >= rep.timing[i].read_ms + rep.timing[i].face_ms + rep.timing[i].preproc_ms +
                                        rep.timing[i].infer_ms - 1e-9);
    CHECK(rep.resources[i].mem_mb > 0);
    const double secs = results[i].t1_s - results[i].t0_s;
    CHECK(rep.energy[i].total_mwh == doctest::Approx(10.0 * secs / 3.6 / 12).epsilon(1e-9));
    CHECK(rep.energy[i].additional_mwh == doctest::Approx(6.0 * secs / 3.6 / 12).epsilon(1e-9));
    if (i > 0) CHECK(results[i].t0_s >= results[i - 1].t1_s);
  }
  CHECK(measured == reported);
  CHECK(parse_timing_csv(timing_csv(rep.timing)) == rep.timing);
  CHECK(rep.notes.find("per-pass mean infer ms") != std::string::npos);
}

TEST_CASE("sampler overhead is measured") {
  const nn::ModelGraph g = nn::build_graph(nn::model_config("tiny", "cnn"), 2);
  const nn::Tensor x({128, 128, 1}, std::vector<float>(128 * 128, 0.5f));
  const SamplerOverhead o = measure_sampler_overhead([&] { (void)nn::model_forward(g, std::span(&x, 1)); }, 40, 0.05);
  MESSAGE("mean infer " << o.mean_without_ms << " ms without sampler, " << o.mean_with_ms << " ms with ("
                        << o.change_pct << "%)");
  CHECK(o.mean_without_ms > 0);
  CHECK(std::isfinite(o.change_pct));
}
