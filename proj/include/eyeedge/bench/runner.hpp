#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "eyeedge/bench/report.hpp"
#include "eyeedge/nn/model.hpp"
#include "eyeedge/pipeline/recording.hpp"

namespace eyeedge::bench {

struct BenchCase {
  std::string model;
  std::string variant;
  std::shared_ptr<const nn::ModelGraph> graph;
};

struct BenchOptions {
  double sample_interval_s = 1.0;
  std::uint8_t face_threshold = 24;
  int repeats = 1;  // passes over the recordings per case
};

struct CaseResult {
  std::string model, variant;
  std::vector<FrameTiming> frames;       // all passes
  std::vector<TimingSummary> passes;     // one per repeat
  std::vector<ResourceSample> resources;
  double t0_s = 0.0;  // seconds since the bench started
  double t1_s = 0.0;
};

// Runs each case over every recording with this process's resource sampler
// active. Case windows are reported relative to the bench start, the time
// base expected of any power log recorded alongside.
std::vector<CaseResult> run_bench(const std::vector<BenchCase>& cases,
                                  const std::vector<pipeline::Recording>& recordings, const BenchOptions& options);

struct PowerLogs {
  std::vector<PowerSample> run;
  std::vector<PowerSample> idle;
};

BenchReport build_report(const std::vector<CaseResult>& results, const std::optional<PowerLogs>& power);

struct SamplerOverhead {
  double mean_without_ms = 0.0;
  double mean_with_ms = 0.0;
  double change_pct = 0.0;  // relative change of the mean
};

// Times `workload` `reps` times without and then with a sampler on this
// process.
SamplerOverhead measure_sampler_overhead(const std::function<void()>& workload, int reps, double interval_s);

}  // namespace eyeedge::bench
