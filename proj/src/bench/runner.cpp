#include "eyeedge/bench/runner.hpp"

#include <unistd.h>

#include <chrono>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "eyeedge/pipeline/face.hpp"
#include "eyeedge/pipeline/preprocess.hpp"

namespace eyeedge::bench {

using Clock = std::chrono::steady_clock;

namespace {

double seconds(Clock::time_point from, Clock::time_point to) { return std::chrono::duration<double>(to - from).count(); }

}  // namespace

std::vector<CaseResult> run_bench(const std::vector<BenchCase>& cases,
                                  const std::vector<pipeline::Recording>& recordings, const BenchOptions& options) {
  if (options.repeats < 1) throw std::invalid_argument("repeats must be at least 1");
  const auto origin = Clock::now();
  const auto detector = std::make_shared<pipeline::BrightRegionDetector>(options.face_threshold);
  std::vector<CaseResult> out;
  for (const BenchCase& c : cases) {
    if (!c.graph) throw std::invalid_argument("bench case " + c.model + " has no model");
    if (!is_variant(c.variant)) throw std::invalid_argument("unknown variant " + c.variant);
    CaseResult r;
    r.model = c.model;
    r.variant = c.variant;
    pipeline::GazeEstimator estimator(*c.graph, detector);
    ResourceSampler sampler(getpid(), options.sample_interval_s);
    r.t0_s = seconds(origin, Clock::now());
    sampler.start();
    for (int pass = 0; pass < options.repeats; ++pass) {
      std::vector<FrameTiming> frames;
      for (const auto& rec : recordings) {
        estimator.reset();
        auto t = time_stages(estimator, rec);
        frames.insert(frames.end(), t.begin(), t.end());
      }
      r.passes.push_back(summarize(frames));
      r.frames.insert(r.frames.end(), frames.begin(), frames.end());
    }
    sampler.stop();
    r.t1_s = seconds(origin, Clock::now());
    r.resources = sampler.samples();
    out.push_back(std::move(r));
  }
  return out;
}

BenchReport build_report(const std::vector<CaseResult>& results, const std::optional<PowerLogs>& power) {
  BenchReport rep;
  std::ostringstream notes;
  notes << std::fixed << std::setprecision(3);
  for (const CaseResult& r : results) {
    const TimingSummary s = summarize(r.frames);
    rep.timing.push_back({r.model, r.variant, s.frames, s.read.mean, s.face.mean, s.preproc.mean, s.infer.mean,
                          s.total.mean});
    const ResourceSample m = mean_resources(r.resources);
    rep.resources.push_back({r.model, r.variant, s.frames, m.cpu_pct, m.mem_mb});
    if (power && s.frames > 0) {
      const EnergySummary e = per_frame(summarize_energy(power->run, r.t0_s, r.t1_s, power->idle), s.frames);
      rep.energy.push_back({r.model, r.variant, s.frames, e.total_mwh, e.additional_mwh});
    }
    if (s.missing_face > 0) {
      notes << "- " << r.model << "/" << r.variant << ": " << s.missing_face << " of " << s.frames
            << " frames had no face\n";
    }
    if (r.passes.size() > 1) {
      notes << "- " << r.model << "/" << r.variant << " per-pass mean infer ms:";
      for (const auto& p : r.passes) notes << ' ' << p.infer.mean << " (sd " << p.infer.std << ")";
      notes << '\n';
    }
  }
  rep.notes = notes.str();
  return rep;
}

SamplerOverhead measure_sampler_overhead(const std::function<void()>& workload, int reps, double interval_s) {
  const auto run = [&] {
    double total = 0.0;
    for (int i = 0; i < reps; ++i) {
      const auto t0 = Clock::now();
      workload();
      total += std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    }
    return total / reps;
  };
  SamplerOverhead o;
  o.mean_without_ms = run();
  ResourceSampler sampler(getpid(), interval_s);
  sampler.start();
  o.mean_with_ms = run();
  sampler.stop();
  o.change_pct = o.mean_without_ms > 0 ? 100.0 * (o.mean_with_ms - o.mean_without_ms) / o.mean_without_ms : 0.0;
  return o;
}

}  // namespace eyeedge::bench
