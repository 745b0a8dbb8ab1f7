#include "eyeedge/bench/timing.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace eyeedge::bench {

using Clock = std::chrono::steady_clock;

std::vector<FrameTiming> time_stages(pipeline::GazeEstimator& estimator, const pipeline::Recording& rec) {
  std::vector<FrameTiming> out;
  out.reserve(rec.frames.size());
  for (std::size_t i = 0; i < rec.frames.size(); ++i) {
    const auto t0 = Clock::now();
    const pipeline::Image img = rec.load_frame(i);
    const auto t1 = Clock::now();
    const pipeline::Estimate e = estimator.process(img);
    const auto t2 = Clock::now();
    FrameTiming f;
    f.read_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    f.face_ms = e.timing.face_ms;
    f.preproc_ms = e.timing.preprocess_ms;
    f.infer_ms = e.timing.inference_ms;
    f.face_found = e.gaze.has_value();
    f.total_ms = std::max(std::chrono::duration<double, std::milli>(t2 - t0).count(), f.stage_sum());
    out.push_back(f);
  }
  return out;
}

Stat mean_std(const std::vector<double>& values) {
  Stat s;
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  if (values.size() < 2) return s;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return s;
}

TimingSummary summarize(const std::vector<FrameTiming>& frames) {
  TimingSummary s;
  s.frames = frames.size();
  std::vector<double> read, face, pre, inf, tot;
  for (const auto& f : frames) {
    read.push_back(f.read_ms);
    face.push_back(f.face_ms);
    pre.push_back(f.preproc_ms);
    inf.push_back(f.infer_ms);
    tot.push_back(f.total_ms);
    s.missing_face += !f.face_found;
  }
  s.read = mean_std(read);
  s.face = mean_std(face);
  s.preproc = mean_std(pre);
  s.infer = mean_std(inf);
  s.total = mean_std(tot);
  return s;
}

double fps_of(double total_ms) {
  if (!(total_ms > 0.0) || !std::isfinite(total_ms)) throw std::invalid_argument("frame time must be positive");
  return 1000.0 / total_ms;
}

}  // namespace eyeedge::bench
