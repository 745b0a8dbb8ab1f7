#pragma once

#include <string>
#include <vector>

#include "eyeedge/pipeline/preprocess.hpp"
#include "eyeedge/pipeline/recording.hpp"

namespace eyeedge::bench {

// Per-frame stage times in ms, monotonic clock. total covers the whole frame
// and is never below the sum of the stages.
struct FrameTiming {
  double read_ms = 0.0;
  double face_ms = 0.0;
  double preproc_ms = 0.0;
  double infer_ms = 0.0;
  double total_ms = 0.0;
  bool face_found = true;

  double stage_sum() const { return read_ms + face_ms + preproc_ms + infer_ms; }
};

struct Stat {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for fewer than 2 values
};

struct TimingSummary {
  std::size_t frames = 0;
  std::size_t missing_face = 0;
  Stat read, face, preproc, infer, total;
};

// Reads every frame of the recording from disk and runs it through the
// estimator, timing each stage. The estimator's window state carries over
// between frames of the recording; call reset() between recordings.
std::vector<FrameTiming> time_stages(pipeline::GazeEstimator& estimator, const pipeline::Recording& rec);

TimingSummary summarize(const std::vector<FrameTiming>& frames);
Stat mean_std(const std::vector<double>& values);

// 1000 / total_ms.
double fps_of(double total_ms);

}  // namespace eyeedge::bench
