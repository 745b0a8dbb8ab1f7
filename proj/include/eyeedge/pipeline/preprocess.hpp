#pragma once

#include <cstddef>
#include <deque>
#include <memory>
#include <optional>
#include <vector>

#include "eyeedge/common/gaze.hpp"
#include "eyeedge/nn/model.hpp"
#include "eyeedge/nn/train.hpp"
#include "eyeedge/pipeline/face.hpp"
#include "eyeedge/pipeline/recording.hpp"

namespace eyeedge::pipeline {

inline constexpr int kModelInputSize = 128;
inline constexpr double kDefaultCropMargin = 0.10;

// Crop (box plus margin, clamped), greyscale, resize to 128x128, scale to [0,1].
nn::Tensor preprocess(const Image& frame, const FaceBox& box, double margin = kDefaultCropMargin);

struct PreparedRecording {
  nn::Sequence sequence;            // frames with a face, in pts order
  std::vector<std::size_t> frame_index;  // source frame of each kept frame
  std::size_t skipped = 0;          // frames without a face
};

// Labels every frame, then detects and preprocesses each one; frames where
// detection fails are dropped and counted.
PreparedRecording prepare_recording(const Recording& rec, const FaceDetector& detector,
                                    double margin = kDefaultCropMargin);

// Per-frame wall-clock milliseconds for each stage of the pipeline.
struct StageTiming {
  double face_ms = 0.0;
  double preprocess_ms = 0.0;
  double inference_ms = 0.0;
  double total_ms = 0.0;
};

struct Estimate {
  std::optional<Gaze> gaze;  // empty when no face was found
  StageTiming timing;
};

// Streaming frame -> gaze estimator. Recurrent models keep the last
// `window` trunk outputs; until the window fills, the first frame's output
// is repeated. Half-precision graphs are widened once at construction.
class GazeEstimator {
 public:
  GazeEstimator(const nn::ModelGraph& graph, std::shared_ptr<const FaceDetector> detector,
                double margin = kDefaultCropMargin);

  Estimate process(const Image& frame);
  // Inference only, for already preprocessed input.
  Gaze infer(const nn::Tensor& input);
  void reset() { history_.clear(); }
  const nn::ModelGraph& graph() const { return graph_; }

 private:
  nn::ModelGraph graph_;
  std::shared_ptr<const FaceDetector> detector_;
  double margin_;
  bool recurrent_;
  std::deque<nn::Tensor> history_;
};

}  // namespace eyeedge::pipeline
