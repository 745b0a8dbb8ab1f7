#include "eyeedge/pipeline/preprocess.hpp"

#include <chrono>

namespace eyeedge::pipeline {

nn::Tensor preprocess(const Image& frame, const FaceBox& box, double margin) {
  const FaceBox b = expand_box(box, margin, frame.width, frame.height);
  const Image face = to_greyscale(crop(frame, b.x, b.y, b.w, b.h));
  return normalize(resize_bilinear(face, kModelInputSize, kModelInputSize));
}

PreparedRecording prepare_recording(const Recording& rec, const FaceDetector& detector, double margin) {
  const std::vector<Gaze> labels = map_coords_to_frames(rec);
  PreparedRecording out;
  for (std::size_t i = 0; i < rec.frames.size(); ++i) {
    const Image frame = rec.load_frame(i);
    FaceBox box;
    try {
      box = detector.detect(frame);
    } catch (const NoFaceFound&) {
      ++out.skipped;
      continue;
    }
    out.sequence.frames.push_back(preprocess(frame, box, margin));
    out.sequence.labels.push_back(labels[i]);
    out.frame_index.push_back(i);
  }
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

}  // namespace

GazeEstimator::GazeEstimator(const nn::ModelGraph& graph, std::shared_ptr<const FaceDetector> detector,
                             double margin)
    : graph_(nn::widen(graph)),
      detector_(std::move(detector)),
      margin_(margin),
      recurrent_(graph_.recurrent_index() < graph_.layers.size()) {
  if (!detector_) throw std::invalid_argument("estimator needs a face detector");
}

Gaze GazeEstimator::infer(const nn::Tensor& input) {
  if (!recurrent_) return nn::model_forward(graph_, std::span<const nn::Tensor>(&input, 1));
  history_.push_back(nn::trunk_forward(graph_, input));
  if (history_.size() > graph_.window) history_.pop_front();
  std::vector<nn::Tensor> window;
  window.reserve(graph_.window);
  for (std::size_t k = history_.size(); k < graph_.window; ++k) window.push_back(history_.front());
  window.insert(window.end(), history_.begin(), history_.end());
  return nn::head_forward(graph_, window);
}

Estimate GazeEstimator::process(const Image& frame) {
  Estimate e;
  const auto t0 = Clock::now();
  FaceBox box;
  try {
    box = detector_->detect(frame);
  } catch (const NoFaceFound&) {
    e.timing.face_ms = e.timing.total_ms = ms_since(t0);
    return e;
  }
  e.timing.face_ms = ms_since(t0);
  const auto t1 = Clock::now();
  const nn::Tensor input = preprocess(frame, box, margin_);
  e.timing.preprocess_ms = ms_since(t1);
  const auto t2 = Clock::now();
  e.gaze = infer(input);
  e.timing.inference_ms = ms_since(t2);
  e.timing.total_ms = ms_since(t0);
  return e;
}

}  // namespace eyeedge::pipeline
