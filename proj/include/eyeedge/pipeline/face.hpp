#pragma once

#include <cstdint>
#include <stdexcept>

#include "eyeedge/pipeline/image.hpp"

namespace eyeedge::pipeline {

struct FaceBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
  friend bool operator==(const FaceBox&, const FaceBox&) = default;
};

struct NoFaceFound : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class FaceDetector {
 public:
  virtual ~FaceDetector() = default;
  // Throws NoFaceFound when the frame has no face.
  virtual FaceBox detect(const Image& frame) const = 0;
};

// Reference detector for synthetic frames: the bounding box of the
// 4-connected region of pixels at or above `threshold` that contains the
// brightest pixel (first in raster order on ties).
class BrightRegionDetector : public FaceDetector {
 public:
  explicit BrightRegionDetector(std::uint8_t threshold = 24) : threshold_(threshold) {}
  FaceBox detect(const Image& frame) const override;

 private:
  std::uint8_t threshold_;
};

// Box grown by `margin` of its size on every side, clamped to the frame.
FaceBox expand_box(const FaceBox& box, double margin, int frame_w, int frame_h);

}  // namespace eyeedge::pipeline
