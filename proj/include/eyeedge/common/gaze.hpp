#pragma once

namespace eyeedge {

// A point on the screen in centimetres from the top-left corner.
struct Gaze {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Gaze&, const Gaze&) = default;
};

}  // namespace eyeedge
