#include "eyeedge/pipeline/face.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace eyeedge::pipeline {

FaceBox BrightRegionDetector::detect(const Image& frame) const {
  const Image grey = to_greyscale(frame);
  const auto peak = std::max_element(grey.data.begin(), grey.data.end());
  if (peak == grey.data.end() || *peak < threshold_ || *peak == 0) throw NoFaceFound("no face found in frame");

  const int w = grey.width, h = grey.height;
  std::vector<std::uint8_t> seen(grey.data.size(), 0);
  std::vector<int> stack{static_cast<int>(peak - grey.data.begin())};
  seen[stack.back()] = 1;
  int x0 = w, y0 = h, x1 = -1, y1 = -1;
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    const int x = i % w, y = i / w;
    x0 = std::min(x0, x);
    x1 = std::max(x1, x);
    y0 = std::min(y0, y);
    y1 = std::max(y1, y);
    const int nbr[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
    for (const auto& n : nbr) {
      if (n[0] < 0 || n[0] >= w || n[1] < 0 || n[1] >= h) continue;
      const int j = n[1] * w + n[0];
      if (!seen[j] && grey.data[j] >= threshold_) {
        seen[j] = 1;
        stack.push_back(j);
      }
    }
  }
  return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

FaceBox expand_box(const FaceBox& box, double margin, int frame_w, int frame_h) {
  const int mx = static_cast<int>(std::lround(box.w * margin));
  const int my = static_cast<int>(std::lround(box.h * margin));
  const int x0 = std::max(0, box.x - mx), y0 = std::max(0, box.y - my);
  const int x1 = std::min(frame_w, box.x + box.w + mx), y1 = std::min(frame_h, box.y + box.h + my);
  return {x0, y0, x1 - x0, y1 - y0};
}

}  // namespace eyeedge::pipeline
