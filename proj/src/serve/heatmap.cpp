#include "eyeedge/serve/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace eyeedge::serve {

void GridSpec::validate() const {
  if (rows == 0 || cols == 0 || !(width_cm > 0) || !(height_cm > 0)) {
    throw std::invalid_argument("heatmap grid needs positive rows, cols and extent");
  }
}

HeatmapGrid::HeatmapGrid(const GridSpec& s) : spec(s) {
  spec.validate();
  counts.assign(spec.rows * spec.cols, 0);
}

void HeatmapGrid::add(const Gaze& p) {
  if (!(p.x >= 0.0 && p.x < spec.width_cm && p.y >= 0.0 && p.y < spec.height_cm)) {
    ++out_of_extent;
    return;
  }
  const auto col = std::min(spec.cols - 1, static_cast<std::size_t>(std::floor(p.x * spec.cols / spec.width_cm)));
  const auto row = std::min(spec.rows - 1, static_cast<std::size_t>(std::floor(p.y * spec.rows / spec.height_cm)));
  ++counts[row * spec.cols + col];
}

std::uint64_t HeatmapGrid::total() const { return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}); }

HeatmapGrid heatmap_accumulate(std::span<const Gaze> points, const GridSpec& spec) {
  HeatmapGrid g(spec);
  for (const Gaze& p : points) g.add(p);
  return g;
}

pipeline::Image heatmap_render(const HeatmapGrid& grid, int cell_px) {
  if (cell_px <= 0) throw std::invalid_argument("heatmap cell size must be positive");
  const auto cols = static_cast<int>(grid.spec.cols), rows = static_cast<int>(grid.spec.rows);
  pipeline::Image img(cols * cell_px, rows * cell_px, 1);
  const std::uint64_t peak = *std::max_element(grid.counts.begin(), grid.counts.end());
  if (peak == 0) return img;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const auto v = static_cast<std::uint8_t>(
          std::lround(255.0 * static_cast<double>(grid.at(r, c)) / static_cast<double>(peak)));
      for (int y = 0; y < cell_px; ++y)
        for (int x = 0; x < cell_px; ++x) img.at(c * cell_px + x, r * cell_px + y) = v;
    }
  }
  return img;
}

std::string heatmap_csv(const HeatmapGrid& grid) {
  std::ostringstream s;
  s << "row,col,count\n";
  for (std::size_t r = 0; r < grid.spec.rows; ++r)
    for (std::size_t c = 0; c < grid.spec.cols; ++c) s << r << ',' << c << ',' << grid.at(r, c) << '\n';
  s << "out_of_extent,," << grid.out_of_extent << '\n';
  return s.str();
}

}  // namespace eyeedge::serve
