#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "eyeedge/common/gaze.hpp"
#include "eyeedge/pipeline/image.hpp"

namespace eyeedge::serve {

struct GridSpec {
  std::size_t rows = 8;
  std::size_t cols = 4;
  double width_cm = 7.0;
  double height_cm = 15.0;
  void validate() const;
};

// Cell (r, c) covers [c*w/cols, (c+1)*w/cols) x [r*h/rows, (r+1)*h/rows),
// so a point on an interior boundary lands in the higher-index cell. Points
// outside [0, w) x [0, h), or non-finite, are counted in out_of_extent.
struct HeatmapGrid {
  GridSpec spec;
  std::vector<std::uint64_t> counts;  // row-major, rows x cols
  std::uint64_t out_of_extent = 0;

  explicit HeatmapGrid(const GridSpec& spec);
  void add(const Gaze& p);
  std::uint64_t at(std::size_t row, std::size_t col) const { return counts[row * spec.cols + col]; }
  std::uint64_t total() const;
};

HeatmapGrid heatmap_accumulate(std::span<const Gaze> points, const GridSpec& spec);

// Each cell becomes a cell_px x cell_px block with intensity
// round(255 * count / max count); an empty grid renders all zero.
pipeline::Image heatmap_render(const HeatmapGrid& grid, int cell_px = 8);

// row,col,count lines followed by an out_of_extent line.
std::string heatmap_csv(const HeatmapGrid& grid);

}  // namespace eyeedge::serve
