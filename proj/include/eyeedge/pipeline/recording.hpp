#pragma once

// Recording manifest, schema version 1 (manifest.json next to the frames):
//
//   {"schema_version": 1, "id": "p000_level", "participant": 0,
//    "position": "below" | "level" | "above",
//    "device": {"model": "...", "screen_w_px": 1080, "screen_h_px": 2340,
//               "ppi": 401.0, "dpr": 3.0},
//    "frames": [{"file": "frame_00000.pgm", "pts_ms": 0.0}, ...],
//    "coords": [{"t_ms": 0.0, "x_css": 12.5, "y_css": 40.0}, ...]}
//
// Frame files are binary PGM/PPM, relative to the manifest's directory.
// A dataset index lists manifests relative to its own directory:
//   {"schema_version": 1, "recordings": ["p000_level/manifest.json", ...]}

#include <stdexcept>
#include <string>
#include <vector>

#include "eyeedge/common/gaze.hpp"
#include "eyeedge/pipeline/image.hpp"

namespace eyeedge::pipeline {

inline constexpr int kManifestSchemaVersion = 1;

struct DeviceProfile {
  std::string model;
  int screen_w_px = 0;  // physical pixels
  int screen_h_px = 0;
  double ppi = 0.0;
  double dpr = 1.0;

  void validate() const;
  double screen_w_css() const { return screen_w_px / dpr; }
  double screen_h_css() const { return screen_h_px / dpr; }
  double screen_w_cm() const;
  double screen_h_cm() const;
};

enum class Position { below, level, above };
const char* to_string(Position p);
Position position_from_string(const std::string& s);

struct FrameRef {
  std::string file;  // absolute or relative to the manifest directory
  double pts_ms = 0.0;
};

struct CoordSample {
  double t_ms = 0.0;
  double x_css = 0.0;
  double y_css = 0.0;
};

struct Recording {
  std::string id;
  int participant = 0;
  Position position = Position::level;
  DeviceProfile device;
  std::vector<FrameRef> frames;
  std::vector<CoordSample> coords;
  std::string directory;  // where frame files are resolved

  // Strictly increasing pts, non-decreasing coord times, >= 2 coords.
  void validate() const;
  std::string frame_path(std::size_t i) const;
  Image load_frame(std::size_t i) const;
};

struct RecordingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Parses and validates; throws RecordingError for malformed manifests,
// bad timestamps or missing frame files.
Recording load_recording(const std::string& manifest_path);
// Writes manifest.json into rec.directory (frames are written separately).
void save_manifest(const Recording& rec, const std::string& manifest_path);

std::vector<std::string> load_dataset_index(const std::string& index_path);
void save_dataset_index(const std::string& index_path, const std::vector<std::string>& relative_manifests);

// cm = css * dpr / ppi * 2.54, origin at the top-left of the screen.
Gaze css_to_cm(double x_css, double y_css, const DeviceProfile& device);

// Label for each frame: linear interpolation of the coordinates bracketing
// its pts, clamped to the first/last coordinate outside their range.
std::vector<Gaze> map_coords_to_frames(const Recording& rec);

// frame_idx,pts_ms,x_cm,y_cm
std::string labels_csv(const Recording& rec, const std::vector<Gaze>& labels);

}  // namespace eyeedge::pipeline
