#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eyeedge/common/gaze.hpp"
#include "eyeedge/common/rng.hpp"
#include "eyeedge/pipeline/face.hpp"
#include "eyeedge/pipeline/image.hpp"
#include "eyeedge/pipeline/recording.hpp"

namespace eyeedge::synth {

struct PathParams {
  double duration_s = 20.0;
  double rate_hz = 20.0;
  double speed_min = 0.25;  // screen diagonals per second
  double speed_max = 0.50;
  double corner_band = 0.025;  // fraction of the screen the corner waypoints fall in
  std::uint64_t seed = 0;

  std::size_t sample_count() const;
};

// Piecewise-linear dot path in CSS px. The first four waypoints sit in the
// corner bands of the four quadrants (in random order); later ones are
// uniform over the screen. Segment speeds are uniform in
// [speed_min, speed_max] screen diagonals per second.
std::vector<pipeline::CoordSample> gen_dot_path(const PathParams& params, const pipeline::DeviceProfile& device);

struct RenderParams {
  int frame_w = 176;
  int frame_h = 176;
  int face_w = 128;
  int face_h = 128;
  int face_jitter_px = 4;        // per-recording face offset, uniform +-
  int position_shift_px = 8;     // vertical face offset for below/above
  std::uint8_t face_level = 70;
  double blob_sigma = 5.0;
  double blob_peak = 150.0;
  double px_per_cm = 5.0;        // blob displacement per cm of gaze
  double offset_px = 24.0;       // blob position for gaze (0, 0) inside the face
  double centre_noise_px = 0.5;  // std of blob centre jitter
  int pixel_noise = 3;           // uniform +- per pixel
  double fps = 10.0;
  double pts_jitter_ms = 10.0;
};

// Blob centre inside the face rectangle for a gaze point (noise free).
Gaze blob_offset(const Gaze& gaze_cm, const RenderParams& params);
// Inverse of blob_offset.
Gaze gaze_from_offset(const Gaze& offset_px, const RenderParams& params);

// Face rectangle for a recording with the given position tag.
pipeline::FaceBox face_rect(pipeline::Position position, const RenderParams& params, Rng& rng);

// Grey frame: dark background, dim face rectangle, Gaussian blob at
// face origin + blob_offset(gaze) + noise. With a null rng no noise is added.
pipeline::Image render_gaze_frame(const Gaze& gaze_cm, const pipeline::FaceBox& face, const RenderParams& params,
                                  Rng* rng);

// Typical phone profiles used for generated recordings.
const std::vector<pipeline::DeviceProfile>& builtin_devices();

struct DatasetParams {
  std::size_t recordings = 3;
  std::uint64_t seed = 0;
  PathParams path;
  RenderParams render;
  std::vector<pipeline::DeviceProfile> devices = builtin_devices();
};

// Writes <dir>/<id>/frame_*.pgm + manifest.json for each recording and a
// dataset index <dir>/dataset.json. Recording i belongs to participant i/3
// with position below/level/above by i%3; the device is chosen per
// participant. Returns the index path.
std::string gen_dataset(const std::string& dir, const DatasetParams& params);

// Builds one recording in memory (frames written to rec.directory if `write`).
pipeline::Recording gen_recording(std::size_t index, const DatasetParams& params, const std::string& dir, bool write);

}  // namespace eyeedge::synth
