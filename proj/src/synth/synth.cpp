#include "eyeedge/synth/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

namespace eyeedge::synth {

namespace fs = std::filesystem;
using pipeline::CoordSample;
using pipeline::DeviceProfile;
using pipeline::FaceBox;
using pipeline::Image;
using pipeline::Position;
using pipeline::Recording;

std::size_t PathParams::sample_count() const {
  return static_cast<std::size_t>(std::llround(duration_s * rate_hz));
}

std::vector<CoordSample> gen_dot_path(const PathParams& p, const DeviceProfile& device) {
  device.validate();
  if (!(p.rate_hz > 0) || !(p.duration_s > 0) || !(p.speed_min > 0) || p.speed_max < p.speed_min) {
    throw std::invalid_argument("path needs positive duration, rate and speeds with min <= max");
  }
  const double w = device.screen_w_css(), h = device.screen_h_css();
  const double diag = std::hypot(w, h);
  Rng rng(p.seed);

  struct Point {
    double x, y;
  };
  std::array<int, 4> quadrants{0, 1, 2, 3};
  for (int i = 3; i > 0; --i) std::swap(quadrants[i], quadrants[rng.below(i + 1)]);
  auto corner = [&](int q) {
    const double bx = rng.uniform(0, p.corner_band * w), by = rng.uniform(0, p.corner_band * h);
    return Point{q % 2 ? w - bx : bx, q / 2 ? h - by : by};
  };

  const std::size_t n = p.sample_count();
  const double period_ms = 1000.0 / p.rate_hz;
  const double end_ms = static_cast<double>(n - 1) * period_ms;

  std::vector<CoordSample> out;
  out.reserve(n);
  Point from = corner(quadrants[0]);
  double seg_start_ms = 0.0;
  std::size_t waypoint = 1;
  std::size_t k = 0;
  while (k < n) {
    const Point to = waypoint < 4 ? corner(quadrants[waypoint]) : Point{rng.uniform(0, w), rng.uniform(0, h)};
    ++waypoint;
    const double len = std::hypot(to.x - from.x, to.y - from.y);
    const double speed = rng.uniform(p.speed_min, p.speed_max) * diag / 1000.0;  // css px per ms
    const double seg_ms = len / speed;
    while (k < n && static_cast<double>(k) * period_ms <= seg_start_ms + seg_ms) {
      const double t = static_cast<double>(k) * period_ms;
      const double u = seg_ms > 0 ? (t - seg_start_ms) / seg_ms : 1.0;
      out.push_back({t, std::clamp(from.x + u * (to.x - from.x), 0.0, w),
                     std::clamp(from.y + u * (to.y - from.y), 0.0, h)});
      ++k;
    }
    seg_start_ms += seg_ms;
    from = to;
    if (seg_start_ms > end_ms + period_ms) break;
  }
  return out;
}

Gaze blob_offset(const Gaze& g, const RenderParams& p) {
  return {p.offset_px + p.px_per_cm * g.x, p.offset_px + p.px_per_cm * g.y};
}

Gaze gaze_from_offset(const Gaze& o, const RenderParams& p) {
  return {(o.x - p.offset_px) / p.px_per_cm, (o.y - p.offset_px) / p.px_per_cm};
}

FaceBox face_rect(Position position, const RenderParams& p, Rng& rng) {
  const int shift = position == Position::below ? p.position_shift_px
                    : position == Position::above ? -p.position_shift_px
                                                  : 0;
  const int jx = static_cast<int>(rng.below(2 * p.face_jitter_px + 1)) - p.face_jitter_px;
  const int jy = static_cast<int>(rng.below(2 * p.face_jitter_px + 1)) - p.face_jitter_px;
  const int x = (p.frame_w - p.face_w) / 2 + jx;
  const int y = (p.frame_h - p.face_h) / 2 + shift + jy;
  if (x < 0 || y < 0 || x + p.face_w > p.frame_w || y + p.face_h > p.frame_h) {
    throw std::invalid_argument("face rectangle does not fit in the frame");
  }
  return {x, y, p.face_w, p.face_h};
}

Image render_gaze_frame(const Gaze& gaze_cm, const FaceBox& face, const RenderParams& p, Rng* rng) {
  Image img(p.frame_w, p.frame_h, 1);
  Gaze c = blob_offset(gaze_cm, p);
  c.x += face.x;
  c.y += face.y;
  if (rng && p.centre_noise_px > 0) {
    // Box-Muller from the seeded stream.
    const double u1 = 1.0 - rng->uniform(), u2 = rng->uniform();
    const double r = std::sqrt(-2.0 * std::log(u1)) * p.centre_noise_px;
    c.x += r * std::cos(2 * M_PI * u2);
    c.y += r * std::sin(2 * M_PI * u2);
  }
  const double inv = 1.0 / (2.0 * p.blob_sigma * p.blob_sigma);
  for (int y = 0; y < p.frame_h; ++y) {
    for (int x = 0; x < p.frame_w; ++x) {
      double v = 0.0;
      if (x >= face.x && x < face.x + face.w && y >= face.y && y < face.y + face.h) {
        const double dx = x - c.x, dy = y - c.y;
        v = p.face_level + p.blob_peak * std::exp(-(dx * dx + dy * dy) * inv);
      }
      if (rng && p.pixel_noise > 0) v += static_cast<double>(rng->below(2 * p.pixel_noise + 1)) - p.pixel_noise;
      img.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  }
  return img;
}

const std::vector<DeviceProfile>& builtin_devices() {
  static const std::vector<DeviceProfile> devices = {
      {"phone-a", 1080, 2340, 401.0, 2.625},
      {"phone-b", 1170, 2532, 460.0, 3.0},
      {"phone-c", 720, 1600, 270.0, 2.0},
      {"phone-d", 1440, 3200, 515.0, 4.0},
  };
  return devices;
}

Recording gen_recording(std::size_t index, const DatasetParams& params, const std::string& dir, bool write) {
  if (params.devices.empty()) throw std::invalid_argument("dataset needs at least one device profile");
  static constexpr Position kPositions[] = {Position::below, Position::level, Position::above};
  Recording rec;
  rec.participant = static_cast<int>(index / 3);
  rec.position = kPositions[index % 3];
  rec.device = params.devices[static_cast<std::size_t>(rec.participant) % params.devices.size()];
  char id[32];
  std::snprintf(id, sizeof id, "p%03d_%s", rec.participant, pipeline::to_string(rec.position));
  rec.id = id;
  rec.directory = (fs::path(dir) / rec.id).string();

  const std::uint64_t seed = derive_seed(params.seed, index);
  PathParams path = params.path;
  path.seed = derive_seed(seed, 0);
  rec.coords = gen_dot_path(path, rec.device);

  Rng rng(derive_seed(seed, 1));
  const RenderParams& rp = params.render;
  const double last_ms = rec.coords.back().t_ms;
  const double frame_ms = 1000.0 / rp.fps;
  const double jitter = std::min(rp.pts_jitter_ms, 0.45 * frame_ms);
  for (std::size_t k = 0;; ++k) {
    const double pts = static_cast<double>(k) * frame_ms + (k == 0 ? 0.0 : rng.uniform(-jitter, jitter));
    if (pts > last_ms) break;
    char name[32];
    std::snprintf(name, sizeof name, "frame_%05zu.pgm", k);
    rec.frames.push_back({name, pts});
  }
  const FaceBox face = face_rect(rec.position, rp, rng);
  if (write) {
    fs::create_directories(rec.directory);
    const std::vector<Gaze> labels = pipeline::map_coords_to_frames(rec);
    for (std::size_t i = 0; i < rec.frames.size(); ++i) {
      pipeline::write_pnm(rec.frame_path(i), render_gaze_frame(labels[i], face, rp, &rng));
    }
    pipeline::save_manifest(rec, (fs::path(rec.directory) / "manifest.json").string());
  }
  return rec;
}

std::string gen_dataset(const std::string& dir, const DatasetParams& params) {
  fs::create_directories(dir);
  std::vector<std::string> manifests;
  for (std::size_t i = 0; i < params.recordings; ++i) {
    const Recording rec = gen_recording(i, params, dir, true);
    manifests.push_back(rec.id + "/manifest.json");
  }
  const std::string index = (fs::path(dir) / "dataset.json").string();
  pipeline::save_dataset_index(index, manifests);
  return index;
}

}  // namespace eyeedge::synth
