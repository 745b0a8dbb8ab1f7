#include "eyeedge/pipeline/recording.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <sstream>

#include "eyeedge/common/bytes.hpp"
#include "json.hpp"

namespace eyeedge::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kCmPerInch = 2.54;

}  // namespace

void DeviceProfile::validate() const {
  if (screen_w_px <= 0 || screen_h_px <= 0 || !(ppi > 0) || !(dpr > 0)) {
    throw RecordingError("device profile needs positive screen size, ppi and dpr");
  }
}

double DeviceProfile::screen_w_cm() const { return screen_w_px / ppi * kCmPerInch; }
double DeviceProfile::screen_h_cm() const { return screen_h_px / ppi * kCmPerInch; }

const char* to_string(Position p) {
  switch (p) {
    case Position::below: return "below";
    case Position::level: return "level";
    case Position::above: return "above";
  }
  return "?";
}

Position position_from_string(const std::string& s) {
  if (s == "below") return Position::below;
  if (s == "level") return Position::level;
  if (s == "above") return Position::above;
  throw RecordingError("unknown position tag '" + s + "'");
}

void Recording::validate() const {
  device.validate();
  if (frames.empty()) throw RecordingError(id + ": recording has no frames");
  if (coords.size() < 2) throw RecordingError(id + ": recording needs at least two coordinates");
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (!(frames[i].pts_ms > frames[i - 1].pts_ms)) {
      throw RecordingError(id + ": frame pts not strictly increasing at frame " + std::to_string(i));
    }
  }
  for (std::size_t i = 1; i < coords.size(); ++i) {
    if (coords[i].t_ms < coords[i - 1].t_ms) {
      throw RecordingError(id + ": coordinate timestamps decrease at index " + std::to_string(i));
    }
  }
}

std::string Recording::frame_path(std::size_t i) const {
  const fs::path p(frames.at(i).file);
  return p.is_absolute() ? p.string() : (fs::path(directory) / p).string();
}

Image Recording::load_frame(std::size_t i) const { return read_pnm(frame_path(i)); }

Recording load_recording(const std::string& manifest_path) {
  json j;
  try {
    j = json::parse(read_file_text(manifest_path));
  } catch (const json::exception& e) {
    throw RecordingError(manifest_path + ": malformed manifest: " + e.what());
  } catch (const std::runtime_error& e) {
    throw RecordingError(e.what());
  }
  Recording rec;
  try {
    if (j.at("schema_version").get<int>() != kManifestSchemaVersion) {
      throw RecordingError(manifest_path + ": unsupported manifest schema version");
    }
    rec.id = j.at("id").get<std::string>();
    rec.participant = j.value("participant", 0);
    rec.position = position_from_string(j.value("position", std::string("level")));
    const json& d = j.at("device");
    rec.device.model = d.value("model", std::string());
    rec.device.screen_w_px = d.at("screen_w_px").get<int>();
    rec.device.screen_h_px = d.at("screen_h_px").get<int>();
    rec.device.ppi = d.at("ppi").get<double>();
    rec.device.dpr = d.at("dpr").get<double>();
    for (const json& f : j.at("frames")) rec.frames.push_back({f.at("file").get<std::string>(), f.at("pts_ms").get<double>()});
    for (const json& c : j.at("coords")) {
      rec.coords.push_back({c.at("t_ms").get<double>(), c.at("x_css").get<double>(), c.at("y_css").get<double>()});
    }
  } catch (const json::exception& e) {
    throw RecordingError(manifest_path + ": malformed manifest: " + e.what());
  }
  rec.directory = fs::path(manifest_path).parent_path().string();
  rec.validate();
  for (std::size_t i = 0; i < rec.frames.size(); ++i) {
    if (!fs::is_regular_file(rec.frame_path(i))) throw RecordingError(rec.id + ": missing frame " + rec.frame_path(i));
  }
  return rec;
}

void save_manifest(const Recording& rec, const std::string& manifest_path) {
  json frames = json::array(), coords = json::array();
  for (const FrameRef& f : rec.frames) frames.push_back({{"file", f.file}, {"pts_ms", f.pts_ms}});
  for (const CoordSample& c : rec.coords) coords.push_back({{"t_ms", c.t_ms}, {"x_css", c.x_css}, {"y_css", c.y_css}});
  const json j = {{"schema_version", kManifestSchemaVersion},
                  {"id", rec.id},
                  {"participant", rec.participant},
                  {"position", to_string(rec.position)},
                  {"device",
                   {{"model", rec.device.model},
                    {"screen_w_px", rec.device.screen_w_px},
                    {"screen_h_px", rec.device.screen_h_px},
                    {"ppi", rec.device.ppi},
                    {"dpr", rec.device.dpr}}},
                  {"frames", frames},
                  {"coords", coords}};
  write_file_text(manifest_path, j.dump(1));
}

std::vector<std::string> load_dataset_index(const std::string& index_path) {
  std::vector<std::string> out;
  try {
    const json j = json::parse(read_file_text(index_path));
    if (j.at("schema_version").get<int>() != kManifestSchemaVersion) {
      throw RecordingError(index_path + ": unsupported index schema version");
    }
    const fs::path base = fs::path(index_path).parent_path();
    for (const json& r : j.at("recordings")) out.push_back((base / r.get<std::string>()).string());
  } catch (const json::exception& e) {
    throw RecordingError(index_path + ": malformed dataset index: " + e.what());
  }
  return out;
}

void save_dataset_index(const std::string& index_path, const std::vector<std::string>& relative_manifests) {
  const json j = {{"schema_version", kManifestSchemaVersion}, {"recordings", relative_manifests}};
  write_file_text(index_path, j.dump(1));
}

Gaze css_to_cm(double x_css, double y_css, const DeviceProfile& device) {
  const double k = device.dpr / device.ppi * kCmPerInch;
  return {x_css * k, y_css * k};
}

std::vector<Gaze> map_coords_to_frames(const Recording& rec) {
  if (rec.coords.size() < 2) throw RecordingError(rec.id + ": need at least two coordinates to label frames");
  const auto& c = rec.coords;
  std::vector<Gaze> labels;
  labels.reserve(rec.frames.size());
  for (const FrameRef& f : rec.frames) {
    const auto it = std::upper_bound(c.begin(), c.end(), f.pts_ms,
                                     [](double t, const CoordSample& s) { return t < s.t_ms; });
    double x, y;
    if (it == c.begin()) {
      x = c.front().x_css;
      y = c.front().y_css;
    } else if (it == c.end()) {
      x = c.back().x_css;
      y = c.back().y_css;
    } else {
      const CoordSample& a = *(it - 1);
      const CoordSample& b = *it;
      const double u = (f.pts_ms - a.t_ms) / (b.t_ms - a.t_ms);
      x = a.x_css + u * (b.x_css - a.x_css);
      y = a.y_css + u * (b.y_css - a.y_css);
    }
    labels.push_back(css_to_cm(x, y, rec.device));
  }
  return labels;
}

std::string labels_csv(const Recording& rec, const std::vector<Gaze>& labels) {
  std::ostringstream s;
  s << "frame_idx,pts_ms,x_cm,y_cm\n" << std::setprecision(10);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    s << i << ',' << rec.frames.at(i).pts_ms << ',' << labels[i].x << ',' << labels[i].y << '\n';
  }
  return s.str();
}

}  // namespace eyeedge::pipeline
