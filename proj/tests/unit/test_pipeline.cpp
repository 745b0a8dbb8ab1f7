#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "eyeedge/common/rng.hpp"
#include "eyeedge/nn/config.hpp"
#include "eyeedge/pipeline/preprocess.hpp"
#include "eyeedge/synth/synth.hpp"
#include "json.hpp"

using namespace eyeedge;
using namespace eyeedge::pipeline;
namespace fs = std::filesystem;

namespace {

const std::string kFixture = std::string(EYEEDGE_SOURCE_DIR) + "/tests/fixtures/rec3/manifest.json";

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("eyeedge_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Copies the fixture recording and rewrites its manifest with `edit`.
template <typename Edit>
std::string edited_fixture(const std::string& name, Edit edit) {
  const fs::path dir = scratch_dir(name);
  for (const auto& e : fs::directory_iterator(fs::path(kFixture).parent_path())) fs::copy(e.path(), dir / e.path().filename());
  std::ifstream in(dir / "manifest.json");
  nlohmann::json j = nlohmann::json::parse(in);
  edit(j);
  std::ofstream(dir / "manifest.json") << j.dump();
  return (dir / "manifest.json").string();
}

DeviceProfile device(double ppi, double dpr) { return {"d", 1000, 2000, ppi, dpr}; }

}  // namespace

TEST_CASE("load_recording") {
  const Recording rec = load_recording(kFixture);
  CHECK(rec.frames.size() == 3);
  CHECK(rec.coords.size() == 3);
  CHECK(rec.device.dpr == 2.0);
  CHECK(rec.position == Position::level);
  const Image f = rec.load_frame(1);
  CHECK(f.width == 8);
  CHECK(f.height == 6);
  CHECK(f.at(2, 1) == 70);

  CHECK_THROWS_AS(load_recording(edited_fixture("shuffled", [](auto& j) { j["frames"][1]["pts_ms"] = 250.0; })),
                  RecordingError);
  CHECK_THROWS_AS(load_recording(edited_fixture("nocoords", [](auto& j) { j["coords"] = nlohmann::json::array(); })),
                  RecordingError);
  CHECK_THROWS_AS(load_recording(edited_fixture("missing", [](auto& j) { j["frames"][2]["file"] = "nope.pgm"; })),
                  RecordingError);
  CHECK_THROWS_AS(load_recording(edited_fixture("nodevice", [](auto& j) { j.erase("device"); })), RecordingError);
  CHECK_THROWS_AS(load_recording(edited_fixture("badppi", [](auto& j) { j["device"]["ppi"] = 0; })), RecordingError);

  const fs::path dir = scratch_dir("garbage");
  std::ofstream(dir / "manifest.json") << "{not json";
  CHECK_THROWS_AS(load_recording((dir / "manifest.json").string()), RecordingError);
}

TEST_CASE("manifest round trip") {
  const Recording rec = load_recording(kFixture);
  const fs::path dir = scratch_dir("roundtrip");
  for (const auto& e : fs::directory_iterator(fs::path(kFixture).parent_path())) fs::copy(e.path(), dir / e.path().filename());
  save_manifest(rec, (dir / "manifest.json").string());
  const Recording back = load_recording((dir / "manifest.json").string());
  CHECK(back.id == rec.id);
  CHECK(back.frames.size() == rec.frames.size());
  CHECK(back.coords.back().x_css == rec.coords.back().x_css);
}

TEST_CASE("greyscale") {
  CHECK(luma(255, 255, 255) == 255);
  CHECK(luma(0, 0, 0) == 0);
  CHECK(luma(255, 0, 0) == 76);
  CHECK(luma(0, 255, 0) == 150);
  CHECK(luma(0, 0, 255) == 29);
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    const auto r = static_cast<int>(rng.below(256)), g = static_cast<int>(rng.below(256)),
               b = static_cast<int>(rng.below(256));
    const double y = 0.299 * r + 0.587 * g + 0.114 * b;
    // Round half up; the integer form is exact where y has no rounding doubt.
    if (std::abs(y - std::floor(y) - 0.5) > 1e-9) REQUIRE(luma(r, g, b) == static_cast<int>(std::floor(y + 0.5)));
  }
  Image rgb(2, 1, 3);
  rgb.data = {255, 0, 0, 10, 20, 30};
  const Image grey = to_greyscale(rgb);
  CHECK(grey.channels == 1);
  CHECK(grey.data == std::vector<std::uint8_t>{76, luma(10, 20, 30)});
}

TEST_CASE("bilinear resize") {
  Rng rng(2);
  Image img(7, 5, 1);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(rng.below(256));
  CHECK(resize_bilinear(img, 7, 5) == img);
  const Image flat(9, 4, 1, 77);
  for (auto& v : resize_bilinear(flat, 13, 3).data) CHECK(v == 77);

  Image two(2, 1, 1);
  two.data = {0, 255};
  // Half-pixel centres: sources -1/6 (clamped to 0), 1/2, 7/6 (clamped to 1).
  CHECK(resize_bilinear(two, 3, 1).data == std::vector<std::uint8_t>{0, 128, 255});

  // Independent evaluation of the same convention on a random image.
  const Image out = resize_bilinear(img, 11, 3);
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 11; ++x) {
      const double sx = std::min(std::max((x + 0.5) * 7 / 11 - 0.5, 0.0), 6.0);
      const double sy = std::min(std::max((y + 0.5) * 5 / 3 - 0.5, 0.0), 4.0);
      const int x0 = static_cast<int>(sx), y0 = static_cast<int>(sy);
      const int x1 = std::min(x0 + 1, 6), y1 = std::min(y0 + 1, 4);
      const double fx = sx - x0, fy = sy - y0;
      const double v = (1 - fy) * ((1 - fx) * img.at(x0, y0) + fx * img.at(x1, y0)) +
                       fy * ((1 - fx) * img.at(x0, y1) + fx * img.at(x1, y1));
      CHECK(out.at(x, y) == static_cast<int>(std::floor(v + 0.5)));
    }
  }
}

TEST_CASE("normalize") {
  Image img(3, 1, 1);
  img.data = {255, 0, 128};
  const nn::Tensor t = normalize(img);
  CHECK(t.shape() == nn::Shape{1, 3, 1});
  CHECK(t[0] == 1.0f);
  CHECK(t[1] == 0.0f);
  CHECK(t[2] == doctest::Approx(0.50196).epsilon(1e-5));
}

TEST_CASE("pnm round trip") {
  Image img(5, 3, 3);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<std::uint8_t>(i * 7);
  CHECK(decode_pnm(encode_pnm(img)) == img);
  std::vector<std::uint8_t> bad = encode_pnm(img);
  bad.resize(bad.size() - 1);
  CHECK_THROWS_AS(decode_pnm(bad), ImageFormatError);
  CHECK_THROWS_AS(decode_pnm({'P', '2'}), ImageFormatError);
}

TEST_CASE("css_to_cm") {
  CHECK(css_to_cm(0, 0, device(401, 3)) == Gaze{0, 0});
  const Gaze a = css_to_cm(100, 0, device(254, 1));
  CHECK(a.x == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(a.y == 0.0);
  const Gaze b = css_to_cm(100, 100, device(508, 2));
  CHECK(b.x == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(b.y == doctest::Approx(1.0).epsilon(1e-12));

  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const DeviceProfile d = device(rng.uniform(100, 600), rng.uniform(1, 4));
    const double ax = rng.uniform(0, 500), ay = rng.uniform(0, 900), bx = rng.uniform(0, 500), by = rng.uniform(0, 900);
    const Gaze fa = css_to_cm(ax, ay, d), fb = css_to_cm(bx, by, d), fab = css_to_cm(ax + bx, ay + by, d);
    REQUIRE(fab.x == doctest::Approx(fa.x + fb.x).epsilon(1e-12));
    REQUIRE(fab.y == doctest::Approx(fa.y + fb.y).epsilon(1e-12));
  }
}

TEST_CASE("map_coords_to_frames") {
  Recording rec;
  rec.device = device(254, 1);  // 1 css px = 0.01 cm
  rec.coords = {{0, 0, 0}, {50, 10, 10}, {100, 30, 10}};
  rec.frames = {{"a", -20}, {"b", 0}, {"c", 25}, {"d", 50}, {"e", 75}, {"f", 140}};
  const auto labels = map_coords_to_frames(rec);
  REQUIRE(labels.size() == 6);
  CHECK(labels[0].x == 0.0);                                     // clamped before the first coord
  CHECK(labels[1].x == 0.0);                                     // exact timestamp
  CHECK(labels[2].x == doctest::Approx(0.05));                   // midpoint of (0,0)-(10,10)
  CHECK(labels[2].y == doctest::Approx(0.05));
  CHECK(labels[3].x == doctest::Approx(0.10));                   // exact timestamp
  CHECK(labels[4].x == doctest::Approx(0.20));
  CHECK(labels[5].x == doctest::Approx(0.30));                   // clamped after the last coord

  // Interpolation stays between neighbours on random paths.
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    Recording r;
    r.device = device(300, 2);
    double t = 0;
    for (int i = 0; i < 30; ++i) {
      r.coords.push_back({t, rng.uniform(0, 400), rng.uniform(0, 800)});
      t += rng.uniform(0, 80);
    }
    double pts = rng.uniform(-50, 0);
    while (pts < t + 50) {
      r.frames.push_back({"x", pts});
      pts += rng.uniform(1, 60);
    }
    const auto lab = map_coords_to_frames(r);
    REQUIRE(lab.size() == r.frames.size());
    for (std::size_t i = 0; i < lab.size(); ++i) {
      const double ft = r.frames[i].pts_ms;
      std::size_t j = 0;
      while (j + 1 < r.coords.size() && r.coords[j + 1].t_ms <= ft) ++j;
      const std::size_t k = std::min(j + 1, r.coords.size() - 1);
      const Gaze a = css_to_cm(r.coords[j].x_css, r.coords[j].y_css, r.device);
      const Gaze b = css_to_cm(r.coords[k].x_css, r.coords[k].y_css, r.device);
      REQUIRE(lab[i].x >= std::min(a.x, b.x) - 1e-9);
      REQUIRE(lab[i].x <= std::max(a.x, b.x) + 1e-9);
      REQUIRE(lab[i].y >= std::min(a.y, b.y) - 1e-9);
      REQUIRE(lab[i].y <= std::max(a.y, b.y) + 1e-9);
    }
  }

  const Recording fx = load_recording(kFixture);
  const auto fl = map_coords_to_frames(fx);
  CHECK(fl[1].x == doctest::Approx(2.54));
  CHECK(fl[1].y == doctest::Approx(5.08));
  CHECK(labels_csv(fx, fl).rfind("frame_idx,pts_ms,x_cm,y_cm\n", 0) == 0);
}

TEST_CASE("bright region detector") {
  const BrightRegionDetector det;
  CHECK_THROWS_AS(det.detect(Image(40, 30, 1, 0)), NoFaceFound);
  CHECK(det.detect(Image(40, 30, 1, 200)) == FaceBox{0, 0, 40, 30});
  CHECK(det.detect(Image(40, 30, 3, 200)) == FaceBox{0, 0, 40, 30});

  const Recording fx = load_recording(kFixture);
  CHECK(det.detect(fx.load_frame(0)) == FaceBox{2, 1, 4, 3});

  synth::RenderParams rp;
  Rng rng(5);
  for (Position pos : {Position::below, Position::level, Position::above}) {
    for (int i = 0; i < 10; ++i) {
      const FaceBox face = synth::face_rect(pos, rp, rng);
      const Image frame = synth::render_gaze_frame({rng.uniform(0, 6), rng.uniform(0, 14)}, face, rp, &rng);
      const FaceBox got = det.detect(frame);
      CHECK(std::abs(got.x - face.x) <= 2);
      CHECK(std::abs(got.y - face.y) <= 2);
      CHECK(std::abs(got.w - face.w) <= 2);
      CHECK(std::abs(got.h - face.h) <= 2);
    }
  }
}

TEST_CASE("expand_box clamps to the frame") {
  CHECK(expand_box({10, 10, 100, 50}, 0.1, 200, 200) == FaceBox{0, 5, 120, 60});
  CHECK(expand_box({90, 0, 10, 10}, 0.5, 100, 100) == FaceBox{85, 0, 15, 15});
}

TEST_CASE("preprocess is the composition of its steps") {
  synth::RenderParams rp;
  Rng rng(6);
  const FaceBox face = synth::face_rect(Position::level, rp, rng);
  const Image frame = synth::render_gaze_frame({3, 7}, face, rp, &rng);
  const nn::Tensor t = preprocess(frame, face, 0.1);
  const FaceBox b = expand_box(face, 0.1, frame.width, frame.height);
  const nn::Tensor manual = normalize(resize_bilinear(to_greyscale(crop(frame, b.x, b.y, b.w, b.h)), 128, 128));
  CHECK(t == manual);
  CHECK(t.shape() == nn::Shape{128, 128, 1});
  for (float v : t.values()) REQUIRE((v >= 0.0f && v <= 1.0f));
  CHECK(preprocess(frame, face, 0.1) == t);
}

TEST_CASE("prepare_recording and streaming estimation") {
  const fs::path dir = scratch_dir("prep");
  synth::DatasetParams dp;
  dp.recordings = 1;
  dp.path.duration_s = 3;
  dp.seed = 9;
  const std::string index = synth::gen_dataset(dir.string(), dp);
  const Recording rec = load_recording(load_dataset_index(index).at(0));
  const BrightRegionDetector det;
  const PreparedRecording prep = prepare_recording(rec, det);
  CHECK(prep.skipped == 0);
  CHECK(prep.sequence.frames.size() == rec.frames.size());

  for (const char* name : {"cnn", "cnn_lstm"}) {
    const nn::ModelGraph g = nn::build_graph(nn::model_config("tiny", name), 1);
    GazeEstimator est(g, std::make_shared<BrightRegionDetector>());
    GazeEstimator again(g, std::make_shared<BrightRegionDetector>());
    const auto batch = nn::predict_dataset(g, nn::Dataset{{prep.sequence}});
    for (std::size_t i = 0; i < rec.frames.size(); ++i) {
      const Estimate e = est.process(rec.load_frame(i));
      REQUIRE(e.gaze.has_value());
      CHECK(e.gaze->x == batch[i].x);
      CHECK(e.gaze->y == batch[i].y);
      CHECK(again.process(rec.load_frame(i)).gaze == e.gaze);
      CHECK(e.timing.total_ms >= e.timing.inference_ms);
    }
    CHECK_FALSE(est.process(Image(176, 176, 1, 0)).gaze.has_value());
  }
}
