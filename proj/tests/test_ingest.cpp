#include <doctest.h>

#include <unistd.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "kreg/cloud_io.hpp"
#include "kreg/config_io.hpp"
#include "kreg/errors.hpp"
#include "kreg/image.hpp"
#include "kreg/projection.hpp"
#include "kreg/selector.hpp"
#include "kreg/trajectory.hpp"
#include "test_helpers.hpp"

using namespace kreg;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("kreg_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

PointCloud labeled_fixture(uint64_t seed, int n) {
  SplitMix64 rng(seed);
  std::vector<Eigen::Vector3d> pts(static_cast<size_t>(n));
  for (auto& p : pts) {
    p = Eigen::Vector3d(rng.uniform(-40, 40), rng.uniform(-40, 40), rng.uniform(0, 55));
  }
  FeatureSchema schema({{"color", 3, ChannelKind::color},
                        {"intensity", 1, ChannelKind::intensity},
                        {"semantic", 4, ChannelKind::semantic}});
  std::vector<double> feats;
  for (int i = 0; i < n; ++i) {
    feats.push_back(rng.uniform());
    feats.push_back(rng.uniform());
    feats.push_back(rng.uniform());
    feats.push_back(rng.uniform());
    const int cls = static_cast<int>(rng.next() % 4);
    for (int c = 0; c < 4; ++c) feats.push_back(c == cls ? 1.0 : 0.0);
  }
  return PointCloud(std::move(pts), std::move(schema), std::move(feats));
}

}  // namespace

TEST_CASE("pgm 16-bit round trip") {
  TempDir tmp;
  ImageU16 img(17, 9, 1);
  SplitMix64 rng(1);
  for (auto& v : img.data) v = static_cast<uint16_t>(rng.next() % 65536);
  write_pgm16(img, tmp.file("d.pgm"));
  const ImageU16 back = read_pgm16(tmp.file("d.pgm"));
  REQUIRE(back.width == img.width);
  REQUIRE(back.height == img.height);
  CHECK(back.data == img.data);
}

TEST_CASE("ppm round trip and ascii variants") {
  TempDir tmp;
  ImageU8 img(5, 4, 3);
  SplitMix64 rng(2);
  for (auto& v : img.data) v = static_cast<uint8_t>(rng.next() % 256);
  write_ppm(img, tmp.file("c.ppm"));
  CHECK(read_ppm(tmp.file("c.ppm")).data == img.data);

  write_text(tmp.file("a.pgm"), "P2\n# comment\n2 2\n65535\n0 1\n70000-bad");
  CHECK_THROWS_AS(read_pgm16(tmp.file("a.pgm")), ParseError);

  write_text(tmp.file("ok.pgm"), "P2\n2 2\n65535\n0 1 2 3\n");
  const ImageU16 ascii = read_pgm16(tmp.file("ok.pgm"));
  CHECK(ascii.at(1, 1) == 3);
}

TEST_CASE("binary PLY round trip: positions bit-exact, features to 1e-6") {
  TempDir tmp;
  const PointCloud cloud = labeled_fixture(3, 200);
  write_cloud(cloud, tmp.file("c.ply"));
  const PointCloud back = read_cloud(tmp.file("c.ply"));

  REQUIRE(back.size() == cloud.size());
  REQUIRE(back.schema() == cloud.schema());
  for (int i = 0; i < cloud.size(); ++i) {
    CHECK(back.position(i).x() == cloud.position(i).x());
    CHECK(back.position(i).y() == cloud.position(i).y());
    CHECK(back.position(i).z() == cloud.position(i).z());
  }
  for (size_t k = 0; k < cloud.features().size(); ++k) {
    CHECK(std::abs(back.features()[k] - cloud.features()[k]) <= 1e-6);
  }
}

TEST_CASE("ascii PLY round trip") {
  TempDir tmp;
  const PointCloud cloud = labeled_fixture(5, 60);
  write_ply(cloud, tmp.file("c.ply"), /*binary=*/false);
  const PointCloud back = read_cloud(tmp.file("c.ply"));
  REQUIRE(back.size() == cloud.size());
  for (int i = 0; i < cloud.size(); ++i) {
    CHECK(back.position(i) == cloud.position(i));  // %.17g round-trips doubles
  }
  for (size_t k = 0; k < cloud.features().size(); ++k) {
    CHECK(std::abs(back.features()[k] - cloud.features()[k]) <= 1e-6);
  }
}

TEST_CASE("uchar colors are normalized by 255 on read") {
  TempDir tmp;
  write_text(tmp.file("c.ply"),
             "ply\nformat ascii 1.0\nelement vertex 2\n"
             "property float x\nproperty float y\nproperty float z\n"
             "property uchar red\nproperty uchar green\nproperty uchar blue\n"
             "end_header\n"
             "0 0 0 255 0 128\n"
             "1 2 3 0 51 255\n");
  const PointCloud cloud = read_cloud(tmp.file("c.ply"));
  REQUIRE(cloud.size() == 2);
  REQUIRE(cloud.schema().channel_count() == 1);
  CHECK(cloud.schema().channel(0).kind == ChannelKind::color);
  CHECK(cloud.feature_row(0)[0] == 1.0);
  CHECK(cloud.feature_row(0)[2] == doctest::Approx(128.0 / 255.0));
  CHECK(cloud.feature_row(1)[1] == doctest::Approx(51.0 / 255.0).epsilon(1e-12));
}

TEST_CASE("empty-vertex PLY is a valid empty cloud") {
  TempDir tmp;
  write_text(tmp.file("e.ply"),
             "ply\nformat ascii 1.0\nelement vertex 0\n"
             "property float x\nproperty float y\nproperty float z\nend_header\n");
  const PointCloud cloud = read_cloud(tmp.file("e.ply"));
  CHECK(cloud.empty());
  CHECK(validate(cloud).empty());
}

TEST_CASE("PLY parse errors carry line numbers; unknown properties warn") {
  TempDir tmp;
  write_text(tmp.file("bad.ply"), "ply\nformat ascii 1.0\nelement vertex nonsense\n");
  try {
    read_cloud(tmp.file("bad.ply"));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }

  write_text(tmp.file("warn.ply"),
             "ply\nformat ascii 1.0\nelement vertex 1\n"
             "property float x\nproperty float y\nproperty float z\n"
             "property float nx\nend_header\n"
             "1 2 3 9\n");
  std::vector<std::string> warnings;
  const PointCloud cloud = read_cloud(tmp.file("warn.ply"), &warnings);
  CHECK(cloud.size() == 1);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("nx") != std::string::npos);

  write_text(tmp.file("trail.ply"),
             "ply\nformat ascii 1.0\nelement vertex 1\n"
             "property float x\nproperty float y\nproperty float z\nend_header\n"
             "1 2 3 junk\n");
  try {
    read_cloud(tmp.file("trail.ply"));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 8);
  }
}

TEST_CASE("PCD round trip with packed rgb and intensity") {
  TempDir tmp;
  std::vector<Eigen::Vector3d> pts = {{0.5, -1.25, 3.0}, {10.0, 20.0, 30.0}};
  FeatureSchema schema(
      {{"color", 3, ChannelKind::color}, {"intensity", 1, ChannelKind::intensity}});
  // colors on the 8-bit lattice survive the packed round trip exactly
  PointCloud cloud(pts, schema, {10 / 255.0, 128 / 255.0, 255 / 255.0, 0.25,  //
                                 0.0, 77 / 255.0, 1 / 255.0, 0.75});
  write_cloud(cloud, tmp.file("c.pcd"));
  const PointCloud back = read_cloud(tmp.file("c.pcd"));
  REQUIRE(back.size() == 2);
  REQUIRE(back.schema() == cloud.schema());
  for (int i = 0; i < 2; ++i) {
    CHECK((back.position(i) - cloud.position(i)).norm() <= 1e-6 * cloud.position(i).norm());
    for (size_t k = 0; k < 4; ++k) {
      CHECK(back.feature_row(i)[k] == doctest::Approx(cloud.feature_row(i)[k]).epsilon(1e-7));
    }
  }

  // bit-pattern packed rgb (tiny float text) also decodes
  const uint32_t packed = (255u << 16) | (128u << 8) | 64u;
  float as_float;
  std::memcpy(&as_float, &packed, 4);
  char rgb_text[40];
  std::snprintf(rgb_text, sizeof(rgb_text), "%.9g", as_float);
  write_text(tmp.file("bits.pcd"),
             std::string("VERSION 0.7\nFIELDS x y z rgb\nSIZE 4 4 4 4\nTYPE F F F F\n"
                         "COUNT 1 1 1 1\nWIDTH 1\nHEIGHT 1\nVIEWPOINT 0 0 0 1 0 0 0\n"
                         "POINTS 1\nDATA ascii\n1 2 3 ") +
                 rgb_text + "\n");
  const PointCloud bits = read_cloud(tmp.file("bits.pcd"));
  CHECK(bits.feature_row(0)[0] == doctest::Approx(1.0));
  CHECK(bits.feature_row(0)[1] == doctest::Approx(128.0 / 255.0));
  CHECK(bits.feature_row(0)[2] == doctest::Approx(64.0 / 255.0));
}

TEST_CASE("PCD rejects what it cannot represent or parse") {
  TempDir tmp;
  const PointCloud semantic = labeled_fixture(7, 3);
  CHECK_THROWS_AS(write_cloud(semantic, tmp.file("s.pcd")), std::invalid_argument);

  write_text(tmp.file("short.pcd"),
             "FIELDS x y z\nPOINTS 2\nDATA ascii\n1 2 3\n");
  CHECK_THROWS_AS(read_cloud(tmp.file("short.pcd")), ParseError);

  write_text(tmp.file("cols.pcd"),
             "FIELDS x y z\nPOINTS 1\nDATA ascii\n1 2 3 4\n");
  try {
    read_cloud(tmp.file("cols.pcd"));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
  }
}

TEST_CASE("trajectory formats: exact identity encodings") {
  TempDir tmp;
  const std::vector<TimedPose> identity = {{0.0, Isometry::Identity()}};

  write_trajectory(identity, tmp.file("t.txt"), TrajectoryFormat::tum);
  {
    std::ifstream in(tmp.file("t.txt"));
    std::string line;
    std::getline(in, line);
    CHECK(line == "0 0 0 0 0 0 0 1");
  }
  write_trajectory(identity, tmp.file("k.txt"), TrajectoryFormat::kitti);
  {
    std::ifstream in(tmp.file("k.txt"));
    std::string line;
    std::getline(in, line);
    CHECK(line == "1 0 0 0 0 1 0 0 0 0 1 0");
  }
}

TEST_CASE("trajectory round trips stay within 1e-9") {
  TempDir tmp;
  SplitMix64 rng(17);
  std::vector<TimedPose> poses;
  for (int i = 0; i < 60; ++i) {
    TimedPose tp;
    tp.timestamp = 0.1 * i;
    tp.pose = test::random_isometry(rng, 3.0, 100.0);
    poses.push_back(tp);
  }
  for (const TrajectoryFormat fmt : {TrajectoryFormat::tum, TrajectoryFormat::kitti}) {
    const std::string path = tmp.file(fmt == TrajectoryFormat::tum ? "t.txt" : "k.txt");
    write_trajectory(poses, path, fmt);
    const auto back = read_trajectory(path, fmt);
    REQUIRE(back.size() == poses.size());
    double worst = 0.0;
    for (size_t i = 0; i < poses.size(); ++i) {
      worst = std::max(worst, (back[i].pose.matrix() - poses[i].pose.matrix())
                                  .cwiseAbs()
                                  .maxCoeff());
      if (fmt == TrajectoryFormat::tum) {
        CHECK(back[i].timestamp == doctest::Approx(poses[i].timestamp).epsilon(1e-12));
      }
    }
    CHECK(worst <= 1e-9);
  }
}

TEST_CASE("trajectory parse errors carry line numbers") {
  TempDir tmp;
  write_text(tmp.file("bad.txt"), "# header comment\n0 0 0 0 0 0 1\n");  // 7 of 8 columns
  try {
    read_trajectory(tmp.file("bad.txt"), TrajectoryFormat::tum);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  write_text(tmp.file("trail.txt"), "0 0 0 0 0 0 0 1 oops\n");
  CHECK_THROWS_AS(read_trajectory(tmp.file("trail.txt"), TrajectoryFormat::tum), ParseError);
}

TEST_CASE("back projection and projection are consistent") {
  CameraIntrinsics intr;
  intr.fx = 520.0;
  intr.fy = 480.0;
  intr.cx = 320.0;
  intr.cy = 240.0;
  intr.depth_scale = 0.001;
  SplitMix64 rng(19);
  for (int t = 0; t < 100; ++t) {
    const int u = static_cast<int>(rng.next() % 640);
    const int v = static_cast<int>(rng.next() % 480);
    const double d = rng.uniform(0.5, 50.0);
    const Eigen::Vector2d uv = project(intr, back_project(intr, u, v, d));
    CHECK(std::abs(uv.x() - u) <= 1e-6);
    CHECK(std::abs(uv.y() - v) <= 1e-6);
  }
}

TEST_CASE("depth_rgb_to_cloud principal point and exclusion rules") {
  CameraIntrinsics intr;
  intr.fx = 100.0;
  intr.fy = 100.0;
  intr.cx = 8.0;
  intr.cy = 6.0;
  intr.depth_scale = 0.01;
  intr.max_depth = 10.0;
  intr.skip_top_rows = 2;

  SelectorConfig sel;
  sel.target_min = 1;
  sel.target_max = 10;

  ImageU16 depth(17, 13, 1);  // all invalid (zero)
  ImageU8 rgb(17, 13, 3);
  CHECK(depth_rgb_to_cloud(depth, rgb, nullptr, intr, sel).empty());

  depth.at(8, 6) = 250;  // 2.5 m at the principal point
  depth.at(8, 1) = 250;  // valid depth but inside the skipped top rows
  depth.at(3, 9) = 2000; // 20 m, beyond max_depth
  std::vector<std::string> warnings;
  const PointCloud cloud = depth_rgb_to_cloud(depth, rgb, nullptr, intr, sel, &warnings);
  REQUIRE(cloud.size() == 1);  // uniform image has no corners: fallback keeps valid pixels
  CHECK((cloud.position(0) - Eigen::Vector3d(0, 0, 2.5)).norm() <= 1e-12);
  CHECK(!warnings.empty());

  ImageU8 wrong(5, 5, 3);
  CHECK_THROWS_AS(depth_rgb_to_cloud(depth, wrong, nullptr, intr, sel), std::invalid_argument);
}

TEST_CASE("back-projected constant-depth image lies exactly on a plane") {
  CameraIntrinsics intr;
  intr.fx = 300.0;
  intr.fy = 300.0;
  intr.cx = 32.0;
  intr.cy = 24.0;
  intr.depth_scale = 0.001;
  intr.max_depth = 20.0;
  intr.skip_top_rows = 0;

  ImageU16 depth(64, 48, 1);
  for (auto& v : depth.data) v = 7500;  // z = 7.5 everywhere
  ImageU8 rgb(64, 48, 3);
  SplitMix64 rng(23);
  for (auto& v : rgb.data) v = static_cast<uint8_t>(rng.next() % 256);

  SelectorConfig sel;
  sel.target_min = 10;
  sel.target_max = 5000;
  const PointCloud cloud = depth_rgb_to_cloud(depth, rgb, nullptr, intr, sel);
  REQUIRE(cloud.size() > 0);
  for (int i = 0; i < cloud.size(); ++i) {
    CHECK(std::abs(cloud.position(i).z() - 7.5) <= 1e-6);
  }
}

TEST_CASE("semantic image channels are carried through") {
  CameraIntrinsics intr;
  intr.fx = 100.0;
  intr.fy = 100.0;
  intr.cx = 10.0;
  intr.cy = 10.0;
  intr.depth_scale = 0.01;
  intr.skip_top_rows = 0;

  ImageU16 depth(21, 21, 1);
  for (auto& v : depth.data) v = 100;
  ImageU8 rgb(21, 21, 3);
  ImageF sem(21, 21, 3);
  for (int y = 0; y < 21; ++y) {
    for (int x = 0; x < 21; ++x) {
      sem.at(x, y, 0) = 0.2f;
      sem.at(x, y, 1) = 0.5f;
      sem.at(x, y, 2) = 0.3f;
    }
  }
  SelectorConfig sel;
  sel.target_min = 1;
  sel.target_max = 1000;
  const PointCloud cloud = depth_rgb_to_cloud(depth, rgb, &sem, intr, sel);
  REQUIRE(cloud.size() > 0);
  REQUIRE(cloud.schema().channel_count() == 2);
  CHECK(cloud.schema().channel(1).kind == ChannelKind::semantic);
  CHECK(validate(cloud).empty());
  CHECK(cloud.feature_row(0)[4] == doctest::Approx(0.5));
}

TEST_CASE("FAST selector: uniform image has no corners at any threshold") {
  ImageU8 flat(64, 64, 3);
  for (auto& v : flat.data) v = 100;
  CHECK(detect_corners(to_gray(flat), 1.0).empty());

  std::vector<uint8_t> valid(64 * 64, 1);
  SelectorConfig sel;
  sel.target_min = 5;
  sel.target_max = 50;
  const Selection s = select_points(flat, valid, sel);
  CHECK(!s.in_band);
  CHECK(s.pixels.size() == 64 * 64);  // fallback keeps everything
  CHECK(s.note.find("fallback") != std::string::npos);
}

TEST_CASE("FAST corner count decreases monotonically in the threshold") {
  // isolated bright squares on a dark background; a strict checkerboard
  // would not do: its X-junctions split every circle into arcs of <= 8,
  // which the 9-contiguous criterion rejects by design
  ImageU8 board(96, 96, 1);
  for (int y = 0; y < 96; ++y) {
    for (int x = 0; x < 96; ++x) {
      const bool bright = (x % 16) < 8 && (y % 16) < 8;
      board.at(x, y) = bright ? 200 : 40;
    }
  }
  size_t prev = detect_corners(board, 1.0).size();
  CHECK(prev > 0);
  for (double t = 10.0; t <= 200.0; t += 20.0) {
    const size_t count = detect_corners(board, t).size();
    CHECK(count <= prev);
    prev = count;
  }
}

TEST_CASE("selector lands in the budget band on a textured image") {
  // value-noise texture: smooth random blobs with plenty of corners
  const int w = 640, h = 480;
  ImageU8 img(w, h, 3);
  SplitMix64 rng(29);
  constexpr int g = 16;
  double grid[(640 / g + 2)][(480 / g + 2)];
  for (auto& row : grid) {
    for (auto& v : row) v = rng.uniform(0, 255);
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int gx = x / g, gy = y / g;
      const double fx = (x % g) / static_cast<double>(g);
      const double fy = (y % g) / static_cast<double>(g);
      const double v = grid[gx][gy] * (1 - fx) * (1 - fy) + grid[gx + 1][gy] * fx * (1 - fy) +
                       grid[gx][gy + 1] * (1 - fx) * fy + grid[gx + 1][gy + 1] * fx * fy;
      const uint8_t q = static_cast<uint8_t>(v);
      img.at(x, y, 0) = q;
      img.at(x, y, 1) = q;
      img.at(x, y, 2) = q;
    }
  }
  std::vector<uint8_t> valid(static_cast<size_t>(w) * h, 1);
  const Selection s = select_points(img, valid, SelectorConfig{});
  CHECK(s.in_band);
  CHECK(s.pixels.size() >= 3000);
  CHECK(s.pixels.size() <= 15000);
}

TEST_CASE("selector output is deterministic and a subset of valid pixels") {
  ImageU8 img(64, 64, 1);
  SplitMix64 rng(31);
  for (auto& v : img.data) v = static_cast<uint8_t>(rng.next() % 256);
  std::vector<uint8_t> valid(64 * 64, 0);
  for (size_t i = 0; i < valid.size(); i += 3) valid[i] = 1;

  SelectorConfig sel;
  sel.target_min = 10;
  sel.target_max = 400;
  const Selection a = select_points(img, valid, sel);
  const Selection b = select_points(img, valid, sel);
  CHECK(a.pixels == b.pixels);
  CHECK(a.threshold == b.threshold);
  for (const auto& [u, v] : a.pixels) {
    CHECK(valid[static_cast<size_t>(v) * 64 + u] == 1);
  }
}

TEST_CASE("config loading: defaults, required keys, ranges, unknown keys") {
  TempDir tmp;

  SUBCASE("minimal file keeps documented defaults") {
    write_text(tmp.file("min.json"),
               R"({"kernel": {"lengthscale": 0.2}, "registration": {"init_lengthscale": 0.3}})");
    const RunProfile p = load_config(tmp.file("min.json"));
    CHECK(p.kernel.lengthscale == 0.2);
    CHECK(p.registration.init_lengthscale == 0.3);
    CHECK(p.registration.decay_factor == 0.98);
    CHECK(p.registration.min_lengthscale == doctest::Approx(0.05 * 0.3));
    CHECK(p.selector.target_min == 3000);
    CHECK(!p.camera.has_value());
  }

  SUBCASE("out-of-range value names the bound") {
    write_text(tmp.file("bad.json"), R"({"registration": {"decay_factor": 1.5}})");
    CHECK_THROWS_WITH_AS(load_config(tmp.file("bad.json")), doctest::Contains("decay_factor"),
                         std::invalid_argument);
  }

  SUBCASE("unknown keys are rejected by name") {
    write_text(tmp.file("typo.json"), R"({"registration": {"decay_factr": 0.9}})");
    CHECK_THROWS_WITH_AS(load_config(tmp.file("typo.json")), doctest::Contains("decay_factr"),
                         std::invalid_argument);
  }

  SUBCASE("camera section requires its core fields") {
    write_text(tmp.file("cam.json"), R"({"camera": {"fx": 500.0}})");
    CHECK_THROWS_WITH_AS(load_config(tmp.file("cam.json")), doctest::Contains("camera.fy"),
                         std::invalid_argument);
  }

  SUBCASE("shipped outdoor-stereo profile pins the two lengthscales") {
    const RunProfile p = load_config(std::string(KREG_PROFILE_DIR) + "/kitti-stereo.json");
    CHECK(p.registration.init_lengthscale == 0.95);
    CHECK(p.registration.subsequent_lengthscale == 0.1);
    CHECK(p.registration.decay_factor == 0.98);
    REQUIRE(p.camera.has_value());
    CHECK(p.camera->max_depth == 55.0);
    CHECK(p.camera->skip_top_rows == 100);
    CHECK(p.selector.target_min == 3000);
    CHECK(p.selector.target_max == 15000);
  }
}

TEST_CASE("make_kernel_params aligns channel settings with the schema") {
  KernelProfile profile;
  profile.color.lengthscale = 0.11;
  profile.semantic.form = KernelForm::linear;
  FeatureSchema schema({{"color", 3, ChannelKind::color}, {"sem", 5, ChannelKind::semantic}});
  const KernelParams params = make_kernel_params(profile, schema);
  REQUIRE(params.per_channel.size() == 2);
  CHECK(params.per_channel[0].lengthscale == 0.11);
  CHECK(params.per_channel[1].form == KernelForm::linear);
  CHECK_NOTHROW(check_kernel_params(params, schema));
}
