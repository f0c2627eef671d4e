#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include <Eigen/Geometry>
#include <gtest/gtest.h>

#include "geodepth/errors.hpp"
#include "geodepth/io.hpp"

using namespace geodepth;
namespace fs = std::filesystem;

namespace {

class IoTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("geodepth_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  void write_text(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(IoTest, DepthPngRoundTrip) {
  DepthMap d(5, 3);
  d.set(0, 0, 1.0);
  d.set(1, 0, 12.34375);
  d.set(4, 2, 255.5);
  io::write_depth_png(path("d.png"), d);
  const DepthMap r = io::read_depth_png(path("d.png"));
  EXPECT_EQ(r.values(), d.values());
  EXPECT_EQ(r.validity(), d.validity());
  DepthMap far(1, 1);
  far.set(0, 0, 300);
  EXPECT_THROW(io::write_depth_png(path("f.png"), far), Error);
}

TEST_F(IoTest, DepthPfmRoundTripIsLosslessForFloats) {
  DepthMap d(4, 2);
  d.set(0, 0, 1.5);
  d.set(3, 1, 80.25);
  io::write_depth(path("d.pfm"), d);
  const DepthMap r = io::read_depth(path("d.pfm"));
  EXPECT_EQ(r.values(), d.values());
  EXPECT_EQ(r.validity(), d.validity());
}

TEST_F(IoTest, RgbPngRoundTrip) {
  Image img(4, 2, 3, ColorSpace::kRgb);
  for (std::size_t i = 0; i < img.data().size(); ++i) img.data()[i] = (i * 17 % 256) / 255.0f;
  io::write_png(path("a.png"), img);
  const Image r = io::read_png(path("a.png"));
  ASSERT_TRUE(r.same_shape(img));
  for (std::size_t i = 0; i < img.data().size(); ++i) EXPECT_FLOAT_EQ(r.data()[i], img.data()[i]);
}

TEST_F(IoTest, FlowRoundTrip) {
  FlowField f(3, 2);
  f.dx(0, 0) = 1.25f;
  f.dy(2, 1) = -7.5f;
  f.valid(0, 0) = 1;
  f.valid(2, 1) = 1;
  io::write_flo(path("f.flo"), f);
  const FlowField r = io::read_flo(path("f.flo"));
  EXPECT_EQ(r.dx, f.dx);
  EXPECT_EQ(r.dy, f.dy);
  EXPECT_EQ(r.valid, f.valid);
}

TEST_F(IoTest, SegRoundTripAndLayout) {
  Grid<std::int32_t> labels(3, 2);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 4);
  io::write_seg(path("s.seg"), labels);
  EXPECT_EQ(fs::file_size(path("s.seg")), 4u + 8u + 6u * 4u);
  EXPECT_EQ(io::read_seg(path("s.seg")), labels);
}

TEST_F(IoTest, BinsRoundTrip) {
  io::BinVolume v;
  v.width = 2;
  v.height = 1;
  v.bins = 3;
  v.logits = {0.f, 1.f, 2.f, 3.f, 4.f, 5.f};
  io::write_bins(path("b.bins"), v);
  const io::BinVolume r = io::read_bins(path("b.bins"));
  EXPECT_EQ(r.logits, v.logits);
  EXPECT_EQ(r.pixel(1, 0)[0], 3.f);
}

TEST_F(IoTest, VoCsvRoundTrip) {
  const SparseDepth s = {{1, 2, 3.141592653589793}, {10.5, 0, 1e-3}};
  io::write_vo_csv(path("vo.csv"), s);
  const SparseDepth r = io::read_vo_csv(path("vo.csv"));
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].depth, s[0].depth);
  EXPECT_EQ(r[1].u, 10.5);
  write_text("h.csv", "# comment\nu,v,depth\n1,2,3\n");
  EXPECT_EQ(io::read_vo_csv(path("h.csv")).size(), 1u);
  write_text("bad.csv", "1,2\n");
  EXPECT_THROW(io::read_vo_csv(path("bad.csv")), FormatError);
}

TEST_F(IoTest, PosesRoundTripBitExact) {
  const std::vector<RigidPose> p = {
      RigidPose::identity(),
      {Eigen::AngleAxisd(0.3, Eigen::Vector3d(1, 2, 3).normalized()).toRotationMatrix(), {0.1, -2, 7}}};
  io::write_poses(path("p.txt"), p);
  const auto r = io::read_poses(path("p.txt"));
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[1].rotation(), p[1].rotation());
  EXPECT_EQ(r[1].translation(), p[1].translation());
}

TEST_F(IoTest, CameraRoundTrip) {
  const CameraModel m = CameraModel::mei({400, 401, 320, 240, 0.9, -0.1, 0.02}, 640, 480);
  io::write_camera(path("c.json"), m);
  const CameraModel r = io::read_camera(path("c.json"));
  EXPECT_EQ(r.kind(), CameraKind::kMei);
  EXPECT_EQ(std::get<MeiParams>(r.params()).gamma_y, 401);
  write_text("bad.json", R"({"model": "orthographic", "width": 1, "height": 1})");
  EXPECT_THROW(io::read_camera(path("bad.json")), FormatError);
}

TEST_F(IoTest, KittiLabels) {
  write_text("l.txt",
             "Car 0.00 0 -1.58 587.01 173.33 614.12 200.12 1.65 1.67 3.64 -0.65 1.71 46.70 -1.59\n"
             "DontCare -1 -1 -10 503.89 169.71 590.61 190.13 -1 -1 -1 -1000 -1000 -1000 -10\n");
  const auto l = io::read_kitti_labels(path("l.txt"));
  ASSERT_EQ(l.size(), 1u);
  EXPECT_EQ(l[0].category, 0);
  EXPECT_DOUBLE_EQ(l[0].center.y(), 1.71 - 1.65 / 2);
  EXPECT_DOUBLE_EQ(l[0].dims.z(), 3.64);
}

TEST_F(IoTest, DetectionsRoundTrip) {
  DetectionBox b;
  b.box2d = {1, 2, 30, 40};
  b.center = {1, 1.5, 20};
  b.yaw = 0.3;
  b.alpha = 0.25;
  b.score = 0.9;
  b.category = 2;
  io::write_detections_jsonl(path("d.jsonl"), {b});
  const auto r = io::read_detections_jsonl(path("d.jsonl"));
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].center, b.center);
  EXPECT_EQ(r[0].category, 2);
  write_text("n.jsonl", R"({"box2d": [0, 0, 1, 1], "category": "Tram"})" "\n");
  EXPECT_EQ(io::read_annotations_jsonl(path("n.jsonl"))[0].category, 6);
}

TEST_F(IoTest, MissingFileNamesPath) {
  try {
    io::read_flo(path("none.flo"));
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("none.flo"), std::string::npos);
  }
  write_text("junk.flo", "not a flow file");
  EXPECT_THROW(io::read_flo(path("junk.flo")), FormatError);
  EXPECT_THROW(io::read_seg(path("junk.flo")), FormatError);
  EXPECT_THROW(io::read_depth_png(path("junk.flo")), FormatError);
}
