#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "geodepth/anchors3d.hpp"
#include "geodepth/camgeo.hpp"
#include "geodepth/flow.hpp"
#include "geodepth/image.hpp"
#include "geodepth/labelmatch.hpp"
#include "geodepth/postopt.hpp"
#include "geodepth/synth.hpp"

// File codecs. Every reader throws FormatError naming the file and the
// expected format; writers throw FormatError when the file cannot be made.
namespace geodepth::io {

// 8/16-bit gray or RGB(A) PNG into [0, 1] floats; alpha is dropped.
Image read_png(const std::string& path);
// 8-bit PNG of a gray or RGB image (values clamped to [0, 1]).
void write_png(const std::string& path, const Image& image);

// KITTI depth PNG: 16-bit gray, depth = value / 256, 0 marks invalid.
DepthMap read_depth_png(const std::string& path);
void write_depth_png(const std::string& path, const DepthMap& depth);

// Portable float map ("Pf" gray, "PF" color), rows stored bottom-up.
struct FloatMap {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<float> data;  // top-down, interleaved
};
FloatMap read_pfm(const std::string& path);
void write_pfm(const std::string& path, const FloatMap& map);
// Depth as single-channel PFM; non-positive or non-finite values are invalid.
DepthMap read_depth_pfm(const std::string& path);
void write_depth_pfm(const std::string& path, const DepthMap& depth);
// Dispatches on the .png / .pfm extension.
DepthMap read_depth(const std::string& path);
void write_depth(const std::string& path, const DepthMap& depth);
FloatMap to_float_map(const Grid<float>& grid);

// Middlebury .flo; components above 1e9 in magnitude mark invalid flow.
FlowField read_flo(const std::string& path);
void write_flo(const std::string& path, const FlowField& flow);

// SEG1: "SEG1", u32 width, u32 height, then u32 ids row-major,
// little-endian.
Grid<std::int32_t> read_seg(const std::string& path);
void write_seg(const std::string& path, const Grid<std::int32_t>& labels);

// BINS: "BINS", u32 width, u32 height, u32 bins, then float32 logits with
// the bin index fastest.
struct BinVolume {
  int width = 0;
  int height = 0;
  int bins = 0;
  std::vector<float> logits;
  const float* pixel(int x, int y) const {
    return logits.data() + (static_cast<std::size_t>(y) * width + x) * bins;
  }
};
BinVolume read_bins(const std::string& path);
void write_bins(const std::string& path, const BinVolume& volume);

// "u,v,depth" lines; an optional header and '#' comments are skipped.
SparseDepth read_vo_csv(const std::string& path);
void write_vo_csv(const std::string& path, const SparseDepth& samples);

// One pose per line, 12 floats of the row-major 3x4 [R|t].
std::vector<RigidPose> read_poses(const std::string& path);
void write_poses(const std::string& path, const std::vector<RigidPose>& poses);

// {"model": "pinhole"|"mei"|"fisheye_poly", "width", "height", ...}
CameraModel read_camera(const std::string& path);
void write_camera(const std::string& path, const CameraModel& cam);

// KITTI category names <-> ids (Car 0, Pedestrian 1, Cyclist 2, Van 3,
// Truck 4, Person_sitting 5, Tram 6, Misc 7). Unknown names return -1.
int category_id(const std::string& name);
std::string category_name(int id);

// KITTI object label text; DontCare rows are skipped. The file's y is the
// bottom of the box and is converted to the box center.
std::vector<DetectionBox> read_kitti_labels(const std::string& path);

// JSON lines: {"box2d": [x1,y1,x2,y2], "center": [x,y,z], "dims": [w,h,l],
// "yaw", "alpha", "score", "category"}. Category may be an id or a name.
std::vector<DetectionBox> read_detections_jsonl(const std::string& path);
void write_detections_jsonl(const std::string& path,
                            const std::vector<DetectionBox>& boxes);
// JSON lines: {"box2d": [...], "category"}.
std::vector<Annotation2D> read_annotations_jsonl(const std::string& path);

// JSON array of {"box2d", "category", "prior": {...}}.
std::vector<AnchorTemplate> read_anchors(const std::string& path);
void write_anchors(const std::string& path,
                   const std::vector<AnchorTemplate>& anchors);

SceneSpec read_scene(const std::string& path);

// Side-output visualizations.
Image colorize_depth(const DepthMap& depth, double max_depth);
Image overlay_mask(const Image& rgb, const Mask& mask,
                   const Eigen::Vector3f& color);

}  // namespace geodepth::io
