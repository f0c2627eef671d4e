// Command-line front end. Exit codes: 0 success, 1 usage error, 2 data error.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "geodepth/anchors3d.hpp"
#include "geodepth/depthbins.hpp"
#include "geodepth/depthmetrics.hpp"
#include "geodepth/epiflow.hpp"
#include "geodepth/errors.hpp"
#include "geodepth/groundprior.hpp"
#include "geodepth/io.hpp"
#include "geodepth/labelmatch.hpp"
#include "geodepth/postopt.hpp"
#include "geodepth/slic3d.hpp"
#include "geodepth/synth.hpp"
#include "geodepth/warprecon.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace geodepth;

namespace {

enum class ReportFormat { kText, kJson };

// Flat key/value report printed as text lines or one JSON object.
void emit(const json& report, ReportFormat format) {
  if (format == ReportFormat::kJson) {
    std::cout << report.dump(2) << '\n';
    return;
  }
  for (const auto& [key, value] : report.items()) {
    if (value.is_number_float()) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.6g", value.get<double>());
      std::cout << key << ": " << buf << '\n';
    } else if (value.is_string()) {
      std::cout << key << ": " << value.get<std::string>() << '\n';
    } else {
      std::cout << key << ": " << value.dump() << '\n';
    }
  }
}

// Relative pose taking frame `from` camera coordinates to frame `to`, given
// camera-to-world poses.
RigidPose relative_pose(const std::vector<RigidPose>& poses, int from, int to,
                        const std::string& path) {
  const int n = static_cast<int>(poses.size());
  if (from < 0 || to < 0 || from >= n || to >= n) {
    throw FormatError(path + ": frame index out of range (file holds " + std::to_string(n) +
                      " poses)");
  }
  return poses[to].inverse() * poses[from];
}

Image ensure_rgb(const Image& img) {
  if (img.channels() == 3) return img;
  Image out(img.width(), img.height(), 3, ColorSpace::kRgb);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(x, y, 0);
    }
  }
  return out;
}

Mask read_mask_png(const std::string& path) {
  const Image img = io::read_png(path);
  Mask m(img.width(), img.height(), 0);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) m(x, y) = img.at(x, y, 0) > 0.5f;
  }
  return m;
}

void write_mask_png(const std::string& path, const Mask& mask) {
  Image img(mask.width(), mask.height(), 1, ColorSpace::kGray);
  for (std::size_t i = 0; i < mask.size(); ++i) img.data()[i] = mask[i] ? 1.0f : 0.0f;
  io::write_png(path, img);
}

json metrics_json(const MetricReport& r) {
  return {{"abs_rel", r.abs_rel}, {"sq_rel", r.sq_rel},   {"rmse", r.rmse},
          {"rmse_log", r.rmse_log}, {"delta1", r.delta1}, {"delta2", r.delta2},
          {"delta3", r.delta3},   {"silog", r.silog},     {"valid_count", r.valid_count},
          {"scale", r.scale}};
}

// Options shared by the SLIC-based subcommands.
void add_slic_options(CLI::App* cmd, SlicParams& p) {
  cmd->add_option("--step", p.step, "Seed grid spacing (px)")->capture_default_str();
  cmd->add_option("--lambda-lab", p.lambda_lab, "Weight per LAB unit")->capture_default_str();
  cmd->add_option("--lambda-depth", p.lambda_depth, "Weight per meter")->capture_default_str();
  cmd->add_option("--lambda-pix", p.lambda_pix, "Weight per pixel")->capture_default_str();
  cmd->add_option("--iterations", p.iterations, "SLIC iterations")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"geodepth: geometric priors, depth post-optimization and evaluation"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML/INI config file; command-line flags take precedence");
  std::string report_name = "text";
  app.add_option("--report", report_name, "Report format")
      ->check(CLI::IsMember({"text", "json"}))
      ->capture_default_str();
  std::uint64_t seed = 0;
  bool seed_given = false;
  app.add_option("--seed", seed, "Seed for randomized steps")->each([&](const std::string&) {
    seed_given = true;
  });
  int jobs = 1;
  app.add_option("--jobs", jobs, "Worker threads for multi-frame commands")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  std::function<void()> run;

  // ground-prior
  auto* gp = app.add_subcommand("ground-prior", "Per-pixel ground depth and virtual disparity");
  std::string gp_cam, gp_depth, gp_disp, gp_mask;
  GroundConfig gcfg;
  gp->add_option("--cam", gp_cam, "Camera JSON (pinhole)")->required();
  gp->add_option("--elevation", gcfg.elevation, "Camera height (m)")->capture_default_str();
  gp->add_option("--ty", gcfg.ty, "Vertical translation term")->capture_default_str();
  gp->add_option("--baseline", gcfg.baseline, "Virtual baseline (m)")->capture_default_str();
  gp->add_option("--object-height", gcfg.object_height, "Nominal object height (m)")
      ->capture_default_str();
  gp->add_option("--out-depth", gp_depth, "Prior depth (.pfm or .png)")->required();
  gp->add_option("--out-disparity", gp_disp, "Virtual disparity (.pfm)");
  gp->add_option("--out-mask", gp_mask, "Validity mask (.png)");
  gp->callback([&] {
    run = [&] {
      const CameraModel cam = io::read_camera(gp_cam);
      gcfg.validate();
      const PriorMap prior = prior_map(cam, gcfg);
      DepthMap d(cam.width(), cam.height());
      for (int y = 0; y < cam.height(); ++y) {
        for (int x = 0; x < cam.width(); ++x) {
          if (prior.valid(x, y)) d.set(x, y, prior.depth(x, y));
        }
      }
      io::write_depth(gp_depth, d);
      if (!gp_disp.empty()) {
        Grid<float> disp(cam.width(), cam.height());
        for (std::size_t i = 0; i < disp.size(); ++i) disp[i] = static_cast<float>(prior.disparity[i]);
        io::write_pfm(gp_disp, io::to_float_map(disp));
      }
      if (!gp_mask.empty()) write_mask_png(gp_mask, prior.valid);
      std::size_t valid = 0;
      for (auto v : prior.valid.data()) valid += v;
      emit({{"valid_pixels", valid}, {"vertical_offset_bottom_row",
                                      vertical_offset(gcfg, cam, cam.height() - 1)}},
           report_name == "json" ? ReportFormat::kJson : ReportFormat::kText);
    };
  });

  // decode-bins
  auto* db = app.add_subcommand("decode-bins", "Decode per-pixel bin logits to depth");
  std::string db_in, db_out;
  BinSpec bspec;
  double db_fx = 0.0;
  db->add_option("--bins", db_in, "BINS logit volume")->required();
  db->add_option("--fx", db_fx, "Focal length of the camera (px)")->required();
  db->add_option("--d-min", bspec.d_min, "Nearest bin (m)")->capture_default_str();
  db->add_option("--d-max", bspec.d_max, "Farthest bin (m)")->capture_default_str();
  db->add_option("--f-base", bspec.f_base, "Reference focal length (px)")->capture_default_str();
  db->add_option("--out", db_out, "Depth output (.pfm or .png)")->required();
  db->callback([&] {
    run = [&] {
      const io::BinVolume vol = io::read_bins(db_in);
      bspec.count = vol.bins;
      bspec.validate();
      if (!(db_fx > 0.0)) throw InvalidArgument("--fx must be positive");
      const std::vector<double> centers = bin_centers(bspec, db_fx);
      DepthMap d(vol.width, vol.height);
      for (int y = 0; y < vol.height; ++y) {
        for (int x = 0; x < vol.width; ++x) {
          d.set(x, y, decode_bins(centers, {vol.pixel(x, y), static_cast<std::size_t>(vol.bins)}));
        }
      }
      io::write_depth(db_out, d);
      emit({{"bins", vol.bins}, {"initial_mean", initial_mean(bspec)}},
           report_name == "json" ? ReportFormat::kJson : ReportFormat::kText);
    };
  });

  // flow-mask
  auto* fm = app.add_subcommand("flow-mask", "Flag flow vectors that violate the epipolar constraint");
  std::string fm_flow, fm_cam, fm_cam1, fm_poses, fm_out, fm_overlay, fm_overlay_out;
  int fm_from = 0, fm_to = 1;
  DynamicMaskOptions fm_opts;
  bool fm_verbatim = false;
  fm->add_option("--flow", fm_flow, "Flow from frame --from to --to (.flo)")->required();
  fm->add_option("--cam", fm_cam, "Camera JSON (pinhole)")->required();
  fm->add_option("--cam1", fm_cam1, "Second camera if different");
  fm->add_option("--poses", fm_poses, "Camera-to-world pose file")->required();
  fm->add_option("--from", fm_from, "Base frame index")->capture_default_str();
  fm->add_option("--to", fm_to, "Other frame index")->capture_default_str();
  fm->add_option("--threshold", fm_opts.threshold, "Distance threshold (px)")->capture_default_str();
  fm->add_option("--epipole-exclusion", fm_opts.epipole_exclusion, "Undefined radius around the epipole (px)")
      ->capture_default_str();
  fm->add_flag("--verbatim-f", fm_verbatim, "Use the K^T [t]x R K form of F");
  fm->add_option("--out", fm_out, "Dynamic mask (.png)")->required();
  fm->add_option("--overlay", fm_overlay, "RGB image to overlay the mask on");
  fm->add_option("--overlay-out", fm_overlay_out, "Overlay output (.png)");
  fm->callback([&] {
    run = [&] {
      const FlowField flow = io::read_flo(fm_flow);
      const CameraModel cam0 = io::read_camera(fm_cam);
      const CameraModel cam1 = fm_cam1.empty() ? cam0 : io::read_camera(fm_cam1);
      const auto poses = io::read_poses(fm_poses);
      const Eigen::Matrix3d F =
          fundamental(cam0, cam1, relative_pose(poses, fm_from, fm_to, fm_poses),
                      fm_verbatim ? FundamentalForm::kVerbatim : FundamentalForm::kStandard);
      const DynamicMask m = dynamic_mask(F, flow, fm_opts);
      write_mask_png(fm_out, m.dynamic);
      if (!fm_overlay.empty() && !fm_overlay_out.empty()) {
        io::write_png(fm_overlay_out,
                      io::overlay_mask(ensure_rgb(io::read_png(fm_overlay)), m.dynamic, {1.0f, 0.1f, 0.1f}));
      }
      std::size_t invalid = 0, undefined = 0;
      for (auto v : m.invalid_flow.data()) invalid += v;
      for (auto v : m.undefined.data()) undefined += v;
      emit({{"dynamic_pixels", m.dynamic_count},
            {"dynamic_fraction", double(m.dynamic_count) / double(flow.dx.size())},
            {"invalid_flow_pixels", invalid},
            {"undefined_pixels", undefined}},
           report_name == "json" ? ReportFormat::kJson : ReportFormat::kText);
    };
  });

  // warp
  auto* wp = app.add_subcommand("warp", "Reconstruct the target view from a source image");
  std::string wp_src, wp_depth, wp_cam, wp_poses, wp_out, wp_mask, wp_target_img;
  int wp_target = 0, wp_source = 1;
  wp->add_option("--source", wp_src, "Source image (.png)")->required();
  wp->add_option("--depth", wp_depth, "Target-frame depth")->required();
  wp->add_option("--cam", wp_cam, "Camera JSON")->required();
  wp->add_option("--poses", wp_poses, "Camera-to-world pose file")->required();
  wp->add_option("--target-frame", wp_target, "Target frame index")->capture_default_str();
  wp->add_option("--source-frame", wp_source, "Source frame index")->capture_default_str();
  wp->add_option("--out", wp_out, "Warped image (.png)")->required();
  wp->add_option("--mask-out", wp_mask, "Validity mask (.png)");
  wp->add_option("--target", wp_target_img, "Target image; reports the photometric loss")
      ;
  wp->callback([&] {
    run = [&] {
      const Image src = io::read_png(wp_src);
      const DepthMap depth = io::read_depth(wp_depth);
      const CameraModel cam = io::read_camera(wp_cam);
      const auto poses = io::read_poses(wp_poses);
      const WarpResult w = warp(src, depth, cam, cam, relative_pose(poses, wp_target, wp_source, wp_poses));
      io::write_png(wp_out, w.image);
      if (!wp_mask.empty()) write_mask_png(wp_mask, w.valid);
      std::size_t valid = 0;
      for (auto v : w.valid.data()) valid += v;
      json report = {{"valid_pixels", valid}};
      if (!wp_target_img.empty()) {
        const PhotometricLoss loss = photometric_loss(io::read_png(wp_target_img), w.image, {}, &w.valid);
        report["photometric_loss"] = loss.mean;
      }
      emit(report, report_name == "json" ? ReportFormat::kJson : ReportFormat::kText);
    };
  });

  // photoloss
  auto* pl = app.add_subcommand("photoloss", "SSIM + L1 photometric loss between two images");
  std::string pl_a, pl_b, pl_mask, pl_out;
  PhotometricOptions pl_opts;
  pl->add_option("--a", pl_a, "First image (.png)")->required();
  pl->add_option("--b", pl_b, "Second image (.png)")->required();
  pl->add_option("--alpha", pl_opts.alpha, "SSIM weight")->capture_default_str();
  pl->add_option("--beta", pl_opts.beta, "L1 weight")->capture_default_str();
  pl->add_option("--mask", pl_mask, "Evaluation mask (.png)");
  pl->add_option("--out", pl_out, "Per-pixel loss (.pfm)");
  pl->callback([&] {
    run = [&] {
      const Image a = io::read_png(pl_a);
      const Image b = io::read_png(pl_b);
      std::optional<Mask> mask;
      if (!pl_mask.empty()) mask = read_mask_png(pl_mask);
      const PhotometricLoss loss = photometric_loss(a, b, pl_opts, mask ? &*mask : nullptr);
      if (!pl_out.empty()) {
        Grid<float> g(loss.per_pixel.width(), loss.per_pixel.height());
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = static_cast<float>(loss.per_pixel[i]);
        io::write_pfm(pl_out, io::to_float_map(g));
      }
      emit({{"mean", loss.mean}, {"pixels", loss.count}},
           report_name == "json" ? ReportFormat::kJson : ReportFormat::kText);
    };
  });

  // slic
  auto* sl = app.add_subcommand("slic", "Depth-augmented SLIC superpixels");
  std::string sl_img, sl_depth, sl_out, sl_overlay;
  SlicParams sl_params;
  sl->add_option("--image", sl_img, "RGB image (.png)")->required();
  sl->add_option("--depth", sl_depth, "Depth map")->required();
  add_slic_options(sl, sl_params);
  sl->add_option("--out", sl_out, "Segmentation (.seg, SEG1)")->required();
  sl->add_option("--overlay", sl_overlay, "Boundary overlay (.png)");
  sl->callback([&] {
    run = [&] {
      const Image rgb = ensure_rgb(io::read_png(sl_img));
      const DepthMap depth = io::read_depth(sl_depth);
      sl_params.validate();
      const Segmentation seg = slic3d(rgb_to_lab(rgb), depth, sl_params);
      io::write_seg(sl_out, seg.labels);
      if (!sl_overlay.empty()) {
        io::write_png(sl_overlay, io::overlay_mask(rgb, segment_boundaries(seg.labels), {1.0f, 1.0f, 0.0f}));
      }
      emit({{"segments", seg.cluster_count()},
            {"objective", seg.objective_trace.empty() ? 0.0 : seg.objective_trace.back()}},
           report_name == "json" ? ReportFormat::kJson : ReportFormat::kText);
    };
  });

  // post-opt
  auto* po = app.add_subcommand("post-opt", "Fuse dense depth with sparse VO depth");
  std::string po_depth, po_img, po_vo, po_cam, po_out, po_seg;
  PostOptOptions po_opts;
  bool po_compat = false;
  po->add_option("--depth", po_depth, "Predicted depth")->required();
  po->add_option("--image", po_img, "RGB image (.png)")->required();
  po->add_option("--vo", po_vo, "VO samples (CSV u,v,depth)")->required();
  po->add_option("--cam", po_cam, "Camera JSON; checked against the image size");
  po->add_option("--lambda0", po_opts.weights.consistency, "Pairwise consistency weight")->capture_default_str();
  po->add_option("--lambda1", po_opts.weights.vo, "VO weight")->capture_default_str();
  po->add_option("--lambda2", po_opts.weights.prior, "Prior weight")->capture_default_str();
  po->add_flag("--compat-scale", po_compat, "Apply the ratio-of-log-depths update");
  add_slic_options(po, po_opts.slic);
  po->add_option("--out", po_out, "Optimized depth")->required();
  po->add_option("--seg-out", po_seg, "Segmentation used (.seg)");
  po->callback([&] {
    run = [&] {
      const DepthMap depth = io::read_depth(po_depth);
      const Image rgb = ensure_rgb(io::read_png(po_img));
      const SparseDepth vo = io::read_vo_csv(po_vo);
      if (!po_cam.empty()) {
        const CameraModel cam = io::read_camera(po_cam);
        if (cam.width() != depth.width() || cam.height() != depth.height()) {
          throw FormatError(po_cam + ": camera size does not match " + po_depth);
        }
      }
      po_opts.slic.validate();
      po_opts.mode = po_compat ? ScaleApplication::kMultiplicative : ScaleApplication::kAdditive;
      const PostOptResult r = post_optimize(depth, rgb, vo, po_opts);
      io::write_depth(po_out, r.depth);
      if (!po_seg.empty()) io::write_seg(po_seg, r.segmentation.labels);
      int with_vo = 0, flagged = 0;
      for (auto v : r.has_vo) with_vo += v;
      for (auto v : r.flagged) flagged += v;
      emit({{"segments", r.segmentation.cluster_count()},
            {"segments_with_vo", with_vo},
            {"segments_flagged", flagged},
            {"vo_used", r.vo_used},
            {"vo_dropped", r.vo_dropped},
            {"kkt_residual", r.kkt_residual}},
           report_name == "json" ? ReportFormat::kJson : ReportFormat::kText);
    };
  });

  // eval
  auto* ev = app.add_subcommand("eval", "Depth metrics against ground truth");
  std::vector<std::string> ev_pred, ev_gt;
  EvalOptions ev_opts;
  bool ev_median = false;
  ev->add_option("--pred", ev_pred, "Predicted depth file(s)")->required();
  ev->add_option("--gt", ev_gt, "Ground-truth depth file(s), paired in order")->required();
  ev->add_flag("--median", ev_median, "Median-scale predictions to the ground truth");
  ev->add_option("--cap", ev_opts.max_depth, "Maximum ground-truth depth (m)")->capture_default_str();
  ev->add_option("--min-depth", ev_opts.min_depth, "Minimum ground-truth depth (m)")->capture_default_str();
  ev->callback([&] {
    run = [&] {
      if (ev_pred.size() != ev_gt.size()) {
        throw CLI::ValidationError("--pred and --gt must list the same number of files");
      }
      ev_opts.scale = ev_median ? ScaleMode::kMedian : ScaleMode::kNone;
      const std::size_t n = ev_pred.size();
      std::vector<MetricReport> reports(n);
      std::vector<std::string> errors(n);
      std::atomic<std::size_t> next{0};
      auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            reports[i] = evaluate(io::read_depth(ev_pred[i]), io::read_depth(ev_gt[i]), ev_opts);
          } catch (const Error& e) {
            errors[i] = e.what();
          }
        }
      };
      std::vector<std::thread> pool;
      for (int t = 1; t < std::min<int>(jobs, static_cast<int>(n)); ++t) pool.emplace_back(worker);
      worker();
      for (auto& t : pool) t.join();
      for (const std::string& e : errors) {
        if (!e.empty()) throw FormatError(e);
      }
      if (n == 1) {
        emit(metrics_json(reports[0]), report_name == "json" ? ReportFormat::kJson : ReportFormat::kText);
        return;
      }
      if (report_name == "json") {
        json arr = json::array();
        for (std::size_t i = 0; i < n; ++i) {
          json r = metrics_json(reports[i]);
          r["pred"] = ev_pred[i];
          arr.push_back(r);
        }
        std::cout << arr.dump(2) << '\n';
      } else {
        for (std::size_t i = 0; i < n; ++i) {
          std::cout << "# " << ev_pred[i] << '\n';
          emit(metrics_json(reports[i]), ReportFormat::kText);
        }
      }
    };
  });

  // anchor-stats
  auto* as = app.add_subcommand("anchor-stats", "Depth and angle priors per anchor template");
  std::string as_anchors, as_out, as_dims;
  std::vector<std::string> as_labels;
  double as_iou = 0.5;
  as->add_option("--anchors", as_anchors, "Anchor templates (JSON)")->required();
  as->add_option("--labels", as_labels, "KITTI label .txt or detection .jsonl files")->required();
  as->add_option("--iou", as_iou, "IoU threshold")->capture_default_str();
  as->add_option("--out", as_out, "Anchors with priors (JSON)")->required();
  as->add_option("--dims-out", as_dims, "Mean dimensions per category (JSON)");
  as->callback([&] {
    run = [&] {
      const auto anchors = io::read_anchors(as_anchors);
      std::vector<DetectionBox> labels;
      for (const std::string& f : as_labels) {
        const auto part = f.size() > 6 && f.substr(f.size() - 6) == ".jsonl" ? io::read_detections_jsonl(f)
                                                                             : io::read_kitti_labels(f);
        labels.insert(labels.end(), part.begin(), part.end());
      }
      const auto filled = collect_anchor_stats(anchors, labels, as_iou);
      io::write_anchors(as_out, filled);
      if (!as_dims.empty()) {
        json d = json::object();
        for (const auto& [cat, p] : dimension_priors(labels)) {
          d[io::category_name(cat)] = {{"w", p.mean.x()}, {"h", p.mean.y()}, {"l", p.mean.z()}, {"count", p.count}};
        }
        std::ofstream(as_dims) << d.dump(2) << '\n';
      }
      int flagged = 0;
      for (const auto& a : filled) flagged += a.prior.flagged;
      emit({{"anchors", filled.size()}, {"labels", labels.size()}, {"flagged", flagged}},
           report_name == "json" ? ReportFormat::kJson : ReportFormat::kText);
    };
  });

  // anchor-filter
  auto* af = app.add_subcommand("anchor-filter", "Drop anchors whose prior depth is off the ground");
  std::string af_anchors, af_cam, af_out;
  GroundFilterOptions af_opts;
  af->add_option("--anchors", af_anchors, "Anchors with priors (JSON)")->required();
  af->add_option("--cam", af_cam, "Camera JSON (pinhole)")->required();
  af->add_option("--elevation", af_opts.elevation, "Camera height (m)")->capture_default_str();
  af->add_option("--tolerance", af_opts.tolerance, "Allowed height error (m)")->capture_default_str();
  af->add_option("--category-tolerance", af_opts.category_tolerance, "Per-category tolerance, id=value");
  af->add_option("--out", af_out, "Kept anchors (JSON)")->required();
  af->callback([&] {
    run = [&] {
      const auto anchors = io::read_anchors(af_anchors);
      const GroundFilterResult r = filter_ground(anchors, io::read_camera(af_cam), af_opts);
      std::vector<AnchorTemplate> kept;
      for (int i : r.kept) kept.push_back(anchors[i]);
      io::write_anchors(af_out, kept);
      emit({{"kept", r.kept.size()}, {"dropped", r.dropped.size()}},
           report_name == "json" ? ReportFormat::kJson : ReportFormat::kText);
    };
  });

  // hillclimb
  auto* hc = app.add_subcommand("hillclimb", "Refine 3D boxes so their projection fits the 2D box");
  std::string hc_dets, hc_cam, hc_out, hc_mode = "alpha";
  HillClimbOptions hc_opts;
  hc->add_option("--detections", hc_dets, "Detections (.jsonl); box2d is the target")->required();
  hc->add_option("--cam", hc_cam, "Camera JSON (pinhole)")->required();
  hc->add_option("--mode", hc_mode, "Search space")->check(CLI::IsMember({"alpha", "alpha-depth"}))->capture_default_str();
  hc->add_option("--min-step", hc_opts.min_step, "Terminal angle step (rad)")->capture_default_str();
  hc->add_option("--out", hc_out, "Refined detections (.jsonl)")->required();
  hc->callback([&] {
    run = [&] {
      const CameraModel cam = io::read_camera(hc_cam);
      hc_opts.mode = hc_mode == "alpha" ? HillClimbMode::kAlphaOnly : HillClimbMode::kAlphaAndDepth;
      std::vector<DetectionBox> out;
      double gain = 0.0;
      for (const DetectionBox& d : io::read_detections_jsonl(hc_dets)) {
        const HillClimbResult r = hillclimb_refine(cam, d, d.box2d, hc_opts);
        DetectionBox b = r.box;
        b.box2d = d.box2d;
        out.push_back(b);
        gain += r.iou - r.initial_iou;
      }
      io::write_detections_jsonl(hc_out, out);
      emit({{"boxes", out.size()}, {"mean_iou_gain", out.empty() ? 0.0 : gain / out.size()}},
           report_name == "json" ? ReportFormat::kJson : ReportFormat::kText);
    };
  });

  // label-match
  auto* lm = app.add_subcommand("label-match", "Pseudo 3D labels from 2D annotations");
  std::string lm_pred, lm_annot, lm_cam, lm_out, lm_heatmap;
  PseudoLabelOptions lm_opts;
  std::vector<int> lm_annotated, lm_all;
  lm->add_option("--predictions", lm_pred, "Predictions (.jsonl)")->required();
  lm->add_option("--annotations", lm_annot, "2D annotations (.jsonl)")->required();
  lm->add_option("--cam", lm_cam, "Camera JSON (pinhole)")->required();
  lm->add_option("--eps", lm_opts.eps, "Maximum matching cost 1 - IoU")->capture_default_str();
  lm->add_option("--stride", lm_opts.stride, "Heatmap stride")->capture_default_str();
  lm->add_option("--score-threshold", lm_opts.score_threshold, "Minimum prediction score")->capture_default_str();
  lm->add_option("--annotated", lm_annotated, "Category ids the dataset annotates");
  lm->add_option("--categories", lm_all, "All category ids of the detector");
  lm->add_option("--out", lm_out, "Pseudo labels (.jsonl)")->required();
  lm->add_option("--heatmap", lm_heatmap, "Heatmap (.pfm)");
  lm->callback([&] {
    run = [&] {
      const auto preds = io::read_detections_jsonl(lm_pred);
      const auto annots = io::read_annotations_jsonl(lm_annot);
      const PseudoLabelSet s = build_pseudo_labels(preds, annots, io::read_camera(lm_cam), lm_opts);
      io::write_detections_jsonl(lm_out, s.labels);
      if (!lm_heatmap.empty()) io::write_pfm(lm_heatmap, io::to_float_map(s.heatmap));
      json report = {{"matched", s.matched},
                     {"kept", s.labels.size()},
                     {"removed", s.removed},
                     {"skipped_outside", s.skipped_outside}};
      if (!lm_annotated.empty() || !lm_all.empty()) {
        const SelectiveMask m = selective_mask(CategoryMask({lm_annotated.begin(), lm_annotated.end()}), lm_all);
        json flags = json::object();
        for (std::size_t i = 0; i < m.categories.size(); ++i) {
          flags[io::category_name(m.categories[i])] = static_cast<bool>(m.supervised[i]);
        }
        report["supervised"] = flags;
        if (!m.warning.empty()) report["warning"] = m.warning;
      }
      emit(report, report_name == "json" ? ReportFormat::kJson : ReportFormat::kText);
    };
  });

  // synth
  auto* sy = app.add_subcommand("synth", "Render a synthetic scene");
  std::string sy_spec, sy_dir;
  double sy_max_depth = 250.0;
  sy->add_option("--spec", sy_spec, "Scene JSON")->required();
  sy->add_option("--out-dir", sy_dir, "Output directory")->required();
  sy->add_option("--max-depth", sy_max_depth, "Depths beyond this are written as invalid (m)")
      ->check(CLI::Range(0.01, 255.0))
      ->capture_default_str();
  sy->callback([&] {
    run = [&] {
      SceneSpec spec = io::read_scene(sy_spec);
      if (seed_given) {
        spec.texture_seed = seed;
        spec.vo.seed = seed + 1;
      }
      SynthScene scene = synth_scene(spec);
      fs::create_directories(sy_dir);
      const auto path = [&](const std::string& name) { return (fs::path(sy_dir) / name).string(); };
      io::write_camera(path("camera.json"), spec.camera);
      io::write_poses(path("poses.txt"), spec.poses);
      for (std::size_t i = 0; i < scene.frames.size(); ++i) {
        // Quantize to the PNG grid so every emitted copy of the depth agrees
        // and VO drawn from it is exact against the PNG.
        DepthMap& d = scene.frames[i].depth;
        for (int y = 0; y < d.height(); ++y) {
          for (int x = 0; x < d.width(); ++x) {
            if (!d.valid(x, y)) continue;
            if (d.depth(x, y) > sy_max_depth) {
              d.invalidate(x, y);
            } else {
              d.set(x, y, std::max(1.0, std::round(d.depth(x, y) * 256.0)) / 256.0);
            }
          }
        }
        VoSpec vo = spec.vo;
        vo.seed = spec.vo.seed + i;
        const std::string tag = std::to_string(i);
        io::write_depth_png(path("depth_" + tag + ".png"), d);
        io::write_depth_pfm(path("depth_" + tag + ".pfm"), d);
        io::write_png(path("rgb_" + tag + ".png"), scene.frames[i].rgb);
        io::write_png(path("depth_viz_" + tag + ".png"), io::colorize_depth(d, 80.0));
        io::write_vo_csv(path("vo_" + tag + ".csv"), sample_vo(d, vo));
      }
      for (std::size_t i = 0; i < scene.flows.size(); ++i) {
        io::write_flo(path("flow_" + std::to_string(i) + std::to_string(i + 1) + ".flo"), scene.flows[i]);
      }
      emit({{"frames", scene.frames.size()}, {"flows", scene.flows.size()}, {"out_dir", sy_dir}},
           report_name == "json" ? ReportFormat::kJson : ReportFormat::kText);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  try {
    run();
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
