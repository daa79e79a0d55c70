#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "artsplat/eval/ablate.hpp"
#include "artsplat/eval/metrics.hpp"
#include "artsplat/eval/pose_error.hpp"
#include "artsplat/eval/synthetic.hpp"
#include "artsplat/io/config.hpp"
#include "artsplat/io/frames_io.hpp"
#include "artsplat/io/model_io.hpp"
#include "artsplat/io/trajectory_io.hpp"
#include "artsplat/mesh/mesh.hpp"
#include "artsplat/pretrain/pretrain.hpp"
#include "artsplat/rtl/rtl.hpp"
#include "artsplat/sapet/track.hpp"
#include "artsplat/tip/dataset.hpp"

namespace {

using namespace artsplat;

constexpr const char* kLibraryVersion = "1.1.0";

struct CommonOpts {
  std::string config_path;
  int64_t seed = -1;  // -1 keeps the config value
  int threads = 0;    // 0 keeps the config value
};

void add_common(CLI::App* sub, CommonOpts& c) {
  sub->add_option("--config", c.config_path, "pipeline config JSON");
  sub->add_option("--seed", c.seed,
                  "master seed; overrides the config seed (and the synthetic "
                  "world seed where one applies)");
  sub->add_option("--threads", c.threads, "worker threads for rasterization");
}

struct ResolvedConfig {
  PipelineConfig cfg;
  std::string text;  // raw config file contents, "" when none given
};

ResolvedConfig resolve_config(const CommonOpts& c) {
  ResolvedConfig r;
  if (!c.config_path.empty()) {
    r.text = detail::read_text_file(c.config_path);
    r.cfg = parse_pipeline_config(r.text);
  }
  if (c.seed >= 0) {
    r.cfg.seed = uint64_t(c.seed);
    r.cfg.synth.seed = uint64_t(c.seed);
  }
  if (c.threads >= 1) r.cfg.threads = c.threads;
  return r;
}

RasterParams raster_params(const PipelineConfig& cfg) {
  RasterParams rp = RasterParams::from(cfg.optim);
  rp.threads = cfg.threads;
  return rp;
}

void write_manifest(const std::string& path, const std::string& command,
                    const ResolvedConfig& rc,
                    const std::vector<std::string>& outputs,
                    nlohmann::json extra = nlohmann::json::object()) {
  nlohmann::json m = {
      {"command", command},
      {"config_hash", rc.text.empty() ? "none" : config_hash(rc.text)},
      {"seed", rc.cfg.seed},
      {"threads", rc.cfg.threads},
      {"versions",
       {{"library", kLibraryVersion},
        {"model_format", std::to_string(kModelVersionMajor) + "." +
                             std::to_string(kModelVersionMinor)}}},
      {"outputs", outputs}};
  for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = *it;
  detail::write_text_file(path, m.dump(2) + "\n");
}

std::vector<double> parse_number_group(const std::string& group, int want,
                                       const std::string& what) {
  std::vector<double> out;
  size_t pos = 0;
  while (pos <= group.size()) {
    size_t comma = group.find(',', pos);
    if (comma == std::string::npos) comma = group.size();
    const std::string tok = group.substr(pos, comma - pos);
    try {
      size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ValidationError(what + ": bad number '" + tok + "'");
    }
    pos = comma + 1;
  }
  if (int(out.size()) != want)
    throw ValidationError(what + ": expected " + std::to_string(want) +
                          " comma-separated numbers");
  return out;
}

PoseSet parse_pose_arg(const std::string& s) {
  const size_t space = s.find(' ');
  if (space == std::string::npos || s.find(' ', space + 1) != std::string::npos)
    throw ValidationError(
        "--pose: expected \"t1,t2,t3 v1,v2,v3,w1,w2,w3\" (two groups)");
  const auto theta = parse_number_group(s.substr(0, space), 3, "--pose theta");
  const auto xi = parse_number_group(s.substr(space + 1), 6, "--pose xi");
  PoseSet q;
  q.theta = {theta[0], theta[1], theta[2]};
  for (int k = 0; k < 6; ++k) q.xi[k] = xi[k];
  return q;
}

std::vector<PoseSet> trajectory_poses(const Trajectory& traj, size_t n_frames,
                                      const std::string& where) {
  if (traj.frames.size() != n_frames)
    throw ValidationError(where + ": trajectory has " +
                          std::to_string(traj.frames.size()) + " frames, set has " +
                          std::to_string(n_frames));
  std::vector<PoseSet> poses;
  for (size_t i = 0; i < traj.frames.size(); ++i) {
    if (traj.frames[i].frame_index != int(i))
      throw ValidationError(where + "/frames/" + std::to_string(i) +
                            "/frame_index: expected " + std::to_string(i));
    poses.push_back(traj.frames[i].estimate.q);
  }
  return poses;
}

Trajectory poses_to_trajectory(const std::vector<PoseSet>& poses,
                               const Trajectory* base = nullptr) {
  Trajectory out;
  for (size_t i = 0; i < poses.size(); ++i) {
    TrackedFrame tf;
    if (base) tf = base->frames[i];
    tf.frame_index = int(i);
    tf.estimate.q = poses[i];
    out.frames.push_back(std::move(tf));
  }
  return out;
}

double mean_composite_ssim(const ArticulatedGaussianModel& model,
                           const std::vector<PoseSet>& poses,
                           const std::vector<Frame>& frames,
                           const std::vector<int>& indices, const Camera& cam,
                           const RasterParams* rp) {
  double acc = 0;
  int n = 0;
  for (int i : indices) {
    const GridF img = render_composite(model, poses[i], frames[i], cam, rp);
    const double v = ssim(img, frames[i].rgb);
    if (std::isfinite(v)) {
      acc += v;
      ++n;
    }
  }
  return n ? acc / n : kUndefinedMetric;
}

// ---------------------------------------------------------------- pretrain

struct PretrainOpts {
  CommonOpts common;
  std::string out;
  std::string chain_path;
  std::vector<std::string> mesh_paths;
  bool synthetic = false;
};

int run_pretrain(const PretrainOpts& o) {
  ResolvedConfig rc = resolve_config(o.common);
  const PipelineConfig& cfg = rc.cfg;
  ArticulatedGaussianModel model;
  if (o.synthetic) {
    const SyntheticWorld world = make_synthetic_world(cfg.synth);
    model = build_pretrained_model(world, cfg.pretrain_points, cfg.pretrain_views,
                                   cfg.pretrain_view_size, cfg.optim, cfg.seed);
  } else {
    if (o.chain_path.empty() || o.mesh_paths.size() != size_t(kNumParts))
      throw ValidationError(
          "pretrain: need --synthetic, or --chain plus exactly " +
          std::to_string(kNumParts) + " --mesh paths in part order");
    const KinematicChain chain = load_chain(o.chain_path);
    Camera view_cam;
    view_cam.fx = view_cam.fy = 1.2 * cfg.pretrain_view_size;
    view_cam.cx = view_cam.cy = cfg.pretrain_view_size / 2.0;
    view_cam.width = view_cam.height = cfg.pretrain_view_size;
    std::array<std::vector<GaussianPrimitive>, kNumParts> parts;
    for (int p = 0; p < kNumParts; ++p) {
      const TriangleMesh mesh = load_mesh(o.mesh_paths[p]);
      const auto points = sample_surface_rays(mesh, cfg.pretrain_points, cfg.seed + p);
      const auto views = render_mesh_silhouettes(mesh, cfg.pretrain_views, view_cam,
                                                 cfg.seed + 100 + p);
      auto fit = pretrain_part(points, views, p, cfg.optim.pretrain_iters,
                               cfg.optim, cfg.seed + 200 + p);
      std::printf("part %d (%s): %d gaussians, silhouette loss %.5f\n", p,
                  chain.part_names[p].c_str(), int(fit.primitives.size()),
                  fit.loss_history.empty() ? -1.0 : fit.loss_history.back());
      parts[p] = std::move(fit.primitives);
    }
    model = assemble_instrument(parts, chain);
  }
  save_model(o.out, model, "pretrained", cfg.seed);
  write_manifest(o.out + ".manifest.json", "pretrain", rc, {o.out},
                 {{"n_primitives", model.size()}});
  std::printf("wrote %s (%d gaussians)\n", o.out.c_str(), model.size());
  return 0;
}

// -------------------------------------------------------------- tip-dataset

struct TipDatasetOpts {
  CommonOpts common;
  std::string model_path;
  std::string out_dir;
  int count = 0;  // 0 keeps the config value
};

int run_tip_dataset(const TipDatasetOpts& o) {
  ResolvedConfig rc = resolve_config(o.common);
  const PipelineConfig& cfg = rc.cfg;
  const int n = o.count > 0 ? o.count : cfg.tip_samples;
  const ModelLoadResult loaded = load_model(o.model_path);
  const Camera cam = cfg.synth.camera();
  PoseRegion region;
  region.standoff = cfg.synth.standoff;
  const auto samples = generate_tip_dataset(loaded.model, cam, n, region, cfg.seed);
  std::filesystem::create_directories(o.out_dir);
  for (size_t i = 0; i < samples.size(); ++i) {
    char stem[32];
    std::snprintf(stem, sizeof(stem), "sample_%05d", int(i));
    save_png_indexed(o.out_dir + "/" + stem + "_sem.png", samples[i].semantics);
    nlohmann::json tips = nlohmann::json::array();
    for (const Vec2d& t : samples[i].tips) tips.push_back({t.x(), t.y()});
    nlohmann::json rec = {{"tips", tips},
                          {"theta", samples[i].pose.theta},
                          {"xi", {samples[i].pose.xi[0], samples[i].pose.xi[1],
                                  samples[i].pose.xi[2], samples[i].pose.xi[3],
                                  samples[i].pose.xi[4], samples[i].pose.xi[5]}}};
    detail::write_text_file(o.out_dir + "/" + stem + "_tips.json",
                            rec.dump(2) + "\n");
  }
  write_manifest(o.out_dir + "/manifest.json", "tip-dataset", rc, {o.out_dir},
                 {{"count", int(samples.size())},
                  {"camera", detail::camera_to_json(cam)},
                  {"pose_region",
                   {{"standoff", region.standoff},
                    {"standoff_jitter", region.standoff_jitter},
                    {"lateral_jitter", region.lateral_jitter},
                    {"rot_angle_max", region.rot_angle_max},
                    {"theta_margin", region.theta_margin}}}});
  std::printf("wrote %d samples to %s\n", int(samples.size()), o.out_dir.c_str());
  return 0;
}

// ------------------------------------------------------------------- synth

struct SynthOpts {
  CommonOpts common;
  std::string out_dir;
};

int run_synth(const SynthOpts& o) {
  ResolvedConfig rc = resolve_config(o.common);
  const PipelineConfig& cfg = rc.cfg;
  const SyntheticWorld world = make_synthetic_world(cfg.synth);
  std::vector<Frame> frames;
  std::vector<PoseSet> gt_poses;
  nlohmann::json keypoints = nlohmann::json::array();
  for (int i = 0; i < cfg.synth.n_frames; ++i) {
    SyntheticFrameBundle bundle = render_ground_truth(world, i);
    nlohmann::json kps = nlohmann::json::array();
    for (const Vec2d& kp : bundle.keypoints_2d) kps.push_back({kp.x(), kp.y()});
    keypoints.push_back(kps);
    gt_poses.push_back(bundle.q_render);
    frames.push_back(std::move(bundle.frame));
  }
  save_frame_set(o.out_dir, frames, world.camera);
  Trajectory gt = poses_to_trajectory(gt_poses);
  for (auto& tf : gt.frames) {
    tf.estimate.converged = true;
    tf.estimate.note = "ground truth";
  }
  save_trajectory(o.out_dir + "/gt_trajectory.json", gt);
  detail::write_text_file(o.out_dir + "/keypoints.json",
                          nlohmann::json{{"frames", keypoints}}.dump(2) + "\n");
  save_chain(o.out_dir + "/chain.txt", world.chain);
  const char* mesh_names[kNumParts] = {"mesh_shaft.obj", "mesh_wrist.obj",
                                       "mesh_gripper_right.obj",
                                       "mesh_tooltip_left.obj"};
  for (int p = 0; p < kNumParts; ++p)
    save_mesh(o.out_dir + "/" + mesh_names[p], world.part_meshes[p]);
  write_manifest(o.out_dir + "/manifest.json", "synth", rc, {o.out_dir},
                 {{"n_frames", cfg.synth.n_frames},
                  {"world_seed", cfg.synth.seed},
                  {"camera", detail::camera_to_json(world.camera)}});
  std::printf("wrote %d frames to %s\n", cfg.synth.n_frames, o.out_dir.c_str());
  return 0;
}

// ---------------------------------------------------------- estimate-poses

struct EstimateOpts {
  CommonOpts common;
  std::string model_path, frames_dir, out;
};

int run_estimate_poses(const EstimateOpts& o) {
  ResolvedConfig rc = resolve_config(o.common);
  const PipelineConfig& cfg = rc.cfg;
  const ModelLoadResult loaded = load_model(o.model_path);
  const FrameSet fs = load_frame_set(o.frames_dir);
  const RasterParams rp = raster_params(cfg);
  const Trajectory traj =
      track_sequence(loaded.model, fs.frames, fs.camera, cfg.optim, cfg.seed, &rp);
  save_trajectory(o.out, traj);
  int failed = 0, reseeded = 0;
  for (const TrackedFrame& tf : traj.frames) {
    failed += tf.estimate.failed;
    reseeded += tf.reseeded;
  }
  write_manifest(o.out + ".manifest.json", "estimate-poses", rc, {o.out},
                 {{"n_frames", int(traj.frames.size())},
                  {"failed_frames", failed},
                  {"reseeded_frames", reseeded}});
  std::printf("tracked %d frames (%d reseeded, %d failed) -> %s\n",
              int(traj.frames.size()), reseeded, failed, o.out.c_str());
  return 0;
}

// ------------------------------------------------------------ train-texture

struct TrainTextureOpts {
  CommonOpts common;
  std::string model_path, frames_dir, trajectory_path;
  std::string out_model, out_trajectory, metrics_csv;
};

int run_train_texture(const TrainTextureOpts& o) {
  ResolvedConfig rc = resolve_config(o.common);
  const PipelineConfig& cfg = rc.cfg;
  const ModelLoadResult loaded = load_model(o.model_path);
  const FrameSet fs = load_frame_set(o.frames_dir);
  const Trajectory in_traj = load_trajectory(o.trajectory_path);
  std::vector<PoseSet> poses =
      trajectory_poses(in_traj, fs.frames.size(), o.trajectory_path);
  const RasterParams rp = raster_params(cfg);

  TrainState st = make_train_state(loaded.model, std::move(poses), cfg.seed);
  std::vector<int> heldout;
  for (size_t i = 0; i < fs.frames.size(); ++i)
    if (is_heldout_frame(int(i))) heldout.push_back(int(i));

  std::string csv = "checkpoint,iteration,split,psnr_db,ssim\n";
  auto checkpoint = [&](const std::string& name) {
    const auto splits = {std::make_pair(std::string("train"), &st.train_indices),
                         std::make_pair(std::string("heldout"), &heldout)};
    for (const auto& [split, idx] : splits) {
      if (idx->empty()) continue;
      const double p =
          composite_psnr(st.model, st.poses, fs.frames, *idx, fs.camera, &rp);
      const double s =
          mean_composite_ssim(st.model, st.poses, fs.frames, *idx, fs.camera, &rp);
      char row[160];
      std::snprintf(row, sizeof(row), "%s,%d,%s,%.6f,%.6f\n", name.c_str(),
                    st.iteration, split.c_str(), p, s);
      csv += row;
      std::printf("%s %s: psnr %.2f dB, ssim %.4f\n", name.c_str(), split.c_str(),
                  p, s);
    }
  };

  warmup(st, fs.frames, fs.camera, cfg.optim, &rp);
  if (st.aborted) throw std::runtime_error("warmup aborted: " + st.note);
  checkpoint("warmup");
  const RtlReport report = rtl_train(st, fs.frames, fs.camera, cfg.optim, 1, &rp);
  if (report.aborted)
    throw std::runtime_error("texture training aborted: " + report.note);
  checkpoint("final");

  save_model(o.out_model, st.model, "textured", cfg.seed);
  save_trajectory(o.out_trajectory, poses_to_trajectory(st.poses, &in_traj));
  detail::write_text_file(o.metrics_csv, csv);
  write_manifest(o.out_model + ".manifest.json", "train-texture", rc,
                 {o.out_model, o.out_trajectory, o.metrics_csv},
                 {{"warmup_iters", cfg.optim.warmup_iters},
                  {"rtl_iters", cfg.optim.rtl_iters},
                  {"refine_steps", cfg.optim.refine_steps}});
  return 0;
}

// ------------------------------------------------------------------- render

struct RenderOpts {
  CommonOpts common;
  std::string model_path, pose, out;
  std::string sem_out, alpha_out, depth_out;
  int width = 0, height = 0;
  double fx = 0, fy = 0, cx = -1, cy = -1;
};

int run_render(const RenderOpts& o) {
  ResolvedConfig rc = resolve_config(o.common);
  const PipelineConfig& cfg = rc.cfg;
  const ModelLoadResult loaded = load_model(o.model_path);
  const PoseSet q = parse_pose_arg(o.pose);
  SyntheticSpec spec = cfg.synth;
  if (o.width > 0) spec.width = o.width;
  if (o.height > 0) spec.height = o.height;
  if (o.fx > 0) spec.fx = o.fx;
  if (o.fy > 0) spec.fy = o.fy;
  Camera cam = spec.camera();
  if (o.cx >= 0) cam.cx = o.cx;
  if (o.cy >= 0) cam.cy = o.cy;

  RasterParams rp = raster_params(cfg);
  rp.with_tape = false;
  rp.with_semantics = !o.sem_out.empty();
  rp.with_depth = !o.depth_out.empty();
  const RenderOutput out = rasterize(loaded.model, q, cam, rp);
  save_png_rgb(o.out, out.color);
  std::vector<std::string> outputs = {o.out};
  if (!o.sem_out.empty()) {
    save_png_indexed(o.sem_out, out.semantics_argmax());
    outputs.push_back(o.sem_out);
  }
  if (!o.alpha_out.empty()) {
    save_grid(o.alpha_out, out.alpha);
    outputs.push_back(o.alpha_out);
  }
  if (!o.depth_out.empty()) {
    save_grid(o.depth_out, out.depth);
    outputs.push_back(o.depth_out);
  }
  write_manifest(o.out + ".manifest.json", "render", rc, outputs,
                 {{"pose", o.pose}, {"camera", detail::camera_to_json(cam)}});
  std::printf("wrote %s\n", o.out.c_str());
  return 0;
}

// --------------------------------------------------------------------- eval

struct EvalOpts {
  CommonOpts common;
  std::string model_path, frames_dir, trajectory_path;
  std::string out, csv;
};

int run_eval(const EvalOpts& o) {
  ResolvedConfig rc = resolve_config(o.common);
  const PipelineConfig& cfg = rc.cfg;
  const ModelLoadResult loaded = load_model(o.model_path);
  const ArticulatedGaussianModel& model = loaded.model;
  const FrameSet fs = load_frame_set(o.frames_dir);
  const Trajectory traj = load_trajectory(o.trajectory_path);
  const std::vector<PoseSet> poses =
      trajectory_poses(traj, fs.frames.size(), o.trajectory_path);
  RasterParams rp = raster_params(cfg);
  rp.with_tape = false;

  const std::vector<double> pck_thresholds = {2.5, 5.0};
  nlohmann::json frame_rows = nlohmann::json::array();
  std::string csv =
      "frame,psnr_db,ssim,mask_iou,depth_rmse,depth_rmse_masked,dice_shaft,"
      "dice_wrist,dice_gripper_right,dice_tooltip_left\n";
  std::vector<double> psnr_all, ssim_all, iou_all, rmse_all, rmse_masked_all;
  std::vector<std::vector<double>> dice_all(kNumParts);
  std::vector<std::vector<Vec2d>> tips_pred, tips_gt;

  for (size_t i = 0; i < fs.frames.size(); ++i) {
    const Frame& frame = fs.frames[i];
    const RenderOutput out = rasterize(model, poses[i], fs.camera, rp);
    GridF composite = out.color;
    for (int y = 0; y < composite.height(); ++y)
      for (int x = 0; x < composite.width(); ++x) {
        const double t = 1.0 - out.alpha.at(y, x, 0);
        for (int c = 0; c < 3; ++c)
          composite.at(y, x, c) += t * frame.rgb.at(y, x, c);
      }
    const double p = psnr(composite, frame.rgb);
    const double s = ssim(composite, frame.rgb);
    GridU8 pred_mask(out.height, out.width, 1);
    for (int y = 0; y < out.height; ++y)
      for (int x = 0; x < out.width; ++x)
        pred_mask.at(y, x, 0) = out.alpha.at(y, x, 0) > 0.5;
    const double iou = mask_iou(pred_mask, frame.instrument_mask);
    const GridU8 pred_sem = out.semantics_argmax();
    const std::vector<double> dice =
        dice_per_part(pred_sem, frame.part_semantics, kNumParts);
    double rmse = kUndefinedMetric, rmse_masked = kUndefinedMetric;
    if (frame.depth) {
      rmse = depth_rmse(out.depth, *frame.depth);
      rmse_masked = depth_rmse(out.depth, *frame.depth, &frame.instrument_mask);
    }

    if (frame.tips_2d && !frame.tips_2d->empty()) {
      std::vector<Vec2d> pred;
      for (const TipProjection& tp : tip_points(model.chain(), poses[i], fs.camera))
        if (tip_in_frame(tp, fs.camera)) pred.push_back(tp.pixel);
      if (pred.size() == frame.tips_2d->size()) {
        std::vector<Vec2d> gt = *frame.tips_2d;
        if (pred.size() == 2) {
          const double keep = (pred[0] - gt[0]).norm() + (pred[1] - gt[1]).norm();
          const double swap = (pred[0] - gt[1]).norm() + (pred[1] - gt[0]).norm();
          if (swap < keep) std::swap(gt[0], gt[1]);
        }
        tips_pred.push_back(pred);
        tips_gt.push_back(gt);
      }
    }

    psnr_all.push_back(p);
    ssim_all.push_back(s);
    iou_all.push_back(iou);
    rmse_all.push_back(rmse);
    rmse_masked_all.push_back(rmse_masked);
    for (int k = 0; k < kNumParts; ++k) dice_all[k].push_back(dice[k]);
    frame_rows.push_back({{"frame", int(i)},
                          {"psnr_db", p},
                          {"ssim", s},
                          {"mask_iou", iou},
                          {"depth_rmse", rmse},
                          {"depth_rmse_masked", rmse_masked},
                          {"dice", dice}});
    char row[256];
    std::snprintf(row, sizeof(row),
                  "%d,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", int(i), p,
                  s, iou, rmse, rmse_masked, dice[0], dice[1], dice[2], dice[3]);
    csv += row;
  }

  MetricReport agg;
  agg.psnr_db = mean_defined(psnr_all);
  agg.ssim_val = mean_defined(ssim_all);
  agg.depth_rmse_full = mean_defined(rmse_all);
  agg.depth_rmse_masked = mean_defined(rmse_masked_all);
  for (int k = 0; k < kNumParts; ++k) agg.dice.push_back(mean_defined(dice_all[k]));
  if (!tips_pred.empty()) {
    const KeypointMetrics km = keypoint_metrics(tips_pred, tips_gt, pck_thresholds);
    agg.keypoint_rmse_px = km.rmse_px;
    agg.pck = km.pck;
  }

  nlohmann::json report = {
      {"aggregate",
       {{"psnr_db", agg.psnr_db},
        {"ssim", agg.ssim_val},
        {"mask_iou", mean_defined(iou_all)},
        {"depth_rmse", agg.depth_rmse_full},
        {"depth_rmse_masked", agg.depth_rmse_masked},
        {"dice", agg.dice},
        {"keypoint_rmse_px", agg.keypoint_rmse_px},
        {"pck_thresholds", pck_thresholds},
        {"pck", agg.pck}}},
      {"frames", frame_rows}};
  detail::write_text_file(o.out, report.dump(2) + "\n");
  std::vector<std::string> outputs = {o.out};
  if (!o.csv.empty()) {
    detail::write_text_file(o.csv, csv);
    outputs.push_back(o.csv);
  }
  write_manifest(o.out + ".manifest.json", "eval", rc, outputs);
  std::printf("psnr %.2f dB, ssim %.4f, mask iou %.4f -> %s\n", agg.psnr_db,
              agg.ssim_val, mean_defined(iou_all), o.out.c_str());
  return 0;
}

// ------------------------------------------------------------------- ablate

struct AblateOpts {
  CommonOpts common;
  std::string out, markdown;
};

int run_ablate(const AblateOpts& o) {
  ResolvedConfig rc = resolve_config(o.common);
  const PipelineConfig& cfg = rc.cfg;
  AblationConfig ab;
  ab.synth = cfg.synth;
  ab.optim = cfg.optim;
  ab.seed = cfg.seed;
  ab.points_per_part = cfg.pretrain_points;
  ab.pretrain_views = cfg.pretrain_views;
  ab.pretrain_view_size = cfg.pretrain_view_size;
  const AblationReport report = run_ablation_suite(ab);
  nlohmann::json legs = nlohmann::json::array();
  for (const AblationLeg& l : report.legs)
    legs.push_back({{"name", l.name},
                    {"ok", l.ok},
                    {"error", l.error},
                    {"metrics", l.metrics}});
  nlohmann::json orderings = nlohmann::json::array();
  for (const OrderingCheck& c : report.orderings)
    orderings.push_back(
        {{"name", c.name}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"holds", c.holds}});
  detail::write_text_file(o.out,
                          nlohmann::json{{"legs", legs}, {"orderings", orderings}}
                                  .dump(2) +
                              "\n");
  std::vector<std::string> outputs = {o.out};
  if (!o.markdown.empty()) {
    detail::write_text_file(o.markdown, report.markdown());
    outputs.push_back(o.markdown);
  }
  write_manifest(o.out + ".manifest.json", "ablate", rc, outputs);
  for (const OrderingCheck& c : report.orderings)
    std::printf("%s: %.4f vs %.4f -> %s\n", c.name.c_str(), c.lhs, c.rhs,
                c.holds ? "holds" : "VIOLATED");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Articulated Gaussian-splat instrument twins: pretraining, "
               "pose estimation, and robust texture learning"};
  app.require_subcommand(1);

  PretrainOpts pre;
  CLI::App* sub_pre = app.add_subcommand(
      "pretrain", "fit per-part Gaussians to meshes and assemble the model");
  add_common(sub_pre, pre.common);
  sub_pre->add_option("--out", pre.out, "output model file")->required();
  sub_pre->add_option("--chain", pre.chain_path, "kinematic chain file");
  sub_pre->add_option("--mesh", pre.mesh_paths,
                      "part mesh (OBJ), repeat in part order");
  sub_pre->add_flag("--synthetic", pre.synthetic,
                    "use the built-in synthetic instrument");

  TipDatasetOpts tip;
  CLI::App* sub_tip = app.add_subcommand(
      "tip-dataset", "generate semantics-tip training pairs");
  add_common(sub_tip, tip.common);
  sub_tip->add_option("--model", tip.model_path, "model file")->required();
  sub_tip->add_option("--out", tip.out_dir, "output directory")->required();
  sub_tip->add_option("--count", tip.count, "number of samples");

  SynthOpts synth;
  CLI::App* sub_synth = app.add_subcommand(
      "synth", "render a synthetic ground-truth frame set");
  add_common(sub_synth, synth.common);
  sub_synth->add_option("--out", synth.out_dir, "output directory")->required();

  EstimateOpts est;
  CLI::App* sub_est = app.add_subcommand(
      "estimate-poses", "track per-frame poses by render-and-compare");
  add_common(sub_est, est.common);
  sub_est->add_option("--model", est.model_path, "model file")->required();
  sub_est->add_option("--frames", est.frames_dir, "frame directory")->required();
  sub_est->add_option("--out", est.out, "output trajectory JSON")->required();

  TrainTextureOpts tex;
  CLI::App* sub_tex = app.add_subcommand(
      "train-texture", "texture warm-up plus robust texture learning");
  add_common(sub_tex, tex.common);
  sub_tex->add_option("--model", tex.model_path, "model file")->required();
  sub_tex->add_option("--frames", tex.frames_dir, "frame directory")->required();
  sub_tex->add_option("--trajectory", tex.trajectory_path,
                      "estimated-pose trajectory JSON")->required();
  sub_tex->add_option("--out-model", tex.out_model, "trained model file")
      ->required();
  sub_tex->add_option("--out-trajectory", tex.out_trajectory,
                      "refined trajectory JSON")->required();
  sub_tex->add_option("--metrics", tex.metrics_csv, "metrics CSV")->required();

  RenderOpts ren;
  CLI::App* sub_ren =
      app.add_subcommand("render", "render the model at a fixed pose");
  add_common(sub_ren, ren.common);
  sub_ren->add_option("--model", ren.model_path, "model file")->required();
  sub_ren->add_option("--pose", ren.pose,
                      "\"t1,t2,t3 v1,v2,v3,w1,w2,w3\" (radians, meters)")
      ->required();
  sub_ren->add_option("--out", ren.out, "output PNG")->required();
  sub_ren->add_option("--sem", ren.sem_out, "semantics PNG (indexed)");
  sub_ren->add_option("--alpha", ren.alpha_out, "alpha grid (binary f32)");
  sub_ren->add_option("--depth", ren.depth_out, "depth grid (binary f32)");
  sub_ren->add_option("--width", ren.width, "image width");
  sub_ren->add_option("--height", ren.height, "image height");
  sub_ren->add_option("--fx", ren.fx, "focal length x (px)");
  sub_ren->add_option("--fy", ren.fy, "focal length y (px)");
  sub_ren->add_option("--cx", ren.cx, "principal point x (px)");
  sub_ren->add_option("--cy", ren.cy, "principal point y (px)");

  EvalOpts ev;
  CLI::App* sub_ev = app.add_subcommand(
      "eval", "score rendered frames against ground truth");
  add_common(sub_ev, ev.common);
  sub_ev->add_option("--model", ev.model_path, "model file")->required();
  sub_ev->add_option("--frames", ev.frames_dir, "frame directory")->required();
  sub_ev->add_option("--trajectory", ev.trajectory_path, "trajectory JSON")
      ->required();
  sub_ev->add_option("--out", ev.out, "report JSON")->required();
  sub_ev->add_option("--csv", ev.csv, "per-frame CSV");

  AblateOpts ab;
  CLI::App* sub_ab = app.add_subcommand(
      "ablate", "run the ablation suite and ordering checks");
  add_common(sub_ab, ab.common);
  sub_ab->add_option("--out", ab.out, "report JSON")->required();
  sub_ab->add_option("--markdown", ab.markdown, "report markdown table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*sub_pre) return run_pretrain(pre);
    if (*sub_tip) return run_tip_dataset(tip);
    if (*sub_synth) return run_synth(synth);
    if (*sub_est) return run_estimate_poses(est);
    if (*sub_tex) return run_train_texture(tex);
    if (*sub_ren) return run_render(ren);
    if (*sub_ev) return run_eval(ev);
    if (*sub_ab) return run_ablate(ab);
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime error: %s\n", e.what());
    return 2;
  }
  return 0;
}
