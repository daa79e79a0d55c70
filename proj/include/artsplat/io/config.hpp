#pragma once

#include <zlib.h>

#include <nlohmann/json.hpp>

#include <set>
#include <string>

#include "artsplat/core/types.hpp"
#include "artsplat/eval/synthetic.hpp"
#include "artsplat/io/frames_io.hpp"

namespace artsplat {

// One structured config file drives every CLI stage. Unknown keys are
// rejected so typos fail loudly instead of silently using defaults.
struct PipelineConfig {
  uint64_t seed = 1;
  int threads = 1;
  OptimConfig optim;
  SyntheticSpec synth;

  // Pretraining shape.
  int pretrain_points = 1000;
  int pretrain_views = 24;
  int pretrain_view_size = 128;

  // Tip dataset shape.
  int tip_samples = 1000;

  // Optional default paths; CLI flags override.
  std::string chain_path, frames_dir, model_path, output_dir;
};

namespace detail {

inline void reject_unknown(const nlohmann::json& obj, const std::string& where,
                           const std::set<std::string>& allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw ValidationError(where + "/" + it.key() + ": unknown key");
}

inline double cfg_num(const nlohmann::json& obj, const std::string& where,
                      const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number())
    throw ValidationError(where + "/" + key + ": expected a number");
  return obj[key].get<double>();
}

inline int cfg_int(const nlohmann::json& obj, const std::string& where,
                   const char* key, int fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_integer())
    throw ValidationError(where + "/" + key + ": expected an integer");
  return obj[key].get<int>();
}

inline std::string cfg_str(const nlohmann::json& obj, const std::string& where,
                           const char* key, const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_string())
    throw ValidationError(where + "/" + key + ": expected a string");
  return obj[key].get<std::string>();
}

inline void parse_optim_section(const nlohmann::json& j, OptimConfig& c) {
  const std::string w = "/optim";
  detail::reject_unknown(
      j, w,
      {"lambda_mask", "lambda_tip", "tip_tolerance_r", "joint_limit_weight",
       "eta_theta", "eta_xi_rot", "eta_xi_trans", "eta_mean", "eta_color",
       "eta_opacity", "eta_rotation", "eta_log_scale", "pretrain_iters",
       "pose_iters", "warmup_iters", "rtl_iters", "refine_steps",
       "early_stop_window", "early_stop_rel_threshold", "sigma_cut",
       "alpha_skip", "t_stop", "alpha_max"});
  c.lambda_mask = cfg_num(j, w, "lambda_mask", c.lambda_mask);
  c.lambda_tip = cfg_num(j, w, "lambda_tip", c.lambda_tip);
  c.tip_tolerance_r = cfg_num(j, w, "tip_tolerance_r", c.tip_tolerance_r);
  c.joint_limit_weight = cfg_num(j, w, "joint_limit_weight", c.joint_limit_weight);
  c.eta_theta = cfg_num(j, w, "eta_theta", c.eta_theta);
  c.eta_xi_rot = cfg_num(j, w, "eta_xi_rot", c.eta_xi_rot);
  c.eta_xi_trans = cfg_num(j, w, "eta_xi_trans", c.eta_xi_trans);
  c.eta_mean = cfg_num(j, w, "eta_mean", c.eta_mean);
  c.eta_color = cfg_num(j, w, "eta_color", c.eta_color);
  c.eta_opacity = cfg_num(j, w, "eta_opacity", c.eta_opacity);
  c.eta_rotation = cfg_num(j, w, "eta_rotation", c.eta_rotation);
  c.eta_log_scale = cfg_num(j, w, "eta_log_scale", c.eta_log_scale);
  c.pretrain_iters = cfg_int(j, w, "pretrain_iters", c.pretrain_iters);
  c.pose_iters = cfg_int(j, w, "pose_iters", c.pose_iters);
  c.warmup_iters = cfg_int(j, w, "warmup_iters", c.warmup_iters);
  c.rtl_iters = cfg_int(j, w, "rtl_iters", c.rtl_iters);
  c.refine_steps = cfg_int(j, w, "refine_steps", c.refine_steps);
  c.early_stop_window = cfg_int(j, w, "early_stop_window", c.early_stop_window);
  c.early_stop_rel_threshold =
      cfg_num(j, w, "early_stop_rel_threshold", c.early_stop_rel_threshold);
  c.sigma_cut = cfg_num(j, w, "sigma_cut", c.sigma_cut);
  c.alpha_skip = cfg_num(j, w, "alpha_skip", c.alpha_skip);
  c.t_stop = cfg_num(j, w, "t_stop", c.t_stop);
  c.alpha_max = cfg_num(j, w, "alpha_max", c.alpha_max);
  if (!c.is_valid()) throw ValidationError(w + ": values out of range");
}

inline void parse_synth_section(const nlohmann::json& j, SyntheticSpec& s) {
  const std::string w = "/synth";
  detail::reject_unknown(
      j, w,
      {"seed", "n_frames", "width", "height", "fx", "fy", "shaft_radius",
       "shaft_length", "shaft_segments", "jaw_length", "jaw_base_halfwidth",
       "jaw_tip_halfwidth", "jaw_thickness", "texture_scale",
       "frames_per_control", "standoff", "joint_amplitude",
       "rigid_trans_amplitude", "rigid_rot_amplitude", "max_joint_delta",
       "limit_margin", "mask_erode_px", "mask_dilate_px",
       "pose_noise_theta_deg", "pose_noise_rot_deg", "pose_noise_trans_mm",
       "plate_z", "plate_tilt", "plate_half"});
  s.seed = uint64_t(cfg_num(j, w, "seed", double(s.seed)));
  s.n_frames = cfg_int(j, w, "n_frames", s.n_frames);
  s.width = cfg_int(j, w, "width", s.width);
  s.height = cfg_int(j, w, "height", s.height);
  s.fx = cfg_num(j, w, "fx", s.fx);
  s.fy = cfg_num(j, w, "fy", s.fy);
  s.shaft_radius = cfg_num(j, w, "shaft_radius", s.shaft_radius);
  s.shaft_length = cfg_num(j, w, "shaft_length", s.shaft_length);
  s.shaft_segments = cfg_int(j, w, "shaft_segments", s.shaft_segments);
  s.jaw_length = cfg_num(j, w, "jaw_length", s.jaw_length);
  s.jaw_base_halfwidth = cfg_num(j, w, "jaw_base_halfwidth", s.jaw_base_halfwidth);
  s.jaw_tip_halfwidth = cfg_num(j, w, "jaw_tip_halfwidth", s.jaw_tip_halfwidth);
  s.jaw_thickness = cfg_num(j, w, "jaw_thickness", s.jaw_thickness);
  s.texture_scale = cfg_num(j, w, "texture_scale", s.texture_scale);
  s.frames_per_control = cfg_int(j, w, "frames_per_control", s.frames_per_control);
  s.standoff = cfg_num(j, w, "standoff", s.standoff);
  s.joint_amplitude = cfg_num(j, w, "joint_amplitude", s.joint_amplitude);
  s.rigid_trans_amplitude =
      cfg_num(j, w, "rigid_trans_amplitude", s.rigid_trans_amplitude);
  s.rigid_rot_amplitude =
      cfg_num(j, w, "rigid_rot_amplitude", s.rigid_rot_amplitude);
  s.max_joint_delta = cfg_num(j, w, "max_joint_delta", s.max_joint_delta);
  s.limit_margin = cfg_num(j, w, "limit_margin", s.limit_margin);
  s.mask_erode_px = cfg_int(j, w, "mask_erode_px", s.mask_erode_px);
  s.mask_dilate_px = cfg_int(j, w, "mask_dilate_px", s.mask_dilate_px);
  s.pose_noise_theta_deg =
      cfg_num(j, w, "pose_noise_theta_deg", s.pose_noise_theta_deg);
  s.pose_noise_rot_deg = cfg_num(j, w, "pose_noise_rot_deg", s.pose_noise_rot_deg);
  s.pose_noise_trans_mm =
      cfg_num(j, w, "pose_noise_trans_mm", s.pose_noise_trans_mm);
  s.plate_z = cfg_num(j, w, "plate_z", s.plate_z);
  s.plate_tilt = cfg_num(j, w, "plate_tilt", s.plate_tilt);
  s.plate_half = cfg_num(j, w, "plate_half", s.plate_half);
  if (s.n_frames < 1 || s.width < 16 || s.height < 16 || s.fx <= 0 || s.fy <= 0)
    throw ValidationError(w + ": values out of range");
}

}  // namespace detail

inline PipelineConfig parse_pipeline_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("config JSON: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("/: expected an object");
  detail::reject_unknown(
      j, "", {"seed", "threads", "optim", "synth", "pretrain", "tip", "paths"});
  PipelineConfig cfg;
  cfg.seed = uint64_t(detail::cfg_num(j, "", "seed", double(cfg.seed)));
  cfg.threads = detail::cfg_int(j, "", "threads", cfg.threads);
  if (cfg.threads < 1) throw ValidationError("/threads: must be >= 1");
  if (j.contains("optim")) {
    if (!j["optim"].is_object()) throw ValidationError("/optim: expected an object");
    detail::parse_optim_section(j["optim"], cfg.optim);
  }
  if (j.contains("synth")) {
    if (!j["synth"].is_object()) throw ValidationError("/synth: expected an object");
    detail::parse_synth_section(j["synth"], cfg.synth);
  }
  if (j.contains("pretrain")) {
    const nlohmann::json& p = j["pretrain"];
    if (!p.is_object()) throw ValidationError("/pretrain: expected an object");
    detail::reject_unknown(p, "/pretrain", {"points_per_part", "views", "view_size"});
    cfg.pretrain_points = detail::cfg_int(p, "/pretrain", "points_per_part",
                                          cfg.pretrain_points);
    cfg.pretrain_views = detail::cfg_int(p, "/pretrain", "views", cfg.pretrain_views);
    cfg.pretrain_view_size =
        detail::cfg_int(p, "/pretrain", "view_size", cfg.pretrain_view_size);
    if (cfg.pretrain_points < 1 || cfg.pretrain_views < 1 ||
        cfg.pretrain_view_size < 16)
      throw ValidationError("/pretrain: values out of range");
  }
  if (j.contains("tip")) {
    const nlohmann::json& t = j["tip"];
    if (!t.is_object()) throw ValidationError("/tip: expected an object");
    detail::reject_unknown(t, "/tip", {"samples"});
    cfg.tip_samples = detail::cfg_int(t, "/tip", "samples", cfg.tip_samples);
    if (cfg.tip_samples < 1) throw ValidationError("/tip/samples: must be >= 1");
  }
  if (j.contains("paths")) {
    const nlohmann::json& p = j["paths"];
    if (!p.is_object()) throw ValidationError("/paths: expected an object");
    detail::reject_unknown(p, "/paths", {"chain", "frames", "model", "output"});
    cfg.chain_path = detail::cfg_str(p, "/paths", "chain", cfg.chain_path);
    cfg.frames_dir = detail::cfg_str(p, "/paths", "frames", cfg.frames_dir);
    cfg.model_path = detail::cfg_str(p, "/paths", "model", cfg.model_path);
    cfg.output_dir = detail::cfg_str(p, "/paths", "output", cfg.output_dir);
  }
  return cfg;
}

inline PipelineConfig load_pipeline_config(const std::string& path) {
  return parse_pipeline_config(detail::read_text_file(path));
}

// Stable content hash of the raw config text, recorded in run manifests.
inline std::string config_hash(const std::string& text) {
  const uint32_t crc = uint32_t(
      crc32(0L, reinterpret_cast<const Bytef*>(text.data()), uInt(text.size())));
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%08x", crc);
  return buf;
}

}  // namespace artsplat
