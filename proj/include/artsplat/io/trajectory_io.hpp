#pragma once

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>
#include <string>

#include "artsplat/core/common.hpp"
#include "artsplat/sapet/track.hpp"

namespace artsplat {

// Doubles are written with %.17g so a save/load cycle reproduces every pose
// bit for bit.
inline std::string trajectory_to_json(const Trajectory& traj) {
  std::ostringstream os;
  os << "{\n  \"format\": \"trajectory\",\n  \"version\": 1,\n  \"frames\": [";
  for (size_t i = 0; i < traj.frames.size(); ++i) {
    const TrackedFrame& tf = traj.frames[i];
    const PoseEstimate& e = tf.estimate;
    os << (i ? ",\n    {" : "\n    {");
    os << "\"frame_index\": " << tf.frame_index << ", \"theta\": [";
    for (int j = 0; j < 3; ++j) os << (j ? ", " : "") << g17(e.q.theta[j]);
    os << "], \"xi\": [";
    for (int j = 0; j < 6; ++j) os << (j ? ", " : "") << g17(e.q.xi[j]);
    os << "], \"final_loss\": " << g17(e.final_loss)
       << ", \"sil_loss\": " << g17(e.sil_loss)
       << ", \"tip_loss\": " << g17(e.tip_loss)
       << ", \"reg_loss\": " << g17(e.reg_loss)
       << ", \"iterations_used\": " << e.iterations_used
       << ", \"converged\": " << (e.converged ? "true" : "false")
       << ", \"failed\": " << (e.failed ? "true" : "false")
       << ", \"reseeded\": " << (tf.reseeded ? "true" : "false")
       << ", \"note\": " << nlohmann::json(e.note).dump() << "}";
  }
  os << "\n  ]\n}\n";
  return os.str();
}

inline void save_trajectory(const std::string& path, const Trajectory& traj) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  f << trajectory_to_json(traj);
  if (!f) throw IoError("write failed: " + path);
}

namespace detail {

inline const nlohmann::json& traj_field(const nlohmann::json& obj,
                                        const std::string& where,
                                        const char* key) {
  auto it = obj.find(key);
  if (it == obj.end())
    throw ValidationError(where + "/" + key + ": missing field");
  return *it;
}

inline double traj_number(const nlohmann::json& obj, const std::string& where,
                          const char* key) {
  const nlohmann::json& v = traj_field(obj, where, key);
  if (!v.is_number())
    throw ValidationError(where + "/" + key + ": expected a number");
  return v.get<double>();
}

inline bool traj_bool(const nlohmann::json& obj, const std::string& where,
                      const char* key) {
  const nlohmann::json& v = traj_field(obj, where, key);
  if (!v.is_boolean())
    throw ValidationError(where + "/" + key + ": expected a boolean");
  return v.get<bool>();
}

}  // namespace detail

inline Trajectory parse_trajectory(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("trajectory JSON: ") + e.what());
  }
  if (!j.is_object()) throw ValidationError("/: expected an object");
  if (detail::traj_field(j, "", "format").get<std::string>() != "trajectory")
    throw ValidationError("/format: not a trajectory file");
  if (int(detail::traj_number(j, "", "version")) != 1)
    throw ValidationError("/version: unsupported version");
  const nlohmann::json& frames = detail::traj_field(j, "", "frames");
  if (!frames.is_array()) throw ValidationError("/frames: expected an array");

  Trajectory traj;
  for (size_t i = 0; i < frames.size(); ++i) {
    const std::string where = "/frames/" + std::to_string(i);
    const nlohmann::json& fj = frames[i];
    if (!fj.is_object()) throw ValidationError(where + ": expected an object");
    TrackedFrame tf;
    tf.frame_index = int(detail::traj_number(fj, where, "frame_index"));
    const nlohmann::json& th = detail::traj_field(fj, where, "theta");
    if (!th.is_array() || th.size() != 3)
      throw ValidationError(where + "/theta: expected 3 numbers");
    for (int k = 0; k < 3; ++k) tf.estimate.q.theta[k] = th[k].get<double>();
    const nlohmann::json& xi = detail::traj_field(fj, where, "xi");
    if (!xi.is_array() || xi.size() != 6)
      throw ValidationError(where + "/xi: expected 6 numbers");
    for (int k = 0; k < 6; ++k) tf.estimate.q.xi[k] = xi[k].get<double>();
    tf.estimate.final_loss = detail::traj_number(fj, where, "final_loss");
    tf.estimate.sil_loss = detail::traj_number(fj, where, "sil_loss");
    tf.estimate.tip_loss = detail::traj_number(fj, where, "tip_loss");
    tf.estimate.reg_loss = detail::traj_number(fj, where, "reg_loss");
    tf.estimate.iterations_used =
        int(detail::traj_number(fj, where, "iterations_used"));
    tf.estimate.converged = detail::traj_bool(fj, where, "converged");
    tf.estimate.failed = detail::traj_bool(fj, where, "failed");
    tf.reseeded = detail::traj_bool(fj, where, "reseeded");
    const nlohmann::json& note = detail::traj_field(fj, where, "note");
    if (!note.is_string())
      throw ValidationError(where + "/note: expected a string");
    tf.estimate.note = note.get<std::string>();
    traj.frames.push_back(std::move(tf));
  }
  return traj;
}

inline Trajectory load_trajectory(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_trajectory(ss.str());
}

}  // namespace artsplat
