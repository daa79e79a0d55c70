#pragma once

#include <artsplat/core/common.hpp>
#include <artsplat/kin/se3.hpp>

#include <array>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace artsplat {

// Part indices. The nesting is fixed: the wrist hangs off the shaft via
// joint 1, the right gripper off the wrist via joint 2, and the left tooltip
// off the right gripper via joint 3.
enum PartId : int { kShaft = 0, kWrist = 1, kGripperRight = 2, kTooltipLeft = 3 };
inline constexpr int kNumParts = 4;
inline constexpr int kNumJoints = 3;

struct JointSpec {
  RigidTransform frame;        // parent-part frame -> joint frame
  Vec3d axis = Vec3d::UnitX(); // unit rotation axis, joint frame
  double limit_min = -kPi;
  double limit_max = kPi;
};

struct KinematicChain {
  std::array<std::string, kNumParts> part_names{"shaft", "wrist", "gripper_right",
                                                "tooltip_left"};
  std::array<JointSpec, kNumJoints> joints;  // indexed by joint number - 1
  // Tool tips, expressed in the local frame of the two gripper parts.
  Vec3d tip_right = Vec3d::Zero();   // on part kGripperRight
  Vec3d tip_left = Vec3d::Zero();    // on part kTooltipLeft

  const Vec3d& tip_local(int part_id) const {
    if (part_id == kGripperRight) return tip_right;
    if (part_id == kTooltipLeft) return tip_left;
    throw ValidationError("tip_local: part " + std::to_string(part_id) + " carries no tip");
  }

  void validate() const {
    for (int i = 0; i < kNumParts; ++i) {
      if (part_names[i].empty()) throw ValidationError("chain: empty part name");
      for (int j = 0; j < i; ++j)
        if (part_names[i] == part_names[j])
          throw ValidationError("chain: duplicate part name " + part_names[i]);
    }
    for (int j = 0; j < kNumJoints; ++j) {
      const JointSpec& js = joints[j];
      if (!js.frame.is_valid(1e-7))
        throw ValidationError("chain: joint " + std::to_string(j + 1) +
                              " frame is not a rigid transform");
      if (std::abs(js.axis.norm() - 1.0) > 1e-7)
        throw ValidationError("chain: joint " + std::to_string(j + 1) + " axis is not unit");
      if (!(js.limit_min < js.limit_max))
        throw ValidationError("chain: joint " + std::to_string(j + 1) + " has empty limits");
    }
  }

  bool within_limits(const std::array<double, 3>& theta, double slack = 0.0) const {
    for (int j = 0; j < kNumJoints; ++j)
      if (theta[j] < joints[j].limit_min - slack || theta[j] > joints[j].limit_max + slack)
        return false;
    return true;
  }

  std::array<double, 3> clamp_theta(std::array<double, 3> theta) const {
    for (int j = 0; j < kNumJoints; ++j)
      theta[j] = std::clamp(theta[j], joints[j].limit_min, joints[j].limit_max);
    return theta;
  }

  std::array<double, 3> mid_range_theta() const {
    std::array<double, 3> t{};
    for (int j = 0; j < kNumJoints; ++j)
      t[j] = 0.5 * (joints[j].limit_min + joints[j].limit_max);
    return t;
  }
};

// ---------------------------------------------------------------------------
// Text format (chain-v1): line-oriented "key: values", '#' starts a comment.
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> chain_tokens(const std::string& line) {
  std::string body = line.substr(0, line.find('#'));
  for (char& c : body)
    if (c == ':') c = ' ';
  std::istringstream is(body);
  std::vector<std::string> toks;
  std::string t;
  while (is >> t) toks.push_back(t);
  return toks;
}

inline double chain_num(const std::string& tok, int lineno) {
  try {
    size_t used = 0;
    double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw IoError("chain line " + std::to_string(lineno) + ": bad number '" + tok + "'");
  }
}

}  // namespace detail

inline std::string serialize_chain(const KinematicChain& chain) {
  chain.validate();
  std::ostringstream os;
  os << "format: chain-v1\n";
  os << "parts:";
  for (const auto& n : chain.part_names) os << ' ' << n;
  os << "\n";
  for (int j = 0; j < kNumJoints; ++j) {
    const JointSpec& js = chain.joints[j];
    os << "\njoint: " << (j + 1) << "\n";
    os << "rotation:";
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) os << ' ' << g17(js.frame.rotation(r, c));
    os << "\ntranslation:";
    for (int k = 0; k < 3; ++k) os << ' ' << g17(js.frame.translation[k]);
    os << "\naxis:";
    for (int k = 0; k < 3; ++k) os << ' ' << g17(js.axis[k]);
    os << "\nlimits: " << g17(js.limit_min) << ' ' << g17(js.limit_max) << "\n";
  }
  os << "\ntip_right:";
  for (int k = 0; k < 3; ++k) os << ' ' << g17(chain.tip_right[k]);
  os << "\ntip_left:";
  for (int k = 0; k < 3; ++k) os << ' ' << g17(chain.tip_left[k]);
  os << "\n";
  return os.str();
}

inline KinematicChain parse_chain(const std::string& text) {
  KinematicChain chain;
  std::istringstream is(text);
  std::string line;
  int lineno = 0, joint = -1;
  bool saw_format = false;
  auto need = [&](const std::vector<std::string>& toks, size_t n) {
    if (toks.size() != n)
      throw IoError("chain line " + std::to_string(lineno) + ": expected " + std::to_string(n - 1) +
                    " values after '" + toks[0] + "'");
  };
  auto cur_joint = [&]() -> JointSpec& {
    if (joint < 0)
      throw IoError("chain line " + std::to_string(lineno) + ": field outside a joint block");
    return chain.joints[joint];
  };
  while (std::getline(is, line)) {
    ++lineno;
    auto toks = detail::chain_tokens(line);
    if (toks.empty()) continue;
    const std::string& key = toks[0];
    if (key == "format") {
      need(toks, 2);
      if (toks[1] != "chain-v1") throw IoError("chain: unsupported format '" + toks[1] + "'");
      saw_format = true;
    } else if (key == "parts") {
      need(toks, 1 + kNumParts);
      for (int i = 0; i < kNumParts; ++i) chain.part_names[i] = toks[1 + i];
    } else if (key == "joint") {
      need(toks, 2);
      const int j = int(detail::chain_num(toks[1], lineno));
      if (j < 1 || j > kNumJoints)
        throw IoError("chain line " + std::to_string(lineno) + ": joint index out of range");
      joint = j - 1;
    } else if (key == "rotation") {
      need(toks, 10);
      Mat3d r;
      for (int k = 0; k < 9; ++k) r(k / 3, k % 3) = detail::chain_num(toks[1 + k], lineno);
      cur_joint().frame.rotation = r;
    } else if (key == "translation") {
      need(toks, 4);
      for (int k = 0; k < 3; ++k)
        cur_joint().frame.translation[k] = detail::chain_num(toks[1 + k], lineno);
    } else if (key == "axis") {
      need(toks, 4);
      for (int k = 0; k < 3; ++k) cur_joint().axis[k] = detail::chain_num(toks[1 + k], lineno);
    } else if (key == "limits") {
      need(toks, 3);
      cur_joint().limit_min = detail::chain_num(toks[1], lineno);
      cur_joint().limit_max = detail::chain_num(toks[2], lineno);
    } else if (key == "tip_right" || key == "tip_left") {
      need(toks, 4);
      Vec3d& tip = key == "tip_right" ? chain.tip_right : chain.tip_left;
      for (int k = 0; k < 3; ++k) tip[k] = detail::chain_num(toks[1 + k], lineno);
    } else {
      throw IoError("chain line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  if (!saw_format) throw IoError("chain: missing 'format: chain-v1' header");
  chain.validate();
  return chain;
}

inline KinematicChain load_chain(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open chain file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return parse_chain(os.str());
}

inline void save_chain(const std::string& path, const KinematicChain& chain) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write chain file: " + path);
  out << serialize_chain(chain);
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace artsplat
