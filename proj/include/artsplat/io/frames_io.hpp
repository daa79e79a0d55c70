#pragma once

#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "artsplat/core/types.hpp"
#include "artsplat/io/grid_io.hpp"
#include "artsplat/io/png_io.hpp"

namespace artsplat {

// A frame directory holds frames.json (count + camera), an 8-bit RGB PNG and
// an indexed-PNG semantics map per frame, and optional depth grids and JSON
// metadata (tips, correspondences). The instrument mask is semantics > 0.
struct FrameSet {
  std::vector<Frame> frames;
  Camera camera;
};

namespace detail {

inline std::string frame_stem(int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%04d", i);
  return buf;
}

inline nlohmann::json camera_to_json(const Camera& cam) {
  return {{"fx", cam.fx},         {"fy", cam.fy},     {"cx", cam.cx},
          {"cy", cam.cy},         {"width", cam.width}, {"height", cam.height},
          {"near", cam.near},     {"far", cam.far}};
}

inline Camera camera_from_json(const nlohmann::json& j, const std::string& where) {
  Camera cam;
  for (const char* key : {"fx", "fy", "cx", "cy", "width", "height", "near", "far"}) {
    if (!j.contains(key) || !j[key].is_number())
      throw ValidationError(where + "/" + key + ": missing or non-numeric");
  }
  cam.fx = j["fx"].get<double>();
  cam.fy = j["fy"].get<double>();
  cam.cx = j["cx"].get<double>();
  cam.cy = j["cy"].get<double>();
  cam.width = j["width"].get<int>();
  cam.height = j["height"].get<int>();
  cam.near = j["near"].get<double>();
  cam.far = j["far"].get<double>();
  if (!cam.is_valid()) throw ValidationError(where + ": invalid camera");
  return cam;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  f << text;
  if (!f) throw IoError("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace detail

inline void save_frame_set(const std::string& dir, const std::vector<Frame>& frames,
                           const Camera& camera) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::json index = {{"format", "frame-set"},
                          {"version", 1},
                          {"count", int(frames.size())},
                          {"camera", detail::camera_to_json(camera)}};
  detail::write_text_file(dir + "/frames.json", index.dump(2) + "\n");
  for (size_t i = 0; i < frames.size(); ++i) {
    const Frame& f = frames[i];
    const std::string stem = dir + "/" + detail::frame_stem(int(i));
    save_png_rgb(stem + ".png", f.rgb);
    save_png_indexed(stem + "_sem.png", f.part_semantics);
    if (f.depth) save_grid(stem + "_depth.f32", *f.depth);
    nlohmann::json meta;
    if (f.tips_2d) {
      nlohmann::json tips = nlohmann::json::array();
      for (const Vec2d& t : *f.tips_2d) tips.push_back({t.x(), t.y()});
      meta["tips"] = tips;
    }
    if (f.correspondences) {
      nlohmann::json corr = nlohmann::json::array();
      for (const auto& [px, pt] : *f.correspondences)
        corr.push_back({{"pixel", {px.x(), px.y()}},
                        {"point", {pt.x(), pt.y(), pt.z()}}});
      meta["correspondences"] = corr;
    }
    if (!meta.empty()) detail::write_text_file(stem + "_meta.json", meta.dump(2) + "\n");
  }
}

inline FrameSet load_frame_set(const std::string& dir) {
  namespace fs = std::filesystem;
  const std::string index_path = dir + "/frames.json";
  if (!fs::exists(index_path)) throw IoError("missing " + index_path);
  nlohmann::json index;
  try {
    index = nlohmann::json::parse(detail::read_text_file(index_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(index_path + ": " + e.what());
  }
  if (!index.contains("format") || index["format"] != "frame-set")
    throw ValidationError(index_path + "/format: not a frame-set");
  if (!index.contains("count") || !index["count"].is_number_integer())
    throw ValidationError(index_path + "/count: missing or non-integer");
  FrameSet set;
  set.camera = detail::camera_from_json(index.value("camera", nlohmann::json::object()),
                                        index_path + "/camera");
  const int count = index["count"].get<int>();
  if (count < 0) throw ValidationError(index_path + "/count: negative");
  for (int i = 0; i < count; ++i) {
    const std::string stem = dir + "/" + detail::frame_stem(i);
    Frame f;
    f.rgb = load_png_rgb(stem + ".png");
    f.part_semantics = load_png_indexed(stem + "_sem.png");
    if (f.part_semantics.height() != f.rgb.height() ||
        f.part_semantics.width() != f.rgb.width() ||
        f.rgb.height() != set.camera.height || f.rgb.width() != set.camera.width)
      throw ValidationError(stem + ": image/semantics/camera size mismatch");
    f.instrument_mask = GridU8(f.rgb.height(), f.rgb.width(), 1);
    for (int y = 0; y < f.rgb.height(); ++y)
      for (int x = 0; x < f.rgb.width(); ++x)
        f.instrument_mask.at(y, x, 0) = f.part_semantics.at(y, x, 0) ? 1 : 0;
    if (fs::exists(stem + "_depth.f32")) f.depth = load_grid(stem + "_depth.f32");
    if (fs::exists(stem + "_meta.json")) {
      nlohmann::json meta;
      try {
        meta = nlohmann::json::parse(detail::read_text_file(stem + "_meta.json"));
      } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(stem + "_meta.json: " + e.what());
      }
      const std::string where = stem + "_meta.json";
      if (meta.contains("tips")) {
        if (!meta["tips"].is_array())
          throw ValidationError(where + "/tips: expected an array");
        std::vector<Vec2d> tips;
        for (size_t k = 0; k < meta["tips"].size(); ++k) {
          const auto& t = meta["tips"][k];
          if (!t.is_array() || t.size() != 2)
            throw ValidationError(where + "/tips/" + std::to_string(k) +
                                  ": expected [x, y]");
          tips.emplace_back(t[0].get<double>(), t[1].get<double>());
        }
        f.tips_2d = std::move(tips);
      }
      if (meta.contains("correspondences")) {
        if (!meta["correspondences"].is_array())
          throw ValidationError(where + "/correspondences: expected an array");
        std::vector<std::pair<Vec2d, Vec3d>> corr;
        for (size_t k = 0; k < meta["correspondences"].size(); ++k) {
          const auto& c = meta["correspondences"][k];
          const std::string cw = where + "/correspondences/" + std::to_string(k);
          if (!c.is_object() || !c.contains("pixel") || !c.contains("point") ||
              !c["pixel"].is_array() || c["pixel"].size() != 2 ||
              !c["point"].is_array() || c["point"].size() != 3)
            throw ValidationError(cw + ": expected {pixel: [u,v], point: [x,y,z]}");
          corr.emplace_back(
              Vec2d(c["pixel"][0].get<double>(), c["pixel"][1].get<double>()),
              Vec3d(c["point"][0].get<double>(), c["point"][1].get<double>(),
                    c["point"][2].get<double>()));
        }
        f.correspondences = std::move(corr);
      }
    }
    set.frames.push_back(std::move(f));
  }
  return set;
}

}  // namespace artsplat
