#pragma once

// JSON encoders shared by the persistence code. Internal to camo_core.

#include <filesystem>
#include <fstream>
#include <string>

#include "camo/box.hpp"
#include "camo/error.hpp"
#include "camo/geometry.hpp"
#include "json.hpp"

namespace camo {

using Json = nlohmann::json;

inline Json to_json(const PatchConfig& c) {
  return Json{{"rel_width", c.rel_width},
              {"rel_height", c.rel_height},
              {"placement", to_string(c.placement)},
              {"count", c.count},
              {"side_gap", c.side_gap},
              {"id", c.id()}};
}

inline PatchConfig patch_config_from_json(const Json& j) {
  PatchConfig c = PatchConfig::make(j.at("rel_width").get<double>(),
                                    j.at("rel_height").get<double>(),
                                    parse_placement(j.at("placement").get<std::string>()));
  if (j.contains("side_gap")) c.side_gap = j.at("side_gap").get<double>();
  c.validate();
  return c;
}

inline Json to_json(const Range& r) { return Json::array({r.min, r.max}); }
inline Range range_from_json(const Json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

inline Json to_json(const TransformRanges& t) {
  return Json{{"scale", to_json(t.scale)},
              {"noise", to_json(t.noise)},
              {"contrast", to_json(t.contrast)},
              {"brightness", to_json(t.brightness)}};
}

inline TransformRanges transform_ranges_from_json(const Json& j) {
  TransformRanges t;
  if (j.contains("scale")) t.scale = range_from_json(j.at("scale"));
  if (j.contains("noise")) t.noise = range_from_json(j.at("noise"));
  if (j.contains("contrast")) t.contrast = range_from_json(j.at("contrast"));
  if (j.contains("brightness")) t.brightness = range_from_json(j.at("brightness"));
  t.validate();
  return t;
}

inline Json to_json(const Box& b) { return Json::array({b.cx, b.cy, b.w, b.h}); }
inline Box box_from_json(const Json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>(),
          j.at(3).get<double>()};
}

inline Json to_json(const Annotation& a) {
  return Json{{"image_id", a.image_id}, {"class_id", a.class_id}, {"box", to_json(a.box)}};
}
inline Annotation annotation_from_json(const Json& j) {
  return {j.at("image_id").get<std::string>(), j.at("class_id").get<int>(),
          box_from_json(j.at("box"))};
}

inline Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed JSON in '" + path.string() + "': " + e.what());
  }
}

inline void write_json_file(const std::filesystem::path& path, const Json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

}  // namespace camo
