// Copyright 2026 The posetrack Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "posetrack/annotation.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include "posetrack/error.hpp"

namespace posetrack
{

using geometry::CameraIntrinsics;
using geometry::CameraRig;
using geometry::CuboidMarkers;
using geometry::CuboidSpec;
using geometry::EulerAngles;
using geometry::Pixel;
using geometry::Pose;
using geometry::SphericalParams;
using geometry::Vec3;

ObjectAnnotation make_annotation(const CameraRig& rig, const CuboidSpec& cuboid,
                                 const Pose& object_in_world)
{
  const Pose object_in_camera = geometry::compose(geometry::invert(rig.extrinsic_pose), object_in_world);

  ObjectAnnotation a;
  a.camera_id = rig.camera_id;
  a.intrinsics = rig.intrinsics;
  a.camera_pose = rig.extrinsic_pose;
  a.cuboid = cuboid;
  a.cuboid_camera = geometry::cuboid_markers(cuboid, object_in_camera);
  a.cuboid_world = geometry::cuboid_markers(cuboid, object_in_world);

  a.screen_points.origin = geometry::project(rig.intrinsics, object_in_camera.translation);
  const auto corners = geometry::cuboid_corners(cuboid, object_in_camera);
  for (std::size_t i = 0; i < corners.size(); ++i) {
    a.screen_points.corners[i] = geometry::project(rig.intrinsics, corners[i]);
  }
  a.spherical = geometry::spherical_params(object_in_camera);
  return a;
}

namespace io
{

namespace
{

template <typename T>
T get(const json& j, const char* key, std::string_view context)
{
  if (!j.contains(key)) {
    throw Error(Errc::ParseError, std::string(context) + ": missing field '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, std::string(context) + "." + key + ": " + e.what());
  }
}

}  // namespace

void expect_keys(const json& j, std::initializer_list<std::string_view> allowed,
                 std::string_view context)
{
  if (!j.is_object()) {
    throw Error(Errc::ParseError, std::string(context) + ": expected a JSON object");
  }
  for (const auto& item : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      throw Error(Errc::ParseError,
                  std::string(context) + ": unknown field '" + item.key() + "'");
    }
  }
}

json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json to_json(const EulerAngles& e)
{
  return {{"yaw", e.yaw}, {"pitch", e.pitch}, {"roll", e.roll}};
}

json to_json(const Pose& p)
{
  return {{"translation", to_json(p.translation)}, {"rotation", to_json(p.rotation)}};
}

json to_json(const Pixel& p) { return json::array({p.u, p.v}); }

json to_json(const CameraIntrinsics& k)
{
  return {{"horizontal_fov", k.horizontal_fov}, {"width", k.width}, {"height", k.height}};
}

json to_json(const CameraRig& rig)
{
  return {{"camera_id", rig.camera_id},
          {"intrinsics", to_json(rig.intrinsics)},
          {"pose", to_json(rig.extrinsic_pose)}};
}

json to_json(const CuboidSpec& c)
{
  return {{"length", c.length}, {"width", c.width}, {"height", c.height}};
}

json to_json(const CuboidMarkers& m)
{
  return {{"base_center", to_json(m.base_center)},
          {"base_right", to_json(m.base_right)},
          {"base_front", to_json(m.base_front)},
          {"top_center", to_json(m.top_center)}};
}

json to_json(const SphericalParams& s)
{
  return {{"r", s.r}, {"theta", s.theta}, {"phi", s.phi}};
}

json to_json(const ObjectAnnotation& a)
{
  json corners = json::array();
  for (const auto& c : a.screen_points.corners) {
    corners.push_back(to_json(c));
  }
  return {
    {"record_id", a.record_id},
    {"source", a.source},
    {"frame_id", a.frame_id},
    {"timestamp", a.timestamp},
    {"camera_id", a.camera_id},
    {"object_id", a.object_id},
    {"class_id", a.class_id},
    {"intrinsics", to_json(a.intrinsics)},
    {"camera_pose", to_json(a.camera_pose)},
    {"cuboid", to_json(a.cuboid)},
    {"cuboid_camera", to_json(a.cuboid_camera)},
    {"cuboid_world", to_json(a.cuboid_world)},
    {"screen_points", {{"origin", to_json(a.screen_points.origin)}, {"corners", corners}}},
    {"spherical", to_json(a.spherical)},
  };
}

Vec3 vec3_from_json(const json& j)
{
  if (!j.is_array() || j.size() != 3) {
    throw Error(Errc::ParseError, "expected a 3-element array");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

EulerAngles euler_from_json(const json& j)
{
  expect_keys(j, {"yaw", "pitch", "roll"}, "rotation");
  return {j.value("yaw", 0.0), j.value("pitch", 0.0), j.value("roll", 0.0)};
}

Pose pose_from_json(const json& j)
{
  expect_keys(j, {"translation", "rotation"}, "pose");
  Pose p;
  if (j.contains("translation")) {
    p.translation = vec3_from_json(j.at("translation"));
  }
  if (j.contains("rotation")) {
    p.rotation = euler_from_json(j.at("rotation"));
  }
  return p;
}

Pixel pixel_from_json(const json& j)
{
  if (!j.is_array() || j.size() != 2) {
    throw Error(Errc::ParseError, "expected a 2-element pixel array");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

CameraIntrinsics intrinsics_from_json(const json& j)
{
  expect_keys(j, {"horizontal_fov", "width", "height"}, "intrinsics");
  CameraIntrinsics k;
  k.horizontal_fov = get<double>(j, "horizontal_fov", "intrinsics");
  k.width = get<int>(j, "width", "intrinsics");
  k.height = get<int>(j, "height", "intrinsics");
  return k;
}

CameraRig rig_from_json(const json& j)
{
  expect_keys(j, {"camera_id", "intrinsics", "pose", "look_at"}, "camera rig");
  CameraRig rig;
  rig.camera_id = get<std::string>(j, "camera_id", "camera rig");
  rig.intrinsics = intrinsics_from_json(j.at("intrinsics"));
  if (j.contains("pose") == j.contains("look_at")) {
    throw Error(Errc::ParseError, "camera rig '" + rig.camera_id +
                                      "': exactly one of 'pose' or 'look_at' is required");
  }
  if (j.contains("pose")) {
    rig.extrinsic_pose = pose_from_json(j.at("pose"));
  } else {
    const json& la = j.at("look_at");
    expect_keys(la, {"eye", "target"}, "look_at");
    rig.extrinsic_pose = geometry::look_at(vec3_from_json(la.at("eye")), vec3_from_json(la.at("target")));
  }
  return rig;
}

CuboidSpec cuboid_from_json(const json& j)
{
  expect_keys(j, {"length", "width", "height"}, "cuboid");
  return {get<double>(j, "length", "cuboid"), get<double>(j, "width", "cuboid"),
          get<double>(j, "height", "cuboid")};
}

CuboidMarkers markers_from_json(const json& j)
{
  expect_keys(j, {"base_center", "base_right", "base_front", "top_center"}, "cuboid markers");
  return {vec3_from_json(j.at("base_center")), vec3_from_json(j.at("base_right")),
          vec3_from_json(j.at("base_front")), vec3_from_json(j.at("top_center"))};
}

SphericalParams spherical_from_json(const json& j)
{
  expect_keys(j, {"r", "theta", "phi"}, "spherical");
  return {get<double>(j, "r", "spherical"), get<double>(j, "theta", "spherical"),
          get<double>(j, "phi", "spherical")};
}

ObjectAnnotation annotation_from_json(const json& j)
{
  constexpr std::string_view ctx = "annotation";
  expect_keys(j,
              {"record_id", "source", "frame_id", "timestamp", "camera_id", "object_id",
               "class_id", "intrinsics", "camera_pose", "cuboid", "cuboid_camera",
               "cuboid_world", "screen_points", "spherical"},
              ctx);
  ObjectAnnotation a;
  a.record_id = get<std::string>(j, "record_id", ctx);
  a.source = get<std::string>(j, "source", ctx);
  a.frame_id = get<std::int64_t>(j, "frame_id", ctx);
  a.timestamp = get<double>(j, "timestamp", ctx);
  a.camera_id = get<std::string>(j, "camera_id", ctx);
  a.object_id = get<int>(j, "object_id", ctx);
  a.class_id = get<int>(j, "class_id", ctx);
  a.intrinsics = intrinsics_from_json(j.at("intrinsics"));
  a.camera_pose = pose_from_json(j.at("camera_pose"));
  a.cuboid = cuboid_from_json(j.at("cuboid"));
  a.cuboid_camera = markers_from_json(j.at("cuboid_camera"));
  a.cuboid_world = markers_from_json(j.at("cuboid_world"));
  const json& sp = j.at("screen_points");
  expect_keys(sp, {"origin", "corners"}, "screen_points");
  a.screen_points.origin = pixel_from_json(sp.at("origin"));
  const json& corners = sp.at("corners");
  if (!corners.is_array() || corners.size() != 8) {
    throw Error(Errc::ParseError, "screen_points.corners must hold 8 pixels");
  }
  for (std::size_t i = 0; i < 8; ++i) {
    a.screen_points.corners[i] = pixel_from_json(corners[i]);
  }
  a.spherical = spherical_from_json(j.at("spherical"));
  return a;
}

void write_annotations(std::ostream& out, const std::vector<ObjectAnnotation>& annotations)
{
  for (const auto& a : annotations) {
    out << to_json(a).dump() << '\n';
  }
}

std::vector<ObjectAnnotation> read_annotations(std::istream& in)
{
  std::vector<ObjectAnnotation> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(Errc::ParseError, "annotation line " + std::to_string(line_no) + ": " + e.what());
    }
    out.push_back(annotation_from_json(j));
  }
  return out;
}

}  // namespace io

}  // namespace posetrack
