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

#ifndef POSETRACK_ANNOTATION_HPP_
#define POSETRACK_ANNOTATION_HPP_

#include <array>
#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "posetrack/geometry.hpp"

namespace posetrack
{

using json = nlohmann::json;

/// Ground truth for one object seen by one camera in one frame.
///
/// The three cuboid fields describe the same cuboid: in the camera frame, in
/// the world frame, and projected onto the image.
struct ObjectAnnotation
{
  struct ScreenPoints
  {
    geometry::Pixel origin;
    std::array<geometry::Pixel, 8> corners;  ///< cuboid_corners order
  };

  std::string record_id;
  std::string source;  ///< dome or sequence id
  std::int64_t frame_id = 0;
  double timestamp = 0.0;
  std::string camera_id;
  int object_id = 0;
  int class_id = 0;

  geometry::CameraIntrinsics intrinsics;
  geometry::Pose camera_pose;  ///< camera in world
  geometry::CuboidSpec cuboid;

  geometry::CuboidMarkers cuboid_camera;
  geometry::CuboidMarkers cuboid_world;
  ScreenPoints screen_points;
  geometry::SphericalParams spherical;

  geometry::Pose object_in_camera() const { return geometry::pose_from_markers(cuboid_camera); }
  geometry::Pose object_in_world() const { return geometry::pose_from_markers(cuboid_world); }
  geometry::CameraRig rig() const { return {camera_id, intrinsics, camera_pose}; }
};

/// Builds a fully populated annotation for an object at `object_in_world`.
/// Throws Errc::BehindCamera if any cuboid corner lies behind the camera.
ObjectAnnotation make_annotation(const geometry::CameraRig& rig,
                                 const geometry::CuboidSpec& cuboid,
                                 const geometry::Pose& object_in_world);

// JSON helpers shared by every module's file formats.
namespace io
{

/// Throws Errc::ParseError if `j` is not an object or carries a key outside `allowed`.
void expect_keys(const json& j, std::initializer_list<std::string_view> allowed,
                 std::string_view context);

json to_json(const geometry::Vec3& v);
json to_json(const geometry::EulerAngles& e);
json to_json(const geometry::Pose& p);
json to_json(const geometry::Pixel& p);
json to_json(const geometry::CameraIntrinsics& k);
json to_json(const geometry::CameraRig& rig);
json to_json(const geometry::CuboidSpec& c);
json to_json(const geometry::CuboidMarkers& m);
json to_json(const geometry::SphericalParams& s);
json to_json(const ObjectAnnotation& a);

geometry::Vec3 vec3_from_json(const json& j);
geometry::EulerAngles euler_from_json(const json& j);
geometry::Pose pose_from_json(const json& j);
geometry::Pixel pixel_from_json(const json& j);
geometry::CameraIntrinsics intrinsics_from_json(const json& j);
/// Accepts either {"pose": ...} or {"look_at": {"eye": [...], "target": [...]}}.
geometry::CameraRig rig_from_json(const json& j);
geometry::CuboidSpec cuboid_from_json(const json& j);
geometry::CuboidMarkers markers_from_json(const json& j);
geometry::SphericalParams spherical_from_json(const json& j);
ObjectAnnotation annotation_from_json(const json& j);

/// One compact JSON object per line.
void write_annotations(std::ostream& out, const std::vector<ObjectAnnotation>& annotations);
std::vector<ObjectAnnotation> read_annotations(std::istream& in);

}  // namespace io

}  // namespace posetrack

#endif  // POSETRACK_ANNOTATION_HPP_
