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

#ifndef POSETRACK_GEOMETRY_HPP_
#define POSETRACK_GEOMETRY_HPP_

#include <array>
#include <numbers>
#include <span>
#include <string>

#include <Eigen/Core>

namespace posetrack::geometry
{

// Frame conventions used throughout the library:
//   camera frame: X right, Y down, Z forward (optical axis)
//   world frame:  X east, Y north, Z up
//   object frame: X lateral (width), Y forward (length), Z up (height),
//                 origin at the center of the cuboid's lower face

inline constexpr double kPi = std::numbers::pi;

using Vec3 = Eigen::Vector3d;
using RotationMatrix = Eigen::Matrix3d;

/// Extrinsic Z(yaw) * Y(pitch) * X(roll) angles, radians.
struct EulerAngles
{
  double yaw = 0.0;    ///< (-pi, pi]
  double pitch = 0.0;  ///< [-pi/2, pi/2]
  double roll = 0.0;   ///< (-pi, pi]; 0 whenever |pitch| == pi/2
};

/// Reduces an angle to (-pi, pi].
double wrap_angle(double angle) noexcept;

RotationMatrix rot_x(double angle);
RotationMatrix rot_y(double angle);
RotationMatrix rot_z(double angle);

RotationMatrix euler_to_matrix(const EulerAngles& e);

/// Inverse of euler_to_matrix. At gimbal lock the roll is folded into the yaw
/// so that the result has roll == 0. Throws Errc::NotARotation when R is not
/// orthonormal with det +1 to within 1e-6.
EulerAngles matrix_to_euler(const RotationMatrix& r);

bool is_rotation(const RotationMatrix& r, double tol = 1e-9);

/// Rigid transform mapping child-frame points into the parent frame:
/// p_parent = R * p_child + translation.
struct Pose
{
  EulerAngles rotation;
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {}; }
  static Pose from_matrix(const RotationMatrix& r, const Vec3& t);

  RotationMatrix matrix() const { return euler_to_matrix(rotation); }
  Vec3 apply(const Vec3& p) const { return matrix() * p + translation; }
};

/// compose(a, b) applies b first, then a.
Pose compose(const Pose& a, const Pose& b);
Pose invert(const Pose& a);

/// Level camera looking from eye at target (world Z up, no roll).
Pose look_at(const Vec3& eye, const Vec3& target);

struct Pixel
{
  double u = 0.0;
  double v = 0.0;
};

/// Pinhole camera with square pixels; vertical FOV follows from the aspect.
struct CameraIntrinsics
{
  double horizontal_fov = kPi / 2.0;  ///< radians, (0, pi)
  int width = 0;
  int height = 0;

  double focal_px() const;
  double aspect() const { return static_cast<double>(width) / height; }
  Pixel center() const { return {width / 2.0, height / 2.0}; }
  double vertical_fov() const;
  bool contains(const Pixel& px) const;
  void validate() const;
};

struct CameraRig
{
  std::string camera_id;
  CameraIntrinsics intrinsics;
  Pose extrinsic_pose;  ///< camera frame expressed in the world frame

  Vec3 position() const { return extrinsic_pose.translation; }
};

/// Throws Errc::BehindCamera when the point's depth is not positive.
Pixel project(const CameraIntrinsics& k, const Vec3& p_cam);

/// Point on the pixel's ray at Euclidean distance `distance` from the focus.
Vec3 backproject(const CameraIntrinsics& k, const Pixel& px, double distance);

struct CuboidSpec
{
  double length = 1.0;  ///< along object Y
  double width = 1.0;   ///< along object X
  double height = 1.0;  ///< along object Z

  void validate() const;
};

struct CuboidMarkers
{
  Vec3 base_center = Vec3::Zero();
  Vec3 base_right = Vec3::Zero();
  Vec3 base_front = Vec3::Zero();
  Vec3 top_center = Vec3::Zero();
};

CuboidMarkers cuboid_markers(const CuboidSpec& spec, const Pose& pose);
CuboidMarkers transform(const Pose& pose, const CuboidMarkers& m);

/// Corner order: bit 0 selects +X, bit 1 selects +Y, bit 2 selects the top face.
std::array<Vec3, 8> cuboid_corners(const CuboidSpec& spec, const Pose& pose);

/// Recovers the rigid pose whose markers these are (nearest rotation to the
/// marker directions).
Pose pose_from_markers(const CuboidMarkers& m);

/// Camera position seen from the object: r is the focus-to-origin distance,
/// theta the yaw around the object's vertical axis (0 = in front of the
/// object, pi/2 = on its left) and phi the elevation above its base plane.
struct SphericalParams
{
  double r = 0.0;
  double theta = 0.0;
  double phi = 0.0;
};

SphericalParams spherical_params(const Pose& object_in_camera);

/// (r cos(phi) cos(theta), r cos(phi) sin(theta), r sin(phi)) in the object's
/// (forward, left, up) axes.
Vec3 spherical_to_cartesian(const SphericalParams& s);

/// Ray frame of a camera-frame point: X along the viewing ray, Z the camera's
/// up direction orthogonalized against it, Y = Z x X. Returned as the
/// rotation taking ray-frame coordinates into camera coordinates.
RotationMatrix ray_frame(const Vec3& p_cam);

/// Object orientation relative to the ray frame of its origin. Orientation
/// anchors and codec offsets live in this frame, so they do not depend on
/// where in the image the object appears.
RotationMatrix ray_relative_rotation(const Pose& object_in_camera);

/// Inverse of ray_relative_rotation: camera-frame rotation of an object whose
/// origin sits at origin_cam with the given ray-relative rotation.
RotationMatrix camera_rotation_from_ray(const Vec3& origin_cam, const RotationMatrix& ray_rel);

/// Ray-relative rotation of an upright, unrolled object seen from (theta, phi).
RotationMatrix view_rotation(double theta, double phi);

/// Chordal L2 mean on SO(3). Throws Errc::EmptyInput on an empty span.
RotationMatrix so3_mean(std::span<const RotationMatrix> rotations);

/// Sum of squared Frobenius distances from m to every rotation.
double chordal_cost(const RotationMatrix& m, std::span<const RotationMatrix> rotations);

/// Rotation angle of a^T b, in [0, pi].
double geodesic_distance(const RotationMatrix& a, const RotationMatrix& b);

}  // namespace posetrack::geometry

#endif  // POSETRACK_GEOMETRY_HPP_
