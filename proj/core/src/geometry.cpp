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

#include "posetrack/geometry.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "posetrack/error.hpp"

namespace posetrack::geometry
{

namespace
{

constexpr double kGimbalEps = 1e-12;
constexpr double kOrthoTol = 1e-6;

const Vec3 kCameraUp{0.0, -1.0, 0.0};
const Vec3 kWorldUp{0.0, 0.0, 1.0};

RotationMatrix nearest_rotation(const Eigen::Matrix3d& m)
{
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  return svd.matrixU() * d * svd.matrixV().transpose();
}

}  // namespace

double wrap_angle(double angle) noexcept
{
  double r = std::remainder(angle, 2.0 * kPi);
  if (r <= -kPi) {
    r += 2.0 * kPi;
  }
  return r;
}

RotationMatrix rot_x(double angle)
{
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  RotationMatrix r;
  r << 1.0, 0.0, 0.0,
       0.0, c,   -s,
       0.0, s,   c;
  return r;
}

RotationMatrix rot_y(double angle)
{
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  RotationMatrix r;
  r << c,   0.0, s,
       0.0, 1.0, 0.0,
       -s,  0.0, c;
  return r;
}

RotationMatrix rot_z(double angle)
{
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  RotationMatrix r;
  r << c,   -s,  0.0,
       s,   c,   0.0,
       0.0, 0.0, 1.0;
  return r;
}

RotationMatrix euler_to_matrix(const EulerAngles& e)
{
  return rot_z(e.yaw) * rot_y(e.pitch) * rot_x(e.roll);
}

bool is_rotation(const RotationMatrix& r, double tol)
{
  if (!r.allFinite()) {
    return false;
  }
  const double ortho = (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

EulerAngles matrix_to_euler(const RotationMatrix& r)
{
  if (!is_rotation(r, kOrthoTol)) {
    throw Error(Errc::NotARotation, "matrix is not orthonormal with det +1");
  }
  EulerAngles e;
  const double cos_pitch = std::hypot(r(0, 0), r(1, 0));
  if (cos_pitch > kGimbalEps) {
    e.pitch = std::atan2(-r(2, 0), cos_pitch);
    e.yaw = wrap_angle(std::atan2(r(1, 0), r(0, 0)));
    e.roll = wrap_angle(std::atan2(r(2, 1), r(2, 2)));
  } else {
    // Only yaw -/+ roll is observable; report it all as yaw.
    e.pitch = r(2, 0) < 0.0 ? kPi / 2.0 : -kPi / 2.0;
    e.roll = 0.0;
    e.yaw = wrap_angle(std::atan2(-r(0, 1), r(1, 1)));
  }
  return e;
}

Pose Pose::from_matrix(const RotationMatrix& r, const Vec3& t)
{
  return Pose{matrix_to_euler(r), t};
}

Pose compose(const Pose& a, const Pose& b)
{
  const RotationMatrix ra = a.matrix();
  return Pose::from_matrix(ra * b.matrix(), ra * b.translation + a.translation);
}

Pose invert(const Pose& a)
{
  const RotationMatrix rt = a.matrix().transpose();
  return Pose::from_matrix(rt, -(rt * a.translation));
}

Pose look_at(const Vec3& eye, const Vec3& target)
{
  const Vec3 diff = target - eye;
  if (diff.norm() < 1e-12) {
    throw Error(Errc::DegenerateGeometry, "look_at: eye and target coincide");
  }
  const Vec3 forward = diff.normalized();
  const Vec3 right_raw = forward.cross(kWorldUp);
  if (right_raw.norm() < 1e-9) {
    throw Error(Errc::DegenerateGeometry, "look_at: viewing direction is vertical");
  }
  const Vec3 right = right_raw.normalized();
  const Vec3 down = forward.cross(right);
  RotationMatrix r;
  r.col(0) = right;
  r.col(1) = down;
  r.col(2) = forward;
  return Pose::from_matrix(r, eye);
}

double CameraIntrinsics::focal_px() const
{
  return (width / 2.0) / std::tan(horizontal_fov / 2.0);
}

double CameraIntrinsics::vertical_fov() const
{
  return 2.0 * std::atan((height / 2.0) / focal_px());
}

bool CameraIntrinsics::contains(const Pixel& px) const
{
  return px.u >= 0.0 && px.u < width && px.v >= 0.0 && px.v < height;
}

void CameraIntrinsics::validate() const
{
  if (!std::isfinite(horizontal_fov) || horizontal_fov <= 0.0 || horizontal_fov >= kPi) {
    throw Error(Errc::InvalidIntrinsics, "horizontal_fov must lie in (0, pi)");
  }
  if (width <= 0 || height <= 0) {
    throw Error(Errc::InvalidIntrinsics, "resolution must be positive");
  }
}

Pixel project(const CameraIntrinsics& k, const Vec3& p_cam)
{
  if (!(p_cam.z() > 0.0)) {
    throw Error(Errc::BehindCamera, "point has non-positive depth");
  }
  const double f = k.focal_px();
  const Pixel c = k.center();
  return {c.u + f * p_cam.x() / p_cam.z(), c.v + f * p_cam.y() / p_cam.z()};
}

Vec3 backproject(const CameraIntrinsics& k, const Pixel& px, double distance)
{
  if (!(distance > 0.0)) {
    throw Error(Errc::NonPositiveDistance, "backproject distance must be positive");
  }
  const double f = k.focal_px();
  const Pixel c = k.center();
  const Vec3 ray{(px.u - c.u) / f, (px.v - c.v) / f, 1.0};
  return ray.normalized() * distance;
}

void CuboidSpec::validate() const
{
  if (!(length > 0.0) || !(width > 0.0) || !(height > 0.0)) {
    throw Error(Errc::InvalidCuboid, "cuboid dimensions must be positive");
  }
}

CuboidMarkers cuboid_markers(const CuboidSpec& spec, const Pose& pose)
{
  const RotationMatrix r = pose.matrix();
  const Vec3& t = pose.translation;
  return {
    t,
    t + r * Vec3(spec.width / 2.0, 0.0, 0.0),
    t + r * Vec3(0.0, spec.length / 2.0, 0.0),
    t + r * Vec3(0.0, 0.0, spec.height),
  };
}

CuboidMarkers transform(const Pose& pose, const CuboidMarkers& m)
{
  const RotationMatrix r = pose.matrix();
  const Vec3& t = pose.translation;
  return {r * m.base_center + t, r * m.base_right + t, r * m.base_front + t, r * m.top_center + t};
}

std::array<Vec3, 8> cuboid_corners(const CuboidSpec& spec, const Pose& pose)
{
  const RotationMatrix r = pose.matrix();
  std::array<Vec3, 8> out;
  for (int i = 0; i < 8; ++i) {
    const Vec3 local{
      (i & 1) ? spec.width / 2.0 : -spec.width / 2.0,
      (i & 2) ? spec.length / 2.0 : -spec.length / 2.0,
      (i & 4) ? spec.height : 0.0,
    };
    out[static_cast<std::size_t>(i)] = r * local + pose.translation;
  }
  return out;
}

Pose pose_from_markers(const CuboidMarkers& m)
{
  const Vec3 x = m.base_right - m.base_center;
  const Vec3 y = m.base_front - m.base_center;
  const Vec3 z = m.top_center - m.base_center;
  if (x.norm() < 1e-12 || y.norm() < 1e-12 || z.norm() < 1e-12) {
    throw Error(Errc::DegenerateGeometry, "cuboid markers collapse onto the base center");
  }
  Eigen::Matrix3d axes;
  axes.col(0) = x.normalized();
  axes.col(1) = y.normalized();
  axes.col(2) = z.normalized();
  return Pose::from_matrix(nearest_rotation(axes), m.base_center);
}

SphericalParams spherical_params(const Pose& object_in_camera)
{
  const Vec3& t = object_in_camera.translation;
  SphericalParams s;
  s.r = t.norm();
  const Vec3 camera_in_object = object_in_camera.matrix().transpose() * (-t);
  const double forward = camera_in_object.y();
  const double left = -camera_in_object.x();
  const double up = camera_in_object.z();
  s.theta = wrap_angle(std::atan2(left, forward));
  s.phi = std::atan2(up, std::hypot(forward, left));
  return s;
}

Vec3 spherical_to_cartesian(const SphericalParams& s)
{
  return {s.r * std::cos(s.phi) * std::cos(s.theta),
          s.r * std::cos(s.phi) * std::sin(s.theta),
          s.r * std::sin(s.phi)};
}

RotationMatrix ray_frame(const Vec3& p_cam)
{
  if (!(p_cam.z() > 0.0)) {
    throw Error(Errc::BehindCamera, "ray frame needs a point in front of the camera");
  }
  const Vec3 x = p_cam.normalized();
  const Vec3 z = (kCameraUp - kCameraUp.dot(x) * x).normalized();
  RotationMatrix r;
  r.col(0) = x;
  r.col(1) = z.cross(x);
  r.col(2) = z;
  return r;
}

RotationMatrix ray_relative_rotation(const Pose& object_in_camera)
{
  return ray_frame(object_in_camera.translation).transpose() * object_in_camera.matrix();
}

RotationMatrix camera_rotation_from_ray(const Vec3& origin_cam, const RotationMatrix& ray_rel)
{
  return ray_frame(origin_cam) * ray_rel;
}

RotationMatrix view_rotation(double theta, double phi)
{
  return rot_y(-phi) * rot_z(kPi / 2.0 - theta);
}

RotationMatrix so3_mean(std::span<const RotationMatrix> rotations)
{
  if (rotations.empty()) {
    throw Error(Errc::EmptyInput, "so3_mean of an empty set");
  }
  // ||R(p) - R(q)||_F^2 = 8 (1 - (p.q)^2), so the chordal mean is the unit
  // quaternion maximizing sum (q_i.q)^2: the top eigenvector of sum q_i q_i^T.
  // The scatter matrix is invariant to each q_i's sign.
  Eigen::Matrix4d scatter = Eigen::Matrix4d::Zero();
  for (const auto& r : rotations) {
    const Eigen::Quaterniond q(r);
    const Eigen::Vector4d v = q.normalized().coeffs();
    scatter += v * v.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> solver(scatter);
  const Eigen::Vector4d top = solver.eigenvectors().col(3);
  Eigen::Quaterniond mean(top(3), top(0), top(1), top(2));
  mean.normalize();
  return mean.toRotationMatrix();
}

double chordal_cost(const RotationMatrix& m, std::span<const RotationMatrix> rotations)
{
  double cost = 0.0;
  for (const auto& r : rotations) {
    cost += (m - r).squaredNorm();
  }
  return cost;
}

double geodesic_distance(const RotationMatrix& a, const RotationMatrix& b)
{
  const Eigen::Matrix3d m = a.transpose() * b;
  const double c = (m.trace() - 1.0) / 2.0;
  const Vec3 axis{m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1)};
  return std::atan2(axis.norm() / 2.0, c);
}

}  // namespace posetrack::geometry
