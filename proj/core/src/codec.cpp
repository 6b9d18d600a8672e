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

#include "posetrack/codec.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "posetrack/error.hpp"

namespace posetrack::codec
{

using geometry::CameraIntrinsics;
using geometry::EulerAngles;
using geometry::Pixel;
using geometry::RotationMatrix;
using geometry::Vec3;

namespace
{

constexpr double kAspectTol = 1e-6;

void check_aspect(double actual, const CodecConfig& cfg, const char* what)
{
  if (cfg.aspect_ratio && std::abs(actual - *cfg.aspect_ratio) > kAspectTol) {
    throw Error(Errc::AspectMismatch, std::string(what) + " aspect " + std::to_string(actual) +
                                          " differs from configured " +
                                          std::to_string(*cfg.aspect_ratio));
  }
}

// Origin offset range, in cells, relative to the cell's top-left corner.
double offset_lo(const CodecConfig& cfg) { return -(cfg.spread - 1.0) / 2.0; }
double offset_hi(const CodecConfig& cfg) { return offset_lo(cfg) + cfg.spread; }

double inverse_or(double y, double lo, double hi, Errc code, const char* what)
{
  try {
    return sigma0_inv(y, lo, hi);
  } catch (const Error&) {
    throw Error(code, std::string(what) + " " + std::to_string(y) + " outside (" +
                          std::to_string(lo) + ", " + std::to_string(hi) + ")");
  }
}

}  // namespace

const GridSpec& GridSet::head(int h) const
{
  if (h < 1 || h > priors::kNumHeads) {
    throw Error(Errc::InvalidGrid, "head " + std::to_string(h) + " does not exist");
  }
  return heads[static_cast<std::size_t>(h - 1)];
}

GridSet make_grids(const CameraIntrinsics& k)
{
  k.validate();
  GridSet g;
  for (int h = 1; h <= priors::kNumHeads; ++h) {
    const int stride = kHeadStrides[static_cast<std::size_t>(h - 1)];
    if (k.width % stride != 0 || k.height % stride != 0) {
      throw Error(Errc::InvalidGrid, "resolution " + std::to_string(k.width) + "x" +
                                         std::to_string(k.height) + " is not a multiple of " +
                                         std::to_string(stride));
    }
    g.heads[static_cast<std::size_t>(h - 1)] = GridSpec{h, k.width / stride, k.height / stride, stride};
  }
  return g;
}

double sigmoid(double t) noexcept
{
  if (t >= 0.0) {
    return 1.0 / (1.0 + std::exp(-t));
  }
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double logit(double p)
{
  return sigma0_inv(p, 0.0, 1.0);
}

double sigma0(double t, double lo, double hi)
{
  if (!(lo < hi)) {
    throw Error(Errc::RangeInverted, "sigma0 needs lo < hi");
  }
  return lo + (hi - lo) * sigmoid(t);
}

double sigma0_inv(double y, double lo, double hi)
{
  if (!(lo < hi)) {
    throw Error(Errc::RangeInverted, "sigma0_inv needs lo < hi");
  }
  if (!(y > lo && y < hi)) {
    throw Error(Errc::InverseOutOfRange, "sigma0_inv argument outside the open range");
  }
  const double p = (y - lo) / (hi - lo);
  return std::log(p) - std::log1p(-p);
}

CellPrediction EncodedTarget::as_prediction(double objectness_logit, int num_classes) const
{
  CellPrediction p;
  p.col = col;
  p.row = row;
  p.prior_id = prior_id;
  p.t_x = t_x;
  p.t_y = t_y;
  p.t_r = t_r;
  p.t_yaw = t_yaw;
  p.t_pitch = t_pitch;
  p.t_roll = t_roll;
  p.t_obj = objectness_logit;
  const double mag = std::abs(objectness_logit);
  p.t_class.assign(static_cast<std::size_t>(num_classes), -mag);
  if (class_id >= 0 && class_id < num_classes) {
    p.t_class[static_cast<std::size_t>(class_id)] = mag;
  }
  return p;
}

DecodedDetection decode_cell(const CellPrediction& p, const GridSpec& grid,
                             const priors::PriorTable& table, const CodecConfig& cfg)
{
  check_aspect(grid.aspect(), cfg, "grid");
  if (priors::head_of(p.prior_id) != grid.head) {
    throw Error(Errc::PriorHeadMismatch, "prior " + std::to_string(p.prior_id) +
                                             " does not belong to head " + std::to_string(grid.head));
  }
  const priors::Prior& prior = table.at(p.prior_id);

  DecodedDetection d;
  d.prior_id = p.prior_id;
  d.origin_px.u = (p.col + sigma0(p.t_x, offset_lo(cfg), offset_hi(cfg))) * grid.stride_px;
  d.origin_px.v = (p.row + sigma0(p.t_y, offset_lo(cfg), offset_hi(cfg))) * grid.stride_px;
  d.distance = sigma0(p.t_r, prior.bounds.r_min, prior.bounds.r_max);

  const double yaw_hw = prior.bounds.theta_halfwidth;
  const EulerAngles offset{
    sigma0(p.t_yaw, -yaw_hw, yaw_hw),
    sigma0(p.t_pitch, -cfg.pitch_halfwidth, cfg.pitch_halfwidth),
    sigma0(p.t_roll, -cfg.roll_halfwidth, cfg.roll_halfwidth),
  };
  d.orientation = geometry::matrix_to_euler(geometry::euler_to_matrix(offset) *
                                            geometry::euler_to_matrix(prior.anchor_orientation));

  d.objectness = sigmoid(p.t_obj);
  d.class_id = 0;
  d.confidence = d.objectness;
  if (!p.t_class.empty()) {
    const auto best = std::max_element(p.t_class.begin(), p.t_class.end());
    d.class_id = static_cast<int>(best - p.t_class.begin());
    d.confidence = d.objectness * sigmoid(*best);
  }
  return d;
}

EncodedTarget encode_ground_truth(const ObjectAnnotation& gt, const GridSet& grids,
                                  const priors::PriorTable& table, const CameraIntrinsics& k,
                                  const CodecConfig& cfg)
{
  k.validate();
  check_aspect(k.aspect(), cfg, "image");
  if (std::abs(grids.aspect() - k.aspect()) > kAspectTol) {
    throw Error(Errc::AspectMismatch, "grids were built for a different aspect ratio");
  }
  if (std::abs(gt.intrinsics.aspect() - k.aspect()) > kAspectTol) {
    throw Error(Errc::AspectMismatch, "annotation captured at a different aspect ratio");
  }

  const geometry::Pose pose = gt.object_in_camera();
  const Pixel px = geometry::project(k, pose.translation);
  if (!k.contains(px)) {
    throw Error(Errc::OriginOffScreen, "object origin projects outside the image");
  }
  const geometry::SphericalParams s = geometry::spherical_params(pose);
  const int prior_id = priors::assign_region(s, table.mode);
  const priors::Prior& prior = table.at(prior_id);

  EncodedTarget t;
  t.prior_id = prior_id;
  t.class_id = gt.class_id;
  t.head = priors::head_of(prior_id);
  const GridSpec& grid = grids.head(t.head);
  // Scale in case the grid resolution differs from k (same aspect).
  const double su = static_cast<double>(grid.image_width()) / k.width;
  const double sv = static_cast<double>(grid.image_height()) / k.height;
  const double cu = px.u * su / grid.stride_px;
  const double cv = px.v * sv / grid.stride_px;
  t.col = std::clamp(static_cast<int>(std::floor(cu)), 0, grid.cols - 1);
  t.row = std::clamp(static_cast<int>(std::floor(cv)), 0, grid.rows - 1);
  t.t_x = inverse_or(cu - t.col, offset_lo(cfg), offset_hi(cfg), Errc::OriginOffScreen, "origin offset");
  t.t_y = inverse_or(cv - t.row, offset_lo(cfg), offset_hi(cfg), Errc::OriginOffScreen, "origin offset");
  t.t_r = inverse_or(s.r, prior.bounds.r_min, prior.bounds.r_max, Errc::DistanceOutOfRange, "distance");

  const RotationMatrix rel = geometry::ray_relative_rotation(pose);
  const RotationMatrix anchor = geometry::euler_to_matrix(prior.anchor_orientation);
  const EulerAngles off = geometry::matrix_to_euler(rel * anchor.transpose());
  const double yaw_hw = prior.bounds.theta_halfwidth;
  t.t_yaw = inverse_or(off.yaw, -yaw_hw, yaw_hw, Errc::OrientationOutOfRange, "yaw offset");
  t.t_pitch = inverse_or(off.pitch, -cfg.pitch_halfwidth, cfg.pitch_halfwidth,
                         Errc::OrientationOutOfRange, "pitch offset");
  t.t_roll = inverse_or(off.roll, -cfg.roll_halfwidth, cfg.roll_halfwidth,
                        Errc::OrientationOutOfRange, "roll offset");
  return t;
}

DecodedDetection detection_from_annotation(const ObjectAnnotation& a)
{
  const geometry::Pose pose = a.object_in_camera();
  DecodedDetection d;
  d.origin_px = geometry::project(a.intrinsics, pose.translation);
  d.distance = pose.translation.norm();
  d.orientation = geometry::matrix_to_euler(geometry::ray_relative_rotation(pose));
  d.objectness = 1.0;
  d.class_id = a.class_id;
  d.confidence = 1.0;
  return d;
}

std::pair<double, double> decode_legacy_box(const LegacyBoxParams& l)
{
  return {l.p_w * std::exp(l.t_w), l.p_h * std::exp(l.t_h)};
}

LegacyBoxParams encode_legacy_box(double b_w, double b_h, double p_w, double p_h)
{
  if (!(b_w > 0.0 && b_h > 0.0 && p_w > 0.0 && p_h > 0.0)) {
    throw Error(Errc::InverseOutOfRange, "box and prior sizes must be positive");
  }
  return {std::log(b_w / p_w), std::log(b_h / p_h), p_w, p_h};
}

std::vector<Vec3> cuboid_hull(const geometry::CuboidSpec& spec)
{
  const auto corners = geometry::cuboid_corners(spec, geometry::Pose::identity());
  return {corners.begin(), corners.end()};
}

Bbox2D reproject_bbox(const DecodedDetection& d, std::span<const Vec3> hull,
                      const CameraIntrinsics& k)
{
  const Vec3 origin = geometry::backproject(k, d.origin_px, d.distance);
  if (!(origin.z() > 0.0)) {
    throw Error(Errc::HullBehindCamera, "decoded origin is behind the camera");
  }
  const RotationMatrix r =
      geometry::camera_rotation_from_ray(origin, geometry::euler_to_matrix(d.orientation));
  Bbox2D box{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
             -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  const double f = k.focal_px();
  const Pixel c = k.center();
  for (const Vec3& h : hull) {
    const Vec3 p = r * h + origin;
    if (!(p.z() > 0.0)) {
      throw Error(Errc::HullBehindCamera, "hull point behind the camera");
    }
    const double u = c.u + f * p.x() / p.z();
    const double v = c.v + f * p.y() / p.z();
    box.min_u = std::min(box.min_u, u);
    box.max_u = std::max(box.max_u, u);
    box.min_v = std::min(box.min_v, v);
    box.max_v = std::max(box.max_v, v);
  }
  return box;
}

double iou(const Bbox2D& a, const Bbox2D& b) noexcept
{
  const double iw = std::min(a.max_u, b.max_u) - std::max(a.min_u, b.min_u);
  const double ih = std::min(a.max_v, b.max_v) - std::max(a.min_v, b.min_v);
  if (!(iw > 0.0) || !(ih > 0.0)) {
    return 0.0;
  }
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

PredictionTensor::PredictionTensor(const GridSet& grids, int num_classes)
  : grids_(grids), num_classes_(num_classes)
{
  if (num_classes < 0) {
    throw Error(Errc::ShapeMismatch, "negative class count");
  }
  std::size_t offset = 0;
  for (int h = 0; h < priors::kNumHeads; ++h) {
    head_offset_[static_cast<std::size_t>(h)] = offset;
    const GridSpec& g = grids_.heads[static_cast<std::size_t>(h)];
    offset += static_cast<std::size_t>(g.rows) * g.cols * priors::kPriorsPerHead * channels();
  }
  head_offset_[priors::kNumHeads] = offset;
  values_.assign(offset, 0.0);
}

std::size_t PredictionTensor::index(const Slot& s, int channel) const
{
  const GridSpec& g = grids_.head(s.head);
  if (s.row < 0 || s.row >= g.rows || s.col < 0 || s.col >= g.cols || s.anchor < 0 ||
      s.anchor >= priors::kPriorsPerHead || channel < 0 || channel >= channels()) {
    throw Error(Errc::ShapeMismatch, "tensor index out of range");
  }
  const std::size_t block =
      (static_cast<std::size_t>(s.row) * g.cols + s.col) * priors::kPriorsPerHead + s.anchor;
  return head_offset_[static_cast<std::size_t>(s.head - 1)] + block * channels() + channel;
}

Slot PredictionTensor::slot(std::size_t n) const
{
  const std::size_t pos = n * channels();
  int h = 0;
  while (h + 1 < priors::kNumHeads && pos >= head_offset_[static_cast<std::size_t>(h + 1)]) {
    ++h;
  }
  const GridSpec& g = grids_.heads[static_cast<std::size_t>(h)];
  std::size_t block = (pos - head_offset_[static_cast<std::size_t>(h)]) / channels();
  Slot s;
  s.head = h + 1;
  s.anchor = static_cast<int>(block % priors::kPriorsPerHead);
  block /= priors::kPriorsPerHead;
  s.col = static_cast<int>(block % static_cast<std::size_t>(g.cols));
  s.row = static_cast<int>(block / static_cast<std::size_t>(g.cols));
  return s;
}

CellPrediction PredictionTensor::cell(const Slot& s) const
{
  const std::size_t base = index(s, 0);
  CellPrediction p;
  p.col = s.col;
  p.row = s.row;
  p.prior_id = s.prior_id();
  p.t_x = values_[base + kTx];
  p.t_y = values_[base + kTy];
  p.t_r = values_[base + kTr];
  p.t_yaw = values_[base + kTyaw];
  p.t_pitch = values_[base + kTpitch];
  p.t_roll = values_[base + kTroll];
  p.t_obj = values_[base + kTobj];
  p.t_class.assign(values_.begin() + static_cast<std::ptrdiff_t>(base + kClass0),
                   values_.begin() + static_cast<std::ptrdiff_t>(base + channels()));
  return p;
}

void PredictionTensor::set_cell(const Slot& s, const CellPrediction& p)
{
  if (p.prior_id != s.prior_id() || p.col != s.col || p.row != s.row) {
    throw Error(Errc::ShapeMismatch, "cell prediction does not match its slot");
  }
  if (static_cast<int>(p.t_class.size()) != num_classes_) {
    throw Error(Errc::ShapeMismatch, "class logit count mismatch");
  }
  const std::size_t base = index(s, 0);
  values_[base + kTx] = p.t_x;
  values_[base + kTy] = p.t_y;
  values_[base + kTr] = p.t_r;
  values_[base + kTyaw] = p.t_yaw;
  values_[base + kTpitch] = p.t_pitch;
  values_[base + kTroll] = p.t_roll;
  values_[base + kTobj] = p.t_obj;
  std::copy(p.t_class.begin(), p.t_class.end(),
            values_.begin() + static_cast<std::ptrdiff_t>(base + kClass0));
}

bool PredictionTensor::same_shape(const PredictionTensor& other) const
{
  if (num_classes_ != other.num_classes_) {
    return false;
  }
  for (std::size_t h = 0; h < grids_.heads.size(); ++h) {
    const GridSpec& a = grids_.heads[h];
    const GridSpec& b = other.grids_.heads[h];
    if (a.cols != b.cols || a.rows != b.rows || a.stride_px != b.stride_px) {
      return false;
    }
  }
  return true;
}

Slot slot_of(const EncodedTarget& t)
{
  return Slot{t.head, t.row, t.col, (t.prior_id - 1) % priors::kPriorsPerHead};
}

std::vector<DecodedDetection> decode_tensor(const PredictionTensor& tensor,
                                            const priors::PriorTable& table,
                                            const CodecConfig& cfg, double threshold)
{
  std::vector<DecodedDetection> out;
  for (std::size_t n = 0; n < tensor.num_slots(); ++n) {
    const Slot s = tensor.slot(n);
    if (sigmoid(tensor.at(s, kTobj)) < threshold) {
      continue;
    }
    out.push_back(decode_cell(tensor.cell(s), tensor.grids().head(s.head), table, cfg));
  }
  return out;
}

std::vector<std::size_t> suppress_overlaps(std::span<const DecodedDetection> detections,
                                           std::span<const Bbox2D> boxes, double iou_threshold)
{
  if (detections.size() != boxes.size()) {
    throw Error(Errc::ShapeMismatch, "one box per detection expected");
  }
  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detections[a].confidence > detections[b].confidence;
  });
  std::vector<std::size_t> kept;
  for (std::size_t i : order) {
    const bool overlaps = std::any_of(kept.begin(), kept.end(), [&](std::size_t k) {
      return iou(boxes[i], boxes[k]) > iou_threshold;
    });
    if (!overlaps) {
      kept.push_back(i);
    }
  }
  return kept;
}

json to_json(const DecodedDetection& d)
{
  return {
    {"origin_px", io::to_json(d.origin_px)},
    {"distance", d.distance},
    {"orientation", io::to_json(d.orientation)},
    {"objectness", d.objectness},
    {"class_id", d.class_id},
    {"confidence", d.confidence},
    {"prior_id", d.prior_id},
  };
}

DecodedDetection detection_from_json(const json& j)
{
  io::expect_keys(j,
                  {"origin_px", "distance", "orientation", "objectness", "class_id",
                   "confidence", "prior_id"},
                  "detection");
  try {
    DecodedDetection d;
    d.origin_px = io::pixel_from_json(j.at("origin_px"));
    d.distance = j.at("distance").get<double>();
    d.orientation = io::euler_from_json(j.at("orientation"));
    d.objectness = j.value("objectness", 1.0);
    d.class_id = j.value("class_id", 0);
    d.confidence = j.value("confidence", d.objectness);
    d.prior_id = j.value("prior_id", 0);
    return d;
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, std::string("detection: ") + e.what());
  }
}

}  // namespace posetrack::codec
