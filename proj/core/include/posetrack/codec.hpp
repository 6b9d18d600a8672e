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

#ifndef POSETRACK_CODEC_HPP_
#define POSETRACK_CODEC_HPP_

#include <array>
#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "posetrack/annotation.hpp"
#include "posetrack/geometry.hpp"
#include "posetrack/priors.hpp"

namespace posetrack::codec
{

// ---------------------------------------------------------------------------
// Grids
// ---------------------------------------------------------------------------

/// Image pixels per grid cell for heads 1, 2, 3. Head 1 is the coarsest and
/// serves the nearest objects.
inline constexpr std::array<int, priors::kNumHeads> kHeadStrides{32, 16, 8};

struct GridSpec
{
  int head = 1;
  int cols = 0;
  int rows = 0;
  int stride_px = 0;

  int image_width() const { return cols * stride_px; }
  int image_height() const { return rows * stride_px; }
  double aspect() const { return static_cast<double>(cols) / rows; }
};

struct GridSet
{
  std::array<GridSpec, priors::kNumHeads> heads;

  const GridSpec& head(int h) const;
  int image_width() const { return heads[0].image_width(); }
  int image_height() const { return heads[0].image_height(); }
  double aspect() const { return heads[0].aspect(); }
};

/// Throws Errc::InvalidGrid unless width and height are multiples of 32.
GridSet make_grids(const geometry::CameraIntrinsics& k);

// ---------------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------------

double sigmoid(double t) noexcept;
double logit(double p);

/// lo + (hi - lo) * sigmoid(t). Throws Errc::RangeInverted unless lo < hi.
double sigma0(double t, double lo, double hi);
/// Exact inverse of sigma0 on the open interval (lo, hi); throws
/// Errc::InverseOutOfRange outside it.
double sigma0_inv(double y, double lo, double hi);

// ---------------------------------------------------------------------------
// Cell-level codec
// ---------------------------------------------------------------------------

struct CodecConfig
{
  /// Width, in cells, of the range the origin offset can reach. 2 lets an
  /// origin sit up to half a cell outside its own cell.
  double spread = 2.0;
  double pitch_halfwidth = geometry::kPi / 8.0;
  double roll_halfwidth = geometry::kPi / 8.0;
  int num_classes = 1;
  /// When set, grids and intrinsics whose aspect ratio differs by more than
  /// 1e-6 are refused with Errc::AspectMismatch.
  std::optional<double> aspect_ratio;
};

/// Raw, unbounded network outputs for one (cell, anchor) slot.
struct CellPrediction
{
  int col = 0;
  int row = 0;
  int prior_id = 1;
  double t_x = 0.0;
  double t_y = 0.0;
  double t_r = 0.0;
  double t_yaw = 0.0;
  double t_pitch = 0.0;
  double t_roll = 0.0;
  double t_obj = 0.0;
  std::vector<double> t_class;
};

struct DecodedDetection
{
  geometry::Pixel origin_px;  ///< image position of the object's origin
  double distance = 0.0;      ///< focus-to-origin, meters
  geometry::EulerAngles orientation;  ///< ray-relative
  double objectness = 0.0;
  int class_id = 0;
  double confidence = 0.0;
  int prior_id = 0;  ///< 0 when not produced by a prior
};

/// Regression targets for one ground truth, in raw logit space.
struct EncodedTarget
{
  int head = 1;
  int col = 0;
  int row = 0;
  int prior_id = 1;
  int class_id = 0;
  double t_x = 0.0;
  double t_y = 0.0;
  double t_r = 0.0;
  double t_yaw = 0.0;
  double t_pitch = 0.0;
  double t_roll = 0.0;

  /// Prediction reproducing this target, with the given objectness logit and
  /// one-hot class logits of magnitude |objectness_logit|.
  CellPrediction as_prediction(double objectness_logit, int num_classes) const;
};

DecodedDetection decode_cell(const CellPrediction& p, const GridSpec& grid,
                             const priors::PriorTable& table, const CodecConfig& cfg = {});

/// Picks the prior by assign_region and the cell containing the projected
/// origin on that prior's head, then inverts decode_cell.
EncodedTarget encode_ground_truth(const ObjectAnnotation& gt, const GridSet& grids,
                                  const priors::PriorTable& table,
                                  const geometry::CameraIntrinsics& k,
                                  const CodecConfig& cfg = {});

/// The noise-free detection a perfect network would report for `a`.
DecodedDetection detection_from_annotation(const ObjectAnnotation& a);

// ---------------------------------------------------------------------------
// Boxes
// ---------------------------------------------------------------------------

/// Width/height decode of the original exponential box parameterization,
/// b = p * exp(t). Kept for reference and for exponential distance heads.
struct LegacyBoxParams
{
  double t_w = 0.0;
  double t_h = 0.0;
  double p_w = 1.0;
  double p_h = 1.0;
};

std::pair<double, double> decode_legacy_box(const LegacyBoxParams& l);
LegacyBoxParams encode_legacy_box(double b_w, double b_h, double p_w, double p_h);

struct Bbox2D
{
  double min_u = 0.0;
  double min_v = 0.0;
  double max_u = 0.0;
  double max_v = 0.0;

  double width() const { return max_u - min_u; }
  double height() const { return max_v - min_v; }
  double area() const { return width() * height(); }
};

/// The 8 cuboid corners in the object frame; the default convex hull.
std::vector<geometry::Vec3> cuboid_hull(const geometry::CuboidSpec& spec);

/// Places `hull` (object frame) at the decoded pose, projects every point and
/// takes the axis-aligned extent. Throws Errc::HullBehindCamera if any point
/// has non-positive depth.
Bbox2D reproject_bbox(const DecodedDetection& d, std::span<const geometry::Vec3> hull,
                      const geometry::CameraIntrinsics& k);

double iou(const Bbox2D& a, const Bbox2D& b) noexcept;

// ---------------------------------------------------------------------------
// Flat tensor
// ---------------------------------------------------------------------------

/// Channel order within a slot.
enum Channel : int
{
  kTx = 0,
  kTy,
  kTr,
  kTyaw,
  kTpitch,
  kTroll,
  kTobj,
  kClass0,
};

struct Slot
{
  int head = 1;
  int row = 0;
  int col = 0;
  int anchor = 0;

  int prior_id() const { return (head - 1) * priors::kPriorsPerHead + anchor + 1; }
  friend auto operator<=>(const Slot&, const Slot&) = default;
};

/// All raw outputs of the three heads in one flat array laid out as
/// (head, row, col, anchor, channel), row-major, channel fastest.
class PredictionTensor
{
public:
  PredictionTensor(const GridSet& grids, int num_classes);

  const GridSet& grids() const { return grids_; }
  int num_classes() const { return num_classes_; }
  int channels() const { return kClass0 + num_classes_; }
  std::size_t size() const { return values_.size(); }
  std::size_t num_slots() const { return size() / static_cast<std::size_t>(channels()); }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  std::size_t index(const Slot& s, int channel) const;
  double& at(const Slot& s, int channel) { return values_[index(s, channel)]; }
  double at(const Slot& s, int channel) const { return values_[index(s, channel)]; }

  /// Slot of the n-th channel block, in layout order.
  Slot slot(std::size_t n) const;

  CellPrediction cell(const Slot& s) const;
  void set_cell(const Slot& s, const CellPrediction& p);

  bool same_shape(const PredictionTensor& other) const;

private:
  GridSet grids_;
  int num_classes_;
  std::array<std::size_t, priors::kNumHeads + 1> head_offset_{};
  std::vector<double> values_;
};

Slot slot_of(const EncodedTarget& t);

/// Decodes every slot whose objectness reaches `threshold`.
std::vector<DecodedDetection> decode_tensor(const PredictionTensor& tensor,
                                            const priors::PriorTable& table,
                                            const CodecConfig& cfg, double threshold);

/// Greedy suppression by confidence; returns kept indices in confidence order.
std::vector<std::size_t> suppress_overlaps(std::span<const DecodedDetection> detections,
                                           std::span<const Bbox2D> boxes, double iou_threshold);

json to_json(const DecodedDetection& d);
DecodedDetection detection_from_json(const json& j);

}  // namespace posetrack::codec

#endif  // POSETRACK_CODEC_HPP_
