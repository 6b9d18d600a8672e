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

#ifndef POSETRACK_LOSS_HPP_
#define POSETRACK_LOSS_HPP_

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "posetrack/annotation.hpp"
#include "posetrack/codec.hpp"
#include "posetrack/priors.hpp"

namespace posetrack::loss
{

struct LossConfig
{
  double iou_ignore_threshold = 0.5;
  double weight_objectness_positive = 1.0;
  double weight_objectness_negative = 1.0;
  double weight_position = 1.0;
  double weight_distance = 1.0;
  double weight_orientation = 1.0;
  double weight_class = 1.0;
  /// A negative slot may only be ignored for overlapping a ground truth of
  /// its own prior.
  bool require_same_anchor = true;

  void validate() const;
};

/// Unweighted components; `total` is their weighted sum.
struct LossBreakdown
{
  double objectness_positive = 0.0;
  double objectness_negative = 0.0;
  double position = 0.0;
  double distance = 0.0;
  double orientation = 0.0;
  double class_term = 0.0;
  double total = 0.0;
};

/// Everything about the camera and the tracked object the loss needs.
struct SceneContext
{
  geometry::CameraIntrinsics intrinsics;
  codec::GridSet grids;
  priors::PriorTable priors;
  codec::CodecConfig codec;
  std::vector<geometry::Vec3> hull;  ///< object-frame points for 2D boxes

  static SceneContext make(const geometry::CameraIntrinsics& k, priors::PriorTable table,
                           const geometry::CuboidSpec& cuboid, codec::CodecConfig cfg = {});

  codec::PredictionTensor zero_tensor() const { return {grids, codec.num_classes}; }
};

/// Encoded ground truth of one image: one target per positive slot (ties on a
/// slot resolved by slot order then target values, independent of input
/// order) and one 2D box per annotation.
struct GroundTruthSet
{
  std::vector<codec::EncodedTarget> targets;
  std::vector<codec::Bbox2D> boxes;
  std::vector<int> box_prior_ids;
};

GroundTruthSet prepare_ground_truth(std::span<const ObjectAnnotation> annotations,
                                    const SceneContext& ctx);

struct ObjectnessTerms
{
  double positive = 0.0;
  double negative = 0.0;
};

struct RegressionTerms
{
  double position = 0.0;
  double distance = 0.0;
  double orientation = 0.0;
};

/// One byte per slot, in tensor slot order: 1 where the negative objectness
/// term is ignored because the slot's reprojected box overlaps a ground truth.
std::vector<std::uint8_t> ignore_mask(const codec::PredictionTensor& pred, const GroundTruthSet& gt,
                                      const SceneContext& ctx, const LossConfig& cfg);

ObjectnessTerms objectness_loss(const codec::PredictionTensor& pred, const GroundTruthSet& gt,
                                const SceneContext& ctx, const LossConfig& cfg);
ObjectnessTerms objectness_loss(const codec::PredictionTensor& pred,
                                std::span<const ObjectAnnotation> annotations,
                                const SceneContext& ctx, const LossConfig& cfg);

/// Squared error in raw logit space at the positive slots only.
RegressionTerms regression_loss(const codec::PredictionTensor& pred,
                                std::span<const codec::EncodedTarget> targets);

LossBreakdown total_loss(const codec::PredictionTensor& pred, const GroundTruthSet& gt,
                         const SceneContext& ctx, const LossConfig& cfg);
LossBreakdown total_loss(const codec::PredictionTensor& pred,
                         std::span<const ObjectAnnotation> annotations, const SceneContext& ctx,
                         const LossConfig& cfg);

/// d total / d logit, laid out like the tensor. The ignore mask is held
/// constant.
std::vector<double> loss_gradient(const codec::PredictionTensor& pred, const GroundTruthSet& gt,
                                  const SceneContext& ctx, const LossConfig& cfg);
std::vector<double> loss_gradient(const codec::PredictionTensor& pred,
                                  std::span<const ObjectAnnotation> annotations,
                                  const SceneContext& ctx, const LossConfig& cfg);

struct TrainSchedule
{
  double base_rate = 1e-3;
  double decay_exponent = 1.5;
};

/// base_rate / (1 + epoch^decay_exponent).
double lr_at(int epoch, const TrainSchedule& s = {});

struct FitOptions
{
  int steps_per_epoch = 100;
};

struct FitStep
{
  int step = 0;
  double lr = 0.0;  ///< rate used for the update that follows; 0 on the last entry
  LossBreakdown loss;
};

struct FitResult
{
  codec::PredictionTensor tensor;
  std::vector<FitStep> trace;  ///< steps + 1 entries; trace[k] is the loss after k updates
};

/// Fits the raw tensor to the ground truth from zero initialization. Each
/// update moves every logit along its curvature-scaled negative gradient
/// (a per-coordinate Newton step), damped by lr_at(epoch) / base_rate.
FitResult fit_tensor(std::span<const ObjectAnnotation> annotations, const SceneContext& ctx,
                     int steps, const TrainSchedule& schedule = {}, const LossConfig& cfg = {},
                     const FitOptions& options = {});

/// Columns: step,lr,objectness_positive,objectness_negative,position,distance,orientation,class,total
void write_loss_trace_csv(std::ostream& out, std::span<const FitStep> trace);

}  // namespace posetrack::loss

#endif  // POSETRACK_LOSS_HPP_
