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

#include "posetrack/loss.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <tuple>

#include "posetrack/error.hpp"

namespace posetrack::loss
{

using codec::EncodedTarget;
using codec::PredictionTensor;
using codec::Slot;

namespace
{

// log(1 + e^x) without overflow.
double softplus(double x)
{
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

auto target_key(const EncodedTarget& t)
{
  return std::make_tuple(codec::slot_of(t), t.class_id, t.t_x, t.t_y, t.t_r, t.t_yaw, t.t_pitch,
                         t.t_roll);
}

void check_shape(const PredictionTensor& pred, const SceneContext& ctx)
{
  if (!pred.same_shape(ctx.zero_tensor())) {
    throw Error(Errc::ShapeMismatch, "prediction tensor does not match the scene grids");
  }
}

// Loss, gradient and per-coordinate Newton direction (gradient divided by
// the diagonal curvature) in one pass. Either output vector may be null.
LossBreakdown evaluate(const PredictionTensor& pred, const GroundTruthSet& gt,
                       const SceneContext& ctx, const LossConfig& cfg, std::vector<double>* grad,
                       std::vector<double>* newton)
{
  check_shape(pred, ctx);
  cfg.validate();
  const auto mask = ignore_mask(pred, gt, ctx, cfg);
  const int channels = pred.channels();
  const auto values = pred.values();

  if (grad) {
    grad->assign(pred.size(), 0.0);
  }
  if (newton) {
    newton->assign(pred.size(), 0.0);
  }

  std::vector<std::uint8_t> positive(pred.num_slots(), 0);
  for (const EncodedTarget& t : gt.targets) {
    positive[pred.index(codec::slot_of(t), 0) / static_cast<std::size_t>(channels)] = 1;
  }

  LossBreakdown out;
  // Objectness.
  for (std::size_t n = 0; n < pred.num_slots(); ++n) {
    const std::size_t i = n * static_cast<std::size_t>(channels) + codec::kTobj;
    const double t = values[i];
    const double s = codec::sigmoid(t);
    if (positive[n]) {
      out.objectness_positive += softplus(-t);
      if (grad) {
        (*grad)[i] = cfg.weight_objectness_positive * (s - 1.0);
      }
      if (newton && cfg.weight_objectness_positive > 0.0) {
        (*newton)[i] = -1.0 / s;
      }
    } else if (!mask[n]) {
      out.objectness_negative += softplus(t);
      if (grad) {
        (*grad)[i] = cfg.weight_objectness_negative * s;
      }
      if (newton && cfg.weight_objectness_negative > 0.0) {
        (*newton)[i] = 1.0 / (1.0 - s);
      }
    }
  }

  // Regression and class terms at positive slots.
  for (const EncodedTarget& t : gt.targets) {
    const std::size_t base = pred.index(codec::slot_of(t), 0);
    auto se = [&](int ch, double target, double weight, double& acc) {
      const double d = values[base + static_cast<std::size_t>(ch)] - target;
      acc += d * d;
      if (grad) {
        (*grad)[base + static_cast<std::size_t>(ch)] = 2.0 * weight * d;
      }
      if (newton && weight > 0.0) {
        (*newton)[base + static_cast<std::size_t>(ch)] = d;
      }
    };
    se(codec::kTx, t.t_x, cfg.weight_position, out.position);
    se(codec::kTy, t.t_y, cfg.weight_position, out.position);
    se(codec::kTr, t.t_r, cfg.weight_distance, out.distance);
    se(codec::kTyaw, t.t_yaw, cfg.weight_orientation, out.orientation);
    se(codec::kTpitch, t.t_pitch, cfg.weight_orientation, out.orientation);
    se(codec::kTroll, t.t_roll, cfg.weight_orientation, out.orientation);

    for (int k = 0; k < pred.num_classes(); ++k) {
      const std::size_t i = base + codec::kClass0 + static_cast<std::size_t>(k);
      const double z = values[i];
      const bool hot = (k == t.class_id);
      const double s = codec::sigmoid(z);
      out.class_term += hot ? softplus(-z) : softplus(z);
      if (grad) {
        (*grad)[i] = cfg.weight_class * (s - (hot ? 1.0 : 0.0));
      }
      if (newton && cfg.weight_class > 0.0) {
        (*newton)[i] = hot ? -1.0 / s : 1.0 / (1.0 - s);
      }
    }
  }

  out.total = cfg.weight_objectness_positive * out.objectness_positive +
              cfg.weight_objectness_negative * out.objectness_negative +
              cfg.weight_position * out.position + cfg.weight_distance * out.distance +
              cfg.weight_orientation * out.orientation + cfg.weight_class * out.class_term;
  return out;
}

}  // namespace

void LossConfig::validate() const
{
  if (!(iou_ignore_threshold >= 0.0 && iou_ignore_threshold <= 1.0)) {
    throw Error(Errc::ValidationError, "iou_ignore_threshold must lie in [0, 1]");
  }
  for (double w : {weight_objectness_positive, weight_objectness_negative, weight_position,
                   weight_distance, weight_orientation, weight_class}) {
    if (!(w >= 0.0)) {
      throw Error(Errc::ValidationError, "loss weights must be non-negative");
    }
  }
}

SceneContext SceneContext::make(const geometry::CameraIntrinsics& k, priors::PriorTable table,
                                const geometry::CuboidSpec& cuboid, codec::CodecConfig cfg)
{
  cuboid.validate();
  SceneContext ctx;
  ctx.intrinsics = k;
  ctx.grids = codec::make_grids(k);
  ctx.priors = std::move(table);
  ctx.codec = cfg;
  ctx.hull = codec::cuboid_hull(cuboid);
  return ctx;
}

GroundTruthSet prepare_ground_truth(std::span<const ObjectAnnotation> annotations,
                                    const SceneContext& ctx)
{
  GroundTruthSet gt;
  std::vector<EncodedTarget> all;
  std::vector<std::pair<codec::Bbox2D, int>> boxes;
  for (const ObjectAnnotation& a : annotations) {
    const EncodedTarget t =
        codec::encode_ground_truth(a, ctx.grids, ctx.priors, ctx.intrinsics, ctx.codec);
    all.push_back(t);
    const codec::DecodedDetection d = codec::detection_from_annotation(a);
    boxes.emplace_back(codec::reproject_bbox(d, ctx.hull, ctx.intrinsics), t.prior_id);
  }

  std::sort(all.begin(), all.end(),
            [](const EncodedTarget& a, const EncodedTarget& b) { return target_key(a) < target_key(b); });
  for (const EncodedTarget& t : all) {
    if (gt.targets.empty() || codec::slot_of(gt.targets.back()) != codec::slot_of(t)) {
      gt.targets.push_back(t);
    }
  }

  std::sort(boxes.begin(), boxes.end(), [](const auto& a, const auto& b) {
    return std::tie(a.first.min_u, a.first.min_v, a.first.max_u, a.first.max_v, a.second) <
           std::tie(b.first.min_u, b.first.min_v, b.first.max_u, b.first.max_v, b.second);
  });
  for (const auto& [box, prior] : boxes) {
    gt.boxes.push_back(box);
    gt.box_prior_ids.push_back(prior);
  }
  return gt;
}

std::vector<std::uint8_t> ignore_mask(const PredictionTensor& pred, const GroundTruthSet& gt,
                                      const SceneContext& ctx, const LossConfig& cfg)
{
  std::vector<std::uint8_t> mask(pred.num_slots(), 0);
  if (gt.boxes.empty()) {
    return mask;
  }
  for (std::size_t n = 0; n < pred.num_slots(); ++n) {
    const Slot s = pred.slot(n);
    const int prior_id = s.prior_id();
    const bool candidate =
        !cfg.require_same_anchor ||
        std::find(gt.box_prior_ids.begin(), gt.box_prior_ids.end(), prior_id) != gt.box_prior_ids.end();
    if (!candidate) {
      continue;
    }
    codec::Bbox2D box;
    try {
      const codec::DecodedDetection d =
          codec::decode_cell(pred.cell(s), ctx.grids.head(s.head), ctx.priors, ctx.codec);
      box = codec::reproject_bbox(d, ctx.hull, ctx.intrinsics);
    } catch (const Error&) {
      continue;  // no valid box, nothing to overlap
    }
    double best = 0.0;
    for (std::size_t g = 0; g < gt.boxes.size(); ++g) {
      if (cfg.require_same_anchor && gt.box_prior_ids[g] != prior_id) {
        continue;
      }
      best = std::max(best, codec::iou(box, gt.boxes[g]));
    }
    mask[n] = best > cfg.iou_ignore_threshold ? 1 : 0;
  }
  return mask;
}

ObjectnessTerms objectness_loss(const PredictionTensor& pred, const GroundTruthSet& gt,
                                const SceneContext& ctx, const LossConfig& cfg)
{
  const LossBreakdown b = evaluate(pred, gt, ctx, cfg, nullptr, nullptr);
  return {b.objectness_positive, b.objectness_negative};
}

ObjectnessTerms objectness_loss(const PredictionTensor& pred,
                                std::span<const ObjectAnnotation> annotations,
                                const SceneContext& ctx, const LossConfig& cfg)
{
  return objectness_loss(pred, prepare_ground_truth(annotations, ctx), ctx, cfg);
}

RegressionTerms regression_loss(const PredictionTensor& pred, std::span<const EncodedTarget> targets)
{
  RegressionTerms out;
  for (const EncodedTarget& t : targets) {
    const Slot s = codec::slot_of(t);
    auto sq = [&](int ch, double target) {
      const double d = pred.at(s, ch) - target;
      return d * d;
    };
    out.position += sq(codec::kTx, t.t_x) + sq(codec::kTy, t.t_y);
    out.distance += sq(codec::kTr, t.t_r);
    out.orientation += sq(codec::kTyaw, t.t_yaw) + sq(codec::kTpitch, t.t_pitch) +
                       sq(codec::kTroll, t.t_roll);
  }
  return out;
}

LossBreakdown total_loss(const PredictionTensor& pred, const GroundTruthSet& gt,
                         const SceneContext& ctx, const LossConfig& cfg)
{
  return evaluate(pred, gt, ctx, cfg, nullptr, nullptr);
}

LossBreakdown total_loss(const PredictionTensor& pred, std::span<const ObjectAnnotation> annotations,
                         const SceneContext& ctx, const LossConfig& cfg)
{
  return total_loss(pred, prepare_ground_truth(annotations, ctx), ctx, cfg);
}

std::vector<double> loss_gradient(const PredictionTensor& pred, const GroundTruthSet& gt,
                                  const SceneContext& ctx, const LossConfig& cfg)
{
  std::vector<double> grad;
  evaluate(pred, gt, ctx, cfg, &grad, nullptr);
  return grad;
}

std::vector<double> loss_gradient(const PredictionTensor& pred,
                                  std::span<const ObjectAnnotation> annotations,
                                  const SceneContext& ctx, const LossConfig& cfg)
{
  return loss_gradient(pred, prepare_ground_truth(annotations, ctx), ctx, cfg);
}

double lr_at(int epoch, const TrainSchedule& s)
{
  if (epoch < 0) {
    throw Error(Errc::ValidationError, "epoch must be non-negative");
  }
  if (!(s.base_rate > 0.0)) {
    throw Error(Errc::ValidationError, "base learning rate must be positive");
  }
  return s.base_rate / (1.0 + std::pow(static_cast<double>(epoch), s.decay_exponent));
}

FitResult fit_tensor(std::span<const ObjectAnnotation> annotations, const SceneContext& ctx,
                     int steps, const TrainSchedule& schedule, const LossConfig& cfg,
                     const FitOptions& options)
{
  if (steps < 0 || options.steps_per_epoch <= 0) {
    throw Error(Errc::ValidationError, "steps must be >= 0 and steps_per_epoch > 0");
  }
  const GroundTruthSet gt = prepare_ground_truth(annotations, ctx);
  FitResult result{ctx.zero_tensor(), {}};
  result.trace.reserve(static_cast<std::size_t>(steps) + 1);

  std::vector<double> newton;
  for (int step = 0; step < steps; ++step) {
    const double lr = lr_at(step / options.steps_per_epoch, schedule);
    const LossBreakdown loss = evaluate(result.tensor, gt, ctx, cfg, nullptr, &newton);
    result.trace.push_back({step, lr, loss});
    const double damping = lr / schedule.base_rate;
    auto values = result.tensor.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      values[i] -= damping * newton[i];
    }
  }
  result.trace.push_back({steps, 0.0, evaluate(result.tensor, gt, ctx, cfg, nullptr, nullptr)});
  return result;
}

void write_loss_trace_csv(std::ostream& out, std::span<const FitStep> trace)
{
  out << "step,lr,objectness_positive,objectness_negative,position,distance,orientation,class,total\n";
  const auto old_precision = out.precision(17);
  for (const FitStep& s : trace) {
    const LossBreakdown& l = s.loss;
    out << s.step << ',' << s.lr << ',' << l.objectness_positive << ',' << l.objectness_negative
        << ',' << l.position << ',' << l.distance << ',' << l.orientation << ',' << l.class_term
        << ',' << l.total << '\n';
  }
  out.precision(old_precision);
}

}  // namespace posetrack::loss
