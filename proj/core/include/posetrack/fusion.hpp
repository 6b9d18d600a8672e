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

#ifndef POSETRACK_FUSION_HPP_
#define POSETRACK_FUSION_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "posetrack/annotation.hpp"
#include "posetrack/codec.hpp"
#include "posetrack/geometry.hpp"

namespace posetrack::fusion
{

struct DetectionMessage
{
  std::string camera_id;
  double timestamp = 0.0;  ///< seconds on the source clock, >= 0
  std::vector<codec::DecodedDetection> detections;
};

struct WorldDetection
{
  geometry::Vec3 world_position = geometry::Vec3::Zero();
  geometry::EulerAngles world_orientation;
  std::string source_camera;
  double camera_distance = 0.0;  ///< |world_position - camera position|
  double timestamp = 0.0;
  std::size_t detection_index = 0;  ///< position within its message
};

struct FusedPosition
{
  std::int64_t track_id = 0;
  geometry::Vec3 world_position = geometry::Vec3::Zero();
  geometry::EulerAngles world_orientation;
  std::string chosen_camera;
  std::vector<std::string> contributing_cameras;  ///< sorted, unique
  double camera_distance = 0.0;                   ///< of the chosen member
  double tick_timestamp = 0.0;
};

class RigRegistry
{
public:
  RigRegistry() = default;
  /// Throws Errc::ValidationError on duplicate or empty camera ids.
  explicit RigRegistry(std::vector<geometry::CameraRig> rigs);

  bool contains(const std::string& camera_id) const;
  /// Throws Errc::UnknownCamera.
  const geometry::CameraRig& at(const std::string& camera_id) const;
  const std::vector<geometry::CameraRig>& rigs() const { return rigs_; }

private:
  std::vector<geometry::CameraRig> rigs_;
  std::map<std::string, std::size_t> index_;
};

RigRegistry rig_registry_from_json(const json& j);
RigRegistry load_rig_registry(const std::filesystem::path& path);
json to_json(const RigRegistry& registry);

/// Backprojects the detection in the rig's camera and moves it to the world.
/// Throws Errc::NonPositiveDistance.
WorldDetection to_world(const codec::DecodedDetection& d, const geometry::CameraRig& rig,
                        double timestamp = 0.0, std::size_t detection_index = 0);
/// Throws Errc::UnknownCamera if the registry lacks `camera_id`.
WorldDetection to_world(const codec::DecodedDetection& d, const RigRegistry& rigs,
                        const std::string& camera_id, double timestamp = 0.0,
                        std::size_t detection_index = 0);

/// Connected components of the graph joining detections closer than `gate`.
/// Members and groups are ordered by (camera id, detection index).
std::vector<std::vector<WorldDetection>> associate(std::vector<WorldDetection> detections,
                                                   double gate = 1.0);

/// Copies the member nearest its camera; ties go to the smallest camera id.
/// Throws Errc::EmptyGroup. track_id and tick_timestamp are left at 0.
FusedPosition fuse(std::span<const WorldDetection> group);

struct TrackerConfig
{
  double rate = 24.0;             ///< ticks per second
  double gate = 1.0;              ///< meters, for association and continuity
  double staleness_ticks = 2.0;   ///< messages older than this many ticks are ignored
};

/// Fusion state shared by concurrent ingestion streams and one tick loop.
class FusionTracker
{
public:
  FusionTracker(RigRegistry rigs, TrackerConfig cfg = {});

  /// Thread-safe. Returns false and counts the message as dropped when its
  /// camera is unknown or its timestamp is negative.
  bool ingest(DetectionMessage message);

  /// Fuses the latest message per camera within the staleness window ending
  /// at `tick_time`. Ticks must be issued in non-decreasing time from one
  /// thread.
  std::vector<FusedPosition> tick(double tick_time);

  std::size_t dropped() const;
  const TrackerConfig& config() const { return cfg_; }
  const RigRegistry& rigs() const { return rigs_; }

private:
  std::vector<FusedPosition> assign_tracks(std::vector<FusedPosition> current);

  RigRegistry rigs_;
  TrackerConfig cfg_;
  mutable std::mutex mutex_;
  // Per camera, messages keyed by timestamp.
  std::map<std::string, std::map<double, DetectionMessage>> buffer_;
  std::size_t dropped_ = 0;
  std::vector<FusedPosition> previous_;
  std::int64_t next_track_id_ = 1;
};

struct TickOutput
{
  double tick_timestamp = 0.0;
  std::vector<FusedPosition> positions;
};

struct TrackerRun
{
  std::vector<TickOutput> ticks;
  std::size_t dropped = 0;
};

/// Virtual-time run: ticks at k / rate for k < round(duration * rate); each
/// message is ingested just before the first tick at or after its timestamp.
TrackerRun run_tracker(std::span<const DetectionMessage> messages, const RigRegistry& rigs,
                       const TrackerConfig& cfg, double duration);

/// Noise-free messages from annotations, one per (source, frame, camera),
/// ordered by timestamp then camera id.
std::vector<DetectionMessage> messages_from_annotations(std::span<const ObjectAnnotation> annotations);

// ---------------------------------------------------------------------------
// Noise model and evaluation
// ---------------------------------------------------------------------------

/// Zero-mean Gaussian noise on the origin pixel and on the distance.
struct NoiseModel
{
  double pixel_sigma = 1.0;               ///< pixels, per axis
  double distance_sigma_fraction = 0.003; ///< of the true distance
};

NoiseModel noise_model_from_json(const json& j);
json to_json(const NoiseModel& n);

codec::DecodedDetection apply_noise(const codec::DecodedDetection& d, const NoiseModel& noise,
                                    std::mt19937_64& rng);

struct EvalResult
{
  std::size_t frames = 0;
  std::vector<double> fused_errors;   ///< one per fused position, meters
  std::vector<double> camera_errors;  ///< one per single-camera detection, meters
};

/// Groups annotations into frames by (source, frame_id), perturbs each
/// detection, fuses per frame, and measures distances to the nearest
/// ground-truth object origin.
EvalResult evaluate_noise(std::span<const ObjectAnnotation> annotations, const NoiseModel& noise,
                          std::uint64_t seed, double gate = 1.0);

/// Linear interpolation between order statistics; p in [0, 100].
/// Throws Errc::EmptyInput.
double percentile(std::vector<double> values, double p);

// ---------------------------------------------------------------------------
// Wire format
// ---------------------------------------------------------------------------

json to_json(const DetectionMessage& m);
DetectionMessage message_from_json(const json& j);
json to_json(const WorldDetection& w);
json to_json(const FusedPosition& f);
FusedPosition fused_from_json(const json& j);

}  // namespace posetrack::fusion

#endif  // POSETRACK_FUSION_HPP_
