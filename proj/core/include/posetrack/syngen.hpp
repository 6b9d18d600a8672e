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

#ifndef POSETRACK_SYNGEN_HPP_
#define POSETRACK_SYNGEN_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "posetrack/annotation.hpp"
#include "posetrack/geometry.hpp"

namespace posetrack::syngen
{

struct Range
{
  double min = 0.0;
  double max = 0.0;
};

struct OutputConfig
{
  std::string annotations_file = "annotations.jsonl";
  std::string manifest_file = "manifest.json";
  /// Placeholder image path per record; `{record_id}` is substituted.
  std::string image_pattern = "images/{record_id}.png";
};

/// An object asset: its class and enclosing cuboid.
struct BundleConfig
{
  std::string id;
  int class_id = 0;
  geometry::CuboidSpec cuboid;
};

/// Static scene: the camera orbits a fixed object and takes one shot per
/// (radius, elevation, azimuth) step, aimed at the object's origin.
struct DomeConfig
{
  std::string id;
  std::string bundle;
  geometry::Pose target;  ///< object pose in the world
  Range radius{10.0, 10.0};
  Range elevation{0.1, 0.1};  ///< radians above the object's base plane, [0, pi/2)
  int radius_steps = 1;
  int elevation_steps = 1;
  int azimuth_steps = 8;
  geometry::CameraIntrinsics intrinsics{geometry::kPi / 2.0, 1280, 736};

  // Per-shot variation, each drawn uniformly from [-x, x].
  double fov_jitter = 0.0;     ///< radians
  double radius_jitter = 0.0;  ///< meters
  double aim_jitter = 0.0;     ///< meters, per axis, applied to the aim point
  double roll_jitter = 0.0;    ///< radians about the optical axis
};

struct ArenaBounds
{
  double min_x = -10.0;
  double min_y = -10.0;
  double max_x = 10.0;
  double max_y = 10.0;
};

struct MotionConfig
{
  Range speed{0.5, 2.0};     ///< m/s, drawn per waypoint leg
  double max_turn_rate = geometry::kPi / 2.0;  ///< rad/s
  double waypoint_tolerance = 0.5;             ///< meters
};

/// Dynamic scene: objects wander on the z = 0 plane inside the arena and
/// fixed rigs capture every frame.
struct SequenceConfig
{
  std::string id;
  std::vector<std::string> bundles;  ///< object i uses bundles[i % size]
  int object_count = 1;
  ArenaBounds arena;
  double duration = 10.0;  ///< seconds
  double rate = 24.0;      ///< Hz
  MotionConfig motion;
  std::vector<geometry::CameraRig> cameras;

  std::int64_t frame_count() const;
};

struct ProfileConfig
{
  std::string name = "profile";
  std::uint64_t seed = 0;
  OutputConfig output;
  std::vector<BundleConfig> bundles;
  std::vector<DomeConfig> domes;
  std::vector<SequenceConfig> sequences;

  const BundleConfig& bundle(const std::string& id) const;
};

/// Parses and validates a profile document. Unknown fields raise
/// Errc::ParseError; semantic problems raise Errc::ValidationError.
ProfileConfig load_profile(const json& document);
ProfileConfig load_profile_file(const std::filesystem::path& path);
void validate(const ProfileConfig& profile);

/// Canonical document; load_profile(serialize(p)) reproduces p.
json serialize(const ProfileConfig& profile);

/// 16 hex digits of the FNV-1a 64-bit hash of the canonical document.
std::string config_digest(const ProfileConfig& profile);

std::vector<ObjectAnnotation> generate_dome(const DomeConfig& cfg, const BundleConfig& bundle,
                                            std::uint64_t seed);

/// Object poses per frame, [frame][object]; generate_sequence observes these.
std::vector<std::vector<geometry::Pose>> simulate_motion(const SequenceConfig& cfg,
                                                         std::uint64_t seed);

/// `bundles` resolves cfg.bundles in order.
std::vector<ObjectAnnotation> generate_sequence(const SequenceConfig& cfg,
                                                std::span<const BundleConfig> bundles,
                                                std::uint64_t seed);

/// Domes then sequences, each unit seeded from (seed, unit index) and run
/// concurrently; output is in unit order.
std::vector<ObjectAnnotation> generate_profile(const ProfileConfig& profile,
                                               std::optional<std::uint64_t> seed = std::nullopt);

struct DatasetManifest
{
  std::string annotations_file;
  std::uint64_t seed = 0;
  std::string config_digest;
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;
};

/// Seeded shuffle then contiguous split; val and test get floor(n / 10)
/// records each. Throws Errc::TooFewRecords below 10 records and
/// Errc::ValidationError on duplicate record ids.
DatasetManifest split_dataset(std::span<const ObjectAnnotation> annotations, std::uint64_t seed);

json to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const json& j);

/// Generates the profile and writes the annotation file and manifest under
/// `out_dir`.
DatasetManifest write_dataset(const ProfileConfig& profile, const std::filesystem::path& out_dir,
                              std::optional<std::uint64_t> seed = std::nullopt);

/// Reads the manifest at `path` and the annotation file it references.
std::vector<ObjectAnnotation> load_dataset(const std::filesystem::path& manifest_path,
                                           DatasetManifest* manifest = nullptr);

}  // namespace posetrack::syngen

#endif  // POSETRACK_SYNGEN_HPP_
