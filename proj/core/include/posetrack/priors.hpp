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

#ifndef POSETRACK_PRIORS_HPP_
#define POSETRACK_PRIORS_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "posetrack/annotation.hpp"
#include "posetrack/geometry.hpp"

namespace posetrack::priors
{

inline constexpr int kNumHeads = 3;
inline constexpr int kPriorsPerHead = 6;
inline constexpr int kNumPriors = kNumHeads * kPriorsPerHead;

enum class YawBand
{
  Front,
  Left,
  Back,
  Right,
};

/// Partition: four pi/2-wide bands centered on 0, pi/2, pi, -pi/2 that tile
/// the yaw circle. Strict: the literal pi/4-wide bands starting at -pi/8,
/// which leave [7pi/8, pi] and (-pi, -pi/8) uncovered.
enum class RegionMode
{
  Partition,
  Strict,
};

std::string_view to_string(YawBand band);
std::string_view to_string(RegionMode mode);

/// Band containing theta, or nullopt when the mode leaves theta uncovered.
/// Intervals are half-open [lo, hi).
std::optional<YawBand> yaw_band(double theta, RegionMode mode = RegionMode::Partition);

struct RegionBounds
{
  int head = 1;
  YawBand band = YawBand::Front;
  double r_min = 0.0;
  double r_max = 0.0;
  double theta_center = 0.0;
  double theta_halfwidth = 0.0;

  /// phi >= 0, r in [r_min, r_max), theta in this band.
  bool contains(const geometry::SphericalParams& s, RegionMode mode) const;
  double midpoint() const { return 0.5 * (r_min + r_max); }

  friend bool operator==(const RegionBounds&, const RegionBounds&) = default;
};

struct Prior
{
  int prior_id = 0;
  RegionBounds bounds;
  geometry::EulerAngles anchor_orientation;  ///< ray-relative, see geometry::ray_relative_rotation
  double anchor_distance = 0.0;
  std::size_t sample_count = 0;
  bool from_data = false;  ///< false when the anchor is the region default
};

enum class Provenance
{
  Default,
  ComputedFromDataset,
};

struct PriorTable
{
  std::vector<Prior> priors;  ///< ordered by prior_id, 1..18
  Provenance provenance = Provenance::Default;
  RegionMode mode = RegionMode::Partition;
  std::size_t rejected_samples = 0;

  /// Throws Errc::InvalidId for ids outside 1..18.
  const Prior& at(int prior_id) const;
};

/// Priors 1-6 use head 1 (nearest), 7-12 head 2, 13-18 head 3. Within a head
/// the order is front-near, front-far, left, back-near, back-far, right.
PriorTable default_region_table(RegionMode mode = RegionMode::Partition);

/// Throws Errc::NegativePitch, Errc::DistanceOutOfRange or (strict mode)
/// Errc::YawUncovered.
int assign_region(const geometry::SphericalParams& s, RegionMode mode = RegionMode::Partition);

int head_of(int prior_id);

/// Anchor orientation of each region = chordal SO(3) mean of the ray-relative
/// orientations of the samples falling in it. Samples outside every region
/// are counted in rejected_samples. Regions without samples keep defaults.
PriorTable compute_priors(std::span<const ObjectAnnotation> dataset,
                          RegionMode mode = RegionMode::Partition);

json to_json(const PriorTable& table);
/// Throws Errc::ParseError on malformed input and Errc::InvalidPriorTable when
/// ids are incomplete or bounds differ from the default geometry.
PriorTable prior_table_from_json(const json& j);

}  // namespace posetrack::priors

#endif  // POSETRACK_PRIORS_HPP_
