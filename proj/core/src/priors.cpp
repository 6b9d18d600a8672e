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

#include "posetrack/priors.hpp"

#include <array>
#include <cmath>
#include <string>

#include "posetrack/error.hpp"

namespace posetrack::priors
{

using geometry::kPi;
using geometry::RotationMatrix;
using geometry::SphericalParams;

namespace
{

// Radial boundaries per head, meters. Front and back regions split once by
// distance (near/far); lateral regions span one interval.
struct HeadRadii
{
  double near_min, split, far_max;
  double lateral_min, lateral_max;
};

constexpr std::array<HeadRadii, kNumHeads> kHeadRadii{{
  {0.0, 17.5, 32.5, 0.0, 25.0},
  {32.5, 50.0, 70.0, 25.0, 60.0},
  {70.0, 90.0, 110.0, 60.0, 100.0},
}};

double band_center(YawBand band, RegionMode mode)
{
  const int idx = static_cast<int>(band);
  if (mode == RegionMode::Strict) {
    return idx * kPi / 4.0;
  }
  return geometry::wrap_angle(idx * kPi / 2.0);
}

double band_halfwidth(RegionMode mode)
{
  return mode == RegionMode::Strict ? kPi / 8.0 : kPi / 4.0;
}

std::array<RegionBounds, kPriorsPerHead> head_regions(int head, RegionMode mode)
{
  const HeadRadii& hr = kHeadRadii[static_cast<std::size_t>(head - 1)];
  auto make = [&](YawBand band, double lo, double hi) {
    return RegionBounds{head, band, lo, hi, band_center(band, mode), band_halfwidth(mode)};
  };
  return {
    make(YawBand::Front, hr.near_min, hr.split),
    make(YawBand::Front, hr.split, hr.far_max),
    make(YawBand::Left, hr.lateral_min, hr.lateral_max),
    make(YawBand::Back, hr.near_min, hr.split),
    make(YawBand::Back, hr.split, hr.far_max),
    make(YawBand::Right, hr.lateral_min, hr.lateral_max),
  };
}

std::optional<YawBand> parse_band(const std::string& s)
{
  for (YawBand b : {YawBand::Front, YawBand::Left, YawBand::Back, YawBand::Right}) {
    if (to_string(b) == s) {
      return b;
    }
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(YawBand band)
{
  switch (band) {
    case YawBand::Front: return "front";
    case YawBand::Left: return "left";
    case YawBand::Back: return "back";
    case YawBand::Right: return "right";
  }
  return "?";
}

std::string_view to_string(RegionMode mode)
{
  return mode == RegionMode::Strict ? "strict" : "partition";
}

std::optional<YawBand> yaw_band(double theta, RegionMode mode)
{
  if (!std::isfinite(theta)) {
    return std::nullopt;
  }
  if (mode == RegionMode::Strict) {
    const double a = geometry::wrap_angle(theta) + kPi / 8.0;
    if (a < 0.0 || a >= kPi) {
      return std::nullopt;
    }
    const int idx = std::min(3, static_cast<int>(std::floor(a / (kPi / 4.0))));
    return static_cast<YawBand>(idx);
  }
  double a = std::fmod(theta + kPi / 4.0, 2.0 * kPi);
  if (a < 0.0) {
    a += 2.0 * kPi;
  }
  if (a >= 2.0 * kPi) {
    a = 0.0;
  }
  const int idx = std::min(3, static_cast<int>(std::floor(a / (kPi / 2.0))));
  return static_cast<YawBand>(idx);
}

bool RegionBounds::contains(const SphericalParams& s, RegionMode mode) const
{
  if (!(s.phi >= 0.0) || !(s.r >= r_min) || !(s.r < r_max)) {
    return false;
  }
  const auto b = yaw_band(s.theta, mode);
  return b && *b == band;
}

const Prior& PriorTable::at(int prior_id) const
{
  if (prior_id < 1 || prior_id > static_cast<int>(priors.size())) {
    throw Error(Errc::InvalidId, "prior id " + std::to_string(prior_id) + " out of range");
  }
  return priors[static_cast<std::size_t>(prior_id - 1)];
}

PriorTable default_region_table(RegionMode mode)
{
  PriorTable table;
  table.mode = mode;
  table.priors.reserve(kNumPriors);
  int id = 1;
  for (int head = 1; head <= kNumHeads; ++head) {
    for (const RegionBounds& b : head_regions(head, mode)) {
      Prior p;
      p.prior_id = id++;
      p.bounds = b;
      p.anchor_orientation = geometry::matrix_to_euler(geometry::view_rotation(b.theta_center, 0.0));
      p.anchor_distance = b.midpoint();
      table.priors.push_back(p);
    }
  }
  return table;
}

int assign_region(const SphericalParams& s, RegionMode mode)
{
  if (!(s.phi >= 0.0)) {
    throw Error(Errc::NegativePitch, "camera below the object's base plane");
  }
  const auto band = yaw_band(s.theta, mode);
  if (!band) {
    throw Error(Errc::YawUncovered, "yaw not covered by any strict-mode region");
  }
  if (!(s.r >= 0.0)) {
    throw Error(Errc::DistanceOutOfRange, "negative or undefined distance");
  }
  for (int head = 1; head <= kNumHeads; ++head) {
    const auto regions = head_regions(head, mode);
    for (std::size_t i = 0; i < regions.size(); ++i) {
      const RegionBounds& b = regions[i];
      if (b.band == *band && s.r >= b.r_min && s.r < b.r_max) {
        return (head - 1) * kPriorsPerHead + static_cast<int>(i) + 1;
      }
    }
  }
  throw Error(Errc::DistanceOutOfRange,
              "r = " + std::to_string(s.r) + " beyond the farthest " +
                  std::string(to_string(*band)) + " region");
}

int head_of(int prior_id)
{
  if (prior_id < 1 || prior_id > kNumPriors) {
    throw Error(Errc::InvalidId, "prior id " + std::to_string(prior_id) + " out of range");
  }
  return (prior_id - 1) / kPriorsPerHead + 1;
}

PriorTable compute_priors(std::span<const ObjectAnnotation> dataset, RegionMode mode)
{
  if (dataset.empty()) {
    throw Error(Errc::EmptyDataset, "compute_priors needs at least one annotation");
  }
  PriorTable table = default_region_table(mode);
  table.provenance = Provenance::ComputedFromDataset;

  std::vector<std::vector<RotationMatrix>> buckets(kNumPriors);
  for (const ObjectAnnotation& a : dataset) {
    try {
      const geometry::Pose pose = a.object_in_camera();
      const int id = assign_region(geometry::spherical_params(pose), mode);
      buckets[static_cast<std::size_t>(id - 1)].push_back(geometry::ray_relative_rotation(pose));
    } catch (const Error&) {
      ++table.rejected_samples;
    }
  }

  for (std::size_t i = 0; i < buckets.size(); ++i) {
    Prior& p = table.priors[i];
    p.sample_count = buckets[i].size();
    if (!buckets[i].empty()) {
      p.anchor_orientation = geometry::matrix_to_euler(geometry::so3_mean(buckets[i]));
      p.from_data = true;
    }
  }
  return table;
}

json to_json(const PriorTable& table)
{
  json priors = json::array();
  for (const Prior& p : table.priors) {
    priors.push_back({
      {"prior_id", p.prior_id},
      {"head", p.bounds.head},
      {"band", to_string(p.bounds.band)},
      {"r_min", p.bounds.r_min},
      {"r_max", p.bounds.r_max},
      {"theta_center", p.bounds.theta_center},
      {"theta_halfwidth", p.bounds.theta_halfwidth},
      {"anchor_orientation", io::to_json(p.anchor_orientation)},
      {"anchor_distance", p.anchor_distance},
      {"sample_count", p.sample_count},
      {"from_data", p.from_data},
    });
  }
  return {
    {"provenance", table.provenance == Provenance::Default ? "default" : "computed_from_dataset"},
    {"mode", to_string(table.mode)},
    {"rejected_samples", table.rejected_samples},
    {"priors", priors},
  };
}

PriorTable prior_table_from_json(const json& j)
{
  io::expect_keys(j, {"provenance", "mode", "rejected_samples", "priors"}, "prior table");
  PriorTable table;
  try {
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "partition") {
      table.mode = RegionMode::Partition;
    } else if (mode == "strict") {
      table.mode = RegionMode::Strict;
    } else {
      throw Error(Errc::ParseError, "unknown region mode '" + mode + "'");
    }
    const std::string prov = j.at("provenance").get<std::string>();
    if (prov == "default") {
      table.provenance = Provenance::Default;
    } else if (prov == "computed_from_dataset") {
      table.provenance = Provenance::ComputedFromDataset;
    } else {
      throw Error(Errc::ParseError, "unknown provenance '" + prov + "'");
    }
    table.rejected_samples = j.value("rejected_samples", std::size_t{0});

    const PriorTable reference = default_region_table(table.mode);
    const json& items = j.at("priors");
    if (!items.is_array() || items.size() != kNumPriors) {
      throw Error(Errc::InvalidPriorTable, "a prior table holds exactly 18 priors");
    }
    table.priors.resize(kNumPriors);
    std::array<bool, kNumPriors> seen{};
    for (const json& item : items) {
      io::expect_keys(item,
                      {"prior_id", "head", "band", "r_min", "r_max", "theta_center",
                       "theta_halfwidth", "anchor_orientation", "anchor_distance",
                       "sample_count", "from_data"},
                      "prior");
      Prior p;
      p.prior_id = item.at("prior_id").get<int>();
      if (p.prior_id < 1 || p.prior_id > kNumPriors || seen[p.prior_id - 1]) {
        throw Error(Errc::InvalidPriorTable, "prior ids must be unique and within 1..18");
      }
      seen[p.prior_id - 1] = true;
      const auto band = parse_band(item.at("band").get<std::string>());
      if (!band) {
        throw Error(Errc::ParseError, "unknown yaw band");
      }
      p.bounds = RegionBounds{item.at("head").get<int>(), *band,
                              item.at("r_min").get<double>(), item.at("r_max").get<double>(),
                              item.at("theta_center").get<double>(),
                              item.at("theta_halfwidth").get<double>()};
      if (!(p.bounds == reference.at(p.prior_id).bounds)) {
        throw Error(Errc::InvalidPriorTable,
                    "prior " + std::to_string(p.prior_id) + " bounds differ from the region geometry");
      }
      p.anchor_orientation = io::euler_from_json(item.at("anchor_orientation"));
      p.anchor_distance = item.at("anchor_distance").get<double>();
      if (!(p.anchor_distance >= p.bounds.r_min && p.anchor_distance <= p.bounds.r_max)) {
        throw Error(Errc::InvalidPriorTable, "anchor distance outside its region");
      }
      p.sample_count = item.value("sample_count", std::size_t{0});
      p.from_data = item.value("from_data", false);
      table.priors[static_cast<std::size_t>(p.prior_id - 1)] = p;
    }
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, std::string("prior table: ") + e.what());
  }
  return table;
}

}  // namespace posetrack::priors
