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

#include "posetrack/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <tuple>

#include "posetrack/error.hpp"

namespace posetrack::fusion
{

using geometry::Vec3;

namespace
{

constexpr double kTimeEps = 1e-9;

struct DisjointSets
{
  std::vector<std::size_t> parent;

  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }

  std::size_t find(std::size_t i)
  {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  }

  void unite(std::size_t a, std::size_t b)
  {
    a = find(a);
    b = find(b);
    if (a != b) {
      parent[std::max(a, b)] = std::min(a, b);
    }
  }
};

bool detection_order(const WorldDetection& a, const WorldDetection& b)
{
  return std::tie(a.source_camera, a.detection_index) < std::tie(b.source_camera, b.detection_index);
}

}  // namespace

RigRegistry::RigRegistry(std::vector<geometry::CameraRig> rigs) : rigs_(std::move(rigs))
{
  for (std::size_t i = 0; i < rigs_.size(); ++i) {
    const std::string& id = rigs_[i].camera_id;
    if (id.empty() || !index_.emplace(id, i).second) {
      throw Error(Errc::ValidationError, "rig ids must be non-empty and unique: '" + id + "'");
    }
    rigs_[i].intrinsics.validate();
  }
}

bool RigRegistry::contains(const std::string& camera_id) const { return index_.count(camera_id) > 0; }

const geometry::CameraRig& RigRegistry::at(const std::string& camera_id) const
{
  const auto it = index_.find(camera_id);
  if (it == index_.end()) {
    throw Error(Errc::UnknownCamera, "camera '" + camera_id + "' is not registered");
  }
  return rigs_[it->second];
}

RigRegistry rig_registry_from_json(const json& j)
{
  if (!j.is_array()) {
    throw Error(Errc::ParseError, "rig registry must be a JSON list of camera rigs");
  }
  std::vector<geometry::CameraRig> rigs;
  for (const json& item : j) {
    rigs.push_back(io::rig_from_json(item));
  }
  return RigRegistry(std::move(rigs));
}

RigRegistry load_rig_registry(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in) {
    throw Error(Errc::ParseError, "cannot open rig registry " + path.string());
  }
  try {
    return rig_registry_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, path.string() + ": " + e.what());
  }
}

json to_json(const RigRegistry& registry)
{
  json out = json::array();
  for (const geometry::CameraRig& r : registry.rigs()) {
    out.push_back(io::to_json(r));
  }
  return out;
}

WorldDetection to_world(const codec::DecodedDetection& d, const geometry::CameraRig& rig,
                        double timestamp, std::size_t detection_index)
{
  const Vec3 p_cam = geometry::backproject(rig.intrinsics, d.origin_px, d.distance);
  const geometry::RotationMatrix r_cam =
      geometry::camera_rotation_from_ray(p_cam, geometry::euler_to_matrix(d.orientation));
  const geometry::Pose world = geometry::compose(rig.extrinsic_pose, geometry::Pose::from_matrix(r_cam, p_cam));

  WorldDetection w;
  w.world_position = world.translation;
  w.world_orientation = world.rotation;
  w.source_camera = rig.camera_id;
  w.camera_distance = (w.world_position - rig.position()).norm();
  w.timestamp = timestamp;
  w.detection_index = detection_index;
  return w;
}

WorldDetection to_world(const codec::DecodedDetection& d, const RigRegistry& rigs,
                        const std::string& camera_id, double timestamp, std::size_t detection_index)
{
  return to_world(d, rigs.at(camera_id), timestamp, detection_index);
}

std::vector<std::vector<WorldDetection>> associate(std::vector<WorldDetection> detections, double gate)
{
  std::stable_sort(detections.begin(), detections.end(), detection_order);
  DisjointSets sets(detections.size());
  for (std::size_t i = 0; i < detections.size(); ++i) {
    for (std::size_t j = i + 1; j < detections.size(); ++j) {
      if ((detections[i].world_position - detections[j].world_position).norm() < gate) {
        sets.unite(i, j);
      }
    }
  }
  // Roots are the smallest member index, so groups come out in first-member order.
  std::vector<std::vector<WorldDetection>> groups;
  std::map<std::size_t, std::size_t> slot;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    const std::size_t root = sets.find(i);
    auto [it, inserted] = slot.emplace(root, groups.size());
    if (inserted) {
      groups.emplace_back();
    }
    groups[it->second].push_back(detections[i]);
  }
  return groups;
}

FusedPosition fuse(std::span<const WorldDetection> group)
{
  if (group.empty()) {
    throw Error(Errc::EmptyGroup, "cannot fuse an empty group");
  }
  const WorldDetection* best = &group[0];
  std::set<std::string> cameras;
  for (const WorldDetection& w : group) {
    cameras.insert(w.source_camera);
    if (std::tie(w.camera_distance, w.source_camera, w.detection_index) <
        std::tie(best->camera_distance, best->source_camera, best->detection_index)) {
      best = &w;
    }
  }
  FusedPosition f;
  f.world_position = best->world_position;
  f.world_orientation = best->world_orientation;
  f.chosen_camera = best->source_camera;
  f.camera_distance = best->camera_distance;
  f.contributing_cameras.assign(cameras.begin(), cameras.end());
  return f;
}

FusionTracker::FusionTracker(RigRegistry rigs, TrackerConfig cfg) : rigs_(std::move(rigs)), cfg_(cfg)
{
  if (!(cfg_.rate > 0.0) || !(cfg_.gate > 0.0) || !(cfg_.staleness_ticks > 0.0)) {
    throw Error(Errc::ValidationError, "tracker rate, gate and staleness must be positive");
  }
}

bool FusionTracker::ingest(DetectionMessage message)
{
  std::lock_guard lock(mutex_);
  if (!rigs_.contains(message.camera_id) || !(message.timestamp >= 0.0)) {
    ++dropped_;
    return false;
  }
  auto& per_camera = buffer_[message.camera_id];
  const auto it = per_camera.find(message.timestamp);
  if (it == per_camera.end()) {
    per_camera.emplace(message.timestamp, std::move(message));
  } else if (to_json(message).dump() > to_json(it->second).dump()) {
    // Same camera, same instant: keep a canonical winner regardless of arrival order.
    it->second = std::move(message);
  }
  return true;
}

std::size_t FusionTracker::dropped() const
{
  std::lock_guard lock(mutex_);
  return dropped_;
}

std::vector<FusedPosition> FusionTracker::tick(double tick_time)
{
  const double oldest = tick_time - cfg_.staleness_ticks / cfg_.rate;
  std::vector<WorldDetection> detections;
  {
    std::lock_guard lock(mutex_);
    for (auto& [camera, messages] : buffer_) {
      // Drop what can never be selected again.
      messages.erase(messages.begin(), messages.upper_bound(oldest + kTimeEps));
      auto it = messages.upper_bound(tick_time + kTimeEps);
      if (it == messages.begin()) {
        continue;
      }
      --it;
      const DetectionMessage& m = it->second;
      const geometry::CameraRig& rig = rigs_.at(camera);
      for (std::size_t i = 0; i < m.detections.size(); ++i) {
        try {
          detections.push_back(to_world(m.detections[i], rig, m.timestamp, i));
        } catch (const Error&) {
          continue;  // malformed detection, nothing to fuse
        }
      }
    }
  }

  std::vector<FusedPosition> current;
  for (const auto& group : associate(std::move(detections), cfg_.gate)) {
    FusedPosition f = fuse(group);
    f.tick_timestamp = tick_time;
    current.push_back(std::move(f));
  }
  return assign_tracks(std::move(current));
}

std::vector<FusedPosition> FusionTracker::assign_tracks(std::vector<FusedPosition> current)
{
  struct Pair
  {
    double distance;
    std::size_t cur;
    std::size_t prev;
  };
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < current.size(); ++i) {
    for (std::size_t j = 0; j < previous_.size(); ++j) {
      const double d = (current[i].world_position - previous_[j].world_position).norm();
      if (d < cfg_.gate) {
        pairs.push_back({d, i, j});
      }
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    return std::tie(a.distance, a.cur, a.prev) < std::tie(b.distance, b.cur, b.prev);
  });
  std::vector<bool> cur_taken(current.size(), false);
  std::vector<bool> prev_taken(previous_.size(), false);
  for (const Pair& p : pairs) {
    if (!cur_taken[p.cur] && !prev_taken[p.prev]) {
      cur_taken[p.cur] = true;
      prev_taken[p.prev] = true;
      current[p.cur].track_id = previous_[p.prev].track_id;
    }
  }
  for (std::size_t i = 0; i < current.size(); ++i) {
    if (!cur_taken[i]) {
      current[i].track_id = next_track_id_++;
    }
  }
  previous_ = current;
  return current;
}

TrackerRun run_tracker(std::span<const DetectionMessage> messages, const RigRegistry& rigs,
                       const TrackerConfig& cfg, double duration)
{
  FusionTracker tracker(rigs, cfg);
  const std::int64_t ticks = std::llround(duration * cfg.rate);

  // Stable by timestamp: arrival order only matters within one instant,
  // and ingest resolves that canonically.
  std::vector<const DetectionMessage*> order;
  for (const DetectionMessage& m : messages) {
    order.push_back(&m);
  }
  std::stable_sort(order.begin(), order.end(), [](const DetectionMessage* a, const DetectionMessage* b) {
    return a->timestamp < b->timestamp;
  });

  TrackerRun run;
  std::size_t next = 0;
  for (std::int64_t k = 0; k < ticks; ++k) {
    const double t = static_cast<double>(k) / cfg.rate;
    while (next < order.size() && order[next]->timestamp <= t + kTimeEps) {
      tracker.ingest(*order[next++]);
    }
    run.ticks.push_back({t, tracker.tick(t)});
  }
  // Messages never reached by a tick are still checked against the registry.
  while (next < order.size()) {
    tracker.ingest(*order[next++]);
  }
  run.dropped = tracker.dropped();
  return run;
}

std::vector<DetectionMessage> messages_from_annotations(std::span<const ObjectAnnotation> annotations)
{
  std::map<std::tuple<double, std::string, std::string, std::int64_t>, DetectionMessage> grouped;
  for (const ObjectAnnotation& a : annotations) {
    auto& m = grouped[{a.timestamp, a.camera_id, a.source, a.frame_id}];
    m.camera_id = a.camera_id;
    m.timestamp = a.timestamp;
    m.detections.push_back(codec::detection_from_annotation(a));
  }
  std::vector<DetectionMessage> out;
  for (auto& [key, m] : grouped) {
    out.push_back(std::move(m));
  }
  return out;
}

NoiseModel noise_model_from_json(const json& j)
{
  io::expect_keys(j, {"pixel_sigma", "distance_sigma_fraction"}, "noise model");
  NoiseModel n;
  try {
    n.pixel_sigma = j.value("pixel_sigma", n.pixel_sigma);
    n.distance_sigma_fraction = j.value("distance_sigma_fraction", n.distance_sigma_fraction);
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, std::string("noise model: ") + e.what());
  }
  if (!(n.pixel_sigma >= 0.0) || !(n.distance_sigma_fraction >= 0.0)) {
    throw Error(Errc::ValidationError, "noise sigmas must be non-negative");
  }
  return n;
}

json to_json(const NoiseModel& n)
{
  return {{"pixel_sigma", n.pixel_sigma}, {"distance_sigma_fraction", n.distance_sigma_fraction}};
}

codec::DecodedDetection apply_noise(const codec::DecodedDetection& d, const NoiseModel& noise,
                                    std::mt19937_64& rng)
{
  std::normal_distribution<double> unit(0.0, 1.0);
  codec::DecodedDetection out = d;
  out.origin_px.u += noise.pixel_sigma * unit(rng);
  out.origin_px.v += noise.pixel_sigma * unit(rng);
  out.distance += noise.distance_sigma_fraction * d.distance * unit(rng);
  return out;
}

EvalResult evaluate_noise(std::span<const ObjectAnnotation> annotations, const NoiseModel& noise,
                          std::uint64_t seed, double gate)
{
  std::map<std::pair<std::string, std::int64_t>, std::vector<const ObjectAnnotation*>> frames;
  for (const ObjectAnnotation& a : annotations) {
    frames[{a.source, a.frame_id}].push_back(&a);
  }
  std::mt19937_64 rng(seed);
  EvalResult result;
  result.frames = frames.size();
  for (const auto& [key, members] : frames) {
    std::map<int, Vec3> truth;
    std::vector<WorldDetection> detections;
    for (std::size_t i = 0; i < members.size(); ++i) {
      const ObjectAnnotation& a = *members[i];
      const Vec3 gt = a.object_in_world().translation;
      truth.emplace(a.object_id, gt);
      const codec::DecodedDetection noisy = apply_noise(codec::detection_from_annotation(a), noise, rng);
      if (!(noisy.distance > 0.0)) {
        continue;
      }
      WorldDetection w = to_world(noisy, a.rig(), a.timestamp, i);
      result.camera_errors.push_back((w.world_position - gt).norm());
      detections.push_back(std::move(w));
    }
    for (const auto& group : associate(std::move(detections), gate)) {
      const FusedPosition f = fuse(group);
      double best = std::numeric_limits<double>::infinity();
      for (const auto& [id, p] : truth) {
        best = std::min(best, (f.world_position - p).norm());
      }
      result.fused_errors.push_back(best);
    }
  }
  return result;
}

double percentile(std::vector<double> values, double p)
{
  if (values.empty()) {
    throw Error(Errc::EmptyInput, "percentile of an empty set");
  }
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(p, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

json to_json(const DetectionMessage& m)
{
  json dets = json::array();
  for (const codec::DecodedDetection& d : m.detections) {
    dets.push_back(codec::to_json(d));
  }
  return {{"camera_id", m.camera_id}, {"timestamp", m.timestamp}, {"detections", dets}};
}

DetectionMessage message_from_json(const json& j)
{
  io::expect_keys(j, {"camera_id", "timestamp", "detections"}, "detection message");
  DetectionMessage m;
  try {
    m.camera_id = j.at("camera_id").get<std::string>();
    m.timestamp = j.at("timestamp").get<double>();
    for (const json& d : j.value("detections", json::array())) {
      m.detections.push_back(codec::detection_from_json(d));
    }
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, std::string("detection message: ") + e.what());
  }
  return m;
}

json to_json(const WorldDetection& w)
{
  return {{"world_position", io::to_json(w.world_position)},
          {"world_orientation", io::to_json(w.world_orientation)},
          {"source_camera", w.source_camera},
          {"camera_distance", w.camera_distance},
          {"timestamp", w.timestamp},
          {"detection_index", w.detection_index}};
}

json to_json(const FusedPosition& f)
{
  return {{"track_id", f.track_id},
          {"world_position", io::to_json(f.world_position)},
          {"world_orientation", io::to_json(f.world_orientation)},
          {"chosen_camera", f.chosen_camera},
          {"contributing_cameras", f.contributing_cameras},
          {"camera_distance", f.camera_distance},
          {"tick_timestamp", f.tick_timestamp}};
}

FusedPosition fused_from_json(const json& j)
{
  io::expect_keys(j,
                  {"track_id", "world_position", "world_orientation", "chosen_camera",
                   "contributing_cameras", "camera_distance", "tick_timestamp"},
                  "fused position");
  FusedPosition f;
  try {
    f.track_id = j.at("track_id").get<std::int64_t>();
    f.world_position = io::vec3_from_json(j.at("world_position"));
    f.world_orientation = io::euler_from_json(j.at("world_orientation"));
    f.chosen_camera = j.at("chosen_camera").get<std::string>();
    f.contributing_cameras = j.at("contributing_cameras").get<std::vector<std::string>>();
    f.camera_distance = j.value("camera_distance", 0.0);
    f.tick_timestamp = j.at("tick_timestamp").get<double>();
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, std::string("fused position: ") + e.what());
  }
  return f;
}

}  // namespace posetrack::fusion
