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

#include "posetrack/syngen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <random>
#include <set>

#include "posetrack/error.hpp"

namespace posetrack::syngen
{

using geometry::kPi;
using geometry::Pose;
using geometry::Vec3;

namespace
{

void fail(const std::string& msg) { throw Error(Errc::ValidationError, msg); }

template <typename T>
T value_or(const json& j, const char* key, T fallback, std::string_view ctx)
{
  if (!j.contains(key)) {
    return fallback;
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, std::string(ctx) + "." + key + ": " + e.what());
  }
}

template <typename T>
T required(const json& j, const char* key, std::string_view ctx)
{
  if (!j.contains(key)) {
    throw Error(Errc::ParseError, std::string(ctx) + ": missing field '" + key + "'");
  }
  return value_or<T>(j, key, T{}, ctx);
}

// A range is either {"min": a, "max": b} or a single number.
Range range_from_json(const json& j, std::string_view ctx)
{
  if (j.is_number()) {
    const double v = j.get<double>();
    return {v, v};
  }
  io::expect_keys(j, {"min", "max"}, ctx);
  return {required<double>(j, "min", ctx), required<double>(j, "max", ctx)};
}

Range range_or(const json& j, const char* key, Range fallback, std::string_view ctx)
{
  return j.contains(key) ? range_from_json(j.at(key), std::string(ctx) + "." + key) : fallback;
}

json to_json(const Range& r) { return {{"min", r.min}, {"max", r.max}}; }

// Returns items of a JSON array field, or none when absent.
const json& array_or_empty(const json& j, const char* key, std::string_view ctx)
{
  static const json empty = json::array();
  if (!j.contains(key)) {
    return empty;
  }
  if (!j.at(key).is_array()) {
    throw Error(Errc::ParseError, std::string(ctx) + "." + key + ": expected an array");
  }
  return j.at(key);
}

BundleConfig bundle_from_json(const json& j)
{
  io::expect_keys(j, {"id", "class_id", "cuboid"}, "bundle");
  BundleConfig b;
  b.id = required<std::string>(j, "id", "bundle");
  b.class_id = value_or<int>(j, "class_id", 0, "bundle");
  if (!j.contains("cuboid")) {
    throw Error(Errc::ParseError, "bundle '" + b.id + "': missing field 'cuboid'");
  }
  b.cuboid = io::cuboid_from_json(j.at("cuboid"));
  return b;
}

DomeConfig dome_from_json(const json& j)
{
  io::expect_keys(j,
                  {"id", "bundle", "target", "radius", "elevation", "radius_steps",
                   "elevation_steps", "azimuth_steps", "intrinsics", "jitter"},
                  "dome");
  DomeConfig d;
  d.id = required<std::string>(j, "id", "dome");
  d.bundle = required<std::string>(j, "bundle", "dome");
  if (j.contains("target")) {
    d.target = io::pose_from_json(j.at("target"));
  }
  d.radius = range_or(j, "radius", d.radius, "dome");
  d.elevation = range_or(j, "elevation", d.elevation, "dome");
  d.radius_steps = value_or<int>(j, "radius_steps", d.radius_steps, "dome");
  d.elevation_steps = value_or<int>(j, "elevation_steps", d.elevation_steps, "dome");
  d.azimuth_steps = value_or<int>(j, "azimuth_steps", d.azimuth_steps, "dome");
  if (j.contains("intrinsics")) {
    d.intrinsics = io::intrinsics_from_json(j.at("intrinsics"));
  }
  if (j.contains("jitter")) {
    const json& jj = j.at("jitter");
    io::expect_keys(jj, {"fov", "radius", "aim", "roll"}, "dome.jitter");
    d.fov_jitter = value_or<double>(jj, "fov", 0.0, "dome.jitter");
    d.radius_jitter = value_or<double>(jj, "radius", 0.0, "dome.jitter");
    d.aim_jitter = value_or<double>(jj, "aim", 0.0, "dome.jitter");
    d.roll_jitter = value_or<double>(jj, "roll", 0.0, "dome.jitter");
  }
  return d;
}

SequenceConfig sequence_from_json(const json& j)
{
  io::expect_keys(j,
                  {"id", "bundles", "object_count", "arena", "duration", "rate", "motion",
                   "cameras"},
                  "sequence");
  SequenceConfig s;
  s.id = required<std::string>(j, "id", "sequence");
  s.bundles = required<std::vector<std::string>>(j, "bundles", "sequence");
  s.object_count = value_or<int>(j, "object_count", s.object_count, "sequence");
  if (j.contains("arena")) {
    const json& a = j.at("arena");
    io::expect_keys(a, {"min_x", "min_y", "max_x", "max_y"}, "sequence.arena");
    s.arena.min_x = value_or<double>(a, "min_x", s.arena.min_x, "sequence.arena");
    s.arena.min_y = value_or<double>(a, "min_y", s.arena.min_y, "sequence.arena");
    s.arena.max_x = value_or<double>(a, "max_x", s.arena.max_x, "sequence.arena");
    s.arena.max_y = value_or<double>(a, "max_y", s.arena.max_y, "sequence.arena");
  }
  s.duration = value_or<double>(j, "duration", s.duration, "sequence");
  s.rate = value_or<double>(j, "rate", s.rate, "sequence");
  if (j.contains("motion")) {
    const json& m = j.at("motion");
    io::expect_keys(m, {"speed", "max_turn_rate", "waypoint_tolerance"}, "sequence.motion");
    s.motion.speed = range_or(m, "speed", s.motion.speed, "sequence.motion");
    s.motion.max_turn_rate =
        value_or<double>(m, "max_turn_rate", s.motion.max_turn_rate, "sequence.motion");
    s.motion.waypoint_tolerance =
        value_or<double>(m, "waypoint_tolerance", s.motion.waypoint_tolerance, "sequence.motion");
  }
  for (const json& c : array_or_empty(j, "cameras", "sequence")) {
    s.cameras.push_back(io::rig_from_json(c));
  }
  return s;
}

void validate_range(const Range& r, const std::string& what)
{
  if (!std::isfinite(r.min) || !std::isfinite(r.max) || r.min > r.max) {
    fail(what + ": need finite min <= max");
  }
}

void validate_intrinsics(const geometry::CameraIntrinsics& k, const std::string& what)
{
  try {
    k.validate();
  } catch (const Error& e) {
    fail(what + ": " + e.what());
  }
}

void validate_dome(const DomeConfig& d, const ProfileConfig& p)
{
  const std::string ctx = "dome '" + d.id + "'";
  p.bundle(d.bundle);
  validate_range(d.radius, ctx + " radius");
  validate_range(d.elevation, ctx + " elevation");
  if (d.radius_steps < 1 || d.elevation_steps < 1 || d.azimuth_steps < 1) {
    fail(ctx + ": step counts must be positive");
  }
  for (double j : {d.fov_jitter, d.radius_jitter, d.aim_jitter, d.roll_jitter}) {
    if (!(j >= 0.0)) {
      fail(ctx + ": jitter must be non-negative");
    }
  }
  if (!(d.radius.min - d.radius_jitter > 0.0)) {
    fail(ctx + ": radius minus jitter must stay positive");
  }
  if (!(d.elevation.min >= 0.0) || !(d.elevation.max < kPi / 2.0)) {
    fail(ctx + ": elevation must lie in [0, pi/2)");
  }
  validate_intrinsics(d.intrinsics, ctx + " intrinsics");
  if (!(d.intrinsics.horizontal_fov - d.fov_jitter > 0.0) ||
      !(d.intrinsics.horizontal_fov + d.fov_jitter < kPi)) {
    fail(ctx + ": field of view jitter leaves (0, pi)");
  }
}

void validate_sequence(const SequenceConfig& s, const ProfileConfig& p)
{
  const std::string ctx = "sequence '" + s.id + "'";
  if (s.bundles.empty()) {
    fail(ctx + ": needs at least one bundle");
  }
  for (const std::string& b : s.bundles) {
    p.bundle(b);
  }
  if (s.object_count < 1) {
    fail(ctx + ": object_count must be positive");
  }
  if (!(s.arena.min_x < s.arena.max_x) || !(s.arena.min_y < s.arena.max_y)) {
    fail(ctx + ": arena bounds inverted");
  }
  if (!(s.duration > 0.0) || !(s.rate > 0.0)) {
    fail(ctx + ": duration and rate must be positive");
  }
  if (s.frame_count() < 1) {
    fail(ctx + ": duration * rate must give at least one frame");
  }
  validate_range(s.motion.speed, ctx + " speed");
  if (!(s.motion.speed.min >= 0.0) || !(s.motion.speed.max > 0.0)) {
    fail(ctx + ": speeds must be non-negative with a positive maximum");
  }
  if (!(s.motion.max_turn_rate > 0.0) || !(s.motion.waypoint_tolerance >= 0.0)) {
    fail(ctx + ": turn rate must be positive and tolerance non-negative");
  }
  if (s.cameras.empty()) {
    fail(ctx + ": needs at least one camera");
  }
  std::set<std::string> ids;
  for (const geometry::CameraRig& c : s.cameras) {
    if (c.camera_id.empty() || !ids.insert(c.camera_id).second) {
      fail(ctx + ": camera ids must be non-empty and unique");
    }
    validate_intrinsics(c.intrinsics, ctx + " camera '" + c.camera_id + "'");
    if (!(c.position().z() >= 0.0)) {
      fail(ctx + ": camera '" + c.camera_id + "' is below the ground plane");
    }
  }
}

double uniform(std::mt19937_64& rng, double lo, double hi)
{
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double symmetric(std::mt19937_64& rng, double halfwidth)
{
  // Always consume one draw so the stream layout does not depend on the value.
  const double u = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
  return u * halfwidth;
}

double step_value(const Range& r, int i, int steps)
{
  return steps == 1 ? r.min : r.min + (r.max - r.min) * i / (steps - 1);
}

std::string padded(std::int64_t v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06lld", static_cast<long long>(v));
  return buf;
}

std::uint64_t unit_seed(std::uint64_t seed, std::size_t unit)
{
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(unit)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

bool visible(const ObjectAnnotation& a)
{
  return a.intrinsics.contains(a.screen_points.origin);
}

}  // namespace

std::int64_t SequenceConfig::frame_count() const { return std::llround(duration * rate); }

const BundleConfig& ProfileConfig::bundle(const std::string& id) const
{
  for (const BundleConfig& b : bundles) {
    if (b.id == id) {
      return b;
    }
  }
  throw Error(Errc::ValidationError, "unknown bundle '" + id + "'");
}

void validate(const ProfileConfig& p)
{
  if (p.domes.empty() && p.sequences.empty()) {
    fail("a profile needs at least one dome or sequence");
  }
  std::set<std::string> bundle_ids;
  for (const BundleConfig& b : p.bundles) {
    if (b.id.empty() || !bundle_ids.insert(b.id).second) {
      fail("bundle ids must be non-empty and unique");
    }
    if (b.class_id < 0) {
      fail("bundle '" + b.id + "': class_id must be non-negative");
    }
    try {
      b.cuboid.validate();
    } catch (const Error& e) {
      fail("bundle '" + b.id + "': " + e.what());
    }
  }
  std::set<std::string> unit_ids;
  for (const DomeConfig& d : p.domes) {
    if (d.id.empty() || !unit_ids.insert(d.id).second) {
      fail("dome and sequence ids must be non-empty and unique");
    }
    validate_dome(d, p);
  }
  for (const SequenceConfig& s : p.sequences) {
    if (s.id.empty() || !unit_ids.insert(s.id).second) {
      fail("dome and sequence ids must be non-empty and unique");
    }
    validate_sequence(s, p);
  }
  if (p.output.annotations_file.empty() || p.output.manifest_file.empty()) {
    fail("output file names must be non-empty");
  }
}

ProfileConfig load_profile(const json& document)
{
  io::expect_keys(document, {"name", "seed", "output", "bundles", "domes", "sequences"}, "profile");
  ProfileConfig p;
  p.name = value_or<std::string>(document, "name", p.name, "profile");
  p.seed = value_or<std::uint64_t>(document, "seed", p.seed, "profile");
  if (document.contains("output")) {
    const json& o = document.at("output");
    io::expect_keys(o, {"annotations_file", "manifest_file", "image_pattern"}, "output");
    p.output.annotations_file =
        value_or<std::string>(o, "annotations_file", p.output.annotations_file, "output");
    p.output.manifest_file = value_or<std::string>(o, "manifest_file", p.output.manifest_file, "output");
    p.output.image_pattern = value_or<std::string>(o, "image_pattern", p.output.image_pattern, "output");
  }
  for (const json& b : array_or_empty(document, "bundles", "profile")) {
    p.bundles.push_back(bundle_from_json(b));
  }
  for (const json& d : array_or_empty(document, "domes", "profile")) {
    p.domes.push_back(dome_from_json(d));
  }
  for (const json& s : array_or_empty(document, "sequences", "profile")) {
    p.sequences.push_back(sequence_from_json(s));
  }
  validate(p);
  return p;
}

ProfileConfig load_profile_file(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in) {
    throw Error(Errc::ParseError, "cannot open profile " + path.string());
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, path.string() + ": " + e.what());
  }
  return load_profile(doc);
}

json serialize(const ProfileConfig& p)
{
  json bundles = json::array();
  for (const BundleConfig& b : p.bundles) {
    bundles.push_back({{"id", b.id}, {"class_id", b.class_id}, {"cuboid", io::to_json(b.cuboid)}});
  }
  json domes = json::array();
  for (const DomeConfig& d : p.domes) {
    domes.push_back({
      {"id", d.id},
      {"bundle", d.bundle},
      {"target", io::to_json(d.target)},
      {"radius", to_json(d.radius)},
      {"elevation", to_json(d.elevation)},
      {"radius_steps", d.radius_steps},
      {"elevation_steps", d.elevation_steps},
      {"azimuth_steps", d.azimuth_steps},
      {"intrinsics", io::to_json(d.intrinsics)},
      {"jitter",
       {{"fov", d.fov_jitter}, {"radius", d.radius_jitter}, {"aim", d.aim_jitter},
        {"roll", d.roll_jitter}}},
    });
  }
  json sequences = json::array();
  for (const SequenceConfig& s : p.sequences) {
    json cameras = json::array();
    for (const geometry::CameraRig& c : s.cameras) {
      cameras.push_back(io::to_json(c));
    }
    sequences.push_back({
      {"id", s.id},
      {"bundles", s.bundles},
      {"object_count", s.object_count},
      {"arena",
       {{"min_x", s.arena.min_x}, {"min_y", s.arena.min_y}, {"max_x", s.arena.max_x},
        {"max_y", s.arena.max_y}}},
      {"duration", s.duration},
      {"rate", s.rate},
      {"motion",
       {{"speed", to_json(s.motion.speed)}, {"max_turn_rate", s.motion.max_turn_rate},
        {"waypoint_tolerance", s.motion.waypoint_tolerance}}},
      {"cameras", cameras},
    });
  }
  return {
    {"name", p.name},
    {"seed", p.seed},
    {"output",
     {{"annotations_file", p.output.annotations_file}, {"manifest_file", p.output.manifest_file},
      {"image_pattern", p.output.image_pattern}}},
    {"bundles", bundles},
    {"domes", domes},
    {"sequences", sequences},
  };
}

std::string config_digest(const ProfileConfig& profile)
{
  const std::string text = serialize(profile).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<ObjectAnnotation> generate_dome(const DomeConfig& cfg, const BundleConfig& bundle,
                                            std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::vector<ObjectAnnotation> out;
  std::int64_t shot = 0;
  for (int ri = 0; ri < cfg.radius_steps; ++ri) {
    for (int ei = 0; ei < cfg.elevation_steps; ++ei) {
      for (int ai = 0; ai < cfg.azimuth_steps; ++ai, ++shot) {
        const double theta = geometry::wrap_angle(2.0 * kPi * ai / cfg.azimuth_steps);
        const double phi = step_value(cfg.elevation, ei, cfg.elevation_steps);
        const double r = step_value(cfg.radius, ri, cfg.radius_steps) + symmetric(rng, cfg.radius_jitter);
        const Vec3 aim_offset(symmetric(rng, cfg.aim_jitter), symmetric(rng, cfg.aim_jitter),
                              symmetric(rng, cfg.aim_jitter));
        const double roll = symmetric(rng, cfg.roll_jitter);
        const double fov = cfg.intrinsics.horizontal_fov + symmetric(rng, cfg.fov_jitter);

        // Camera position in the object frame (X = -left, Y = forward, Z = up).
        const Vec3 cam_obj(-r * std::sin(theta) * std::cos(phi), r * std::cos(theta) * std::cos(phi),
                           r * std::sin(phi));
        const Vec3 eye = cfg.target.apply(cam_obj);
        const Vec3 aim = cfg.target.translation + aim_offset;

        geometry::CameraRig rig;
        rig.camera_id = cfg.id + "-cam";
        rig.intrinsics = cfg.intrinsics;
        rig.intrinsics.horizontal_fov = fov;
        try {
          const Pose view = geometry::look_at(eye, aim);
          rig.extrinsic_pose = Pose::from_matrix(view.matrix() * geometry::rot_z(roll), eye);
          ObjectAnnotation a = make_annotation(rig, bundle.cuboid, cfg.target);
          if (!visible(a)) {
            continue;
          }
          a.record_id = cfg.id + "-" + padded(shot);
          a.source = cfg.id;
          a.frame_id = shot;
          a.class_id = bundle.class_id;
          out.push_back(std::move(a));
        } catch (const Error&) {
          continue;  // degenerate view or cuboid behind the camera
        }
      }
    }
  }
  return out;
}

std::vector<std::vector<Pose>> simulate_motion(const SequenceConfig& cfg, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  const ArenaBounds& a = cfg.arena;
  const double dt = 1.0 / cfg.rate;
  const MotionConfig& m = cfg.motion;

  struct Agent
  {
    Vec3 pos;
    double heading;
    double speed;
    Vec3 waypoint;
  };
  auto random_point = [&] {
    const double x = uniform(rng, a.min_x, a.max_x);
    const double y = uniform(rng, a.min_y, a.max_y);
    return Vec3(x, y, 0.0);
  };
  auto random_speed = [&] {
    return m.speed.min == m.speed.max ? m.speed.min : uniform(rng, m.speed.min, m.speed.max);
  };

  std::vector<Agent> agents;
  for (int i = 0; i < cfg.object_count; ++i) {
    Agent g;
    g.pos = random_point();
    g.heading = geometry::wrap_angle(uniform(rng, -kPi, kPi));
    g.waypoint = random_point();
    g.speed = random_speed();
    agents.push_back(g);
  }

  const std::int64_t frames = cfg.frame_count();
  std::vector<std::vector<Pose>> out;
  out.reserve(static_cast<std::size_t>(frames));
  for (std::int64_t k = 0; k < frames; ++k) {
    std::vector<Pose> poses;
    for (const Agent& g : agents) {
      Pose p;
      p.translation = g.pos;
      // Object forward (+Y) points along the heading.
      p.rotation.yaw = geometry::wrap_angle(g.heading - kPi / 2.0);
      poses.push_back(p);
    }
    out.push_back(std::move(poses));

    for (Agent& g : agents) {
      // A waypoint inside the turning circle may be unreachable; count it
      // as reached from one diameter away.
      const double reach = m.waypoint_tolerance + 2.0 * g.speed / m.max_turn_rate;
      if ((g.waypoint - g.pos).norm() <= reach) {
        g.waypoint = random_point();
        g.speed = random_speed();
      }
      const Vec3 d = g.waypoint - g.pos;
      const double desired = std::atan2(d.y(), d.x());
      const double max_turn = m.max_turn_rate * dt;
      const double turn = std::clamp(geometry::wrap_angle(desired - g.heading), -max_turn, max_turn);
      g.heading = geometry::wrap_angle(g.heading + turn);
      g.pos += g.speed * dt * Vec3(std::cos(g.heading), std::sin(g.heading), 0.0);
      g.pos.x() = std::clamp(g.pos.x(), a.min_x, a.max_x);
      g.pos.y() = std::clamp(g.pos.y(), a.min_y, a.max_y);
    }
  }
  return out;
}

std::vector<ObjectAnnotation> generate_sequence(const SequenceConfig& cfg,
                                                std::span<const BundleConfig> bundles,
                                                std::uint64_t seed)
{
  if (bundles.size() != cfg.bundles.size() || bundles.empty()) {
    throw Error(Errc::ValidationError, "sequence '" + cfg.id + "': bundle list does not match");
  }
  const auto frames = simulate_motion(cfg, seed);
  std::vector<ObjectAnnotation> out;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const double timestamp = static_cast<double>(k) / cfg.rate;
    for (const geometry::CameraRig& rig : cfg.cameras) {
      for (std::size_t i = 0; i < frames[k].size(); ++i) {
        const BundleConfig& b = bundles[i % bundles.size()];
        try {
          ObjectAnnotation a = make_annotation(rig, b.cuboid, frames[k][i]);
          if (!visible(a)) {
            continue;
          }
          a.record_id = cfg.id + "-" + padded(static_cast<std::int64_t>(k)) + "-" + rig.camera_id +
                        "-" + std::to_string(i);
          a.source = cfg.id;
          a.frame_id = static_cast<std::int64_t>(k);
          a.timestamp = timestamp;
          a.object_id = static_cast<int>(i);
          a.class_id = b.class_id;
          out.push_back(std::move(a));
        } catch (const Error&) {
          continue;  // behind this camera
        }
      }
    }
  }
  return out;
}

std::vector<ObjectAnnotation> generate_profile(const ProfileConfig& profile,
                                               std::optional<std::uint64_t> seed)
{
  validate(profile);
  const std::uint64_t base = seed.value_or(profile.seed);
  std::vector<std::future<std::vector<ObjectAnnotation>>> units;
  std::size_t unit = 0;
  for (const DomeConfig& d : profile.domes) {
    units.push_back(std::async(std::launch::async, [&profile, &d, s = unit_seed(base, unit)] {
      return generate_dome(d, profile.bundle(d.bundle), s);
    }));
    ++unit;
  }
  for (const SequenceConfig& sq : profile.sequences) {
    units.push_back(std::async(std::launch::async, [&profile, &sq, s = unit_seed(base, unit)] {
      std::vector<BundleConfig> bundles;
      for (const std::string& id : sq.bundles) {
        bundles.push_back(profile.bundle(id));
      }
      return generate_sequence(sq, bundles, s);
    }));
    ++unit;
  }
  std::vector<ObjectAnnotation> out;
  for (auto& f : units) {
    auto part = f.get();
    std::move(part.begin(), part.end(), std::back_inserter(out));
  }
  return out;
}

DatasetManifest split_dataset(std::span<const ObjectAnnotation> annotations, std::uint64_t seed)
{
  const std::size_t n = annotations.size();
  if (n < 10) {
    throw Error(Errc::TooFewRecords,
                "split needs at least 10 records, got " + std::to_string(n));
  }
  std::vector<std::string> ids;
  ids.reserve(n);
  for (const ObjectAnnotation& a : annotations) {
    ids.push_back(a.record_id);
  }
  if (std::set<std::string>(ids.begin(), ids.end()).size() != n) {
    throw Error(Errc::ValidationError, "record ids must be unique");
  }
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);

  const std::size_t tenth = n / 10;
  const std::size_t train = n - 2 * tenth;
  DatasetManifest m;
  m.seed = seed;
  m.train.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(train));
  m.val.assign(ids.begin() + static_cast<std::ptrdiff_t>(train),
               ids.begin() + static_cast<std::ptrdiff_t>(train + tenth));
  m.test.assign(ids.begin() + static_cast<std::ptrdiff_t>(train + tenth), ids.end());
  return m;
}

json to_json(const DatasetManifest& m)
{
  return {{"annotations", m.annotations_file}, {"seed", m.seed}, {"config_digest", m.config_digest},
          {"train", m.train}, {"val", m.val}, {"test", m.test}};
}

DatasetManifest manifest_from_json(const json& j)
{
  io::expect_keys(j, {"annotations", "seed", "config_digest", "train", "val", "test"}, "manifest");
  DatasetManifest m;
  m.annotations_file = required<std::string>(j, "annotations", "manifest");
  m.seed = value_or<std::uint64_t>(j, "seed", 0, "manifest");
  m.config_digest = value_or<std::string>(j, "config_digest", "", "manifest");
  m.train = value_or<std::vector<std::string>>(j, "train", {}, "manifest");
  m.val = value_or<std::vector<std::string>>(j, "val", {}, "manifest");
  m.test = value_or<std::vector<std::string>>(j, "test", {}, "manifest");
  return m;
}

DatasetManifest write_dataset(const ProfileConfig& profile, const std::filesystem::path& out_dir,
                              std::optional<std::uint64_t> seed)
{
  const std::uint64_t s = seed.value_or(profile.seed);
  const std::vector<ObjectAnnotation> annotations = generate_profile(profile, s);
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream out(out_dir / profile.output.annotations_file, std::ios::binary);
    if (!out) {
      throw Error(Errc::ValidationError, "cannot write " + (out_dir / profile.output.annotations_file).string());
    }
    io::write_annotations(out, annotations);
  }
  DatasetManifest m = split_dataset(annotations, s);
  m.annotations_file = profile.output.annotations_file;
  m.config_digest = config_digest(profile);
  std::ofstream out(out_dir / profile.output.manifest_file, std::ios::binary);
  out << to_json(m).dump(2) << '\n';
  return m;
}

std::vector<ObjectAnnotation> load_dataset(const std::filesystem::path& manifest_path,
                                           DatasetManifest* manifest)
{
  std::ifstream in(manifest_path);
  if (!in) {
    throw Error(Errc::ParseError, "cannot open manifest " + manifest_path.string());
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, manifest_path.string() + ": " + e.what());
  }
  DatasetManifest m = manifest_from_json(doc);
  const std::filesystem::path ann = manifest_path.parent_path() / m.annotations_file;
  std::ifstream ain(ann);
  if (!ain) {
    throw Error(Errc::ParseError, "cannot open annotations " + ann.string());
  }
  auto out = io::read_annotations(ain);
  if (manifest) {
    *manifest = std::move(m);
  }
  return out;
}

}  // namespace posetrack::syngen
