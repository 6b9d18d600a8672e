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
#include <map>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <gtest/gtest.h>

#include "posetrack/syngen.hpp"
#include "test_support.hpp"

namespace posetrack::fusion
{
namespace
{

using geometry::Vec3;
using testing::error_code;

codec::DecodedDetection centered(double distance)
{
  codec::DecodedDetection d;
  d.origin_px = testing::wide_intrinsics().center();
  d.distance = distance;
  d.orientation = geometry::matrix_to_euler(geometry::view_rotation(0.0, 0.0));
  return d;
}

WorldDetection at(const std::string& camera, std::size_t index, const Vec3& p, double distance = 10.0)
{
  WorldDetection w;
  w.source_camera = camera;
  w.detection_index = index;
  w.world_position = p;
  w.camera_distance = distance;
  return w;
}

std::string dump(const TrackerRun& run)
{
  std::string out;
  for (const TickOutput& t : run.ticks) {
    for (const FusedPosition& f : t.positions) {
      out += to_json(f).dump();
      out += '\n';
    }
    out += "--\n";
  }
  return out;
}

TEST(ToWorld, IdentityExtrinsicsKeepsTheCameraFrame)
{
  const geometry::CameraRig rig{"cam", testing::wide_intrinsics(), geometry::Pose::identity()};
  const WorldDetection w = to_world(centered(5.0), rig);
  EXPECT_NEAR(w.world_position.x(), 0.0, 1e-12);
  EXPECT_NEAR(w.world_position.y(), 0.0, 1e-12);
  EXPECT_NEAR(w.world_position.z(), 5.0, 1e-12);
  EXPECT_NEAR(w.camera_distance, 5.0, 1e-12);
}

TEST(ToWorld, LevelCameraFacingNorth)
{
  const geometry::CameraRig rig{"north", testing::wide_intrinsics(),
                                geometry::look_at(Vec3(1.0, 2.0, 3.0), Vec3(1.0, 10.0, 3.0))};
  const WorldDetection w = to_world(centered(5.0), rig, 2.5, 4);
  EXPECT_NEAR((w.world_position - Vec3(1.0, 7.0, 3.0)).norm(), 0.0, 1e-12);
  EXPECT_EQ(w.source_camera, "north");
  EXPECT_EQ(w.timestamp, 2.5);
  EXPECT_EQ(w.detection_index, 4u);
  EXPECT_NEAR(w.camera_distance, (w.world_position - rig.position()).norm(), 1e-12);
}

TEST(ToWorld, Errors)
{
  const RigRegistry rigs(testing::arena_rigs());
  EXPECT_EQ(error_code([&] { to_world(centered(5.0), rigs, "cam9"); }), Errc::UnknownCamera);
  EXPECT_EQ(error_code([&] { to_world(centered(0.0), rigs, "cam0"); }), Errc::NonPositiveDistance);
}

TEST(ToWorld, CamerasAgreeOnTheSameObject)
{
  const auto records = syngen::generate_profile(testing::arena_profile(2.0, 2));
  std::map<std::pair<std::int64_t, int>, std::vector<const ObjectAnnotation*>> views;
  for (const auto& a : records) {
    views[{a.frame_id, a.object_id}].push_back(&a);
  }
  int compared = 0;
  for (const auto& [key, list] : views) {
    const Vec3 truth = list.front()->object_in_world().translation;
    for (const ObjectAnnotation* a : list) {
      const WorldDetection w = to_world(codec::detection_from_annotation(*a), a->rig());
      EXPECT_LT((w.world_position - truth).norm(), 1e-6);
      EXPECT_NEAR(w.camera_distance, (w.world_position - a->camera_pose.translation).norm(), 1e-9);
      const geometry::RotationMatrix r = geometry::euler_to_matrix(w.world_orientation);
      EXPECT_LT((r - a->object_in_world().matrix()).norm(), 1e-6);
      compared += list.size() > 1 ? 1 : 0;
    }
  }
  EXPECT_GT(compared, 100);
}

TEST(Associate, GateExamples)
{
  EXPECT_EQ(associate({at("a", 0, Vec3(0, 0, 0)), at("b", 0, Vec3(0.1, 0, 0))}).size(), 1u);
  EXPECT_EQ(associate({at("a", 0, Vec3(0, 0, 0)), at("b", 0, Vec3(5, 0, 0))}).size(), 2u);
  EXPECT_TRUE(associate({}).empty());
}

TEST(Associate, OrderedByCameraThenIndex)
{
  const auto groups = associate(
      {at("c", 1, Vec3(0, 0, 0)), at("a", 3, Vec3(9, 0, 0)), at("b", 0, Vec3(0.5, 0, 0))});
  ASSERT_EQ(groups.size(), 2u);
  EXPECT_EQ(groups[0][0].source_camera, "a");
  EXPECT_EQ(groups[1][0].source_camera, "b");
  EXPECT_EQ(groups[1][1].source_camera, "c");
}

// Partition of (camera, index) labels by depth-first search on the gate graph.
std::set<std::set<std::string>> components(const std::vector<WorldDetection>& d, double gate)
{
  const std::size_t n = d.size();
  std::vector<int> label(n, -1);
  int next = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (label[s] >= 0) {
      continue;
    }
    std::vector<std::size_t> stack{s};
    label[s] = next;
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      for (std::size_t j = 0; j < n; ++j) {
        if (label[j] < 0 && (d[i].world_position - d[j].world_position).norm() < gate) {
          label[j] = next;
          stack.push_back(j);
        }
      }
    }
    ++next;
  }
  std::vector<std::set<std::string>> parts(static_cast<std::size_t>(next));
  for (std::size_t i = 0; i < n; ++i) {
    parts[static_cast<std::size_t>(label[i])].insert(d[i].source_camera + "#" +
                                                     std::to_string(d[i].detection_index));
  }
  return {parts.begin(), parts.end()};
}

TEST(Associate, MatchesConnectedComponents)
{
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> pos(0.0, 3.0);
  std::uniform_int_distribution<int> count(1, 12);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<WorldDetection> d;
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
      d.push_back(at("cam" + std::to_string(i % 4), static_cast<std::size_t>(i / 4),
                     Vec3(pos(rng), pos(rng), 0.0)));
    }
    std::set<std::set<std::string>> got;
    for (const auto& g : associate(d, 1.0)) {
      std::set<std::string> part;
      for (const auto& w : g) {
        part.insert(w.source_camera + "#" + std::to_string(w.detection_index));
      }
      got.insert(part);
    }
    EXPECT_EQ(got, components(d, 1.0)) << trial;
  }
}

TEST(Fuse, PicksTheNearestCamera)
{
  const std::vector<WorldDetection> one{at("solo", 0, Vec3(1, 2, 0), 9.0)};
  EXPECT_EQ(fuse(one).chosen_camera, "solo");
  const std::vector<WorldDetection> g{at("a", 0, Vec3(1, 0, 0), 12.0),
                                      at("b", 0, Vec3(2, 0, 0), 7.5),
                                      at("c", 0, Vec3(3, 0, 0), 30.1)};
  const FusedPosition f = fuse(g);
  EXPECT_EQ(f.chosen_camera, "b");
  EXPECT_EQ(f.world_position, Vec3(2, 0, 0));
  EXPECT_EQ(f.camera_distance, 7.5);
  EXPECT_EQ(f.contributing_cameras, (std::vector<std::string>{"a", "b", "c"}));
}

TEST(Fuse, TiesGoToTheSmallestCameraId)
{
  const std::vector<WorldDetection> g{at("zeta", 0, Vec3(1, 0, 0), 5.0),
                                      at("alpha", 0, Vec3(2, 0, 0), 5.0)};
  EXPECT_EQ(fuse(g).chosen_camera, "alpha");
  const std::vector<WorldDetection> none;
  EXPECT_EQ(error_code([&] { fuse(none); }), Errc::EmptyGroup);
}

TEST(Fuse, NearestCameraUsuallyHasTheSmallestError)
{
  // Errors scale with range, so the claim needs the far camera well beyond
  // the near one: at a 3:1 range ratio it holds in about 92% of trials.
  const geometry::Pose object = geometry::Pose::from_matrix(geometry::rot_z(0.3), Vec3(0, 0, 0));
  std::vector<geometry::CameraRig> rigs;
  const double ranges[] = {15.0, 60.0};
  for (int i = 0; i < 2; ++i) {
    const double bearing = 2.0 * i;
    const Vec3 eye(ranges[i] * std::cos(bearing), ranges[i] * std::sin(bearing), 4.0);
    rigs.push_back({"cam" + std::to_string(i), testing::wide_intrinsics(),
                    geometry::look_at(eye, Vec3::Zero())});
  }
  std::vector<codec::DecodedDetection> exact;
  for (const auto& rig : rigs) {
    exact.push_back(codec::detection_from_annotation(
        make_annotation(rig, testing::car_cuboid(), object)));
  }
  std::mt19937_64 rng(77);
  const NoiseModel noise;
  int good = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<WorldDetection> w;
    for (std::size_t i = 0; i < rigs.size(); ++i) {
      w.push_back(to_world(apply_noise(exact[i], noise, rng), rigs[i]));
    }
    const FusedPosition f = fuse(w);
    const double fused_error = (f.world_position - object.translation).norm();
    bool ok = true;
    for (const auto& d : w) {
      if (d.camera_distance > f.camera_distance) {
        ok = ok && fused_error <= (d.world_position - object.translation).norm();
      }
    }
    good += ok ? 1 : 0;
  }
  EXPECT_GE(good, 950);
}

TEST(Tracker, NoMessagesGiveEmptyTicks)
{
  const TrackerRun run = run_tracker({}, RigRegistry(testing::arena_rigs()), {}, 10.0);
  EXPECT_EQ(run.ticks.size(), 240u);
  for (const auto& t : run.ticks) {
    EXPECT_TRUE(t.positions.empty());
  }
  EXPECT_EQ(run.dropped, 0u);
}

TEST(Tracker, UnknownCameraAndNegativeTimestampAreDropped)
{
  FusionTracker tracker(RigRegistry(testing::arena_rigs()));
  EXPECT_FALSE(tracker.ingest({"cam9", 0.0, {centered(10.0)}}));
  EXPECT_FALSE(tracker.ingest({"cam0", -1.0, {centered(10.0)}}));
  EXPECT_TRUE(tracker.ingest({"cam0", 0.0, {centered(10.0)}}));
  EXPECT_EQ(tracker.dropped(), 2u);
  EXPECT_EQ(tracker.tick(0.0).size(), 1u);
}

TEST(Tracker, StaleMessagesExpire)
{
  FusionTracker tracker(RigRegistry(testing::arena_rigs()), {24.0, 1.0, 2.0});
  tracker.ingest({"cam0", 0.0, {centered(10.0)}});
  EXPECT_EQ(tracker.tick(0.0).size(), 1u);
  EXPECT_EQ(tracker.tick(1.0 / 24.0).size(), 1u);
  EXPECT_TRUE(tracker.tick(2.0 / 24.0).empty());
}

class ArenaRun : public ::testing::Test
{
protected:
  void SetUp() override
  {
    records = syngen::generate_profile(testing::arena_profile(3.0, 1));
    messages = messages_from_annotations(records);
    rigs = RigRegistry(testing::arena_rigs());
  }

  std::vector<ObjectAnnotation> records;
  std::vector<DetectionMessage> messages;
  RigRegistry rigs;
};

TEST_F(ArenaRun, ReproducesGroundTruthWithOneTrack)
{
  const TrackerRun run = run_tracker(messages, rigs, {}, 3.0);
  ASSERT_EQ(run.ticks.size(), 72u);
  std::map<std::int64_t, std::vector<const ObjectAnnotation*>> by_frame;
  for (const auto& a : records) {
    by_frame[a.frame_id].push_back(&a);
  }
  for (std::size_t k = 0; k < run.ticks.size(); ++k) {
    const auto& views = by_frame[static_cast<std::int64_t>(k)];
    ASSERT_FALSE(views.empty());
    ASSERT_EQ(run.ticks[k].positions.size(), 1u) << k;
    const FusedPosition& f = run.ticks[k].positions[0];
    const Vec3 truth = views.front()->object_in_world().translation;
    EXPECT_LT((f.world_position - truth).norm(), 1e-6);
    EXPECT_EQ(f.track_id, 1);
    EXPECT_EQ(f.tick_timestamp, run.ticks[k].tick_timestamp);
    const auto nearest = std::min_element(views.begin(), views.end(), [&](auto* a, auto* b) {
      return (a->camera_pose.translation - truth).norm() < (b->camera_pose.translation - truth).norm();
    });
    EXPECT_EQ(f.chosen_camera, (*nearest)->camera_id);
    EXPECT_EQ(f.contributing_cameras.size(), views.size());
  }
}

TEST_F(ArenaRun, ArrivalOrderDoesNotMatter)
{
  const std::string reference = dump(run_tracker(messages, rigs, {}, 3.0));
  std::mt19937_64 rng(5);
  for (int i = 0; i < 5; ++i) {
    std::shuffle(messages.begin(), messages.end(), rng);
    EXPECT_EQ(dump(run_tracker(messages, rigs, {}, 3.0)), reference);
  }
}

TEST_F(ArenaRun, ConcurrentIngestMatchesSequential)
{
  FusionTracker sequential(rigs);
  FusionTracker concurrent(rigs);
  for (const auto& m : messages) {
    sequential.ingest(m);
  }
  std::vector<std::thread> workers;
  for (int w = 0; w < 4; ++w) {
    workers.emplace_back([&, w] {
      for (std::size_t i = static_cast<std::size_t>(w); i < messages.size(); i += 4) {
        concurrent.ingest(messages[i]);
      }
    });
  }
  for (auto& t : workers) {
    t.join();
  }
  const double last = messages.back().timestamp;
  const auto a = sequential.tick(last);
  const auto b = concurrent.tick(last);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(to_json(a[i]).dump(), to_json(b[i]).dump());
  }
}

TEST_F(ArenaRun, LosingACameraDegradesGracefully)
{
  std::vector<DetectionMessage> partial;
  std::copy_if(messages.begin(), messages.end(), std::back_inserter(partial),
               [](const DetectionMessage& m) { return m.camera_id != "cam0"; });
  const TrackerRun run = run_tracker(partial, rigs, {}, 3.0);
  EXPECT_EQ(run.ticks.size(), 72u);
  EXPECT_EQ(run.dropped, 0u);
}

TEST(Tracker, TrackIdsFollowMotion)
{
  FusionTracker tracker(RigRegistry(testing::arena_rigs()));
  const geometry::CameraRig& rig = tracker.rigs().at("cam0");
  auto seen_at = [&](const Vec3& p) {
    const auto a = make_annotation(rig, testing::car_cuboid(),
                                   geometry::Pose::from_matrix(geometry::RotationMatrix::Identity(), p));
    return codec::detection_from_annotation(a);
  };
  tracker.ingest({"cam0", 0.0, {seen_at(Vec3(0, 0, 0)), seen_at(Vec3(5, 0, 0))}});
  const auto first = tracker.tick(0.0);
  ASSERT_EQ(first.size(), 2u);
  tracker.ingest({"cam0", 1.0 / 24.0, {seen_at(Vec3(5.2, 0, 0)), seen_at(Vec3(0.2, 0, 0))}});
  const auto second = tracker.tick(1.0 / 24.0);
  ASSERT_EQ(second.size(), 2u);
  for (const auto& now : second) {
    const auto before = std::find_if(first.begin(), first.end(), [&](const FusedPosition& f) {
      return f.track_id == now.track_id;
    });
    ASSERT_NE(before, first.end());
    EXPECT_LT((before->world_position - now.world_position).norm(), 0.5);
  }
  tracker.ingest({"cam0", 2.0 / 24.0, {seen_at(Vec3(-8, 0, 0))}});
  const auto third = tracker.tick(2.0 / 24.0);
  ASSERT_EQ(third.size(), 1u);
  EXPECT_EQ(third[0].track_id, 3);
}

TEST(Noise, ZeroNoiseGivesZeroError)
{
  const auto records = syngen::generate_profile(testing::arena_profile(1.0, 2));
  const EvalResult r = evaluate_noise(records, {0.0, 0.0}, 1);
  EXPECT_EQ(r.frames, 24u);
  ASSERT_FALSE(r.fused_errors.empty());
  EXPECT_LT(*std::max_element(r.fused_errors.begin(), r.fused_errors.end()), 1e-6);
  EXPECT_EQ(r.camera_errors.size(), records.size());
}

TEST(Noise, SeedDeterminesTheDraws)
{
  const auto records = syngen::generate_profile(testing::arena_profile(1.0, 1));
  const NoiseModel noise;
  EXPECT_EQ(evaluate_noise(records, noise, 3).fused_errors,
            evaluate_noise(records, noise, 3).fused_errors);
  EXPECT_NE(evaluate_noise(records, noise, 3).fused_errors,
            evaluate_noise(records, noise, 4).fused_errors);
}

TEST(Percentile, LinearInterpolation)
{
  const std::vector<double> v{5, 1, 4, 2, 3};
  EXPECT_DOUBLE_EQ(percentile(v, 0), 1.0);
  EXPECT_DOUBLE_EQ(percentile(v, 25), 2.0);
  EXPECT_DOUBLE_EQ(percentile(v, 50), 3.0);
  EXPECT_DOUBLE_EQ(percentile(v, 100), 5.0);
  EXPECT_DOUBLE_EQ(percentile({1.0, 2.0}, 50), 1.5);
  EXPECT_DOUBLE_EQ(percentile({7.0}, 99), 7.0);
  EXPECT_EQ(error_code([] { percentile({}, 50); }), Errc::EmptyInput);
}

TEST(Wire, JsonRoundTrips)
{
  DetectionMessage m{"cam2", 1.25, {centered(12.0), centered(20.0)}};
  m.detections[1].prior_id = 8;
  const DetectionMessage back = message_from_json(json::parse(to_json(m).dump()));
  EXPECT_EQ(to_json(back).dump(), to_json(m).dump());

  FusedPosition f;
  f.track_id = 4;
  f.world_position = Vec3(1.5, -2.25, 0.0);
  f.world_orientation = {0.5, 0.0, 0.0};
  f.chosen_camera = "cam1";
  f.contributing_cameras = {"cam1", "cam3"};
  f.camera_distance = 17.0;
  f.tick_timestamp = 0.5;
  EXPECT_EQ(to_json(fused_from_json(to_json(f))).dump(), to_json(f).dump());

  const RigRegistry rigs(testing::arena_rigs());
  EXPECT_EQ(to_json(rig_registry_from_json(to_json(rigs))).dump(), to_json(rigs).dump());
  EXPECT_EQ(to_json(noise_model_from_json(to_json(NoiseModel{2.0, 0.01}))).dump(),
            to_json(NoiseModel{2.0, 0.01}).dump());

  EXPECT_EQ(error_code([] { message_from_json({{"camera_id", "a"}, {"extra", 1}}); }),
            Errc::ParseError);
  EXPECT_EQ(error_code([] { rig_registry_from_json(json::object()); }), Errc::ParseError);
}

}  // namespace
}  // namespace posetrack::fusion
