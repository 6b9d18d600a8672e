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

// Runs every acceptance criterion at its stated tolerance and prints one
// line per criterion. Exits non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "posetrack/codec.hpp"
#include "posetrack/fusion.hpp"
#include "posetrack/geometry.hpp"
#include "posetrack/loss.hpp"
#include "posetrack/priors.hpp"
#include "posetrack/syngen.hpp"
#include "test_support.hpp"

namespace posetrack
{
namespace
{

using geometry::RotationMatrix;
using geometry::Vec3;
using testing::deg;

struct Outcome
{
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0, double d = 0.0)
{
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c, d);
  return buf;
}

// Rotation angle between a and b, accurate for tiny angles.
double rotation_angle(const RotationMatrix& a, const RotationMatrix& b)
{
  const double chord = (a - b).norm() / (2.0 * std::sqrt(2.0));
  return 2.0 * std::asin(std::min(1.0, chord));
}

Outcome prior_table_fidelity()
{
  const priors::PriorTable t = priors::default_region_table();
  struct Expect
  {
    double near_min, split, far_max, lateral_min, lateral_max;
  };
  const Expect heads[] = {{0.0, 17.5, 32.5, 0.0, 25.0},
                          {32.5, 50.0, 70.0, 25.0, 60.0},
                          {70.0, 90.0, 110.0, 60.0, 100.0}};
  int mismatches = 0;
  for (int h = 0; h < 3; ++h) {
    const Expect& e = heads[h];
    const double lo[6] = {e.near_min, e.split, e.lateral_min, e.near_min, e.split, e.lateral_min};
    const double hi[6] = {e.split, e.far_max, e.lateral_max, e.split, e.far_max, e.lateral_max};
    for (int k = 0; k < 6; ++k) {
      const priors::Prior& p = t.at(6 * h + k + 1);
      if (p.bounds.head != h + 1 || p.bounds.r_min != lo[k] || p.bounds.r_max != hi[k]) {
        ++mismatches;
      }
    }
  }
  const bool ok = t.priors.size() == 18 && mismatches == 0;
  return {ok, fmt("%.0f priors, %.0f radius mismatches", static_cast<double>(t.priors.size()),
                  mismatches)};
}

Outcome partition_soundness()
{
  long points = 0;
  long assigned = 0;
  long rejected = 0;
  long violations = 0;
  const priors::RegionMode mode = priors::RegionMode::Partition;
  const priors::PriorTable t = priors::default_region_table(mode);
  for (int ir = 0; ir <= 240; ++ir) {
    const double r = 0.5 * ir;
    for (int it = -179; it <= 180; ++it) {
      const double theta = deg(it);
      for (int ip = 0; ip <= 90; ++ip) {
        const geometry::SphericalParams s{r, theta, deg(ip)};
        ++points;
        int containing = 0;
        int last = 0;
        for (const priors::Prior& p : t.priors) {
          if (p.bounds.contains(s, mode)) {
            ++containing;
            last = p.prior_id;
          }
        }
        try {
          const int id = priors::assign_region(s, mode);
          ++assigned;
          if (containing != 1 || id != last) {
            ++violations;
          }
        } catch (const Error& e) {
          ++rejected;
          const bool defined = e.code() == Errc::DistanceOutOfRange ||
                               e.code() == Errc::NegativePitch || e.code() == Errc::YawUncovered;
          if (!defined || containing != 0) {
            ++violations;
          }
        }
      }
    }
  }
  return {violations == 0,
          fmt("%.0f points, %.0f assigned, %.0f out of range, %.0f violations",
              static_cast<double>(points), static_cast<double>(assigned),
              static_cast<double>(rejected), static_cast<double>(violations))};
}

Outcome codec_round_trip()
{
  const auto k = testing::wide_intrinsics();
  const codec::GridSet g = codec::make_grids(k);
  const priors::PriorTable table = priors::default_region_table();
  std::mt19937_64 rng(2026);
  double worst_px = 0.0;
  double worst_r = 0.0;
  double worst_rot = 0.0;
  for (int head = 1; head <= 3; ++head) {
    for (int i = 0; i < 10000; ++i) {
      const int prior_id = 6 * (head - 1) + 1 + i % 6;
      const ObjectAnnotation a = testing::draw_in_coverage(table, prior_id, rng);
      const codec::EncodedTarget e = codec::encode_ground_truth(a, g, table, k);
      const codec::DecodedDetection d =
          codec::decode_cell(e.as_prediction(50.0, 1), g.head(e.head), table);
      const codec::DecodedDetection truth = codec::detection_from_annotation(a);
      worst_px = std::max({worst_px, std::abs(d.origin_px.u - truth.origin_px.u),
                           std::abs(d.origin_px.v - truth.origin_px.v)});
      worst_r = std::max(worst_r, std::abs(d.distance - truth.distance));
      worst_rot = std::max(worst_rot, rotation_angle(geometry::euler_to_matrix(d.orientation),
                                                     geometry::euler_to_matrix(truth.orientation)));
    }
  }
  const bool ok = worst_px <= 1e-9 && worst_r <= 1e-9 && worst_rot <= 1e-9;
  return {ok, fmt("30000 ground truths; max error %.2e px, %.2e m, %.2e rad", worst_px, worst_r,
                  worst_rot)};
}

Outcome reprojection_oracle()
{
  const auto k = testing::wide_intrinsics();
  const geometry::CuboidSpec cuboid = testing::car_cuboid();
  const auto hull = codec::cuboid_hull(cuboid);
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  // 41 x 41 lattice per face, edges included: 10086 surface points.
  constexpr int kSteps = 40;
  std::vector<Vec3> surface;
  const double dims[3] = {cuboid.width, cuboid.length, cuboid.height};
  for (int axis = 0; axis < 3; ++axis) {
    for (double side : {0.0, 1.0}) {
      for (int i = 0; i <= kSteps; ++i) {
        for (int j = 0; j <= kSteps; ++j) {
          double c[3];
          c[axis] = side;
          c[(axis + 1) % 3] = static_cast<double>(i) / kSteps;
          c[(axis + 2) % 3] = static_cast<double>(j) / kSteps;
          surface.emplace_back((c[0] - 0.5) * dims[0], (c[1] - 0.5) * dims[1], c[2] * dims[2]);
        }
      }
    }
  }
  int poses = 0;
  int escapes = 0;
  double worst_excess = 0.0;
  while (poses < 500) {
    const geometry::Pixel px{u01(rng) * k.width, u01(rng) * k.height};
    const Vec3 t = geometry::backproject(k, px, 6.0 + 94.0 * u01(rng));
    const geometry::Pose pose = geometry::Pose::from_matrix(testing::random_rotation(rng), t);
    ObjectAnnotation a;
    try {
      a = testing::camera_annotation(pose);
    } catch (const Error&) {
      continue;  // some corner behind the camera
    }
    const codec::Bbox2D box = codec::reproject_bbox(codec::detection_from_annotation(a), hull, k);
    codec::Bbox2D seen{1e300, 1e300, -1e300, -1e300};
    const geometry::Pose truth = a.object_in_camera();
    const double f = 0.5 * k.width / std::tan(0.5 * k.horizontal_fov);
    for (const Vec3& s : surface) {
      const Vec3 p = truth.apply(s);
      const double u = 0.5 * k.width + f * p.x() / p.z();
      const double v = 0.5 * k.height + f * p.y() / p.z();
      constexpr double kSlack = 1e-6;
      escapes += (u < box.min_u - kSlack || u > box.max_u + kSlack || v < box.min_v - kSlack ||
                  v > box.max_v + kSlack)
                     ? 1
                     : 0;
      seen.min_u = std::min(seen.min_u, u);
      seen.max_u = std::max(seen.max_u, u);
      seen.min_v = std::min(seen.min_v, v);
      seen.max_v = std::max(seen.max_v, v);
    }
    worst_excess = std::max(worst_excess, box.area() / seen.area() - 1.0);
    ++poses;
  }
  return {escapes == 0 && worst_excess < 0.01,
          fmt("500 poses x %.0f points; %.0f escapes, max area excess %.3f%%",
              static_cast<double>(surface.size()), escapes, 100.0 * worst_excess)};
}

loss::SceneContext small_context()
{
  return loss::SceneContext::make(testing::small_intrinsics(), priors::default_region_table(),
                                  testing::car_cuboid());
}

Outcome gradient_correctness()
{
  const loss::SceneContext ctx = small_context();
  std::mt19937_64 rng(55);
  double worst = 0.0;
  int checked = 0;
  int skipped = 0;
  for (int scene = 0; scene < 20; ++scene) {
    const auto annotations = testing::small_scene(ctx.priors, 1 + scene % 4, rng);
    const loss::GroundTruthSet gt = loss::prepare_ground_truth(annotations, ctx);
    const codec::PredictionTensor t = testing::random_tensor(ctx, 1.0, rng);
    const auto c = testing::check_gradient(t, gt, ctx, {}, 200, rng, 1e-5);
    worst = std::max(worst, c.max_relative_error);
    checked += c.checked;
    skipped += c.skipped;
  }
  return {worst < 1e-4, fmt("%.0f coordinates over 20 scenes (%.0f redrawn at mask flips); "
                            "max relative error %.2e",
                            checked, skipped, worst)};
}

Outcome fit_convergence()
{
  const loss::SceneContext ctx = small_context();
  std::mt19937_64 rng(66);
  const bool exact_rate = loss::lr_at(0) == 1e-3;
  int converged = 0;
  int worst_steps = 0;
  constexpr int kScenes = 5;
  for (int scene = 0; scene < kScenes; ++scene) {
    const auto annotations = testing::small_scene(ctx.priors, 1, rng);
    const codec::DecodedDetection truth = codec::detection_from_annotation(annotations[0]);
    // Smallest step count whose fit meets every tolerance.
    int reached = -1;
    for (int steps : {50, 100, 200, 300, 400, 500}) {
      const loss::FitResult r = loss::fit_tensor(annotations, ctx, steps);
      const codec::Slot s = testing::best_slot(r.tensor);
      const codec::DecodedDetection d =
          codec::decode_cell(r.tensor.cell(s), ctx.grids.head(s.head), ctx.priors);
      const double px = std::hypot(d.origin_px.u - truth.origin_px.u, d.origin_px.v - truth.origin_px.v);
      const double dr = std::abs(d.distance - truth.distance);
      const double rot = rotation_angle(geometry::euler_to_matrix(d.orientation),
                                        geometry::euler_to_matrix(truth.orientation));
      if (px <= 1.0 && dr <= 0.01 && rot <= deg(0.5)) {
        reached = steps;
        break;
      }
    }
    if (reached > 0) {
      ++converged;
      worst_steps = std::max(worst_steps, reached);
    }
  }
  return {exact_rate && converged == kScenes,
          fmt("lr_at(0) = %.0e; %.0f of %.0f scenes within 1 px, 0.01 m, 0.5 deg by step %.0f",
              loss::lr_at(0), converged, kScenes, worst_steps)};
}

Outcome so3_mean_oracle()
{
  std::mt19937_64 rng(77);
  double worst_gap = -1e300;
  for (int set = 0; set < 50; ++set) {
    const RotationMatrix center = testing::random_rotation(rng);
    std::vector<RotationMatrix> rs;
    for (int i = 0; i < 12; ++i) {
      rs.push_back(testing::perturb(center, deg(20.0), rng));
    }
    RotationMatrix sum = RotationMatrix::Zero();
    for (const auto& r : rs) {
      sum += r;
    }
    // sum ||M - R_i||^2 = 6n - 2 tr(M^T sum R_i)
    const double n6 = 6.0 * static_cast<double>(rs.size());
    double best = 1e300;
    for (int a = -25; a <= 25; ++a) {
      for (int b = -25; b <= 25; ++b) {
        for (int c = -25; c <= 25; ++c) {
          const RotationMatrix m = center * geometry::euler_to_matrix({deg(a), deg(b), deg(c)});
          best = std::min(best, n6 - 2.0 * (m.transpose() * sum).trace());
        }
      }
    }
    const double mean_cost = geometry::chordal_cost(geometry::so3_mean(rs), rs);
    worst_gap = std::max(worst_gap, mean_cost - best);
  }
  return {worst_gap <= 1e-3,
          fmt("50 sets of 12; max (mean cost - best grid cost) = %.3e", worst_gap)};
}

Outcome noise_free_fusion()
{
  const syngen::ProfileConfig profile = testing::arena_profile(10.0, 1);
  const auto records = syngen::generate_profile(profile);
  const fusion::RigRegistry rigs(testing::arena_rigs());
  const fusion::TrackerRun run =
      fusion::run_tracker(fusion::messages_from_annotations(records), rigs, {}, 10.0);
  std::map<std::int64_t, std::vector<const ObjectAnnotation*>> by_frame;
  for (const auto& a : records) {
    by_frame[a.frame_id].push_back(&a);
  }
  double worst = 0.0;
  int bad_ticks = 0;
  int wrong_camera = 0;
  int nearest_rig_blind = 0;
  std::set<std::int64_t> ids;
  for (std::size_t k = 0; k < run.ticks.size(); ++k) {
    const auto& views = by_frame[static_cast<std::int64_t>(k)];
    if (views.empty() || run.ticks[k].positions.size() != 1) {
      ++bad_ticks;
      continue;
    }
    const fusion::FusedPosition& f = run.ticks[k].positions[0];
    const Vec3 truth = views.front()->object_in_world().translation;
    worst = std::max(worst, (f.world_position - truth).norm());
    ids.insert(f.track_id);
    auto range = [&](const Vec3& cam) { return (cam - truth).norm(); };
    const auto nearest_view = std::min_element(views.begin(), views.end(), [&](auto* a, auto* b) {
      return range(a->camera_pose.translation) < range(b->camera_pose.translation);
    });
    wrong_camera += f.chosen_camera == (*nearest_view)->camera_id ? 0 : 1;
    const auto& all = rigs.rigs();
    const auto nearest_rig = std::min_element(all.begin(), all.end(), [&](auto& a, auto& b) {
      return range(a.position()) < range(b.position());
    });
    nearest_rig_blind += nearest_rig->camera_id == (*nearest_view)->camera_id ? 0 : 1;
  }
  const bool ok = run.ticks.size() == 240 && bad_ticks == 0 && worst <= 1e-6 && ids.size() == 1 &&
                  wrong_camera == 0;
  return {ok, fmt("%.0f ticks, max error %.2e m, %.0f track ids, %.0f wrong choices",
                  static_cast<double>(run.ticks.size()), worst, static_cast<double>(ids.size()),
                  wrong_camera) +
                  fmt(" (nearest rig out of view on %.0f ticks)", nearest_rig_blind)};
}

Outcome noise_sanity()
{
  // 1000 frames at 24 Hz.
  const syngen::ProfileConfig profile = testing::arena_profile(1000.0 / 24.0, 1, 11);
  const auto records = syngen::generate_profile(profile);
  const fusion::EvalResult r = fusion::evaluate_noise(records, fusion::NoiseModel{}, 2026);
  const double p50 = fusion::percentile(r.fused_errors, 50.0);
  const double p99 = fusion::percentile(r.fused_errors, 99.0);
  return {r.frames == 1000 && r.fused_errors.size() >= 1000 && p99 <= 0.25,
          fmt("%.0f ticks, %.0f fused positions; p50 %.4f m, p99 %.4f m",
              static_cast<double>(r.frames), static_cast<double>(r.fused_errors.size()), p50, p99)};
}

std::string dump(const std::vector<fusion::TickOutput>& ticks)
{
  std::string out;
  for (const auto& t : ticks) {
    out += fmt("%.17g\n", t.tick_timestamp);
    for (const auto& f : t.positions) {
      out += fusion::to_json(f).dump();
      out += '\n';
    }
  }
  return out;
}

Outcome tick_discipline()
{
  const auto records = syngen::generate_profile(testing::arena_profile(10.0, 3));
  const auto messages = fusion::messages_from_annotations(records);
  const fusion::RigRegistry rigs(testing::arena_rigs());
  const fusion::TrackerConfig cfg;
  const fusion::TrackerRun reference = fusion::run_tracker(messages, rigs, cfg, 10.0);
  const std::string expected = dump(reference.ticks);

  std::mt19937_64 rng(10);
  int differing = 0;
  constexpr int kPermutations = 10;
  for (int p = 0; p < kPermutations; ++p) {
    // Bucket messages by the tick that first sees them, shuffle each bucket
    // and feed the tracker directly.
    std::map<std::int64_t, std::vector<fusion::DetectionMessage>> windows;
    for (const auto& m : messages) {
      windows[static_cast<std::int64_t>(std::ceil(m.timestamp * cfg.rate - 1e-9))].push_back(m);
    }
    fusion::FusionTracker tracker(rigs, cfg);
    std::vector<fusion::TickOutput> ticks;
    for (std::int64_t k = 0; k < 240; ++k) {
      auto& bucket = windows[k];
      std::shuffle(bucket.begin(), bucket.end(), rng);
      for (auto& m : bucket) {
        tracker.ingest(m);
      }
      const double t = static_cast<double>(k) / cfg.rate;
      ticks.push_back({t, tracker.tick(t)});
    }
    differing += dump(ticks) == expected ? 0 : 1;
    auto shuffled = messages;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    differing += dump(fusion::run_tracker(shuffled, rigs, cfg, 10.0).ticks) == expected ? 0 : 1;
  }
  const double n = static_cast<double>(reference.ticks.size());
  return {std::abs(n - 240.0) <= 1.0 && differing == 0,
          fmt("%.0f ticks; %.0f of %.0f permuted runs differ", n, differing, 2 * kPermutations)};
}

std::string read_file(const std::filesystem::path& p)
{
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome syngen_determinism()
{
  syngen::ProfileConfig profile = testing::arena_profile(3.0, 3, 5);
  profile.domes = testing::dome_profile(12, 3, 14.0).domes;
  profile.domes[0].aim_jitter = 0.2;
  profile.domes[0].roll_jitter = deg(3.0);
  profile.domes[0].fov_jitter = deg(4.0);
  const auto base = std::filesystem::temp_directory_path() / "posetrack_acceptance";
  std::filesystem::remove_all(base);
  syngen::write_dataset(profile, base / "a");
  syngen::write_dataset(profile, base / "b");
  const std::string a = read_file(base / "a" / profile.output.annotations_file);
  const std::string b = read_file(base / "b" / profile.output.annotations_file);
  const bool same_bytes = !a.empty() && a == b &&
                          read_file(base / "a" / profile.output.manifest_file) ==
                              read_file(base / "b" / profile.output.manifest_file);
  const auto records = syngen::load_dataset(base / "a" / profile.output.manifest_file);
  std::filesystem::remove_all(base);

  double worst = 0.0;
  for (const auto& r : records) {
    worst = std::max(worst, testing::record_inconsistency(r));
  }
  std::vector<ObjectAnnotation> hundred(records.begin(), records.begin() + 100);
  const syngen::DatasetManifest split = syngen::split_dataset(hundred, 1);
  const bool split_ok = split.train.size() == 80 && split.val.size() == 10 && split.test.size() == 10;
  return {same_bytes && worst <= 1e-6 && split_ok,
          fmt("%.0f records, byte-identical %.0f, max field inconsistency %.2e, split %.0f/",
              static_cast<double>(records.size()), same_bytes ? 1.0 : 0.0, worst,
              static_cast<double>(split.train.size())) +
              fmt("%.0f/%.0f", static_cast<double>(split.val.size()),
                  static_cast<double>(split.test.size()))};
}

struct Criterion
{
  const char* name;
  double time_limit_s;  ///< 0 when the criterion states none
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace posetrack

int main()
{
  using namespace posetrack;
  const Criterion criteria[] = {
    {"AC1 prior-table fidelity", 1.0, prior_table_fidelity},
    {"AC2 partition soundness", 30.0, partition_soundness},
    {"AC3 codec round-trip", 10.0, codec_round_trip},
    {"AC4 reprojection-bbox oracle", 60.0, reprojection_oracle},
    {"AC5 gradient correctness", 0.0, gradient_correctness},
    {"AC6 toy fit convergence", 0.0, fit_convergence},
    {"AC7 SO(3) mean oracle", 0.0, so3_mean_oracle},
    {"AC8 noise-free fusion", 0.0, noise_free_fusion},
    {"AC9 noise-model sanity", 0.0, noise_sanity},
    {"AC10 tick discipline", 0.0, tick_discipline},
    {"AC11 syngen determinism", 0.0, syngen_determinism},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.time_limit_s > 0.0 && seconds >= c.time_limit_s) {
      o.pass = false;
      o.detail += " [over time limit]";
    }
    char timing[64];
    if (c.time_limit_s > 0.0) {
      std::snprintf(timing, sizeof timing, "%.2f s, limit %.0f s", seconds, c.time_limit_s);
    } else {
      std::snprintf(timing, sizeof timing, "%.2f s", seconds);
    }
    std::printf("[%s] %s: %s (%s)\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), timing);
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(std::size(criteria)) - failures,
              std::size(criteria));
  return failures == 0 ? 0 : 1;
}
