#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "roadsel/errors.hpp"
#include "roadsel/features.hpp"
#include "test_util.hpp"

namespace roadsel::features {
namespace {

using geometry::Point2D;
using geometry::Road;

const Road kSquare("sq", {{0, 0}, {1, 0}, {1, 1}, {0, 1}});

TEST(Sequence, UnitSquareCorners) {
  const auto s = extract_sequence(kSquare);
  ASSERT_EQ(s.features.size(), 3u);
  EXPECT_EQ(s.road_id, "sq");
  EXPECT_EQ(s.features[0], (SegmentFeature{0.0, 1.0}));
  EXPECT_DOUBLE_EQ(s.features[1].angle_delta, 90.0);
  EXPECT_DOUBLE_EQ(s.features[2].angle_delta, 90.0);
  EXPECT_DOUBLE_EQ(s.features[2].length, 1.0);
}

TEST(Sequence, StraightRoad) {
  std::vector<Point2D> pts;
  for (int i = 0; i < 197; ++i) pts.push_back({2.0 * i, 0.0});
  const auto s = extract_sequence(Road("s", pts));
  ASSERT_EQ(s.features.size(), 196u);
  for (const auto& f : s.features) {
    EXPECT_EQ(f.angle_delta, 0.0);
    EXPECT_DOUBLE_EQ(f.length, 2.0);
  }
}

TEST(Sequence, DeltaWrapsAcrossTheBranchCut) {
  const double a = 170.0 * std::numbers::pi / 180.0;
  const double b = -170.0 * std::numbers::pi / 180.0;
  const Point2D p1{std::cos(a), std::sin(a)};
  const Point2D p2{p1.x + std::cos(b), p1.y + std::sin(b)};
  const auto s = extract_sequence(Road("w", {{0, 0}, p1, p2}));
  EXPECT_NEAR(s.features[1].angle_delta, 20.0, 1e-9);
}

TEST(Sequence, MatchesAtan2OracleOnRandomRoads) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    const Road r = testing::random_road(rng, 3 + trial % 200, 175.0);
    const auto got = extract_sequence(r).features;
    const auto want = oracle::sequence(r.points());
    ASSERT_EQ(got.size(), r.size() - 1);
    EXPECT_EQ(got[0].angle_delta, 0.0);
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_NEAR(got[i].angle_delta, want[i].angle_delta, 1e-9) << "trial " << trial << " i " << i;
      EXPECT_NEAR(got[i].length, want[i].length, 1e-9);
      EXPECT_GT(got[i].angle_delta, -180.0);
      EXPECT_LE(got[i].angle_delta, 180.0);
    }
  }
}

TEST(Sequence, InvariantUnderRigidMotion) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> ang(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> off(-5000.0, 5000.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Road r = testing::random_road(rng, 50, 170.0);
    const auto a = extract_sequence(r).features;
    const auto b = extract_sequence(testing::transform(r, ang(rng), off(rng), off(rng))).features;
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_NEAR(a[i].angle_delta, b[i].angle_delta, 1e-6);
      EXPECT_NEAR(a[i].length, b[i].length, 1e-6);
    }
  }
}

TEST(Sequence, MirrorNegatesDeltas) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const Road r = testing::random_road(rng, 40, 170.0);
    const auto a = extract_sequence(r).features;
    const auto b = extract_sequence(testing::mirror(r)).features;
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_NEAR(a[i].angle_delta, -b[i].angle_delta, 1e-6);
      EXPECT_NEAR(a[i].length, b[i].length, 1e-6);
    }
  }
}

TEST(Sequence, CumulativeHeadingConsistency) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const Road r = testing::random_road(rng, 80, 150.0);
    const auto segs = geometry::segments(r);
    const auto f = extract_sequence(r).features;
    double heading = segs[0].raw_heading;
    for (std::size_t i = 1; i < f.size(); ++i) {
      heading += f[i].angle_delta;
      const double diff = std::remainder(heading - segs[i].raw_heading, 360.0);
      EXPECT_NEAR(diff, 0.0, 1e-6);
    }
  }
}

TEST(Stats, StraightRoad) {
  std::vector<Point2D> pts;
  for (int i = 0; i < 20; ++i) pts.push_back({static_cast<double>(i), 0.0});
  const auto s = extract_stats(Road("s", pts));
  EXPECT_EQ(s.num_left_turns, 0.0);
  EXPECT_EQ(s.num_right_turns, 0.0);
  EXPECT_EQ(s.num_straight_segments, 18.0);
  EXPECT_EQ(s.total_abs_turn, 0.0);
  EXPECT_EQ(s.min_pivot_radius, kDefaultRadiusCap);
  EXPECT_EQ(s.median_pivot_radius, kDefaultRadiusCap);
  EXPECT_EQ(s.std_pivot_radius, 0.0);
  EXPECT_DOUBLE_EQ(s.path_length, 19.0);
  EXPECT_DOUBLE_EQ(s.direct_start_end_distance, 19.0);
}

TEST(Stats, UnitSquare) {
  const auto s = extract_stats(kSquare);
  EXPECT_EQ(s.num_left_turns, 2.0);
  EXPECT_EQ(s.num_right_turns, 0.0);
  EXPECT_DOUBLE_EQ(s.max_abs_angle_delta, 90.0);
  EXPECT_DOUBLE_EQ(s.total_abs_turn, 180.0);
  EXPECT_NEAR(s.min_pivot_radius, std::sqrt(2.0) / 2.0, 1e-12);
  EXPECT_DOUBLE_EQ(s.direct_start_end_distance, 1.0);
}

TEST(Stats, MirrorSwapsTurnCounts) {
  const auto s = extract_stats(testing::mirror(kSquare));
  EXPECT_EQ(s.num_left_turns, 0.0);
  EXPECT_EQ(s.num_right_turns, 2.0);
}

TEST(Stats, PivotRadiusMatchesCircumradius) {
  EXPECT_EQ(pivot_radius(1.0, 1.0, 0.0, 1000.0), 1000.0);
  EXPECT_NEAR(pivot_radius(1.0, 1.0, 90.0, 1000.0), std::sqrt(0.5), 1e-12);
  EXPECT_NEAR(pivot_radius(1.0, 1.0, -90.0, 1000.0), std::sqrt(0.5), 1e-12);
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const auto pts = testing::random_walk(rng, 3, 0.5, 20.0, 179.0);
    const auto f = oracle::sequence(pts);
    const double want = std::min(oracle::circumradius(pts[0], pts[1], pts[2]), 1000.0);
    EXPECT_NEAR(pivot_radius(f[0].length, f[1].length, f[1].angle_delta, 1000.0), want, 1e-6 * want);
  }
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

double pop_std(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x / v.size();
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m) / v.size();
  return std::sqrt(ss);
}

TEST(Stats, AgreeWithDirectRecomputation) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 300; ++trial) {
    const Road r = testing::random_road(rng, 3 + trial % 100, 90.0);
    const auto& p = r.points();
    const auto s = extract_stats(r);
    std::vector<double> deltas, radii;
    const auto seq = oracle::sequence(p);
    double left = 0, right = 0, straight = 0, length = 0;
    for (const auto& f : seq) length += f.length;
    for (std::size_t i = 1; i < seq.size(); ++i) {
      const double d = seq[i].angle_delta;
      deltas.push_back(d);
      radii.push_back(std::min(oracle::circumradius(p[i - 1], p[i], p[i + 1]), kDefaultRadiusCap));
      (d > 5.0 ? left : d < -5.0 ? right : straight) += 1;
    }
    std::vector<double> abs_d;
    for (double d : deltas) abs_d.push_back(std::abs(d));
    double sum_abs = 0.0;
    for (double d : abs_d) sum_abs += d;

    EXPECT_EQ(s.num_left_turns, left);
    EXPECT_EQ(s.num_right_turns, right);
    EXPECT_EQ(s.num_straight_segments, straight);
    EXPECT_EQ(left + right + straight, static_cast<double>(p.size() - 2));
    EXPECT_NEAR(s.path_length, length, 1e-9 * length);
    EXPECT_NEAR(s.direct_start_end_distance, oracle::dist(p.front(), p.back()), 1e-9);
    EXPECT_GE(s.path_length, s.direct_start_end_distance);
    EXPECT_NEAR(s.total_abs_turn, sum_abs, 1e-7);
    EXPECT_NEAR(s.mean_abs_angle_delta, sum_abs / deltas.size(), 1e-9);
    EXPECT_NEAR(s.std_angle_delta, pop_std(deltas), 1e-7);
    EXPECT_NEAR(s.median_angle_delta, median_of(deltas), 1e-9);
    EXPECT_NEAR(s.max_abs_angle_delta, *std::max_element(abs_d.begin(), abs_d.end()), 1e-9);
    EXPECT_NEAR(s.min_pivot_radius, *std::min_element(radii.begin(), radii.end()), 1e-6 * kDefaultRadiusCap);
    EXPECT_NEAR(s.median_pivot_radius, median_of(radii), 1e-6 * kDefaultRadiusCap);
    EXPECT_NEAR(s.std_pivot_radius, pop_std(radii), 1e-5 * kDefaultRadiusCap);
  }
}

TEST(Stats, PureFunctionOfSequenceAndEndpoints) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const Road r = testing::random_road(rng, 60, 60.0);
    const auto direct = extract_stats(r).to_array();
    const auto moved = testing::transform(r, 1.0 + trial, 50.0, -20.0);
    const auto via = stats_from_sequence(extract_sequence(moved),
                                         oracle::dist(moved.points().front(), moved.points().back()))
                         .to_array();
    for (std::size_t k = 0; k < kStatDim; ++k) EXPECT_NEAR(direct[k], via[k], 1e-6 * (1.0 + std::abs(direct[k])));
  }
}

TEST(Stats, ThresholdAndNames) {
  StatOptions opts;
  opts.straight_threshold = 95.0;
  EXPECT_EQ(extract_stats(kSquare, opts).num_straight_segments, 2.0);
  EXPECT_EQ(StatFeatureVector::names().size(), kStatDim);
  EXPECT_EQ(StatFeatureVector::names()[0], "direct_start_end_distance");
}

TEST(Scaler, FitsMeanAndScaleAndIsOffByDefault) {
  const SegmentFeatureSequence a{"a", {{0.0, 1.0}, {10.0, 3.0}}};
  const SegmentFeatureSequence b{"b", {{-10.0, 5.0}, {0.0, 7.0}}};
  const std::vector<SegmentFeatureSequence> train = {a, b};
  const FeatureScaler off;
  EXPECT_EQ(off.apply(a.features[1]), (std::array<double, 2>{10.0, 3.0}));
  const auto s = FeatureScaler::fit(train);
  EXPECT_TRUE(s.enabled);
  EXPECT_DOUBLE_EQ(s.mean[0], 0.0);
  EXPECT_DOUBLE_EQ(s.mean[1], 4.0);
  EXPECT_DOUBLE_EQ(s.scale[0], std::sqrt(50.0));
  EXPECT_DOUBLE_EQ(s.scale[1], std::sqrt(5.0));
  const auto v = s.apply(b.features[1]);
  EXPECT_DOUBLE_EQ(v[0], 0.0);
  EXPECT_DOUBLE_EQ(v[1], 3.0 / std::sqrt(5.0));
}

}  // namespace
}  // namespace roadsel::features
