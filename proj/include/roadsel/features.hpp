#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "roadsel/geometry.hpp"

namespace roadsel::features {

struct SegmentFeature {
  double angle_delta = 0.0;  // degrees in (-180, 180]
  double length = 0.0;       // meters

  friend bool operator==(const SegmentFeature&, const SegmentFeature&) = default;
};

/// Per-segment (heading change, length) pairs of a road; the recurrent model's input.
///
/// features[0].angle_delta is always 0: only changes of heading carry
/// information, so the first segment serves as the reference direction.
struct SegmentFeatureSequence {
  std::string road_id;
  std::vector<SegmentFeature> features;
};

SegmentFeatureSequence extract_sequence(const geometry::Road& road);

inline constexpr double kDefaultStraightThreshold = 5.0;  // degrees
inline constexpr double kDefaultRadiusCap = 1000.0;       // meters

struct StatOptions {
  double straight_threshold = kDefaultStraightThreshold;
  double radius_cap = kDefaultRadiusCap;
};

inline constexpr std::size_t kStatDim = 14;

struct StatFeatureVector {
  double direct_start_end_distance = 0.0;
  double path_length = 0.0;
  double num_left_turns = 0.0;
  double num_right_turns = 0.0;
  double num_straight_segments = 0.0;
  double total_abs_turn = 0.0;
  double mean_abs_angle_delta = 0.0;
  double std_angle_delta = 0.0;
  double median_angle_delta = 0.0;
  double max_abs_angle_delta = 0.0;
  double min_pivot_radius = 0.0;
  double mean_pivot_radius = 0.0;
  double std_pivot_radius = 0.0;
  double median_pivot_radius = 0.0;

  std::array<double, kStatDim> to_array() const;
  static const std::array<std::string_view, kStatDim>& names();
};

/// Statistical summary for the classical baselines.
///
/// Computed purely from the segment sequence plus the start/end distance.
/// Turn counts classify the N-2 junctions by angle delta (positive = left).
/// Pivot radius is the circumradius through three consecutive points,
/// recovered from the two segment lengths and the turn between them and
/// capped at radius_cap.
StatFeatureVector extract_stats(const geometry::Road& road, const StatOptions& opts = {});
StatFeatureVector stats_from_sequence(const SegmentFeatureSequence& seq, double start_end_distance,
                                      const StatOptions& opts = {});

// Circumradius of the triangle with sides a, b meeting at a turn of delta_deg degrees, capped.
double pivot_radius(double a, double b, double delta_deg, double cap);

/// Optional affine standardization of the two sequence channels.
///
/// Disabled by default; when enabled, fit on the training split only.
struct FeatureScaler {
  bool enabled = false;
  std::array<double, 2> mean{0.0, 0.0};
  std::array<double, 2> scale{1.0, 1.0};

  static FeatureScaler fit(std::span<const SegmentFeatureSequence> train);
  std::array<double, 2> apply(const SegmentFeature& f) const;
};

}  // namespace roadsel::features
