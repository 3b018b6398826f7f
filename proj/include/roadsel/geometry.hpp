#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "roadsel/label.hpp"

namespace roadsel::geometry {

struct Point2D {
  double x = 0.0;  // meters
  double y = 0.0;  // meters

  friend bool operator==(const Point2D&, const Point2D&) = default;
};

double distance(const Point2D& a, const Point2D& b);

/// Ordered 2D polyline describing the driving path of one test case.
///
/// Construction enforces the invariants every downstream stage relies on:
/// at least three points, finite coordinates, and no two consecutive points
/// equal. Violations throw ValidationError naming the offending index.
class Road {
 public:
  Road(std::string id, std::vector<Point2D> points, std::optional<Label> label = std::nullopt);

  const std::string& id() const { return id_; }
  const std::vector<Point2D>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  const std::optional<Label>& label() const { return label_; }

  void set_label(std::optional<Label> label) { label_ = label; }

 private:
  std::string id_;
  std::vector<Point2D> points_;
  std::optional<Label> label_;
};

struct Segment {
  Point2D start;
  Point2D end;
  double raw_heading = 0.0;  // degrees in (-180, 180], from +x axis
  double length = 0.0;       // meters
};

// Heading of the vector (dx, dy) in degrees, normalized into (-180, 180].
double heading_deg(double dx, double dy);

// Wraps an angle in degrees into (-180, 180].
double wrap_deg(double deg);

std::vector<Segment> segments(const Road& road);

double path_length(std::span<const Point2D> points);

enum class ViolationKind { kSelfIntersection, kOverlap, kDegenerate };

const char* to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::size_t first;   // segment index (point index for kDegenerate)
  std::size_t second;

  friend bool operator==(const Violation&, const Violation&) = default;
};

struct ValidityReport {
  bool valid = true;
  std::vector<Violation> violations;

  friend bool operator==(const ValidityReport&, const ValidityReport&) = default;
};

// Two lanes of 4 m.
inline constexpr double kDefaultClearance = 8.0;

// Relative tolerance used by the orientation predicate to call three points collinear.
inline constexpr double kCollinearEps = 1e-12;

/// Checks a raw point list for the road validity rule.
///
/// Non-adjacent segments may neither intersect (properly or by touching) nor
/// come closer than `min_clearance`. The clearance check skips pairs whose
/// separation along the path is shorter than (pi/2) * min_clearance: such
/// pairs are neighbors on the same leg, not distinct legs folding back onto
/// each other. Consecutive duplicate points are reported as kDegenerate.
ValidityReport validate_points(std::span<const Point2D> points, double min_clearance = kDefaultClearance);

ValidityReport validate(const Road& road, double min_clearance = kDefaultClearance);

// Along-path gap below which two non-adjacent segments are exempt from the clearance check.
double clearance_exemption_gap(double min_clearance);

// Minimum Euclidean distance between segments [a0,a1] and [b0,b1]; 0 when they meet.
double segment_distance(const Point2D& a0, const Point2D& a1, const Point2D& b0, const Point2D& b1);

// True if the closed segments share at least one point.
bool segments_intersect(const Point2D& a0, const Point2D& a1, const Point2D& b0, const Point2D& b1);

/// Places `target_count` points at uniform arc-length spacing along the
/// polyline by linear interpolation. First and last points are kept exactly.
Road resample(const Road& road, std::size_t target_count);

// Keeps indices 0, k, 2k, ... plus the final point.
Road decimate(const Road& road, std::size_t keep_every);

}  // namespace roadsel::geometry
