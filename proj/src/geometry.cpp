#include "roadsel/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <tuple>
#include <utility>

#include "roadsel/errors.hpp"

namespace roadsel::geometry {

double distance(const Point2D& a, const Point2D& b) { return std::hypot(b.x - a.x, b.y - a.y); }

Road::Road(std::string id, std::vector<Point2D> points, std::optional<Label> label)
    : id_(std::move(id)), points_(std::move(points)), label_(label) {
  if (points_.size() < 3) {
    throw ValidationError("road '" + id_ + "' has " + std::to_string(points_.size()) +
                          " points; at least 3 are required");
  }
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!std::isfinite(points_[i].x) || !std::isfinite(points_[i].y)) {
      throw ValidationError("road '" + id_ + "' has a non-finite coordinate at point " + std::to_string(i));
    }
    if (i > 0 && points_[i] == points_[i - 1]) {
      throw ValidationError("road '" + id_ + "' has a zero-length segment at index " + std::to_string(i - 1) +
                            " (points " + std::to_string(i - 1) + " and " + std::to_string(i) + " coincide)");
    }
  }
}

double heading_deg(double dx, double dy) {
  double h = std::atan2(dy, dx) * (180.0 / std::numbers::pi);
  return h <= -180.0 ? h + 360.0 : h;
}

double wrap_deg(double deg) {
  double d = std::fmod(deg, 360.0);
  if (d > 180.0) d -= 360.0;
  if (d <= -180.0) d += 360.0;
  return d;
}

std::vector<Segment> segments(const Road& road) {
  const auto& p = road.points();
  std::vector<Segment> out;
  out.reserve(p.size() - 1);
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    const double dx = p[i + 1].x - p[i].x;
    const double dy = p[i + 1].y - p[i].y;
    out.push_back({p[i], p[i + 1], heading_deg(dx, dy), std::hypot(dx, dy)});
  }
  return out;
}

double path_length(std::span<const Point2D> points) {
  double total = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) total += distance(points[i - 1], points[i]);
  return total;
}

const char* to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kSelfIntersection:
      return "self_intersection";
    case ViolationKind::kOverlap:
      return "overlap";
    case ViolationKind::kDegenerate:
      return "degenerate";
  }
  return "unknown";
}

namespace {

double cross(const Point2D& o, const Point2D& a, const Point2D& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

int orientation(const Point2D& o, const Point2D& a, const Point2D& b) {
  const double c = cross(o, a, b);
  const double scale = distance(o, a) * distance(o, b);
  if (std::abs(c) <= kCollinearEps * scale) return 0;
  return c > 0 ? 1 : -1;
}

// p is known collinear with [a, b]; checks that it lies within the segment's box.
bool within_box(const Point2D& a, const Point2D& b, const Point2D& p) {
  return p.x >= std::min(a.x, b.x) && p.x <= std::max(a.x, b.x) && p.y >= std::min(a.y, b.y) &&
         p.y <= std::max(a.y, b.y);
}

double point_segment_distance(const Point2D& p, const Point2D& a, const Point2D& b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  if (len2 == 0.0) return distance(p, a);
  const double t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len2, 0.0, 1.0);
  return distance(p, {a.x + t * dx, a.y + t * dy});
}

struct Box {
  double min_x, max_x, min_y, max_y;
  std::size_t segment;
};

}  // namespace

bool segments_intersect(const Point2D& a0, const Point2D& a1, const Point2D& b0, const Point2D& b1) {
  const int o1 = orientation(a0, a1, b0);
  const int o2 = orientation(a0, a1, b1);
  const int o3 = orientation(b0, b1, a0);
  const int o4 = orientation(b0, b1, a1);
  if (o1 * o2 < 0 && o3 * o4 < 0) return true;
  if (o1 == 0 && within_box(a0, a1, b0)) return true;
  if (o2 == 0 && within_box(a0, a1, b1)) return true;
  if (o3 == 0 && within_box(b0, b1, a0)) return true;
  if (o4 == 0 && within_box(b0, b1, a1)) return true;
  return false;
}

double segment_distance(const Point2D& a0, const Point2D& a1, const Point2D& b0, const Point2D& b1) {
  if (segments_intersect(a0, a1, b0, b1)) return 0.0;
  return std::min({point_segment_distance(a0, b0, b1), point_segment_distance(a1, b0, b1),
                   point_segment_distance(b0, a0, a1), point_segment_distance(b1, a0, a1)});
}

double clearance_exemption_gap(double min_clearance) { return 0.5 * std::numbers::pi * min_clearance; }

ValidityReport validate_points(std::span<const Point2D> points, double min_clearance) {
  if (min_clearance < 0.0 || !std::isfinite(min_clearance)) {
    throw ArgumentError("min_clearance must be finite and non-negative");
  }
  ValidityReport report;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!std::isfinite(points[i].x) || !std::isfinite(points[i].y)) {
      report.violations.push_back({ViolationKind::kDegenerate, i, i});
    } else if (i > 0 && points[i] == points[i - 1]) {
      report.violations.push_back({ViolationKind::kDegenerate, i - 1, i});
    }
  }
  if (points.size() < 3 && report.violations.empty()) {
    report.violations.push_back({ViolationKind::kDegenerate, 0, points.size()});
  }
  if (!report.violations.empty()) {
    report.valid = false;
    return report;
  }

  const std::size_t n_seg = points.size() - 1;
  std::vector<double> arc(points.size(), 0.0);
  for (std::size_t i = 1; i < points.size(); ++i) arc[i] = arc[i - 1] + distance(points[i - 1], points[i]);
  const double exempt_gap = clearance_exemption_gap(min_clearance);

  // Sweep-and-prune on x: only boxes within min_clearance of each other can interact.
  std::vector<Box> boxes;
  boxes.reserve(n_seg);
  for (std::size_t s = 0; s < n_seg; ++s) {
    const auto& a = points[s];
    const auto& b = points[s + 1];
    boxes.push_back({std::min(a.x, b.x), std::max(a.x, b.x), std::min(a.y, b.y), std::max(a.y, b.y), s});
  }
  std::sort(boxes.begin(), boxes.end(), [](const Box& l, const Box& r) {
    return l.min_x != r.min_x ? l.min_x < r.min_x : l.segment < r.segment;
  });

  for (std::size_t u = 0; u < boxes.size(); ++u) {
    for (std::size_t w = u + 1; w < boxes.size(); ++w) {
      if (boxes[w].min_x - boxes[u].max_x > min_clearance) break;
      const double gap_y = std::max(boxes[w].min_y - boxes[u].max_y, boxes[u].min_y - boxes[w].max_y);
      if (gap_y > min_clearance) continue;
      const std::size_t i = std::min(boxes[u].segment, boxes[w].segment);
      const std::size_t j = std::max(boxes[u].segment, boxes[w].segment);
      if (j == i + 1) continue;
      const auto& a0 = points[i];
      const auto& a1 = points[i + 1];
      const auto& b0 = points[j];
      const auto& b1 = points[j + 1];
      if (segments_intersect(a0, a1, b0, b1)) {
        report.violations.push_back({ViolationKind::kSelfIntersection, i, j});
      } else if (min_clearance > 0.0 && arc[j] - arc[i + 1] >= exempt_gap &&
                 segment_distance(a0, a1, b0, b1) < min_clearance) {
        report.violations.push_back({ViolationKind::kOverlap, i, j});
      }
    }
  }
  std::sort(report.violations.begin(), report.violations.end(), [](const Violation& l, const Violation& r) {
    return std::tie(l.first, l.second, l.kind) < std::tie(r.first, r.second, r.kind);
  });
  report.valid = report.violations.empty();
  return report;
}

ValidityReport validate(const Road& road, double min_clearance) {
  return validate_points(road.points(), min_clearance);
}

Road resample(const Road& road, std::size_t target_count) {
  if (target_count < 3) throw ArgumentError("resample target_count must be >= 3");
  const auto& p = road.points();
  std::vector<double> arc(p.size(), 0.0);
  for (std::size_t i = 1; i < p.size(); ++i) arc[i] = arc[i - 1] + distance(p[i - 1], p[i]);
  const double total = arc.back();

  std::vector<Point2D> out;
  out.reserve(target_count);
  out.push_back(p.front());
  std::size_t seg = 0;
  for (std::size_t k = 1; k + 1 < target_count; ++k) {
    const double s = total * static_cast<double>(k) / static_cast<double>(target_count - 1);
    while (seg + 2 < p.size() && arc[seg + 1] < s) ++seg;
    const double len = arc[seg + 1] - arc[seg];
    const double t = std::clamp((s - arc[seg]) / len, 0.0, 1.0);
    out.push_back({p[seg].x + t * (p[seg + 1].x - p[seg].x), p[seg].y + t * (p[seg + 1].y - p[seg].y)});
  }
  out.push_back(p.back());
  return Road(road.id(), std::move(out), road.label());
}

Road decimate(const Road& road, std::size_t keep_every) {
  if (keep_every < 1) throw ArgumentError("decimate keep_every must be >= 1");
  const auto& p = road.points();
  std::vector<Point2D> out;
  for (std::size_t i = 0; i < p.size(); i += keep_every) out.push_back(p[i]);
  if ((p.size() - 1) % keep_every != 0) out.push_back(p.back());
  if (out.size() < 3) {
    throw ArgumentError("decimating " + std::to_string(p.size()) + " points by " + std::to_string(keep_every) +
                        " leaves " + std::to_string(out.size()) + " points; at least 3 are required");
  }
  return Road(road.id(), std::move(out), road.label());
}

}  // namespace roadsel::geometry
