#include "roadsel/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace roadsel::features {

SegmentFeatureSequence extract_sequence(const geometry::Road& road) {
  const auto segs = geometry::segments(road);
  SegmentFeatureSequence out;
  out.road_id = road.id();
  out.features.reserve(segs.size());
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const double delta = i == 0 ? 0.0 : geometry::wrap_deg(segs[i].raw_heading - segs[i - 1].raw_heading);
    out.features.push_back({delta, segs[i].length});
  }
  return out;
}

std::array<double, kStatDim> StatFeatureVector::to_array() const {
  return {direct_start_end_distance, path_length,          num_left_turns,      num_right_turns,
          num_straight_segments,     total_abs_turn,       mean_abs_angle_delta, std_angle_delta,
          median_angle_delta,        max_abs_angle_delta,  min_pivot_radius,    mean_pivot_radius,
          std_pivot_radius,          median_pivot_radius};
}

const std::array<std::string_view, kStatDim>& StatFeatureVector::names() {
  static const std::array<std::string_view, kStatDim> kNames = {
      "direct_start_end_distance", "path_length",          "num_left_turns",       "num_right_turns",
      "num_straight_segments",     "total_abs_turn",       "mean_abs_angle_delta", "std_angle_delta",
      "median_angle_delta",        "max_abs_angle_delta",  "min_pivot_radius",     "mean_pivot_radius",
      "std_pivot_radius",          "median_pivot_radius"};
  return kNames;
}

double pivot_radius(double a, double b, double delta_deg, double cap) {
  // Interior angle at the pivot is 180 - delta, so the opposite side follows from
  // the law of cosines and R = c / (2 sin(delta)).
  const double delta = delta_deg * (std::numbers::pi / 180.0);
  const double c = std::sqrt(std::max(0.0, a * a + b * b + 2.0 * a * b * std::cos(delta)));
  const double s = std::abs(std::sin(delta));
  if (2.0 * cap * s <= c) return cap;
  return c / (2.0 * s);
}

namespace {

double median(std::vector<double> v) {
  const std::size_t n = v.size();
  std::sort(v.begin(), v.end());
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Population mean and standard deviation.
std::pair<double, double> mean_std(const std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  const double mean = sum / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size()))};
}

}  // namespace

StatFeatureVector stats_from_sequence(const SegmentFeatureSequence& seq, double start_end_distance,
                                      const StatOptions& opts) {
  const auto& f = seq.features;
  StatFeatureVector out;
  out.direct_start_end_distance = start_end_distance;
  for (const auto& s : f) out.path_length += s.length;

  std::vector<double> deltas;
  std::vector<double> radii;
  deltas.reserve(f.size());
  radii.reserve(f.size());
  double max_abs = 0.0;
  double sum_abs = 0.0;
  for (std::size_t i = 1; i < f.size(); ++i) {
    const double d = f[i].angle_delta;
    if (d > opts.straight_threshold) {
      out.num_left_turns += 1.0;
    } else if (d < -opts.straight_threshold) {
      out.num_right_turns += 1.0;
    } else {
      out.num_straight_segments += 1.0;
    }
    sum_abs += std::abs(d);
    max_abs = std::max(max_abs, std::abs(d));
    deltas.push_back(d);
    radii.push_back(pivot_radius(f[i - 1].length, f[i].length, d, opts.radius_cap));
  }
  out.total_abs_turn = sum_abs;
  out.max_abs_angle_delta = max_abs;
  if (!deltas.empty()) {
    out.mean_abs_angle_delta = sum_abs / static_cast<double>(deltas.size());
    out.std_angle_delta = mean_std(deltas).second;
    out.median_angle_delta = median(deltas);
    const auto [rmean, rstd] = mean_std(radii);
    out.min_pivot_radius = *std::min_element(radii.begin(), radii.end());
    out.mean_pivot_radius = rmean;
    out.std_pivot_radius = rstd;
    out.median_pivot_radius = median(radii);
  }
  return out;
}

StatFeatureVector extract_stats(const geometry::Road& road, const StatOptions& opts) {
  const auto& p = road.points();
  return stats_from_sequence(extract_sequence(road), geometry::distance(p.front(), p.back()), opts);
}

FeatureScaler FeatureScaler::fit(std::span<const SegmentFeatureSequence> train) {
  FeatureScaler s;
  s.enabled = true;
  double n = 0.0;
  std::array<double, 2> sum{0.0, 0.0};
  for (const auto& seq : train) {
    for (const auto& f : seq.features) {
      sum[0] += f.angle_delta;
      sum[1] += f.length;
      n += 1.0;
    }
  }
  if (n == 0.0) return s;
  s.mean = {sum[0] / n, sum[1] / n};
  std::array<double, 2> ss{0.0, 0.0};
  for (const auto& seq : train) {
    for (const auto& f : seq.features) {
      ss[0] += (f.angle_delta - s.mean[0]) * (f.angle_delta - s.mean[0]);
      ss[1] += (f.length - s.mean[1]) * (f.length - s.mean[1]);
    }
  }
  for (int c = 0; c < 2; ++c) {
    const double sd = std::sqrt(ss[c] / n);
    s.scale[c] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

std::array<double, 2> FeatureScaler::apply(const SegmentFeature& f) const {
  if (!enabled) return {f.angle_delta, f.length};
  return {(f.angle_delta - mean[0]) / scale[0], (f.length - mean[1]) / scale[1]};
}

}  // namespace roadsel::features
