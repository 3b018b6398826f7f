#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "roadsel/dataset_file.hpp"
#include "roadsel/geometry.hpp"

namespace roadsel::synth {

struct GeneratorConfig {
  double map_size = 200.0;  // meters, square side
  int min_control_points = 4;
  int max_control_points = 10;
  double min_spacing = 25.0;  // meters between consecutive control points
  double max_spacing = 60.0;
  double max_turn_deg = 110.0;  // heading change at each control point is drawn from [-max, max]
  int samples_per_span = 40;    // dense spline samples before resampling
  std::size_t resample_count = 197;
  double min_clearance = geometry::kDefaultClearance;
  int max_attempts = 100;
  std::uint64_t seed = 0;

  void check() const;
};

/// Surrogate driver. Every acceleration budget (lateral and braking) is the
/// base value times risk_factor.
struct DriverConfig {
  double max_speed_kmh = 120.0;
  double risk_factor = 1.5;
  double oob_tolerance = 0.5;  // metadata only
  double base_lateral_accel = 6.0;  // m/s^2
  double accel_limit = 3.0;         // m/s^2
  double brake_limit = 8.0;         // m/s^2 at risk_factor 1
  double lookahead = 8.0;           // meters
  double violation_margin = 1.05;

  double max_speed() const { return max_speed_kmh / 3.6; }
  double lateral_accel() const { return risk_factor * base_lateral_accel; }
  double brake_decel() const { return risk_factor * brake_limit; }
  void check() const;
};

struct OracleOutcome {
  Label label = Label::kPass;
  std::optional<std::size_t> failure_index;
  std::vector<double> speed_profile;  // m/s per point
  std::vector<double> speed_limit;    // m/s per point, at most max_speed
};

/// Control points from a bounded heading walk inside the map, joined by a
/// centripetal Catmull-Rom spline, resampled to resample_count points and
/// rounded to 0.1 mm. Candidates failing geometry::validate are redrawn.
geometry::Road generate_road(const GeneratorConfig& cfg, const std::string& id = "road");

// Unsigned curvature 1/R per point; endpoints copy their neighbor, collinear triples give 0.
std::vector<double> curvature_profile(const geometry::Road& road);

/// Three passes: per-point cornering limit, lookahead-limited speed profile
/// starting from rest, then FAIL at the first point whose speed exceeds
/// violation_margin times its limit.
OracleOutcome oracle_label(const geometry::Road& road, const DriverConfig& d);

nlohmann::json to_json(const GeneratorConfig& cfg);
nlohmann::json to_json(const DriverConfig& cfg);
GeneratorConfig generator_config_from_json(const nlohmann::json& doc);
DriverConfig driver_config_from_json(const nlohmann::json& doc);

struct DatasetSummary {
  std::size_t total = 0;
  std::size_t pass = 0;
  std::size_t fail = 0;
  bool retried = false;
  std::vector<std::string> warnings;
};

/// n labeled roads with ids "road_00000", ...; road k uses seed mix_seed(seed, k).
/// If only one class appears, regenerates once with a wider turn range.
data::Dataset make_dataset(std::size_t n, const GeneratorConfig& gen, const DriverConfig& driver, std::uint64_t seed,
                           DatasetSummary* summary = nullptr);

}  // namespace roadsel::synth
