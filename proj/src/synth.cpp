#include "roadsel/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numbers>
#include <random>

#include "roadsel/errors.hpp"
#include "roadsel/rng.hpp"

namespace roadsel::synth {
namespace {

using geometry::Point2D;
using nlohmann::json;

bool inside(const Point2D& p, double size) { return p.x >= 0.0 && p.x <= size && p.y >= 0.0 && p.y <= size; }

std::vector<Point2D> control_points(std::mt19937_64& rng, const GeneratorConfig& cfg) {
  std::uniform_int_distribution<int> count(cfg.min_control_points, cfg.max_control_points);
  std::uniform_real_distribution<double> coord(0.0, cfg.map_size);
  std::uniform_real_distribution<double> heading(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> turn(-cfg.max_turn_deg, cfg.max_turn_deg);
  std::uniform_real_distribution<double> step(cfg.min_spacing, cfg.max_spacing);

  const int k = count(rng);
  std::vector<Point2D> pts = {{coord(rng), coord(rng)}};
  double h = heading(rng);
  for (int i = 1; i < k; ++i) {
    bool placed = false;
    for (int tries = 0; tries < 30 && !placed; ++tries) {
      const double nh = i == 1 ? h : h + turn(rng) * std::numbers::pi / 180.0;
      const double s = step(rng);
      const Point2D q{pts.back().x + s * std::cos(nh), pts.back().y + s * std::sin(nh)};
      if (inside(q, cfg.map_size)) {
        pts.push_back(q);
        h = nh;
        placed = true;
      }
    }
    if (!placed) return {};
  }
  return pts;
}

Point2D lerp(const Point2D& a, const Point2D& b, double ta, double tb, double t) {
  const double w = (t - ta) / (tb - ta);
  return {a.x + w * (b.x - a.x), a.y + w * (b.y - a.y)};
}

// Centripetal Catmull-Rom through every control point (Barry-Goldman pyramid).
std::vector<Point2D> catmull_rom(const std::vector<Point2D>& ctrl, int samples) {
  std::vector<Point2D> p;
  p.reserve(ctrl.size() + 2);
  p.push_back({2.0 * ctrl[0].x - ctrl[1].x, 2.0 * ctrl[0].y - ctrl[1].y});
  p.insert(p.end(), ctrl.begin(), ctrl.end());
  const auto& a = ctrl[ctrl.size() - 2];
  const auto& b = ctrl.back();
  p.push_back({2.0 * b.x - a.x, 2.0 * b.y - a.y});

  std::vector<Point2D> out;
  for (std::size_t s = 1; s + 2 < p.size(); ++s) {
    const Point2D &p0 = p[s - 1], &p1 = p[s], &p2 = p[s + 1], &p3 = p[s + 2];
    const double t0 = 0.0;
    const double t1 = t0 + std::sqrt(geometry::distance(p0, p1));
    const double t2 = t1 + std::sqrt(geometry::distance(p1, p2));
    const double t3 = t2 + std::sqrt(geometry::distance(p2, p3));
    for (int k = 0; k < samples; ++k) {
      const double t = t1 + (t2 - t1) * k / samples;
      const Point2D a1 = lerp(p0, p1, t0, t1, t), a2 = lerp(p1, p2, t1, t2, t), a3 = lerp(p2, p3, t2, t3, t);
      const Point2D b1 = lerp(a1, a2, t0, t2, t), b2 = lerp(a2, a3, t1, t3, t);
      out.push_back(lerp(b1, b2, t1, t2, t));
    }
  }
  out.push_back(ctrl.back());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double round_coord(double v) { return std::round(v * 1e4) / 1e4; }

}  // namespace

void GeneratorConfig::check() const {
  if (!(map_size > 0.0)) throw ArgumentError("map_size must be > 0");
  if (min_control_points < 2 || max_control_points < min_control_points) {
    throw ArgumentError("control point range must satisfy 2 <= min <= max");
  }
  if (!(min_spacing > 0.0) || max_spacing < min_spacing) {
    throw ArgumentError("spacing range must satisfy 0 < min <= max");
  }
  if (!(max_turn_deg >= 0.0 && max_turn_deg <= 180.0)) throw ArgumentError("max_turn_deg must lie in [0, 180]");
  if (samples_per_span < 1) throw ArgumentError("samples_per_span must be >= 1");
  if (resample_count < 3) throw ArgumentError("resample_count must be >= 3");
  if (min_clearance < 0.0) throw ArgumentError("min_clearance must be >= 0");
  if (max_attempts < 1) throw ArgumentError("max_attempts must be >= 1");
}

void DriverConfig::check() const {
  const double v[] = {max_speed_kmh, risk_factor, oob_tolerance, base_lateral_accel,
                      accel_limit,   brake_limit, lookahead,     violation_margin};
  for (double x : v) {
    if (!(x > 0.0) || !std::isfinite(x)) throw ArgumentError("driver parameters must be finite and positive");
  }
}

geometry::Road generate_road(const GeneratorConfig& cfg, const std::string& id) {
  cfg.check();
  std::mt19937_64 rng(cfg.seed);
  for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    const auto ctrl = control_points(rng, cfg);
    if (ctrl.size() < 2) continue;
    const auto dense = catmull_rom(ctrl, cfg.samples_per_span);
    if (dense.size() < 3) continue;
    auto pts = geometry::resample(geometry::Road(id, dense), cfg.resample_count).points();
    for (auto& p : pts) p = {round_coord(p.x), round_coord(p.y)};
    if (std::adjacent_find(pts.begin(), pts.end()) != pts.end()) continue;
    if (geometry::validate_points(pts, cfg.min_clearance).valid) return geometry::Road(id, std::move(pts));
  }
  throw GenerationError("no valid road after " + std::to_string(cfg.max_attempts) + " attempts (seed " +
                        std::to_string(cfg.seed) + ")");
}

std::vector<double> curvature_profile(const geometry::Road& road) {
  const auto& p = road.points();
  const std::size_t n = p.size();
  std::vector<double> k(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double ax = p[i].x - p[i - 1].x, ay = p[i].y - p[i - 1].y;
    const double bx = p[i + 1].x - p[i].x, by = p[i + 1].y - p[i].y;
    const double cross = ax * by - ay * bx;
    const double la = std::hypot(ax, ay), lb = std::hypot(bx, by);
    if (std::abs(cross) <= geometry::kCollinearEps * la * lb) continue;
    const double lc = geometry::distance(p[i - 1], p[i + 1]);
    k[i] = 2.0 * std::abs(cross) / (la * lb * lc);
  }
  k[0] = k[1];
  k[n - 1] = k[n - 2];
  return k;
}

OracleOutcome oracle_label(const geometry::Road& road, const DriverConfig& d) {
  d.check();
  const auto& p = road.points();
  const std::size_t n = p.size();
  const auto kappa = curvature_profile(road);
  const double vmax = d.max_speed();
  const double a_lat = d.lateral_accel();
  const double brake = d.brake_decel();

  std::vector<double> s(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) s[i] = s[i - 1] + geometry::distance(p[i - 1], p[i]);

  OracleOutcome out;
  out.speed_limit.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.speed_limit[i] = kappa[i] > 0.0 ? std::min(vmax, std::sqrt(a_lat / kappa[i])) : vmax;
  }

  // Highest speed at i from which every limit within the lookahead can still be met.
  std::vector<double> plan2(n);
  for (std::size_t i = 0; i < n; ++i) {
    double best = INFINITY;
    for (std::size_t j = i; j < n && s[j] - s[i] <= d.lookahead; ++j) {
      best = std::min(best, out.speed_limit[j] * out.speed_limit[j] + 2.0 * brake * (s[j] - s[i]));
    }
    plan2[i] = best;
  }

  out.speed_profile.assign(n, 0.0);
  double v2 = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double ds = s[i + 1] - s[i];
    const double up = std::min({v2 + 2.0 * d.accel_limit * ds, vmax * vmax, plan2[i + 1]});
    v2 = std::max(up, v2 - 2.0 * brake * ds);
    out.speed_profile[i + 1] = std::sqrt(std::max(v2, 0.0));
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (out.speed_profile[i] > d.violation_margin * out.speed_limit[i]) {
      out.label = Label::kFail;
      out.failure_index = i;
      break;
    }
  }
  return out;
}

json to_json(const GeneratorConfig& c) {
  return {{"map_size", c.map_size},
          {"min_control_points", c.min_control_points},
          {"max_control_points", c.max_control_points},
          {"min_spacing", c.min_spacing},
          {"max_spacing", c.max_spacing},
          {"max_turn_deg", c.max_turn_deg},
          {"samples_per_span", c.samples_per_span},
          {"resample_count", c.resample_count},
          {"min_clearance", c.min_clearance},
          {"max_attempts", c.max_attempts},
          {"seed", c.seed}};
}

json to_json(const DriverConfig& c) {
  return {{"max_speed_kmh", c.max_speed_kmh},
          {"risk_factor", c.risk_factor},
          {"oob_tolerance", c.oob_tolerance},
          {"base_lateral_accel", c.base_lateral_accel},
          {"accel_limit", c.accel_limit},
          {"brake_limit", c.brake_limit},
          {"lookahead", c.lookahead},
          {"violation_margin", c.violation_margin}};
}

GeneratorConfig generator_config_from_json(const json& doc) {
  GeneratorConfig c;
  c.map_size = doc.value("map_size", c.map_size);
  c.min_control_points = doc.value("min_control_points", c.min_control_points);
  c.max_control_points = doc.value("max_control_points", c.max_control_points);
  c.min_spacing = doc.value("min_spacing", c.min_spacing);
  c.max_spacing = doc.value("max_spacing", c.max_spacing);
  c.max_turn_deg = doc.value("max_turn_deg", c.max_turn_deg);
  c.samples_per_span = doc.value("samples_per_span", c.samples_per_span);
  c.resample_count = doc.value("resample_count", c.resample_count);
  c.min_clearance = doc.value("min_clearance", c.min_clearance);
  c.max_attempts = doc.value("max_attempts", c.max_attempts);
  c.seed = doc.value("seed", c.seed);
  return c;
}

DriverConfig driver_config_from_json(const json& doc) {
  DriverConfig c;
  c.max_speed_kmh = doc.value("max_speed_kmh", c.max_speed_kmh);
  c.risk_factor = doc.value("risk_factor", c.risk_factor);
  c.oob_tolerance = doc.value("oob_tolerance", c.oob_tolerance);
  c.base_lateral_accel = doc.value("base_lateral_accel", c.base_lateral_accel);
  c.accel_limit = doc.value("accel_limit", c.accel_limit);
  c.brake_limit = doc.value("brake_limit", c.brake_limit);
  c.lookahead = doc.value("lookahead", c.lookahead);
  c.violation_margin = doc.value("violation_margin", c.violation_margin);
  return c;
}

namespace {

data::Dataset generate_all(std::size_t n, const GeneratorConfig& gen, const DriverConfig& driver,
                           std::uint64_t seed) {
  std::vector<std::optional<data::DatasetEntry>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  const json driver_json = to_json(driver);
#pragma omp parallel for schedule(dynamic, 8)
  for (long k = 0; k < static_cast<long>(n); ++k) {
    try {
      GeneratorConfig cfg = gen;
      cfg.seed = mix_seed(seed, static_cast<std::uint64_t>(k));
      char id[32];
      std::snprintf(id, sizeof id, "road_%05ld", k);
      geometry::Road road = generate_road(cfg, id);
      const auto outcome = oracle_label(road, driver);
      road.set_label(outcome.label);
      json meta = {{"source", "synthetic"}, {"generator", to_json(cfg)}, {"driver", driver_json}};
      meta["failure_index"] = outcome.failure_index ? json(*outcome.failure_index) : json(nullptr);
      slots[k] = data::DatasetEntry{std::move(road), std::move(meta)};
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  data::Dataset ds;
  ds.entries.reserve(n);
  for (auto& s : slots) ds.entries.push_back(std::move(*s));
  return ds;
}

}  // namespace

data::Dataset make_dataset(std::size_t n, const GeneratorConfig& gen, const DriverConfig& driver, std::uint64_t seed,
                           DatasetSummary* summary) {
  if (n < 1) throw ArgumentError("dataset size must be >= 1");
  gen.check();
  driver.check();
  DatasetSummary sum;
  data::Dataset ds = generate_all(n, gen, driver, seed);
  if (n > 1 && (ds.count(Label::kPass) == 0 || ds.count(Label::kFail) == 0)) {
    GeneratorConfig wider = gen;
    wider.max_turn_deg = std::min(170.0, gen.max_turn_deg * 1.5);
    sum.retried = true;
    sum.warnings.push_back("only one class generated; regenerating with max_turn_deg=" +
                           std::to_string(wider.max_turn_deg));
    ds = generate_all(n, wider, driver, seed);
    if (ds.count(Label::kPass) == 0 || ds.count(Label::kFail) == 0) {
      sum.warnings.push_back("dataset still contains a single class after the retry");
    }
  }
  sum.total = ds.size();
  sum.pass = ds.count(Label::kPass);
  sum.fail = ds.count(Label::kFail);
  if (summary) *summary = sum;
  return ds;
}

}  // namespace roadsel::synth
