#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "qibla/sensor_pipeline.hpp"

namespace qibla {

struct Knot {
  double t_ms;
  double value_deg;
};

/// Scenario for the synthetic sensor trace. Heading knots are joined along
/// the shortest circular arc (so consecutive knots must differ by less than
/// 180 deg to sweep further); pitch and roll knots are joined linearly.
/// Before the first and after the last knot the value is held.
struct Scenario {
  double duration_ms = 0.0;
  double sample_rate_hz = 50.0;
  std::vector<Knot> heading;
  std::vector<Knot> pitch;
  std::vector<Knot> roll;
  double horizontal_intensity_ut = 0.0;
  double inclination_deg = 0.0;
  double declination_deg = 0.0;
  Eigen::Vector3d hard_iron = Eigen::Vector3d::Zero();
  double noise_sigma_mag_ut = 0.0;
  double noise_sigma_accel_ms2 = 0.0;
  std::uint64_t rng_seed = 0;
  // End of the calibration sweep, carried into the trace header.
  std::optional<double> calibration_end_ms;

  // Throws ScenarioError naming the offending field.
  void validate() const;
  std::size_t sample_count() const;
};

/// Flat `key = value` text, '#' comments. Knot lists are written as
/// `t:value, t:value, ...`; a bare number means a constant. See
/// data/scenarios/ for complete examples.
Scenario parse_scenario(std::istream& in);
Scenario load_scenario(const std::filesystem::path& path);

struct TruthRecord {
  double t_ms = 0.0;
  double true_heading_deg = 0.0;
  double pitch_deg = 0.0;
  double roll_deg = 0.0;

  friend bool operator==(const TruthRecord&, const TruthRecord&) = default;
};

struct SimulatedTrace {
  std::vector<SensorSample> samples;
  std::vector<TruthRecord> truth;
  std::optional<double> calibration_end_ms;
};

// World-frame (north, east, down) field for the scenario's magnetic setup.
Eigen::Vector3d world_field(double horizontal_intensity_ut, double inclination_deg,
                            double declination_deg);

// R = Rz(yaw) * Ry(pitch) * Rx(roll), body to world.
Eigen::Matrix3d body_to_world(double yaw_deg, double pitch_deg, double roll_deg);

double heading_at(std::span<const Knot> knots, double t_ms);
double linear_at(std::span<const Knot> knots, double t_ms);

/// Sample i is taken at t = i * 1000 / rate for i < round(duration * rate).
/// Noise: per sample three accelerometer draws then three magnetometer draws
/// from one std::mt19937_64 seeded with rng_seed; normals come from the
/// Box-Muller transform (both outputs used) on 53-bit uniforms.
SimulatedTrace generate(const Scenario& scenario);

/// Heading at `t_ms`, linearly interpolated along the shorter arc between the
/// bracketing records. Throws OutOfSpan outside the trace.
double truth_heading_at(std::span<const TruthRecord> truth, double t_ms);

/// Portable standard normal source; output depends only on the seed.
class GaussianSource {
 public:
  explicit GaussianSource(std::uint64_t seed) : engine_(seed) {}
  double next();

 private:
  double uniform_open();  // (0, 1]

  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

}  // namespace qibla
