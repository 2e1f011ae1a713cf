#pragma once

// Compass core: hard-iron calibration, tilt compensation, heading filter and
// the qibla pointer.
//
// Frame convention (body and world):
//   body  X forward (top edge of the device), Y right, Z down
//   world X north, Y east, Z down
// The accelerometer reports specific force, so a device lying flat reads
// (0, 0, -g). Attitude is yaw (about Z), then pitch (about Y), then roll
// (about X): R = Rz(yaw) * Ry(pitch) * Rx(roll) maps body to world, and a
// world vector v appears in the body frame as R^T v. Positive pitch raises
// the nose; positive roll drops the right side.
//
// From a specific-force reading f:
//   roll  = atan2(-f.y, -f.z)
//   pitch = atan2(f.x, sqrt(f.y^2 + f.z^2))
// The hard-iron corrected field m is levelled with Ry(pitch) * Rx(roll) and
//   heading = atan2(-m_level.y, m_level.x)   (degrees, normalized)

#include <Eigen/Core>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "qibla/declination.hpp"
#include "qibla/geodesy.hpp"

namespace qibla {

inline constexpr double kGravity = 9.81;  // m/s^2

struct SensorSample {
  double t_ms = 0.0;
  Eigen::Vector3d accel = Eigen::Vector3d::Zero();  // m/s^2
  Eigen::Vector3d mag = Eigen::Vector3d::Zero();    // microtesla

  friend bool operator==(const SensorSample&, const SensorSample&) = default;
};

bool is_finite(const SensorSample& sample);

// Accelerometer magnitude inside (0.5 g, 1.5 g) and every component finite.
// Anything else is a dynamic sample and unusable for tilt.
bool is_usable_for_tilt(const SensorSample& sample);

inline constexpr std::size_t kMinCalibrationSamples = 10;
inline constexpr std::size_t kConvergedSampleCount = 200;
inline constexpr double kConvergedCoverageDeg = 180.0;
inline constexpr double kMaxNormalConditionNumber = 1e12;

struct CalibrationState {
  Eigen::Vector3d hard_iron = Eigen::Vector3d::Zero();
  std::size_t samples_used = 0;
  double coverage_deg = 0.0;
  bool converged = false;
};

/// Least-squares sphere fit (Kasa) over the usable samples' magnetometer
/// readings. The fitted centre is the hard-iron offset. Coverage is the
/// heading span swept by the corrected samples, i.e. 360 minus the largest
/// circular gap between observed headings.
///
/// Throws InsufficientData below 10 usable samples and DegenerateSweep when
/// the normal equations are rank deficient (condition number above 1e12),
/// which happens e.g. for a yaw-only sweep at fixed tilt.
CalibrationState calibrate(std::span<const SensorSample> samples);

struct Attitude {
  double pitch_deg;
  double roll_deg;
};

Attitude attitude_from_accel(const Eigen::Vector3d& specific_force);

/// Magnetic heading of a single sample. Throws DynamicSample if the
/// accelerometer reading is out of band.
Azimuth tilt_compensated_heading(const SensorSample& sample, const CalibrationState& cal);
Azimuth tilt_compensated_heading(const SensorSample& sample, const Eigen::Vector3d& hard_iron);

inline constexpr double kDefaultFilterAlpha = 0.15;

/// Circular exponential moving average kept as a unit vector (c, s).
class FilterState {
 public:
  explicit FilterState(double alpha = kDefaultFilterAlpha);

  double alpha() const noexcept { return alpha_; }
  bool initialized() const noexcept { return initialized_; }
  double c() const noexcept { return c_; }
  double s() const noexcept { return s_; }

  // Last filtered heading; throws InvalidArgument before the first update.
  Azimuth heading() const;

  friend std::pair<FilterState, Azimuth> filter_heading(FilterState state, Azimuth new_heading);
  friend bool operator==(const FilterState&, const FilterState&) = default;

 private:
  double alpha_;
  bool initialized_ = false;
  double c_ = 1.0;
  double s_ = 0.0;
  // exact output for passthrough and first-sample cases
  double last_deg_ = 0.0;
};

/// (c, s) <- normalize((1 - alpha) (c, s) + alpha (cos h, sin h)). The first
/// sample initializes the state to h; alpha == 1 passes input through exactly.
std::pair<FilterState, Azimuth> filter_heading(FilterState state, Azimuth new_heading);

/// Signed turn from `current` to `target` in (-180, 180], clockwise positive.
double circular_diff(Azimuth target, Azimuth current);

enum class Guidance { Aligned, TurnLeft, TurnRight };

std::string_view to_string(Guidance g);

inline constexpr double kDefaultGuidanceThresholdDeg = 2.0;

Guidance guidance(double deviation_deg, double threshold_deg = kDefaultGuidanceThresholdDeg);

struct QiblaPointerState {
  double t_ms = 0.0;
  Azimuth raw_magnetic_heading;  // before filtering
  Azimuth magnetic_heading;      // filtered
  Azimuth true_heading;
  Azimuth qibla;
  double deviation_deg = 0.0;
  Guidance guidance = Guidance::Aligned;
  bool calibrated = false;
  // Out-of-band accelerometer: filter held, headings repeat the last state.
  bool dynamic = false;
};

struct ProcessResult {
  FilterState filter;
  QiblaPointerState pointer;
};

/// One pipeline step: tilt compensation, filtering, declination, qibla,
/// deviation and guidance. A dynamic sample leaves the filter untouched and
/// re-emits its last heading flagged `dynamic`; if the filter has never seen
/// a sample, DynamicSample is thrown instead.
ProcessResult process(const SensorSample& sample, const GeoCoordinate& user,
                      const CalibrationState& cal, const FilterState& filter, Declination decl,
                      double threshold_deg = kDefaultGuidanceThresholdDeg);

struct PipelineConfig {
  GeoCoordinate user;
  Declination declination;
  double alpha = kDefaultFilterAlpha;
  double threshold_deg = kDefaultGuidanceThresholdDeg;
  // Samples with t_ms <= this form the calibration sweep; the whole trace
  // is used when unset.
  std::optional<double> calibration_end_ms;
};

struct PipelineRun {
  CalibrationState calibration;
  std::vector<QiblaPointerState> states;
  std::size_t skipped_leading_dynamic = 0;
};

/// Calibrate on the leading sweep, then process every sample in order.
PipelineRun run_pipeline(std::span<const SensorSample> samples, const PipelineConfig& config);

}  // namespace qibla
