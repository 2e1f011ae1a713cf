#include "qibla/sensor_pipeline.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "qibla/error.hpp"

namespace qibla {

bool is_finite(const SensorSample& sample) {
  return std::isfinite(sample.t_ms) && sample.accel.allFinite() && sample.mag.allFinite();
}

bool is_usable_for_tilt(const SensorSample& sample) {
  if (!is_finite(sample)) return false;
  const double g = sample.accel.norm();
  return g > 0.5 * kGravity && g < 1.5 * kGravity;
}

Attitude attitude_from_accel(const Eigen::Vector3d& f) {
  const double roll = std::atan2(-f.y(), -f.z());
  const double pitch = std::atan2(f.x(), std::hypot(f.y(), f.z()));
  return {pitch * kRadToDeg, roll * kRadToDeg};
}

Azimuth tilt_compensated_heading(const SensorSample& sample, const Eigen::Vector3d& hard_iron) {
  if (!is_usable_for_tilt(sample)) {
    throw Error(ErrorCode::DynamicSample, "accelerometer magnitude " +
                                              std::to_string(sample.accel.norm()) +
                                              " m/s^2 outside (0.5 g, 1.5 g)");
  }
  const Eigen::Vector3d& f = sample.accel;
  const double roll = std::atan2(-f.y(), -f.z());
  const double pitch = std::atan2(f.x(), std::hypot(f.y(), f.z()));
  const double cr = std::cos(roll);
  const double sr = std::sin(roll);
  const double cp = std::cos(pitch);
  const double sp = std::sin(pitch);

  const Eigen::Vector3d m = sample.mag - hard_iron;
  // Ry(pitch) * Rx(roll) * m
  const double level_x = cp * m.x() + sp * (sr * m.y() + cr * m.z());
  const double level_y = cr * m.y() - sr * m.z();
  return Azimuth(std::atan2(-level_y, level_x) * kRadToDeg);
}

Azimuth tilt_compensated_heading(const SensorSample& sample, const CalibrationState& cal) {
  return tilt_compensated_heading(sample, cal.hard_iron);
}

namespace {

double heading_coverage(std::span<const SensorSample> usable, const Eigen::Vector3d& hard_iron) {
  if (usable.size() < 2) return 0.0;
  std::vector<double> headings;
  headings.reserve(usable.size());
  for (const auto& s : usable) headings.push_back(tilt_compensated_heading(s, hard_iron).deg());
  std::sort(headings.begin(), headings.end());
  double max_gap = headings.front() + 360.0 - headings.back();
  for (std::size_t i = 1; i < headings.size(); ++i) {
    max_gap = std::max(max_gap, headings[i] - headings[i - 1]);
  }
  return 360.0 - max_gap;
}

}  // namespace

CalibrationState calibrate(std::span<const SensorSample> samples) {
  if (samples.empty()) {
    throw Error(ErrorCode::InsufficientData, "calibration needs a nonempty sweep");
  }
  std::vector<SensorSample> usable;
  usable.reserve(samples.size());
  std::copy_if(samples.begin(), samples.end(), std::back_inserter(usable), is_usable_for_tilt);
  if (usable.size() < kMinCalibrationSamples) {
    throw Error(ErrorCode::InsufficientData, std::to_string(usable.size()) +
                                                 " usable samples, need at least " +
                                                 std::to_string(kMinCalibrationSamples));
  }

  // Fit on mean-centred points: |p|^2 = 2 c.p + k with p = m - mean.
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& s : usable) mean += s.mag;
  mean /= static_cast<double>(usable.size());

  Eigen::Matrix4d normal = Eigen::Matrix4d::Zero();
  Eigen::Vector4d rhs = Eigen::Vector4d::Zero();
  for (const auto& s : usable) {
    const Eigen::Vector3d p = s.mag - mean;
    const Eigen::Vector4d row(p.x(), p.y(), p.z(), 1.0);
    normal.noalias() += row * row.transpose();
    rhs += row * p.squaredNorm();
  }

  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(normal, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > kMaxNormalConditionNumber) {
    throw Error(ErrorCode::DegenerateSweep,
                "magnetometer point cloud does not constrain a sphere; rotate the device "
                "about more than one axis");
  }
  const Eigen::Vector4d solution = normal.ldlt().solve(rhs);

  CalibrationState state;
  state.hard_iron = mean + 0.5 * solution.head<3>();
  state.samples_used = usable.size();
  state.coverage_deg = heading_coverage(usable, state.hard_iron);
  state.converged =
      state.samples_used >= kConvergedSampleCount && state.coverage_deg >= kConvergedCoverageDeg;
  return state;
}

FilterState::FilterState(double alpha) : alpha_(alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "filter alpha must lie in (0, 1]");
  }
}

Azimuth FilterState::heading() const {
  if (!initialized_) {
    throw Error(ErrorCode::InvalidArgument, "filter has not seen a sample yet");
  }
  return Azimuth(last_deg_);
}

std::pair<FilterState, Azimuth> filter_heading(FilterState state, Azimuth new_heading) {
  const double h = new_heading.deg() * kDegToRad;
  const double ch = std::cos(h);
  const double sh = std::sin(h);
  if (!state.initialized_ || state.alpha_ == 1.0) {
    state.initialized_ = true;
    state.c_ = ch;
    state.s_ = sh;
    state.last_deg_ = new_heading.deg();
    return {state, new_heading};
  }
  double c = (1.0 - state.alpha_) * state.c_ + state.alpha_ * ch;
  double s = (1.0 - state.alpha_) * state.s_ + state.alpha_ * sh;
  const double norm = std::hypot(c, s);
  if (norm > 0.0) {
    c /= norm;
    s /= norm;
  } else {
    // exact opposition with alpha = 0.5; keep the previous direction
    c = state.c_;
    s = state.s_;
  }
  state.c_ = c;
  state.s_ = s;
  const Azimuth out(std::atan2(s, c) * kRadToDeg);
  state.last_deg_ = out.deg();
  return {state, out};
}

double circular_diff(Azimuth target, Azimuth current) {
  const double d = Azimuth(target.deg() - current.deg()).deg();
  return d > 180.0 ? d - 360.0 : d;
}

std::string_view to_string(Guidance g) {
  switch (g) {
    case Guidance::Aligned:
      return "aligned";
    case Guidance::TurnLeft:
      return "turn_left";
    case Guidance::TurnRight:
      return "turn_right";
  }
  return "aligned";
}

Guidance guidance(double deviation_deg, double threshold_deg) {
  if (!(threshold_deg > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "guidance threshold must be positive");
  }
  if (deviation_deg > threshold_deg) return Guidance::TurnRight;
  if (deviation_deg < -threshold_deg) return Guidance::TurnLeft;
  return Guidance::Aligned;
}

ProcessResult process(const SensorSample& sample, const GeoCoordinate& user,
                      const CalibrationState& cal, const FilterState& filter, Declination decl,
                      double threshold_deg) {
  const Azimuth qibla = qibla_azimuth(user);

  ProcessResult result{filter, {}};
  QiblaPointerState& p = result.pointer;
  p.t_ms = sample.t_ms;
  p.qibla = qibla;
  p.calibrated = cal.converged;

  if (is_usable_for_tilt(sample)) {
    p.raw_magnetic_heading = tilt_compensated_heading(sample, cal);
    auto [next, filtered] = filter_heading(filter, p.raw_magnetic_heading);
    result.filter = next;
    p.magnetic_heading = filtered;
  } else {
    if (!filter.initialized()) {
      throw Error(ErrorCode::DynamicSample, "dynamic sample before the filter was initialized");
    }
    p.dynamic = true;
    p.raw_magnetic_heading = filter.heading();
    p.magnetic_heading = filter.heading();
  }
  p.true_heading = to_true_heading(p.magnetic_heading, decl);
  p.deviation_deg = circular_diff(qibla, p.true_heading);
  p.guidance = guidance(p.deviation_deg, threshold_deg);
  return result;
}

PipelineRun run_pipeline(std::span<const SensorSample> samples, const PipelineConfig& config) {
  PipelineRun run;
  std::span<const SensorSample> sweep = samples;
  if (config.calibration_end_ms) {
    const auto end = std::find_if(samples.begin(), samples.end(), [&](const SensorSample& s) {
      return s.t_ms > *config.calibration_end_ms;
    });
    sweep = samples.subspan(0, static_cast<std::size_t>(end - samples.begin()));
  }
  run.calibration = calibrate(sweep);

  FilterState filter(config.alpha);
  run.states.reserve(samples.size());
  for (const auto& sample : samples) {
    if (!filter.initialized() && !is_usable_for_tilt(sample)) {
      ++run.skipped_leading_dynamic;
      continue;
    }
    auto step = process(sample, config.user, run.calibration, filter, config.declination,
                        config.threshold_deg);
    filter = step.filter;
    run.states.push_back(step.pointer);
  }
  return run;
}

}  // namespace qibla
