#include "qibla/simulator.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "qibla/error.hpp"

namespace qibla {

namespace {

[[noreturn]] void scenario_error(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::ScenarioError, field + ": " + what);
}

void check_knots(const std::vector<Knot>& knots, const char* field, bool required) {
  if (knots.empty()) {
    if (required) scenario_error(field, "at least one knot is required");
    return;
  }
  for (std::size_t i = 0; i < knots.size(); ++i) {
    if (!std::isfinite(knots[i].t_ms) || !std::isfinite(knots[i].value_deg)) {
      scenario_error(field, "knots must be finite");
    }
    if (i > 0 && !(knots[i].t_ms > knots[i - 1].t_ms)) {
      scenario_error(field, "knot times must be strictly increasing");
    }
  }
}

double signed_arc(double from_deg, double to_deg) {
  double d = std::fmod(to_deg - from_deg, 360.0);
  if (d > 180.0) d -= 360.0;
  if (d <= -180.0) d += 360.0;
  return d;
}

// Index of the last knot with t <= t_ms, or npos when t_ms precedes all.
std::size_t bracket(std::span<const Knot> knots, double t_ms) {
  const auto it = std::upper_bound(knots.begin(), knots.end(), t_ms,
                                   [](double t, const Knot& k) { return t < k.t_ms; });
  return it == knots.begin() ? std::size_t(-1) : static_cast<std::size_t>(it - knots.begin() - 1);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& field, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    scenario_error(field, "expected a number, got '" + t + "'");
  }
  return v;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(text);
  while (std::getline(in, part, sep)) parts.push_back(part);
  return parts;
}

std::vector<Knot> parse_knots(const std::string& field, const std::string& text) {
  std::vector<Knot> knots;
  if (text.find(':') == std::string::npos) {
    knots.push_back({0.0, parse_number(field, text)});
    return knots;
  }
  for (const auto& item : split(text, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) scenario_error(field, "knot '" + trim(item) + "' lacks ':'");
    knots.push_back(
        {parse_number(field, item.substr(0, colon)), parse_number(field, item.substr(colon + 1))});
  }
  return knots;
}

}  // namespace

void Scenario::validate() const {
  if (!(duration_ms > 0.0) || !std::isfinite(duration_ms)) {
    scenario_error("duration_ms", "must be positive");
  }
  if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) {
    scenario_error("sample_rate_hz", "must be positive");
  }
  check_knots(heading, "heading_deg", true);
  check_knots(pitch, "pitch_deg", false);
  check_knots(roll, "roll_deg", false);
  for (const auto& k : pitch) {
    if (std::abs(k.value_deg) >= 90.0) scenario_error("pitch_deg", "must lie in (-90, 90)");
  }
  if (!(horizontal_intensity_ut > 0.0) || !std::isfinite(horizontal_intensity_ut)) {
    scenario_error("horizontal_intensity_ut", "must be positive");
  }
  if (!(std::abs(inclination_deg) < 90.0)) {
    scenario_error("inclination_deg", "must lie in (-90, 90)");
  }
  if (!std::isfinite(declination_deg) || std::abs(declination_deg) > 90.0) {
    scenario_error("declination_deg", "must lie in [-90, 90]");
  }
  if (!hard_iron.allFinite()) scenario_error("hard_iron_ut", "must be finite");
  if (!(noise_sigma_mag_ut >= 0.0) || !std::isfinite(noise_sigma_mag_ut)) {
    scenario_error("noise_sigma_mag_ut", "must be nonnegative");
  }
  if (!(noise_sigma_accel_ms2 >= 0.0) || !std::isfinite(noise_sigma_accel_ms2)) {
    scenario_error("noise_sigma_accel_ms2", "must be nonnegative");
  }
  if (calibration_end_ms && !std::isfinite(*calibration_end_ms)) {
    scenario_error("calibration_end_ms", "must be finite");
  }
}

std::size_t Scenario::sample_count() const {
  return static_cast<std::size_t>(std::llround(duration_ms * sample_rate_hz / 1000.0));
}

Scenario parse_scenario(std::istream& in) {
  std::map<std::string, std::string> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ScenarioError,
                  "line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    if (!entries.emplace(key, trim(line.substr(eq + 1))).second) {
      scenario_error(key, "given twice");
    }
  }

  auto take = [&](const std::string& key) -> std::optional<std::string> {
    const auto it = entries.find(key);
    if (it == entries.end()) return std::nullopt;
    std::string v = it->second;
    entries.erase(it);
    return v;
  };
  auto require = [&](const std::string& key) {
    auto v = take(key);
    if (!v) scenario_error(key, "missing");
    return *v;
  };

  const std::string version = require("scenario_version");
  if (version != "1") scenario_error("scenario_version", "unsupported version " + version);

  Scenario s;
  s.duration_ms = parse_number("duration_ms", require("duration_ms"));
  s.sample_rate_hz = parse_number("sample_rate_hz", require("sample_rate_hz"));
  s.heading = parse_knots("heading_deg", require("heading_deg"));
  if (auto v = take("pitch_deg")) s.pitch = parse_knots("pitch_deg", *v);
  if (auto v = take("roll_deg")) s.roll = parse_knots("roll_deg", *v);
  s.horizontal_intensity_ut =
      parse_number("horizontal_intensity_ut", require("horizontal_intensity_ut"));
  s.inclination_deg = parse_number("inclination_deg", require("inclination_deg"));
  s.declination_deg = parse_number("declination_deg", require("declination_deg"));
  if (auto v = take("hard_iron_ut")) {
    const auto parts = split(*v, ',');
    if (parts.size() != 3) scenario_error("hard_iron_ut", "expected three comma-separated values");
    for (int i = 0; i < 3; ++i) s.hard_iron[i] = parse_number("hard_iron_ut", parts[i]);
  }
  if (auto v = take("noise_sigma_mag_ut"))
    s.noise_sigma_mag_ut = parse_number("noise_sigma_mag_ut", *v);
  if (auto v = take("noise_sigma_accel_ms2")) {
    s.noise_sigma_accel_ms2 = parse_number("noise_sigma_accel_ms2", *v);
  }
  {
    const std::string seed = require("rng_seed");
    std::uint64_t value = 0;
    const auto [ptr, ec] = std::from_chars(seed.data(), seed.data() + seed.size(), value);
    if (ec != std::errc() || ptr != seed.data() + seed.size()) {
      scenario_error("rng_seed", "expected an unsigned 64-bit integer");
    }
    s.rng_seed = value;
  }
  if (auto v = take("calibration_end_ms")) {
    s.calibration_end_ms = parse_number("calibration_end_ms", *v);
  }
  if (!entries.empty()) scenario_error(entries.begin()->first, "unknown key");
  s.validate();
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open scenario " + path.string());
  return parse_scenario(in);
}

Eigen::Vector3d world_field(double horizontal_intensity_ut, double inclination_deg,
                            double declination_deg) {
  const double d = declination_deg * kDegToRad;
  const double i = inclination_deg * kDegToRad;
  return {horizontal_intensity_ut * std::cos(d), horizontal_intensity_ut * std::sin(d),
          horizontal_intensity_ut * std::tan(i)};
}

Eigen::Matrix3d body_to_world(double yaw_deg, double pitch_deg, double roll_deg) {
  const double y = yaw_deg * kDegToRad;
  const double p = pitch_deg * kDegToRad;
  const double r = roll_deg * kDegToRad;
  Eigen::Matrix3d rz;
  rz << std::cos(y), -std::sin(y), 0.0, std::sin(y), std::cos(y), 0.0, 0.0, 0.0, 1.0;
  Eigen::Matrix3d ry;
  ry << std::cos(p), 0.0, std::sin(p), 0.0, 1.0, 0.0, -std::sin(p), 0.0, std::cos(p);
  Eigen::Matrix3d rx;
  rx << 1.0, 0.0, 0.0, 0.0, std::cos(r), -std::sin(r), 0.0, std::sin(r), std::cos(r);
  return rz * ry * rx;
}

double heading_at(std::span<const Knot> knots, double t_ms) {
  if (knots.empty()) return 0.0;
  const std::size_t i = bracket(knots, t_ms);
  if (i == std::size_t(-1)) return Azimuth(knots.front().value_deg).deg();
  if (i + 1 >= knots.size()) return Azimuth(knots.back().value_deg).deg();
  const Knot& a = knots[i];
  const Knot& b = knots[i + 1];
  const double f = (t_ms - a.t_ms) / (b.t_ms - a.t_ms);
  return Azimuth(a.value_deg + f * signed_arc(a.value_deg, b.value_deg)).deg();
}

double linear_at(std::span<const Knot> knots, double t_ms) {
  if (knots.empty()) return 0.0;
  const std::size_t i = bracket(knots, t_ms);
  if (i == std::size_t(-1)) return knots.front().value_deg;
  if (i + 1 >= knots.size()) return knots.back().value_deg;
  const Knot& a = knots[i];
  const Knot& b = knots[i + 1];
  const double f = (t_ms - a.t_ms) / (b.t_ms - a.t_ms);
  return a.value_deg + f * (b.value_deg - a.value_deg);
}

double GaussianSource::uniform_open() {
  // 53 random bits mapped onto (0, 1]
  return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
}

double GaussianSource::next() {
  if (spare_) {
    const double z = *spare_;
    spare_.reset();
    return z;
  }
  const double u1 = uniform_open();
  const double u2 = uniform_open();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * kPi * u2;
  spare_ = radius * std::sin(angle);
  return radius * std::cos(angle);
}

SimulatedTrace generate(const Scenario& scenario) {
  scenario.validate();
  const std::size_t n = scenario.sample_count();
  const Eigen::Vector3d field = world_field(scenario.horizontal_intensity_ut,
                                            scenario.inclination_deg, scenario.declination_deg);
  const Eigen::Vector3d specific_force(0.0, 0.0, -kGravity);

  GaussianSource noise(scenario.rng_seed);
  SimulatedTrace trace;
  trace.calibration_end_ms = scenario.calibration_end_ms;
  trace.samples.reserve(n);
  trace.truth.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * 1000.0 / scenario.sample_rate_hz;
    const double yaw = heading_at(scenario.heading, t);
    const double pitch = linear_at(scenario.pitch, t);
    const double roll = linear_at(scenario.roll, t);
    const Eigen::Matrix3d world_to_body = body_to_world(yaw, pitch, roll).transpose();

    SensorSample s;
    s.t_ms = t;
    s.accel = world_to_body * specific_force;
    s.mag = world_to_body * field + scenario.hard_iron;
    for (int k = 0; k < 3; ++k) s.accel[k] += scenario.noise_sigma_accel_ms2 * noise.next();
    for (int k = 0; k < 3; ++k) s.mag[k] += scenario.noise_sigma_mag_ut * noise.next();
    trace.samples.push_back(s);
    trace.truth.push_back({t, yaw, pitch, roll});
  }
  return trace;
}

double truth_heading_at(std::span<const TruthRecord> truth, double t_ms) {
  if (truth.empty() || !(t_ms >= truth.front().t_ms) || !(t_ms <= truth.back().t_ms)) {
    throw Error(ErrorCode::OutOfSpan, "time " + std::to_string(t_ms) + " ms outside the trace");
  }
  const auto it = std::upper_bound(truth.begin(), truth.end(), t_ms,
                                   [](double t, const TruthRecord& r) { return t < r.t_ms; });
  const auto i = static_cast<std::size_t>(it - truth.begin() - 1);
  const TruthRecord& a = truth[i];
  if (a.t_ms == t_ms || i + 1 >= truth.size()) return a.true_heading_deg;
  const TruthRecord& b = truth[i + 1];
  const double f = (t_ms - a.t_ms) / (b.t_ms - a.t_ms);
  return Azimuth(a.true_heading_deg + f * signed_arc(a.true_heading_deg, b.true_heading_deg)).deg();
}

}  // namespace qibla
