#include "qibla/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <ctime>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "qibla/dataio.hpp"
#include "qibla/declination.hpp"
#include "qibla/error.hpp"
#include "qibla/geodesy.hpp"
#include "qibla/report_json.hpp"
#include "qibla/sensor_pipeline.hpp"
#include "qibla/simulator.hpp"

namespace qibla::cli {

namespace {

using json = nlohmann::ordered_json;

constexpr const char* kNoDeclinationWarning = "none, magnetic=true assumed";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InsufficientData:
    case ErrorCode::DegenerateSweep:
      return kExitInsufficient;
    case ErrorCode::InvalidCoordinate:
    case ErrorCode::InvalidAngle:
    case ErrorCode::InvalidArgument:
      return kExitUsage;
    default:
      return kExitDomain;
  }
}

std::string fixed2(double v) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2) << v;
  return out.str();
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

struct OutputFlags {
  std::string format = "text";
  bool timestamps = false;

  bool structured() const { return format == "json"; }
};

void add_output_flags(CLI::App* cmd, OutputFlags& flags) {
  cmd->add_option("--format", flags.format, "Output format")
      ->check(CLI::IsMember({"text", "json"}));
  cmd->add_flag("--timestamps", flags.timestamps, "Include generation time in structured output");
}

json meta_for(const std::string& command, const OutputFlags& flags) {
  json meta{{"command", command}};
  if (flags.timestamps) meta["generated_at"] = utc_now();
  return meta;
}

struct LocationFlags {
  std::optional<double> lat;
  std::optional<double> lon;
  std::string city;
  std::string cities;
};

void add_location_flags(CLI::App* cmd, LocationFlags& flags) {
  auto* lat = cmd->add_option("--lat", flags.lat, "Latitude in degrees");
  auto* lon = cmd->add_option("--lon", flags.lon, "Longitude in degrees");
  auto* city = cmd->add_option("--city", flags.city, "City name from --cities");
  cmd->add_option("--cities", flags.cities, "City CSV file");
  city->excludes(lat)->excludes(lon);
}

struct ResolvedLocation {
  GeoCoordinate where;
  std::optional<std::string> city;
};

ResolvedLocation resolve_location(const LocationFlags& flags) {
  if (!flags.city.empty()) {
    if (flags.cities.empty()) throw UsageError("--city requires --cities FILE");
    const auto cities = load_cities(flags.cities);
    const auto& rec = find_city(cities, flags.city);
    return {rec.location, rec.name};
  }
  if (!flags.lat || !flags.lon) throw UsageError("give both --lat and --lon, or --city");
  return {GeoCoordinate(*flags.lat, *flags.lon), std::nullopt};
}

struct DeclinationFlags {
  std::optional<double> value;
  std::string grid;
};

void add_declination_flags(CLI::App* cmd, DeclinationFlags& flags) {
  auto* value = cmd->add_option("--decl", flags.value, "Declination in degrees, east positive");
  auto* grid = cmd->add_option("--decl-grid", flags.grid, "Declination grid file");
  value->excludes(grid);
}

std::optional<Declination> resolve_declination(const DeclinationFlags& flags,
                                               const GeoCoordinate& where) {
  if (flags.value) return Declination(*flags.value);
  if (!flags.grid.empty()) return declination_at(DeclinationGrid::load(flags.grid), where);
  return std::nullopt;
}

// ---- qibla ------------------------------------------------------------------

struct QiblaCmd {
  LocationFlags location;
  DeclinationFlags declination;
  OutputFlags output;

  void run(std::ostream& out) const {
    const auto loc = resolve_location(location);
    const auto decl = resolve_declination(declination, loc.where);
    const Azimuth azimuth = qibla_azimuth(loc.where);
    const Distance distance = haversine_distance(loc.where, kaaba());
    std::optional<Azimuth> magnetic;
    if (decl) magnetic = Azimuth(azimuth.deg() - decl->deg());

    if (output.structured()) {
      json result{{"location", to_json(loc.where)},
                  {"city", loc.city ? json(*loc.city) : json(nullptr)},
                  {"qibla_azimuth_deg", azimuth.deg()},
                  {"distance_km", distance.km()},
                  {"distance_method", "haversine"},
                  {"declination_deg", decl ? json(decl->deg()) : json(nullptr)},
                  {"magnetic_qibla_deg", magnetic ? json(magnetic->deg()) : json(nullptr)}};
      if (!decl) result["warning"] = kNoDeclinationWarning;
      json doc = report_envelope(meta_for("qibla", output));
      doc["result"] = std::move(result);
      out << doc.dump(2) << '\n';
      return;
    }
    out << "location: " << fixed2(loc.where.latitude_deg()) << ", "
        << fixed2(loc.where.longitude_deg());
    if (loc.city) out << " (" << *loc.city << ")";
    out << '\n';
    out << "qibla azimuth: " << fixed2(azimuth.deg()) << " deg from true north\n";
    out << "distance to Kaaba: " << fixed2(distance.km()) << " km (haversine)\n";
    if (decl) {
      out << "declination: " << fixed2(decl->deg()) << " deg\n";
      out << "magnetic qibla: " << fixed2(magnetic->deg()) << " deg\n";
    } else {
      out << "declination: " << kNoDeclinationWarning << '\n';
    }
  }
};

// ---- distance ---------------------------------------------------------------

struct DistanceCmd {
  double from_lat = 0.0;
  double from_lon = 0.0;
  double to_lat = 0.0;
  double to_lon = 0.0;
  std::string method = "haversine";
  double radius_km = 6371.0;
  OutputFlags output;

  void run(std::ostream& out) const {
    const GeoCoordinate a(from_lat, from_lon);
    const GeoCoordinate b(to_lat, to_lon);
    const EarthModel model(radius_km);
    const Distance d =
        method == "slc" ? slc_distance(a, b, model) : haversine_distance(a, b, model);
    if (output.structured()) {
      json doc = report_envelope(meta_for("distance", output));
      doc["result"] = {{"from", to_json(a)},
                       {"to", to_json(b)},
                       {"method", method},
                       {"radius_km", model.radius_km()},
                       {"distance_km", d.km()}};
      out << doc.dump(2) << '\n';
      return;
    }
    out << "distance: " << fixed2(d.km()) << " km (" << method << ")\n";
  }
};

// ---- bearing ----------------------------------------------------------------

struct BearingCmd {
  double from_lat = 0.0;
  double from_lon = 0.0;
  double to_lat = 0.0;
  double to_lon = 0.0;
  OutputFlags output;

  void run(std::ostream& out) const {
    const GeoCoordinate a(from_lat, from_lon);
    const GeoCoordinate b(to_lat, to_lon);
    const Azimuth bearing = initial_bearing(a, b);
    if (output.structured()) {
      json doc = report_envelope(meta_for("bearing", output));
      doc["result"] = {
          {"from", to_json(a)}, {"to", to_json(b)}, {"initial_bearing_deg", bearing.deg()}};
      out << doc.dump(2) << '\n';
      return;
    }
    out << "initial bearing: " << fixed2(bearing.deg()) << " deg from true north\n";
  }
};

// ---- simulate ---------------------------------------------------------------

struct SimulateCmd {
  std::string scenario;
  std::string out_path;
  OutputFlags output;

  void run(std::ostream& out) const {
    const Scenario sc = load_scenario(scenario);
    const SimulatedTrace sim = generate(sc);
    write_trace(TraceFile::from(sim), std::filesystem::path(out_path));
    if (output.structured()) {
      json doc = report_envelope(meta_for("simulate", output));
      doc["result"] = {{"sample_count", sim.samples.size()},
                       {"duration_ms", sc.duration_ms},
                       {"sample_rate_hz", sc.sample_rate_hz},
                       {"rng_seed", sc.rng_seed}};
      out << doc.dump(2) << '\n';
      return;
    }
    out << "samples: " << sim.samples.size() << '\n';
  }
};

// ---- calibrate --------------------------------------------------------------

struct CalibrateCmd {
  std::string trace;
  OutputFlags output;

  void run(std::ostream& out) const {
    const TraceFile tf = read_trace(trace);
    const CalibrationState cal = calibrate(tf.calibration_sweep());
    if (output.structured()) {
      json doc = report_envelope(meta_for("calibrate", output));
      doc["result"] = to_json(cal);
      out << doc.dump(2) << '\n';
      return;
    }
    out << "hard iron: " << fixed2(cal.hard_iron.x()) << ' ' << fixed2(cal.hard_iron.y()) << ' '
        << fixed2(cal.hard_iron.z()) << " uT\n";
    out << "samples used: " << cal.samples_used << '\n';
    out << "coverage: " << fixed2(cal.coverage_deg) << " deg\n";
    out << "converged: " << (cal.converged ? "yes" : "no") << '\n';
  }
};

// ---- pipeline ---------------------------------------------------------------

struct PipelineCmd {
  std::string trace;
  LocationFlags location;
  DeclinationFlags declination;
  double alpha = kDefaultFilterAlpha;
  double threshold = kDefaultGuidanceThresholdDeg;
  double steady_window_ms = kDefaultSteadyWindowMs;
  std::string out_path;
  std::string report_format = "json";
  OutputFlags output;

  void run(std::ostream& out, std::ostream& err) const {
    const auto loc = resolve_location(location);
    const auto decl = resolve_declination(declination, loc.where);
    // fail on a degenerate location before touching the trace
    qibla_azimuth(loc.where);
    if (!(threshold > 0.0)) throw UsageError("--threshold must be positive");
    if (!(steady_window_ms >= 0.0)) throw UsageError("--steady-window-ms must be nonnegative");
    const TraceFile tf = read_trace(trace);

    PipelineConfig config{loc.where, decl.value_or(Declination(0.0)), alpha, threshold,
                          tf.calibration_end_ms};
    const PipelineRun run = run_pipeline(tf.samples, config);

    ReportMeta meta;
    meta.command = "pipeline";
    meta.user = loc.where;
    if (decl) meta.declination_deg = decl->deg();
    meta.alpha = alpha;
    meta.threshold_deg = threshold;
    meta.steady_window_ms = steady_window_ms;
    meta.calibration = run.calibration;
    if (output.timestamps) meta.generated_at = utc_now();
    const Report report = make_report(meta, run.states, tf.truth);
    write_report(report, std::filesystem::path(out_path),
                 report_format == "text" ? ReportFormat::Text : ReportFormat::Json);

    if (!decl) err << "warning: declination " << kNoDeclinationWarning << '\n';
    if (output.structured()) {
      json m = meta_for("pipeline", output);
      m["calibration"] = to_json(run.calibration);
      json doc = report_envelope(std::move(m));
      doc["summary"] = to_json(report.summary);
      out << doc.dump(2) << '\n';
      return;
    }
    const auto& s = report.summary;
    out << "calibration: " << (run.calibration.converged ? "converged" : "NOT converged") << ", "
        << run.calibration.samples_used << " samples, coverage "
        << fixed2(run.calibration.coverage_deg) << " deg\n";
    out << "samples: " << s.sample_count << " (" << s.dynamic_count << " dynamic)\n";
    const auto& last = report.samples.back();
    out << "final heading: " << fixed2(last.true_heading.deg()) << " deg, qibla "
        << fixed2(last.qibla.deg()) << " deg, deviation " << fixed2(last.deviation_deg) << " deg, "
        << to_string(last.guidance) << '\n';
    if (s.steady_state_error_deg) {
      out << "steady-state heading error: " << fixed2(*s.steady_state_error_deg) << " deg\n";
    }
  }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Qibla bearing, great-circle distance and compass pipeline tool", "qibla"};
  app.require_subcommand(1);

  QiblaCmd qibla_cmd;
  auto* q = app.add_subcommand("qibla", "Qibla azimuth and distance to the Kaaba");
  add_location_flags(q, qibla_cmd.location);
  add_declination_flags(q, qibla_cmd.declination);
  add_output_flags(q, qibla_cmd.output);

  DistanceCmd distance_cmd;
  auto* d = app.add_subcommand("distance", "Great-circle distance between two points");
  d->add_option("--from-lat", distance_cmd.from_lat, "Start latitude in degrees")->required();
  d->add_option("--from-lon", distance_cmd.from_lon, "Start longitude in degrees")->required();
  d->add_option("--to-lat", distance_cmd.to_lat, "End latitude in degrees")->required();
  d->add_option("--to-lon", distance_cmd.to_lon, "End longitude in degrees")->required();
  d->add_option("--method", distance_cmd.method, "haversine (default) or slc (law of cosines)")
      ->check(CLI::IsMember({"haversine", "slc"}));
  d->add_option("--radius-km", distance_cmd.radius_km, "Sphere radius");
  add_output_flags(d, distance_cmd.output);

  BearingCmd bearing_cmd;
  auto* b = app.add_subcommand("bearing", "Initial great-circle bearing between two points");
  b->add_option("--from-lat", bearing_cmd.from_lat, "Start latitude in degrees")->required();
  b->add_option("--from-lon", bearing_cmd.from_lon, "Start longitude in degrees")->required();
  b->add_option("--to-lat", bearing_cmd.to_lat, "End latitude in degrees")->required();
  b->add_option("--to-lon", bearing_cmd.to_lon, "End longitude in degrees")->required();
  add_output_flags(b, bearing_cmd.output);

  SimulateCmd simulate_cmd;
  auto* s = app.add_subcommand("simulate", "Generate a synthetic sensor trace");
  s->add_option("--scenario", simulate_cmd.scenario, "Scenario file")->required();
  s->add_option("--out", simulate_cmd.out_path, "Trace file to write")->required();
  add_output_flags(s, simulate_cmd.output);

  PipelineCmd pipeline_cmd;
  auto* p = app.add_subcommand("pipeline", "Run calibration and the compass pipeline on a trace");
  p->add_option("--trace", pipeline_cmd.trace, "Trace file (JSON Lines)")->required();
  add_location_flags(p, pipeline_cmd.location);
  add_declination_flags(p, pipeline_cmd.declination);
  p->add_option("--alpha", pipeline_cmd.alpha, "Heading filter smoothing factor in (0, 1]");
  p->add_option("--threshold", pipeline_cmd.threshold, "Alignment threshold in degrees");
  p->add_option("--steady-window-ms", pipeline_cmd.steady_window_ms,
                "Trailing window for steady-state error statistics");
  p->add_option("--out", pipeline_cmd.out_path, "Report file")->required();
  p->add_option("--report-format", pipeline_cmd.report_format, "Report file format")
      ->check(CLI::IsMember({"json", "text"}));
  add_output_flags(p, pipeline_cmd.output);

  CalibrateCmd calibrate_cmd;
  auto* c = app.add_subcommand("calibrate", "Estimate the hard-iron offset from a trace");
  c->add_option("--trace", calibrate_cmd.trace, "Trace file (JSON Lines)")->required();
  add_output_flags(c, calibrate_cmd.output);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (q->parsed()) qibla_cmd.run(out);
    if (d->parsed()) distance_cmd.run(out);
    if (b->parsed()) bearing_cmd.run(out);
    if (s->parsed()) simulate_cmd.run(out);
    if (p->parsed()) pipeline_cmd.run(out, err);
    if (c->parsed()) calibrate_cmd.run(out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  }
  return kExitOk;
}

}  // namespace qibla::cli
