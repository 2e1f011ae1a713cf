#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qibla/geodesy.hpp"
#include "qibla/sensor_pipeline.hpp"
#include "qibla/simulator.hpp"

namespace qibla {

struct CityRecord {
  std::string name;
  GeoCoordinate location;
};

// CSV with the mandatory header `name,latitude_deg,longitude_deg`. Names are
// unique ignoring ASCII case.
std::vector<CityRecord> parse_cities(std::istream& in);
std::vector<CityRecord> load_cities(const std::filesystem::path& path);

// Case-insensitive exact match; throws UnknownCity.
const CityRecord& find_city(std::span<const CityRecord> cities, std::string_view name);

// Trace files are JSON Lines. The first line is the header
//   {"format":"qibla-trace","version":1,"calibration_end_ms":<number|null>}
// followed by records tagged "sample" (t_ms, ax, ay, az, mx, my, mz) and,
// optionally, "truth" (t_ms, heading_deg, pitch_deg, roll_deg). Sample
// timestamps must be nondecreasing.
inline constexpr std::string_view kTraceFormat = "qibla-trace";
inline constexpr int kTraceVersion = 1;

struct TraceFile {
  std::vector<SensorSample> samples;
  std::vector<TruthRecord> truth;
  std::optional<double> calibration_end_ms;

  static TraceFile from(const SimulatedTrace& sim);

  // Samples up to calibration_end_ms, or the whole trace when unmarked.
  std::span<const SensorSample> calibration_sweep() const;
};

TraceFile parse_trace(std::istream& in);
TraceFile read_trace(const std::filesystem::path& path);
void write_trace(const TraceFile& trace, std::ostream& out);
void write_trace(const TraceFile& trace, const std::filesystem::path& path);

enum class ReportFormat { Json, Text };

inline constexpr std::string_view kReportFormat = "qibla-report";
inline constexpr int kReportVersion = 1;
inline constexpr double kDefaultSteadyWindowMs = 10000.0;

struct ReportMeta {
  std::string command = "pipeline";
  GeoCoordinate user{0.0, 0.0};
  std::optional<double> declination_deg;
  double alpha = kDefaultFilterAlpha;
  double threshold_deg = kDefaultGuidanceThresholdDeg;
  double steady_window_ms = kDefaultSteadyWindowMs;
  std::optional<CalibrationState> calibration;
  std::optional<std::string> generated_at;
};

struct ReportSummary {
  std::size_t sample_count = 0;
  std::size_t dynamic_count = 0;
  double mean_abs_deviation_deg = 0.0;
  double max_abs_deviation_deg = 0.0;
  // Present only when truth was supplied. Errors compare the estimated true
  // heading (and the deviation derived from it) with the simulator truth;
  // steady-state values average over the final steady_window_ms.
  std::optional<double> mean_heading_error_deg;
  std::optional<double> max_heading_error_deg;
  std::optional<double> mean_deviation_error_deg;
  std::optional<double> steady_state_error_deg;
  std::optional<double> steady_state_deviation_error_deg;
};

ReportSummary summarize(std::span<const QiblaPointerState> states,
                        std::span<const TruthRecord> truth, double steady_window_ms);

struct Report {
  ReportMeta meta;
  std::vector<QiblaPointerState> samples;
  // matched truth heading per sample, when truth was supplied
  std::vector<double> truth_heading_deg;
  ReportSummary summary;
};

// Throws EmptyReport for an empty stream.
Report make_report(ReportMeta meta, std::span<const QiblaPointerState> states,
                   std::span<const TruthRecord> truth = {});

void write_report(const Report& report, std::ostream& out, ReportFormat format);
void write_report(const Report& report, const std::filesystem::path& path, ReportFormat format);

// Parses the JSON form back; numbers round-trip exactly.
Report parse_report(std::istream& in);
Report read_report(const std::filesystem::path& path);

// Shortest decimal string that parses back to the same double.
std::string format_double(double v);

}  // namespace qibla
