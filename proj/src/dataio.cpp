#include "qibla/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unordered_set>

#include "qibla/error.hpp"
#include "qibla/report_json.hpp"

namespace qibla {

using json = nlohmann::ordered_json;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::optional<double> to_number(const std::string& text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

std::ifstream open_in(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorCode::IoError, std::string("cannot open ") + what + " " + path.string());
  return in;
}

double field(const json& record, const char* key, std::size_t line_no) {
  const auto it = record.find(key);
  if (it == record.end() || !it->is_number()) {
    throw Error(ErrorCode::ParseError, std::string("missing numeric field '") + key + "'", line_no);
  }
  return it->get<double>();
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_from(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<double>();
}

Guidance guidance_from(const std::string& s) {
  if (s == "aligned") return Guidance::Aligned;
  if (s == "turn_left") return Guidance::TurnLeft;
  if (s == "turn_right") return Guidance::TurnRight;
  throw Error(ErrorCode::ParseError, "unknown guidance '" + s + "'");
}

std::string fixed2(double v) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2) << v;
  return out.str();
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

// ---- cities -----------------------------------------------------------------

std::vector<CityRecord> parse_cities(std::istream& in) {
  std::vector<CityRecord> cities;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> cols;
    std::istringstream fields(line);
    for (std::string col; std::getline(fields, col, ',');) cols.push_back(trim(col));
    if (!line.empty() && line.back() == ',') cols.emplace_back();
    if (!header_seen) {
      if (cols != std::vector<std::string>{"name", "latitude_deg", "longitude_deg"}) {
        throw Error(ErrorCode::ParseError, "expected header 'name,latitude_deg,longitude_deg'",
                    line_no);
      }
      header_seen = true;
      continue;
    }
    if (cols.size() != 3) {
      throw Error(ErrorCode::ParseError, "expected 3 columns, found " + std::to_string(cols.size()),
                  line_no);
    }
    if (cols[0].empty()) throw Error(ErrorCode::ParseError, "empty city name", line_no);
    const auto lat = to_number(cols[1]);
    const auto lon = to_number(cols[2]);
    if (!lat || !lon) {
      throw Error(ErrorCode::ParseError, "coordinates of '" + cols[0] + "' are not numbers",
                  line_no);
    }
    std::optional<GeoCoordinate> where;
    try {
      where.emplace(*lat, *lon);
    } catch (const Error& e) {
      throw Error(ErrorCode::ParseError, "row '" + cols[0] + "': " + e.what(), line_no);
    }
    if (!seen.insert(lower(cols[0])).second) {
      throw Error(ErrorCode::DuplicateCity, "city '" + cols[0] + "' appears twice", line_no);
    }
    cities.push_back({cols[0], *where});
  }
  if (!header_seen) throw Error(ErrorCode::ParseError, "missing header", line_no + 1);
  return cities;
}

std::vector<CityRecord> load_cities(const std::filesystem::path& path) {
  auto in = open_in(path, "city file");
  return parse_cities(in);
}

const CityRecord& find_city(std::span<const CityRecord> cities, std::string_view name) {
  const std::string key = lower(name);
  for (const auto& c : cities) {
    if (lower(c.name) == key) return c;
  }
  throw Error(ErrorCode::UnknownCity, "no city named '" + std::string(name) + "'");
}

// ---- traces -----------------------------------------------------------------

TraceFile TraceFile::from(const SimulatedTrace& sim) {
  return {sim.samples, sim.truth, sim.calibration_end_ms};
}

std::span<const SensorSample> TraceFile::calibration_sweep() const {
  std::span<const SensorSample> all(samples);
  if (!calibration_end_ms) return all;
  const auto end = std::find_if(all.begin(), all.end(), [this](const SensorSample& s) {
    return s.t_ms > *calibration_end_ms;
  });
  return all.first(static_cast<std::size_t>(end - all.begin()));
}

TraceFile parse_trace(std::istream& in) {
  TraceFile trace;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::ParseError, std::string("malformed record: ") + e.what(), line_no);
    }
    if (!record.is_object()) throw Error(ErrorCode::ParseError, "record is not an object", line_no);

    if (!header_seen) {
      if (record.value("format", "") != kTraceFormat) {
        throw Error(ErrorCode::ParseError, "missing qibla-trace header", line_no);
      }
      if (record.value("version", 0) != kTraceVersion) {
        throw Error(ErrorCode::ParseError, "unsupported trace version", line_no);
      }
      const auto cal = record.find("calibration_end_ms");
      if (cal != record.end() && !cal->is_null()) {
        if (!cal->is_number()) {
          throw Error(ErrorCode::ParseError, "calibration_end_ms must be a number", line_no);
        }
        trace.calibration_end_ms = cal->get<double>();
      }
      header_seen = true;
      continue;
    }

    const std::string type = record.value("type", "");
    if (type == "sample") {
      SensorSample s;
      s.t_ms = field(record, "t_ms", line_no);
      s.accel = {field(record, "ax", line_no), field(record, "ay", line_no),
                 field(record, "az", line_no)};
      s.mag = {field(record, "mx", line_no), field(record, "my", line_no),
               field(record, "mz", line_no)};
      if (!trace.samples.empty() && s.t_ms < trace.samples.back().t_ms) {
        throw Error(ErrorCode::ParseError, "sample timestamps must be monotone nondecreasing",
                    line_no);
      }
      trace.samples.push_back(s);
    } else if (type == "truth") {
      TruthRecord r;
      r.t_ms = field(record, "t_ms", line_no);
      r.true_heading_deg = field(record, "heading_deg", line_no);
      r.pitch_deg = field(record, "pitch_deg", line_no);
      r.roll_deg = field(record, "roll_deg", line_no);
      if (!trace.truth.empty() && r.t_ms < trace.truth.back().t_ms) {
        throw Error(ErrorCode::ParseError, "truth timestamps must be monotone nondecreasing",
                    line_no);
      }
      trace.truth.push_back(r);
    } else {
      throw Error(ErrorCode::ParseError, "unknown record type '" + type + "'", line_no);
    }
  }
  if (!header_seen) throw Error(ErrorCode::ParseError, "empty trace", line_no + 1);
  return trace;
}

TraceFile read_trace(const std::filesystem::path& path) {
  auto in = open_in(path, "trace");
  return parse_trace(in);
}

void write_trace(const TraceFile& trace, std::ostream& out) {
  for (std::size_t i = 1; i < trace.samples.size(); ++i) {
    if (trace.samples[i].t_ms < trace.samples[i - 1].t_ms) {
      throw Error(ErrorCode::InvalidArgument, "trace timestamps must be nondecreasing");
    }
  }
  json header{{"format", kTraceFormat},
              {"version", kTraceVersion},
              {"calibration_end_ms", optional_json(trace.calibration_end_ms)}};
  out << header.dump() << '\n';
  const auto write_truth = [&out](const TruthRecord& r) {
    json t{{"type", "truth"},
           {"t_ms", r.t_ms},
           {"heading_deg", r.true_heading_deg},
           {"pitch_deg", r.pitch_deg},
           {"roll_deg", r.roll_deg}};
    out << t.dump() << '\n';
  };
  // truth records follow the sample that shares their timestamp
  std::size_t k = 0;
  for (const auto& s : trace.samples) {
    json rec{{"type", "sample"},  {"t_ms", s.t_ms},  {"ax", s.accel.x()}, {"ay", s.accel.y()},
             {"az", s.accel.z()}, {"mx", s.mag.x()}, {"my", s.mag.y()},   {"mz", s.mag.z()}};
    out << rec.dump() << '\n';
    while (k < trace.truth.size() && trace.truth[k].t_ms <= s.t_ms) write_truth(trace.truth[k++]);
  }
  for (; k < trace.truth.size(); ++k) write_truth(trace.truth[k]);
}

void write_trace(const TraceFile& trace, const std::filesystem::path& path) {
  std::ostringstream buffer;
  write_trace(trace, buffer);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write trace " + path.string());
  out << buffer.str();
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

// ---- reports ----------------------------------------------------------------

ReportSummary summarize(std::span<const QiblaPointerState> states,
                        std::span<const TruthRecord> truth, double steady_window_ms) {
  ReportSummary sum;
  sum.sample_count = states.size();
  if (states.empty()) return sum;
  double total_dev = 0.0;
  for (const auto& s : states) {
    if (s.dynamic) ++sum.dynamic_count;
    total_dev += std::abs(s.deviation_deg);
    sum.max_abs_deviation_deg = std::max(sum.max_abs_deviation_deg, std::abs(s.deviation_deg));
  }
  sum.mean_abs_deviation_deg = total_dev / static_cast<double>(states.size());
  if (truth.empty()) return sum;

  const double steady_start = states.back().t_ms - steady_window_ms;
  double heading_total = 0.0;
  double heading_max = 0.0;
  double dev_total = 0.0;
  double steady_heading = 0.0;
  double steady_dev = 0.0;
  std::size_t steady_n = 0;
  for (const auto& s : states) {
    const Azimuth truth_heading(truth_heading_at(truth, s.t_ms));
    const double heading_err = std::abs(circular_diff(s.true_heading, truth_heading));
    const double true_dev = circular_diff(s.qibla, truth_heading);
    const double dev_err = std::abs(circular_diff(Azimuth(s.deviation_deg), Azimuth(true_dev)));
    heading_total += heading_err;
    heading_max = std::max(heading_max, heading_err);
    dev_total += dev_err;
    if (s.t_ms >= steady_start) {
      steady_heading += heading_err;
      steady_dev += dev_err;
      ++steady_n;
    }
  }
  const auto n = static_cast<double>(states.size());
  sum.mean_heading_error_deg = heading_total / n;
  sum.max_heading_error_deg = heading_max;
  sum.mean_deviation_error_deg = dev_total / n;
  sum.steady_state_error_deg = steady_heading / static_cast<double>(steady_n);
  sum.steady_state_deviation_error_deg = steady_dev / static_cast<double>(steady_n);
  return sum;
}

Report make_report(ReportMeta meta, std::span<const QiblaPointerState> states,
                   std::span<const TruthRecord> truth) {
  if (states.empty()) throw Error(ErrorCode::EmptyReport, "no pointer states to report");
  Report report;
  report.meta = std::move(meta);
  report.samples.assign(states.begin(), states.end());
  if (!truth.empty()) {
    report.truth_heading_deg.reserve(states.size());
    for (const auto& s : states)
      report.truth_heading_deg.push_back(truth_heading_at(truth, s.t_ms));
  }
  report.summary = summarize(states, truth, report.meta.steady_window_ms);
  return report;
}

json to_json(const GeoCoordinate& c) {
  return {{"latitude_deg", c.latitude_deg()}, {"longitude_deg", c.longitude_deg()}};
}

json to_json(const CalibrationState& c) {
  return {{"hard_iron_ut", {c.hard_iron.x(), c.hard_iron.y(), c.hard_iron.z()}},
          {"samples_used", c.samples_used},
          {"coverage_deg", c.coverage_deg},
          {"converged", c.converged}};
}

json to_json(const ReportSummary& m) {
  json summary{{"sample_count", m.sample_count},
               {"dynamic_count", m.dynamic_count},
               {"mean_abs_deviation_deg", m.mean_abs_deviation_deg},
               {"max_abs_deviation_deg", m.max_abs_deviation_deg}};
  if (m.steady_state_error_deg) {
    summary["mean_heading_error_deg"] = *m.mean_heading_error_deg;
    summary["max_heading_error_deg"] = *m.max_heading_error_deg;
    summary["mean_deviation_error_deg"] = *m.mean_deviation_error_deg;
    summary["steady_state_error_deg"] = *m.steady_state_error_deg;
    summary["steady_state_deviation_error_deg"] = *m.steady_state_deviation_error_deg;
  }
  return summary;
}

json report_envelope(json meta) {
  return {{"format", kReportFormat}, {"version", kReportVersion}, {"meta", std::move(meta)}};
}

json to_json(const Report& r) {
  json meta{{"command", r.meta.command},
            {"user", to_json(r.meta.user)},
            {"declination_deg", optional_json(r.meta.declination_deg)},
            {"alpha", r.meta.alpha},
            {"threshold_deg", r.meta.threshold_deg},
            {"steady_window_ms", r.meta.steady_window_ms}};
  if (r.meta.calibration) meta["calibration"] = to_json(*r.meta.calibration);
  if (r.meta.generated_at) meta["generated_at"] = *r.meta.generated_at;

  json samples = json::array();
  for (std::size_t i = 0; i < r.samples.size(); ++i) {
    const auto& s = r.samples[i];
    json e{{"t_ms", s.t_ms},
           {"raw_magnetic_heading_deg", s.raw_magnetic_heading.deg()},
           {"magnetic_heading_deg", s.magnetic_heading.deg()},
           {"true_heading_deg", s.true_heading.deg()},
           {"qibla_deg", s.qibla.deg()},
           {"deviation_deg", s.deviation_deg},
           {"guidance", to_string(s.guidance)},
           {"calibrated", s.calibrated},
           {"dynamic", s.dynamic}};
    if (i < r.truth_heading_deg.size()) e["truth_heading_deg"] = r.truth_heading_deg[i];
    samples.push_back(std::move(e));
  }

  json doc = report_envelope(std::move(meta));
  doc["samples"] = std::move(samples);
  doc["summary"] = to_json(r.summary);
  return doc;
}

namespace {

void write_text(const Report& r, std::ostream& out) {
  out << "qibla report: " << r.meta.command << " at " << fixed2(r.meta.user.latitude_deg()) << ", "
      << fixed2(r.meta.user.longitude_deg()) << '\n';
  if (r.meta.declination_deg) {
    out << "declination: " << fixed2(*r.meta.declination_deg) << " deg\n";
  } else {
    out << "declination: none, magnetic=true assumed\n";
  }
  if (r.meta.calibration) {
    const auto& c = *r.meta.calibration;
    out << "hard iron: " << fixed2(c.hard_iron.x()) << ' ' << fixed2(c.hard_iron.y()) << ' '
        << fixed2(c.hard_iron.z()) << " uT, " << c.samples_used << " samples, coverage "
        << fixed2(c.coverage_deg) << " deg, " << (c.converged ? "converged" : "NOT converged")
        << '\n';
  }
  out << std::setw(10) << "t_ms" << std::setw(10) << "magnetic" << std::setw(10) << "true"
      << std::setw(10) << "qibla" << std::setw(10) << "dev" << "  guidance\n";
  for (const auto& s : r.samples) {
    out << std::setw(10) << fixed2(s.t_ms) << std::setw(10) << fixed2(s.magnetic_heading.deg())
        << std::setw(10) << fixed2(s.true_heading.deg()) << std::setw(10) << fixed2(s.qibla.deg())
        << std::setw(10) << fixed2(s.deviation_deg) << "  " << to_string(s.guidance)
        << (s.dynamic ? " (dynamic)" : "") << '\n';
  }
  const auto& m = r.summary;
  out << "samples: " << m.sample_count << " (" << m.dynamic_count << " dynamic)\n";
  out << "mean |deviation|: " << fixed2(m.mean_abs_deviation_deg) << " deg, max "
      << fixed2(m.max_abs_deviation_deg) << " deg\n";
  if (m.steady_state_error_deg) {
    out << "heading error: mean " << fixed2(*m.mean_heading_error_deg) << " deg, max "
        << fixed2(*m.max_heading_error_deg) << " deg, steady state "
        << fixed2(*m.steady_state_error_deg) << " deg\n";
  }
}

}  // namespace

void write_report(const Report& report, std::ostream& out, ReportFormat format) {
  if (report.samples.empty()) throw Error(ErrorCode::EmptyReport, "no pointer states to report");
  if (format == ReportFormat::Json) {
    out << to_json(report).dump(2) << '\n';
  } else {
    write_text(report, out);
  }
}

void write_report(const Report& report, const std::filesystem::path& path, ReportFormat format) {
  std::ostringstream buffer;
  write_report(report, buffer, format);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write report " + path.string());
  out << buffer.str();
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

Report parse_report(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed report: ") + e.what());
  }
  try {
    if (doc.at("format") != kReportFormat || doc.at("version") != kReportVersion) {
      throw Error(ErrorCode::ParseError, "not a qibla-report v1 document");
    }
    Report r;
    const json& meta = doc.at("meta");
    r.meta.command = meta.at("command").get<std::string>();
    r.meta.user = GeoCoordinate(meta.at("user").at("latitude_deg").get<double>(),
                                meta.at("user").at("longitude_deg").get<double>());
    r.meta.declination_deg = optional_from(meta, "declination_deg");
    r.meta.alpha = meta.at("alpha").get<double>();
    r.meta.threshold_deg = meta.at("threshold_deg").get<double>();
    r.meta.steady_window_ms = meta.at("steady_window_ms").get<double>();
    if (meta.contains("calibration")) {
      const json& c = meta.at("calibration");
      CalibrationState cal;
      for (int i = 0; i < 3; ++i) cal.hard_iron[i] = c.at("hard_iron_ut").at(i).get<double>();
      cal.samples_used = c.at("samples_used").get<std::size_t>();
      cal.coverage_deg = c.at("coverage_deg").get<double>();
      cal.converged = c.at("converged").get<bool>();
      r.meta.calibration = cal;
    }
    if (meta.contains("generated_at"))
      r.meta.generated_at = meta.at("generated_at").get<std::string>();

    for (const json& e : doc.at("samples")) {
      QiblaPointerState s;
      s.t_ms = e.at("t_ms").get<double>();
      s.raw_magnetic_heading = Azimuth(e.at("raw_magnetic_heading_deg").get<double>());
      s.magnetic_heading = Azimuth(e.at("magnetic_heading_deg").get<double>());
      s.true_heading = Azimuth(e.at("true_heading_deg").get<double>());
      s.qibla = Azimuth(e.at("qibla_deg").get<double>());
      s.deviation_deg = e.at("deviation_deg").get<double>();
      s.guidance = guidance_from(e.at("guidance").get<std::string>());
      s.calibrated = e.at("calibrated").get<bool>();
      s.dynamic = e.at("dynamic").get<bool>();
      if (e.contains("truth_heading_deg"))
        r.truth_heading_deg.push_back(e["truth_heading_deg"].get<double>());
      r.samples.push_back(s);
    }

    const json& m = doc.at("summary");
    r.summary.sample_count = m.at("sample_count").get<std::size_t>();
    r.summary.dynamic_count = m.at("dynamic_count").get<std::size_t>();
    r.summary.mean_abs_deviation_deg = m.at("mean_abs_deviation_deg").get<double>();
    r.summary.max_abs_deviation_deg = m.at("max_abs_deviation_deg").get<double>();
    r.summary.mean_heading_error_deg = optional_from(m, "mean_heading_error_deg");
    r.summary.max_heading_error_deg = optional_from(m, "max_heading_error_deg");
    r.summary.mean_deviation_error_deg = optional_from(m, "mean_deviation_error_deg");
    r.summary.steady_state_error_deg = optional_from(m, "steady_state_error_deg");
    r.summary.steady_state_deviation_error_deg =
        optional_from(m, "steady_state_deviation_error_deg");
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("bad report structure: ") + e.what());
  }
}

Report read_report(const std::filesystem::path& path) {
  auto in = open_in(path, "report");
  return parse_report(in);
}

}  // namespace qibla
