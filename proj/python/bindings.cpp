#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "qibla/dataio.hpp"
#include "qibla/declination.hpp"
#include "qibla/error.hpp"
#include "qibla/geodesy.hpp"
#include "qibla/sensor_pipeline.hpp"
#include "qibla/simulator.hpp"

#define STRINGIFY(x) #x
#define MACRO_STRINGIFY(x) STRINGIFY(x)

namespace py = pybind11;
using namespace qibla;

namespace {

using Array = py::array_t<double>;

Array column(const std::vector<double>& v) {
  Array out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

Array vectors(const TraceFile& t, Eigen::Vector3d SensorSample::* field) {
  Array out({static_cast<py::ssize_t>(t.samples.size()), py::ssize_t{3}});
  auto view = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < t.samples.size(); ++i) {
    for (py::ssize_t k = 0; k < 3; ++k) {
      view(static_cast<py::ssize_t>(i), k) = (t.samples[i].*field)[k];
    }
  }
  return out;
}

py::dict calibration_dict(const CalibrationState& c) {
  py::dict d;
  d["hard_iron_ut"] = py::make_tuple(c.hard_iron.x(), c.hard_iron.y(), c.hard_iron.z());
  d["samples_used"] = c.samples_used;
  d["coverage_deg"] = c.coverage_deg;
  d["converged"] = c.converged;
  return d;
}

py::dict summary_dict(const ReportSummary& s) {
  py::dict d;
  d["sample_count"] = s.sample_count;
  d["dynamic_count"] = s.dynamic_count;
  d["mean_abs_deviation_deg"] = s.mean_abs_deviation_deg;
  d["max_abs_deviation_deg"] = s.max_abs_deviation_deg;
  d["mean_heading_error_deg"] = s.mean_heading_error_deg;
  d["max_heading_error_deg"] = s.max_heading_error_deg;
  d["mean_deviation_error_deg"] = s.mean_deviation_error_deg;
  d["steady_state_error_deg"] = s.steady_state_error_deg;
  d["steady_state_deviation_error_deg"] = s.steady_state_deviation_error_deg;
  return d;
}

py::dict run(const TraceFile& trace, double lat, double lon, std::optional<double> declination_deg,
             double alpha, double threshold_deg, double steady_window_ms) {
  const GeoCoordinate user(lat, lon);
  PipelineConfig config{user, Declination(declination_deg.value_or(0.0)), alpha, threshold_deg,
                        trace.calibration_end_ms};
  PipelineRun result;
  {
    py::gil_scoped_release release;
    result = run_pipeline(trace.samples, config);
  }
  const ReportSummary summary = summarize(result.states, trace.truth, steady_window_ms);

  std::vector<double> t, raw, magnetic, true_heading, deviation;
  std::vector<std::string> guide;
  std::vector<bool> dynamic;
  for (const auto& s : result.states) {
    t.push_back(s.t_ms);
    raw.push_back(s.raw_magnetic_heading.deg());
    magnetic.push_back(s.magnetic_heading.deg());
    true_heading.push_back(s.true_heading.deg());
    deviation.push_back(s.deviation_deg);
    guide.emplace_back(to_string(s.guidance));
    dynamic.push_back(s.dynamic);
  }
  py::dict d;
  d["calibration"] = calibration_dict(result.calibration);
  d["qibla_deg"] = qibla_azimuth(user).deg();
  d["t_ms"] = column(t);
  d["raw_magnetic_heading_deg"] = column(raw);
  d["magnetic_heading_deg"] = column(magnetic);
  d["true_heading_deg"] = column(true_heading);
  d["deviation_deg"] = column(deviation);
  d["guidance"] = guide;
  d["dynamic"] = dynamic;
  d["skipped_leading_dynamic"] = result.skipped_leading_dynamic;
  d["summary"] = summary_dict(summary);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Qibla azimuth, great-circle distance and a simulated compass pipeline.";

  // the module attribute keeps the type alive
  static py::handle error_type;
  error_type = py::exception<Error>(m, "QiblaError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error_type)(e.what());
      exc.attr("code") = std::string(to_string(e.code()));
      exc.attr("line") = e.line() ? py::cast(*e.line()) : py::none();
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  m.attr("KAABA") = py::make_tuple(kaaba().latitude_deg(), kaaba().longitude_deg());
  m.attr("EARTH_RADIUS_KM") = EarthModel{}.radius_km();

  m.def(
      "normalize_azimuth", [](double deg) { return normalize_azimuth(deg).deg(); }, py::arg("deg"));
  m.def(
      "qibla_azimuth", [](double lat, double lon) { return qibla_azimuth({lat, lon}).deg(); },
      py::arg("lat"), py::arg("lon"), "Initial great-circle bearing towards the Kaaba.");
  m.def(
      "initial_bearing",
      [](double lat1, double lon1, double lat2, double lon2) {
        return initial_bearing({lat1, lon1}, {lat2, lon2}).deg();
      },
      py::arg("lat1"), py::arg("lon1"), py::arg("lat2"), py::arg("lon2"));
  m.def(
      "haversine_distance",
      [](double lat1, double lon1, double lat2, double lon2, double radius_km) {
        return haversine_distance({lat1, lon1}, {lat2, lon2}, EarthModel(radius_km)).km();
      },
      py::arg("lat1"), py::arg("lon1"), py::arg("lat2"), py::arg("lon2"),
      py::arg("radius_km") = 6371.0);
  m.def(
      "slc_distance",
      [](double lat1, double lon1, double lat2, double lon2, double radius_km) {
        return slc_distance({lat1, lon1}, {lat2, lon2}, EarthModel(radius_km)).km();
      },
      py::arg("lat1"), py::arg("lon1"), py::arg("lat2"), py::arg("lon2"),
      py::arg("radius_km") = 6371.0);
  m.def(
      "circular_diff",
      [](double target, double current) {
        return circular_diff(Azimuth(target), Azimuth(current));
      },
      py::arg("target"), py::arg("current"));
  m.def(
      "guidance",
      [](double deviation, double threshold) { return to_string(guidance(deviation, threshold)); },
      py::arg("deviation_deg"), py::arg("threshold_deg") = kDefaultGuidanceThresholdDeg);
  m.def(
      "declination_at",
      [](const std::filesystem::path& grid, double lat, double lon) {
        return declination_at(DeclinationGrid::load(grid), {lat, lon}).deg();
      },
      py::arg("grid_path"), py::arg("lat"), py::arg("lon"));

  py::class_<TraceFile>(m, "Trace")
      .def("__len__", [](const TraceFile& t) { return t.samples.size(); })
      .def_property_readonly("t_ms",
                             [](const TraceFile& t) {
                               std::vector<double> v;
                               for (const auto& s : t.samples) v.push_back(s.t_ms);
                               return column(v);
                             })
      .def_property_readonly("accel",
                             [](const TraceFile& t) { return vectors(t, &SensorSample::accel); })
      .def_property_readonly("mag",
                             [](const TraceFile& t) { return vectors(t, &SensorSample::mag); })
      .def_property_readonly("truth_heading_deg",
                             [](const TraceFile& t) {
                               std::vector<double> v;
                               for (const auto& r : t.truth) v.push_back(r.true_heading_deg);
                               return column(v);
                             })
      .def_readonly("calibration_end_ms", &TraceFile::calibration_end_ms)
      .def(
          "write", [](const TraceFile& t, const std::filesystem::path& p) { write_trace(t, p); },
          py::arg("path"));

  m.def(
      "simulate",
      [](const std::filesystem::path& p) { return TraceFile::from(generate(load_scenario(p))); },
      py::arg("scenario_path"), "Generate a trace from a scenario file.");
  m.def("read_trace", &read_trace, py::arg("path"));
  m.def(
      "calibrate",
      [](const TraceFile& t) { return calibration_dict(calibrate(t.calibration_sweep())); },
      py::arg("trace"), "Hard-iron estimate from the trace's calibration sweep.");
  m.def("run_pipeline", &run, py::arg("trace"), py::arg("lat"), py::arg("lon"),
        py::arg("declination_deg") = py::none(), py::arg("alpha") = kDefaultFilterAlpha,
        py::arg("threshold_deg") = kDefaultGuidanceThresholdDeg,
        py::arg("steady_window_ms") = kDefaultSteadyWindowMs);

#ifdef VERSION_INFO
  m.attr("__version__") = MACRO_STRINGIFY(VERSION_INFO);
#else
  m.attr("__version__") = "dev";
#endif
}
