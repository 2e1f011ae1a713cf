#include "qibla/declination.hpp"

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "qibla/error.hpp"

namespace qibla {

namespace {

// Snap a fractional grid index onto an integer when it is within rounding
// noise, so queries on a node hit it exactly.
double snap_index(double u) {
  const double r = std::round(u);
  return std::abs(u - r) < 1e-9 ? r : u;
}

void locate(const GridAxis& axis, double coord, std::size_t& index, double& frac) {
  const std::size_t n = axis.count();
  double u = snap_index((coord - axis.min_deg) / axis.step_deg);
  if (n == 1) {
    index = 0;
    frac = 0.0;
    return;
  }
  double i = std::floor(u);
  if (i >= static_cast<double>(n - 1)) i = static_cast<double>(n - 2);
  if (i < 0.0) i = 0.0;
  index = static_cast<std::size_t>(i);
  frac = u - i;
}

void check_axis(const GridAxis& axis) {
  if (!std::isfinite(axis.min_deg) || !std::isfinite(axis.max_deg) ||
      !std::isfinite(axis.step_deg)) {
    throw Error(ErrorCode::InvalidArgument, "grid axis bounds must be finite");
  }
  if (!(axis.step_deg > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "grid step must be strictly positive");
  }
  if (axis.max_deg < axis.min_deg) {
    throw Error(ErrorCode::InvalidArgument, "grid max below min");
  }
  const double spans = (axis.max_deg - axis.min_deg) / axis.step_deg;
  if (std::abs(spans - std::round(spans)) > 1e-6) {
    throw Error(ErrorCode::InvalidArgument, "grid extent is not a whole number of steps");
  }
}

bool is_blank_or_comment(const std::string& line) {
  const auto pos = line.find_first_not_of(" \t\r");
  return pos == std::string::npos || line[pos] == '#';
}

}  // namespace

Declination::Declination(double deg) : deg_(deg) {
  if (!std::isfinite(deg) || std::abs(deg) > 90.0) {
    throw Error(ErrorCode::InvalidAngle, "declination must be finite and within [-90, 90]");
  }
}

std::size_t GridAxis::count() const {
  const double spans = (max_deg - min_deg) / step_deg;
  return static_cast<std::size_t>(std::llround(spans)) + 1;
}

DeclinationGrid::DeclinationGrid(GridAxis lat, GridAxis lon, std::vector<double> values)
    : lat_(lat), lon_(lon), values_(std::move(values)) {
  check_axis(lat_);
  check_axis(lon_);
  if (lat_.min_deg < -90.0 || lat_.max_deg > 90.0) {
    throw Error(ErrorCode::InvalidArgument, "grid latitude range outside [-90, 90]");
  }
  if (values_.size() != lat_.count() * lon_.count()) {
    throw Error(ErrorCode::InvalidArgument, "grid has " + std::to_string(values_.size()) +
                                                " values, expected " +
                                                std::to_string(lat_.count() * lon_.count()));
  }
  for (double v : values_) {
    if (!std::isfinite(v) || std::abs(v) > 90.0) {
      throw Error(ErrorCode::InvalidArgument, "grid value outside [-90, 90]");
    }
  }
}

double DeclinationGrid::node(std::size_t lat_index, std::size_t lon_index) const {
  return values_.at(lat_index * lon_.count() + lon_index);
}

bool DeclinationGrid::covers(const GeoCoordinate& where) const {
  const double lat = where.latitude_deg();
  const double lon = where.longitude_deg();
  return lat >= lat_.min_deg && lat <= lat_.max_deg && lon >= lon_.min_deg && lon <= lon_.max_deg;
}

DeclinationGrid DeclinationGrid::parse(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::optional<GridAxis> lat;
  std::optional<GridAxis> lon;
  std::size_t rows_expected = 0;
  std::size_t cols_expected = 0;
  std::vector<double> values;

  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank_or_comment(line)) continue;
    std::istringstream fields(line);
    if (!lat) {
      std::string magic;
      std::string version;
      GridAxis la{};
      GridAxis lo{};
      fields >> magic >> version >> la.min_deg >> la.max_deg >> la.step_deg >> lo.min_deg >>
          lo.max_deg >> lo.step_deg;
      std::string extra;
      if (!fields || magic != "declgrid" || version != "v1" || (fields >> extra)) {
        throw Error(ErrorCode::ParseError,
                    "expected 'declgrid v1 <lat_min> <lat_max> <lat_step> <lon_min> "
                    "<lon_max> <lon_step>'",
                    line_no);
      }
      try {
        check_axis(la);
        check_axis(lo);
      } catch (const Error& e) {
        throw Error(ErrorCode::ParseError, e.what(), line_no);
      }
      rows_expected = la.count();
      cols_expected = lo.count();
      lat = la;
      lon = lo;
      continue;
    }
    std::size_t cols = 0;
    double v = 0.0;
    while (fields >> v) {
      if (!std::isfinite(v) || std::abs(v) > 90.0) {
        throw Error(ErrorCode::ParseError, "declination value outside [-90, 90]", line_no);
      }
      values.push_back(v);
      ++cols;
    }
    if (!fields.eof()) {
      throw Error(ErrorCode::ParseError, "non-numeric token in grid row", line_no);
    }
    if (cols != cols_expected) {
      throw Error(
          ErrorCode::ParseError,
          "row has " + std::to_string(cols) + " values, expected " + std::to_string(cols_expected),
          line_no);
    }
    if (values.size() > rows_expected * cols_expected) {
      throw Error(ErrorCode::ParseError, "more rows than the header declares", line_no);
    }
  }
  if (!lat) {
    throw Error(ErrorCode::ParseError, "missing declgrid header", line_no + 1);
  }
  if (values.size() != rows_expected * cols_expected) {
    throw Error(ErrorCode::ParseError,
                "grid ended after " + std::to_string(values.size() / cols_expected) +
                    " rows, expected " + std::to_string(rows_expected),
                line_no + 1);
  }
  try {
    return DeclinationGrid(*lat, *lon, std::move(values));
  } catch (const Error& e) {
    throw Error(ErrorCode::ParseError, e.what(), 1);
  }
}

DeclinationGrid DeclinationGrid::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::IoError, "cannot open declination grid " + path.string());
  }
  return parse(in);
}

Declination declination_at(const DeclinationGrid& grid, const GeoCoordinate& where) {
  if (!grid.covers(where)) {
    throw Error(ErrorCode::OutOfCoverage, "location outside the declination grid");
  }
  std::size_t i = 0;
  std::size_t j = 0;
  double fy = 0.0;
  double fx = 0.0;
  locate(grid.lat_axis(), where.latitude_deg(), i, fy);
  locate(grid.lon_axis(), where.longitude_deg(), j, fx);
  const std::size_t i1 = grid.lat_axis().count() > 1 ? i + 1 : i;
  const std::size_t j1 = grid.lon_axis().count() > 1 ? j + 1 : j;

  const double v00 = grid.node(i, j);
  const double v01 = grid.node(i, j1);
  const double v10 = grid.node(i1, j);
  const double v11 = grid.node(i1, j1);
  const double value =
      (1.0 - fy) * ((1.0 - fx) * v00 + fx * v01) + fy * ((1.0 - fx) * v10 + fx * v11);
  return Declination(value);
}

Azimuth to_true_heading(Azimuth magnetic, Declination decl) {
  return Azimuth(magnetic.deg() + decl.deg());
}

}  // namespace qibla
