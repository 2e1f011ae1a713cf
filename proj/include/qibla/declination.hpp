#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "qibla/geodesy.hpp"

namespace qibla {

/// Magnetic declination, east-positive, |value| <= 90.
class Declination {
 public:
  Declination() = default;
  explicit Declination(double deg);
  double deg() const noexcept { return deg_; }

 private:
  double deg_ = 0.0;
};

struct GridAxis {
  double min_deg;
  double max_deg;
  double step_deg;

  std::size_t count() const;
};

/// Regular lat/lon table of declination values, rows by ascending latitude,
/// columns by ascending longitude. Immutable once built.
///
/// Text format:
///   declgrid v1 <lat_min> <lat_max> <lat_step> <lon_min> <lon_max> <lon_step>
///   <one line of space-separated values per latitude row>
/// Blank lines and lines starting with '#' are ignored.
class DeclinationGrid {
 public:
  DeclinationGrid(GridAxis lat, GridAxis lon, std::vector<double> values);

  static DeclinationGrid parse(std::istream& in);
  static DeclinationGrid load(const std::filesystem::path& path);

  const GridAxis& lat_axis() const noexcept { return lat_; }
  const GridAxis& lon_axis() const noexcept { return lon_; }
  double node(std::size_t lat_index, std::size_t lon_index) const;

  bool covers(const GeoCoordinate& where) const;

 private:
  GridAxis lat_;
  GridAxis lon_;
  std::vector<double> values_;
};

/// Bilinear interpolation of the four nodes around `where`; a query exactly on
/// a node returns the stored value. Throws OutOfCoverage outside the grid.
Declination declination_at(const DeclinationGrid& grid, const GeoCoordinate& where);

// true = magnetic + declination, renormalized.
Azimuth to_true_heading(Azimuth magnetic, Declination decl);

}  // namespace qibla
