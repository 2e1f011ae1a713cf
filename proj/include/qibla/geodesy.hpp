#pragma once

// Great-circle mathematics on a spherical Earth. Angles cross this API in
// degrees; radians are used internally only.

namespace qibla {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kDegToRad = kPi / 180.0;
inline constexpr double kRadToDeg = 180.0 / kPi;

// Separations at or below this (and at or above 180 minus this) make the
// spherical triangle degenerate, so no bearing is defined.
inline constexpr double kDegenerateToleranceDeg = 1e-9;

/// Latitude/longitude on the sphere. Latitude must lie in [-90, 90];
/// longitude is wrapped into (-180, 180] on construction (190 -> -170).
class GeoCoordinate {
 public:
  GeoCoordinate(double latitude_deg, double longitude_deg);

  double latitude_deg() const noexcept { return latitude_deg_; }
  double longitude_deg() const noexcept { return longitude_deg_; }

  friend bool operator==(const GeoCoordinate&, const GeoCoordinate&) = default;

 private:
  double latitude_deg_;
  double longitude_deg_;
};

/// Compass bearing clockwise from true north, always in [0, 360).
class Azimuth {
 public:
  Azimuth() = default;
  // Normalizes any finite input; throws InvalidAngle otherwise.
  explicit Azimuth(double raw_deg);

  double deg() const noexcept { return deg_; }

  friend bool operator==(const Azimuth&, const Azimuth&) = default;

 private:
  double deg_ = 0.0;
};

/// Great-circle distance, nonnegative.
class Distance {
 public:
  explicit Distance(double km);
  double km() const noexcept { return km_; }

 private:
  double km_;
};

class EarthModel {
 public:
  EarthModel() = default;
  explicit EarthModel(double radius_km);
  double radius_km() const noexcept { return radius_km_; }

 private:
  double radius_km_ = 6371.0;
};

// The Kaaba, target of every qibla computation.
inline const GeoCoordinate& kaaba() {
  static const GeoCoordinate location{21.4225, 39.8262};
  return location;
}

Azimuth normalize_azimuth(double raw_deg);

/// Central angle between two points in [0, 180], computed from unit
/// position vectors so it stays accurate near 0 and near 180.
double angular_separation(const GeoCoordinate& a, const GeoCoordinate& b);

/// Initial great-circle bearing at `from` toward `to`:
///
///   theta = atan2(sin dlon, cos lat1 * tan lat2 - sin lat1 * cos dlon)
///
/// The two-argument arctangent resolves the quadrant of the tangent ratio;
/// the result is then normalized to [0, 360). Throws DegeneratePoints for
/// coincident points and AntipodalPoints for antipodes.
Azimuth initial_bearing(const GeoCoordinate& from, const GeoCoordinate& to);

/// Bearing from `user` toward the Kaaba. The bearing on a sphere does not
/// depend on its radius, so no EarthModel is taken.
Azimuth qibla_azimuth(const GeoCoordinate& user);

// Haversine central angle times the model radius.
Distance haversine_distance(const GeoCoordinate& a, const GeoCoordinate& b,
                            const EarthModel& model = {});

// Spherical Law of Cosines. Ill-conditioned below roughly 1 km; prefer
// haversine_distance there.
Distance slc_distance(const GeoCoordinate& a, const GeoCoordinate& b, const EarthModel& model = {});

}  // namespace qibla
