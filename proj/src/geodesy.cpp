#include "qibla/geodesy.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "qibla/error.hpp"

namespace qibla {

namespace {

using Vec3 = std::array<double, 3>;

Vec3 unit_vector(const GeoCoordinate& p) {
  const double lat = p.latitude_deg() * kDegToRad;
  const double lon = p.longitude_deg() * kDegToRad;
  return {std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon), std::sin(lat)};
}

void check_not_degenerate(const GeoCoordinate& from, const GeoCoordinate& to) {
  const double sep = angular_separation(from, to);
  if (sep <= kDegenerateToleranceDeg) {
    throw Error(ErrorCode::DegeneratePoints, "points coincide; bearing is undefined");
  }
  if (sep >= 180.0 - kDegenerateToleranceDeg) {
    throw Error(ErrorCode::AntipodalPoints,
                "points are antipodal; every bearing is a great circle");
  }
}

}  // namespace

GeoCoordinate::GeoCoordinate(double latitude_deg, double longitude_deg) {
  if (!std::isfinite(latitude_deg) || !std::isfinite(longitude_deg)) {
    throw Error(ErrorCode::InvalidCoordinate, "coordinate must be finite");
  }
  if (latitude_deg < -90.0 || latitude_deg > 90.0) {
    throw Error(ErrorCode::InvalidCoordinate,
                "latitude " + std::to_string(latitude_deg) + " outside [-90, 90]");
  }
  double lon = std::fmod(longitude_deg, 360.0);
  if (lon <= -180.0) lon += 360.0;
  if (lon > 180.0) lon -= 360.0;
  latitude_deg_ = latitude_deg;
  longitude_deg_ = lon;
}

Azimuth::Azimuth(double raw_deg) {
  if (!std::isfinite(raw_deg)) {
    throw Error(ErrorCode::InvalidAngle, "azimuth must be finite");
  }
  double r = std::fmod(raw_deg, 360.0);
  if (r < 0.0) r += 360.0;
  // -tiny + 360 rounds up to 360
  if (r >= 360.0) r -= 360.0;
  deg_ = r == 0.0 ? 0.0 : r;
}

Distance::Distance(double km) : km_(km) {
  if (!(km >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "distance must be nonnegative");
  }
}

EarthModel::EarthModel(double radius_km) : radius_km_(radius_km) {
  if (!(radius_km > 0.0) || !std::isfinite(radius_km)) {
    throw Error(ErrorCode::InvalidArgument, "earth radius must be positive");
  }
}

Azimuth normalize_azimuth(double raw_deg) { return Azimuth(raw_deg); }

double angular_separation(const GeoCoordinate& a, const GeoCoordinate& b) {
  if (a == b) return 0.0;
  const Vec3 u = unit_vector(a);
  const Vec3 v = unit_vector(b);
  const Vec3 cross{u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]};
  const double sin_c = std::hypot(cross[0], cross[1], cross[2]);
  const double cos_c = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
  return std::atan2(sin_c, cos_c) * kRadToDeg;
}

Azimuth initial_bearing(const GeoCoordinate& from, const GeoCoordinate& to) {
  check_not_degenerate(from, to);
  const double lat1 = from.latitude_deg() * kDegToRad;
  const double lat2 = to.latitude_deg() * kDegToRad;
  const double dlon = (to.longitude_deg() - from.longitude_deg()) * kDegToRad;
  // cos(lat2) >= 0, so dividing the vector form through by it keeps the
  // quadrant seen by atan2 intact.
  const double y = std::sin(dlon);
  const double x = std::cos(lat1) * std::tan(lat2) - std::sin(lat1) * std::cos(dlon);
  return Azimuth(std::atan2(y, x) * kRadToDeg);
}

Azimuth qibla_azimuth(const GeoCoordinate& user) { return initial_bearing(user, kaaba()); }

Distance haversine_distance(const GeoCoordinate& a, const GeoCoordinate& b,
                            const EarthModel& model) {
  const double lat1 = a.latitude_deg() * kDegToRad;
  const double lat2 = b.latitude_deg() * kDegToRad;
  const double dlat = lat2 - lat1;
  const double dlon = (b.longitude_deg() - a.longitude_deg()) * kDegToRad;
  const double s_lat = std::sin(dlat / 2.0);
  const double s_lon = std::sin(dlon / 2.0);
  const double c_lat = std::cos(dlat / 2.0);
  const double k = std::cos(lat1) * std::cos(lat2) * s_lon * s_lon;
  // 1 - h is formed directly so that near-antipodal pairs keep full precision
  const double h = std::max(s_lat * s_lat + k, 0.0);
  const double h_complement = std::max(c_lat * c_lat - k, 0.0);
  const double c = 2.0 * std::atan2(std::sqrt(h), std::sqrt(h_complement));
  return Distance(model.radius_km() * c);
}

Distance slc_distance(const GeoCoordinate& a, const GeoCoordinate& b, const EarthModel& model) {
  if (a == b) return Distance(0.0);
  const double lat1 = a.latitude_deg() * kDegToRad;
  const double lat2 = b.latitude_deg() * kDegToRad;
  const double dlon = (b.longitude_deg() - a.longitude_deg()) * kDegToRad;
  const double cos_c =
      std::clamp(std::sin(lat1) * std::sin(lat2) + std::cos(lat1) * std::cos(lat2) * std::cos(dlon),
                 -1.0, 1.0);
  return Distance(model.radius_km() * std::acos(cos_c));
}

}  // namespace qibla
