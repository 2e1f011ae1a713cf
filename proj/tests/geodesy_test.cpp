#include "qibla/geodesy.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "qibla/error.hpp"

using namespace qibla;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected qibla::Error";
  return ErrorCode::InvalidArgument;
}

const GeoCoordinate kBandung{-6.9147, 107.6098};

}  // namespace

TEST(GeoCoordinate, RejectsLatitudeOutOfRange) {
  EXPECT_EQ(code_of([] { GeoCoordinate(90.5, 0.0); }), ErrorCode::InvalidCoordinate);
  EXPECT_EQ(code_of([] { GeoCoordinate(-91.0, 0.0); }), ErrorCode::InvalidCoordinate);
  EXPECT_EQ(code_of([] { GeoCoordinate(std::nan(""), 0.0); }), ErrorCode::InvalidCoordinate);
  EXPECT_NO_THROW(GeoCoordinate(90.0, 0.0));
  EXPECT_NO_THROW(GeoCoordinate(-90.0, 0.0));
}

TEST(GeoCoordinate, CanonicalizesLongitude) {
  EXPECT_DOUBLE_EQ(GeoCoordinate(0, 190).longitude_deg(), -170.0);
  EXPECT_DOUBLE_EQ(GeoCoordinate(0, -180).longitude_deg(), 180.0);
  EXPECT_DOUBLE_EQ(GeoCoordinate(0, 180).longitude_deg(), 180.0);
  EXPECT_DOUBLE_EQ(GeoCoordinate(0, 540).longitude_deg(), 180.0);
  EXPECT_DOUBLE_EQ(GeoCoordinate(0, -350).longitude_deg(), 10.0);
}

TEST(Kaaba, FixedLocation) {
  EXPECT_EQ(kaaba().latitude_deg(), 21.4225);
  EXPECT_EQ(kaaba().longitude_deg(), 39.8262);
  EXPECT_EQ(&kaaba(), &kaaba());
}

TEST(NormalizeAzimuth, Examples) {
  EXPECT_EQ(normalize_azimuth(-90).deg(), 270.0);
  EXPECT_EQ(normalize_azimuth(360).deg(), 0.0);
  EXPECT_EQ(normalize_azimuth(725).deg(), 5.0);
  EXPECT_EQ(normalize_azimuth(-0.0).deg(), 0.0);
  EXPECT_FALSE(std::signbit(normalize_azimuth(-0.0).deg()));
  EXPECT_LT(normalize_azimuth(-1e-20).deg(), 360.0);
}

TEST(NormalizeAzimuth, RejectsNonFinite) {
  EXPECT_EQ(code_of([] { normalize_azimuth(std::numeric_limits<double>::infinity()); }),
            ErrorCode::InvalidAngle);
  EXPECT_EQ(code_of([] { normalize_azimuth(std::nan("")); }), ErrorCode::InvalidAngle);
}

TEST(NormalizeAzimuth, ClosureProperty) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-1e6, 1e6);
  for (int i = 0; i < 20000; ++i) {
    const double x = dist(rng);
    const double r = normalize_azimuth(x).deg();
    ASSERT_GE(r, 0.0);
    ASSERT_LT(r, 360.0);
    const double diff = x - r;
    ASSERT_NEAR(diff, 360.0 * std::round(diff / 360.0), 1e-9) << x;
  }
}

TEST(AngularSeparation, Examples) {
  EXPECT_EQ(angular_separation(kaaba(), kaaba()), 0.0);
  EXPECT_NEAR(angular_separation({0, 0}, {0, 180}), 180.0, 1e-12);
  EXPECT_NEAR(angular_separation({0, 0}, {0, 90}), 90.0, 1e-12);
  EXPECT_NEAR(angular_separation({90, 0}, {-90, 0}), 180.0, 1e-12);
}

TEST(InitialBearing, CardinalExamples) {
  EXPECT_NEAR(initial_bearing({0, 0}, {0, 10}).deg(), 90.0, 1e-12);
  EXPECT_NEAR(initial_bearing({0, 0}, {10, 0}).deg(), 0.0, 1e-12);
  EXPECT_NEAR(initial_bearing({0, 0}, {0, -10}).deg(), 270.0, 1e-12);
  EXPECT_NEAR(initial_bearing({10, 0}, {0, 0}).deg(), 180.0, 1e-12);
}

TEST(InitialBearing, MatchesWalkOracle) {
  // 61.659225576666808 from a 40-digit evaluation of the same walk
  const double oracle = test::walk_bearing_deg(50, -30, 40, 60);
  EXPECT_NEAR(oracle, 61.659225576666808, 1e-7);
  EXPECT_LT(test::circ_dist_deg(initial_bearing({50, -30}, {40, 60}).deg(), oracle), 1e-6);
}

TEST(InitialBearing, DegenerateAndAntipodal) {
  EXPECT_EQ(code_of([] { initial_bearing({10, 20}, {10, 20}); }), ErrorCode::DegeneratePoints);
  EXPECT_EQ(code_of([] { initial_bearing({10, 20}, {-10, -160}); }), ErrorCode::AntipodalPoints);
  EXPECT_EQ(code_of([] { initial_bearing({90, 0}, {-90, 0}); }), ErrorCode::AntipodalPoints);
}

TEST(InitialBearing, LongitudeShiftInvariance) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> shift(-720.0, 720.0);
  int checked = 0;
  while (checked < 2000) {
    const auto a = test::random_point(rng);
    const auto b = test::random_point(rng);
    const double sep = angular_separation({a[0], a[1]}, {b[0], b[1]});
    if (sep < 0.1 || sep > 179.9) continue;
    const double d = shift(rng);
    const double base = initial_bearing({a[0], a[1]}, {b[0], b[1]}).deg();
    const double moved = initial_bearing({a[0], a[1] + d}, {b[0], b[1] + d}).deg();
    ASSERT_LT(test::circ_dist_deg(base, moved), 1e-9) << a[0] << ' ' << a[1] << ' ' << d;
    ++checked;
  }
}

TEST(InitialBearing, MirrorSymmetry) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> lat(-89.0, 89.0);
  std::uniform_real_distribution<double> lon(-180.0, 180.0);
  std::uniform_real_distribution<double> off(0.5, 179.0);
  for (int i = 0; i < 2000; ++i) {
    const double la1 = lat(rng);
    const double la2 = lat(rng);
    const double lo = lon(rng);
    const double d = off(rng);
    const double plus = initial_bearing({la1, lo}, {la2, lo + d}).deg();
    const double minus = initial_bearing({la1, lo}, {la2, lo - d}).deg();
    ASSERT_LT(test::circ_dist_deg(minus, 360.0 - plus), 1e-9);
  }
}

TEST(QiblaAzimuth, MeridianCases) {
  EXPECT_EQ(qibla_azimuth({0.0, 39.8262}).deg(), 0.0);
  EXPECT_EQ(qibla_azimuth({45.0, 39.8262}).deg(), 180.0);
  EXPECT_EQ(qibla_azimuth({-90.0, 39.8262}).deg(), 0.0);
  EXPECT_EQ(qibla_azimuth({21.4226, 39.8262}).deg(), 180.0);
  EXPECT_EQ(qibla_azimuth({21.4224, 39.8262}).deg(), 0.0);
}

TEST(QiblaAzimuth, Bandung) {
  const double q = qibla_azimuth(kBandung).deg();
  EXPECT_GT(q, 270.0);
  EXPECT_LT(q, 315.0);
  // 40-digit walk oracle value
  EXPECT_NEAR(q, 295.16883289937746, 1e-6);
  EXPECT_LT(test::circ_dist_deg(q, test::walk_bearing_deg(-6.9147, 107.6098, 21.4225, 39.8262)),
            1e-6);
}

TEST(QiblaAzimuth, KnownCities) {
  EXPECT_NEAR(qibla_azimuth({51.5074, -0.1278}).deg(), 118.98721949633441, 1e-6);
  EXPECT_NEAR(qibla_azimuth({40.7128, -74.0060}).deg(), 58.481701037883703, 1e-6);
  EXPECT_NEAR(qibla_azimuth({-33.8688, 151.2093}).deg(), 277.49958912095151, 1e-6);
}

TEST(QiblaAzimuth, DegeneracyGuard) {
  EXPECT_EQ(code_of([] { qibla_azimuth(kaaba()); }), ErrorCode::DegeneratePoints);
  EXPECT_EQ(code_of([] { qibla_azimuth({-21.4225, 39.8262 - 180.0}); }),
            ErrorCode::AntipodalPoints);
  EXPECT_NO_THROW(qibla_azimuth({21.4225 + 1e-6, 39.8262}));
}

TEST(Distance, Examples) {
  EXPECT_EQ(haversine_distance(kaaba(), kaaba()).km(), 0.0);
  EXPECT_EQ(slc_distance(kaaba(), kaaba()).km(), 0.0);
  EXPECT_NEAR(haversine_distance({0, 0}, {0, 180}).km(), 20015.086796020573, 1e-9 * 20015.0);
  EXPECT_NEAR(slc_distance({0, 0}, {0, 90}).km(), 10007.543398010286, 1e-9 * 10007.0);
  EXPECT_NEAR(haversine_distance({0, 0}, {0, 90}).km(), 10007.543398010286, 1e-9 * 10007.0);
}

TEST(Distance, HaversineMatchesVectorAngle) {
  const double oracle =
      std::acos(test::dot(test::unit(21.4225, 39.8262), test::unit(-6.9147, 107.6098))) * 6371.0;
  const double h = haversine_distance(kaaba(), kBandung).km();
  EXPECT_NEAR(h / oracle, 1.0, 1e-9);
  EXPECT_NEAR(h, 8029.9074309979661, 1e-6);
}

TEST(Distance, SymmetricAndBounded) {
  std::mt19937_64 rng(5);
  const EarthModel model;
  for (int i = 0; i < 5000; ++i) {
    const auto a = test::random_point(rng);
    const auto b = test::random_point(rng);
    const GeoCoordinate p{a[0], a[1]};
    const GeoCoordinate q{b[0], b[1]};
    const double ab = haversine_distance(p, q).km();
    ASSERT_EQ(ab, haversine_distance(q, p).km());
    ASSERT_LE(ab, test::kPi * model.radius_km());
    ASSERT_LE(slc_distance(p, q).km(), test::kPi * model.radius_km());
  }
}

TEST(Distance, CustomRadius) {
  const EarthModel unit(1.0);
  EXPECT_NEAR(haversine_distance({0, 0}, {0, 90}, unit).km(), test::kPi / 2, 1e-15);
  EXPECT_EQ(code_of([] { EarthModel(0.0); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { EarthModel(-5.0); }), ErrorCode::InvalidArgument);
}

TEST(Distance, SmallSeparationUsesHaversine) {
  // 1 m apart: law of cosines is within its documented conditioning, haversine exact
  const GeoCoordinate a{10.0, 20.0};
  const GeoCoordinate b{10.0 + 1e-3 / 111.195, 20.0};
  EXPECT_NEAR(haversine_distance(a, b).km(), 1e-3, 1e-9);
}
