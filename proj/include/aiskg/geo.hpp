#pragma once

// Spherical geodesy and geohash indexing.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <string>
#include <string_view>

#include "aiskg/error.hpp"

namespace aiskg {

inline constexpr double kEarthRadiusKm = 6371.0088;
inline constexpr double kKmPerNauticalMile = 1.852;
inline constexpr int kDefaultPrecision = 3;
inline constexpr int kMaxPrecision = 12;
inline constexpr std::string_view kGeohashAlphabet = "0123456789bcdefghjkmnpqrstuvwxyz";

struct Position {
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const Position&, const Position&) = default;
};

inline bool is_valid(const Position& p) {
  return std::isfinite(p.lat) && std::isfinite(p.lon) && p.lat >= -90.0 && p.lat <= 90.0 &&
         p.lon >= -180.0 && p.lon <= 180.0;
}

// Maps lon = 180 onto -180 so the antimeridian has one representation.
inline Position normalized(Position p) {
  if (p.lon == 180.0) p.lon = -180.0;
  return p;
}

// Validates and normalizes; throws InvalidArgument outside the valid range.
inline Position make_position(double lat, double lon) {
  Position p{lat, lon};
  if (!is_valid(p)) {
    throw InvalidArgument("position out of range: " + std::to_string(lat) + "," + std::to_string(lon));
  }
  return normalized(p);
}

namespace detail {
inline constexpr double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
inline constexpr double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }
}  // namespace detail

/// Great-circle distance in km on the mean-radius sphere.
inline double haversine_km(const Position& a, const Position& b) {
  const double phi1 = detail::deg2rad(a.lat);
  const double phi2 = detail::deg2rad(b.lat);
  const double dphi = phi2 - phi1;
  const double dlambda = detail::deg2rad(b.lon - a.lon);
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  h = std::min(1.0, std::max(0.0, h));
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

/// Initial great-circle bearing from a toward b, degrees clockwise from north in [0, 360).
/// Throws DegenerateBearing when the two positions coincide.
inline double initial_bearing(const Position& a, const Position& b) {
  if (normalized(a) == normalized(b)) {
    throw DegenerateBearing("bearing between identical positions");
  }
  const double phi1 = detail::deg2rad(a.lat);
  const double phi2 = detail::deg2rad(b.lat);
  const double dlambda = detail::deg2rad(b.lon - a.lon);
  const double y = std::sin(dlambda) * std::cos(phi2);
  const double x = std::cos(phi1) * std::sin(phi2) - std::sin(phi1) * std::cos(phi2) * std::cos(dlambda);
  double deg = detail::rad2deg(std::atan2(y, x));
  deg = std::fmod(deg + 360.0, 360.0);
  if (deg >= 360.0) deg = 0.0;
  return deg;
}

/// Point reached after travelling distance_km from p on the initial bearing.
inline Position destination_point(const Position& p, double bearing_deg, double distance_km) {
  const double delta = distance_km / kEarthRadiusKm;
  const double theta = detail::deg2rad(bearing_deg);
  const double phi1 = detail::deg2rad(p.lat);
  const double lambda1 = detail::deg2rad(p.lon);
  const double sin_phi2 = std::sin(phi1) * std::cos(delta) + std::cos(phi1) * std::sin(delta) * std::cos(theta);
  const double phi2 = std::asin(std::min(1.0, std::max(-1.0, sin_phi2)));
  const double lambda2 = lambda1 + std::atan2(std::sin(theta) * std::sin(delta) * std::cos(phi1),
                                              std::cos(delta) - std::sin(phi1) * sin_phi2);
  double lon = std::fmod(detail::rad2deg(lambda2) + 540.0, 360.0) - 180.0;
  return normalized({detail::rad2deg(phi2), lon});
}

/// Point at fraction f in [0, 1] along the great circle from a to b.
inline Position interpolate(const Position& a, const Position& b, double f) {
  const double d = haversine_km(a, b);
  if (d == 0.0) return a;
  return destination_point(a, initial_bearing(a, b), d * f);
}

// ---------------------------------------------------------------------------
// Geohash

struct BoundingBox {
  double lat_min = 0.0;
  double lat_max = 0.0;
  double lon_min = 0.0;
  double lon_max = 0.0;

  Position center() const { return {(lat_min + lat_max) / 2.0, (lon_min + lon_max) / 2.0}; }

  // Half-open on the upper edges, matching the ">= midpoint goes high" bisection;
  // the global north pole and lon 180 are closed.
  bool contains(const Position& raw) const {
    const Position p = normalized(raw);
    const bool lat_ok = p.lat >= lat_min && (p.lat < lat_max || (lat_max == 90.0 && p.lat == 90.0));
    const bool lon_ok = p.lon >= lon_min && (p.lon < lon_max || (lon_max == 180.0 && p.lon == 180.0));
    return lat_ok && lon_ok;
  }
};

/// A geohash cell stored as its interleaved bits plus character count.
/// Ordering matches lexicographic ordering of the code strings at equal precision.
class GeohashCell {
 public:
  GeohashCell() = default;

  static GeohashCell from_position(const Position& raw, int precision = kDefaultPrecision) {
    if (precision < 1 || precision > kMaxPrecision) {
      throw InvalidArgument("geohash precision must be in [1, 12]");
    }
    const Position p = normalized(raw);
    double lat_lo = -90.0, lat_hi = 90.0;
    double lon_lo = -180.0, lon_hi = 180.0;
    std::uint64_t bits = 0;
    const int nbits = precision * 5;
    for (int i = 0; i < nbits; ++i) {
      bits <<= 1;
      if (i % 2 == 0) {
        const double mid = (lon_lo + lon_hi) / 2.0;
        if (p.lon >= mid) {
          bits |= 1u;
          lon_lo = mid;
        } else {
          lon_hi = mid;
        }
      } else {
        const double mid = (lat_lo + lat_hi) / 2.0;
        if (p.lat >= mid) {
          bits |= 1u;
          lat_lo = mid;
        } else {
          lat_hi = mid;
        }
      }
    }
    return GeohashCell(bits, static_cast<std::uint8_t>(precision));
  }

  static GeohashCell parse(std::string_view code) {
    if (code.empty() || code.size() > static_cast<std::size_t>(kMaxPrecision)) {
      throw InvalidGeohash("bad geohash length: '" + std::string(code) + "'");
    }
    std::uint64_t bits = 0;
    for (char c : code) {
      const auto idx = kGeohashAlphabet.find(c);
      if (idx == std::string_view::npos) {
        throw InvalidGeohash("character '" + std::string(1, c) + "' not in geohash alphabet in '" +
                             std::string(code) + "'");
      }
      bits = (bits << 5) | idx;
    }
    return GeohashCell(bits, static_cast<std::uint8_t>(code.size()));
  }

  std::string str() const {
    std::string out(precision_, '0');
    std::uint64_t b = bits_;
    for (int i = precision_ - 1; i >= 0; --i) {
      out[static_cast<std::size_t>(i)] = kGeohashAlphabet[b & 31u];
      b >>= 5;
    }
    return out;
  }

  BoundingBox bbox() const {
    BoundingBox box{-90.0, 90.0, -180.0, 180.0};
    const int nbits = precision_ * 5;
    for (int i = 0; i < nbits; ++i) {
      const bool bit = (bits_ >> (nbits - 1 - i)) & 1u;
      if (i % 2 == 0) {
        const double mid = (box.lon_min + box.lon_max) / 2.0;
        (bit ? box.lon_min : box.lon_max) = mid;
      } else {
        const double mid = (box.lat_min + box.lat_max) / 2.0;
        (bit ? box.lat_min : box.lat_max) = mid;
      }
    }
    return box;
  }

  Position center() const { return bbox().center(); }
  std::uint64_t bits() const { return bits_; }
  int precision() const { return precision_; }

  friend auto operator<=>(const GeohashCell&, const GeohashCell&) = default;

 private:
  GeohashCell(std::uint64_t bits, std::uint8_t precision) : precision_(precision), bits_(bits) {}

  // precision_ first so that cells of different precision never interleave.
  std::uint8_t precision_ = 0;
  std::uint64_t bits_ = 0;
};

inline std::string geohash_encode(const Position& p, int precision = kDefaultPrecision) {
  return GeohashCell::from_position(p, precision).str();
}

/// Bounding box of a geohash string; throws InvalidGeohash on bad characters.
inline BoundingBox geohash_decode_bbox(std::string_view code) { return GeohashCell::parse(code).bbox(); }

// ---------------------------------------------------------------------------
// Compass sectors

enum class Direction : std::uint8_t { N, NE, E, SE, S, SW, W, NW };

inline constexpr int kDirectionCount = 8;
inline constexpr std::array<Direction, kDirectionCount> kAllDirections{
    Direction::N, Direction::NE, Direction::E, Direction::SE,
    Direction::S, Direction::SW, Direction::W, Direction::NW};

inline std::string_view to_string(Direction d) {
  static constexpr std::array<std::string_view, kDirectionCount> names{"N", "NE", "E", "SE",
                                                                       "S", "SW", "W", "NW"};
  return names[static_cast<std::size_t>(d)];
}

inline Direction parse_direction(std::string_view s) {
  for (Direction d : kAllDirections) {
    if (to_string(d) == s) return d;
  }
  throw InvalidArgument("unknown direction '" + std::string(s) + "'");
}

/// 45-degree sectors centred on each compass point; a boundary belongs to the
/// clockwise-next sector (22.5 -> NE).
inline Direction quantize_direction(double bearing_deg) {
  double b = std::fmod(bearing_deg, 360.0);
  if (b < 0.0) b += 360.0;
  const int sector = static_cast<int>(std::floor((b + 22.5) / 45.0)) % kDirectionCount;
  return static_cast<Direction>(sector);
}

}  // namespace aiskg

template <>
struct std::hash<aiskg::GeohashCell> {
  std::size_t operator()(const aiskg::GeohashCell& c) const noexcept {
    return std::hash<std::uint64_t>{}(c.bits() * 31u + static_cast<std::uint64_t>(c.precision()));
  }
};
