#ifndef RAILTRACE_GEO_HPP
#define RAILTRACE_GEO_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <sstream>
#include <vector>

#include "railtrace/error.hpp"

namespace railtrace {

inline constexpr double kEarthRadiusM = 6'371'000.0;
inline constexpr double kMetersPerFoot = 0.3048;

constexpr double feet_to_m(double feet) { return feet * kMetersPerFoot; }

constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

/// WGS84 position in degrees. Construction rejects non-finite or
/// out-of-range coordinates, so every live GeoPoint is valid.
class GeoPoint {
 public:
  GeoPoint(double lat, double lon) : lat_(lat), lon_(lon) {
    if (!std::isfinite(lat) || !std::isfinite(lon) || lat < -90.0 || lat > 90.0 ||
        lon < -180.0 || lon > 180.0) {
      std::ostringstream msg;
      msg << "coordinate (" << lat << ", " << lon << ") outside WGS84 range";
      throw Error(ErrorCode::CoordinateOutOfRange, msg.str());
    }
  }

  double lat() const noexcept { return lat_; }
  double lon() const noexcept { return lon_; }

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;

 private:
  double lat_;
  double lon_;
};

inline double haversine_m(const GeoPoint& a, const GeoPoint& b) {
  const double dlat = deg_to_rad(b.lat() - a.lat());
  const double dlon = deg_to_rad(b.lon() - a.lon());
  const double s1 = std::sin(dlat / 2.0);
  const double s2 = std::sin(dlon / 2.0);
  double h = s1 * s1 + std::cos(deg_to_rad(a.lat())) * std::cos(deg_to_rad(b.lat())) * s2 * s2;
  h = std::min(1.0, h);
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(h));
}

/// Linear interpolation in the lon/lat plane.
inline GeoPoint lerp(const GeoPoint& a, const GeoPoint& b, double t) {
  if (t <= 0.0) return a;
  if (t >= 1.0) return b;
  return GeoPoint(a.lat() + t * (b.lat() - a.lat()), a.lon() + t * (b.lon() - a.lon()));
}

class Polyline {
 public:
  explicit Polyline(std::vector<GeoPoint> vertices) : vertices_(std::move(vertices)) {
    if (vertices_.size() < 2) {
      throw Error(ErrorCode::InvalidGeometry, "polyline needs at least 2 vertices");
    }
    for (std::size_t i = 1; i < vertices_.size(); ++i) {
      if (vertices_[i] == vertices_[i - 1]) {
        throw Error(ErrorCode::InvalidGeometry,
                    "polyline has repeated consecutive vertex at index " + std::to_string(i));
      }
    }
    cumulative_m_.reserve(vertices_.size());
    cumulative_m_.push_back(0.0);
    for (std::size_t i = 1; i < vertices_.size(); ++i) {
      cumulative_m_.push_back(cumulative_m_.back() + haversine_m(vertices_[i - 1], vertices_[i]));
    }
  }

  std::span<const GeoPoint> vertices() const noexcept { return vertices_; }
  std::size_t size() const noexcept { return vertices_.size(); }
  const GeoPoint& front() const { return vertices_.front(); }
  const GeoPoint& back() const { return vertices_.back(); }
  double length_m() const noexcept { return cumulative_m_.back(); }
  /// Haversine length from the first vertex to vertex i.
  double cumulative_m(std::size_t i) const { return cumulative_m_.at(i); }

  friend bool operator==(const Polyline& a, const Polyline& b) { return a.vertices_ == b.vertices_; }

 private:
  std::vector<GeoPoint> vertices_;
  std::vector<double> cumulative_m_;
};

struct PolylineDistance {
  double distance_m;
  double fraction;  // position of the nearest point along the line, in [0, 1]
};

/// Nearest point on `line` to `p`. Each segment is projected in an
/// equirectangular frame centred on `p`; the reported distance is the
/// haversine distance to the projected point. Equal distances resolve to the
/// lowest segment index.
inline PolylineDistance point_to_polyline_m(const GeoPoint& p, const Polyline& line) {
  const double ky = kEarthRadiusM * std::numbers::pi / 180.0;
  const double kx = ky * std::cos(deg_to_rad(p.lat()));
  auto vertices = line.vertices();

  double best = std::numeric_limits<double>::infinity();
  double best_along = 0.0;
  for (std::size_t i = 0; i + 1 < vertices.size(); ++i) {
    const GeoPoint& a = vertices[i];
    const GeoPoint& b = vertices[i + 1];
    const double ax = (a.lon() - p.lon()) * kx;
    const double ay = (a.lat() - p.lat()) * ky;
    const double bx = (b.lon() - p.lon()) * kx;
    const double by = (b.lat() - p.lat()) * ky;
    const double dx = bx - ax;
    const double dy = by - ay;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0.0 ? -(ax * dx + ay * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double d = haversine_m(p, lerp(a, b, t));
    if (d < best) {
      best = d;
      const double seg = line.cumulative_m(i + 1) - line.cumulative_m(i);
      best_along = line.cumulative_m(i) + t * seg;
    }
  }
  const double total = line.length_m();
  return {best, total > 0.0 ? std::clamp(best_along / total, 0.0, 1.0) : 0.0};
}

/// Closed ring (first == last) with at least 4 vertices including closure.
class Ring {
 public:
  explicit Ring(std::vector<GeoPoint> vertices) : vertices_(std::move(vertices)) {
    if (vertices_.size() < 4) {
      throw Error(ErrorCode::InvalidRing, "ring needs at least 4 vertices including closure");
    }
    if (!(vertices_.front() == vertices_.back())) {
      throw Error(ErrorCode::InvalidRing, "ring is not closed");
    }
  }

  std::span<const GeoPoint> vertices() const noexcept { return vertices_; }

  friend bool operator==(const Ring&, const Ring&) = default;

 private:
  std::vector<GeoPoint> vertices_;
};

enum class RingSide { Outside, Boundary, Inside };

namespace detail {

inline double cross(double ox, double oy, double ax, double ay, double bx, double by) {
  return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox);
}

inline bool on_segment(const GeoPoint& p, const GeoPoint& a, const GeoPoint& b) {
  if (cross(a.lon(), a.lat(), b.lon(), b.lat(), p.lon(), p.lat()) != 0.0) return false;
  return p.lon() >= std::min(a.lon(), b.lon()) && p.lon() <= std::max(a.lon(), b.lon()) &&
         p.lat() >= std::min(a.lat(), b.lat()) && p.lat() <= std::max(a.lat(), b.lat());
}

inline int sign(double v) { return (v > 0.0) - (v < 0.0); }

inline bool segments_intersect(const GeoPoint& a, const GeoPoint& b, const GeoPoint& c,
                               const GeoPoint& d) {
  const int d1 = sign(cross(c.lon(), c.lat(), d.lon(), d.lat(), a.lon(), a.lat()));
  const int d2 = sign(cross(c.lon(), c.lat(), d.lon(), d.lat(), b.lon(), b.lat()));
  const int d3 = sign(cross(a.lon(), a.lat(), b.lon(), b.lat(), c.lon(), c.lat()));
  const int d4 = sign(cross(a.lon(), a.lat(), b.lon(), b.lat(), d.lon(), d.lat()));
  if (d1 * d2 < 0 && d3 * d4 < 0) return true;
  return (d1 == 0 && on_segment(a, c, d)) || (d2 == 0 && on_segment(b, c, d)) ||
         (d3 == 0 && on_segment(c, a, b)) || (d4 == 0 && on_segment(d, a, b));
}

}  // namespace detail

/// Ray casting in the lon/lat plane with an explicit boundary test.
inline RingSide ring_side(const GeoPoint& p, const Ring& ring) {
  auto v = ring.vertices();
  bool inside = false;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    const GeoPoint& a = v[i];
    const GeoPoint& b = v[i + 1];
    if (detail::on_segment(p, a, b)) return RingSide::Boundary;
    if ((a.lat() > p.lat()) != (b.lat() > p.lat())) {
      const double x = a.lon() + (p.lat() - a.lat()) * (b.lon() - a.lon()) / (b.lat() - a.lat());
      if (p.lon() < x) inside = !inside;
    }
  }
  return inside ? RingSide::Inside : RingSide::Outside;
}

/// True when no two non-adjacent edges touch and adjacent edges meet only at
/// their shared vertex.
inline bool ring_is_simple(const Ring& ring) {
  auto v = ring.vertices();
  const std::size_t n = v.size() - 1;  // edge count
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent) {
        // Shared vertex is expected; collinear backtracking is not.
        const GeoPoint& shared = (j == i + 1) ? v[j] : v[0];
        const GeoPoint& other_i = (j == i + 1) ? v[i] : v[1];
        const GeoPoint& other_j = (j == i + 1) ? v[j + 1] : v[n - 1];
        if (detail::on_segment(other_j, v[i], v[i + 1]) && !(other_j == shared)) return false;
        if (detail::on_segment(other_i, v[j], v[j + 1]) && !(other_i == shared)) return false;
        continue;
      }
      if (detail::segments_intersect(v[i], v[i + 1], v[j], v[j + 1])) return false;
    }
  }
  return true;
}

class Polygon {
 public:
  explicit Polygon(Ring exterior, std::vector<Ring> holes = {})
      : exterior_(std::move(exterior)), holes_(std::move(holes)) {}

  const Ring& exterior() const noexcept { return exterior_; }
  std::span<const Ring> holes() const noexcept { return holes_; }

  friend bool operator==(const Polygon&, const Polygon&) = default;

 private:
  Ring exterior_;
  std::vector<Ring> holes_;
};

/// Boundary points (of the exterior or of a hole) count as inside.
inline bool point_in_polygon(const GeoPoint& p, const Polygon& poly) {
  if (ring_side(p, poly.exterior()) == RingSide::Outside) return false;
  for (const Ring& hole : poly.holes()) {
    if (ring_side(p, hole) == RingSide::Inside) return false;
  }
  return true;
}

struct BoundingBox {
  double min_lat = std::numeric_limits<double>::infinity();
  double min_lon = std::numeric_limits<double>::infinity();
  double max_lat = -std::numeric_limits<double>::infinity();
  double max_lon = -std::numeric_limits<double>::infinity();

  void extend(const GeoPoint& p) {
    min_lat = std::min(min_lat, p.lat());
    min_lon = std::min(min_lon, p.lon());
    max_lat = std::max(max_lat, p.lat());
    max_lon = std::max(max_lon, p.lon());
  }
  bool contains(const GeoPoint& p) const {
    return p.lat() >= min_lat && p.lat() <= max_lat && p.lon() >= min_lon && p.lon() <= max_lon;
  }
};

inline BoundingBox bounds_of(std::span<const GeoPoint> points) {
  BoundingBox box;
  for (const auto& p : points) box.extend(p);
  return box;
}

}  // namespace railtrace

#endif  // RAILTRACE_GEO_HPP
