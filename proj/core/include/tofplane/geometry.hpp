#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tofplane/error.hpp"
#include "tofplane/math.hpp"

namespace tofplane {

/// Scene parameterization: tilt of the optical axis against the plane,
/// distance along the optical axis, and azimuth of the tilt direction.
/// Angles in degrees at the API boundary.
struct PlaneGeometry {
  double theta_deg = 0.0;  // angle of incidence, [0, 90)
  double z0_m = 0.1;       // plane intersection with the +z optical axis, > 0
  double phi_deg = 0.0;    // azimuth of the tilt direction about +z, [0, 360)

  void validate() const;
};

/// Plane in implicit form normal . x + offset = 0, with the normal unit length
/// and facing the sensor at the origin (normal_z < 0, offset > 0).
struct ImplicitPlane {
  Vec3 normal{0.0, 0.0, -1.0};
  double offset = 0.1;  // meters

  void validate() const;
};

/// Unit direction from the sensor origin into the scene (z > 0).
struct Ray {
  Vec3 dir{0.0, 0.0, 1.0};
};

enum class ZoneKind { center, edge, corner };

/// One of the sensor's 3x3 angular field-of-view rectangles.
struct ZoneFov {
  double center_x_deg = 0.0;
  double center_y_deg = 0.0;
  double width_deg = 11.0;
  double height_deg = 34.0 / 3.0;
  ZoneKind kind = ZoneKind::center;
};

/// Full-sensor angular extent; used by the point-error ray grid.
struct FieldOfView {
  double width_deg = 33.0;
  double height_deg = 34.0;
};

/// 3x3 zone grid covering the full FoV, row-major (y rows, x columns).
/// Index 4 is the center zone; 1/3/5/7 are edges; 0/2/6/8 corners.
std::array<ZoneFov, 9> default_zone_grid(double fov_width_deg = 33.0,
                                         double fov_height_deg = 34.0);

/// Checks the 1-center / 4-edge / 4-corner layout invariant.
void validate_zone_grid(std::span<const ZoneFov> zones);

ImplicitPlane plane_from_geometry(const PlaneGeometry& g);

/// Inverse of plane_from_geometry. phi is reported as 0 for fronto-parallel
/// planes, where it is unidentifiable.
PlaneGeometry geometry_from_plane(const ImplicitPlane& p);

/// Point where the ray meets the plane, or nullopt when the ray runs parallel
/// to or away from it.
std::optional<Vec3> intersect(const Ray& r, const ImplicitPlane& p);

double angular_error_deg(const ImplicitPlane& a, const ImplicitPlane& b);
double linear_error_m(const ImplicitPlane& a, const ImplicitPlane& b);

/// Deterministic 8x8 ray grid, uniform in angle over the full FoV; rays are
/// cell centers in row-major order.
std::vector<Ray> point_error_grid(const FieldOfView& fov);

/// Mean distance between per-ray plane intersections over the 8x8 grid.
/// Throws metric_undefined if any grid ray misses either plane.
double point_error_m(const ImplicitPlane& a, const ImplicitPlane& b, const FieldOfView& fov);

/// Total least squares plane through >= 3 non-collinear points, oriented to
/// face the origin.
ImplicitPlane fit_plane_svd(std::span<const Vec3> points);

/// Rays uniform over the solid angle of the zone's angular rectangle.
/// Deterministic for a fixed seed. Counts that are perfect squares are
/// stratified on a jittered sqrt(count) grid; other counts sample plainly.
std::vector<Ray> sample_zone_rays(const ZoneFov& zone, int count, std::uint64_t seed);

/// Exact solid angle of an angular rectangle spanning [x0,x1]x[y0,y1] in
/// tangent space on the z=1 plane.
double rectangle_solid_angle(double x0, double x1, double y0, double y1);

namespace detail {

template <class T>
struct PlaneS {
  Vec3T<T> normal;
  T offset;
};

/// Scalar-generic core of plane_from_geometry; angles in degrees.
template <class T>
PlaneS<T> make_plane(const T& theta_deg, const T& z0_m, const T& phi_deg) {
  using std::cos;
  using std::sin;
  const T tr = theta_deg * (kPi / 180.0);
  const T pr = phi_deg * (kPi / 180.0);
  const T st = sin(tr);
  PlaneS<T> p;
  p.normal = Vec3T<T>{-(st * cos(pr)), -(st * sin(pr)), -cos(tr)};
  p.offset = z0_m * cos(tr);
  return p;
}

/// Range along `dir` (unit, z>0) to the plane; negative value means no hit.
template <class T>
T intersect_range(const Vec3& dir, const PlaneS<T>& plane) {
  const T denom = dot(plane.normal, dir);
  if (value_of(denom) >= 0.0) return T(-1.0);
  return -plane.offset / denom;
}

}  // namespace detail

}  // namespace tofplane
