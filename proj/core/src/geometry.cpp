#include "tofplane/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tofplane {

void PlaneGeometry::validate() const {
  require(theta_deg >= 0.0 && theta_deg < 90.0, Errc::invalid_geometry,
          "theta must lie in [0, 90) degrees");
  require(z0_m > 0.0, Errc::invalid_geometry, "z0 must be positive");
  require(phi_deg >= 0.0 && phi_deg < 360.0, Errc::invalid_geometry,
          "phi must lie in [0, 360) degrees");
}

void ImplicitPlane::validate() const {
  require(std::abs(norm(normal) - 1.0) <= 1e-9, Errc::invalid_geometry,
          "plane normal must be unit length");
  require(offset > 0.0, Errc::invalid_geometry, "plane offset must be positive");
}

std::array<ZoneFov, 9> default_zone_grid(double fov_width_deg, double fov_height_deg) {
  const double w = fov_width_deg / 3.0;
  const double h = fov_height_deg / 3.0;
  std::array<ZoneFov, 9> zones;
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 3; ++col) {
      ZoneFov& z = zones[static_cast<std::size_t>(3 * row + col)];
      z.center_x_deg = (col - 1) * w;
      z.center_y_deg = (row - 1) * h;
      z.width_deg = w;
      z.height_deg = h;
      const int off_axis = (row != 1 ? 1 : 0) + (col != 1 ? 1 : 0);
      z.kind = off_axis == 0 ? ZoneKind::center
                             : (off_axis == 1 ? ZoneKind::edge : ZoneKind::corner);
    }
  }
  return zones;
}

void validate_zone_grid(std::span<const ZoneFov> zones) {
  require(zones.size() == 9, Errc::invalid_argument, "zone grid must have 9 zones");
  int centers = 0, edges = 0, corners = 0;
  for (const ZoneFov& z : zones) {
    require(z.width_deg > 0.0 && z.height_deg > 0.0, Errc::invalid_argument,
            "zone extents must be positive");
    switch (z.kind) {
      case ZoneKind::center: ++centers; break;
      case ZoneKind::edge: ++edges; break;
      case ZoneKind::corner: ++corners; break;
    }
  }
  require(centers == 1 && edges == 4 && corners == 4, Errc::invalid_argument,
          "zone grid must have 1 center, 4 edge and 4 corner zones");
}

ImplicitPlane plane_from_geometry(const PlaneGeometry& g) {
  g.validate();
  const auto p = detail::make_plane<double>(g.theta_deg, g.z0_m, g.phi_deg);
  ImplicitPlane out{p.normal, p.offset};
  out.validate();
  return out;
}

PlaneGeometry geometry_from_plane(const ImplicitPlane& p) {
  p.validate();
  const double ct = std::clamp(-p.normal.z, -1.0, 1.0);
  require(ct > 0.0, Errc::invalid_geometry, "plane normal must face the sensor");
  PlaneGeometry g;
  g.theta_deg = rad2deg(std::acos(ct));
  g.z0_m = p.offset / ct;
  if (g.theta_deg < 1e-12) {
    g.phi_deg = 0.0;
  } else {
    double phi = rad2deg(std::atan2(-p.normal.y, -p.normal.x));
    if (phi < 0.0) phi += 360.0;
    if (phi >= 360.0) phi = 0.0;
    g.phi_deg = phi;
  }
  return g;
}

std::optional<Vec3> intersect(const Ray& r, const ImplicitPlane& p) {
  const double t = detail::intersect_range(r.dir, detail::PlaneS<double>{p.normal, p.offset});
  if (t <= 0.0) return std::nullopt;
  return r.dir * t;
}

double angular_error_deg(const ImplicitPlane& a, const ImplicitPlane& b) {
  const double c = std::clamp(dot(a.normal, b.normal), -1.0, 1.0);
  return rad2deg(std::acos(c));
}

double linear_error_m(const ImplicitPlane& a, const ImplicitPlane& b) {
  return std::abs(a.offset - b.offset);
}

std::vector<Ray> point_error_grid(const FieldOfView& fov) {
  std::vector<Ray> rays;
  rays.reserve(64);
  for (int row = 0; row < 8; ++row) {
    for (int col = 0; col < 8; ++col) {
      const double ax = -fov.width_deg / 2.0 + fov.width_deg * (col + 0.5) / 8.0;
      const double ay = -fov.height_deg / 2.0 + fov.height_deg * (row + 0.5) / 8.0;
      rays.push_back(Ray{normalized({std::tan(deg2rad(ax)), std::tan(deg2rad(ay)), 1.0})});
    }
  }
  return rays;
}

double point_error_m(const ImplicitPlane& a, const ImplicitPlane& b, const FieldOfView& fov) {
  a.validate();
  b.validate();
  const std::vector<Ray> rays = point_error_grid(fov);
  double sum = 0.0;
  for (const Ray& r : rays) {
    const auto pa = intersect(r, a);
    const auto pb = intersect(r, b);
    require(pa.has_value() && pb.has_value(), Errc::metric_undefined,
            "point error undefined: a grid ray misses one of the planes");
    sum += norm(*pa - *pb);
  }
  return sum / static_cast<double>(rays.size());
}

namespace {

struct Mat3 {
  double m[3][3]{};
};

/// Cyclic Jacobi eigendecomposition of a symmetric 3x3 matrix. Returns
/// eigenvalues (unordered) and the corresponding eigenvectors as columns of v.
void jacobi_eigen(Mat3 a, double eigval[3], Mat3& v) {
  v = Mat3{};
  v.m[0][0] = v.m[1][1] = v.m[2][2] = 1.0;
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < 2; ++p)
      for (int q = p + 1; q < 3; ++q) off += a.m[p][q] * a.m[p][q];
    if (off < 1e-30) break;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        if (std::abs(a.m[p][q]) < 1e-300) continue;
        const double theta = (a.m[q][q] - a.m[p][p]) / (2.0 * a.m[p][q]);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < 3; ++k) {
          const double akp = a.m[k][p], akq = a.m[k][q];
          a.m[k][p] = c * akp - s * akq;
          a.m[k][q] = s * akp + c * akq;
        }
        for (int k = 0; k < 3; ++k) {
          const double apk = a.m[p][k], aqk = a.m[q][k];
          a.m[p][k] = c * apk - s * aqk;
          a.m[q][k] = s * apk + c * aqk;
        }
        for (int k = 0; k < 3; ++k) {
          const double vkp = v.m[k][p], vkq = v.m[k][q];
          v.m[k][p] = c * vkp - s * vkq;
          v.m[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  for (int i = 0; i < 3; ++i) eigval[i] = a.m[i][i];
}

}  // namespace

ImplicitPlane fit_plane_svd(std::span<const Vec3> points) {
  require(points.size() >= 3, Errc::degenerate_fit, "plane fit needs at least 3 points");
  Vec3 centroid{};
  for (const Vec3& p : points) centroid = centroid + p;
  centroid = centroid * (1.0 / static_cast<double>(points.size()));

  // Scatter matrix of the centered cloud; its smallest eigenvector is the
  // smallest right singular vector of the centered point matrix.
  Mat3 scatter;
  for (const Vec3& p : points) {
    const Vec3 d = p - centroid;
    const double c[3] = {d.x, d.y, d.z};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) scatter.m[i][j] += c[i] * c[j];
  }

  double eigval[3];
  Mat3 eigvec;
  jacobi_eigen(scatter, eigval, eigvec);

  int lo = 0, hi = 0;
  for (int i = 1; i < 3; ++i) {
    if (eigval[i] < eigval[lo]) lo = i;
    if (eigval[i] > eigval[hi]) hi = i;
  }
  int mid = 3 - lo - hi;
  if (lo == hi) mid = lo;  // all equal
  require(eigval[mid] > 1e-12 * std::max(eigval[hi], 1e-300), Errc::degenerate_fit,
          "plane fit is rank deficient (collinear points)");

  Vec3 normal{eigvec.m[0][lo], eigvec.m[1][lo], eigvec.m[2][lo]};
  normal = normalized(normal);
  double offset = -dot(normal, centroid);
  if (offset < 0.0) {
    normal = normal * -1.0;
    offset = -offset;
  }
  require(offset > 0.0, Errc::degenerate_fit, "fitted plane passes through the origin");
  return ImplicitPlane{normal, offset};
}

double rectangle_solid_angle(double x0, double x1, double y0, double y1) {
  const auto corner = [](double x, double y) {
    return std::atan2(x * y, std::sqrt(1.0 + x * x + y * y));
  };
  return corner(x1, y1) - corner(x0, y1) - corner(x1, y0) + corner(x0, y0);
}

namespace {

/// Precomputed state for Urena et al.'s area-preserving spherical-rectangle
/// parameterization, specialized to an axis-aligned rectangle on the z = 1
/// plane seen from the origin. Maps (u, v) in [0,1)^2 to directions uniform
/// over the subtended solid angle.
struct SphericalRectangle {
  double x0, x1, y0, y1;  // rectangle bounds at z = 1
  double z0;              // signed plane distance in the local frame
  double b0, b1, b0sq, k, solid_angle;

  explicit SphericalRectangle(const ZoneFov& zone) {
    const double hw = zone.width_deg / 2.0;
    const double hh = zone.height_deg / 2.0;
    x0 = std::tan(deg2rad(zone.center_x_deg - hw));
    x1 = std::tan(deg2rad(zone.center_x_deg + hw));
    y0 = std::tan(deg2rad(zone.center_y_deg - hh));
    y1 = std::tan(deg2rad(zone.center_y_deg + hh));
    // Local frame flips z so the plane sits at negative z, matching the
    // published construction.
    z0 = -1.0;
    const double z0sq = 1.0;

    const Vec3 v00{x0, y0, z0}, v01{x0, y1, z0}, v10{x1, y0, z0}, v11{x1, y1, z0};
    const Vec3 n0 = normalized(cross(v00, v10));
    const Vec3 n1 = normalized(cross(v10, v11));
    const Vec3 n2 = normalized(cross(v11, v01));
    const Vec3 n3 = normalized(cross(v01, v00));

    const double g0 = std::acos(std::clamp(-dot(n0, n1), -1.0, 1.0));
    const double g1 = std::acos(std::clamp(-dot(n1, n2), -1.0, 1.0));
    const double g2 = std::acos(std::clamp(-dot(n2, n3), -1.0, 1.0));
    const double g3 = std::acos(std::clamp(-dot(n3, n0), -1.0, 1.0));

    b0 = n0.z;
    b1 = n2.z;
    b0sq = b0 * b0;
    k = 2.0 * kPi - g2 - g3;
    solid_angle = g0 + g1 - k;
    (void)z0sq;
  }

  Vec3 sample(double u, double v) const {
    // 1. sample cu along the x sweep
    const double au = u * solid_angle + k;
    const double fu = (std::cos(au) * b0 - b1) / std::sin(au);
    double cu = std::copysign(1.0 / std::sqrt(fu * fu + b0sq), fu);
    cu = std::clamp(cu, -1.0, 1.0);
    // 2. xu on the rectangle
    double xu = -(cu * z0) / std::sqrt(std::max(1.0 - cu * cu, 1e-300));
    xu = std::clamp(xu, x0, x1);
    // 3. yv along the y sweep
    const double dsq = xu * xu + z0 * z0;
    const double d = std::sqrt(dsq);
    const double h0 = y0 / std::sqrt(dsq + y0 * y0);
    const double h1 = y1 / std::sqrt(dsq + y1 * y1);
    const double hv = h0 + v * (h1 - h0);
    const double hv2 = hv * hv;
    const double yv = hv2 < 1.0 - 1e-12 ? (hv * d) / std::sqrt(1.0 - hv2) : y1;
    // 4. back to world space (the local frame negates z)
    return normalized(Vec3{xu, yv, -z0});
  }
};

}  // namespace

std::vector<Ray> sample_zone_rays(const ZoneFov& zone, int count, std::uint64_t seed) {
  require(count >= 1, Errc::invalid_argument, "ray count must be positive");
  const SphericalRectangle rect(zone);
  SplitMix64 rng(seed);
  std::vector<Ray> rays;
  rays.reserve(static_cast<std::size_t>(count));

  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(count))));
  if (side * side == count) {
    // Stratified jittered grid; fixed row-major order keeps accumulation
    // deterministic regardless of downstream parallelism.
    const double inv = 1.0 / side;
    for (int i = 0; i < side; ++i) {
      for (int j = 0; j < side; ++j) {
        const double u = (i + rng.next_double()) * inv;
        const double v = (j + rng.next_double()) * inv;
        rays.push_back(Ray{rect.sample(u, v)});
      }
    }
  } else {
    for (int i = 0; i < count; ++i) {
      const double u = rng.next_double();
      const double v = rng.next_double();
      rays.push_back(Ray{rect.sample(u, v)});
    }
  }
  return rays;
}

}  // namespace tofplane
