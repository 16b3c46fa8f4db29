#include <cmath>
#include <vector>

#include <doctest.h>

#include "tofplane/geometry.hpp"

using namespace tofplane;

namespace {

PlaneGeometry random_geometry(SplitMix64& rng) {
  return PlaneGeometry{rng.next_double() * 60.0, 0.05 + rng.next_double() * 0.6,
                       rng.next_double() * 360.0};
}

}  // namespace

TEST_CASE("plane_from_geometry fronto-parallel") {
  const ImplicitPlane p = plane_from_geometry({0.0, 0.2, 0.0});
  CHECK(p.normal.x == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(p.normal.y == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(p.normal.z == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(p.offset == doctest::Approx(0.2).epsilon(1e-12));

  // azimuth has no effect at theta = 0
  const ImplicitPlane q = plane_from_geometry({0.0, 0.2, 137.0});
  CHECK(q.normal.z == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(q.offset == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("plane_from_geometry tilted offset") {
  const ImplicitPlane p = plane_from_geometry({30.0, 0.2, 0.0});
  CHECK(p.offset == doctest::Approx(0.2 * std::cos(deg2rad(30.0))).epsilon(1e-12));
  CHECK(p.offset == doctest::Approx(0.17320508).epsilon(1e-6));
  // phi = 0 tilts the near edge toward +x: normal x component negative
  CHECK(p.normal.x == doctest::Approx(-std::sin(deg2rad(30.0))).epsilon(1e-12));
  CHECK(p.normal.z == doctest::Approx(-std::cos(deg2rad(30.0))).epsilon(1e-12));
}

TEST_CASE("plane_from_geometry rejects invalid input") {
  CHECK_THROWS_AS(plane_from_geometry({90.0, 0.2, 0.0}), Error);
  CHECK_THROWS_AS(plane_from_geometry({-1.0, 0.2, 0.0}), Error);
  CHECK_THROWS_AS(plane_from_geometry({10.0, 0.0, 0.0}), Error);
  CHECK_THROWS_AS(plane_from_geometry({10.0, -0.2, 0.0}), Error);
  CHECK_THROWS_AS(plane_from_geometry({10.0, 0.2, 360.0}), Error);
}

TEST_CASE("plane geometry round trip") {
  SplitMix64 rng(11);
  for (int i = 0; i < 200; ++i) {
    const PlaneGeometry g = random_geometry(rng);
    const ImplicitPlane p = plane_from_geometry(g);
    // plane contains (0, 0, z0) and faces the sensor
    CHECK(std::abs(dot(p.normal, Vec3{0.0, 0.0, g.z0_m}) + p.offset) < 1e-12);
    CHECK(p.normal.z < 0.0);
    CHECK(p.offset > 0.0);

    CHECK(rad2deg(std::acos(-p.normal.z)) == doctest::Approx(g.theta_deg).epsilon(1e-9));
    CHECK(p.offset / std::cos(deg2rad(g.theta_deg)) == doctest::Approx(g.z0_m).epsilon(1e-9));

    const PlaneGeometry back = geometry_from_plane(p);
    CHECK(back.theta_deg == doctest::Approx(g.theta_deg).epsilon(1e-9));
    CHECK(back.z0_m == doctest::Approx(g.z0_m).epsilon(1e-9));
    if (g.theta_deg > 1e-6) {
      const double dphi = std::abs(back.phi_deg - g.phi_deg);
      CHECK(std::min(dphi, 360.0 - dphi) < 1e-8);
    }
  }
}

TEST_CASE("intersect axial and oblique rays") {
  const ImplicitPlane fronto{{0.0, 0.0, -1.0}, 0.2};
  const auto hit = intersect(Ray{{0.0, 0.0, 1.0}}, fronto);
  REQUIRE(hit.has_value());
  CHECK(hit->x == doctest::Approx(0.0));
  CHECK(hit->y == doctest::Approx(0.0));
  CHECK(hit->z == doctest::Approx(0.2).epsilon(1e-12));

  // plane behind the sensor
  const ImplicitPlane behind{{0.0, 0.0, 1.0}, 0.2};
  CHECK(!intersect(Ray{{0.0, 0.0, 1.0}}, behind).has_value());

  // closed form t = d / dir_z for a fronto plane
  const double a = deg2rad(10.0);
  const auto oblique = intersect(Ray{{0.0, std::sin(a), std::cos(a)}}, fronto);
  REQUIRE(oblique.has_value());
  CHECK(oblique->z == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(norm(*oblique) == doctest::Approx(0.2 / std::cos(a)).epsilon(1e-12));
}

TEST_CASE("intersect satisfies the plane equation") {
  SplitMix64 rng(12);
  for (int i = 0; i < 500; ++i) {
    const ImplicitPlane p = plane_from_geometry(random_geometry(rng));
    const double ax = (rng.next_double() - 0.5) * deg2rad(50.0);
    const double ay = (rng.next_double() - 0.5) * deg2rad(50.0);
    const Ray r{normalized({std::tan(ax), std::tan(ay), 1.0})};
    const auto hit = intersect(r, p);
    if (!hit) continue;
    CHECK(std::abs(dot(p.normal, *hit) + p.offset) < 1e-9);
  }
}

TEST_CASE("angular and linear error") {
  const ImplicitPlane p1 = plane_from_geometry({0.0, 0.2, 0.0});
  CHECK(angular_error_deg(p1, p1) == doctest::Approx(0.0));
  CHECK(linear_error_m(p1, p1) == doctest::Approx(0.0));

  const double a = deg2rad(5.0);
  const ImplicitPlane p2{{0.0, std::sin(a), -std::cos(a)}, 0.2};
  CHECK(angular_error_deg(p1, p2) == doctest::Approx(5.0).epsilon(1e-9));
  CHECK(angular_error_deg(p2, p1) == doctest::Approx(angular_error_deg(p1, p2)));

  const ImplicitPlane p3 = plane_from_geometry({0.0, 0.25, 0.0});
  CHECK(linear_error_m(p1, p3) == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(linear_error_m(p3, p1) == doctest::Approx(0.05).epsilon(1e-12));
}

TEST_CASE("point error against the grid brute force") {
  const FieldOfView fov{33.0, 34.0};
  const ImplicitPlane p1 = plane_from_geometry({0.0, 0.20, 0.0});
  const ImplicitPlane p2 = plane_from_geometry({0.0, 0.21, 0.0});

  CHECK(point_error_m(p1, p1, fov) == doctest::Approx(0.0));

  // independent recomputation: 0.01 * mean(1 / dir_z) over the 8x8 grid
  double expected = 0.0;
  for (int row = 0; row < 8; ++row) {
    for (int col = 0; col < 8; ++col) {
      const double ax = deg2rad(-16.5 + 33.0 * (col + 0.5) / 8.0);
      const double ay = deg2rad(-17.0 + 34.0 * (row + 0.5) / 8.0);
      const double tx = std::tan(ax), ty = std::tan(ay);
      expected += 0.01 * std::sqrt(1.0 + tx * tx + ty * ty) / 64.0;
    }
  }
  CHECK(point_error_m(p1, p2, fov) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(point_error_m(p2, p1, fov) == doctest::Approx(point_error_m(p1, p2, fov)));
}

TEST_CASE("point error grows with parallel plane separation") {
  const FieldOfView fov{33.0, 34.0};
  const ImplicitPlane base = plane_from_geometry({0.0, 0.20, 0.0});
  double prev = 0.0;
  for (double dz = 0.01; dz <= 0.05; dz += 0.01) {
    const double e = point_error_m(base, plane_from_geometry({0.0, 0.20 + dz, 0.0}), fov);
    CHECK(e > prev);
    prev = e;
  }
}

TEST_CASE("point error undefined when a grid ray misses") {
  const FieldOfView fov{33.0, 34.0};
  const double a = deg2rad(89.9);
  const ImplicitPlane steep{{-std::sin(a), 0.0, -std::cos(a)}, 0.05};
  const ImplicitPlane fronto = plane_from_geometry({0.0, 0.2, 0.0});
  CHECK_THROWS_AS(point_error_m(steep, fronto, fov), Error);
}

TEST_CASE("fit_plane_svd exact and perturbed") {
  const ImplicitPlane truth = plane_from_geometry({25.0, 0.3, 60.0});
  std::vector<Vec3> pts;
  SplitMix64 rng(13);
  for (int i = 0; i < 9; ++i) {
    const double ax = (rng.next_double() - 0.5) * deg2rad(30.0);
    const double ay = (rng.next_double() - 0.5) * deg2rad(30.0);
    const auto hit = intersect(Ray{normalized({std::tan(ax), std::tan(ay), 1.0})}, truth);
    REQUIRE(hit.has_value());
    pts.push_back(*hit);
  }
  const ImplicitPlane fit = fit_plane_svd(pts);
  CHECK(point_error_m(fit, truth, FieldOfView{33.0, 34.0}) < 1e-9);

  // symmetric +/- epsilon perturbation along the normal cancels exactly
  std::vector<Vec3> perturbed;
  for (const Vec3& p : pts) {
    perturbed.push_back(p + truth.normal * 1e-3);
    perturbed.push_back(p - truth.normal * 1e-3);
  }
  const ImplicitPlane fit2 = fit_plane_svd(perturbed);
  CHECK(angular_error_deg(fit2, truth) < 1e-7);
  CHECK(std::abs(fit2.offset - truth.offset) < 1e-9);
}

namespace {

/// z-regression least squares oracle: fits z = px + qy + r via the normal
/// equations, then converts to implicit form facing the origin.
ImplicitPlane normal_equation_plane(const std::vector<Vec3>& pts) {
  double sxx = 0, sxy = 0, sx = 0, syy = 0, sy = 0, s1 = 0, sxz = 0, syz = 0, sz = 0;
  for (const Vec3& p : pts) {
    sxx += p.x * p.x;
    sxy += p.x * p.y;
    sx += p.x;
    syy += p.y * p.y;
    sy += p.y;
    s1 += 1.0;
    sxz += p.x * p.z;
    syz += p.y * p.z;
    sz += p.z;
  }
  // Solve the 3x3 system [sxx sxy sx; sxy syy sy; sx sy s1] (p q r)^T = (sxz syz sz)^T
  double m[3][4] = {{sxx, sxy, sx, sxz}, {sxy, syy, sy, syz}, {sx, sy, s1, sz}};
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int row = col + 1; row < 3; ++row)
      if (std::abs(m[row][col]) > std::abs(m[piv][col])) piv = row;
    std::swap(m[piv], m[col]);
    for (int row = 0; row < 3; ++row) {
      if (row == col) continue;
      const double f = m[row][col] / m[col][col];
      for (int k = col; k < 4; ++k) m[row][k] -= f * m[col][k];
    }
  }
  const double p = m[0][3] / m[0][0];
  const double q = m[1][3] / m[1][1];
  const double r = m[2][3] / m[2][2];
  // z = px + qy + r  ->  (p, q, -1) . x + r = 0
  const double n = std::sqrt(p * p + q * q + 1.0);
  Vec3 normal{p / n, q / n, -1.0 / n};
  double offset = r / n;
  if (offset < 0.0) {
    normal = normal * -1.0;
    offset = -offset;
  }
  return ImplicitPlane{normal, offset};
}

}  // namespace

TEST_CASE("fit_plane_svd matches the normal-equation oracle on low-noise clouds") {
  SplitMix64 rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    const ImplicitPlane truth = plane_from_geometry(
        {5.0 + rng.next_double() * 30.0, 0.15 + rng.next_double() * 0.3,
         rng.next_double() * 360.0});
    std::vector<Vec3> pts;
    for (int i = 0; i < 40; ++i) {
      const double ax = (rng.next_double() - 0.5) * deg2rad(40.0);
      const double ay = (rng.next_double() - 0.5) * deg2rad(40.0);
      const auto hit = intersect(Ray{normalized({std::tan(ax), std::tan(ay), 1.0})}, truth);
      REQUIRE(hit.has_value());
      Vec3 p = *hit;
      p.z += (rng.next_double() - 0.5) * 2e-4;
      pts.push_back(p);
    }
    const ImplicitPlane svd = fit_plane_svd(pts);
    const ImplicitPlane oracle = normal_equation_plane(pts);
    CHECK(std::abs(svd.normal.x - oracle.normal.x) < 1e-6);
    CHECK(std::abs(svd.normal.y - oracle.normal.y) < 1e-6);
    CHECK(std::abs(svd.normal.z - oracle.normal.z) < 1e-6);
    CHECK(std::abs(svd.offset - oracle.offset) < 1e-6);
  }
}

TEST_CASE("fit_plane_svd degenerate inputs") {
  std::vector<Vec3> two{{0.0, 0.0, 0.2}, {0.1, 0.0, 0.2}};
  CHECK_THROWS_AS(fit_plane_svd(two), Error);

  std::vector<Vec3> collinear;
  for (int i = 0; i < 6; ++i)
    collinear.push_back(Vec3{0.01 * i, 0.02 * i, 0.2 + 0.03 * i});
  CHECK_THROWS_AS(fit_plane_svd(collinear), Error);
}

TEST_CASE("fit_plane_svd is translation equivariant") {
  SplitMix64 rng(15);
  const ImplicitPlane truth = plane_from_geometry({20.0, 0.25, 120.0});
  std::vector<Vec3> pts;
  for (int i = 0; i < 12; ++i) {
    const double ax = (rng.next_double() - 0.5) * deg2rad(30.0);
    const double ay = (rng.next_double() - 0.5) * deg2rad(30.0);
    const auto hit = intersect(Ray{normalized({std::tan(ax), std::tan(ay), 1.0})}, truth);
    pts.push_back(*hit + truth.normal * ((rng.next_double() - 0.5) * 1e-4));
  }
  const ImplicitPlane base = fit_plane_svd(pts);

  const Vec3 shift{0.02, -0.01, 0.05};  // keeps the plane on the same side of the origin
  std::vector<Vec3> moved;
  for (const Vec3& p : pts) moved.push_back(p + shift);
  const ImplicitPlane shifted = fit_plane_svd(moved);

  CHECK(angular_error_deg(base, shifted) < 1e-9);
  CHECK(shifted.offset == doctest::Approx(base.offset - dot(base.normal, shift)).epsilon(1e-9));
}

TEST_CASE("zone grid layout") {
  const auto zones = default_zone_grid();
  validate_zone_grid(zones);
  CHECK(zones[4].kind == ZoneKind::center);
  CHECK(zones[4].center_x_deg == doctest::Approx(0.0));
  CHECK(zones[0].kind == ZoneKind::corner);
  CHECK(zones[1].kind == ZoneKind::edge);
  CHECK(zones[0].center_x_deg == doctest::Approx(-11.0));
  CHECK(zones[0].center_y_deg == doctest::Approx(-34.0 / 3.0));
  CHECK(zones[8].center_x_deg == doctest::Approx(11.0));
  CHECK(zones[2].width_deg == doctest::Approx(11.0));
  CHECK(zones[2].height_deg == doctest::Approx(34.0 / 3.0));
}

TEST_CASE("sample_zone_rays determinism and containment") {
  const ZoneFov corner = default_zone_grid()[2];
  const auto a = sample_zone_rays(corner, 2304, 99);
  const auto b = sample_zone_rays(corner, 2304, 99);
  REQUIRE(a.size() == 2304);
  REQUIRE(b.size() == 2304);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].dir.x == b[i].dir.x);
    CHECK(a[i].dir.y == b[i].dir.y);
    CHECK(a[i].dir.z == b[i].dir.z);
  }

  for (const ZoneFov& zone : {default_zone_grid()[2], default_zone_grid()[4]}) {
    for (int count : {2304, 1000}) {
      for (const Ray& r : sample_zone_rays(zone, count, 7)) {
        CHECK(r.dir.z > 0.0);
        CHECK(std::abs(norm(r.dir) - 1.0) < 1e-12);
        const double ax = rad2deg(std::atan(r.dir.x / r.dir.z));
        const double ay = rad2deg(std::atan(r.dir.y / r.dir.z));
        CHECK(ax >= zone.center_x_deg - zone.width_deg / 2.0 - 1e-9);
        CHECK(ax <= zone.center_x_deg + zone.width_deg / 2.0 + 1e-9);
        CHECK(ay >= zone.center_y_deg - zone.height_deg / 2.0 - 1e-9);
        CHECK(ay <= zone.center_y_deg + zone.height_deg / 2.0 + 1e-9);
      }
    }
  }

  CHECK_THROWS_AS(sample_zone_rays(corner, 0, 1), Error);
  CHECK_THROWS_AS(sample_zone_rays(corner, -5, 1), Error);
}

TEST_CASE("sample_zone_rays mean direction matches the zone center") {
  const ZoneFov center = default_zone_grid()[4];
  const auto rays = sample_zone_rays(center, 100000, 3);
  Vec3 mean{};
  for (const Ray& r : rays) mean = mean + r.dir;
  mean = normalized(mean);
  CHECK(std::abs(mean.x) < 1e-2);
  CHECK(std::abs(mean.y) < 1e-2);
  CHECK(mean.z > 0.999);
}

TEST_CASE("sample_zone_rays uniformity chi-square") {
  // 4x4 tangent-space partition; expected cell masses from the exact
  // solid-angle formula.
  const ZoneFov zone = default_zone_grid()[1];  // an edge zone, off-axis in y
  const double x0 = std::tan(deg2rad(zone.center_x_deg - zone.width_deg / 2.0));
  const double x1 = std::tan(deg2rad(zone.center_x_deg + zone.width_deg / 2.0));
  const double y0 = std::tan(deg2rad(zone.center_y_deg - zone.height_deg / 2.0));
  const double y1 = std::tan(deg2rad(zone.center_y_deg + zone.height_deg / 2.0));
  const double total = rectangle_solid_angle(x0, x1, y0, y1);

  const int n = 100000;
  const auto rays = sample_zone_rays(zone, n, 17);
  int counts[4][4] = {};
  for (const Ray& r : rays) {
    const double px = r.dir.x / r.dir.z;
    const double py = r.dir.y / r.dir.z;
    int cx = static_cast<int>((px - x0) / (x1 - x0) * 4.0);
    int cy = static_cast<int>((py - y0) / (y1 - y0) * 4.0);
    cx = std::clamp(cx, 0, 3);
    cy = std::clamp(cy, 0, 3);
    ++counts[cy][cx];
  }

  double chi2 = 0.0;
  for (int cy = 0; cy < 4; ++cy) {
    for (int cx = 0; cx < 4; ++cx) {
      const double cellx0 = x0 + (x1 - x0) * cx / 4.0;
      const double cellx1 = x0 + (x1 - x0) * (cx + 1) / 4.0;
      const double celly0 = y0 + (y1 - y0) * cy / 4.0;
      const double celly1 = y0 + (y1 - y0) * (cy + 1) / 4.0;
      const double expected =
          n * rectangle_solid_angle(cellx0, cellx1, celly0, celly1) / total;
      const double diff = counts[cy][cx] - expected;
      chi2 += diff * diff / expected;
    }
  }
  // 15 degrees of freedom, p = 0.01 critical value
  CHECK(chi2 < 30.578);
}
