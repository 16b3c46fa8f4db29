#include "tofplane/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "tofplane/render_core.hpp"

namespace tofplane {

void PeakParams::validate() const {
  require(slope_m_per_bin > 0.0, Errc::invalid_argument, "peak slope must be positive");
  require(edge_scale > 0.0, Errc::invalid_argument, "edge scale must be positive");
  require(corner_scale > 0.0, Errc::invalid_argument, "corner scale must be positive");
}

PeakParams naive_peak_params(const CameraParams& c) {
  PeakParams p;
  p.slope_m_per_bin = c.bin_size_ps / kPsPerMeter;
  p.intercept_m = 0.0;
  p.edge_scale = 1.0;
  p.corner_scale = 1.0;
  return p;
}

namespace {

/// Natural cubic spline second derivatives for unit-spaced samples.
std::vector<double> spline_second_derivatives(std::span<const double> y) {
  const std::size_t n = y.size();
  std::vector<double> m(n, 0.0);
  if (n < 3) return m;
  // Thomas solve of the tridiagonal system (1 4 1) m = 6 * second difference.
  std::vector<double> c(n, 0.0), d(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = 6.0 * (y[i - 1] - 2.0 * y[i] + y[i + 1]);
  double beta = 4.0;
  m[1] = d[1] / beta;
  for (std::size_t i = 2; i + 1 < n; ++i) {
    c[i] = 1.0 / beta;
    beta = 4.0 - c[i];
    m[i] = (d[i] - m[i - 1]) / beta;
  }
  for (std::size_t i = n - 3; i >= 1; --i) {
    m[i] -= c[i + 1] * m[i + 1];
    if (i == 1) break;
  }
  return m;
}

double spline_eval(std::span<const double> y, std::span<const double> m, double x) {
  const std::size_t n = y.size();
  const double clamped = std::clamp(x, 0.0, static_cast<double>(n - 1));
  std::size_t i = static_cast<std::size_t>(std::min(clamped, static_cast<double>(n - 2)));
  const double a = static_cast<double>(i + 1) - clamped;
  const double b = clamped - static_cast<double>(i);
  return a * y[i] + b * y[i + 1] +
         ((a * a * a - a) * m[i] + (b * b * b - b) * m[i + 1]) / 6.0;
}

}  // namespace

double find_peak(const Histogram& h) {
  const auto& y = h.bins;
  require(!y.empty(), Errc::no_peak, "histogram is empty");
  std::size_t argmax = 0;
  for (std::size_t i = 1; i < y.size(); ++i)
    if (y[i] > y[argmax]) argmax = i;
  require(y[argmax] > 0.0, Errc::no_peak, "histogram has no positive bin");
  if (y.size() < 3) return static_cast<double>(argmax);

  const std::vector<double> m = spline_second_derivatives(y);
  const double lo = std::max(0.0, static_cast<double>(argmax) - 2.0);
  const double hi = std::min(static_cast<double>(y.size() - 1), static_cast<double>(argmax) + 2.0);
  const int steps = static_cast<int>(std::lround((hi - lo) * 10.0));
  double best_x = lo;
  double best_v = spline_eval(y, m, lo);
  for (int k = 1; k <= steps; ++k) {
    const double x = lo + 0.1 * k;
    const double v = spline_eval(y, m, x);
    if (v > best_v) {
      best_v = v;
      best_x = x;
    }
  }
  // Parabolic refinement between dense samples locates the curve's true
  // maximum instead of the nearest 0.1-bin grid point.
  const double va = spline_eval(y, m, best_x - 0.1);
  const double vb = spline_eval(y, m, best_x + 0.1);
  const double denom = va - 2.0 * best_v + vb;
  if (denom < 0.0) {
    const double shift = 0.05 * (va - vb) / denom;
    best_x += std::clamp(shift, -0.1, 0.1);
  }
  return std::clamp(best_x, lo, hi);
}

namespace {

using ZonePeaks = std::array<std::optional<double>, 9>;

ZonePeaks extract_peaks(const TransientImage& image) {
  ZonePeaks peaks;
  for (std::size_t z = 0; z < 9; ++z) {
    if (max_bin(image.zones[z]) > 0.0) peaks[z] = find_peak(image.zones[z]);
  }
  return peaks;
}

Vec3 scaled_zone_direction(const ZoneFov& zone, const PeakParams& params) {
  const Vec3 d0 = normalized(
      {std::tan(deg2rad(zone.center_x_deg)), std::tan(deg2rad(zone.center_y_deg)), 1.0});
  double scale = 1.0;
  if (zone.kind == ZoneKind::edge) scale = params.edge_scale;
  if (zone.kind == ZoneKind::corner) scale = params.corner_scale;
  const double beta = std::acos(std::clamp(d0.z, -1.0, 1.0));
  if (beta < 1e-15 || scale == 1.0) return d0;
  const double azimuth = std::atan2(d0.y, d0.x);
  const double tilted = beta * scale;
  return {std::sin(tilted) * std::cos(azimuth), std::sin(tilted) * std::sin(azimuth),
          std::cos(tilted)};
}

std::vector<Vec3> project_points(const ZonePeaks& peaks, const PeakParams& params,
                                 std::span<const ZoneFov> zones) {
  std::vector<Vec3> pts;
  pts.reserve(9);
  for (std::size_t z = 0; z < zones.size(); ++z) {
    if (!peaks[z]) continue;
    const double dist = *peaks[z] * params.slope_m_per_bin + params.intercept_m;
    if (dist <= 0.0) continue;
    pts.push_back(scaled_zone_direction(zones[z], params) * dist);
  }
  return pts;
}

}  // namespace

ImplicitPlane recover_plane_peaks(const TransientImage& image, const PeakParams& params,
                                  std::span<const ZoneFov> zones) {
  params.validate();
  require(zones.size() == 9, Errc::invalid_argument, "peak recovery expects 9 zones");
  const ZonePeaks peaks = extract_peaks(image);
  const std::vector<Vec3> pts = project_points(peaks, params, zones);
  require(pts.size() >= 3, Errc::recovery_failed,
          "peak recovery needs at least 3 zones with usable peaks");
  return fit_plane_svd(pts);
}

namespace {

struct PeakCalibData {
  std::vector<ZonePeaks> peaks;
  std::vector<ImplicitPlane> truth;
};

PeakCalibData prepare_peak_calibration(std::span<const MeasurementRecord> dataset,
                                       std::vector<std::string>* warnings) {
  PeakCalibData data;
  for (const MeasurementRecord& rec : dataset) {
    std::string why;
    if (!rec.truth) {
      why = "missing ground truth";
    } else {
      const ZonePeaks peaks = extract_peaks(rec.image);
      const std::size_t usable =
          static_cast<std::size_t>(std::count_if(peaks.begin(), peaks.end(),
                                                 [](const auto& p) { return p.has_value(); }));
      if (usable < 3) {
        why = "fewer than 3 zones with peaks";
      } else {
        data.peaks.push_back(peaks);
        data.truth.push_back(plane_from_geometry(rec.truth->geometry));
        continue;
      }
    }
    if (warnings)
      warnings->push_back("record " + std::to_string(rec.id) + " excluded: " + why);
  }
  require(!data.peaks.empty(), Errc::data, "no usable records for peak calibration");
  return data;
}

double mean_point_error(const PeakCalibData& data, const PeakParams& params,
                        std::span<const ZoneFov> zones, const FieldOfView& fov) {
  double total = 0.0;
  for (std::size_t i = 0; i < data.peaks.size(); ++i) {
    const std::vector<Vec3> pts = project_points(data.peaks[i], params, zones);
    if (pts.size() < 3) return std::numeric_limits<double>::infinity();
    try {
      total += point_error_m(fit_plane_svd(pts), data.truth[i], fov);
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  }
  return total / static_cast<double>(data.peaks.size());
}

}  // namespace

double peak_calibration_objective(std::span<const MeasurementRecord> dataset,
                                  const PeakParams& params, const CameraParams& camera) {
  const PeakCalibData data = prepare_peak_calibration(dataset, nullptr);
  return mean_point_error(data, params, camera.zones, camera.full_fov());
}

PeakParams calibrate_peaks(std::span<const MeasurementRecord> dataset, const PeakParams& init,
                           const CameraParams& camera, const PeakCalibOptions& opts) {
  init.validate();
  camera.validate();
  require(!dataset.empty(), Errc::data, "peak calibration needs a nonempty dataset");
  const PeakCalibData data = prepare_peak_calibration(dataset, opts.warnings);
  const FieldOfView fov = camera.full_fov();

  const auto objective = [&](std::span<const double> x) {
    PeakParams p;
    p.slope_m_per_bin = x[0];
    p.intercept_m = x[1];
    p.edge_scale = x[2];
    p.corner_scale = x[3];
    if (p.slope_m_per_bin <= 0.0 || p.edge_scale <= 0.0 || p.corner_scale <= 0.0)
      return std::numeric_limits<double>::infinity();
    return mean_point_error(data, p, camera.zones, fov);
  };

  ParamVector params({
      {"slope_m_per_bin", init.slope_m_per_bin, std::max(init.slope_m_per_bin, 1e-4)},
      {"intercept_m", init.intercept_m, 0.02},
      {"edge_scale", init.edge_scale, 0.5},
      {"corner_scale", init.corner_scale, 0.5},
  });

  // Fresh-simplex restarts pull the search out of the curved valley the
  // four-parameter objective tends to form; stop once a round stops paying.
  const int rounds = 3;
  const int evals_per_round = std::max(opts.max_evals / rounds, 1);
  double best_seen = std::numeric_limits<double>::infinity();
  for (int round = 0; round < rounds; ++round) {
    const auto [best, report] = nelder_mead(objective, params, evals_per_round, opts.tol);
    params = best;
    if (best_seen - report.best_loss < opts.tol) break;
    best_seen = report.best_loss;
  }

  PeakParams out;
  out.slope_m_per_bin = params.value_of("slope_m_per_bin");
  out.intercept_m = params.value_of("intercept_m");
  out.edge_scale = params.value_of("edge_scale");
  out.corner_scale = params.value_of("corner_scale");
  out.validate();
  return out;
}

namespace {

double wrap_degrees(double phi) {
  phi = std::fmod(phi, 360.0);
  if (phi < 0.0) phi += 360.0;
  if (phi >= 360.0) phi = 0.0;
  return phi;
}

}  // namespace

RecoveryResult recover_plane_diffrender(const TransientImage& observed,
                                        const ReferenceHistogram& delta,
                                        const CameraParams& camera, const PlaneGeometry& init,
                                        int steps, const DiffRenderOptions& opts) {
  camera.validate();
  init.validate();
  opts.init_reflectance.validate();
  require(steps >= 1, Errc::invalid_argument, "recovery needs at least one step");
  require(!image_all_zero(observed), Errc::recovery_failed,
          "degenerate recovery: observed image is all zero");

  const TransientImage init_render =
      render_image(init, opts.init_reflectance, camera, delta, opts.seed, BinningMode::soft);
  require(!image_all_zero(init_render), Errc::recovery_failed,
          "degenerate recovery: initialization renders to an all-zero image");

  const auto obj = make_objective(6, [&]<class T>(std::span<const T> p) -> T {
    const detail::ReflS<T> refl{p[3], p[4], p[5]};
    const detail::SensorS<T> sensor{T(camera.gain), T(camera.saturation), T(camera.crosstalk),
                                    T(camera.ref_rescale), T(camera.bin_offset_ps)};
    const detail::ImageS<T> img = detail::render_image_t<T>(
        p[0], p[1], p[2], refl, sensor, camera, delta, opts.seed, BinningMode::soft);
    return detail::image_loss_t(img, observed);
  });

  const ParamVector params({
      {"theta_deg", init.theta_deg, 45.0, 0.0, 75.0},
      {"z0_m", init.z0_m, 0.5, 0.005, 1.5},
      {"phi_deg", init.phi_deg, 45.0, std::nullopt, std::nullopt},
      {"albedo", opts.init_reflectance.albedo, 1.0, 0.0, 1.0},
      {"spec_weight", opts.init_reflectance.spec_weight, 1.0, 0.0, 1.0},
      {"spec_exp", opts.init_reflectance.spec_exp, 20.0, 0.0, 200.0},
  });

  auto [best, report] = minimize_adam(obj, params, steps, opts.lr);

  RecoveryResult result;
  result.geometry = PlaneGeometry{best.value_of("theta_deg"), best.value_of("z0_m"),
                                  wrap_degrees(best.value_of("phi_deg"))};
  result.plane = plane_from_geometry(result.geometry);
  result.reflectance = ReflectanceParams{best.value_of("albedo"), best.value_of("spec_weight"),
                                         best.value_of("spec_exp")};
  result.report = std::move(report);
  result.method = RecoveryMethod::diff_render;
  return result;
}

double camera_calibration_objective(std::span<const MeasurementRecord> dataset,
                                    const CameraParams& camera, const ReflectanceParams& shared,
                                    std::uint64_t seed) {
  double total = 0.0;
  for (const MeasurementRecord& rec : dataset) {
    require(rec.truth.has_value(), Errc::data, "record missing ground truth");
    const PlaneGeometry& g = rec.truth->geometry;
    const TransientImage rendered =
        render_image(g, shared, camera, rec.reference, mix_seed(seed, static_cast<std::uint64_t>(rec.id)),
                     BinningMode::soft);
    total += image_loss(rendered, rec.image);
  }
  return total;
}

CameraParams calibrate_camera(std::span<const MeasurementRecord> dataset,
                              const CameraParams& init, int steps,
                              const CameraCalibOptions& opts) {
  init.validate();
  opts.init_reflectance.validate();
  require(!dataset.empty(), Errc::data, "camera calibration needs a nonempty dataset");
  require(steps >= 1, Errc::invalid_argument, "camera calibration needs at least one step");
  for (const MeasurementRecord& rec : dataset) {
    require(rec.truth.has_value(), Errc::data,
            "record " + std::to_string(rec.id) + " is missing ground truth");
    validate_record(rec, init);
  }

  const auto obj = make_objective(8, [&]<class T>(std::span<const T> p) -> T {
    const detail::SensorS<T> sensor{p[0], p[4], p[1], p[2], p[3]};
    const detail::ReflS<T> refl{p[5], p[6], p[7]};
    T total(0.0);
    for (const MeasurementRecord& rec : dataset) {
      const PlaneGeometry& g = rec.truth->geometry;
      const detail::ImageS<T> img = detail::render_image_t<T>(
          T(g.theta_deg), T(g.z0_m), T(g.phi_deg), refl, sensor, init, rec.reference,
          mix_seed(opts.seed, static_cast<std::uint64_t>(rec.id)), BinningMode::soft);
      total += detail::image_loss_t(img, rec.image);
    }
    return total;
  });

  const ParamVector params({
      {"gain", init.gain, opts.gain_scale_factor * init.gain, 1e-12, std::nullopt},
      {"crosstalk", init.crosstalk, opts.crosstalk_scale, 0.0, std::nullopt},
      {"ref_rescale", init.ref_rescale, opts.ref_rescale_scale, 0.05, std::nullopt},
      {"bin_offset_ps", init.bin_offset_ps, opts.bin_offset_scale_ps, std::nullopt, std::nullopt},
      {"saturation", init.saturation, opts.saturation_scale_factor * init.saturation, 1e-6,
       std::nullopt},
      // Fine reflectance steps: while gain transits toward the optimum, the
      // shared reflectance free-walks along the gain/reflectance gauge
      // direction by roughly lr * scale per step, and nothing pulls it back.
      {"albedo", opts.init_reflectance.albedo, 0.05, 0.0, 1.0},
      {"spec_weight", opts.init_reflectance.spec_weight, 0.05, 0.0, 1.0},
      {"spec_exp", opts.init_reflectance.spec_exp, 1.0, 0.0, 200.0},
  });

  auto [best, report] = minimize_adam(obj, params, steps, opts.lr);

  CameraParams out = init;
  out.gain = best.value_of("gain");
  out.crosstalk = best.value_of("crosstalk");
  out.ref_rescale = best.value_of("ref_rescale");
  out.bin_offset_ps = best.value_of("bin_offset_ps");
  out.saturation = best.value_of("saturation");
  out.validate();
  if (opts.fitted_reflectance)
    *opts.fitted_reflectance = ReflectanceParams{best.value_of("albedo"),
                                                 best.value_of("spec_weight"),
                                                 best.value_of("spec_exp")};
  if (opts.report) *opts.report = std::move(report);
  return out;
}

double recover_albedo(const TransientImage& observed, const ReferenceHistogram& delta,
                      const CameraParams& camera, const PlaneGeometry& init, int steps,
                      const DiffRenderOptions& opts) {
  const RecoveryResult result =
      recover_plane_diffrender(observed, delta, camera, init, steps, opts);
  return result.reflectance->albedo;
}

}  // namespace tofplane
