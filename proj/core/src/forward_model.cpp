#include "tofplane/forward_model.hpp"

#include <cmath>
#include <future>

#include "tofplane/render_core.hpp"

namespace tofplane {

void ReflectanceParams::validate() const {
  require(albedo >= 0.0 && albedo <= 1.0, Errc::invalid_argument, "albedo must lie in [0, 1]");
  require(spec_weight >= 0.0 && spec_weight <= 1.0, Errc::invalid_argument,
          "specular weight must lie in [0, 1]");
  require(spec_exp >= 0.0, Errc::invalid_argument, "specular exponent must be nonnegative");
}

void CameraParams::validate() const {
  require(num_bins >= 1, Errc::invalid_argument, "num_bins must be positive");
  require(bin_size_ps > 0.0, Errc::invalid_argument, "bin_size_ps must be positive");
  require(gain > 0.0, Errc::invalid_argument, "gain must be positive");
  require(saturation > 0.0, Errc::invalid_argument, "saturation must be positive");
  require(crosstalk >= 0.0, Errc::invalid_argument, "crosstalk must be nonnegative");
  require(ref_rescale > 0.0, Errc::invalid_argument, "ref_rescale must be positive");
  require(rays_per_zone >= 1, Errc::invalid_argument, "rays_per_zone must be positive");
  require(soft_bin_sigma > 0.0, Errc::invalid_argument, "soft_bin_sigma must be positive");
  validate_zone_grid(zones);
}

FieldOfView CameraParams::full_fov() const {
  double x0 = 0.0, x1 = 0.0, y0 = 0.0, y1 = 0.0;
  for (const ZoneFov& z : zones) {
    x0 = std::min(x0, z.center_x_deg - z.width_deg / 2.0);
    x1 = std::max(x1, z.center_x_deg + z.width_deg / 2.0);
    y0 = std::min(y0, z.center_y_deg - z.height_deg / 2.0);
    y1 = std::max(y1, z.center_y_deg + z.height_deg / 2.0);
  }
  return FieldOfView{x1 - x0, y1 - y0};
}

double phong_intensity(const Ray& r, const Vec3& normal, const ReflectanceParams& f) {
  f.validate();
  return detail::phong<double>(r.dir, normal, detail::refl_of(f));
}

double detected_photons(double intensity, double range_m, const CameraParams& c) {
  require(range_m > 0.0, Errc::invalid_argument, "range must be positive");
  return detail::photons<double>(intensity, range_m, c.gain, c.saturation);
}

Histogram render_raw_histogram(const ImplicitPlane& p, const ReflectanceParams& f,
                               const CameraParams& c, const ZoneFov& zone,
                               std::uint64_t seed, BinningMode mode) {
  p.validate();
  f.validate();
  const std::vector<Ray> rays = sample_zone_rays(zone, c.rays_per_zone, seed);
  return Histogram{detail::raw_histogram<double>(rays, {p.normal, p.offset},
                                                 detail::refl_of(f), detail::sensor_of(c), c,
                                                 mode)};
}

std::vector<double> rescale_reference(const ReferenceHistogram& delta, double scale,
                                      double target_bin_size_ps, int kernel_len,
                                      double sigma_bins) {
  return detail::rescale_reference_t<double>(delta, scale, target_bin_size_ps, kernel_len,
                                             sigma_bins);
}

Histogram apply_impulse(const Histogram& raw, std::span<const double> kernel) {
  require(!kernel.empty(), Errc::invalid_argument, "impulse kernel is empty");
  const std::vector<double> k(kernel.begin(), kernel.end());
  return Histogram{detail::correlate(raw.bins, k)};
}

TransientImage apply_crosstalk(const TransientImage& image, double psi) {
  require(psi >= 0.0, Errc::invalid_argument, "crosstalk must be nonnegative");
  detail::ImageS<double> in;
  for (std::size_t z = 0; z < 9; ++z) in[z] = image.zones[z].bins;
  const auto out = detail::crosstalk_t(in, psi);
  TransientImage result;
  for (std::size_t z = 0; z < 9; ++z) result.zones[z].bins = out[z];
  return result;
}

TransientImage render_image(const PlaneGeometry& g, const ReflectanceParams& f,
                            const CameraParams& c, const ReferenceHistogram& delta,
                            std::uint64_t seed, BinningMode mode, int threads) {
  g.validate();
  f.validate();
  c.validate();
  const detail::PlaneS<double> plane = detail::make_plane<double>(g.theta_deg, g.z0_m, g.phi_deg);
  const detail::ReflS<double> refl = detail::refl_of(f);
  const detail::SensorS<double> sensor = detail::sensor_of(c);
  const std::vector<double> kernel = detail::rescale_reference_t<double>(
      delta, c.ref_rescale, c.bin_size_ps, c.num_bins, c.soft_bin_sigma);

  const auto render_zone = [&](std::size_t z) {
    const std::vector<Ray> rays = sample_zone_rays(c.zones[z], c.rays_per_zone, mix_seed(seed, z));
    return detail::correlate(detail::raw_histogram<double>(rays, plane, refl, sensor, c, mode),
                             kernel);
  };

  detail::ImageS<double> corrected;
  if (threads > 1) {
    // Zones are independent; results land in fixed slots, so the output is
    // identical for any schedule.
    std::array<std::future<std::vector<double>>, 9> futures;
    for (std::size_t z = 0; z < 9; ++z)
      futures[z] = std::async(std::launch::async, render_zone, z);
    for (std::size_t z = 0; z < 9; ++z) corrected[z] = futures[z].get();
  } else {
    for (std::size_t z = 0; z < 9; ++z) corrected[z] = render_zone(z);
  }

  const auto mixed = detail::crosstalk_t<double>(corrected, c.crosstalk);
  TransientImage result;
  for (std::size_t z = 0; z < 9; ++z) result.zones[z].bins = mixed[z];
  return result;
}

bool image_all_zero(const TransientImage& image) {
  for (const Histogram& h : image.zones)
    for (double b : h.bins)
      if (b != 0.0) return false;
  return true;
}

double image_loss(const TransientImage& rendered, const TransientImage& observed) {
  detail::ImageS<double> r;
  for (std::size_t z = 0; z < 9; ++z) r[z] = rendered.zones[z].bins;
  return detail::image_loss_t(r, observed);
}

}  // namespace tofplane
