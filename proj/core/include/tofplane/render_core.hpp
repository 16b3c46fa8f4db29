#pragma once

// Scalar-generic implementation of the transient imaging pipeline. T is
// double for plain rendering and Dual for derivative propagation; every
// branch below switches on plain values only, so both instantiations follow
// identical control flow for identical inputs.

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "tofplane/forward_model.hpp"
#include "tofplane/geometry.hpp"
#include "tofplane/histogram.hpp"
#include "tofplane/math.hpp"

namespace tofplane::detail {

template <class T>
struct ReflS {
  T albedo;
  T spec_weight;
  T spec_exp;
};

/// The camera members the calibration stage differentiates through.
template <class T>
struct SensorS {
  T gain;
  T saturation;
  T crosstalk;
  T ref_rescale;
  T bin_offset_ps;
};

template <class T>
using ImageS = std::array<std::vector<T>, 9>;

inline SensorS<double> sensor_of(const CameraParams& c) {
  return {c.gain, c.saturation, c.crosstalk, c.ref_rescale, c.bin_offset_ps};
}

inline ReflS<double> refl_of(const ReflectanceParams& f) {
  return {f.albedo, f.spec_weight, f.spec_exp};
}

/// Phong intensity. mu is the cosine of incidence; the specular term aligns
/// the mirror reflection of the incoming ray with the return direction, which
/// for co-located source and sensor collapses to 2*mu^2 - 1, clamped to [0,1]
/// before exponentiation.
template <class T>
T phong(const Vec3& dir, const Vec3T<T>& normal, const ReflS<T>& f) {
  using std::pow;
  const T mu = -dot(normal, dir);
  if (value_of(mu) <= 0.0) return T(0.0);
  T intensity = f.albedo * (T(1.0) - f.spec_weight) * mu;
  T spec = T(2.0) * mu * mu - T(1.0);
  if (value_of(spec) > 0.0) {
    if (value_of(spec) > 1.0) spec = T(1.0);
    intensity += f.spec_weight * pow(spec, f.spec_exp);
  }
  return intensity;
}

/// Saturating detection curve: p = sat * (1 - exp(-gain*I / (sat*r^2))).
template <class T>
T photons(const T& intensity, const T& range_m, const T& gain, const T& saturation) {
  using std::exp;
  const T x = gain * intensity / (saturation * range_m * range_m);
  return saturation * (T(1.0) - exp(-x));
}

/// Deposits `weight` as a unit-mass Gaussian over the bin lattice, centered at
/// fractional coordinate `mu` (bin j spans [j, j+1), center j + 0.5). The
/// Gaussian is normalized against the full lattice, so mass outside [0, n)
/// is truncated rather than redistributed.
template <class T>
void soft_deposit(std::vector<T>& bins, const T& mu, const T& weight, double sigma) {
  using std::exp;
  const double reach = 8.0 * sigma + 1.0;
  const double center = value_of(mu) - 0.5;  // in bin-center coordinates
  long lo = static_cast<long>(std::floor(center - reach));
  long hi = static_cast<long>(std::ceil(center + reach));
  if (hi - lo + 1 > 64) {  // very wide kernels: shrink symmetrically
    const long mid = static_cast<long>(std::lround(center));
    lo = mid - 31;
    hi = mid + 32;
  }
  std::array<T, 64> g;
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  T lattice_sum(0.0);
  for (long j = lo; j <= hi; ++j) {
    const T d = T(static_cast<double>(j) + 0.5) - mu;
    const T e = exp(-(d * d) * inv2s2);
    g[static_cast<std::size_t>(j - lo)] = e;
    lattice_sum += e;
  }
  if (value_of(lattice_sum) <= 0.0) return;
  const T scale = weight / lattice_sum;
  const long n = static_cast<long>(bins.size());
  for (long j = std::max(lo, 0L); j <= std::min(hi, n - 1); ++j)
    bins[static_cast<std::size_t>(j)] += g[static_cast<std::size_t>(j - lo)] * scale;
}

template <class T>
std::vector<T> raw_histogram(std::span<const Ray> rays, const PlaneS<T>& plane,
                             const ReflS<T>& refl, const SensorS<T>& sensor,
                             const CameraParams& cam, BinningMode mode) {
  std::vector<T> bins(static_cast<std::size_t>(cam.num_bins), T(0.0));
  const double inv_bin = 1.0 / cam.bin_size_ps;
  for (const Ray& r : rays) {
    const T range = intersect_range(r.dir, plane);
    if (value_of(range) <= 0.0) continue;
    const T intensity = phong(r.dir, plane.normal, refl);
    if (value_of(intensity) <= 0.0) continue;
    const T p = photons(intensity, range, sensor.gain, sensor.saturation);
    const T coord = (range * kPsPerMeter - sensor.bin_offset_ps) * inv_bin;
    if (mode == BinningMode::hard) {
      const double c = value_of(coord);
      if (c >= 0.0 && c < static_cast<double>(cam.num_bins))
        bins[static_cast<std::size_t>(c)] += p;
    } else {
      soft_deposit(bins, coord, p, cam.soft_bin_sigma);
    }
  }
  return bins;
}

template <class T>
std::vector<T> rescale_reference_t(const ReferenceHistogram& delta, const T& scale,
                                   double target_bin_size_ps, int kernel_len,
                                   double sigma_bins) {
  delta.validate();
  require(value_of(scale) > 0.0, Errc::invalid_argument, "reference scale must be positive");
  require(kernel_len >= 1, Errc::invalid_argument, "kernel length must be positive");
  require(target_bin_size_ps > 0.0, Errc::invalid_argument, "target bin size must be positive");

  std::vector<T> taps(static_cast<std::size_t>(kernel_len), T(0.0));
  const double inv_target = 1.0 / target_bin_size_ps;
  for (std::size_t j = 0; j < delta.bins.size(); ++j) {
    if (delta.bins[j] <= 0.0) continue;
    const T coord = scale * ((static_cast<double>(j) + 0.5) * delta.bin_size_ps) * inv_target;
    soft_deposit(taps, coord, T(delta.bins[j]), sigma_bins);
  }
  T sum(0.0);
  for (const T& t : taps) sum += t;
  require(value_of(sum) > 0.0, Errc::invalid_reference,
          "rescaled reference has no mass on the target grid");
  const T inv = T(1.0) / sum;
  for (T& t : taps) t *= inv;
  return taps;
}

/// out[i] = sum_k kernel[k] * raw[i - k]; kernel tap k delays by k bins.
template <class T>
std::vector<T> correlate(const std::vector<T>& raw, const std::vector<T>& kernel) {
  const long n = static_cast<long>(raw.size());
  const long klen = static_cast<long>(kernel.size());
  std::vector<T> out(raw.size(), T(0.0));
  for (long i = 0; i < n; ++i) {
    T acc(0.0);
    const long kmax = std::min(klen - 1, i);
    for (long k = 0; k <= kmax; ++k) acc += kernel[static_cast<std::size_t>(k)] * raw[static_cast<std::size_t>(i - k)];
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

template <class T>
ImageS<T> crosstalk_t(const ImageS<T>& in, const T& psi) {
  const std::size_t n = in[0].size();
  std::vector<T> column(n, T(0.0));
  for (const auto& zone : in)
    for (std::size_t i = 0; i < n; ++i) column[i] += zone[i];
  ImageS<T> out;
  for (std::size_t z = 0; z < 9; ++z) {
    out[z].resize(n);
    for (std::size_t i = 0; i < n; ++i) out[z][i] = in[z][i] + psi * column[i];
  }
  return out;
}

template <class T>
ImageS<T> render_image_t(const T& theta_deg, const T& z0_m, const T& phi_deg,
                         const ReflS<T>& refl, const SensorS<T>& sensor,
                         const CameraParams& cam, const ReferenceHistogram& delta,
                         std::uint64_t seed, BinningMode mode) {
  const PlaneS<T> plane = make_plane(theta_deg, z0_m, phi_deg);
  const std::vector<T> kernel = rescale_reference_t(delta, sensor.ref_rescale,
                                                    cam.bin_size_ps, cam.num_bins,
                                                    cam.soft_bin_sigma);
  ImageS<T> corrected;
  for (std::size_t z = 0; z < 9; ++z) {
    const std::vector<Ray> rays =
        sample_zone_rays(cam.zones[z], cam.rays_per_zone, mix_seed(seed, z));
    const std::vector<T> raw = raw_histogram(rays, plane, refl, sensor, cam, mode);
    corrected[z] = correlate(raw, kernel);
  }
  return crosstalk_t(corrected, sensor.crosstalk);
}

/// Per-zone normalized L2 loss against an observed image. Zones with an
/// all-zero observation are skipped (their normalizer is undefined).
template <class T>
T image_loss_t(const ImageS<T>& rendered, const TransientImage& observed) {
  using std::sqrt;
  T total(0.0);
  for (std::size_t z = 0; z < 9; ++z) {
    const double m = max_bin(observed.zones[z]);
    if (m <= 0.0) continue;
    const double inv = 1.0 / m;
    T ss(0.0);
    const std::size_t n = observed.zones[z].bins.size();
    for (std::size_t i = 0; i < n; ++i) {
      const T d = rendered[z][i] * inv - observed.zones[z].bins[i] * inv;
      ss += d * d;
    }
    if (value_of(ss) > 0.0) total += sqrt(ss);
  }
  return total;
}

}  // namespace tofplane::detail
