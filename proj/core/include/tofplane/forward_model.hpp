#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "tofplane/geometry.hpp"
#include "tofplane/histogram.hpp"

namespace tofplane {

/// Phong surface description.
struct ReflectanceParams {
  double albedo = 0.5;     // [0, 1]
  double spec_weight = 0.1;  // [0, 1]
  double spec_exp = 10.0;    // >= 0

  void validate() const;
};

/// All forward-model constants of the sensor.
struct CameraParams {
  int num_bins = 128;
  double bin_size_ps = 80.0;    // ~1.2 cm of range per bin
  double bin_offset_ps = 0.0;   // flight time t is recorded at t + offset
  double gain = 1.0;
  double saturation = 50.0;     // asymptotic per-ray detection ceiling
  double crosstalk = 0.02;      // inter-histogram interference weight
  double ref_rescale = 1.0;     // temporal scale applied to the reference pulse
  int rays_per_zone = 2304;
  double soft_bin_sigma = 1.0;  // Gaussian width of soft binning, in bin widths
  std::array<ZoneFov, 9> zones = default_zone_grid();

  void validate() const;
  FieldOfView full_fov() const;
};

enum class BinningMode { hard, soft };

/// Phong intensity for a ray hitting a plane with sensor-facing normal.
/// Back-facing configurations return zero.
double phong_intensity(const Ray& r, const Vec3& normal, const ReflectanceParams& f);

/// Expected detected photon count for one ray after the SPAD saturation curve
/// and inverse-square falloff.
double detected_photons(double intensity, double range_m, const CameraParams& c);

/// Histogram of one zone before pulse correlation and crosstalk.
Histogram render_raw_histogram(const ImplicitPlane& p, const ReflectanceParams& f,
                               const CameraParams& c, const ZoneFov& zone,
                               std::uint64_t seed, BinningMode mode);

/// Resamples the reference pulse onto the transient bin grid, temporally
/// scaled by `scale`; the result is unit-sum and acts as the correlation
/// kernel. Tap k represents a delay of k transient bins.
std::vector<double> rescale_reference(const ReferenceHistogram& delta, double scale,
                                      double target_bin_size_ps, int kernel_len,
                                      double sigma_bins = 1.0);

/// Cross-correlates a histogram with a delay kernel (out[i] = sum_k
/// kernel[k] * raw[i - k]), truncated to the histogram length.
Histogram apply_impulse(const Histogram& raw, std::span<const double> kernel);

/// Adds inter-histogram interference: each output bin gains psi times the sum
/// of that bin index over all nine histograms (the histogram itself included).
TransientImage apply_crosstalk(const TransientImage& image, double psi);

/// Full forward model: per-zone raw rendering, pulse correlation, crosstalk.
/// Deterministic for a fixed seed regardless of `threads`.
TransientImage render_image(const PlaneGeometry& g, const ReflectanceParams& f,
                            const CameraParams& c, const ReferenceHistogram& delta,
                            std::uint64_t seed, BinningMode mode, int threads = 1);

bool image_all_zero(const TransientImage& image);

/// Normalized L2 image loss: per zone, the L2 norm of the rendered minus
/// observed histogram, both divided by the observed maximum. Zones whose
/// observed histogram is identically zero are skipped.
double image_loss(const TransientImage& rendered, const TransientImage& observed);

}  // namespace tofplane
