#pragma once

#include <optional>
#include <span>
#include <vector>

#include "tofplane/forward_model.hpp"
#include "tofplane/optim.hpp"
#include "tofplane/simulate.hpp"

namespace tofplane {

/// Parameters of the histogram-peak recovery: a linear bin-to-distance map
/// plus per-ring angular scales for projecting edge and corner zones.
struct PeakParams {
  double slope_m_per_bin = 0.012;
  double intercept_m = 0.0;
  double edge_scale = 1.0;
  double corner_scale = 1.0;

  void validate() const;
};

/// Uncalibrated defaults: slope equals the camera's bin-equivalent distance,
/// zero intercept, unscaled projection angles.
PeakParams naive_peak_params(const CameraParams& c);

enum class RecoveryMethod { diff_render, peak_calibrated, peak_naive };

struct RecoveryResult {
  PlaneGeometry geometry;
  ImplicitPlane plane;
  std::optional<ReflectanceParams> reflectance;  // differentiable method only
  OptimizerReport report;
  RecoveryMethod method = RecoveryMethod::diff_render;
};

/// Sub-bin peak coordinate (in bins) via a natural cubic spline through the
/// bin counts, sampled at 10x density over a +/-2 bin window around the
/// argmax. Throws Errc::no_peak on an all-zero histogram.
double find_peak(const Histogram& h);

/// Distance-projection plane recovery: per zone, the peak coordinate maps to
/// a distance along the (angle-scaled) zone center direction; the nine points
/// are fit with a total-least-squares plane. Zones without a peak or with a
/// nonpositive distance are skipped; fewer than 3 usable zones is an error.
ImplicitPlane recover_plane_peaks(const TransientImage& image, const PeakParams& params,
                                  std::span<const ZoneFov> zones);

struct PeakCalibOptions {
  int max_evals = 4000;
  double tol = 1e-9;
  std::vector<std::string>* warnings = nullptr;  // per-record exclusion notes
};

/// Fits (slope, intercept, edge/corner scales) by minimizing the mean point
/// error against ground truth over the dataset, via Nelder-Mead. The returned
/// parameters never score worse than `init` on the same data.
PeakParams calibrate_peaks(std::span<const MeasurementRecord> dataset, const PeakParams& init,
                           const CameraParams& camera, const PeakCalibOptions& opts = {});

struct DiffRenderOptions {
  double lr = 0.02;
  ReflectanceParams init_reflectance{0.5, 0.1, 10.0};
  std::uint64_t seed = 0;
};

/// Inverse rendering: minimizes the normalized L2 image loss over plane
/// geometry and reflectance with Adam, starting from `init`. Returns the
/// best-seen iterate. Throws Errc::recovery_failed when the initialization
/// (or the observation) renders to an all-zero image.
RecoveryResult recover_plane_diffrender(const TransientImage& observed,
                                        const ReferenceHistogram& delta,
                                        const CameraParams& camera, const PlaneGeometry& init,
                                        int steps, const DiffRenderOptions& opts = {});

struct CameraCalibOptions {
  double lr = 0.02;
  ReflectanceParams init_reflectance{0.5, 0.1, 10.0};
  std::uint64_t seed = 0;
  // Normalized-step sizes. Gain and reflectance multiply in the exponent, so
  // a gain offset can also be absorbed by rescaling albedo/specular weight;
  // a coarse gain step with fine reflectance steps makes gain soak up that
  // shared factor instead of the reflectance.
  double gain_scale_factor = 4.0;
  double crosstalk_scale = 0.05;
  double ref_rescale_scale = 0.05;
  double bin_offset_scale_ps = 20.0;
  double saturation_scale_factor = 0.25;
  ReflectanceParams* fitted_reflectance = nullptr;  // optional output
  OptimizerReport* report = nullptr;                // optional output
};

/// Joint calibration of the differentiable camera members (gain, crosstalk,
/// reference rescale, bin offset, saturation) and one shared reflectance over
/// a ground-truth dataset. Geometry stays fixed per record; zone FoVs are not
/// optimized. The returned camera never scores worse than `init`.
CameraParams calibrate_camera(std::span<const MeasurementRecord> dataset,
                              const CameraParams& init, int steps,
                              const CameraCalibOptions& opts = {});

/// Albedo component of recover_plane_diffrender; same contract.
double recover_albedo(const TransientImage& observed, const ReferenceHistogram& delta,
                      const CameraParams& camera, const PlaneGeometry& init, int steps = 100,
                      const DiffRenderOptions& opts = {});

/// Training objective of calibrate_peaks, exposed for before/after reporting:
/// mean point error of peak recovery across usable records.
double peak_calibration_objective(std::span<const MeasurementRecord> dataset,
                                  const PeakParams& params, const CameraParams& camera);

/// Training objective of calibrate_camera: summed image loss over the dataset
/// with ground-truth geometry and the given shared reflectance.
double camera_calibration_objective(std::span<const MeasurementRecord> dataset,
                                    const CameraParams& camera, const ReflectanceParams& shared,
                                    std::uint64_t seed = 0);

}  // namespace tofplane
