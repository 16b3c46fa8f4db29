#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>

#include "tofplane/forward_model.hpp"

namespace tofplane {

enum class NoiseKind { none, poisson };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::none;
  /// Counts at the histogram peak when Poisson noise is applied; the image is
  /// rescaled so its peak bin has this expected count, sampled, then scaled
  /// back.
  double photon_scale = 50.0;
};

struct GroundTruth {
  PlaneGeometry geometry;
  ReflectanceParams reflectance;
};

struct RecordMeta {
  std::uint64_t seed = 0;
  NoiseKind noise = NoiseKind::none;
  double photon_scale = 50.0;
  std::string camera_id = "default";
  std::map<std::string, std::string> tags;
};

/// One dataset entry: a transient image with its reference pulse, optional
/// ground truth, and generation metadata.
struct MeasurementRecord {
  std::int64_t id = 0;
  TransientImage image;
  ReferenceHistogram reference;
  std::optional<GroundTruth> truth;
  RecordMeta meta;
};

/// Shape consistency against the camera the record claims to come from.
void validate_record(const MeasurementRecord& record, const CameraParams& camera);

/// Inclusive linear range; count == 1 collapses to min.
struct SweepRange {
  double min = 0.0;
  double max = 0.0;
  int count = 1;

  double at(int i) const {
    return count <= 1 ? min : min + (max - min) * static_cast<double>(i) / (count - 1);
  }
};

/// Cartesian pose sweep replacing a physical capture rig. Iteration order is
/// theta-major, then z0, then phi.
struct SweepSpec {
  SweepRange theta_deg{0.0, 30.0, 5};
  SweepRange z0_m{0.05, 0.30, 5};
  SweepRange phi_deg{0.0, 315.0, 4};
  ReflectanceParams reflectance;
  NoiseSpec noise;
  std::uint64_t seed = 1;
  double ref_width_ps = 160.0;
  double ref_bin_size_ps = 40.0;
  int ref_num_bins = 32;

  void validate() const;
};

/// Gaussian laser pulse centered in its histogram, unit peak, std `width_ps`.
ReferenceHistogram synth_reference(double width_ps, double bin_size_ps, int num_bins);

/// Renders one hard-mode measurement, optionally Poisson-noised.
/// Deterministic per seed.
MeasurementRecord simulate_measurement(const PlaneGeometry& g, const ReflectanceParams& f,
                                       const CameraParams& c, const ReferenceHistogram& delta,
                                       const NoiseSpec& noise, std::uint64_t seed);

/// Streams the full sweep to `sink` in deterministic index order; returns the
/// number of records produced.
std::size_t generate_dataset(const SweepSpec& spec, const CameraParams& camera,
                             const std::function<void(const MeasurementRecord&)>& sink,
                             const std::string& camera_id = "default");

/// Exact Poisson sampler on a pinned RNG (inversion below mean 60, halving
/// rule above), so dataset bytes reproduce across runs.
double sample_poisson(double mean, SplitMix64& rng);

}  // namespace tofplane
