#include "tofplane/simulate.hpp"

#include <cmath>

namespace tofplane {

void validate_record(const MeasurementRecord& record, const CameraParams& camera) {
  for (const Histogram& h : record.image.zones)
    require(static_cast<int>(h.bins.size()) == camera.num_bins, Errc::data,
            "record zone histogram length does not match the camera");
  record.reference.validate();
}

void SweepSpec::validate() const {
  const auto check_range = [](const SweepRange& r, const char* what) {
    require(r.count >= 1, Errc::invalid_argument, std::string(what) + ": count must be >= 1");
    require(r.min <= r.max, Errc::invalid_argument, std::string(what) + ": min must be <= max");
  };
  check_range(theta_deg, "theta range");
  check_range(z0_m, "z0 range");
  check_range(phi_deg, "phi range");
  require(theta_deg.min >= 0.0 && theta_deg.max < 90.0, Errc::invalid_argument,
          "theta range must lie in [0, 90)");
  require(z0_m.min > 0.0, Errc::invalid_argument, "z0 range must be positive");
  require(phi_deg.min >= 0.0 && phi_deg.max < 360.0, Errc::invalid_argument,
          "phi range must lie in [0, 360)");
  reflectance.validate();
  require(noise.photon_scale > 0.0, Errc::invalid_argument, "photon scale must be positive");
}

ReferenceHistogram synth_reference(double width_ps, double bin_size_ps, int num_bins) {
  require(bin_size_ps > 0.0, Errc::invalid_argument, "reference bin size must be positive");
  require(num_bins >= 1, Errc::invalid_argument, "reference bin count must be positive");
  require(width_ps >= 0.1 * bin_size_ps, Errc::invalid_argument,
          "reference pulse narrower than 0.1 bins cannot be represented");

  ReferenceHistogram ref;
  ref.bin_size_ps = bin_size_ps;
  ref.bins.resize(static_cast<std::size_t>(num_bins));
  const double center = 0.5 * num_bins * bin_size_ps;
  for (int i = 0; i < num_bins; ++i) {
    const double t = (i + 0.5) * bin_size_ps;
    const double z = (t - center) / width_ps;
    ref.bins[static_cast<std::size_t>(i)] = std::exp(-0.5 * z * z);
  }
  return ref;
}

double sample_poisson(double mean, SplitMix64& rng) {
  if (mean <= 0.0) return 0.0;
  if (mean > 60.0) {
    // Poisson additivity: split until the inversion range is reached.
    return sample_poisson(mean / 2.0, rng) + sample_poisson(mean - mean / 2.0, rng);
  }
  const double u = rng.next_double();
  double p = std::exp(-mean);
  double cum = p;
  double k = 0.0;
  while (u > cum && k < 1e6) {
    k += 1.0;
    p *= mean / k;
    cum += p;
  }
  return k;
}

MeasurementRecord simulate_measurement(const PlaneGeometry& g, const ReflectanceParams& f,
                                       const CameraParams& c, const ReferenceHistogram& delta,
                                       const NoiseSpec& noise, std::uint64_t seed) {
  MeasurementRecord record;
  record.image = render_image(g, f, c, delta, seed, BinningMode::hard);
  record.reference = delta;
  record.truth = GroundTruth{g, f};
  record.meta.seed = seed;
  record.meta.noise = noise.kind;
  record.meta.photon_scale = noise.photon_scale;

  if (noise.kind == NoiseKind::poisson) {
    double peak = 0.0;
    for (const Histogram& h : record.image.zones) peak = std::max(peak, max_bin(h));
    if (peak > 0.0) {
      const double to_counts = noise.photon_scale / peak;
      SplitMix64 rng(mix_seed(seed, 0x506f6973736f6eULL));
      for (Histogram& h : record.image.zones)
        for (double& b : h.bins) b = sample_poisson(b * to_counts, rng) / to_counts;
    }
  }
  return record;
}

std::size_t generate_dataset(const SweepSpec& spec, const CameraParams& camera,
                             const std::function<void(const MeasurementRecord&)>& sink,
                             const std::string& camera_id) {
  spec.validate();
  camera.validate();
  const ReferenceHistogram delta =
      synth_reference(spec.ref_width_ps, spec.ref_bin_size_ps, spec.ref_num_bins);

  std::size_t index = 0;
  for (int ti = 0; ti < spec.theta_deg.count; ++ti) {
    for (int zi = 0; zi < spec.z0_m.count; ++zi) {
      for (int pi = 0; pi < spec.phi_deg.count; ++pi) {
        PlaneGeometry g{spec.theta_deg.at(ti), spec.z0_m.at(zi), spec.phi_deg.at(pi)};
        MeasurementRecord record = simulate_measurement(
            g, spec.reflectance, camera, delta, spec.noise, mix_seed(spec.seed, index));
        record.id = static_cast<std::int64_t>(index);
        record.meta.camera_id = camera_id;
        sink(record);
        ++index;
      }
    }
  }
  return index;
}

}  // namespace tofplane
