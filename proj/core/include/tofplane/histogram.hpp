#pragma once

#include <algorithm>
#include <array>
#include <vector>

#include "tofplane/error.hpp"

namespace tofplane {

/// Photon-count waveform; bins are nonnegative real counts.
struct Histogram {
  std::vector<double> bins;
};

inline double max_bin(const Histogram& h) {
  if (h.bins.empty()) return 0.0;
  return *std::max_element(h.bins.begin(), h.bins.end());
}

inline double total_counts(const Histogram& h) {
  double s = 0.0;
  for (double b : h.bins) s += b;
  return s;
}

/// One sensor measurement: nine zone histograms, row-major zone order.
struct TransientImage {
  std::array<Histogram, 9> zones;
};

/// The sensor's record of its own laser pulse; its bin size generally differs
/// from the transient histograms'.
struct ReferenceHistogram {
  std::vector<double> bins;
  double bin_size_ps = 40.0;

  void validate() const {
    require(!bins.empty(), Errc::invalid_reference, "reference histogram is empty");
    bool any = false;
    for (double b : bins) {
      require(b >= 0.0, Errc::invalid_reference, "reference bins must be nonnegative");
      if (b > 0.0) any = true;
    }
    require(any, Errc::invalid_reference, "reference histogram has no positive bin");
  }
};

}  // namespace tofplane
