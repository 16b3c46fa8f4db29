#pragma once

#include <cmath>
#include <cstdint>

namespace tofplane {

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s
inline constexpr double kPi = 3.14159265358979323846;

/// Round-trip flight time in picoseconds for one meter of range.
inline constexpr double kPsPerMeter = 2.0e12 / kSpeedOfLight;

inline double deg2rad(double d) { return d * (kPi / 180.0); }
inline double rad2deg(double r) { return r * (180.0 / kPi); }

// Scalar-generic hooks; the dual-number header adds the Dual overloads.
inline double value_of(double x) { return x; }
inline bool is_finite(double x) { return std::isfinite(x); }

template <class T>
struct Vec3T {
  T x{}, y{}, z{};
};

using Vec3 = Vec3T<double>;

template <class A, class B>
auto dot(const Vec3T<A>& a, const Vec3T<B>& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

template <class T>
Vec3T<T> cross(const Vec3T<T>& a, const Vec3T<T>& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

template <class A, class B>
auto operator+(const Vec3T<A>& a, const Vec3T<B>& b) -> Vec3T<decltype(a.x + b.x)> {
  return {a.x + b.x, a.y + b.y, a.z + b.z};
}

template <class A, class B>
auto operator-(const Vec3T<A>& a, const Vec3T<B>& b) -> Vec3T<decltype(a.x - b.x)> {
  return {a.x - b.x, a.y - b.y, a.z - b.z};
}

template <class A, class S>
auto operator*(const Vec3T<A>& a, const S& s) -> Vec3T<decltype(a.x * s)> {
  return {a.x * s, a.y * s, a.z * s};
}

template <class S, class A>
auto operator*(const S& s, const Vec3T<A>& a) -> Vec3T<decltype(s * a.x)> {
  return {s * a.x, s * a.y, s * a.z};
}

template <class T>
T norm(const Vec3T<T>& a) {
  using std::sqrt;
  return sqrt(dot(a, a));
}

inline Vec3 normalized(const Vec3& a) {
  const double n = norm(a);
  return {a.x / n, a.y / n, a.z / n};
}

/// splitmix64: tiny, fully pinned PRNG used wherever the library promises
/// bit-identical output for a given seed.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1).
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

/// Deterministic stream split; decorrelates per-zone / per-record substreams.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  SplitMix64 rng(seed ^ (0x9E3779B97F4A7C15ULL * (stream + 1)));
  return rng.next();
}

}  // namespace tofplane
