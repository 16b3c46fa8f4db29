#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace tofplane {

/// Forward-mode dual number carrying a fixed block of eight tangents.
///
/// Eight is the widest jacobian the pipeline needs (camera calibration
/// optimizes eight scalars at once); wider parameter vectors are
/// differentiated in chunks of eight by the optimizer layer. All transcendental
/// rules below are exact, so derivatives are exact up to rounding.
class Dual {
 public:
  static constexpr std::size_t kWidth = 8;

  constexpr Dual() = default;
  constexpr Dual(double value) : v_(value) {}  // NOLINT: constants lift implicitly

  static Dual seeded(double value, std::size_t slot) {
    Dual d(value);
    d.d_[slot] = 1.0;
    return d;
  }

  double value() const { return v_; }
  double tangent(std::size_t i) const { return d_[i]; }

  Dual& operator+=(const Dual& o) {
    v_ += o.v_;
    for (std::size_t i = 0; i < kWidth; ++i) d_[i] += o.d_[i];
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    v_ -= o.v_;
    for (std::size_t i = 0; i < kWidth; ++i) d_[i] -= o.d_[i];
    return *this;
  }
  Dual& operator*=(const Dual& o) {
    for (std::size_t i = 0; i < kWidth; ++i) d_[i] = d_[i] * o.v_ + v_ * o.d_[i];
    v_ *= o.v_;
    return *this;
  }
  Dual& operator/=(const Dual& o) {
    const double inv = 1.0 / o.v_;
    for (std::size_t i = 0; i < kWidth; ++i) d_[i] = (d_[i] - v_ * inv * o.d_[i]) * inv;
    v_ *= inv;
    return *this;
  }

  /// Applies f' to the tangent block given the new value.
  Dual chain(double new_value, double dfdx) const {
    Dual r(new_value);
    for (std::size_t i = 0; i < kWidth; ++i) r.d_[i] = d_[i] * dfdx;
    return r;
  }

 private:
  double v_ = 0.0;
  std::array<double, kWidth> d_{};
};

inline Dual operator+(Dual a, const Dual& b) { return a += b; }
inline Dual operator-(Dual a, const Dual& b) { return a -= b; }
inline Dual operator*(Dual a, const Dual& b) { return a *= b; }
inline Dual operator/(Dual a, const Dual& b) { return a /= b; }
inline Dual operator-(const Dual& a) { return a.chain(-a.value(), -1.0); }
inline Dual operator+(const Dual& a) { return a; }

// Mixed forms avoid lifting plain constants to full tangent blocks.
inline Dual operator*(const Dual& a, double s) { return a.chain(a.value() * s, s); }
inline Dual operator*(double s, const Dual& a) { return a.chain(a.value() * s, s); }
inline Dual operator/(const Dual& a, double s) { return a.chain(a.value() / s, 1.0 / s); }
inline Dual operator+(const Dual& a, double s) { return a.chain(a.value() + s, 1.0); }
inline Dual operator+(double s, const Dual& a) { return a.chain(a.value() + s, 1.0); }
inline Dual operator-(const Dual& a, double s) { return a.chain(a.value() - s, 1.0); }
inline Dual operator-(double s, const Dual& a) { return a.chain(s - a.value(), -1.0); }

inline bool operator<(const Dual& a, const Dual& b) { return a.value() < b.value(); }
inline bool operator>(const Dual& a, const Dual& b) { return a.value() > b.value(); }
inline bool operator<=(const Dual& a, const Dual& b) { return a.value() <= b.value(); }
inline bool operator>=(const Dual& a, const Dual& b) { return a.value() >= b.value(); }
inline bool operator==(const Dual& a, const Dual& b) { return a.value() == b.value(); }

inline Dual exp(const Dual& a) {
  const double e = std::exp(a.value());
  return a.chain(e, e);
}
inline Dual log(const Dual& a) { return a.chain(std::log(a.value()), 1.0 / a.value()); }
inline Dual sqrt(const Dual& a) {
  const double s = std::sqrt(a.value());
  return a.chain(s, 0.5 / s);
}
inline Dual sin(const Dual& a) { return a.chain(std::sin(a.value()), std::cos(a.value())); }
inline Dual cos(const Dual& a) { return a.chain(std::cos(a.value()), -std::sin(a.value())); }
inline Dual abs(const Dual& a) { return a.value() < 0.0 ? -a : a; }

/// pow with a dual exponent; requires base > 0 (callers clamp beforehand).
inline Dual pow(const Dual& base, const Dual& ex) { return exp(ex * log(base)); }
inline Dual pow(const Dual& base, double ex) {
  const double p = std::pow(base.value(), ex);
  return base.chain(p, ex * std::pow(base.value(), ex - 1.0));
}

inline const Dual& max(const Dual& a, const Dual& b) { return a.value() < b.value() ? b : a; }
inline const Dual& min(const Dual& a, const Dual& b) { return b.value() < a.value() ? b : a; }

inline double value_of(const Dual& x) { return x.value(); }

inline bool is_finite(const Dual& x) {
  if (!std::isfinite(x.value())) return false;
  for (std::size_t i = 0; i < Dual::kWidth; ++i)
    if (!std::isfinite(x.tangent(i))) return false;
  return true;
}

}  // namespace tofplane
