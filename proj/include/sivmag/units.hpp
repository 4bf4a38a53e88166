#pragma once

#include <cmath>
#include <numbers>

#include "sivmag/error.hpp"

namespace sivmag {

/// Bohr magneton divided by the Planck constant, Hz/T (CODATA).
inline constexpr double kBohrOverPlanckHzPerT = 1.39962449e10;

inline constexpr double kTeslaPerGauss = 1e-4;
inline constexpr double kHzPerMHz = 1e6;

constexpr double gauss_to_tesla(double g) { return g * kTeslaPerGauss; }
constexpr double tesla_to_gauss(double t) { return t / kTeslaPerGauss; }
constexpr double mhz_to_hz(double mhz) { return mhz * kHzPerMHz; }
constexpr double hz_to_mhz(double hz) { return hz / kHzPerMHz; }
constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Ground-state parameters of the spin-3/2 center.
///
/// The gyromagnetic ratio is derived from the g-factor rather than stored so
/// the two can never disagree.
class PhysicalConstants {
 public:
  PhysicalConstants() = default;

  PhysicalConstants(double d_hz, double g_factor) : d_hz_(d_hz), g_factor_(g_factor) {
    if (!(d_hz > 0.0) || !std::isfinite(d_hz))
      throw InvalidArgument("zero-field splitting D must be positive");
    if (!(g_factor > 0.0) || !std::isfinite(g_factor))
      throw InvalidArgument("g-factor must be positive");
  }

  double d_hz() const noexcept { return d_hz_; }
  double g_factor() const noexcept { return g_factor_; }
  double gyro_hz_per_t() const noexcept { return g_factor_ * kBohrOverPlanckHzPerT; }

  friend bool operator==(const PhysicalConstants&, const PhysicalConstants&) = default;

 private:
  double d_hz_ = 35e6;
  double g_factor_ = 2.0023;
};

}  // namespace sivmag
