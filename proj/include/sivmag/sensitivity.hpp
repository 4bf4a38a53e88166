#pragma once

// Shot-noise-limited DC field sensitivity of a Lorentzian ODMR line:
//
//   eta = 0.77 * fwhm / (gamma * C * sqrt(R))      [T / sqrt(Hz)]
//
// with gamma = g mu_B / h in Hz/T.

#include <cmath>
#include <vector>

#include "sivmag/error.hpp"
#include "sivmag/spectrum.hpp"
#include "sivmag/units.hpp"

namespace sivmag {

/// Slope factor of a Lorentzian line for shot-noise-limited CW ODMR.
inline constexpr double kLorentzianSlopeFactor = 0.77;

inline double estimate_sensitivity(double contrast, double fwhm_hz, double rate_cps,
                                   const PhysicalConstants& consts) {
  if (!(contrast > 0.0) || !(fwhm_hz > 0.0) || !(rate_cps > 0.0))
    throw InvalidArgument("contrast, linewidth and photon rate must be positive");
  return kLorentzianSlopeFactor * fwhm_hz / (consts.gyro_hz_per_t() * contrast * std::sqrt(rate_cps));
}

class SensitivityBudget {
 public:
  SensitivityBudget(double contrast, double fwhm_hz, double rate_cps, const PhysicalConstants& consts)
      : contrast_(contrast),
        fwhm_hz_(fwhm_hz),
        rate_cps_(rate_cps),
        eta_(estimate_sensitivity(contrast, fwhm_hz, rate_cps, consts)) {}

  double contrast() const noexcept { return contrast_; }
  double fwhm_hz() const noexcept { return fwhm_hz_; }
  double rate_cps() const noexcept { return rate_cps_; }
  double eta_t_per_sqrt_hz() const noexcept { return eta_; }

 private:
  double contrast_;
  double fwhm_hz_;
  double rate_cps_;
  double eta_;
};

struct LaserSweepRow {
  double laser_mw = 0.0;
  double rate_cps = 0.0;
  double eta_t_per_sqrt_hz = 0.0;
};

/// Contrast and width held fixed; only the photon rate follows the laser.
inline std::vector<LaserSweepRow> laser_sweep_sensitivity(const std::vector<double>& powers_mw, double contrast,
                                                          double fwhm_hz, const SaturationParams& sat,
                                                          const PhysicalConstants& consts) {
  std::vector<LaserSweepRow> rows;
  rows.reserve(powers_mw.size());
  for (double p : powers_mw) {
    const double r = photon_rate(p, sat);
    rows.push_back({p, r, estimate_sensitivity(contrast, fwhm_hz, r, consts)});
  }
  return rows;
}

struct MwSweepRow {
  double mw_dbm = 0.0;
  double contrast = 0.0;
  double fwhm_hz = 0.0;
  double eta_t_per_sqrt_hz = 0.0;
};

struct MwSweep {
  std::vector<MwSweepRow> rows;
  std::size_t argmin = 0;  // row with the best (smallest) eta; first on ties
};

inline MwSweep mw_sweep_sensitivity(const std::vector<double>& mw_dbm, const MwResponseParams& params,
                                    double rate_cps, const PhysicalConstants& consts) {
  if (!(rate_cps > 0.0)) throw InvalidArgument("photon rate must be positive");
  if (mw_dbm.empty()) throw InvalidArgument("empty microwave power list");
  MwSweep out;
  out.rows.reserve(mw_dbm.size());
  for (double p : mw_dbm) {
    const MwResponse resp = mw_response(p, params);
    out.rows.push_back({p, resp.contrast, resp.fwhm_hz, estimate_sensitivity(resp.contrast, resp.fwhm_hz, rate_cps, consts)});
  }
  for (std::size_t i = 1; i < out.rows.size(); ++i)
    if (out.rows[i].eta_t_per_sqrt_hz < out.rows[out.argmin].eta_t_per_sqrt_hz) out.argmin = i;
  return out;
}

struct MwOptimum {
  double saturation_parameter = 0.0;
  double mw_dbm = 0.0;
  double eta_t_per_sqrt_hz = 0.0;
};

/// Numerical minimum of eta over the drive power (golden-section search in
/// log10 s over s in [1e-4, 1e4]).
inline MwOptimum optimal_mw_drive(const MwResponseParams& params, double rate_cps, const PhysicalConstants& consts) {
  auto eta_at = [&](double log_s) {
    const double dbm = params.p_sat_dbm + 10.0 * log_s;
    const MwResponse r = mw_response(dbm, params);
    return estimate_sensitivity(r.contrast, r.fwhm_hz, rate_cps, consts);
  };
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = -4.0;
  double b = 4.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = eta_at(c);
  double fd = eta_at(d);
  while (b - a > 1e-12) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = eta_at(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = eta_at(d);
    }
  }
  const double log_s = 0.5 * (a + b);
  return {std::pow(10.0, log_s), params.p_sat_dbm + 10.0 * log_s, eta_at(log_s)};
}

/// Sensitivity if the photon rate were raised from I(P) to the saturation
/// count rate I_s: eta_sat = eta sqrt(I(P)/I_s).
inline double project_saturation(double eta_at_p, double laser_mw, const SaturationParams& sat) {
  if (!(eta_at_p > 0.0)) throw InvalidArgument("sensitivity must be positive");
  return eta_at_p * std::sqrt(photon_rate(laser_mw, sat) / sat.i_s_cps);
}

}  // namespace sivmag
