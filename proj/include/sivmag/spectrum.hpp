#pragma once

// Forward model of continuous-wave ODMR spectra.
//
// Signal convention: the fractional PL change is stored as a positive number,
// so resonances appear as peaks of height equal to the contrast.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "sivmag/error.hpp"
#include "sivmag/spin_model.hpp"
#include "sivmag/units.hpp"

namespace sivmag {

struct LorentzianPeak {
  double center_hz = 0.0;
  double fwhm_hz = 1.0;
  double amplitude = 0.0;
};

inline double lorentzian_value(const LorentzianPeak& peak, double f_hz) {
  if (!(peak.fwhm_hz > 0.0)) throw InvalidArgument("Lorentzian FWHM must be positive");
  const double x = (f_hz - peak.center_hz) / (0.5 * peak.fwhm_hz);
  return peak.amplitude / (1.0 + x * x);
}

/// PL saturation I(P) = I_s / (1 + P0/P).
struct SaturationParams {
  double i_s_cps = 935e6;
  double p0_mw = 300.0;

  void validate() const {
    if (!(i_s_cps > 0.0)) throw InvalidArgument("saturation count rate must be positive");
    if (!(p0_mw > 0.0)) throw InvalidArgument("saturation power must be positive");
  }
};

inline double photon_rate(double laser_mw, const SaturationParams& sat) {
  sat.validate();
  if (!(laser_mw > 0.0)) throw InvalidArgument("laser power must be positive");
  return sat.i_s_cps / (1.0 + sat.p0_mw / laser_mw);
}

/// Two-level saturation response to the microwave drive. With
/// s = 10^((P - P_sat)/10): contrast = c_max s/(1+s), fwhm = fwhm0 sqrt(1+s).
struct MwResponseParams {
  double c_max = 2.7e-3;
  double fwhm0_hz = 7.5e6;
  double p_sat_dbm = 16.0;

  void validate() const {
    if (!(c_max > 0.0 && c_max < 1.0)) throw InvalidArgument("c_max must lie in (0, 1)");
    if (!(fwhm0_hz > 0.0)) throw InvalidArgument("unbroadened linewidth must be positive");
    if (!std::isfinite(p_sat_dbm)) throw InvalidArgument("MW saturation power must be finite");
  }
};

struct MwResponse {
  double contrast = 0.0;
  double fwhm_hz = 0.0;
};

inline double mw_saturation_parameter(double mw_dbm, const MwResponseParams& params) {
  return std::pow(10.0, (mw_dbm - params.p_sat_dbm) / 10.0);
}

inline MwResponse mw_response(double mw_dbm, const MwResponseParams& params) {
  params.validate();
  const double s = mw_saturation_parameter(mw_dbm, params);
  return {params.c_max * s / (1.0 + s), params.fwhm0_hz * std::sqrt(1.0 + s)};
}

struct AcquisitionConfig {
  double laser_mw = 60.0;
  double mw_dbm = 18.0;
  double f_start_hz = 50e6;
  double f_stop_hz = 280e6;
  std::size_t n_points = 461;
  double dwell_s = 10e-3;
  std::optional<std::uint64_t> seed;  // absent => noiseless

  void validate() const {
    if (!(f_stop_hz > f_start_hz)) throw InvalidArgument("frequency stop must exceed start");
    if (n_points < 2) throw InvalidArgument("need at least two frequency points");
    if (!(dwell_s > 0.0)) throw InvalidArgument("dwell time must be positive");
    if (!(laser_mw > 0.0)) throw InvalidArgument("laser power must be positive");
  }

  double frequency(std::size_t i) const {
    if (i + 1 == n_points) return f_stop_hz;
    return f_start_hz + (f_stop_hz - f_start_hz) * static_cast<double>(i) /
                            static_cast<double>(n_points - 1);
  }
};

struct SpectrumMeta {
  AcquisitionConfig acquisition;
  FieldVector field;
  PhysicalConstants constants;
  TransitionPair transitions;
  double noise_sigma = 0.0;
  // Set when a model resonance falls outside [f_start, f_stop].
  bool resonance_outside_grid = false;
};

struct OdmrSpectrum {
  std::vector<double> freq_hz;
  std::vector<double> signal;
  SpectrumMeta meta;

  std::size_t size() const { return freq_hz.size(); }

  void validate() const {
    if (freq_hz.size() != signal.size()) throw InvalidArgument("frequency and signal lengths differ");
    for (std::size_t i = 0; i < size(); ++i) {
      if (!std::isfinite(freq_hz[i]) || !std::isfinite(signal[i]))
        throw InvalidArgument("spectrum contains non-finite values");
      if (i > 0 && !(freq_hz[i] > freq_hz[i - 1]))
        throw InvalidArgument("frequency grid must be strictly increasing");
    }
  }
};

/// Per-point shot-noise level 1/sqrt(R t).
inline double shot_noise_sigma(double rate_cps, double dwell_s) {
  if (!(rate_cps > 0.0) || !(dwell_s > 0.0)) throw InvalidArgument("rate and dwell must be positive");
  return 1.0 / std::sqrt(rate_cps * dwell_s);
}

/// Two Lorentzians at the model resonances on a zero baseline, plus i.i.d.
/// Gaussian noise when a seed is given.
inline OdmrSpectrum synthesize_spectrum(const AcquisitionConfig& cfg, const FieldVector& field,
                                        const PhysicalConstants& consts,
                                        const SaturationParams& sat = {},
                                        const MwResponseParams& mw = {}) {
  cfg.validate();
  const TransitionPair tp = transitions(field, consts);
  const MwResponse resp = mw_response(cfg.mw_dbm, mw);
  const LorentzianPeak p1{tp.nu1_hz, resp.fwhm_hz, resp.contrast};
  const LorentzianPeak p2{tp.nu2_hz, resp.fwhm_hz, resp.contrast};

  OdmrSpectrum out;
  out.meta.acquisition = cfg;
  out.meta.field = field;
  out.meta.constants = consts;
  out.meta.transitions = tp;
  auto outside = [&](double nu) { return nu < cfg.f_start_hz || nu > cfg.f_stop_hz; };
  out.meta.resonance_outside_grid = outside(tp.nu1_hz) || outside(tp.nu2_hz);

  out.freq_hz.resize(cfg.n_points);
  out.signal.resize(cfg.n_points);
  for (std::size_t i = 0; i < cfg.n_points; ++i) {
    const double f = cfg.frequency(i);
    out.freq_hz[i] = f;
    out.signal[i] = lorentzian_value(p1, f) + lorentzian_value(p2, f);
  }

  if (cfg.seed) {
    const double sigma = shot_noise_sigma(photon_rate(cfg.laser_mw, sat), cfg.dwell_s);
    out.meta.noise_sigma = sigma;
    std::mt19937_64 rng(*cfg.seed);
    std::normal_distribution<double> noise(0.0, sigma);
    for (double& s : out.signal) s += noise(rng);
  }
  return out;
}

}  // namespace sivmag
