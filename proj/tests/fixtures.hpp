#pragma once

// Hand-built data sets for the fitting tests.

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "sivmag/spectrum.hpp"

namespace fixture {

// peaks: (amplitude, center_hz, fwhm_hz)
inline sivmag::OdmrSpectrum lorentzian_spectrum(double f0, double f1, std::size_t n, double baseline,
                                                const std::vector<std::array<double, 3>>& peaks,
                                                double noise_sigma = 0.0, std::uint64_t seed = 0) {
  sivmag::OdmrSpectrum s;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, noise_sigma > 0.0 ? noise_sigma : 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double f = f0 + (f1 - f0) * static_cast<double>(i) / static_cast<double>(n - 1);
    s.freq_hz.push_back(f);
    s.signal.push_back(oracle::lorentzian_sum(f, baseline, peaks) + (noise_sigma > 0.0 ? noise(rng) : 0.0));
  }
  s.meta.noise_sigma = noise_sigma;
  return s;
}

inline const std::vector<double>& saturation_powers() {
  static const std::vector<double> p{1, 5, 10, 20, 40, 60, 85, 150, 300};
  return p;
}

}  // namespace fixture
