#pragma once

// Run configuration: flat `key = value` text, `#` starts a comment.
// Units follow the command line (MHz, gauss, mW, dBm, ms).

#include <fstream>
#include <istream>
#include <set>
#include <string>

#include "sivmag/error.hpp"
#include "sivmag/io.hpp"
#include "sivmag/spectrum.hpp"
#include "sivmag/units.hpp"

namespace sivmag {

struct RunConfig {
  PhysicalConstants constants;
  SaturationParams saturation;
  MwResponseParams mw;
  AcquisitionConfig acquisition;
  double b_max_t = 200e-4;

  void validate() const {
    saturation.validate();
    mw.validate();
    acquisition.validate();
    if (!(b_max_t > 0.0)) throw InvalidArgument("b_max must be positive");
  }
};

inline const std::set<std::string>& config_keys() {
  static const std::set<std::string> keys{
      "d_mhz",    "g_factor", "i_s_mcps", "p0_mw",    "c_max",    "fwhm0_mhz",   "p_sat_dbm",
      "laser_mw", "mw_dbm",   "fmin_mhz", "fmax_mhz", "points",   "dwell_ms",    "b_max_gauss"};
  return keys;
}

/// Applies `key = value` lines on top of `base`. Unknown or repeated keys and
/// values outside the model's domain are rejected with the offending line.
inline RunConfig parse_config(std::istream& is, RunConfig base = {}) {
  std::string line;
  std::size_t lineno = 0;
  std::set<std::string> seen;
  double d_hz = base.constants.d_hz();
  double g = base.constants.g_factor();
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string_view t = detail::trim(std::string_view(line).substr(0, hash));
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) throw DataError("expected 'key = value'", lineno);
    const std::string key(detail::trim(t.substr(0, eq)));
    const std::string_view val = detail::trim(t.substr(eq + 1));
    if (!config_keys().contains(key)) throw DataError("unknown config key '" + key + "'", lineno);
    if (!seen.insert(key).second) throw DataError("duplicate config key '" + key + "'", lineno);

    auto& a = base.acquisition;
    if (key == "points") {
      a.n_points = static_cast<std::size_t>(parse_uint(val, lineno));
      continue;
    }
    const double v = parse_double(val, lineno);
    if (key == "d_mhz") d_hz = mhz_to_hz(v);
    else if (key == "g_factor") g = v;
    else if (key == "i_s_mcps") base.saturation.i_s_cps = v * 1e6;
    else if (key == "p0_mw") base.saturation.p0_mw = v;
    else if (key == "c_max") base.mw.c_max = v;
    else if (key == "fwhm0_mhz") base.mw.fwhm0_hz = mhz_to_hz(v);
    else if (key == "p_sat_dbm") base.mw.p_sat_dbm = v;
    else if (key == "laser_mw") a.laser_mw = v;
    else if (key == "mw_dbm") a.mw_dbm = v;
    else if (key == "fmin_mhz") a.f_start_hz = mhz_to_hz(v);
    else if (key == "fmax_mhz") a.f_stop_hz = mhz_to_hz(v);
    else if (key == "dwell_ms") a.dwell_s = v * 1e-3;
    else if (key == "b_max_gauss") base.b_max_t = gauss_to_tesla(v);
  }
  try {
    base.constants = PhysicalConstants(d_hz, g);
    base.validate();
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("invalid configuration: ") + e.what());
  }
  return base;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file '" + path + "'");
  return parse_config(in);
}

}  // namespace sivmag
