#pragma once

// Text formats.
//
// Spectrum CSV:
//   # odmr-csv v1
//   frequency_hz,signal
//   # key=value          (metadata, any number of lines)
//   <frequency>,<signal> (one row per point)
//
// Sweep CSV:
//   # sweep-csv v1
//   <kind-specific header>
//   # key=value
//   <rows>
//
// Numbers are written in the shortest form that reads back to the same double.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "sivmag/error.hpp"
#include "sivmag/spectrum.hpp"

namespace sivmag {

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace detail

/// Strict decimal parse of a whole field.
inline double parse_double(std::string_view text, std::size_t line = 0) {
  text = detail::trim(text);
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || !std::isfinite(v))
    throw DataError("not a finite number: '" + std::string(text) + "'", line);
  return v;
}

inline std::uint64_t parse_uint(std::string_view text, std::size_t line = 0) {
  text = detail::trim(text);
  std::uint64_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw DataError("not an unsigned integer: '" + std::string(text) + "'", line);
  return v;
}

// ---------------------------------------------------------------------------
// Spectrum CSV

inline constexpr std::string_view kSpectrumMagic = "# odmr-csv v1";
inline constexpr std::string_view kSpectrumHeader = "frequency_hz,signal";

inline void write_spectrum_csv(std::ostream& os, const OdmrSpectrum& spec) {
  const auto& m = spec.meta;
  const auto& a = m.acquisition;
  os << kSpectrumMagic << '\n' << kSpectrumHeader << '\n';
  os << "# b0_t=" << format_double(m.field.b0_t()) << '\n';
  os << "# theta_rad=" << format_double(m.field.theta_rad()) << '\n';
  os << "# d_hz=" << format_double(m.constants.d_hz()) << '\n';
  os << "# g_factor=" << format_double(m.constants.g_factor()) << '\n';
  os << "# laser_mw=" << format_double(a.laser_mw) << '\n';
  os << "# mw_dbm=" << format_double(a.mw_dbm) << '\n';
  os << "# dwell_s=" << format_double(a.dwell_s) << '\n';
  if (a.seed) os << "# seed=" << *a.seed << '\n';
  os << "# noise_sigma=" << format_double(m.noise_sigma) << '\n';
  os << "# nu1_hz=" << format_double(m.transitions.nu1_hz) << '\n';
  os << "# nu2_hz=" << format_double(m.transitions.nu2_hz) << '\n';
  if (m.resonance_outside_grid) os << "# warning=resonance_outside_grid\n";
  for (std::size_t i = 0; i < spec.size(); ++i)
    os << format_double(spec.freq_hz[i]) << ',' << format_double(spec.signal[i]) << '\n';
}

/// Reads a spectrum CSV. Known metadata keys repopulate `meta`; unknown keys
/// are kept in `extra` if provided.
inline OdmrSpectrum read_spectrum_csv(std::istream& is, std::map<std::string, std::string>* extra = nullptr) {
  std::string line;
  std::size_t lineno = 0;
  auto next = [&]() {
    if (!std::getline(is, line)) return false;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };
  if (!next() || detail::trim(line) != kSpectrumMagic) throw DataError("missing '# odmr-csv v1' signature", 1);
  if (!next() || detail::trim(line) != kSpectrumHeader) throw DataError("expected header 'frequency_hz,signal'", 2);

  OdmrSpectrum spec;
  double b0 = 0.0;
  double theta = 0.0;
  double d_hz = PhysicalConstants{}.d_hz();
  double g = PhysicalConstants{}.g_factor();
  while (next()) {
    const std::string_view t = detail::trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      const std::string_view body = detail::trim(t.substr(1));
      const auto eq = body.find('=');
      if (eq == std::string_view::npos) continue;  // free-form comment
      const std::string key(detail::trim(body.substr(0, eq)));
      const std::string_view val = detail::trim(body.substr(eq + 1));
      auto& a = spec.meta.acquisition;
      if (key == "b0_t") b0 = parse_double(val, lineno);
      else if (key == "theta_rad") theta = parse_double(val, lineno);
      else if (key == "d_hz") d_hz = parse_double(val, lineno);
      else if (key == "g_factor") g = parse_double(val, lineno);
      else if (key == "laser_mw") a.laser_mw = parse_double(val, lineno);
      else if (key == "mw_dbm") a.mw_dbm = parse_double(val, lineno);
      else if (key == "dwell_s") a.dwell_s = parse_double(val, lineno);
      else if (key == "noise_sigma") spec.meta.noise_sigma = parse_double(val, lineno);
      else if (key == "nu1_hz") spec.meta.transitions.nu1_hz = parse_double(val, lineno);
      else if (key == "nu2_hz") spec.meta.transitions.nu2_hz = parse_double(val, lineno);
      else if (key == "seed") a.seed = parse_uint(val, lineno);
      else if (key == "warning") spec.meta.resonance_outside_grid = val == "resonance_outside_grid";
      else if (extra) (*extra)[key] = std::string(val);
      continue;
    }
    const auto fields = detail::split(t, ',');
    if (fields.size() != 2) throw DataError("expected 2 comma-separated values", lineno);
    const double f = parse_double(fields[0], lineno);
    const double s = parse_double(fields[1], lineno);
    if (!spec.freq_hz.empty() && !(f > spec.freq_hz.back()))
      throw DataError("frequencies must be strictly increasing", lineno);
    spec.freq_hz.push_back(f);
    spec.signal.push_back(s);
  }
  if (spec.freq_hz.size() < 2) throw DataError("spectrum has fewer than two points", lineno);
  try {
    spec.meta.field = FieldVector(b0, theta);
    spec.meta.constants = PhysicalConstants(d_hz, g);
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("bad metadata: ") + e.what());
  }
  auto& a = spec.meta.acquisition;
  a.f_start_hz = spec.freq_hz.front();
  a.f_stop_hz = spec.freq_hz.back();
  a.n_points = spec.freq_hz.size();
  return spec;
}

// ---------------------------------------------------------------------------
// Sweep CSV

inline constexpr std::string_view kSweepMagic = "# sweep-csv v1";

struct SweepTable {
  std::string kind;  // field | angle | laser | mw
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<std::pair<std::string, std::string>> meta;

  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    throw DataError("sweep table has no column '" + std::string(name) + "'");
  }
  std::vector<double> values(std::string_view name) const {
    const std::size_t c = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[c]);
    return out;
  }
};

inline void write_sweep_csv(std::ostream& os, const SweepTable& table) {
  os << kSweepMagic << '\n';
  for (std::size_t i = 0; i < table.columns.size(); ++i) os << (i ? "," : "") << table.columns[i];
  os << '\n';
  os << "# kind=" << table.kind << '\n';
  for (const auto& [k, v] : table.meta) os << "# " << k << '=' << v << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_double(row[i]);
    os << '\n';
  }
}

inline SweepTable read_sweep_csv(std::istream& is) {
  SweepTable t;
  std::string line;
  std::size_t lineno = 0;
  auto next = [&]() {
    if (!std::getline(is, line)) return false;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };
  if (!next() || detail::trim(line) != kSweepMagic) throw DataError("missing '# sweep-csv v1' signature", 1);
  if (!next() || detail::trim(line).empty()) throw DataError("missing column header", 2);
  for (auto c : detail::split(detail::trim(line), ',')) {
    if (c.empty()) throw DataError("empty column name", lineno);
    t.columns.emplace_back(c);
  }
  while (next()) {
    const std::string_view s = detail::trim(line);
    if (s.empty()) continue;
    if (s.front() == '#') {
      const std::string_view body = detail::trim(s.substr(1));
      const auto eq = body.find('=');
      if (eq == std::string_view::npos) continue;
      const std::string key(detail::trim(body.substr(0, eq)));
      const std::string val(detail::trim(body.substr(eq + 1)));
      if (key == "kind") t.kind = val;
      else t.meta.emplace_back(key, val);
      continue;
    }
    const auto fields = detail::split(s, ',');
    if (fields.size() != t.columns.size())
      throw DataError("expected " + std::to_string(t.columns.size()) + " values", lineno);
    std::vector<double> row;
    row.reserve(fields.size());
    for (auto f : fields) row.push_back(parse_double(f, lineno));
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace sivmag
