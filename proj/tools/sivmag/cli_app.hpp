#pragma once

// Command-line front end. `run_cli` never calls exit() so tests can drive it
// in-process with string streams.
//
// Exit codes: 0 success, 1 I/O or data error, 2 usage error.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sivmag/sivmag.hpp"

namespace sivmag::cli {

using json = nlohmann::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitData = 1;
inline constexpr int kExitUsage = 2;

struct UsageError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

inline std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

inline std::string fmt(const char* pattern, double a, double b) {
  char buf[96];
  std::snprintf(buf, sizeof buf, pattern, a, b);
  return buf;
}

// Writes to `path`, or to `fallback` when the path is empty or "-".
template <class Fn>
void emit(const std::string& path, std::ostream& fallback, Fn&& write) {
  if (path.empty() || path == "-") {
    write(fallback);
    return;
  }
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  write(os);
  os.flush();
  if (!os) throw IoError("write to '" + path + "' failed");
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path + "'");
  return is;
}

inline std::vector<double> linspace(double a, double b, std::size_t n) {
  if (n < 2) throw UsageError("--steps must be at least 2");
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i)
    v[i] = i + 1 == n ? b : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

inline void require_range(double lo, double hi, const char* what) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(hi > lo)) throw UsageError(std::string("bad range for ") + what);
}

inline void write_svg(const std::string& path, const svg::LinePlot& plot) {
  if (path.empty()) return;
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os << plot.render();
  if (!os) throw IoError("write to '" + path + "' failed");
}

inline std::string fit_display(const std::string& name, double value, double sigma) {
  if (name.rfind("center_", 0) == 0 || name.rfind("fwhm_", 0) == 0)
    return fmt("%.4f +/- %.4f MHz", hz_to_mhz(value), hz_to_mhz(sigma));
  if (name.rfind("amplitude_", 0) == 0 || name == "baseline")
    return fmt("%.4f +/- %.4f permille", 1e3 * value, 1e3 * sigma);
  if (name == "i_s_cps") return fmt("%.2f +/- %.2f Mcps", value / 1e6, sigma / 1e6);
  if (name == "p0_mw") return fmt("%.2f +/- %.2f mW", value, sigma);
  return fmt("%g +/- %g", value, sigma);
}

inline json fit_to_json(const FitResult& fit) {
  json j;
  for (const auto& p : fit.params) {
    j[p.name] = p.value;
    j[p.name + "_sigma"] = p.sigma;
    j[p.name + "_display"] = fit_display(p.name, p.value, p.sigma);
  }
  j["residual_rms"] = fit.residual_rms;
  j["iterations"] = fit.iterations;
  j["converged"] = fit.converged;
  return j;
}

struct Options {
  std::string config_path;

  // simulate
  double sim_b0_gauss = 0.0;
  double sim_theta_deg = 0.0;
  double sim_laser_mw = 0.0;
  double sim_mw_dbm = 0.0;
  double sim_fmin_mhz = 0.0;
  double sim_fmax_mhz = 0.0;
  std::size_t sim_points = 0;
  double sim_dwell_ms = 0.0;
  std::uint64_t sim_seed = 0;
  std::string sim_out;
  std::string sim_svg;

  // fit
  std::string fit_kind;
  std::string fit_input;
  int fit_peaks = 2;
  std::string fit_weighting = "uniform";

  // invert
  double inv_nu1_mhz = 0.0;
  double inv_nu2_mhz = 0.0;
  bool inv_axial = false;
  double inv_sigma_khz = 0.0;

  // sweep
  std::string sweep_kind;
  double sweep_from = 0.0;
  double sweep_to = 0.0;
  std::size_t sweep_steps = 0;
  double sweep_b0_gauss = 60.0;
  double sweep_theta_deg = 0.0;
  double sweep_contrast = 1.8e-3;
  double sweep_fwhm_mhz = 13.0;
  double sweep_rate_cps = 0.0;
  std::vector<double> sweep_powers;
  std::string sweep_out;
  std::string sweep_svg;

  // sensitivity
  double sens_contrast = 0.0;
  double sens_fwhm_mhz = 0.0;
  double sens_rate_cps = 0.0;
};

inline RunConfig resolve_config(const std::string& flag_path) {
  std::string path = flag_path;
  if (path.empty())
    if (const char* env = std::getenv("ODMR_CONFIG")) path = env;
  if (path.empty()) return {};
  return load_config(path);
}

// ---------------------------------------------------------------------------

inline int cmd_simulate(const CLI::App& sub, const Options& o, const RunConfig& cfg, std::ostream& out) {
  AcquisitionConfig acq = cfg.acquisition;
  if (sub.count("--laser-mw")) acq.laser_mw = o.sim_laser_mw;
  if (sub.count("--mw-dbm")) acq.mw_dbm = o.sim_mw_dbm;
  if (sub.count("--fmin-mhz")) acq.f_start_hz = mhz_to_hz(o.sim_fmin_mhz);
  if (sub.count("--fmax-mhz")) acq.f_stop_hz = mhz_to_hz(o.sim_fmax_mhz);
  if (sub.count("--points")) acq.n_points = o.sim_points;
  if (sub.count("--dwell-ms")) acq.dwell_s = o.sim_dwell_ms * 1e-3;
  if (sub.count("--seed")) acq.seed = o.sim_seed;
  try {
    acq.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  if (o.sim_b0_gauss < 0.0) throw UsageError("--b0-gauss must be non-negative");
  const FieldVector field = FieldVector::from_gauss_degrees(o.sim_b0_gauss, o.sim_theta_deg);
  const OdmrSpectrum spec = synthesize_spectrum(acq, field, cfg.constants, cfg.saturation, cfg.mw);
  emit(o.sim_out, out, [&](std::ostream& os) { write_spectrum_csv(os, spec); });

  if (!o.sim_svg.empty()) {
    svg::Series s{"signal", {}, spec.signal};
    for (double f : spec.freq_hz) s.x.push_back(hz_to_mhz(f));
    svg::LinePlot plot(fmt("ODMR, B0 = %.1f G, theta = %.1f deg", o.sim_b0_gauss, o.sim_theta_deg),
                       "frequency (MHz)", "dPL/PL");
    plot.add(std::move(s));
    write_svg(o.sim_svg, plot);
  }
  return kExitOk;
}

inline int cmd_fit(const Options& o, std::ostream& out) {
  std::ifstream is = open_input(o.fit_input);
  FitResult fit;
  if (o.fit_kind == "odmr") {
    const OdmrSpectrum spec = read_spectrum_csv(is);
    fit = fit_lorentzian_multi(spec, o.fit_peaks);
  } else {
    const SweepTable table = read_sweep_csv(is);
    const auto weighting = o.fit_weighting == "relative" ? SaturationWeighting::relative : SaturationWeighting::uniform;
    try {
      fit = fit_saturation(table.values("laser_mw"), table.values("rate_cps"), weighting);
    } catch (const InvalidArgument& e) {
      throw DataError(e.what());
    }
  }
  out << fit_to_json(fit).dump(2) << '\n';
  return kExitOk;
}

inline int cmd_invert(const Options& o, const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const double nu1 = mhz_to_hz(o.inv_nu1_mhz);
  const double nu2 = mhz_to_hz(o.inv_nu2_mhz);
  if (!(nu1 > 0.0) || !(nu2 > 0.0)) throw UsageError("resonance frequencies must be positive");
  json j;
  if (o.inv_axial) {
    const AxialInversion r = axial_invert(nu1, nu2, cfg.constants);
    j["b0_t"] = r.b0_t;
    j["theta_rad"] = 0.0;
    j["consistency_residual_hz"] = r.consistency_residual_hz;
    j["b0_display"] = fmt("%.3f G", tesla_to_gauss(r.b0_t));
    j["theta_display"] = "0 deg";
  } else {
    InversionOptions opt;
    opt.b_max_t = cfg.b_max_t;
    opt.freq_sigma_hz = o.inv_sigma_khz * 1e3;
    const InversionResult r = FieldInverter(cfg.constants, opt).invert(nu1, nu2);
    j["b0_t"] = r.b0_t;
    j["theta_rad"] = r.theta_rad;
    j["residual_hz"] = r.residual_hz;
    j["degenerate"] = r.degenerate;
    j["condition"] = r.condition;
    j["b0_display"] = fmt("%.3f G", tesla_to_gauss(r.b0_t));
    j["theta_display"] = fmt("%.2f deg", rad_to_deg(r.theta_rad));
    if (r.degenerate)
      err << "warning: degenerate geometry, (B0, theta) is not uniquely determined by these lines\n";
  }
  out << j.dump(2) << '\n';
  return kExitOk;
}

inline int cmd_sweep(const CLI::App& sub, const Options& o, const RunConfig& cfg, std::ostream& out) {
  auto range = [&](double lo, double hi, std::size_t n) {
    const double a = sub.count("--from") ? o.sweep_from : lo;
    const double b = sub.count("--to") ? o.sweep_to : hi;
    require_range(a, b, "--from/--to");
    return linspace(a, b, sub.count("--steps") ? o.sweep_steps : n);
  };
  SweepTable t;
  t.kind = o.sweep_kind;
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<svg::Series> series;

  if (o.sweep_kind == "field") {
    const auto gauss = range(0.0, 120.0, 121);
    if (gauss.front() < 0.0) throw UsageError("field sweep must start at B0 >= 0");
    std::vector<double> b;
    for (double g : gauss) b.push_back(gauss_to_tesla(g));
    const auto pts = field_sweep(b, deg_to_rad(o.sweep_theta_deg), cfg.constants);
    t.columns = {"b0_t", "b0_gauss", "nu1_hz", "nu2_hz"};
    t.meta.emplace_back("theta_rad", format_double(deg_to_rad(o.sweep_theta_deg)));
    series = {{"nu1", {}, {}}, {"nu2", {}, {}}};
    for (std::size_t i = 0; i < pts.size(); ++i) {
      t.rows.push_back({pts[i].b0_t, gauss[i], pts[i].nu1_hz, pts[i].nu2_hz});
      for (auto& s : series) s.x.push_back(gauss[i]);
      series[0].y.push_back(hz_to_mhz(pts[i].nu1_hz));
      series[1].y.push_back(hz_to_mhz(pts[i].nu2_hz));
    }
    title = fmt("Resonances vs field, theta = %.1f deg", o.sweep_theta_deg);
    x_label = "B0 (G)";
    y_label = "frequency (MHz)";
  } else if (o.sweep_kind == "angle") {
    const auto deg = range(0.0, 90.0, 91);
    if (!(o.sweep_b0_gauss > 0.0)) throw UsageError("--b0-gauss must be positive");
    std::vector<double> th;
    for (double d : deg) th.push_back(deg_to_rad(d));
    const double b0 = gauss_to_tesla(o.sweep_b0_gauss);
    const auto pts = angle_sweep(b0, th, cfg.constants);
    t.columns = {"theta_rad", "theta_deg", "nu1_hz", "nu2_hz"};
    t.meta.emplace_back("b0_t", format_double(b0));
    series = {{"nu1", {}, {}}, {"nu2", {}, {}}};
    for (std::size_t i = 0; i < pts.size(); ++i) {
      t.rows.push_back({th[i], deg[i], pts[i].nu1_hz, pts[i].nu2_hz});
      for (auto& s : series) s.x.push_back(deg[i]);
      series[0].y.push_back(hz_to_mhz(pts[i].nu1_hz));
      series[1].y.push_back(hz_to_mhz(pts[i].nu2_hz));
    }
    title = fmt("Resonances vs angle, B0 = %.1f G", o.sweep_b0_gauss);
    x_label = "theta (deg)";
    y_label = "frequency (MHz)";
  } else if (o.sweep_kind == "laser") {
    std::vector<double> powers = o.sweep_powers;
    if (powers.empty()) powers = range(1.0, 300.0, 300);
    for (double p : powers)
      if (!(p > 0.0)) throw UsageError("laser powers must be positive");
    if (!(o.sweep_contrast > 0.0) || !(o.sweep_fwhm_mhz > 0.0))
      throw UsageError("--contrast and --fwhm-mhz must be positive");
    const auto rows =
        laser_sweep_sensitivity(powers, o.sweep_contrast, mhz_to_hz(o.sweep_fwhm_mhz), cfg.saturation, cfg.constants);
    t.columns = {"laser_mw", "rate_cps", "eta_t_per_sqrt_hz"};
    t.meta.emplace_back("contrast", format_double(o.sweep_contrast));
    t.meta.emplace_back("fwhm_hz", format_double(mhz_to_hz(o.sweep_fwhm_mhz)));
    series = {{"", {}, {}}};
    for (const auto& r : rows) {
      t.rows.push_back({r.laser_mw, r.rate_cps, r.eta_t_per_sqrt_hz});
      series[0].x.push_back(r.laser_mw);
      series[0].y.push_back(r.eta_t_per_sqrt_hz * 1e6);
    }
    title = "Sensitivity vs laser power";
    x_label = "laser power (mW)";
    y_label = "eta (uT/sqrt(Hz))";
  } else {
    const auto dbm = range(0.0, 30.0, 61);
    const double rate = sub.count("--rate-cps") ? o.sweep_rate_cps : photon_rate(cfg.acquisition.laser_mw, cfg.saturation);
    if (!(rate > 0.0)) throw UsageError("--rate-cps must be positive");
    const MwSweep sw = mw_sweep_sensitivity(dbm, cfg.mw, rate, cfg.constants);
    t.columns = {"mw_dbm", "contrast", "fwhm_hz", "eta_t_per_sqrt_hz"};
    t.meta.emplace_back("rate_cps", format_double(rate));
    t.meta.emplace_back("best_mw_dbm", format_double(sw.rows[sw.argmin].mw_dbm));
    series = {{"", {}, {}}};
    for (const auto& r : sw.rows) {
      t.rows.push_back({r.mw_dbm, r.contrast, r.fwhm_hz, r.eta_t_per_sqrt_hz});
      series[0].x.push_back(r.mw_dbm);
      series[0].y.push_back(r.eta_t_per_sqrt_hz * 1e6);
    }
    title = "Sensitivity vs microwave power";
    x_label = "microwave power (dBm)";
    y_label = "eta (uT/sqrt(Hz))";
  }

  emit(o.sweep_out, out, [&](std::ostream& os) { write_sweep_csv(os, t); });
  if (!o.sweep_svg.empty()) {
    svg::LinePlot plot(title, x_label, y_label);
    for (auto& s : series) plot.add(std::move(s));
    write_svg(o.sweep_svg, plot);
  }
  return kExitOk;
}

inline int cmd_sensitivity(const CLI::App& sub, const Options& o, const RunConfig& cfg, std::ostream& out) {
  const double rate = sub.count("--rate-cps") ? o.sens_rate_cps : photon_rate(cfg.acquisition.laser_mw, cfg.saturation);
  if (!(o.sens_contrast > 0.0) || !(o.sens_fwhm_mhz > 0.0) || !(rate > 0.0))
    throw UsageError("contrast, linewidth and photon rate must be positive");
  const SensitivityBudget b(o.sens_contrast, mhz_to_hz(o.sens_fwhm_mhz), rate, cfg.constants);
  json j;
  j["contrast"] = b.contrast();
  j["contrast_display"] = fmt("%.3f permille", 1e3 * b.contrast());
  j["fwhm_hz"] = b.fwhm_hz();
  j["fwhm_display"] = fmt("%.3f MHz", hz_to_mhz(b.fwhm_hz()));
  j["rate_cps"] = b.rate_cps();
  j["rate_display"] = fmt("%.2f Mcps", b.rate_cps() / 1e6);
  j["eta_t_per_sqrt_hz"] = b.eta_t_per_sqrt_hz();
  j["eta_display"] = fmt("%.3f uT/sqrt(Hz)", b.eta_t_per_sqrt_hz() * 1e6);
  out << j.dump(2) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Spin-3/2 ODMR simulation, fitting, field inversion and sensitivity", "sivmag"};
  app.require_subcommand(1);
  app.add_option("--config", o.config_path, "key = value config file (overrides $ODMR_CONFIG)");

  auto* sim = app.add_subcommand("simulate", "Synthesize an ODMR spectrum CSV");
  sim->add_option("--b0-gauss", o.sim_b0_gauss, "field magnitude (G)")->required();
  sim->add_option("--theta-deg", o.sim_theta_deg, "polar angle from the c-axis (deg)");
  sim->add_option("--laser-mw", o.sim_laser_mw, "laser power (mW)");
  sim->add_option("--mw-dbm", o.sim_mw_dbm, "microwave power (dBm)");
  sim->add_option("--fmin-mhz", o.sim_fmin_mhz, "sweep start (MHz)");
  sim->add_option("--fmax-mhz", o.sim_fmax_mhz, "sweep stop (MHz)");
  sim->add_option("--points", o.sim_points, "number of frequency points");
  sim->add_option("--dwell-ms", o.sim_dwell_ms, "dwell per point (ms)");
  sim->add_option("--seed", o.sim_seed, "noise seed; omit for a noiseless spectrum");
  sim->add_option("-o,--out", o.sim_out, "output CSV (default stdout)");
  sim->add_option("--svg", o.sim_svg, "also write an SVG plot");

  auto* fit = app.add_subcommand("fit", "Fit an ODMR spectrum or a saturation curve");
  fit->add_option("kind", o.fit_kind, "odmr | saturation")->required()->check(CLI::IsMember({"odmr", "saturation"}));
  fit->add_option("input", o.fit_input, "spectrum CSV (odmr) or sweep CSV with laser_mw,rate_cps columns")
      ->required();
  fit->add_option("--peaks", o.fit_peaks, "number of Lorentzians (odmr)")->check(CLI::Range(1, 2));
  fit->add_option("--weighting", o.fit_weighting, "saturation residual weighting")
      ->check(CLI::IsMember({"uniform", "relative"}));

  auto* inv = app.add_subcommand("invert", "Recover (B0, theta) from two resonance frequencies");
  inv->add_option("--nu1-mhz", o.inv_nu1_mhz, "lower-branch resonance (MHz)")->required();
  inv->add_option("--nu2-mhz", o.inv_nu2_mhz, "upper-branch resonance (MHz)")->required();
  inv->add_flag("--axial", o.inv_axial, "closed-form inverse for a field along the c-axis");
  inv->add_option("--sigma-khz", o.inv_sigma_khz, "1-sigma frequency uncertainty (kHz)");

  auto* sweep = app.add_subcommand("sweep", "Tabulate resonances or sensitivity over a parameter");
  sweep->add_option("kind", o.sweep_kind, "field | angle | laser | mw")
      ->required()
      ->check(CLI::IsMember({"field", "angle", "laser", "mw"}));
  sweep->add_option("--from", o.sweep_from, "range start (G, deg, mW or dBm)");
  sweep->add_option("--to", o.sweep_to, "range end");
  sweep->add_option("--steps", o.sweep_steps, "number of points");
  sweep->add_option("--b0-gauss", o.sweep_b0_gauss, "field magnitude for the angle sweep (G)");
  sweep->add_option("--theta-deg", o.sweep_theta_deg, "polar angle for the field sweep (deg)");
  sweep->add_option("--contrast", o.sweep_contrast, "contrast for the laser sweep (fraction)");
  sweep->add_option("--fwhm-mhz", o.sweep_fwhm_mhz, "linewidth for the laser sweep (MHz)");
  sweep->add_option("--rate-cps", o.sweep_rate_cps, "photon rate for the mw sweep (counts/s)");
  sweep->add_option("--powers-mw", o.sweep_powers, "explicit laser powers (mW)")->delimiter(',');
  sweep->add_option("-o,--out", o.sweep_out, "output CSV (default stdout)");
  sweep->add_option("--svg", o.sweep_svg, "also write an SVG plot");

  auto* sens = app.add_subcommand("sensitivity", "Shot-noise-limited DC field sensitivity");
  sens->add_option("--contrast", o.sens_contrast, "ODMR contrast (fraction, 1.8e-3 = 1.8 permille)")->required();
  sens->add_option("--fwhm-mhz", o.sens_fwhm_mhz, "linewidth (MHz)")->required();
  sens->add_option("--rate-cps", o.sens_rate_cps, "photon rate (counts/s); default from the laser power");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  }

  try {
    const RunConfig cfg = resolve_config(o.config_path);
    if (*sim) return cmd_simulate(*sim, o, cfg, out);
    if (*fit) return cmd_fit(o, out);
    if (*inv) return cmd_invert(o, cfg, out, err);
    if (*sweep) return cmd_sweep(*sweep, o, cfg, out);
    if (*sens) return cmd_sensitivity(*sens, o, cfg, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace sivmag::cli
