// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "sivmag/sivmag.hpp"

using namespace sivmag;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// 1 -------------------------------------------------------------------------
Outcome zero_field() {
  double worst = 0.0;
  for (double d : {30e6, 35e6, 36.6e6}) {
    const PhysicalConstants c(d, 2.0023);
    for (double th : {0.0, 0.5, 1.2}) {
      const auto tp = transitions(FieldVector(0.0, th), c);
      worst = std::max({worst, std::abs(tp.nu1_hz - 2 * d), std::abs(tp.nu2_hz - 2 * d)});
    }
  }
  return {worst / 1e6 <= 1e-6, fmt("max |nu - 2D| = %.3g MHz (tol 1e-6 MHz)", worst / 1e6)};
}

// 2 -------------------------------------------------------------------------
Outcome axial_oracle() {
  const PhysicalConstants c;
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    const double b = 200e-4 * k / 199.0;
    const auto tp = transitions(FieldVector(b, 0.0), c);
    const auto cf = closed_form_axial(b, c);
    // independent: differences of D(m^2 - 5/4) + gamma B m
    const auto e = oracle::axial_energies(b, 35e6, 2.0023);  // m = 3/2, 1/2, -1/2, -3/2
    const double nu1 = std::abs(e[2] - e[3]);
    const double nu2 = std::abs(e[0] - e[1]);
    worst = std::max({worst, std::abs(tp.nu1_hz - cf.nu1_hz), std::abs(tp.nu2_hz - cf.nu2_hz),
                      std::abs(tp.nu1_hz - nu1), std::abs(tp.nu2_hz - nu2)});
  }
  const auto at60 = transitions(FieldVector(60e-4, 0.0), c);
  const bool anchor = std::abs(at60.nu1_hz / 1e6 - 98.148) <= 5e-4 && std::abs(at60.nu2_hz / 1e6 - 238.148) <= 5e-4;
  return {worst <= 1e3 && anchor, fmt("max deviation %.3g Hz over 200 fields (tol 1 kHz); 60 G -> (%.4f, %.4f) MHz",
                                      worst, at60.nu1_hz / 1e6, at60.nu2_hz / 1e6)};
}

// 3 -------------------------------------------------------------------------
Outcome field_sweep_trend() {
  const PhysicalConstants c;
  std::vector<double> b;
  for (int k = 0; k <= 1200; ++k) b.push_back(k * 1e-5);  // 0.1 G steps to 120 G
  const auto pts = field_sweep(b, 0.0, c);
  bool increasing = true;
  double worst_diff = 0.0;
  int checked = 0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (c.gyro_hz_per_t() * pts[i - 1].b0_t <= 2 * c.d_hz()) continue;
    ++checked;
    increasing = increasing && pts[i].nu1_hz > pts[i - 1].nu1_hz && pts[i].nu2_hz > pts[i - 1].nu2_hz;
    worst_diff = std::max(worst_diff, std::abs(pts[i].nu2_hz - pts[i].nu1_hz - 4 * c.d_hz()));
  }
  return {increasing && worst_diff <= 1e3 && checked > 0,
          fmt("%d steps above gamma B0 = 2D, strictly increasing: %s; max |nu2 - nu1 - 4D| = %.3g Hz", checked,
              increasing ? "yes" : "no", worst_diff)};
}

// 4 -------------------------------------------------------------------------
Outcome magic_angle() {
  const PhysicalConstants c;
  auto gap = [&](double deg) {
    const auto tp = transitions(FieldVector(60e-4, deg * kDeg), c);
    return std::abs(tp.nu1_hz - tp.nu2_hz);
  };
  double best = 0.0;
  for (int k = 1; k <= 900; ++k)
    if (gap(0.1 * k) < gap(best)) best = 0.1 * k;
  const double lo = std::max(best - 0.1, 0.0);
  double refined = lo;
  for (int k = 0; k <= 20; ++k) {
    const double d = lo + 0.01 * k;
    if (d <= 90.0 && gap(d) < gap(refined)) refined = d;
  }
  return {refined >= 52.0 && refined <= 58.0,
          fmt("gap minimum at %.2f deg, gap %.3f MHz (band [52, 58])", refined, gap(refined) / 1e6)};
}

// 5 -------------------------------------------------------------------------
Outcome sensitivity_anchor() {
  const double eta = estimate_sensitivity(1.8e-3, 13e6, photon_rate(85.0, SaturationParams{}), PhysicalConstants{});
  const double ut = eta * 1e6;
  return {ut >= 12.2 && ut <= 14.9, fmt("eta = %.3f uT/sqrt(Hz) (band [12.2, 14.9])", ut)};
}

// 6 -------------------------------------------------------------------------
Outcome laser_ratio() {
  const auto rows = laser_sweep_sensitivity({1.0, 85.0}, 1.8e-3, 13e6, SaturationParams{}, PhysicalConstants{});
  const double r = rows[0].eta_t_per_sqrt_hz / rows[1].eta_t_per_sqrt_hz;
  return {r >= 7.9 && r <= 10.1, fmt("eta(1 mW)/eta(85 mW) = %.4f (band [7.9, 10.1])", r)};
}

// 7 -------------------------------------------------------------------------
Outcome saturation_projection() {
  const double ut = project_saturation(12.3e-6, 85.0, SaturationParams{}) * 1e6;
  return {ut >= 4.6 && ut <= 6.2, fmt("eta_sat = %.3f uT/sqrt(Hz) (band [4.6, 6.2])", ut)};
}

// 8 -------------------------------------------------------------------------
Outcome mw_optimum() {
  const MwResponseParams mw;  // p_sat_dbm = 16
  const PhysicalConstants c;
  const double rate = photon_rate(85.0, SaturationParams{});
  std::vector<double> dbm;
  for (int k = 0; k <= 3000; ++k) dbm.push_back(0.01 * k);
  const MwSweep sw = mw_sweep_sensitivity(dbm, mw, rate, c);
  const double arg = sw.rows[sw.argmin].mw_dbm;
  const MwOptimum opt = optimal_mw_drive(mw, rate, c);
  const bool pass = arg >= 18.8 && arg <= 19.2 && std::abs(opt.saturation_parameter - 2.0) <= 1e-6;
  return {pass, fmt("sweep argmin %.2f dBm (band [18.8, 19.2]); s* = %.9f (tol 1e-6)", arg, opt.saturation_parameter)};
}

// 9 -------------------------------------------------------------------------
Outcome saturation_fit() {
  const auto& p = fixture::saturation_powers();
  std::vector<double> exact;
  for (double x : p) exact.push_back(oracle::photon_rate(x, 935e6, 300.0));
  const FitResult clean = fit_saturation(p, exact);
  const double e_is = rel(clean.value("i_s_cps"), 935e6);
  const double e_p0 = rel(clean.value("p0_mw"), 300.0);

  std::mt19937_64 rng(20240901);
  std::normal_distribution<double> n01;
  std::vector<double> err_is, err_p0;
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> noisy;
    for (double y : exact) noisy.push_back(y * (1.0 + 0.01 * n01(rng)));
    const FitResult f = fit_saturation(p, noisy, SaturationWeighting::relative);
    err_is.push_back(rel(f.value("i_s_cps"), 935e6));
    err_p0.push_back(rel(f.value("p0_mw"), 300.0));
  }
  const double m_is = median(err_is), m_p0 = median(err_p0);
  const bool pass = e_is <= 1e-6 && e_p0 <= 1e-6 && m_is <= 0.02 && m_p0 <= 0.02;
  return {pass, fmt("noiseless rel err (%.2g, %.2g) (tol 1e-6); 1%% noise median |rel err| I_s %.2f%%, P0 %.2f%% "
                    "(tol 2%%, 50 repeats)",
                    e_is, e_p0, 100 * m_is, 100 * m_p0)};
}

// 10 ------------------------------------------------------------------------
Outcome odmr_fit() {
  const PhysicalConstants c;
  const auto tp = transitions(FieldVector(60e-4, 0.0), c);
  const double rate = photon_rate(85.0, SaturationParams{});  // 206.4 Mcps
  const double sigma = shot_noise_sigma(rate, 10e-3);
  constexpr std::size_t kPoints = 60001;  // 50-280 MHz at ~3.8 kHz spacing
  int good = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const OdmrSpectrum s = fixture::lorentzian_spectrum(
        50e6, 280e6, kPoints, 0.0, {{1.8e-3, tp.nu1_hz, 13e6}, {1.8e-3, tp.nu2_hz, 13e6}}, sigma, seed);
    try {
      const FitResult f = fit_lorentzian_multi(s, 2);
      const bool ok = rel(f.value("center_1_hz"), tp.nu1_hz) <= 5e-3 && rel(f.value("center_2_hz"), tp.nu2_hz) <= 5e-3 &&
                      rel(f.value("fwhm_1_hz"), 13e6) <= 0.05 && rel(f.value("fwhm_2_hz"), 13e6) <= 0.05;
      good += ok ? 1 : 0;
    } catch (const Error&) {
    }
  }
  return {good >= 95, fmt("%d/100 seeded fits within 0.5%% (centers) and 5%% (widths) (need 95); sigma = %.3g, "
                          "%zu points",
                          good, sigma, kPoints)};
}

// 11 ------------------------------------------------------------------------
Outcome inversion_round_trip() {
  const PhysicalConstants c;
  const FieldInverter inv(c);
  std::mt19937_64 rng(777);
  std::uniform_real_distribution<double> ub(5.0, 120.0), ut(0.0, 80.0);
  int good = 0;
  double worst_b = 0.0, worst_t = 0.0;
  for (int n = 0; n < 500; ++n) {
    const double g = ub(rng);
    double deg = ut(rng);
    if (deg > 50.0) deg += 10.0;  // [0, 50] U [60, 90]
    const auto tp = transitions(FieldVector(g * 1e-4, deg * kDeg), c);
    try {
      const InversionResult r = inv.invert(tp.nu1_hz, tp.nu2_hz);
      const double db = std::abs(r.b0_t * 1e4 - g);
      const double dt = std::abs(r.theta_rad / kDeg - deg);
      worst_b = std::max(worst_b, db);
      worst_t = std::max(worst_t, dt);
      good += (db <= 0.1 && dt <= 0.5 && r.residual_hz < 1e3) ? 1 : 0;
    } catch (const Error&) {
    }
  }

  InversionOptions noisy_opt;
  noisy_opt.freq_sigma_hz = 100e3;
  const FieldInverter noisy(c, noisy_opt);
  std::uniform_real_distribution<double> band(52.0, 57.0);
  std::normal_distribution<double> noise(0.0, 100e3);
  int flagged = 0, band_cases = 0;
  for (int n = 0; n < 200; ++n) {
    const double g = ub(rng);
    const double deg = band(rng);
    const auto tp = transitions(FieldVector(g * 1e-4, deg * kDeg), c);
    ++band_cases;
    try {
      flagged += noisy.invert(tp.nu1_hz + noise(rng), tp.nu2_hz + noise(rng)).degenerate ? 1 : 0;
    } catch (const Error&) {
    }
  }
  return {good == 500 && flagged == band_cases,
          fmt("%d/500 recovered within 0.1 G / 0.5 deg (worst %.3g G, %.3g deg); magic-angle band flagged %d/%d",
              good, worst_b, worst_t, flagged, band_cases)};
}

// 12 ------------------------------------------------------------------------
Outcome zfs_invariance() {
  const PhysicalConstants c(36.55e6, 2.0023);  // 2D = 73.1 MHz
  const std::vector<double> powers{1, 5, 10, 20, 40, 60, 80};
  std::vector<OdmrSpectrum> spectra;
  for (double p : powers) {
    AcquisitionConfig cfg;
    cfg.laser_mw = p;
    spectra.push_back(synthesize_spectrum(cfg, FieldVector(0.0, 0.0), c));
  }
  const ZfsSeries z = fit_zfs_series(spectra, powers);
  double lo = 1e300, hi = -1e300;
  for (const auto& pt : z.points) {
    lo = std::min(lo, pt.zfs_hz);
    hi = std::max(hi, pt.zfs_hz);
  }
  const double limit = std::max(z.max_sigma_hz, 0.05e6);
  return {hi - lo <= limit && z.flatness_hz <= limit,
          fmt("ZFS %.4f..%.4f MHz over 1-80 mW, spread %.3g Hz (limit %.3g Hz)", lo / 1e6, hi / 1e6, hi - lo, limit)};
}

// 13 ------------------------------------------------------------------------
Outcome numerical_hygiene() {
  const PhysicalConstants c;
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> ub(0.0, 200e-4), ut(0.0, std::numbers::pi / 2);
  int recon = 0, ortho = 0, trace = 0;
  for (int n = 0; n < 1000; ++n) {
    const SpinMatrix h = build_hamiltonian(FieldVector(ub(rng), ut(rng)), c);
    const EigenSystem e = diagonalize(h);
    SpinMatrix lambda;
    double emax = 0.0, sum = 0.0;
    for (int k = 0; k < 4; ++k) {
      lambda(k, k) = e.energies_hz[k];
      emax = std::max(emax, std::abs(e.energies_hz[k]));
      sum += e.energies_hz[k];
    }
    recon += (e.vectors * lambda * e.vectors.adjoint() - h).max_abs() <= 1e-9 * emax;
    ortho += (e.vectors.adjoint() * e.vectors - SpinMatrix::identity()).max_abs() <= 1e-12;
    trace += std::abs(sum) / 1e6 <= 1e-6;
  }

  // analytic Jacobians vs central differences at random parameter points
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<double> freq;
  for (int i = 0; i < 231; ++i) freq.push_back(50e6 + 1e6 * i);
  const std::vector<double> power = fixture::saturation_powers();
  int jac_ok = 0;
  for (int n = 0; n < 100; ++n) {
    const std::vector<double> x{1e-4 * (u01(rng) - 0.5), 1e-3 + 2e-3 * u01(rng), 80e6 + 60e6 * u01(rng),
                                5e6 + 15e6 * u01(rng), 1e-3 + 2e-3 * u01(rng), 180e6 + 80e6 * u01(rng),
                                5e6 + 15e6 * u01(rng)};
    const std::vector<double> zero(freq.size(), 0.0);
    const LorentzianProblem lp(freq, zero, 2);
    VectorXd xv = Eigen::Map<const VectorXd>(x.data(), 7);
    MatrixXd j(static_cast<Index>(freq.size()), 7);
    lp.jacobian(xv, j);
    const auto fd = oracle::fd_jacobian(
        [&](const std::vector<double>& p) {
          std::vector<double> r;
          for (double f : freq) r.push_back(oracle::lorentzian_sum(f, p[0], {{p[1], p[2], p[3]}, {p[4], p[5], p[6]}}));
          return r;
        },
        x, 1e-5, {1e-3, 1e-3, 1e6, 1e6, 1e-3, 1e6, 1e6});
    bool ok = true;
    for (int k = 0; k < 7; ++k) {
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < freq.size(); ++i) {
        num += std::pow(j(static_cast<Index>(i), k) - fd[i][k], 2);
        den += std::pow(fd[i][k], 2);
      }
      ok = ok && std::sqrt(num / den) <= 1e-5;
    }

    const std::vector<double> s{5e8 + 1e9 * u01(rng), std::log(50.0 + 500.0 * u01(rng))};
    const std::vector<double> counts(power.size(), 0.0);
    const SaturationProblem sp(power, counts, SaturationWeighting::uniform);
    VectorXd sv(2);
    sv << s[0], s[1];
    MatrixXd js(static_cast<Index>(power.size()), 2);
    sp.jacobian(sv, js);
    const auto fds = oracle::fd_jacobian(
        [&](const std::vector<double>& q) {
          std::vector<double> r;
          for (double pw : power) r.push_back(oracle::photon_rate(pw, q[0], std::exp(q[1])));
          return r;
        },
        s, 1e-5, {1.0, 1.0});
    for (int k = 0; k < 2; ++k) {
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < power.size(); ++i) {
        num += std::pow(js(static_cast<Index>(i), k) - fds[i][k], 2);
        den += std::pow(fds[i][k], 2);
      }
      ok = ok && std::sqrt(num / den) <= 1e-5;
    }
    jac_ok += ok;
  }
  return {recon == 1000 && ortho == 1000 && trace == 1000 && jac_ok == 100,
          fmt("reconstruction %d/1000, orthonormality %d/1000, traceless %d/1000, Jacobian vs FD %d/100", recon,
              ortho, trace, jac_ok)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"zero-field resonance at 2D", zero_field},
      {"axial closed-form oracle", axial_oracle},
      {"field sweep trend and 4D splitting", field_sweep_trend},
      {"magic-angle gap minimum", magic_angle},
      {"sensitivity anchor at 85 mW", sensitivity_anchor},
      {"laser-sweep sensitivity ratio", laser_ratio},
      {"saturation-limited projection", saturation_projection},
      {"microwave power optimum", mw_optimum},
      {"saturation fit round trip", saturation_fit},
      {"ODMR fit round trip", odmr_fit},
      {"field inversion round trip and degeneracy", inversion_round_trip},
      {"zero-field splitting invariance", zfs_invariance},
      {"numerical hygiene", numerical_hygiene},
  };

  int failed = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
    std::printf("%s %2zu %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name, o.detail.c_str(),
                secs);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%d/%zu criteria passed in %.1f s\n", static_cast<int>(criteria.size()) - failed, criteria.size(), total);
  return failed ? 1 : 0;
}
