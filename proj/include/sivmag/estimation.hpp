#pragma once

// Curve fitting for ODMR spectra, PL saturation curves and zero-field
// resonance series.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sivmag/error.hpp"
#include "sivmag/least_squares.hpp"
#include "sivmag/spectrum.hpp"

namespace sivmag {

struct FitParameter {
  std::string name;
  double value = 0.0;
  double sigma = 0.0;
};

/// Fitted parameters with 1-sigma uncertainties. Uncertainties assume i.i.d.
/// Gaussian residuals: sigma^2 diag((J^T J)^-1) with sigma = residual_rms.
struct FitResult {
  std::vector<FitParameter> params;
  double residual_rms = 0.0;  // sqrt(sum r^2 / (n - p))
  int iterations = 0;
  bool converged = false;
  std::vector<double> cost_history;

  const FitParameter& at(std::string_view name) const {
    for (const auto& p : params)
      if (p.name == name) return p;
    throw InvalidArgument("no fit parameter named '" + std::string(name) + "'");
  }
  double value(std::string_view name) const { return at(name).value; }
  double sigma(std::string_view name) const { return at(name).sigma; }
};

// ---------------------------------------------------------------------------
// Lorentzian family: baseline + sum_k A_k / (1 + ((f - f_k)/(w_k/2))^2)
// Parameter vector: [baseline, A_1, f_1, w_1, A_2, f_2, w_2, ...]

class LorentzianProblem {
 public:
  LorentzianProblem(const std::vector<double>& freq, const std::vector<double>& signal, int n_peaks)
      : freq_(freq), signal_(signal), n_peaks_(n_peaks) {}

  Index num_residuals() const { return static_cast<Index>(freq_.size()); }
  Index num_params() const { return 1 + 3 * n_peaks_; }

  static double model(const VectorXd& p, double f) {
    double y = p[0];
    for (Index k = 1; k + 2 < p.size(); k += 3) {
      const double x = 2.0 * (f - p[k + 1]) / p[k + 2];
      y += p[k] / (1.0 + x * x);
    }
    return y;
  }

  void residuals(const VectorXd& p, VectorXd& r) const {
    r.resize(num_residuals());
    for (Index i = 0; i < r.size(); ++i) r[i] = model(p, freq_[i]) - signal_[i];
  }

  void jacobian(const VectorXd& p, MatrixXd& j) const {
    j.resize(num_residuals(), num_params());
    for (Index i = 0; i < j.rows(); ++i) {
      const double f = freq_[i];
      j(i, 0) = 1.0;
      for (Index k = 1; k < j.cols(); k += 3) {
        const double a = p[k];
        const double w = p[k + 2];
        const double x = 2.0 * (f - p[k + 1]) / w;
        const double l = 1.0 / (1.0 + x * x);
        j(i, k) = l;
        j(i, k + 1) = 4.0 * a * x * l * l / w;
        j(i, k + 2) = 2.0 * a * x * x * l * l / w;
      }
    }
  }

  bool admissible(const VectorXd& p) const {
    for (Index k = 3; k < p.size(); k += 3)
      if (!(p[k] > 0.0)) return false;
    return true;
  }

 private:
  const std::vector<double>& freq_;
  const std::vector<double>& signal_;
  int n_peaks_;
};

struct LorentzianInit {
  double baseline = 0.0;
  std::vector<LorentzianPeak> peaks;
};

namespace detail {

inline double median(std::vector<double> v) {
  if (v.empty()) throw InvalidArgument("median of empty sequence");
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  double m = *mid;
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), mid));
  return m;
}

// Centered moving average; the window shrinks at the edges.
inline std::vector<double> moving_average(const std::vector<double>& y, std::size_t window) {
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(window / 2);
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(y.size());
  std::vector<double> out(y.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - half);
    const std::ptrdiff_t hi = std::min(n - 1, i + half);
    double s = 0.0;
    for (std::ptrdiff_t k = lo; k <= hi; ++k) s += y[k];
    out[i] = s / static_cast<double>(hi - lo + 1);
  }
  return out;
}

struct Prominent {
  std::size_t index;
  double prominence;
};

// Topographic prominence of every local maximum: height above the higher of
// the two lowest points separating it from taller terrain (or the edge).
inline std::vector<Prominent> prominent_maxima(const std::vector<double>& y) {
  std::vector<Prominent> out;
  const std::size_t n = y.size();
  for (std::size_t i = 0; i < n; ++i) {
    const bool left_ok = i == 0 || y[i] > y[i - 1];
    const bool right_ok = i + 1 == n || y[i] >= y[i + 1];
    if (!left_ok || !right_ok) continue;
    double left_min = y[i];
    for (std::size_t k = i; k-- > 0;) {
      if (y[k] > y[i]) break;
      left_min = std::min(left_min, y[k]);
    }
    double right_min = y[i];
    for (std::size_t k = i + 1; k < n; ++k) {
      if (y[k] > y[i]) break;
      right_min = std::min(right_min, y[k]);
    }
    out.push_back({i, y[i] - std::max(left_min, right_min)});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Prominent& a, const Prominent& b) { return a.prominence > b.prominence; });
  return out;
}

}  // namespace detail

/// Starting point used when the caller supplies none: smooth with a 5-point
/// moving average, take the n most prominent maxima, width 10 MHz, baseline at
/// the median signal.
inline LorentzianInit seed_lorentzians(const OdmrSpectrum& spec, int n_peaks) {
  LorentzianInit init;
  init.baseline = detail::median(spec.signal);
  const auto smooth = detail::moving_average(spec.signal, 5);
  const auto maxima = detail::prominent_maxima(smooth);

  std::vector<std::size_t> picks;
  for (const auto& m : maxima) {
    if (static_cast<int>(picks.size()) == n_peaks) break;
    picks.push_back(m.index);
  }
  constexpr double seed_width = 10e6;
  while (static_cast<int>(picks.size()) < n_peaks) {
    // fewer maxima than lines (merged lines): split around the tallest one
    const std::size_t base = picks.empty() ? 0 : picks.front();
    const double f = spec.freq_hz[base] + seed_width * 0.5 * static_cast<double>(picks.size());
    const auto it = std::lower_bound(spec.freq_hz.begin(), spec.freq_hz.end(), f);
    picks.push_back(std::min<std::size_t>(it - spec.freq_hz.begin(), spec.size() - 1));
  }
  std::sort(picks.begin(), picks.end());
  for (std::size_t idx : picks)
    init.peaks.push_back({spec.freq_hz[idx], seed_width, smooth[idx] - init.baseline});
  return init;
}

namespace detail {

inline VectorXd lorentzian_scales(const VectorXd& p) {
  // typical magnitudes used only for the conditioning test
  double amp = 0.0;
  for (Index k = 1; k < p.size(); k += 3) amp = std::max(amp, std::abs(p[k]));
  VectorXd s(p.size());
  s[0] = amp > 0.0 ? amp : 1.0;
  for (Index k = 1; k < p.size(); k += 3) {
    s[k] = s[0];
    s[k + 1] = p[k + 2];
    s[k + 2] = p[k + 2];
  }
  return s;
}

inline FitResult make_result(const LmReport& rep, const std::vector<std::string>& names,
                             const VectorXd& scales) {
  const Index n = rep.residuals.size();
  const Index np = rep.params.size();
  FitResult out;
  out.residual_rms = std::sqrt(rep.cost / static_cast<double>(n - np));
  out.iterations = rep.iterations;
  out.converged = rep.converged;
  out.cost_history = rep.cost_history;
  const MatrixXd cov = covariance(rep.jacobian, out.residual_rms * out.residual_rms, scales, names);
  for (Index k = 0; k < np; ++k)
    out.params.push_back({names[k], rep.params[k], std::sqrt(std::max(cov(k, k), 0.0))});
  return out;
}

}  // namespace detail

inline std::vector<std::string> lorentzian_param_names(int n_peaks) {
  std::vector<std::string> names{"baseline"};
  for (int k = 1; k <= n_peaks; ++k) {
    const std::string s = std::to_string(k);
    names.push_back("amplitude_" + s);
    names.push_back("center_" + s + "_hz");
    names.push_back("fwhm_" + s + "_hz");
  }
  return names;
}

/// Fit one or two Lorentzian lines on a free constant baseline. Peaks in the
/// result are ordered by fitted center.
inline FitResult fit_lorentzian_multi(const OdmrSpectrum& spec, int n_peaks,
                                      const std::optional<LorentzianInit>& init = std::nullopt,
                                      const LmOptions& options = {}) {
  if (n_peaks != 1 && n_peaks != 2) throw InvalidArgument("n_peaks must be 1 or 2");
  spec.validate();
  const std::size_t np = 1 + 3 * static_cast<std::size_t>(n_peaks);
  if (spec.size() < np + 1) throw InvalidArgument("too few points for the requested model");

  const LorentzianInit start = init ? *init : seed_lorentzians(spec, n_peaks);
  if (static_cast<int>(start.peaks.size()) != n_peaks)
    throw InvalidArgument("initial guess has the wrong number of peaks");

  VectorXd x(static_cast<Index>(np));
  x[0] = start.baseline;
  for (int k = 0; k < n_peaks; ++k) {
    x[1 + 3 * k] = start.peaks[k].amplitude;
    x[2 + 3 * k] = start.peaks[k].center_hz;
    x[3 + 3 * k] = start.peaks[k].fwhm_hz;
  }

  const LorentzianProblem problem(spec.freq_hz, spec.signal, n_peaks);
  if (!problem.admissible(x)) throw InvalidArgument("initial widths must be positive");
  LmReport rep = levenberg_marquardt(problem, x, options);

  // canonical order: ascending center
  std::vector<int> order(n_peaks);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return rep.params[2 + 3 * a] < rep.params[2 + 3 * b]; });
  VectorXd sorted = rep.params;
  MatrixXd jac = rep.jacobian;
  for (int k = 0; k < n_peaks; ++k)
    for (int c = 1; c <= 3; ++c) {
      sorted[c + 3 * k] = rep.params[c + 3 * order[k]];
      jac.col(c + 3 * k) = rep.jacobian.col(c + 3 * order[k]);
    }
  rep.params = sorted;
  rep.jacobian = jac;

  return detail::make_result(rep, lorentzian_param_names(n_peaks), detail::lorentzian_scales(rep.params));
}

// ---------------------------------------------------------------------------
// Saturation family: I(P) = I_s / (1 + P0/P), fitted in (I_s, ln P0) so that
// P0 stays positive.

enum class SaturationWeighting {
  uniform,   // absolute residuals
  relative,  // residuals divided by the measured counts (multiplicative noise)
};

class SaturationProblem {
 public:
  SaturationProblem(const std::vector<double>& power, const std::vector<double>& counts,
                    SaturationWeighting weighting)
      : power_(power), counts_(counts), weighting_(weighting) {}

  Index num_residuals() const { return static_cast<Index>(power_.size()); }

  static double model(double i_s, double p0, double p) { return i_s / (1.0 + p0 / p); }

  double weight(Index i) const {
    return weighting_ == SaturationWeighting::relative ? 1.0 / counts_[i] : 1.0;
  }

  void residuals(const VectorXd& x, VectorXd& r) const {
    r.resize(num_residuals());
    const double p0 = std::exp(x[1]);
    for (Index i = 0; i < r.size(); ++i) r[i] = (model(x[0], p0, power_[i]) - counts_[i]) * weight(i);
  }

  void jacobian(const VectorXd& x, MatrixXd& j) const {
    j.resize(num_residuals(), 2);
    const double p0 = std::exp(x[1]);
    for (Index i = 0; i < j.rows(); ++i) {
      const double q = p0 / power_[i];
      const double denom = 1.0 + q;
      j(i, 0) = weight(i) / denom;
      j(i, 1) = -weight(i) * x[0] * q / (denom * denom);  // d/d(ln P0)
    }
  }

  bool admissible(const VectorXd& x) const { return std::isfinite(x[1]); }

 private:
  const std::vector<double>& power_;
  const std::vector<double>& counts_;
  SaturationWeighting weighting_;
};

/// Fit (I_s, P0). Starts from I_s = 2 max(counts), P0 = median(power).
inline FitResult fit_saturation(const std::vector<double>& powers_mw, const std::vector<double>& counts_cps,
                                SaturationWeighting weighting = SaturationWeighting::uniform,
                                const LmOptions& options = {}) {
  if (powers_mw.size() != counts_cps.size()) throw InvalidArgument("power and count lists differ in length");
  for (double p : powers_mw)
    if (!(p > 0.0) || !std::isfinite(p)) throw InvalidArgument("laser powers must be positive");
  for (double c : counts_cps) {
    if (!std::isfinite(c)) throw InvalidArgument("count rates must be finite");
    if (weighting == SaturationWeighting::relative && !(c > 0.0))
      throw InvalidArgument("relative weighting needs positive counts");
  }
  std::vector<double> distinct = powers_mw;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 3) throw InvalidArgument("need at least three distinct laser powers");

  VectorXd x(2);
  x[0] = 2.0 * *std::max_element(counts_cps.begin(), counts_cps.end());
  x[1] = std::log(detail::median(powers_mw));

  const SaturationProblem problem(powers_mw, counts_cps, weighting);
  const LmReport rep = levenberg_marquardt(problem, x, options);

  VectorXd scales(2);
  scales << std::max(std::abs(rep.params[0]), 1e-300), 1.0;
  FitResult out = detail::make_result(rep, {"i_s_cps", "p0_mw"}, scales);
  // report P0 itself; its sigma follows from sigma(ln P0) by the delta method
  const double p0 = std::exp(rep.params[1]);
  out.params[1].sigma *= p0;
  out.params[1].value = p0;
  return out;
}

// ---------------------------------------------------------------------------

struct ZfsPoint {
  double laser_mw = 0.0;
  double zfs_hz = 0.0;  // fitted center of the merged zero-field line (2D)
  double sigma_hz = 0.0;
  bool converged = false;
};

struct ZfsSeries {
  std::vector<ZfsPoint> points;
  double mean_hz = 0.0;
  double flatness_hz = 0.0;  // max |zfs - mean|
  double max_sigma_hz = 0.0;
};

/// Single-Lorentzian fit of each zero-field spectrum; reports how flat the
/// fitted resonance is across laser power.
inline ZfsSeries fit_zfs_series(const std::vector<OdmrSpectrum>& spectra, const std::vector<double>& laser_mw,
                                const LmOptions& options = {}) {
  if (spectra.empty()) throw InvalidArgument("empty zero-field series");
  if (spectra.size() != laser_mw.size()) throw InvalidArgument("one laser power per spectrum required");
  ZfsSeries out;
  for (std::size_t i = 0; i < spectra.size(); ++i) {
    if (spectra[i].meta.field.b0_t() != 0.0)
      throw InvalidArgument("zero-field series contains a spectrum with B0 != 0");
    const FitResult fit = fit_lorentzian_multi(spectra[i], 1, std::nullopt, options);
    out.points.push_back({laser_mw[i], fit.value("center_1_hz"), fit.sigma("center_1_hz"), fit.converged});
    out.max_sigma_hz = std::max(out.max_sigma_hz, fit.sigma("center_1_hz"));
  }
  double sum = 0.0;
  for (const auto& p : out.points) sum += p.zfs_hz;
  out.mean_hz = sum / static_cast<double>(out.points.size());
  for (const auto& p : out.points) out.flatness_hz = std::max(out.flatness_hz, std::abs(p.zfs_hz - out.mean_hz));
  return out;
}

}  // namespace sivmag
