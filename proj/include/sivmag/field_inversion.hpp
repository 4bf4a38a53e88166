#pragma once

// Recover (B0, theta) from a measured resonance pair (nu1, nu2).
//
// The inputs are branch-labelled: nu1 is the line that continues
// |-1/2> <-> |-3/2> from the c-axis, nu2 the |+1/2> <-> |+3/2> line. Beyond
// the magic angle nu1 > nu2. Only the polar angle in [0, 90] deg is
// observable; theta and 180 - theta (and any azimuth) give the same spectrum.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "sivmag/error.hpp"
#include "sivmag/least_squares.hpp"
#include "sivmag/spin_model.hpp"

namespace sivmag {

struct InversionOptions {
  double b_max_t = 200e-4;
  std::size_t grid_b = 201;
  std::size_t grid_theta = 91;
  std::size_t refine_seeds = 4;     // grid local minima refined by Levenberg-Marquardt
  double freq_sigma_hz = 0.0;       // 1-sigma uncertainty of each input frequency
  double line_resolution_hz = 13e6; // lines closer than this cannot be assigned to branches
  double condition_limit = 1e4;
  double max_residual_hz = 1e6;
};

struct InversionResult {
  double b0_t = 0.0;
  double theta_rad = 0.0;
  double residual_hz = 0.0;  // RMS misfit of the two frequencies
  bool degenerate = false;
  double condition = 0.0;  // of d(nu1, nu2)/d(B0/B_D, cos^2 theta), B_D = 2D/gamma
};

namespace detail {

inline std::array<double, 2> forward_pair(double b0_t, double theta_rad, const PhysicalConstants& consts) {
  const TransitionPair tp = transitions(FieldVector(std::abs(b0_t), theta_rad), consts);
  return {tp.nu1_hz, tp.nu2_hz};
}

// Misfit in (B0, theta) with the model's symmetries (B0 -> -B0 is theta ->
// theta + pi) letting the iterate wander across the domain edges smoothly.
class InversionProblem {
 public:
  InversionProblem(double nu1, double nu2, const PhysicalConstants& consts)
      : target_{nu1, nu2}, consts_(consts) {}

  Index num_residuals() const { return 2; }

  void residuals(const VectorXd& x, VectorXd& r) const {
    const auto nu = forward_pair(x[0], x[1], consts_);
    r.resize(2);
    r << nu[0] - target_[0], nu[1] - target_[1];
  }

  // central differences, 1e-7 T and 1e-4 rad
  void jacobian(const VectorXd& x, MatrixXd& j) const {
    constexpr std::array<double, 2> h{1e-7, 1e-4};
    j.resize(2, 2);
    for (int k = 0; k < 2; ++k) {
      VectorXd lo = x;
      VectorXd hi = x;
      lo[k] -= h[k];
      hi[k] += h[k];
      const auto a = forward_pair(lo[0], lo[1], consts_);
      const auto b = forward_pair(hi[0], hi[1], consts_);
      j(0, k) = (b[0] - a[0]) / (2 * h[k]);
      j(1, k) = (b[1] - a[1]) / (2 * h[k]);
    }
  }

  bool admissible(const VectorXd& x) const { return x.allFinite(); }

 private:
  std::array<double, 2> target_;
  const PhysicalConstants& consts_;
};

inline double rms2(double a, double b) { return std::sqrt(0.5 * (a * a + b * b)); }

}  // namespace detail

/// Jacobian condition number in the natural coordinates (B0/B_D, cos^2 theta)
/// where the first-order splitting is linear. Infinite at B0 = 0.
inline double inversion_condition(double b0_t, double theta_rad, const PhysicalConstants& consts) {
  const double bd = 2.0 * consts.d_hz() / consts.gyro_hz_per_t();
  const double c = std::cos(theta_rad);
  const double u = c * c;
  auto eval = [&](double bt, double uu) {
    uu = std::clamp(uu, 0.0, 1.0);
    return detail::forward_pair(bt * bd, std::acos(std::sqrt(uu)), consts);
  };
  const double bt = b0_t / bd;
  constexpr double h = 1e-4;

  Eigen::Matrix2d j;
  {
    const double lo = std::max(bt - h, 0.0);
    const double hi = bt + h;
    const auto a = eval(lo, u);
    const auto b = eval(hi, u);
    j(0, 0) = (b[0] - a[0]) / (hi - lo);
    j(1, 0) = (b[1] - a[1]) / (hi - lo);
  }
  {
    const double lo = std::max(u - h, 0.0);
    const double hi = std::min(u + h, 1.0);
    const auto a = eval(bt, lo);
    const auto b = eval(bt, hi);
    j(0, 1) = (b[0] - a[0]) / (hi - lo);
    j(1, 1) = (b[1] - a[1]) / (hi - lo);
  }
  const Eigen::Vector2d sv = Eigen::JacobiSVD<Eigen::Matrix2d>(j).singularValues();
  if (!(sv[1] > 0.0)) return std::numeric_limits<double>::infinity();
  return sv[0] / sv[1];
}

/// Grid-seeded inverse of the forward model. The coarse table depends only on
/// the constants and options, so one inverter can serve many measurements.
class FieldInverter {
 public:
  explicit FieldInverter(const PhysicalConstants& consts, const InversionOptions& options = {})
      : consts_(consts), opt_(options) {
    if (!(opt_.b_max_t > 0.0)) throw InvalidArgument("b_max must be positive");
    if (opt_.grid_b < 2 || opt_.grid_theta < 2) throw InvalidArgument("inversion grid too small");
    table_.resize(opt_.grid_b * opt_.grid_theta);
    for (std::size_t i = 0; i < opt_.grid_b; ++i)
      for (std::size_t k = 0; k < opt_.grid_theta; ++k) table_[i * opt_.grid_theta + k] = detail::forward_pair(grid_b(i), grid_theta(k), consts_);
  }

  const InversionOptions& options() const { return opt_; }

  double grid_b(std::size_t i) const {
    return opt_.b_max_t * static_cast<double>(i) / static_cast<double>(opt_.grid_b - 1);
  }
  double grid_theta(std::size_t k) const {
    return 0.5 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(opt_.grid_theta - 1);
  }

  InversionResult invert(double nu1_hz, double nu2_hz) const {
    if (!(nu1_hz > 0.0) || !(nu2_hz > 0.0) || !std::isfinite(nu1_hz) || !std::isfinite(nu2_hz))
      throw InvalidArgument("resonance frequencies must be positive");

    const std::size_t nt = opt_.grid_theta;
    std::vector<double> misfit(table_.size());
    for (std::size_t n = 0; n < table_.size(); ++n)
      misfit[n] = detail::rms2(table_[n][0] - nu1_hz, table_[n][1] - nu2_hz);

    // Local minima over the 8-neighbourhood, ordered by misfit then B0 then
    // theta (index order), which is independent of evaluation order.
    std::vector<std::size_t> seeds;
    for (std::size_t i = 0; i < opt_.grid_b; ++i) {
      for (std::size_t k = 0; k < nt; ++k) {
        const double v = misfit[i * nt + k];
        bool is_min = true;
        for (int di = -1; di <= 1 && is_min; ++di)
          for (int dk = -1; dk <= 1; ++dk) {
            const auto ii = static_cast<std::ptrdiff_t>(i) + di;
            const auto kk = static_cast<std::ptrdiff_t>(k) + dk;
            if ((di == 0 && dk == 0) || ii < 0 || kk < 0 || ii >= static_cast<std::ptrdiff_t>(opt_.grid_b) ||
                kk >= static_cast<std::ptrdiff_t>(nt))
              continue;
            if (misfit[ii * nt + kk] < v) {
              is_min = false;
              break;
            }
          }
        if (is_min) seeds.push_back(i * nt + k);
      }
    }
    std::stable_sort(seeds.begin(), seeds.end(), [&](std::size_t a, std::size_t b) { return misfit[a] < misfit[b]; });
    if (seeds.size() > opt_.refine_seeds) seeds.resize(opt_.refine_seeds);

    const detail::InversionProblem problem(nu1_hz, nu2_hz, consts_);
    LmOptions lm;
    lm.max_iterations = 200;
    lm.step_tolerance = 1e-12;
    lm.cost_tolerance = 0.0;

    InversionResult best;
    best.residual_hz = std::numeric_limits<double>::infinity();
    for (std::size_t s : seeds) {
      // The map is even in theta about 0 and pi/2, so a seed on either edge has
      // zero theta gradient and would never leave it; start half a cell inside.
      const double half_cell = 0.5 * grid_theta(1);
      const double theta0 = std::clamp(grid_theta(s % nt), half_cell, 0.5 * std::numbers::pi - half_cell);
      VectorXd x(2);
      x << grid_b(s / nt), theta0;
      const LmReport rep = levenberg_marquardt(problem, x, lm);
      double b = std::min(std::abs(rep.params[0]), opt_.b_max_t);
      // fold the angle (and the sign of B0) back to the canonical range
      double theta = rep.params[0] < 0.0 ? rep.params[1] + std::numbers::pi : rep.params[1];
      theta = FieldVector::canonical_angle(theta);
      const auto nu = detail::forward_pair(b, theta, consts_);
      const double res = detail::rms2(nu[0] - nu1_hz, nu[1] - nu2_hz);
      if (better(res, b, theta, best)) {
        best.b0_t = b;
        best.theta_rad = theta;
        best.residual_hz = res;
      }
    }
    if (!(best.residual_hz <= opt_.max_residual_hz)) throw NoSolutionError(best.residual_hz);

    best.condition = inversion_condition(best.b0_t, best.theta_rad, consts_);
    const double noise = opt_.freq_sigma_hz;
    const bool unresolved = std::abs(nu1_hz - nu2_hz) < std::max(opt_.line_resolution_hz, 3.0 * std::sqrt(2.0) * noise);
    const bool below_floor = consts_.gyro_hz_per_t() * best.b0_t < std::max(3.0 * noise, 1e3);
    best.degenerate = best.condition > opt_.condition_limit || unresolved || below_floor;
    return best;
  }

 private:
  // lowest misfit; near-equal misfits go to smaller B0, then smaller theta
  static bool better(double res, double b, double theta, const InversionResult& cur) {
    constexpr double tie_hz = 1e-6;
    if (res < cur.residual_hz - tie_hz) return true;
    if (res > cur.residual_hz + tie_hz) return false;
    if (b != cur.b0_t) return b < cur.b0_t;
    return theta < cur.theta_rad;
  }

  PhysicalConstants consts_;
  InversionOptions opt_;
  std::vector<std::array<double, 2>> table_;
};

inline InversionResult invert_field(double nu1_hz, double nu2_hz, const PhysicalConstants& consts,
                                    double b_max_t = 200e-4, double freq_sigma_hz = 0.0) {
  InversionOptions opt;
  opt.b_max_t = b_max_t;
  opt.freq_sigma_hz = freq_sigma_hz;
  return FieldInverter(consts, opt).invert(nu1_hz, nu2_hz);
}

struct AxialInversion {
  double b0_t = 0.0;
  double consistency_residual_hz = 0.0;  // |nu2 - nu1 - 4D|
};

/// Closed-form theta = 0 inverse, valid for gamma B0 > 2D:
/// B0 = (nu1 + nu2) / (2 gamma).
inline AxialInversion axial_invert(double nu1_hz, double nu2_hz, const PhysicalConstants& consts,
                                   double tolerance_hz = 2e6) {
  if (!(nu1_hz > 0.0) || !(nu2_hz > 0.0)) throw InvalidArgument("resonance frequencies must be positive");
  if (nu2_hz < nu1_hz) throw InvalidArgument("axial inversion expects nu2 >= nu1");
  AxialInversion out;
  out.b0_t = (nu1_hz + nu2_hz) / (2.0 * consts.gyro_hz_per_t());
  out.consistency_residual_hz = std::abs(nu2_hz - nu1_hz - 4.0 * consts.d_hz());
  if (out.consistency_residual_hz > tolerance_hz) throw AxialModelViolated(out.b0_t, out.consistency_residual_hz);
  return out;
}

struct SweepPoint {
  double b0_t = 0.0;
  double theta_rad = 0.0;
  double nu1_hz = 0.0;
  double nu2_hz = 0.0;
};

/// Resonances versus polar angle at fixed field magnitude.
inline std::vector<SweepPoint> angle_sweep(double b0_t, const std::vector<double>& theta_rad,
                                           const PhysicalConstants& consts) {
  if (!(b0_t > 0.0)) throw InvalidArgument("angle sweep needs a positive field");
  std::vector<SweepPoint> out;
  out.reserve(theta_rad.size());
  for (double t : theta_rad) {
    const FieldVector f(b0_t, t);
    const TransitionPair tp = transitions(f, consts);
    out.push_back({b0_t, f.theta_rad(), tp.nu1_hz, tp.nu2_hz});
  }
  return out;
}

/// Resonances versus field magnitude at fixed polar angle.
inline std::vector<SweepPoint> field_sweep(const std::vector<double>& b0_t, double theta_rad,
                                           const PhysicalConstants& consts) {
  std::vector<SweepPoint> out;
  out.reserve(b0_t.size());
  for (double b : b0_t) {
    const FieldVector f(b, theta_rad);
    const TransitionPair tp = transitions(f, consts);
    out.push_back({b, f.theta_rad(), tp.nu1_hz, tp.nu2_hz});
  }
  return out;
}

}  // namespace sivmag
