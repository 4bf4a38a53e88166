#pragma once

// Damped Gauss-Newton (Levenberg-Marquardt) for small dense problems.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sivmag/error.hpp"

namespace sivmag {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

template <class P>
concept LeastSquaresProblem =
    requires(const P& p, const VectorXd& x, VectorXd& r, MatrixXd& j) {
      { p.num_residuals() } -> std::convertible_to<Index>;
      p.residuals(x, r);
      p.jacobian(x, j);
      { p.admissible(x) } -> std::convertible_to<bool>;
    };

struct LmOptions {
  int max_iterations = 200;
  double step_tolerance = 1e-8;      // scaled step relative to scaled parameters
  double cost_tolerance = 1e-10;     // relative cost decrease on an accepted step
  double initial_damping = 1e-3;
  double max_damping = 1e16;
};

struct LmReport {
  VectorXd params;
  VectorXd residuals;
  MatrixXd jacobian;
  double cost = 0.0;  // sum of squared residuals
  int iterations = 0;
  bool converged = false;
  std::vector<double> cost_history;  // one entry per accepted state, starting with the initial one
};

/// Minimizes |r(x)|^2. Steps are accepted only when they strictly lower the
/// cost, so `cost_history` is non-increasing. Damping follows Marquardt:
/// (J^T J + lambda diag(J^T J)) dx = -J^T r, lambda /10 on success, *10 on
/// failure.
template <LeastSquaresProblem Problem>
LmReport levenberg_marquardt(const Problem& problem, VectorXd x, const LmOptions& opt = {}) {
  const Index n = problem.num_residuals();
  const Index np = x.size();

  LmReport rep;
  VectorXd r(n);
  MatrixXd jac(n, np);
  problem.residuals(x, r);
  double cost = r.squaredNorm();
  if (!std::isfinite(cost)) throw InvalidArgument("initial parameters give non-finite residuals");
  rep.cost_history.push_back(cost);

  double lambda = opt.initial_damping;
  VectorXd trial_r(n);
  bool fresh_jacobian = false;

  for (rep.iterations = 0; rep.iterations < opt.max_iterations; ++rep.iterations) {
    if (cost == 0.0) {
      rep.converged = true;
      break;
    }
    if (!fresh_jacobian) {
      problem.jacobian(x, jac);
      fresh_jacobian = true;
    }
    const MatrixXd jtj = jac.transpose() * jac;
    const VectorXd grad = jac.transpose() * r;
    VectorXd diag = jtj.diagonal();
    const double diag_floor = std::max(diag.maxCoeff(), 1e-300) * 1e-15;
    for (Index k = 0; k < np; ++k) diag[k] = std::max(diag[k], diag_floor);

    MatrixXd damped = jtj;
    damped.diagonal() += lambda * diag;
    const VectorXd step = damped.ldlt().solve(-grad);
    const VectorXd trial = x + step;

    bool improved = false;
    double trial_cost = std::numeric_limits<double>::infinity();
    if (step.allFinite() && problem.admissible(trial)) {
      problem.residuals(trial, trial_r);
      trial_cost = trial_r.squaredNorm();
      improved = std::isfinite(trial_cost) && trial_cost < cost;
    }

    if (improved) {
      const double rel_drop = (cost - trial_cost) / cost;
      const VectorXd dscale = diag.cwiseSqrt();
      const double scaled_step = (dscale.cwiseProduct(step)).norm();
      const double scaled_x = (dscale.cwiseProduct(x)).norm();
      x = trial;
      r = trial_r;
      cost = trial_cost;
      rep.cost_history.push_back(cost);
      fresh_jacobian = false;
      lambda = std::max(lambda / 10.0, 1e-15);
      if (rel_drop < opt.cost_tolerance ||
          scaled_step <= opt.step_tolerance * (scaled_x + opt.step_tolerance)) {
        ++rep.iterations;
        rep.converged = true;
        break;
      }
    } else {
      lambda *= 10.0;
      if (lambda > opt.max_damping) {
        // No descent is representable in floating point: this is a
        // stationary point to working precision.
        const double gmax = grad.cwiseAbs().cwiseQuotient(diag.cwiseSqrt()).maxCoeff();
        rep.converged = gmax <= 1e-6 * std::sqrt(cost);
        ++rep.iterations;
        break;
      }
    }
  }

  rep.params = x;
  rep.residuals = r;
  problem.jacobian(x, jac);
  rep.jacobian = jac;
  rep.cost = cost;
  return rep;
}

/// Covariance sigma^2 (J^T J)^{-1}. Columns are first multiplied by
/// `scales` (typical parameter magnitudes) so the conditioning test is
/// unit-free; a scaled condition number above 1e8 means two parameters cannot
/// be separated and throws naming them.
inline MatrixXd covariance(const MatrixXd& jac, double sigma2, const VectorXd& scales,
                           const std::vector<std::string>& names) {
  const Index np = jac.cols();
  MatrixXd js = jac;
  for (Index k = 0; k < np; ++k) js.col(k) *= scales[k];
  const MatrixXd a = js.transpose() * js;

  Eigen::SelfAdjointEigenSolver<MatrixXd> es(a);
  const VectorXd ev = es.eigenvalues();
  const double lmax = ev.maxCoeff();
  const double lmin = ev.minCoeff();
  if (!(lmax > 0.0) || !(lmin > 1e-16 * lmax)) {
    // the two largest entries of the weakest direction are the degenerate pair
    const VectorXd w = es.eigenvectors().col(0).cwiseAbs();
    Index first = 0;
    w.maxCoeff(&first);
    Index second = first == 0 ? 1 : 0;
    for (Index k = 0; k < np; ++k)
      if (k != first && w[k] > w[second]) second = k;
    throw IllConditionedError(names.at(first), names.at(second));
  }
  MatrixXd cov_s = es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  MatrixXd cov = sigma2 * cov_s;
  for (Index i = 0; i < np; ++i)
    for (Index j = 0; j < np; ++j) cov(i, j) *= scales[i] * scales[j];
  return cov;
}

}  // namespace sivmag
