#pragma once

// Ground-state spin Hamiltonian of the S = 3/2 silicon vacancy and its ODMR
// transitions.
//
//   H = D [Sz^2 - S(S+1)/3] + gamma B0 [Sz cos(theta) + Sx sin(theta)]
//
// Everything is in frequency units (Hz). The basis is ordered
// m = +3/2, +1/2, -1/2, -3/2.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>

#include "sivmag/error.hpp"
#include "sivmag/units.hpp"

namespace sivmag {

using Complex = std::complex<double>;

inline constexpr int kSpinDim = 4;
inline constexpr double kSpin = 1.5;

/// 4x4 complex matrix in the |m> basis.
struct SpinMatrix {
  std::array<std::array<Complex, kSpinDim>, kSpinDim> m{};

  Complex& operator()(int i, int j) { return m[i][j]; }
  const Complex& operator()(int i, int j) const { return m[i][j]; }

  static SpinMatrix identity() {
    SpinMatrix r;
    for (int i = 0; i < kSpinDim; ++i) r(i, i) = 1.0;
    return r;
  }

  double max_abs() const {
    double best = 0.0;
    for (const auto& row : m)
      for (const auto& v : row) best = std::max(best, std::abs(v));
    return best;
  }

  Complex trace() const {
    Complex t = 0.0;
    for (int i = 0; i < kSpinDim; ++i) t += m[i][i];
    return t;
  }

  SpinMatrix adjoint() const {
    SpinMatrix r;
    for (int i = 0; i < kSpinDim; ++i)
      for (int j = 0; j < kSpinDim; ++j) r(i, j) = std::conj(m[j][i]);
    return r;
  }

  // Largest |H_ij - conj(H_ji)|, with the offending entry.
  double hermiticity_defect(int* row = nullptr, int* col = nullptr) const {
    double worst = 0.0;
    for (int i = 0; i < kSpinDim; ++i) {
      for (int j = i; j < kSpinDim; ++j) {
        const double d = std::abs(m[i][j] - std::conj(m[j][i]));
        if (d > worst) {
          worst = d;
          if (row) *row = i;
          if (col) *col = j;
        }
      }
    }
    return worst;
  }

  SpinMatrix& operator+=(const SpinMatrix& o) {
    for (int i = 0; i < kSpinDim; ++i)
      for (int j = 0; j < kSpinDim; ++j) m[i][j] += o.m[i][j];
    return *this;
  }
  SpinMatrix& operator-=(const SpinMatrix& o) {
    for (int i = 0; i < kSpinDim; ++i)
      for (int j = 0; j < kSpinDim; ++j) m[i][j] -= o.m[i][j];
    return *this;
  }
  SpinMatrix& operator*=(Complex s) {
    for (auto& row : m)
      for (auto& v : row) v *= s;
    return *this;
  }

  friend SpinMatrix operator+(SpinMatrix a, const SpinMatrix& b) { return a += b; }
  friend SpinMatrix operator-(SpinMatrix a, const SpinMatrix& b) { return a -= b; }
  friend SpinMatrix operator*(SpinMatrix a, Complex s) { return a *= s; }
  friend SpinMatrix operator*(Complex s, SpinMatrix a) { return a *= s; }

  friend SpinMatrix operator*(const SpinMatrix& a, const SpinMatrix& b) {
    SpinMatrix r;
    for (int i = 0; i < kSpinDim; ++i)
      for (int k = 0; k < kSpinDim; ++k) {
        const Complex aik = a.m[i][k];
        if (aik == Complex{}) continue;
        for (int j = 0; j < kSpinDim; ++j) r.m[i][j] += aik * b.m[k][j];
      }
    return r;
  }
};

/// Magnetic quantum number of basis index i.
constexpr double basis_m(int i) { return kSpin - i; }

/// Static field in the defect frame. The Hamiltonian is invariant under
/// theta -> -theta and theta -> pi - theta, so the polar angle is folded into
/// [0, pi/2] on construction. The azimuth is not observable and not stored.
class FieldVector {
 public:
  FieldVector() = default;

  FieldVector(double b0_t, double theta_rad) : b0_t_(b0_t), theta_rad_(canonical_angle(theta_rad)) {
    if (!(b0_t >= 0.0) || !std::isfinite(b0_t))
      throw InvalidArgument("field magnitude must be finite and non-negative");
  }

  static FieldVector from_gauss_degrees(double b0_gauss, double theta_deg) {
    return {gauss_to_tesla(b0_gauss), deg_to_rad(theta_deg)};
  }

  double b0_t() const noexcept { return b0_t_; }
  double theta_rad() const noexcept { return theta_rad_; }

  static double canonical_angle(double theta) {
    if (!std::isfinite(theta)) throw InvalidArgument("polar angle must be finite");
    constexpr double pi = std::numbers::pi;
    double t = std::fmod(std::abs(theta), pi);
    if (t > pi / 2) t = pi - t;
    return t;
  }

  friend bool operator==(const FieldVector&, const FieldVector&) = default;

 private:
  double b0_t_ = 0.0;
  double theta_rad_ = 0.0;
};

struct SpinOperators {
  SpinMatrix sx;
  SpinMatrix sy;
  SpinMatrix sz;
};

/// Dimensionless S = 3/2 operators built from the ladder operators,
/// <m+1|S+|m> = sqrt(S(S+1) - m(m+1)).
inline SpinOperators spin_operators() {
  constexpr double ss1 = kSpin * (kSpin + 1.0);
  SpinMatrix sp;  // raising operator
  for (int j = 1; j < kSpinDim; ++j) {
    const double m = basis_m(j);
    sp(j - 1, j) = std::sqrt(ss1 - m * (m + 1.0));
  }
  const SpinMatrix sm = sp.adjoint();

  SpinOperators ops;
  ops.sx = (sp + sm) * Complex(0.5, 0.0);
  ops.sy = (sp - sm) * Complex(0.0, -0.5);
  for (int i = 0; i < kSpinDim; ++i) ops.sz(i, i) = basis_m(i);
  return ops;
}

inline SpinMatrix build_hamiltonian(const FieldVector& field, const PhysicalConstants& consts) {
  static const SpinOperators ops = spin_operators();
  constexpr double offset = kSpin * (kSpin + 1.0) / 3.0;

  SpinMatrix h;
  for (int i = 0; i < kSpinDim; ++i) {
    const double m = basis_m(i);
    h(i, i) = consts.d_hz() * (m * m - offset);
  }
  const double zeeman = consts.gyro_hz_per_t() * field.b0_t();
  h += ops.sz * Complex(zeeman * std::cos(field.theta_rad()), 0.0);
  h += ops.sx * Complex(zeeman * std::sin(field.theta_rad()), 0.0);
  return h;
}

/// Eigenvalues ascending; column k of `vectors` is the eigenvector of energies_hz[k].
struct EigenSystem {
  std::array<double, kSpinDim> energies_hz{};
  SpinMatrix vectors;

  Complex component(int row, int state) const { return vectors(row, state); }
};

namespace detail {

inline double max_off_diagonal(const SpinMatrix& a) {
  double best = 0.0;
  for (int i = 0; i < kSpinDim; ++i)
    for (int j = 0; j < kSpinDim; ++j)
      if (i != j) best = std::max(best, std::abs(a(i, j)));
  return best;
}

// One complex Jacobi rotation annihilating a(p,q). The unitary is a phase
// change on q (making a(p,q) real) followed by a real plane rotation.
inline void jacobi_rotate(SpinMatrix& a, SpinMatrix& v, int p, int q) {
  const Complex apq = a(p, q);
  const double r = std::abs(apq);
  if (r == 0.0) return;
  const Complex phase = apq / r;  // e^{i phi}
  const double app = a(p, p).real();
  const double aqq = a(q, q).real();

  const double tau = (aqq - app) / (2.0 * r);
  const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
  const double c = 1.0 / std::sqrt(1.0 + t * t);
  const double s = t * c;

  // U(p,p) = c, U(p,q) = s, U(q,p) = -s e^{-i phi}, U(q,q) = c e^{-i phi}
  const Complex upp = c;
  const Complex upq = s;
  const Complex uqp = -s * std::conj(phase);
  const Complex uqq = c * std::conj(phase);

  for (int k = 0; k < kSpinDim; ++k) {  // A <- A U
    const Complex akp = a(k, p);
    const Complex akq = a(k, q);
    a(k, p) = akp * upp + akq * uqp;
    a(k, q) = akp * upq + akq * uqq;
  }
  for (int k = 0; k < kSpinDim; ++k) {  // A <- U^dagger A
    const Complex apk = a(p, k);
    const Complex aqk = a(q, k);
    a(p, k) = std::conj(upp) * apk + std::conj(uqp) * aqk;
    a(q, k) = std::conj(upq) * apk + std::conj(uqq) * aqk;
  }
  a(p, q) = 0.0;
  a(q, p) = 0.0;
  a(p, p) = a(p, p).real();
  a(q, q) = a(q, q).real();

  for (int k = 0; k < kSpinDim; ++k) {  // V <- V U
    const Complex vkp = v(k, p);
    const Complex vkq = v(k, q);
    v(k, p) = vkp * upp + vkq * uqp;
    v(k, q) = vkp * upq + vkq * uqq;
  }
}

inline int dominant_component(const SpinMatrix& v, int col) {
  int best = 0;
  for (int i = 1; i < kSpinDim; ++i)
    if (std::abs(v(i, col)) > std::abs(v(best, col)) * (1.0 + 1e-12)) best = i;
  return best;
}

}  // namespace detail

/// Cyclic Jacobi diagonalization of a Hermitian 4x4 matrix.
///
/// Sweeps until the largest off-diagonal magnitude is below 1e-12 max|H|.
/// Output order is ascending energy; exact ties (within 1e-12 of the scale)
/// are ordered by the index of the dominant basis component, and each vector
/// is phased so its first non-negligible component is real and positive.
inline EigenSystem diagonalize(const SpinMatrix& h) {
  const double scale = h.max_abs();
  int row = 0;
  int col = 0;
  const double defect = h.hermiticity_defect(&row, &col);
  if (!std::isfinite(scale) || defect > 1e-9 * scale) throw NonHermitianError(row, col, defect);

  SpinMatrix a = h;
  for (int i = 0; i < kSpinDim; ++i) {  // symmetrize away rounding
    a(i, i) = a(i, i).real();
    for (int j = i + 1; j < kSpinDim; ++j) {
      const Complex avg = 0.5 * (a(i, j) + std::conj(a(j, i)));
      a(i, j) = avg;
      a(j, i) = std::conj(avg);
    }
  }
  SpinMatrix v = SpinMatrix::identity();

  const double threshold = 1e-12 * scale;
  for (int sweep = 0; sweep < 64 && detail::max_off_diagonal(a) > threshold; ++sweep) {
    for (int p = 0; p < kSpinDim - 1; ++p)
      for (int q = p + 1; q < kSpinDim; ++q)
        if (std::abs(a(p, q)) > 0.0) detail::jacobi_rotate(a, v, p, q);
  }

  std::array<int, kSpinDim> order{0, 1, 2, 3};
  const double tie = 1e-12 * std::max(scale, 1.0);
  auto before = [&](int x, int y) {
    const double ex = a(x, x).real();
    const double ey = a(y, y).real();
    if (std::abs(ex - ey) > tie) return ex < ey;
    return detail::dominant_component(v, x) < detail::dominant_component(v, y);
  };
  // insertion sort keeps the tie rule deterministic
  for (int i = 1; i < kSpinDim; ++i)
    for (int j = i; j > 0 && before(order[j], order[j - 1]); --j) std::swap(order[j], order[j - 1]);

  EigenSystem eig;
  for (int k = 0; k < kSpinDim; ++k) {
    const int src = order[k];
    eig.energies_hz[k] = a(src, src).real();
    Complex phase = 1.0;
    for (int i = 0; i < kSpinDim; ++i) {
      const double mag = std::abs(v(i, src));
      if (mag > 1e-12) {
        phase = std::conj(v(i, src)) / mag;
        break;
      }
    }
    for (int i = 0; i < kSpinDim; ++i) eig.vectors(i, k) = v(i, src) * phase;
  }
  return eig;
}

/// Unit 3-vector along which the microwave field drives the spin.
struct DriveAxis {
  double x = 1.0;
  double y = 0.0;
  double z = 0.0;

  DriveAxis() = default;
  DriveAxis(double x_, double y_, double z_) {
    const double n = std::sqrt(x_ * x_ + y_ * y_ + z_ * z_);
    if (!(n > 0.0) || !std::isfinite(n)) throw InvalidArgument("drive axis must be a non-zero vector");
    x = x_ / n;
    y = y_ / n;
    z = z_ / n;
  }
};

/// The two ODMR resonances and their drive strengths |<i|S.n|j>|^2.
struct TransitionPair {
  double nu1_hz = 0.0;
  double nu2_hz = 0.0;
  double strength1 = 0.0;
  double strength2 = 0.0;
};

/// Which sorted levels the two ODMR lines connect.
///
/// At theta = 0 the lines are |-1/2> <-> |-3/2> (nu1) and |+1/2> <-> |+3/2>
/// (nu2). For theta > 0 the matrix is irreducible tridiagonal in the |m> basis,
/// so no two levels cross while theta is varied at fixed B0 and each level
/// keeps the sorted position its |m> parent had at theta = 0. Below
/// gamma B0 = D the |+1/2> level lies under |-3/2>, giving the inner pairing.
struct TransitionLevels {
  std::array<int, 2> nu1;
  std::array<int, 2> nu2;
};

inline TransitionLevels transition_levels(const FieldVector& field, const PhysicalConstants& consts) {
  if (consts.gyro_hz_per_t() * field.b0_t() < consts.d_hz()) return {{0, 2}, {1, 3}};
  return {{0, 1}, {2, 3}};
}

inline TransitionPair transition_frequencies(const EigenSystem& eig, const FieldVector& field,
                                             const PhysicalConstants& consts,
                                             const DriveAxis& drive = {}) {
  static const SpinOperators ops = spin_operators();
  const SpinMatrix sd =
      ops.sx * Complex(drive.x, 0.0) + ops.sy * Complex(drive.y, 0.0) + ops.sz * Complex(drive.z, 0.0);

  auto strength = [&](int a, int b) {
    Complex amp = 0.0;
    for (int i = 0; i < kSpinDim; ++i)
      for (int j = 0; j < kSpinDim; ++j)
        amp += std::conj(eig.vectors(i, a)) * sd(i, j) * eig.vectors(j, b);
    return std::norm(amp);
  };

  const TransitionLevels lv = transition_levels(field, consts);
  const auto& e = eig.energies_hz;
  TransitionPair tp;
  tp.nu1_hz = std::abs(e[lv.nu1[1]] - e[lv.nu1[0]]);
  tp.nu2_hz = std::abs(e[lv.nu2[1]] - e[lv.nu2[0]]);
  tp.strength1 = strength(lv.nu1[0], lv.nu1[1]);
  tp.strength2 = strength(lv.nu2[0], lv.nu2[1]);
  return tp;
}

/// Forward model: field -> resonance pair.
inline TransitionPair transitions(const FieldVector& field, const PhysicalConstants& consts,
                                  const DriveAxis& drive = {}) {
  return transition_frequencies(diagonalize(build_hamiltonian(field, consts)), field, consts, drive);
}

/// Exact theta = 0 resonances: nu1 = |gamma B0 - 2D|, nu2 = gamma B0 + 2D.
inline TransitionPair closed_form_axial(double b0_t, const PhysicalConstants& consts,
                                        const DriveAxis& drive = {}) {
  if (!(b0_t >= 0.0)) throw InvalidArgument("field magnitude must be non-negative");
  const double zeeman = consts.gyro_hz_per_t() * b0_t;
  // |<m+1|S.n|m>|^2 for m = -3/2 and m = +1/2 is (3/4)(nx^2 + ny^2)
  const double s = 0.75 * (drive.x * drive.x + drive.y * drive.y);
  return {std::abs(zeeman - 2.0 * consts.d_hz()), zeeman + 2.0 * consts.d_hz(), s, s};
}

}  // namespace sivmag
