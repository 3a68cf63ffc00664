#pragma once

// Small dense complex linear algebra for a single qubit.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <numbers>

namespace smoothctl {

using cplx = std::complex<double>;
using Mat2 = Eigen::Matrix2cd;
using Vec2 = Eigen::Vector2cd;
using Mat4 = Eigen::Matrix4cd;
using Vec4 = Eigen::Vector4cd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

namespace pauli {

inline Mat2 identity() { return Mat2::Identity(); }

inline Mat2 x() {
  Mat2 m;
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}

inline Mat2 y() {
  Mat2 m;
  m << 0.0, -kI, kI, 0.0;
  return m;
}

inline Mat2 z() {
  Mat2 m;
  m << 1.0, 0.0, 0.0, -1.0;
  return m;
}

}  // namespace pauli

namespace ket {

inline Vec2 zero() { return Vec2(1.0, 0.0); }
inline Vec2 one() { return Vec2(0.0, 1.0); }
inline Vec2 plus() { return Vec2(1.0, 1.0) / std::sqrt(2.0); }
/// (|0> + i|1>)/sqrt(2)
inline Vec2 plus_i() { return Vec2(1.0, kI) / std::sqrt(2.0); }

}  // namespace ket

/// exp(-i (hx X + hy Y + hz Z) dt) in closed form.
inline Mat2 su2_exp(double hx, double hy, double hz, double dt) {
  const double r = std::sqrt(hx * hx + hy * hy + hz * hz);
  const double theta = r * dt;
  const double c = std::cos(theta);
  // sin(r dt)/r, finite as r -> 0
  const double sinc = r * dt > 1e-8 ? std::sin(theta) / r : dt * (1.0 - theta * theta / 6.0);
  Mat2 u;
  u(0, 0) = cplx(c, -sinc * hz);
  u(1, 1) = cplx(c, sinc * hz);
  u(0, 1) = -kI * sinc * cplx(hx, -hy);
  u(1, 0) = -kI * sinc * cplx(hx, hy);
  return u;
}

/// su2_exp together with its partial derivatives in hx and hy.
struct Su2ExpJet {
  Mat2 value;
  Mat2 d_hx;
  Mat2 d_hy;
};

inline Su2ExpJet su2_exp_jet(double hx, double hy, double hz, double dt) {
  const double r2 = hx * hx + hy * hy + hz * hz;
  const double r = std::sqrt(r2);
  const double theta = r * dt;
  const double c = std::cos(theta);
  double sinc;
  double dsinc_over_r;  // (d sinc / dr) / r
  if (theta > 1e-4) {
    sinc = std::sin(theta) / r;
    dsinc_over_r = (dt * c - sinc) / r2;
  } else {
    const double t2 = theta * theta;
    sinc = dt * (1.0 - t2 / 6.0 + t2 * t2 / 120.0);
    dsinc_over_r = -dt * dt * dt / 3.0 * (1.0 - t2 / 10.0);
  }

  Su2ExpJet jet;
  jet.value(0, 0) = cplx(c, -sinc * hz);
  jet.value(1, 1) = cplx(c, sinc * hz);
  jet.value(0, 1) = -kI * sinc * cplx(hx, -hy);
  jet.value(1, 0) = -kI * sinc * cplx(hx, hy);

  // dE/dh_a = -dt sinc h_a I - i [ h_a dsinc_over_r (h.sigma) + sinc sigma_a ]
  auto partial = [&](double ha, const Mat2& sigma_a) {
    Mat2 hs;
    hs(0, 0) = hz;
    hs(1, 1) = -hz;
    hs(0, 1) = cplx(hx, -hy);
    hs(1, 0) = cplx(hx, hy);
    return Mat2((-dt * sinc * ha) * Mat2::Identity() - kI * (ha * dsinc_over_r * hs + sinc * sigma_a));
  };
  jet.d_hx = partial(hx, pauli::x());
  jet.d_hy = partial(hy, pauli::y());
  return jet;
}

template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& m) {
  return m.cwiseAbs().maxCoeff();
}

/// ||U^dagger U - I||_max
inline double unitarity_residual(const Mat2& u) {
  return max_abs(Mat2(u.adjoint() * u - Mat2::Identity()));
}

/// Max-norm distance after removing the global phase. The phase reference is
/// the largest-magnitude entry of `reference`, applied to both operands.
inline double distance_up_to_phase(const Mat2& a, const Mat2& reference) {
  Eigen::Index r = 0, c = 0;
  reference.cwiseAbs().maxCoeff(&r, &c);
  const cplx ref = reference(r, c);
  const cplx other = a(r, c);
  if (std::abs(ref) == 0.0 || std::abs(other) == 0.0) return max_abs(Mat2(a - reference));
  const cplx pa = std::conj(other) / std::abs(other);
  const cplx pr = std::conj(ref) / std::abs(ref);
  return max_abs(Mat2(a * pa - reference * pr));
}

/// Bloch vector (<X>, <Y>, <Z>) of a pure state.
inline Eigen::Vector3d bloch_vector(const Vec2& psi) {
  const cplx c = std::conj(psi(0)) * psi(1);
  return {2.0 * c.real(), 2.0 * c.imag(), std::norm(psi(0)) - std::norm(psi(1))};
}

}  // namespace smoothctl
