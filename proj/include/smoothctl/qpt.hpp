#pragma once

// Simulated single-qubit process tomography in the operator basis
// A = {I, X, -iY, Z}: tomography of four input states, chi reconstruction,
// process (Choi) fidelity, and projection onto physical processes.

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/LevenbergMarquardt>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "smoothctl/core.hpp"
#include "smoothctl/errors.hpp"
#include "smoothctl/linalg.hpp"
#include "smoothctl/parallel.hpp"
#include "smoothctl/propagation.hpp"

namespace smoothctl {

using ChiMatrix = Mat4;

namespace qpt {

inline const std::array<Mat2, 4>& basis() {
  static const std::array<Mat2, 4> a{pauli::identity(), pauli::x(), Mat2(-kI * pauli::y()),
                                     pauli::z()};
  return a;
}

inline constexpr std::array<const char*, 4> kBasisLabels{"I", "X", "-iY", "Z"};

/// E(rho) = sum chi_mn A_m rho A_n^dagger
inline Mat2 apply(const ChiMatrix& chi, const Mat2& rho) {
  const auto& a = basis();
  Mat2 out = Mat2::Zero();
  for (int m = 0; m < 4; ++m)
    for (int n = 0; n < 4; ++n) out += chi(m, n) * a[m] * rho * a[n].adjoint();
  return out;
}

/// sum chi_mn A_n^dagger A_m; identity for a trace-preserving process
inline Mat2 trace_map(const ChiMatrix& chi) {
  const auto& a = basis();
  Mat2 out = Mat2::Zero();
  for (int m = 0; m < 4; ++m)
    for (int n = 0; n < 4; ++n) out += chi(m, n) * a[n].adjoint() * a[m];
  return out;
}

inline double tp_residual(const ChiMatrix& chi) {
  return max_abs(Mat2(trace_map(chi) - Mat2::Identity()));
}

/// chi of the unitary channel rho -> U rho U^dagger
inline ChiMatrix chi_of_unitary(const Mat2& u) {
  Vec4 c;
  for (int m = 0; m < 4; ++m) c(m) = 0.5 * (basis()[m].adjoint() * u).trace();
  return c * c.adjoint();
}

/// Input states |0>, |1>, |+>, |-> = (|0> + i|1>)/sqrt(2).
inline std::array<Vec2, 4> input_states() {
  return {ket::zero(), ket::one(), ket::plus(), ket::plus_i()};
}

}  // namespace qpt

enum class PrepReadout { ideal, rectangular };

struct TomographyConfig {
  std::optional<std::int64_t> shots;  // empty: exact expectations
  std::uint64_t seed = 0;
  PrepReadout prep_readout = PrepReadout::ideal;
  double prep_rabi_hz = 20e6;  // rectangular preparation/readout pulses
  EnsemblePoint prep_point{0.0, 1.0, 1.0};  // (delta, s) errors of those pulses

  void validate() const {
    if (shots && *shots < 1) throw DomainError("TomographyConfig: shots must be >= 1");
    if (prep_readout == PrepReadout::rectangular && !(prep_rabi_hz > 0.0))
      throw DomainError("TomographyConfig: prep_rabi_hz must be > 0");
  }
};

/// Output density matrices and raw Pauli expectations for the four inputs.
struct TomographyResult {
  std::array<Mat2, 4> rho;
  std::array<Eigen::Vector3d, 4> expectations;
};

namespace detail {

/// Rotation by `angle` about the in-plane axis at `phase`.
inline Mat2 rotation(double phase, double angle, const TomographyConfig& cfg) {
  if (cfg.prep_readout == PrepReadout::ideal) {
    const double h = 0.5 * angle;
    return su2_exp(h * std::cos(phase), h * std::sin(phase), 0.0, 1.0);
  }
  const ControlProgram pulse(make_hard_pulse(cfg.prep_rabi_hz, angle, phase));
  return propagate_timeslice(pulse, cfg.prep_point);
}

inline double sample_expectation(double exact, std::int64_t shots, std::mt19937_64& rng) {
  const double p0 = std::clamp(0.5 * (1.0 + exact), 0.0, 1.0);
  std::binomial_distribution<std::int64_t> dist(shots, p0);
  return 2.0 * static_cast<double>(dist(rng)) / static_cast<double>(shots) - 1.0;
}

}  // namespace detail

/// Prepares |0>, |1>, |+>, |->, applies the process and estimates <X>, <Y>,
/// <Z> by pre-rotation and a Z measurement.
inline TomographyResult simulate_tomography(const Mat2& process, const TomographyConfig& cfg = {}) {
  cfg.validate();
  const Mat2 id = Mat2::Identity();
  const std::array<Mat2, 4> prep{id, detail::rotation(0.0, kPi, cfg),
                                 detail::rotation(kPi / 2, kPi / 2, cfg),
                                 detail::rotation(0.0, -kPi / 2, cfg)};
  // rotations taking X, Y, Z onto Z
  const std::array<Mat2, 3> readout{detail::rotation(kPi / 2, -kPi / 2, cfg),
                                    detail::rotation(0.0, kPi / 2, cfg), id};
  std::mt19937_64 rng(cfg.seed);
  TomographyResult out;
  for (int i = 0; i < 4; ++i) {
    const Vec2 psi = process * prep[i] * ket::zero();
    for (int k = 0; k < 3; ++k) {
      const Vec2 v = readout[k] * psi;
      double e = std::norm(v(0)) - std::norm(v(1));
      if (cfg.shots) e = detail::sample_expectation(e, *cfg.shots, rng);
      out.expectations[i](k) = e;
    }
    const auto& e = out.expectations[i];
    out.rho[i] = 0.5 * (id + e(0) * pauli::x() + e(1) * pauli::y() + e(2) * pauli::z());
  }
  return out;
}

inline TomographyResult simulate_tomography(const ControlProgram& program, const EnsemblePoint& point,
                                            const TomographyConfig& cfg = {}) {
  return simulate_tomography(Mat2(propagate_timeslice(program, point)), cfg);
}

/// chi = (1/4) L [[r1, r2], [r3, r4]] L with L = [[I, X], [X, -I]], where
/// r1 = E(|0><0|), r4 = E(|1><1|), r2 = E(|0><1|), r3 = E(|1><0|).
inline ChiMatrix reconstruct_chi(const std::array<Mat2, 4>& rho) {
  const Mat2& r0 = rho[0];
  const Mat2& r1 = rho[1];
  const Mat2& rp = rho[2];
  const Mat2& rm = rho[3];
  const Mat2 diag_sum = r0 + r1;
  const Mat2 r2 = rp + kI * rm - (1.0 + kI) * 0.5 * diag_sum;
  const Mat2 r3 = rp - kI * rm - (1.0 - kI) * 0.5 * diag_sum;
  Mat4 big;
  big << r0, r2, r3, r1;
  Mat4 lambda;
  lambda << pauli::identity(), pauli::x(), pauli::x(), -pauli::identity();
  return 0.25 * lambda * big * lambda;
}

inline ChiMatrix reconstruct_chi(const TomographyResult& tomo) { return reconstruct_chi(tomo.rho); }

/// rho_E = (1/2) sum_ij E(|i><j|) (x) |i><j|
inline Mat4 process_density_matrix(const ChiMatrix& chi, bool* non_tp = nullptr) {
  if (non_tp) *non_tp = qpt::tp_residual(chi) > 1e-3;
  Mat4 out = Mat4::Zero();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      Mat2 e = Mat2::Zero();
      e(i, j) = 1.0;
      out += 0.5 * Eigen::kroneckerProduct(qpt::apply(chi, e), e).eval();
    }
  return out;
}

/// <psi| rho_E |psi> with psi = sum_i U|i> (x) |i> / sqrt(2). Values outside
/// [0, 1] (unphysical chi) are clamped and flagged.
inline double process_fidelity(const ChiMatrix& chi, const Mat2& ideal, bool* clamped = nullptr) {
  if (unitarity_residual(ideal) > 1e-8) throw DomainError("process_fidelity: ideal not unitary");
  const Mat4 rho = process_density_matrix(chi);
  Vec4 psi = Vec4::Zero();
  for (int i = 0; i < 2; ++i) {
    Vec2 e = Vec2::Zero();
    e(i) = 1.0;
    psi += Eigen::kroneckerProduct(Vec2(ideal * e), e).eval() / std::sqrt(2.0);
  }
  const double f = psi.dot(rho * psi).real();
  const double c = std::clamp(f, 0.0, 1.0);
  if (clamped) *clamped = c != f;
  return c;
}

struct PhysicalityReport {
  ChiMatrix chi_physical;
  double d_trace = 0.0;
  double frobenius = 0.0;
  double constraint_residual = 0.0;
  double delta = 0.0;  // squared distance minimized
  int best_start = 0;
};

struct ProjectionConfig {
  int starts = 8;
  std::uint64_t seed = 0;
  double start_spread = 0.05;
  std::vector<double> lambdas{1e2, 1e3, 1e4, 1e5, 1e6};
};

namespace detail {

/// T lower triangular: diagonal t0..t3 real, then (1,0) (2,1) (3,2) (2,0)
/// (3,1) (3,0) as (re, im) pairs.
inline constexpr std::array<std::array<int, 2>, 6> kLowerSlots{
    {{1, 0}, {2, 1}, {3, 2}, {2, 0}, {3, 1}, {3, 0}}};

inline Mat4 lower_factor(const Eigen::VectorXd& t) {
  Mat4 m = Mat4::Zero();
  for (int d = 0; d < 4; ++d) m(d, d) = t(d);
  for (int s = 0; s < 6; ++s) m(kLowerSlots[s][0], kLowerSlots[s][1]) = cplx(t(4 + 2 * s), t(5 + 2 * s));
  return m;
}

/// dT/dt_p
inline Mat4 lower_factor_unit(int p) {
  Mat4 m = Mat4::Zero();
  if (p < 4) {
    m(p, p) = 1.0;
  } else {
    const int s = (p - 4) / 2;
    m(kLowerSlots[s][0], kLowerSlots[s][1]) = (p - 4) % 2 == 0 ? cplx(1.0) : kI;
  }
  return m;
}

inline Eigen::Vector4d tp_constraints(const ChiMatrix& chi) {
  const Mat2 m = qpt::trace_map(chi) - Mat2::Identity();
  return {m(0, 0).real(), m(1, 1).real(), m(0, 1).real(), m(0, 1).imag()};
}

inline Eigen::VectorXd factor_of(const ChiMatrix& positive) {
  // positive = T^dagger T with T lower: Cholesky of the index-reversed matrix
  Mat4 rev = positive.colwise().reverse().rowwise().reverse();
  Eigen::LLT<Mat4> llt(rev);
  if (llt.info() != Eigen::Success) throw NumericError("project_physical: start factorization failed");
  const Mat4 l = llt.matrixL();
  const Mat4 t = Mat4(l.adjoint()).colwise().reverse().rowwise().reverse();
  Eigen::VectorXd x(16);
  for (int d = 0; d < 4; ++d) x(d) = t(d, d).real();
  for (int s = 0; s < 6; ++s) {
    const cplx v = t(kLowerSlots[s][0], kLowerSlots[s][1]);
    x(4 + 2 * s) = v.real();
    x(5 + 2 * s) = v.imag();
  }
  return x;
}

/// Jacobian of tp_constraints(T^dagger T) with respect to the 16 parameters.
inline Eigen::Matrix<double, 4, 16> tp_jacobian(const Eigen::VectorXd& x) {
  const Mat4 t = lower_factor(x);
  Eigen::Matrix<double, 4, 16> jac;
  for (int p = 0; p < 16; ++p) {
    const Mat4 u = lower_factor_unit(p);
    const Mat2 m = qpt::trace_map(Mat4(u.adjoint() * t + t.adjoint() * u));
    jac.col(p) << m(0, 0).real(), m(1, 1).real(), m(0, 1).real(), m(0, 1).imag();
  }
  return jac;
}

/// Minimum-norm Newton steps onto the (linear in chi) trace-preservation
/// constraints. Used after the penalty ramp, where the factorization is
/// degenerate at rank-deficient optima and descent stalls short of 1e-6.
inline void restore_trace_preservation(Eigen::VectorXd& x) {
  for (int it = 0; it < 30; ++it) {
    const Mat4 t = lower_factor(x);
    const Eigen::Vector4d c = tp_constraints(Mat4(t.adjoint() * t));
    if (c.cwiseAbs().maxCoeff() < 1e-14) return;
    const Eigen::Matrix<double, 4, 16> jac = tp_jacobian(x);
    x -= jac.completeOrthogonalDecomposition().solve(c);
  }
}

struct ProjectionFunctor : Eigen::DenseFunctor<double> {
  ProjectionFunctor(const ChiMatrix& target, double lambda)
      : Eigen::DenseFunctor<double>(16, 36), target_(target), weight_(std::sqrt(lambda)) {}

  int operator()(const InputType& x, ValueType& f) const {
    const Mat4 t = lower_factor(x);
    const Mat4 d = t.adjoint() * t - target_;
    for (int k = 0; k < 16; ++k) {
      f(k) = d(k / 4, k % 4).real();
      f(16 + k) = d(k / 4, k % 4).imag();
    }
    f.tail<4>() = weight_ * tp_constraints(t.adjoint() * t);
    return 0;
  }

  int df(const InputType& x, JacobianType& jac) const {
    const Mat4 t = lower_factor(x);
    for (int p = 0; p < 16; ++p) {
      const Mat4 u = lower_factor_unit(p);
      const Mat4 d = u.adjoint() * t + t.adjoint() * u;
      for (int k = 0; k < 16; ++k) {
        jac(k, p) = d(k / 4, k % 4).real();
        jac(16 + k, p) = d(k / 4, k % 4).imag();
      }
    }
    jac.bottomRows<4>() = weight_ * tp_jacobian(x);
    return 0;
  }

 private:
  ChiMatrix target_;
  double weight_;
};

inline double gaussian(std::mt19937_64& rng) {
  // Box-Muller on 53-bit uniforms, platform independent
  const double u1 = (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

}  // namespace detail

/// Nearest chi~ = T^dagger T (T lower triangular) to chi under the
/// trace-preservation constraint, by penalized Levenberg-Marquardt from
/// several seeded starts. Reports D = (1/2) ||chi - chi~||_1 and the
/// Frobenius norm of chi - chi~.
inline PhysicalityReport project_physical(const ChiMatrix& chi_in, const ProjectionConfig& cfg = {}) {
  if (cfg.starts < 1) throw DomainError("project_physical: starts must be >= 1");
  const double herm = max_abs(Mat4(chi_in - chi_in.adjoint()));
  if (herm > 1e-6) throw DomainError("project_physical: chi is not Hermitian");
  const ChiMatrix chi = 0.5 * (chi_in + chi_in.adjoint());

  Eigen::SelfAdjointEigenSolver<Mat4> eig(chi);
  const Eigen::Vector4d clipped = eig.eigenvalues().cwiseMax(1e-6);
  const Mat4 psd = eig.eigenvectors() * clipped.cast<cplx>().asDiagonal() * eig.eigenvectors().adjoint();
  const Eigen::VectorXd x0 = detail::factor_of(psd);

  std::mt19937_64 rng(cfg.seed);
  std::vector<Eigen::VectorXd> starts{x0};
  for (int s = 1; s < cfg.starts; ++s) {
    Eigen::VectorXd x = x0;
    for (Eigen::Index k = 0; k < x.size(); ++k) x(k) += cfg.start_spread * detail::gaussian(rng);
    starts.push_back(x);
  }

  struct Outcome {
    Eigen::VectorXd x;
    double delta = std::numeric_limits<double>::infinity();
    double residual = std::numeric_limits<double>::infinity();
  };
  auto runs = parallel_map(starts.size(), [&](std::size_t i) {
    Eigen::VectorXd x = starts[i];
    for (double lambda : cfg.lambdas) {
      detail::ProjectionFunctor fn(chi, lambda);
      Eigen::LevenbergMarquardt<detail::ProjectionFunctor> lm(fn);
      lm.setXtol(1e-15);
      lm.setFtol(1e-15);
      lm.setGtol(1e-15);
      lm.setMaxfev(4000);
      lm.minimize(x);
    }
    detail::restore_trace_preservation(x);
    const Mat4 t = detail::lower_factor(x);
    const Mat4 ct = t.adjoint() * t;
    return Outcome{x, (ct - chi).squaredNorm(), detail::tp_constraints(ct).cwiseAbs().maxCoeff()};
  });

  // constraint-satisfying starts first, then lowest delta, then lowest index
  auto better = [&](const Outcome& a, const Outcome& b) {
    const bool fa = a.residual <= 1e-6, fb = b.residual <= 1e-6;
    if (fa != fb) return fa;
    return a.delta < b.delta;
  };
  int best = -1;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (!std::isfinite(runs[i].delta)) continue;
    if (best < 0 || better(runs[i], runs[static_cast<std::size_t>(best)])) best = static_cast<int>(i);
  }
  if (best < 0) throw ConvergenceError("project_physical: no start converged");

  PhysicalityReport rep;
  const Mat4 t = detail::lower_factor(runs[static_cast<std::size_t>(best)].x);
  rep.chi_physical = t.adjoint() * t;
  rep.best_start = best;
  rep.delta = runs[static_cast<std::size_t>(best)].delta;
  rep.constraint_residual = qpt::tp_residual(rep.chi_physical);
  const Mat4 diff = chi - rep.chi_physical;
  Eigen::JacobiSVD<Mat4> svd(diff);
  rep.d_trace = 0.5 * svd.singularValues().sum();
  rep.frobenius = diff.norm();
  if (rep.constraint_residual > 1e-6)
    throw ConvergenceError("project_physical: trace-preservation residual " +
                           std::to_string(rep.constraint_residual) + " above 1e-6");
  return rep;
}

}  // namespace smoothctl
