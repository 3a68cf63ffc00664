#pragma once

// Propagators for a ControlProgram: midpoint time slicing and the extended
// (Floquet) frequency-space construction for a single periodic envelope.

#include <Eigen/Eigenvalues>
#include <cmath>
#include <variant>
#include <vector>

#include "smoothctl/core.hpp"
#include "smoothctl/errors.hpp"
#include "smoothctl/linalg.hpp"

namespace smoothctl {

using UnitaryOp = Mat2;

inline constexpr int kDefaultSlices = 4096;
inline constexpr int kDefaultFloquetModes = 96;

struct BlochTrajectory {
  std::vector<double> times;
  std::vector<Eigen::Vector3d> vectors;
};

/// Uniform midpoint grid covering [0, t] of a Fourier segment. A full segment
/// gets exactly n_slices; a partial one keeps the same slice width.
struct SliceGrid {
  int count = 0;
  double dt = 0.0;

  static SliceGrid over(double t, double duration, int n_slices) {
    if (n_slices < 1) throw DomainError("n_slices must be >= 1");
    if (t <= 0.0) return {0, 0.0};
    const int n = std::max(1, static_cast<int>(std::ceil(n_slices * (t / duration) - 1e-9)));
    return {n, t / n};
  }

  double midpoint(int k) const { return (k + 0.5) * dt; }
};

/// sin(j w t_k) on a slice grid: row k, column j-1. Shared by the forward
/// pass and the gradient chain rule.
inline Eigen::MatrixXd sine_basis(const FourierEnvelope& env, const SliceGrid& grid) {
  const auto n = static_cast<Eigen::Index>(env.num_harmonics());
  Eigen::MatrixXd b(grid.count, n);
  const double w = 2.0 * kPi * env.fundamental_hz;
  for (int k = 0; k < grid.count; ++k) {
    const double t = grid.midpoint(k);
    for (Eigen::Index j = 0; j < n; ++j) b(k, j) = std::sin(static_cast<double>(j + 1) * w * t);
  }
  return b;
}

namespace detail {

/// Slice Hamiltonian components (rad/s) for a Fourier segment at a point.
struct SliceFields {
  Eigen::VectorXd hx, hy;
  double hz = 0.0;
};

inline SliceFields slice_fields(const FourierEnvelope& env, const Eigen::MatrixXd& basis,
                                const EnsemblePoint& point) {
  const Eigen::Map<const Eigen::VectorXd> ax(env.coeffs_x_hz.data(),
                                             static_cast<Eigen::Index>(env.num_harmonics()));
  const Eigen::Map<const Eigen::VectorXd> ay(env.coeffs_y_hz.data(),
                                             static_cast<Eigen::Index>(env.num_harmonics()));
  const double scale = kPi * point.amplitude_scale;
  return {scale * (basis * ax), scale * (basis * ay), kPi * point.detuning_hz};
}

inline Mat2 propagate_fourier(const FourierEnvelope& env, const EnsemblePoint& point,
                              double t_end, int n_slices) {
  const SliceGrid grid = SliceGrid::over(t_end, env.duration_s, n_slices);
  const Eigen::MatrixXd basis = sine_basis(env, grid);
  const SliceFields f = slice_fields(env, basis, point);
  Mat2 u = Mat2::Identity();
  for (int k = 0; k < grid.count; ++k) u = su2_exp(f.hx(k), f.hy(k), f.hz, grid.dt) * u;
  return u;
}

inline Mat2 propagate_segment(const Segment& seg, const EnsemblePoint& point, double t_end,
                              int n_slices) {
  if (const auto* f = std::get_if<FourierEnvelope>(&seg))
    return propagate_fourier(*f, point, t_end, n_slices);
  if (const auto* c = std::get_if<ConstantEnvelope>(&seg)) {
    const auto q = eval_envelope(*c, 0.0);
    const double s = kPi * point.amplitude_scale;
    return su2_exp(s * q.f1, s * q.f2, kPi * point.detuning_hz, t_end);
  }
  const auto& d = std::get<Delay>(seg);
  return su2_exp(0.0, 0.0, kPi * (point.detuning_hz + d.zeeman_shift_hz), t_end);
}

}  // namespace detail

/// U(t) as an ordered product of midpoint exponentials. Constant segments and
/// delays use a single exact exponential.
inline UnitaryOp propagate_timeslice(const ControlProgram& program, const EnsemblePoint& point,
                                     double t, int n_slices = kDefaultSlices) {
  if (n_slices < 1) throw DomainError("propagate_timeslice: n_slices must be >= 1");
  detail::check_time(t, program.duration(), "propagate_timeslice");
  Mat2 u = Mat2::Identity();
  double start = 0.0;
  for (const auto& seg : program.segments()) {
    if (t <= start) break;
    const double d = segment_duration(seg);
    const double local = std::min(t - start, d);
    u = detail::propagate_segment(seg, point, local, n_slices) * u;
    start += d;
  }
  return u;
}

inline UnitaryOp propagate_timeslice(const ControlProgram& program, const EnsemblePoint& point) {
  return propagate_timeslice(program, point, program.duration());
}

/// Truncated extended-space propagator for one periodic Fourier envelope.
/// Modes run over -n_modes..n_modes; state index = 2 * (n + n_modes) + spin.
class FloquetPropagator {
 public:
  FloquetPropagator(const FourierEnvelope& env, const EnsemblePoint& point,
                    int n_modes = kDefaultFloquetModes)
      : env_(env), point_(point), modes_(n_modes), omega_(2.0 * kPi * env.fundamental_hz) {
    env_.validate();
    if (n_modes < static_cast<int>(env.num_harmonics()) + 4)
      throw DomainError("FloquetPropagator: n_modes must be >= num_harmonics + 4");
    const Eigen::MatrixXcd f = matrix();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(f);
    if (solver.info() != Eigen::Success) throw NumericError("Floquet eigendecomposition failed");
    values_ = solver.eigenvalues();
    vectors_ = solver.eigenvectors();
  }

  int modes() const { return modes_; }
  Eigen::Index dim() const { return 2 * (2 * modes_ + 1); }
  Eigen::Index block(int n) const { return 2 * (n + modes_); }
  const Eigen::VectorXd& eigenvalues() const { return values_; }
  const Eigen::MatrixXcd& eigenvectors() const { return vectors_; }
  const FourierEnvelope& envelope() const { return env_; }
  const EnsemblePoint& point() const { return point_; }
  double omega() const { return omega_; }

  /// Fourier component H^(m) of the Hamiltonian, m in [-N, N].
  Mat2 component(int m) const {
    if (m == 0) return kPi * point_.detuning_hz * pauli::z();
    const auto j = static_cast<std::size_t>(std::abs(m));
    if (j > env_.num_harmonics()) return Mat2::Zero();
    const double s = kPi * point_.amplitude_scale;
    const Mat2 drive = s * (env_.coeffs_x_hz[j - 1] * pauli::x() + env_.coeffs_y_hz[j - 1] * pauli::y());
    return (m > 0 ? -0.5 : 0.5) * kI * drive;
  }

  Eigen::MatrixXcd matrix() const {
    Eigen::MatrixXcd f = Eigen::MatrixXcd::Zero(dim(), dim());
    const int nh = static_cast<int>(env_.num_harmonics());
    for (int n = -modes_; n <= modes_; ++n) {
      for (int m = std::max(-modes_, n - nh); m <= std::min(modes_, n + nh); ++m)
        f.block<2, 2>(block(n), block(m)) = component(n - m);
      f.block<2, 2>(block(n), block(n)) += n * omega_ * Mat2::Identity();
    }
    return f;
  }

  /// Projection sum_n e^{i n w t} P_n (.) applied to the 0-column block.
  Mat2 fold(const Eigen::MatrixXcd& column_block, double t) const {
    Mat2 u = Mat2::Zero();
    for (int n = -modes_; n <= modes_; ++n)
      u += std::exp(kI * (n * omega_ * t)) * column_block.block<2, 2>(block(n), 0);
    return u;
  }

  /// exp(-i F t) restricted to the columns of mode 0.
  Eigen::MatrixXcd column_zero(double t) const {
    const Eigen::VectorXcd phase = (-kI * t * values_.cast<cplx>()).array().exp();
    return vectors_ * phase.asDiagonal() * vectors_.middleRows(block(0), 2).adjoint();
  }

  UnitaryOp at(double t) const { return fold(column_zero(t), t); }

 private:
  FourierEnvelope env_;
  EnsemblePoint point_;
  int modes_;
  double omega_;
  Eigen::VectorXd values_;
  Eigen::MatrixXcd vectors_;
};

inline UnitaryOp propagate_floquet(const ControlProgram& program, const EnsemblePoint& point,
                                   double t, int n_modes = kDefaultFloquetModes) {
  if (!program.is_single_fourier())
    throw UnsupportedError("propagate_floquet: program must be a single Fourier segment");
  const auto& env = std::get<FourierEnvelope>(program.segments().front());
  detail::check_time(t, env.duration_s, "propagate_floquet");
  const FloquetPropagator prop(env, point, n_modes);
  const Mat2 u = prop.at(t);
  if (unitarity_residual(u) > 1e-6)
    throw ConvergenceError("propagate_floquet: truncation too small (unitarity residual " +
                           std::to_string(unitarity_residual(u)) + ")");
  return u;
}

/// Bloch vectors of U(t_i) * initial at n_samples equally spaced times.
inline BlochTrajectory bloch_trajectory(const ControlProgram& program, const EnsemblePoint& point,
                                        const Vec2& initial, int n_samples,
                                        int n_slices = kDefaultSlices) {
  if (n_samples < 2) throw DomainError("bloch_trajectory: n_samples must be >= 2");
  if (std::abs(initial.norm() - 1.0) > 1e-9)
    throw DomainError("bloch_trajectory: initial state not normalized");
  const double total = program.duration();
  BlochTrajectory traj;
  for (int i = 0; i < n_samples; ++i) {
    const double t = total * i / (n_samples - 1);
    traj.times.push_back(t);
    traj.vectors.push_back(bloch_vector(propagate_timeslice(program, point, t, n_slices) * initial));
  }
  return traj;
}

}  // namespace smoothctl
