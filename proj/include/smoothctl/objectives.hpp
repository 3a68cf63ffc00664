#pragma once

// Target functionals, power penalty, ensemble averaging and fidelity maps.

#include <cmath>
#include <variant>
#include <vector>

#include "smoothctl/core.hpp"
#include "smoothctl/errors.hpp"
#include "smoothctl/gradients.hpp"
#include "smoothctl/linalg.hpp"
#include "smoothctl/parallel.hpp"
#include "smoothctl/propagation.hpp"

namespace smoothctl {

struct StateTransfer {
  Vec2 initial;
  Vec2 final;
};

struct Gate {
  Mat2 target;
};

class TargetSpec {
 public:
  TargetSpec(StateTransfer s) : v_(std::move(s)) {
    check_state(std::get<StateTransfer>(v_).initial);
    check_state(std::get<StateTransfer>(v_).final);
  }
  TargetSpec(Gate g) : v_(std::move(g)) {
    if (unitarity_residual(std::get<Gate>(v_).target) > 1e-9)
      throw DomainError("TargetSpec: gate target is not unitary");
  }

  /// |0> -> |1>
  static TargetSpec flip() { return StateTransfer{ket::zero(), ket::one()}; }

  bool is_gate() const { return std::holds_alternative<Gate>(v_); }
  const StateTransfer& state() const { return std::get<StateTransfer>(v_); }
  const Gate& gate() const { return std::get<Gate>(v_); }

 private:
  static void check_state(const Vec2& v) {
    if (std::abs(v.norm() - 1.0) > 1e-9) throw DomainError("TargetSpec: state not normalized");
  }
  std::variant<StateTransfer, Gate> v_;
};

struct ObjectiveValue {
  double value = 0.0;
  std::vector<double> gradient;  // x channel then y channel, j = 1..N
};

inline double state_fidelity(const Mat2& u, const Vec2& psi_i, const Vec2& psi_f) {
  if (std::abs(psi_i.norm() - 1.0) > 1e-9 || std::abs(psi_f.norm() - 1.0) > 1e-9)
    throw DomainError("state_fidelity: state not normalized");
  return std::clamp(std::norm(psi_f.dot(u * psi_i)), 0.0, 1.0);
}

/// (1/2) Re tr(U U_f^dagger); phase-sensitive.
inline double gate_overlap(const Mat2& u, const Mat2& u_f) {
  if (unitarity_residual(u) > 1e-8 || unitarity_residual(u_f) > 1e-8)
    throw DomainError("gate_overlap: operand not unitary");
  return std::clamp(0.5 * (u * u_f.adjoint()).trace().real(), -1.0, 1.0);
}

/// |(1/2) tr(U_f^dagger U)|^2, the phase-insensitive gate fidelity in [0, 1].
inline double gate_fidelity(const Mat2& u, const Mat2& u_f) {
  return std::clamp(std::norm(0.5 * (u_f.adjoint() * u).trace()), 0.0, 1.0);
}

/// -p sum a_jk^2 with p in 1/Hz^2.
inline ObjectiveValue penalty(const FourierEnvelope& env, double p) {
  if (p < 0.0) throw DomainError("penalty: p must be >= 0");
  ObjectiveValue out;
  for (double a : env.flat()) {
    out.value -= p * a * a;
    out.gradient.push_back(-2.0 * p * a);
  }
  return out;
}

/// Value of the optimization functional at one point.
inline double target_functional(const Mat2& u, const TargetSpec& target) {
  if (target.is_gate()) return gate_overlap(u, target.gate().target);
  return state_fidelity(u, target.state().initial, target.state().final);
}

/// Contraction matrix Gamma with dF = Re tr(dU Gamma) at U.
inline Mat2 target_cotangent(const Mat2& u, const TargetSpec& target) {
  if (target.is_gate()) return 0.5 * target.gate().target.adjoint();
  const auto& st = target.state();
  const cplx amp = st.final.dot(u * st.initial);
  return 2.0 * std::conj(amp) * st.initial * st.final.adjoint();
}

/// Fidelity reported in landscapes: state fidelity, or the phase-insensitive
/// gate fidelity for gate targets.
inline double landscape_fidelity(const Mat2& u, const TargetSpec& target) {
  if (target.is_gate()) return gate_fidelity(u, target.gate().target);
  return state_fidelity(u, target.state().initial, target.state().final);
}

/// Reusable evaluator for one envelope layout and one ensemble.
class EnsembleEvaluator {
 public:
  EnsembleEvaluator(const FourierEnvelope& layout, const RobustnessWindow& window,
                    TargetSpec target, int n_slices = kDefaultSlices)
      : points_(window.points()),
        target_(std::move(target)),
        grid_(SliceGrid::over(layout.duration_s, layout.duration_s, n_slices)),
        basis_(sine_basis(layout, grid_)),
        n_(layout.num_harmonics()),
        duration_(layout.duration_s),
        fundamental_(layout.fundamental_hz) {
    if (points_.empty()) throw DomainError("ensemble_objective: empty window");
  }

  const std::vector<EnsemblePoint>& points() const { return points_; }

  /// Weighted functional plus penalty, with gradient.
  ObjectiveValue evaluate(const FourierEnvelope& env, double p) const {
    check(env);
    auto per_point = parallel_map(points_.size(), [&](std::size_t i) {
      const SlicedEvolution evo(env, points_[i], grid_, basis_);
      ObjectiveValue v;
      v.value = target_functional(evo.unitary(), target_);
      v.gradient = evo.contract(target_cotangent(evo.unitary(), target_));
      return v;
    });
    ObjectiveValue total = penalty(env, p);
    for (std::size_t i = 0; i < points_.size(); ++i) {
      const double w = points_[i].weight;
      total.value += w * per_point[i].value;
      for (std::size_t c = 0; c < total.gradient.size(); ++c)
        total.gradient[c] += w * per_point[i].gradient[c];
    }
    if (!std::isfinite(total.value)) throw NumericError("ensemble objective is not finite");
    return total;
  }

  /// Weighted functional plus penalty, forward pass only.
  double value(const FourierEnvelope& env, double p) const {
    check(env);
    auto per_point = parallel_map(points_.size(), [&](std::size_t i) {
      const auto f = detail::slice_fields(env, basis_, points_[i]);
      Mat2 u = Mat2::Identity();
      for (int k = 0; k < grid_.count; ++k) u = su2_exp(f.hx(k), f.hy(k), f.hz, grid_.dt) * u;
      return target_functional(u, target_);
    });
    double total = penalty(env, p).value;
    for (std::size_t i = 0; i < points_.size(); ++i) total += points_[i].weight * per_point[i];
    if (!std::isfinite(total)) throw NumericError("ensemble objective is not finite");
    return total;
  }

 private:
  void check(const FourierEnvelope& env) const {
    if (env.num_harmonics() != n_ || env.duration_s != duration_ || env.fundamental_hz != fundamental_)
      throw DomainError("EnsembleEvaluator: envelope layout changed");
  }

  std::vector<EnsemblePoint> points_;
  TargetSpec target_;
  SliceGrid grid_;
  Eigen::MatrixXd basis_;
  std::size_t n_;
  double duration_;
  double fundamental_;
};

/// sum_i w_i F(point_i) + F_p with the analytic gradient.
inline ObjectiveValue ensemble_objective(const FourierEnvelope& env, const RobustnessWindow& window,
                                         const TargetSpec& target, double p,
                                         int n_slices = kDefaultSlices) {
  return EnsembleEvaluator(env, window, target, n_slices).evaluate(env, p);
}

/// Weighted average of the pointwise functional for an arbitrary program.
inline double ensemble_average(const ControlProgram& program, const RobustnessWindow& window,
                               const TargetSpec& target, int n_slices = kDefaultSlices) {
  const auto pts = window.points();
  auto vals = parallel_map(pts.size(), [&](std::size_t i) {
    return target_functional(propagate_timeslice(program, pts[i], program.duration(), n_slices), target);
  });
  double total = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) total += pts[i].weight * vals[i];
  return total;
}

struct FidelityLandscape {
  std::vector<double> detunings;
  std::vector<double> scales;
  Eigen::MatrixXd fidelities;  // rows: detunings, columns: scales

  double at(std::size_t i, std::size_t j) const {
    return fidelities(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
};

inline FidelityLandscape landscape(const ControlProgram& program, const TargetSpec& target,
                                   const std::vector<double>& detunings,
                                   const std::vector<double>& scales,
                                   int n_slices = kDefaultSlices) {
  if (detunings.empty() || scales.empty()) throw DomainError("landscape: empty grid");
  const std::size_t ns = scales.size();
  auto vals = parallel_map(detunings.size() * ns, [&](std::size_t idx) {
    const EnsemblePoint pt{detunings[idx / ns], scales[idx % ns], 1.0};
    return landscape_fidelity(propagate_timeslice(program, pt, program.duration(), n_slices), target);
  });
  FidelityLandscape out{detunings, scales,
                        Eigen::MatrixXd(static_cast<Eigen::Index>(detunings.size()),
                                        static_cast<Eigen::Index>(ns))};
  for (std::size_t idx = 0; idx < vals.size(); ++idx)
    out.fidelities(static_cast<Eigen::Index>(idx / ns), static_cast<Eigen::Index>(idx % ns)) = vals[idx];
  return out;
}

/// Number of cells with 1 - F below `threshold`.
inline int count_below_infidelity(const FidelityLandscape& l, double threshold) {
  return static_cast<int>((1.0 - l.fidelities.array() < threshold).count());
}

}  // namespace smoothctl
