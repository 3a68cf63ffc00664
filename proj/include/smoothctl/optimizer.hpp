#pragma once

// Gradient-ascent pulse synthesis with an adaptive power penalty.
//
// Each iteration takes one steepest-ascent step on F + F_p at the current
// penalty weight p (Armijo backtracking), then moves p down by dp, or up by
// dp while the envelope exceeds the amplitude limit. Coefficients are stepped
// in MHz so that step sizes are O(1e-2). The returned envelope is the best
// iterate with max Rabi <= a_max.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "smoothctl/core.hpp"
#include "smoothctl/errors.hpp"
#include "smoothctl/objectives.hpp"

namespace smoothctl {

struct OptimizerConfig {
  double p_initial = 1e-2 / 1e12;  // 1/Hz^2
  double p_step = 1e-4 / 1e12;     // 1/Hz^2
  double a_max = 10e6;             // Hz
  int max_iters = 5000;
  double conv_tol = 1e-7;
  int conv_window = 20;
  std::uint64_t seed = 0;
  double initial_step = 1e-2;
  double armijo_c = 1e-4;
  double shrink = 0.5;
  int max_backtracks = 40;
  int n_slices = 500;
  int rabi_samples = 4096;
  AmplitudeNorm norm = AmplitudeNorm::per_quadrature;

  void validate() const {
    if (!(p_initial >= 0.0)) throw DomainError("OptimizerConfig: p_initial must be >= 0");
    if (!(p_step > 0.0)) throw DomainError("OptimizerConfig: p_step must be > 0");
    if (!(a_max > 0.0)) throw DomainError("OptimizerConfig: a_max must be > 0");
    if (max_iters < 1) throw DomainError("OptimizerConfig: max_iters must be >= 1");
    if (!(conv_tol > 0.0)) throw DomainError("OptimizerConfig: conv_tol must be > 0");
    if (!(initial_step > 0.0) || !(shrink > 0.0 && shrink < 1.0))
      throw DomainError("OptimizerConfig: bad line-search parameters");
  }
};

struct TraceRecord {
  int iter = 0;
  double objective = 0.0;  // ensemble functional without penalty
  double p = 0.0;          // weight used for this iteration's step
  double max_rabi_hz = 0.0;
  double grad_norm = 0.0;  // augmented gradient, per MHz
};

using OptimizationTrace = std::vector<TraceRecord>;

/// Loop state carried between optimize() and resume().
struct OptimizerState {
  std::vector<double> current;  // coefficients in Hz, flat
  double p = 0.0;
  double step = 0.0;
  double last_objective = std::numeric_limits<double>::quiet_NaN();
  int stall = 0;
  double conv_tol = 0.0;  // tolerance the stall count refers to
  int iterations = 0;
  bool has_feasible = false;
  std::vector<double> best;
  double best_objective = -std::numeric_limits<double>::infinity();
};

struct OptimizedPulse {
  FourierEnvelope envelope;
  double final_objective = 0.0;
  OptimizationTrace trace;
  bool converged = false;
  TargetSpec target;
  RobustnessWindow window;
  OptimizerState state;
};

/// uniform double in [0, 1) from the top 53 bits
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

namespace detail {

class AmplitudeProbe {
 public:
  AmplitudeProbe(const FourierEnvelope& layout, int samples, AmplitudeNorm norm) : norm_(norm) {
    const auto n = static_cast<Eigen::Index>(layout.num_harmonics());
    basis_.resize(samples, n);
    const double w = 2.0 * kPi * layout.fundamental_hz;
    for (int i = 0; i < samples; ++i) {
      const double t = layout.duration_s * i / (samples - 1);
      for (Eigen::Index j = 0; j < n; ++j) basis_(i, j) = std::sin(static_cast<double>(j + 1) * w * t);
    }
  }

  double operator()(const FourierEnvelope& env) const {
    const auto n = static_cast<Eigen::Index>(env.num_harmonics());
    const Eigen::VectorXd f1 = basis_ * Eigen::Map<const Eigen::VectorXd>(env.coeffs_x_hz.data(), n);
    const Eigen::VectorXd f2 = basis_ * Eigen::Map<const Eigen::VectorXd>(env.coeffs_y_hz.data(), n);
    if (norm_ == AmplitudeNorm::euclidean)
      return (f1.array().square() + f2.array().square()).sqrt().maxCoeff();
    return std::max(f1.cwiseAbs().maxCoeff(), f2.cwiseAbs().maxCoeff());
  }

 private:
  Eigen::MatrixXd basis_;
  AmplitudeNorm norm_;
};

inline FourierEnvelope with_coeffs(FourierEnvelope env, const std::vector<double>& flat) {
  env.set_flat(flat);
  return env;
}

inline double squared_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

inline void run_loop(OptimizedPulse& out, const OptimizerConfig& cfg, int budget) {
  cfg.validate();
  const FourierEnvelope layout = out.envelope;
  const EnsembleEvaluator eval(layout, out.window, out.target, cfg.n_slices);
  const AmplitudeProbe probe(layout, cfg.rabi_samples, cfg.norm);
  constexpr double kUnit = 1e6;  // coefficient unit used for steps
  OptimizerState& st = out.state;
  if (st.conv_tol != cfg.conv_tol) st.stall = 0;
  st.conv_tol = cfg.conv_tol;

  auto converged = [&] { return st.stall >= cfg.conv_window && st.has_feasible; };

  for (int it = 0; it < budget && !converged(); ++it) {
    FourierEnvelope x = with_coeffs(layout, st.current);
    const ObjectiveValue here = eval.evaluate(x, st.p);
    std::vector<double> g(here.gradient.size());
    for (std::size_t c = 0; c < g.size(); ++c) g[c] = here.gradient[c] * kUnit;
    const double g2 = squared_norm(g);

    // Armijo backtracking in MHz units; a failed search keeps x
    double alpha = st.step;
    bool accepted = false;
    double augmented = here.value;
    std::vector<double> trial(st.current.size());
    for (int bt = 0; bt <= cfg.max_backtracks && g2 > 0.0; ++bt) {
      for (std::size_t c = 0; c < trial.size(); ++c) trial[c] = st.current[c] + alpha * kUnit * g[c];
      const double v = eval.value(with_coeffs(layout, trial), st.p);
      if (v >= here.value + cfg.armijo_c * alpha * g2) {
        accepted = true;
        augmented = v;
        break;
      }
      alpha *= cfg.shrink;
    }
    if (accepted) {
      st.current = trial;
      st.step = 2.0 * alpha;
    } else {
      st.step = cfg.initial_step;
    }

    x = with_coeffs(layout, st.current);
    const double objective = augmented + st.p * squared_norm(st.current);
    const double rabi = probe(x);
    out.trace.push_back({st.iterations, objective, st.p, rabi, std::sqrt(g2)});

    const bool feasible = rabi <= cfg.a_max;
    if (feasible && objective > st.best_objective) {
      st.best = st.current;
      st.best_objective = objective;
      st.has_feasible = true;
    }
    const bool small = std::isfinite(st.last_objective) &&
                       std::abs(objective - st.last_objective) < cfg.conv_tol;
    st.stall = (small && feasible) ? st.stall + 1 : 0;
    st.last_objective = objective;

    st.p = rabi > cfg.a_max ? st.p + cfg.p_step : std::max(0.0, st.p - cfg.p_step);
    ++st.iterations;
  }

  out.converged = converged();
  const auto& chosen = st.has_feasible ? st.best : st.current;
  out.envelope = with_coeffs(layout, chosen);
  out.final_objective = st.has_feasible ? st.best_objective : eval.value(out.envelope, 0.0);
}

}  // namespace detail

/// Gradient ascent from seeded coefficients uniform in [-1, 1] MHz.
inline OptimizedPulse optimize(const TargetSpec& target, const RobustnessWindow& window,
                               int num_harmonics, double duration_s, const OptimizerConfig& config) {
  config.validate();
  if (num_harmonics < 1) throw DomainError("optimize: num_harmonics must be >= 1");
  if (!(duration_s > 0.0)) throw DomainError("optimize: duration must be > 0");
  std::mt19937_64 rng(config.seed);
  std::vector<double> start(2 * static_cast<std::size_t>(num_harmonics));
  for (double& a : start) a = (2.0 * unit_uniform(rng) - 1.0) * 1e6;

  FourierEnvelope env = FourierEnvelope::zeros(static_cast<std::size_t>(num_harmonics), duration_s);
  env.set_flat(start);
  OptimizedPulse out{env, 0.0, {}, false, target, window, {}};
  out.state.current = start;
  out.state.p = config.p_initial;
  out.state.step = config.initial_step;
  detail::run_loop(out, config, config.max_iters);
  return out;
}

/// Continues iterating from the stored state for up to config.max_iters more
/// iterations.
inline OptimizedPulse resume(const OptimizedPulse& pulse, const OptimizerConfig& config) {
  if (pulse.state.current.size() != 2 * pulse.envelope.num_harmonics())
    throw DomainError("resume: harmonic count mismatch");
  OptimizedPulse out = pulse;
  detail::run_loop(out, config, config.max_iters);
  return out;
}

/// Starts from a given envelope instead of random coefficients.
inline OptimizedPulse optimize_from(const FourierEnvelope& start, const TargetSpec& target,
                                    const RobustnessWindow& window, const OptimizerConfig& config) {
  config.validate();
  start.validate();
  OptimizedPulse out{start, 0.0, {}, false, target, window, {}};
  out.state.current = start.flat();
  out.state.p = config.p_initial;
  out.state.step = config.initial_step;
  detail::run_loop(out, config, config.max_iters);
  return out;
}

}  // namespace smoothctl
