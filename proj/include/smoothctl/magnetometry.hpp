#pragma once

// Spin-echo AC magnetometry with imperfect pulses and a photon shot-noise
// sensitivity model.
//
// The field is a square wave synchronized with the echo: +B0 during the first
// free-precession window and -B0 during the second, so the accumulated phase
// is 2 pi gamma B0 (2 tau).

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "smoothctl/builtin.hpp"
#include "smoothctl/core.hpp"
#include "smoothctl/errors.hpp"
#include "smoothctl/linalg.hpp"
#include "smoothctl/parallel.hpp"
#include "smoothctl/propagation.hpp"

namespace smoothctl {

struct EchoSequence {
  ControlProgram pulse_a;  // first pi/2
  ControlProgram pulse_b;  // refocusing pi
  ControlProgram pulse_c;  // final pi/2
  double tau = 0.0;

  void validate() const {
    if (!(tau > 0.0)) throw DomainError("EchoSequence: tau must be > 0");
  }
};

struct SensorModel {
  double contrast_c0 = 0.3;
  double t2 = 2.2e-6;
  double stretch_n = 1.0;
  double counts_cps = 1e5;
  double t_acq = 200e-9;
  double t_prep = 3e-6;
  double gyromagnetic = PhysicalConstants{}.gyromagnetic_hz_per_t;

  void validate() const {
    if (!(contrast_c0 > 0.0 && contrast_c0 <= 1.0)) throw DomainError("SensorModel: c0 must be in (0, 1]");
    if (!(t2 > 0.0) || !(counts_cps > 0.0) || !(t_acq > 0.0) || !(t_prep > 0.0) || !(gyromagnetic > 0.0))
      throw DomainError("SensorModel: parameters must be positive");
    if (!(stretch_n >= 0.5 && stretch_n <= 2.0)) throw DomainError("SensorModel: stretch_n outside [0.5, 2]");
  }

  /// C(tau) = c0 exp(-(2 tau / (2 t2))^n)
  double contrast(double tau) const { return contrast_c0 * std::exp(-std::pow(tau / t2, stretch_n)); }
};

struct SensitivityReport {
  double slope_b_star = 0.0;  // |dS/dB| in 1/T
  double b_star = 0.0;        // T
  double noise = 0.0;         // photons per second, sqrt(N_tot)
  double eta = 0.0;           // T/sqrt(Hz)
  double n_tot_per_second = 0.0;
  bool infinite = false;  // zero slope at b_star
};

/// (pi/2)_y - tau - pi_y - tau - (pi/2)_y with rectangular pulses.
inline EchoSequence rectangular_echo(double rabi_hz, double tau) {
  const ControlProgram half(make_hard_pulse(rabi_hz, kPi / 2, kPi / 2));
  const ControlProgram full(make_hard_pulse(rabi_hz, kPi, kPi / 2));
  return {half, full, half, tau};
}

/// Echo built from the shaped (pi/2)_y pulse; the pi_y is two of them back to back.
inline EchoSequence smooth_echo(double tau) {
  const ControlProgram half(builtin::pi2_y());
  return {half, half.then(half), half, tau};
}

/// Echo signal evaluator with the pulse propagators computed once.
class EchoModel {
 public:
  EchoModel(const EchoSequence& seq, const EnsemblePoint& point, const SensorModel& model,
            int n_slices = kDefaultSlices)
      : a_(propagate_timeslice(seq.pulse_a, point, seq.pulse_a.duration(), n_slices)),
        b_(propagate_timeslice(seq.pulse_b, point, seq.pulse_b.duration(), n_slices)),
        c_(propagate_timeslice(seq.pulse_c, point, seq.pulse_c.duration(), n_slices)),
        tau_(seq.tau),
        detuning_(point.detuning_hz),
        model_(model) {
    seq.validate();
    model.validate();
  }

  /// P(|0>) after the sequence at field b0.
  double population(double b0) const {
    const double shift = model_.gyromagnetic * b0;
    const Mat2 up = su2_exp(0.0, 0.0, kPi * (detuning_ + shift), tau_);
    const Mat2 down = su2_exp(0.0, 0.0, kPi * (detuning_ - shift), tau_);
    const Mat2 u = c_ * down * b_ * up * a_;
    return std::norm(u(0, 0));
  }

  double signal(double b0) const { return 0.5 + model_.contrast(tau_) * (population(b0) - 0.5); }

  /// dS/dB by central difference on a step of 1e-5 fringe periods.
  double slope(double b0) const {
    const double h = 1e-5 * fringe_period();
    return (signal(b0 + h) - signal(b0 - h)) / (2.0 * h);
  }

  /// Field period of the ideal fringe, 1 / (gamma 2 tau).
  double fringe_period() const { return 1.0 / (model_.gyromagnetic * 2.0 * tau_); }

 private:
  Mat2 a_, b_, c_;
  double tau_;
  double detuning_;
  SensorModel model_;
};

inline double echo_signal(const EchoSequence& seq, const EnsemblePoint& point, double b0,
                          const SensorModel& model) {
  return EchoModel(seq, point, model).signal(b0);
}

/// Field of steepest |dS/dB| on the nominal (delta = 0, s = 1) curve within one
/// fringe period: grid search, then golden-section refinement.
inline double steepest_field(const EchoSequence& seq, const SensorModel& model, int grid = 400) {
  const EchoModel nominal(seq, EnsemblePoint{0.0, 1.0, 1.0}, model);
  const double period = nominal.fringe_period();
  auto score = [&](double b) { return std::abs(nominal.slope(b)); };
  int best = 0;
  double best_score = -1.0;
  for (int i = 0; i < grid; ++i) {
    const double s = score(period * i / grid);
    if (s > best_score) {
      best_score = s;
      best = i;
    }
  }
  double lo = period * (best - 1) / grid, hi = period * (best + 1) / grid;
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - r * (hi - lo), x2 = lo + r * (hi - lo);
  double f1 = score(x1), f2 = score(x2);
  for (int it = 0; it < 80; ++it) {
    if (f1 > f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - r * (hi - lo);
      f1 = score(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + r * (hi - lo);
      f2 = score(x2);
    }
  }
  const double refined = 0.5 * (lo + hi);
  return score(refined) >= best_score ? refined : period * best / grid;
}

/// Optional inhomogeneous-linewidth average of the signal: Gaussian over
/// +-0.75 FWHM around each detuning.
struct LinewidthAverage {
  double fwhm_hz = 0.0;  // 0 disables
  int points = 7;
};

namespace detail {

inline double averaged_slope(const EchoSequence& seq, const EnsemblePoint& point, double b0,
                             const SensorModel& model, const LinewidthAverage& lw) {
  if (!(lw.fwhm_hz > 0.0)) return EchoModel(seq, point, model).slope(b0);
  RobustnessWindow w = RobustnessWindow::gaussian(lw.fwhm_hz, lw.points, {point.amplitude_scale});
  w.offset_hz = point.detuning_hz;
  double total = 0.0;
  for (const auto& pt : w.points()) total += pt.weight * EchoModel(seq, pt, model).slope(b0);
  return total;
}

}  // namespace detail

/// eta = sqrt(2 tau + t_prep) / (|dS/dB| sqrt(N_cps t_acq)), from SNR = 1 with
/// shot noise sqrt(N_tot) on N_tot = N_cps t_acq / (2 tau + t_prep) photons per
/// second.
inline SensitivityReport sensitivity(const EchoSequence& seq, const EnsemblePoint& point,
                                     const SensorModel& model, std::optional<double> b_star = {},
                                     const LinewidthAverage& lw = {}) {
  seq.validate();
  model.validate();
  SensitivityReport rep;
  rep.b_star = b_star ? *b_star : steepest_field(seq, model);
  rep.slope_b_star = std::abs(detail::averaged_slope(seq, point, rep.b_star, model, lw));
  rep.n_tot_per_second = model.counts_cps * model.t_acq / (2.0 * seq.tau + model.t_prep);
  rep.noise = std::sqrt(rep.n_tot_per_second);
  if (rep.slope_b_star == 0.0) {
    rep.infinite = true;
    rep.eta = std::numeric_limits<double>::infinity();
  } else {
    rep.eta = 1.0 / (rep.slope_b_star * rep.noise);
  }
  return rep;
}

struct SensitivityGrid {
  std::vector<double> detunings;
  std::vector<double> scales;
  Eigen::MatrixXd eta;  // rows: detunings, columns: scales
  double b_star = 0.0;
};

inline SensitivityGrid sensitivity_grid(const EchoSequence& seq, const std::vector<double>& detunings,
                                        const std::vector<double>& scales, const SensorModel& model,
                                        const LinewidthAverage& lw = {}) {
  if (detunings.empty() || scales.empty()) throw DomainError("sensitivity_grid: empty grid");
  const double b_star = steepest_field(seq, model);
  const std::size_t ns = scales.size();
  auto vals = parallel_map(detunings.size() * ns, [&](std::size_t idx) {
    const EnsemblePoint pt{detunings[idx / ns], scales[idx % ns], 1.0};
    return sensitivity(seq, pt, model, b_star, lw).eta;
  });
  SensitivityGrid g{detunings, scales,
                    Eigen::MatrixXd(static_cast<Eigen::Index>(detunings.size()), static_cast<Eigen::Index>(ns)),
                    b_star};
  for (std::size_t idx = 0; idx < vals.size(); ++idx)
    g.eta(static_cast<Eigen::Index>(idx / ns), static_cast<Eigen::Index>(idx % ns)) = vals[idx];
  return g;
}

struct SensitivityLandscape {
  SensitivityGrid rect;
  SensitivityGrid smooth;
};

/// Pointwise sensitivity of both sequences, each with b_star fixed from its
/// own nominal curve.
inline SensitivityLandscape sensitivity_landscape(const EchoSequence& seq_rect,
                                                  const EchoSequence& seq_smooth,
                                                  const std::vector<double>& detunings,
                                                  const std::vector<double>& scales,
                                                  const SensorModel& model,
                                                  const LinewidthAverage& lw = {}) {
  return {sensitivity_grid(seq_rect, detunings, scales, model, lw),
          sensitivity_grid(seq_smooth, detunings, scales, model, lw)};
}

}  // namespace smoothctl
