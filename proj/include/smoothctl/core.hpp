#pragma once

// Domain types, Hamiltonian assembly and control-program construction.
//
// Units: every frequency is an ordinary frequency in Hz, every time in
// seconds. Hamiltonians are returned in rad/s with the 2*pi folded in:
//
//   H(t) = pi * delta * Z + pi * s * (f1(t) X + f2(t) Y)
//
// so a resonant constant drive of Rabi frequency nu flips |0> -> |1> in
// exactly 1/(2 nu).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "smoothctl/errors.hpp"
#include "smoothctl/linalg.hpp"

namespace smoothctl {

enum class Channel { x = 0, y = 1 };

/// Band-limited control envelope f_k(t) = sum_j a_jk sin(2 pi j nu t).
struct FourierEnvelope {
  double fundamental_hz = 0.0;
  double duration_s = 0.0;
  std::vector<double> coeffs_x_hz;
  std::vector<double> coeffs_y_hz;

  std::size_t num_harmonics() const { return coeffs_x_hz.size(); }

  /// Envelope whose fundamental is 1/(2T), so it vanishes at both ends.
  static FourierEnvelope with_default_fundamental(double duration_s, std::vector<double> cx,
                                                  std::vector<double> cy) {
    FourierEnvelope env{0.5 / duration_s, duration_s, std::move(cx), std::move(cy)};
    env.validate();
    return env;
  }

  static FourierEnvelope zeros(std::size_t n, double duration_s) {
    return with_default_fundamental(duration_s, std::vector<double>(n, 0.0),
                                    std::vector<double>(n, 0.0));
  }

  void validate() const {
    if (coeffs_x_hz.empty()) throw DomainError("FourierEnvelope: need at least one harmonic");
    if (coeffs_x_hz.size() != coeffs_y_hz.size())
      throw DomainError("FourierEnvelope: coefficient lists differ in length");
    if (!(fundamental_hz > 0.0)) throw DomainError("FourierEnvelope: fundamental must be > 0");
    if (!(duration_s > 0.0)) throw DomainError("FourierEnvelope: duration must be > 0");
  }

  const std::vector<double>& coeffs(Channel k) const {
    return k == Channel::x ? coeffs_x_hz : coeffs_y_hz;
  }
  std::vector<double>& coeffs(Channel k) { return k == Channel::x ? coeffs_x_hz : coeffs_y_hz; }

  /// Flat coefficient vector, x channel first: index = k * N + (j - 1).
  std::vector<double> flat() const {
    std::vector<double> out(coeffs_x_hz);
    out.insert(out.end(), coeffs_y_hz.begin(), coeffs_y_hz.end());
    return out;
  }

  void set_flat(const std::vector<double>& v) {
    const std::size_t n = num_harmonics();
    if (v.size() != 2 * n) throw DomainError("FourierEnvelope: flat vector size mismatch");
    std::copy(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n), coeffs_x_hz.begin());
    std::copy(v.begin() + static_cast<std::ptrdiff_t>(n), v.end(), coeffs_y_hz.begin());
  }
};

struct ConstantEnvelope {
  double rabi_hz = 0.0;
  double phase_rad = 0.0;
  double duration_s = 0.0;
};

/// Free evolution. zeeman_shift_hz adds to the detuning for the interval.
struct Delay {
  double duration_s = 0.0;
  double zeeman_shift_hz = 0.0;
};

using Segment = std::variant<FourierEnvelope, ConstantEnvelope, Delay>;

inline double segment_duration(const Segment& seg) {
  return std::visit([](const auto& s) { return s.duration_s; }, seg);
}

struct Quadratures {
  double f1 = 0.0;
  double f2 = 0.0;
};

namespace detail {

inline void check_time(double t, double duration, const char* what) {
  const double slack = 1e-12 * std::max(duration, 1e-30);
  if (!(t >= -slack && t <= duration + slack))
    throw DomainError(std::string(what) + ": time outside [0, duration]");
}

inline Quadratures eval_unchecked(const FourierEnvelope& env, double t) {
  Quadratures q;
  const double w = 2.0 * kPi * env.fundamental_hz * t;
  for (std::size_t j = 0; j < env.num_harmonics(); ++j) {
    const double s = std::sin(static_cast<double>(j + 1) * w);
    q.f1 += env.coeffs_x_hz[j] * s;
    q.f2 += env.coeffs_y_hz[j] * s;
  }
  return q;
}

}  // namespace detail

inline Quadratures eval_envelope(const FourierEnvelope& env, double t) {
  detail::check_time(t, env.duration_s, "eval_envelope");
  return detail::eval_unchecked(env, t);
}

inline Quadratures eval_envelope(const ConstantEnvelope& env, double /*t*/) {
  return {env.rabi_hz * std::cos(env.phase_rad), env.rabi_hz * std::sin(env.phase_rad)};
}

/// Ordered sequence of control segments.
class ControlProgram {
 public:
  ControlProgram() = default;
  explicit ControlProgram(std::vector<Segment> segments) : segments_(std::move(segments)) {
    validate();
  }
  ControlProgram(FourierEnvelope env) : ControlProgram(std::vector<Segment>{std::move(env)}) {}
  ControlProgram(ConstantEnvelope env) : ControlProgram(std::vector<Segment>{env}) {}

  const std::vector<Segment>& segments() const { return segments_; }

  double duration() const {
    double total = 0.0;
    for (const auto& s : segments_) total += segment_duration(s);
    return total;
  }

  ControlProgram then(const ControlProgram& next) const {
    std::vector<Segment> all = segments_;
    all.insert(all.end(), next.segments_.begin(), next.segments_.end());
    return ControlProgram(std::move(all));
  }

  /// Segment index and local time; boundaries belong to the later segment
  /// except at the very end.
  std::pair<std::size_t, double> locate(double t) const {
    detail::check_time(t, duration(), "ControlProgram");
    double start = 0.0;
    for (std::size_t i = 0; i < segments_.size(); ++i) {
      const double d = segment_duration(segments_[i]);
      if (t < start + d || i + 1 == segments_.size())
        return {i, std::clamp(t - start, 0.0, d)};
      start += d;
    }
    return {segments_.size() - 1, 0.0};
  }

  bool is_single_fourier() const {
    return segments_.size() == 1 && std::holds_alternative<FourierEnvelope>(segments_.front());
  }

 private:
  void validate() const {
    if (segments_.empty()) throw DomainError("ControlProgram: no segments");
    for (const auto& seg : segments_) {
      if (!(segment_duration(seg) >= 0.0)) throw DomainError("ControlProgram: negative duration");
      if (const auto* f = std::get_if<FourierEnvelope>(&seg)) f->validate();
    }
  }

  std::vector<Segment> segments_;
};

struct EnsemblePoint {
  double detuning_hz = 0.0;
  double amplitude_scale = 1.0;
  double weight = 1.0;
};

enum class DetuningWeighting { uniform, gaussian };

/// Averaging domain over detuning and relative drive amplitude.
struct RobustnessWindow {
  DetuningWeighting weighting = DetuningWeighting::uniform;
  double detuning_width_hz = 0.0;  // half-width (uniform) or FWHM (gaussian)
  int detuning_points = 1;
  std::vector<double> amplitude_scales{1.0};

  /// Uniform weights over [-half_width, half_width].
  static RobustnessWindow uniform(double half_width_hz, int points, std::vector<double> scales) {
    RobustnessWindow w{DetuningWeighting::uniform, half_width_hz, points, std::move(scales)};
    w.validate();
    return w;
  }

  /// Gaussian weights over +-0.75 FWHM, sigma = FWHM / 2.355.
  static RobustnessWindow gaussian(double fwhm_hz, int points, std::vector<double> scales) {
    RobustnessWindow w{DetuningWeighting::gaussian, fwhm_hz, points, std::move(scales)};
    w.validate();
    return w;
  }

  static RobustnessWindow single(double detuning_hz = 0.0, double scale = 1.0) {
    RobustnessWindow w = uniform(0.0, 1, {scale});
    w.offset_hz = detuning_hz;
    return w;
  }

  void validate() const {
    if (detuning_points < 1) throw DomainError("RobustnessWindow: detuning_points < 1");
    if (amplitude_scales.empty()) throw DomainError("RobustnessWindow: no amplitude scales");
    if (weighting == DetuningWeighting::gaussian && !(detuning_width_hz > 0.0))
      throw DomainError("RobustnessWindow: FWHM must be > 0");
    if (detuning_width_hz < 0.0) throw DomainError("RobustnessWindow: negative width");
    for (double s : amplitude_scales)
      if (!(s > 0.0)) throw DomainError("RobustnessWindow: amplitude scale must be > 0");
  }

  std::vector<double> detunings() const {
    const double half = weighting == DetuningWeighting::gaussian ? 0.75 * detuning_width_hz
                                                                 : detuning_width_hz;
    std::vector<double> out;
    if (detuning_points == 1) return {offset_hz};
    for (int i = 0; i < detuning_points; ++i)
      out.push_back(offset_hz - half + 2.0 * half * i / (detuning_points - 1));
    return out;
  }

  /// Grid points, detuning-major, weights summing to one.
  std::vector<EnsemblePoint> points() const {
    validate();
    const auto dets = detunings();
    std::vector<double> wd(dets.size(), 1.0);
    if (weighting == DetuningWeighting::gaussian) {
      const double sigma = detuning_width_hz / 2.355;
      for (std::size_t i = 0; i < dets.size(); ++i) {
        const double x = (dets[i] - offset_hz) / sigma;
        wd[i] = std::exp(-0.5 * x * x);
      }
    }
    double total = 0.0;
    for (double w : wd) total += w * static_cast<double>(amplitude_scales.size());
    std::vector<EnsemblePoint> pts;
    pts.reserve(dets.size() * amplitude_scales.size());
    for (std::size_t i = 0; i < dets.size(); ++i)
      for (double s : amplitude_scales) pts.push_back({dets[i], s, wd[i] / total});
    return pts;
  }

  double offset_hz = 0.0;
};

struct PhysicalConstants {
  double gyromagnetic_hz_per_t = 28.0e9;
};

/// H(t) in rad/s at an ensemble point.
inline Mat2 hamiltonian_at(const ControlProgram& program, double t, const EnsemblePoint& point) {
  const auto [index, local] = program.locate(t);
  const Segment& seg = program.segments()[index];
  double delta = point.detuning_hz;
  Quadratures q;
  if (const auto* f = std::get_if<FourierEnvelope>(&seg)) {
    q = detail::eval_unchecked(*f, local);
  } else if (const auto* c = std::get_if<ConstantEnvelope>(&seg)) {
    q = eval_envelope(*c, local);
  } else {
    delta += std::get<Delay>(seg).zeeman_shift_hz;
  }
  const double s = point.amplitude_scale;
  return kPi * delta * pauli::z() + kPi * s * (q.f1 * pauli::x() + q.f2 * pauli::y());
}

enum class AmplitudeNorm {
  per_quadrature,  // max(|f1|, |f2|): the peak amplitude on either IQ channel
  euclidean,       // sqrt(f1^2 + f2^2): the instantaneous Rabi frequency
};

/// Peak drive amplitude over a uniform grid (endpoints included) per segment.
inline double max_rabi(const ControlProgram& program, int samples_per_segment = 4096,
                       AmplitudeNorm norm = AmplitudeNorm::per_quadrature) {
  if (samples_per_segment < 64) throw DomainError("max_rabi: need >= 64 samples per segment");
  auto measure = [norm](const Quadratures& q) {
    return norm == AmplitudeNorm::euclidean ? std::hypot(q.f1, q.f2)
                                            : std::max(std::abs(q.f1), std::abs(q.f2));
  };
  double peak = 0.0;
  for (const auto& seg : program.segments()) {
    if (const auto* c = std::get_if<ConstantEnvelope>(&seg)) {
      peak = std::max(peak, measure(eval_envelope(*c, 0.0)));
    } else if (const auto* f = std::get_if<FourierEnvelope>(&seg)) {
      for (int i = 0; i < samples_per_segment; ++i) {
        const double t = f->duration_s * i / (samples_per_segment - 1);
        peak = std::max(peak, measure(detail::eval_unchecked(*f, t)));
      }
    }
  }
  return peak;
}

/// Rectangular rotation by `angle` about the in-plane axis at `phase`.
inline ConstantEnvelope make_hard_pulse(double rabi_hz, double angle_rad, double phase_rad = 0.0) {
  if (!(rabi_hz > 0.0)) throw DomainError("make_hard_pulse: rabi must be > 0");
  if (angle_rad < 0.0) {
    angle_rad = -angle_rad;
    phase_rad += kPi;
  }
  return {rabi_hz, phase_rad, angle_rad / (2.0 * kPi * rabi_hz)};
}

/// (pi/2)_y - pi_x - (pi/2)_y composite inversion at constant Rabi frequency.
inline ControlProgram make_composite_pi(double rabi_hz) {
  if (!(rabi_hz > 0.0)) throw DomainError("make_composite_pi: rabi must be > 0");
  return ControlProgram(std::vector<Segment>{make_hard_pulse(rabi_hz, kPi / 2, kPi / 2),
                                             make_hard_pulse(rabi_hz, kPi, 0.0),
                                             make_hard_pulse(rabi_hz, kPi / 2, kPi / 2)});
}

/// Rotates the drive phase: (f1 + i f2) -> e^{i phi} (f1 + i f2).
inline FourierEnvelope phase_shifted(FourierEnvelope env, double phi) {
  const double c = std::cos(phi), s = std::sin(phi);
  for (std::size_t j = 0; j < env.num_harmonics(); ++j) {
    const double x = env.coeffs_x_hz[j], y = env.coeffs_y_hz[j];
    env.coeffs_x_hz[j] = c * x - s * y;
    env.coeffs_y_hz[j] = s * x + c * y;
  }
  return env;
}

}  // namespace smoothctl
