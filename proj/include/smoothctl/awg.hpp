#pragma once

// Two-channel I/Q sample export for an arbitrary waveform generator.

#include <cmath>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "smoothctl/core.hpp"
#include "smoothctl/errors.hpp"

namespace smoothctl {

struct AwgExportConfig {
  double sample_rate = 200e6;  // Hz
  int bit_depth = 14;
  double full_scale = 0.0;  // Hz mapped to the largest code; <= 0 selects the peak

  void validate() const {
    if (!(sample_rate > 0.0)) throw DomainError("AwgExportConfig: sample_rate must be > 0");
    if (bit_depth < 8 || bit_depth > 16) throw DomainError("AwgExportConfig: bit_depth outside [8, 16]");
  }
};

struct AwgTable {
  std::vector<std::int16_t> i_code;
  std::vector<std::int16_t> q_code;
  double full_scale = 0.0;
  double dt = 0.0;

  std::size_t size() const { return i_code.size(); }
};

/// Drive quadratures of the program at global time t (zero during delays).
inline Quadratures quadratures_at(const ControlProgram& program, double t) {
  const auto [index, local] = program.locate(t);
  const Segment& seg = program.segments()[index];
  if (const auto* f = std::get_if<FourierEnvelope>(&seg)) return detail::eval_unchecked(*f, local);
  if (const auto* c = std::get_if<ConstantEnvelope>(&seg)) return eval_envelope(*c, local);
  return {};
}

/// round(duration * rate) samples at t_i = i T / (n - 1), both ends included.
inline std::vector<double> awg_times(const ControlProgram& program, double sample_rate) {
  const double total = program.duration();
  const auto n = static_cast<long>(std::llround(total * sample_rate));
  if (n < 2) throw DomainError("export_awg: fewer than 2 samples");
  std::vector<double> t(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) t[static_cast<std::size_t>(i)] = total * static_cast<double>(i) / static_cast<double>(n - 1);
  return t;
}

/// code = round(f / full_scale * (2^(bits-1) - 1)) per channel.
inline AwgTable export_awg(const ControlProgram& program, const AwgExportConfig& cfg) {
  cfg.validate();
  const auto times = awg_times(program, cfg.sample_rate);
  std::vector<Quadratures> q;
  q.reserve(times.size());
  double peak = 0.0;
  for (double t : times) {
    q.push_back(quadratures_at(program, t));
    peak = std::max({peak, std::abs(q.back().f1), std::abs(q.back().f2)});
  }
  AwgTable table;
  table.full_scale = cfg.full_scale > 0.0 ? cfg.full_scale : peak;
  table.dt = times.size() > 1 ? times[1] - times[0] : 0.0;
  const double top = std::ldexp(1.0, cfg.bit_depth - 1) - 1.0;
  // overshoot below half a code still rounds to the top code
  const double limit = table.full_scale * (1.0 + 0.5 / top);
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (std::abs(q[i].f1) > limit || std::abs(q[i].f2) > limit)
      throw ClippingError("export_awg: sample " + std::to_string(i) + " exceeds full scale", i);
    auto code = [&](double f) {
      if (table.full_scale == 0.0) return std::int16_t{0};
      const double c = std::clamp(std::round(f / table.full_scale * top), -top, top);
      return static_cast<std::int16_t>(c);
    };
    table.i_code.push_back(code(q[i].f1));
    table.q_code.push_back(code(q[i].f2));
  }
  return table;
}

inline std::string awg_csv(const AwgTable& t) {
  std::string out = "index,i_code,q_code\n";
  for (std::size_t i = 0; i < t.size(); ++i)
    out += std::to_string(i) + "," + std::to_string(t.i_code[i]) + "," + std::to_string(t.q_code[i]) + "\n";
  return out;
}

/// Little-endian int16, interleaved I, Q.
inline std::string awg_raw(const AwgTable& t) {
  std::string out;
  out.reserve(4 * t.size());
  auto put = [&out](std::int16_t v) {
    const auto u = static_cast<std::uint16_t>(v);
    out.push_back(static_cast<char>(u & 0xff));
    out.push_back(static_cast<char>(u >> 8));
  };
  for (std::size_t i = 0; i < t.size(); ++i) {
    put(t.i_code[i]);
    put(t.q_code[i]);
  }
  return out;
}

}  // namespace smoothctl
