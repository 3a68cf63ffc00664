#pragma once

// Reference pulses and measured process matrices shipped with the library.
//
// The pulse tables are stored as printed, in table units. rabi_hz_per_table_unit
// converts them to sine amplitudes in Hz: the pi row is tabulated in units of
// twice the Rabi frequency, the other two rows in units of the Rabi frequency.
// With that reading max_rabi reproduces the published peak amplitudes.

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "smoothctl/core.hpp"
#include "smoothctl/errors.hpp"
#include "smoothctl/linalg.hpp"

namespace smoothctl::builtin {

struct PulseTable {
  std::string_view name;
  double duration_s;
  double rabi_hz_per_table_unit;
  double published_max_rabi_hz;
  std::array<double, 10> x;
  std::array<double, 10> y;
};

inline constexpr PulseTable kPi{
    "pi", 500e-9, 2e6, 9.49e6,
    {-1.177, 1.646, -0.549, -1.668, -0.627, 0.151, 1.680, -0.024, 0.858, 1.311},
    {-0.150, -0.355, 0.253, 1.165, 0.069, 0.470, -0.649, -0.814, 0.643, -0.657}};

inline constexpr PulseTable kPi2Y{
    "pi2_y", 250e-9, 1e6, 18.8e6,
    {1.248, -0.573, -4.553, -0.530, -8.790, 0.677, -1.413, 0.736, -4.158, 2.075},
    {6.454, -0.904, -6.097, -0.376, 4.378, -2.946, -7.539, -1.205, -10.375, 1.931}};

inline constexpr PulseTable kPiX{
    "pi_x", 250e-9, 1e6, 19.4e6,
    {6.498, -0.916, -5.901, 0.169, 2.727, 0.929, -6.137, -0.009, -10.532, -3.960},
    {0.572, 0.483, -3.400, -0.147, -9.616, -0.126, -0.361, -1.531, -0.649, 1.035}};

inline constexpr std::array<const PulseTable*, 3> kTables{&kPi, &kPi2Y, &kPiX};

inline const PulseTable& table(std::string_view name) {
  for (const auto* t : kTables)
    if (t->name == name) return *t;
  throw DomainError("unknown built-in pulse: " + std::string(name));
}

inline std::vector<std::string> names() {
  std::vector<std::string> out;
  for (const auto* t : kTables) out.emplace_back(t->name);
  return out;
}

inline FourierEnvelope envelope(const PulseTable& t) {
  std::vector<double> cx, cy;
  for (std::size_t j = 0; j < t.x.size(); ++j) {
    cx.push_back(t.x[j] * t.rabi_hz_per_table_unit);
    cy.push_back(t.y[j] * t.rabi_hz_per_table_unit);
  }
  return FourierEnvelope::with_default_fundamental(t.duration_s, std::move(cx), std::move(cy));
}

inline FourierEnvelope envelope(std::string_view name) { return envelope(table(name)); }

inline FourierEnvelope pi() { return envelope(kPi); }
inline FourierEnvelope pi2_y() { return envelope(kPi2Y); }
inline FourierEnvelope pi_x() { return envelope(kPiX); }

// Measured process matrices in the basis {I, X, -iY, Z}: (a) nominal,
// (b) 8 MHz detuning, (c) 87.5 % drive amplitude.
using ChiEntries = std::array<std::array<cplx, 4>, 4>;

namespace chi_entries {

inline const ChiEntries& a() {
  static const ChiEntries m{{
      {cplx(0.001, 0.000), cplx(0.001, 0.089), cplx(-0.011, -0.005), cplx(0.002, -0.010)},
      {cplx(0.001, -0.089), cplx(0.991, 0.000), cplx(-0.002, -0.003), cplx(-0.022, 0.005)},
      {cplx(-0.011, 0.005), cplx(-0.002, 0.003), cplx(-0.012, 0.000), cplx(0.001, -0.002)},
      {cplx(0.002, 0.010), cplx(-0.022, -0.005), cplx(0.001, 0.002), cplx(0.020, 0.000)},
  }};
  return m;
}

inline const ChiEntries& b() {
  static const ChiEntries m{{
      {cplx(0.005, 0.000), cplx(-0.050, 0.009), cplx(0.014, 0.040), cplx(-0.034, 0.013)},
      {cplx(-0.050, -0.009), cplx(0.928, 0.000), cplx(0.034, -0.083), cplx(0.237, -0.040)},
      {cplx(0.014, -0.040), cplx(0.034, 0.083), cplx(0.017, 0.000), cplx(-0.050, 0.024)},
      {cplx(-0.034, -0.013), cplx(0.237, 0.040), cplx(-0.050, -0.024), cplx(0.050, 0.000)},
  }};
  return m;
}

inline const ChiEntries& c() {
  static const ChiEntries m{{
      {cplx(0.104, 0.000), cplx(-0.006, 0.268), cplx(0.017, 0.012), cplx(-0.000, 0.004)},
      {cplx(-0.006, -0.268), cplx(0.924, 0.000), cplx(0.000, -0.015), cplx(-0.020, -0.012)},
      {cplx(0.017, -0.012), cplx(0.000, 0.015), cplx(0.005, 0.000), cplx(-0.006, 0.010)},
      {cplx(-0.000, -0.004), cplx(-0.020, 0.012), cplx(-0.006, -0.010), cplx(-0.033, 0.000)},
  }};
  return m;
}

}  // namespace chi_entries

inline Mat4 to_matrix(const ChiEntries& e) {
  Mat4 m;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) m(r, c) = e[r][c];
  return m;
}

}  // namespace smoothctl::builtin
