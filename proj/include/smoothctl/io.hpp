#pragma once

// File formats: pulse and chi JSON, CSV tables, atomic writes, and parsing of
// quantities with unit suffixes.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <unistd.h>
#include <utility>
#include <vector>

#include <json.hpp>

#include "smoothctl/core.hpp"
#include "smoothctl/errors.hpp"
#include "smoothctl/magnetometry.hpp"
#include "smoothctl/objectives.hpp"
#include "smoothctl/optimizer.hpp"
#include "smoothctl/propagation.hpp"
#include "smoothctl/qpt.hpp"

namespace smoothctl::io {

using json = nlohmann::json;

/// Shortest decimal string that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes via a temporary file in the same directory and a rename.
inline void write_atomic(const std::filesystem::path& path, std::string_view content) {
  const auto dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  auto tmp = dir / ("." + path.filename().string() + ".tmp." + std::to_string(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw FormatError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw FormatError("cannot rename onto " + path.string() + ": " + ec.message());
  }
}

// ---------------------------------------------------------------- pulses

struct NamedPulse {
  std::string name;
  FourierEnvelope envelope;
};

inline std::string pulse_to_json(const std::string& name, const FourierEnvelope& env) {
  json j;
  j["name"] = name;
  j["duration_s"] = env.duration_s;
  j["fundamental_hz"] = env.fundamental_hz;
  j["coeffs_x_hz"] = env.coeffs_x_hz;
  j["coeffs_y_hz"] = env.coeffs_y_hz;
  return j.dump(2) + "\n";
}

inline NamedPulse pulse_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
    NamedPulse p;
    p.name = j.at("name").get<std::string>();
    p.envelope.duration_s = j.at("duration_s").get<double>();
    p.envelope.fundamental_hz = j.at("fundamental_hz").get<double>();
    p.envelope.coeffs_x_hz = j.at("coeffs_x_hz").get<std::vector<double>>();
    p.envelope.coeffs_y_hz = j.at("coeffs_y_hz").get<std::vector<double>>();
    p.envelope.validate();
    return p;
  } catch (const json::exception& e) {
    throw FormatError(std::string("pulse JSON: ") + e.what());
  } catch (const DomainError& e) {
    throw FormatError(std::string("pulse JSON: ") + e.what());
  }
}

inline NamedPulse load_pulse(const std::filesystem::path& path) { return pulse_from_json(read_file(path)); }

inline void save_pulse(const std::filesystem::path& path, const std::string& name, const FourierEnvelope& env) {
  write_atomic(path, pulse_to_json(name, env));
}

// ---------------------------------------------------------------- chi

inline std::string chi_to_json(const ChiMatrix& chi) {
  json j;
  j["basis"] = {"I", "X", "-iY", "Z"};
  json re = json::array(), im = json::array();
  for (int r = 0; r < 4; ++r) {
    json rr = json::array(), ir = json::array();
    for (int c = 0; c < 4; ++c) {
      rr.push_back(chi(r, c).real());
      ir.push_back(chi(r, c).imag());
    }
    re.push_back(rr);
    im.push_back(ir);
  }
  j["re"] = re;
  j["im"] = im;
  return j.dump(2) + "\n";
}

inline ChiMatrix chi_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    const auto basis = j.at("basis").get<std::vector<std::string>>();
    if (basis != std::vector<std::string>{"I", "X", "-iY", "Z"})
      throw FormatError("chi JSON: unsupported basis");
    ChiMatrix chi;
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c)
        chi(r, c) = cplx(j.at("re").at(r).at(c).get<double>(), j.at("im").at(r).at(c).get<double>());
    return chi;
  } catch (const json::exception& e) {
    throw FormatError(std::string("chi JSON: ") + e.what());
  }
}

inline ChiMatrix load_chi(const std::filesystem::path& path) { return chi_from_json(read_file(path)); }

inline std::string physicality_to_json(const PhysicalityReport& rep) {
  json j;
  j["d_trace"] = rep.d_trace;
  j["frobenius"] = rep.frobenius;
  j["constraint_residual"] = rep.constraint_residual;
  j["chi_physical"] = json::parse(chi_to_json(rep.chi_physical));
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------- CSV

inline constexpr std::string_view kTrajectoryHeader = "time_s,sx,sy,sz";
inline constexpr std::string_view kLandscapeHeader = "detuning_hz,amplitude_scale,fidelity";
inline constexpr std::string_view kTraceHeader = "iter,objective,p,max_rabi_hz,grad_norm";
inline constexpr std::string_view kSensitivityHeader =
    "detuning_hz,amplitude_scale,eta_t_per_sqrt_hz,pulse_set";
inline constexpr std::string_view kAwgHeader = "index,i_code,q_code";

inline std::string trajectory_csv(const BlochTrajectory& t) {
  std::string out(kTrajectoryHeader);
  out += "\n";
  for (std::size_t i = 0; i < t.times.size(); ++i) {
    const auto& v = t.vectors[i];
    out += format_double(t.times[i]) + "," + format_double(v(0)) + "," + format_double(v(1)) + "," +
           format_double(v(2)) + "\n";
  }
  return out;
}

inline std::string landscape_csv(const FidelityLandscape& l) {
  std::string out(kLandscapeHeader);
  out += "\n";
  for (std::size_t i = 0; i < l.detunings.size(); ++i)
    for (std::size_t j = 0; j < l.scales.size(); ++j)
      out += format_double(l.detunings[i]) + "," + format_double(l.scales[j]) + "," +
             format_double(l.at(i, j)) + "\n";
  return out;
}

/// p is written in 1/Hz^2.
inline std::string trace_csv(const OptimizationTrace& trace) {
  std::string out(kTraceHeader);
  out += "\n";
  for (const auto& r : trace)
    out += std::to_string(r.iter) + "," + format_double(r.objective) + "," + format_double(r.p) + "," +
           format_double(r.max_rabi_hz) + "," + format_double(r.grad_norm) + "\n";
  return out;
}

inline void append_sensitivity_rows(std::string& out, const SensitivityGrid& g, const std::string& set) {
  for (std::size_t i = 0; i < g.detunings.size(); ++i)
    for (std::size_t j = 0; j < g.scales.size(); ++j)
      out += format_double(g.detunings[i]) + "," + format_double(g.scales[j]) + "," +
             format_double(g.eta(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) + "," + set + "\n";
}

inline std::string sensitivity_csv(const SensitivityLandscape& l) {
  std::string out(kSensitivityHeader);
  out += "\n";
  append_sensitivity_rows(out, l.rect, "rect");
  append_sensitivity_rows(out, l.smooth, "smooth");
  return out;
}

/// First line of a CSV file, without the line terminator.
inline std::string csv_header(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

/// Parses rows of a numeric CSV after checking its header.
inline std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path,
                                                         std::string_view header) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != header) throw FormatError(path.string() + ": expected header '" + std::string(header) + "'");
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
        throw FormatError(path.string() + ": bad number '" + cell + "'");
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------- quantities

enum class Dimension { frequency, time, field, dimensionless };

/// Parses "10MHz", "500ns", "1.2us", "2mT", "-4e6". A bare number is taken in
/// SI base units.
inline double parse_quantity(std::string_view text, Dimension dim) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc()) throw DomainError("bad number: '" + std::string(text) + "'");
  const std::string_view unit(res.ptr, static_cast<std::size_t>(text.data() + text.size() - res.ptr));
  if (unit.empty()) return value;
  struct Unit {
    std::string_view name;
    Dimension dim;
    double factor;
  };
  static constexpr Unit kUnits[] = {
      {"Hz", Dimension::frequency, 1.0},  {"kHz", Dimension::frequency, 1e3},
      {"MHz", Dimension::frequency, 1e6}, {"GHz", Dimension::frequency, 1e9},
      {"s", Dimension::time, 1.0},        {"ms", Dimension::time, 1e-3},
      {"us", Dimension::time, 1e-6},      {"ns", Dimension::time, 1e-9},
      {"T", Dimension::field, 1.0},       {"mT", Dimension::field, 1e-3},
      {"uT", Dimension::field, 1e-6},     {"nT", Dimension::field, 1e-9},
  };
  for (const auto& u : kUnits)
    if (u.name == unit) {
      if (u.dim != dim) throw DomainError("unit '" + std::string(unit) + "' has the wrong dimension");
      return value * u.factor;
    }
  throw DomainError("unknown unit '" + std::string(unit) + "'");
}

/// "a:b:n" -> n points from a to b inclusive; a single quantity -> {a}.
inline std::vector<double> parse_range(std::string_view text, Dimension dim) {
  const auto c1 = text.find(':');
  if (c1 == std::string_view::npos) return {parse_quantity(text, dim)};
  const auto c2 = text.find(':', c1 + 1);
  if (c2 == std::string_view::npos || text.find(':', c2 + 1) != std::string_view::npos)
    throw DomainError("range must be a:b:n");
  const double a = parse_quantity(text.substr(0, c1), dim);
  const double b = parse_quantity(text.substr(c1 + 1, c2 - c1 - 1), dim);
  const auto count_text = text.substr(c2 + 1);
  int n = 0;
  const auto res = std::from_chars(count_text.data(), count_text.data() + count_text.size(), n);
  if (res.ec != std::errc() || res.ptr != count_text.data() + count_text.size() || n < 1)
    throw DomainError("range count must be a positive integer");
  if (n == 1) return {a};
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(a + (b - a) * i / (n - 1));
  return out;
}

/// Comma-separated list of quantities or ranges.
inline std::vector<double> parse_list(std::string_view text, Dimension dim) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto piece = text.substr(start, comma == std::string_view::npos ? text.npos : comma - start);
    const auto vals = parse_range(piece, dim);
    out.insert(out.end(), vals.begin(), vals.end());
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

// ---------------------------------------------------------------- sensor model

inline SensorModel sensor_model_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    SensorModel m;
    m.contrast_c0 = j.value("contrast_c0", m.contrast_c0);
    m.t2 = j.value("t2_s", m.t2);
    m.stretch_n = j.value("stretch_n", m.stretch_n);
    m.counts_cps = j.value("counts_cps", m.counts_cps);
    m.t_acq = j.value("t_acq_s", m.t_acq);
    m.t_prep = j.value("t_prep_s", m.t_prep);
    m.gyromagnetic = j.value("gyromagnetic_hz_per_t", m.gyromagnetic);
    m.validate();
    return m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("sensor model JSON: ") + e.what());
  }
}

}  // namespace smoothctl::io
