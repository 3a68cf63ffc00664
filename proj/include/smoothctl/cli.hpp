#pragma once

// Command-line front end. cli_dispatch runs in-process so tests can drive it.
//
//   smoothctl pulse builtin|simulate|landscape|optimize|export-awg ...
//   smoothctl qpt run|physicality ...
//   smoothctl mag sweep ...
//
// Exit codes: 0 success, 2 argument or input error, 3 numeric or convergence
// failure.

#include <CLI11.hpp>

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "smoothctl/awg.hpp"
#include "smoothctl/builtin.hpp"
#include "smoothctl/core.hpp"
#include "smoothctl/errors.hpp"
#include "smoothctl/io.hpp"
#include "smoothctl/magnetometry.hpp"
#include "smoothctl/manifest.hpp"
#include "smoothctl/objectives.hpp"
#include "smoothctl/optimizer.hpp"
#include "smoothctl/plot.hpp"
#include "smoothctl/propagation.hpp"
#include "smoothctl/qpt.hpp"

namespace smoothctl {

namespace cli_detail {

namespace fs = std::filesystem;
using io::Dimension;

/// Rotation exp(-i angle/2 n.sigma) for a named gate.
inline Mat2 named_gate(const std::string& name) {
  auto rot = [](double angle, double phase) {
    const double h = 0.5 * angle;
    return su2_exp(h * std::cos(phase), h * std::sin(phase), 0.0, 1.0);
  };
  if (name == "id") return Mat2::Identity();
  if (name == "x") return rot(kPi, 0.0);
  if (name == "y") return rot(kPi, kPi / 2);
  if (name == "x90") return rot(kPi / 2, 0.0);
  if (name == "y90") return rot(kPi / 2, kPi / 2);
  throw DomainError("unknown gate '" + name + "' (id, x, y, x90, y90)");
}

inline TargetSpec named_target(const std::string& name) {
  if (name == "flip") return TargetSpec::flip();
  return Gate{named_gate(name)};
}

/// Where a control program comes from.
struct ProgramSource {
  std::string pulse_file;
  std::string builtin_name;
  std::string hard;       // Rabi frequency of a rectangular pi_x pulse
  std::string composite;  // Rabi frequency of the composite pi sequence

  void add_to(CLI::App* app) {
    auto* a = app->add_option("--pulse", pulse_file, "pulse JSON file");
    auto* b = app->add_option("--builtin", builtin_name, "built-in pulse name (pi, pi2_y, pi_x)");
    auto* c = app->add_option("--hard", hard, "rectangular pi_x pulse at this Rabi frequency");
    auto* d = app->add_option("--composite", composite, "composite pi pulse at this Rabi frequency");
    a->excludes(b)->excludes(c)->excludes(d);
    b->excludes(c)->excludes(d);
    c->excludes(d);
  }

  ControlProgram load(std::vector<fs::path>& inputs) const {
    if (!pulse_file.empty()) {
      inputs.emplace_back(pulse_file);
      return ControlProgram(io::load_pulse(pulse_file).envelope);
    }
    if (!builtin_name.empty()) return ControlProgram(builtin::envelope(builtin_name));
    if (!hard.empty()) return ControlProgram(make_hard_pulse(io::parse_quantity(hard, Dimension::frequency), kPi));
    if (!composite.empty()) return make_composite_pi(io::parse_quantity(composite, Dimension::frequency));
    throw DomainError("one of --pulse, --builtin, --hard, --composite is required");
  }
};

struct Context {
  std::vector<std::string> args;
  std::ostream& out;
  std::ostream& err;
};

inline void finish(const Context& ctx, const std::string& command, std::optional<std::uint64_t> seed,
                   const std::vector<fs::path>& inputs, const std::vector<fs::path>& outputs) {
  RunManifest m{command, ctx.args, seed, inputs, outputs};
  m.write();
}

}  // namespace cli_detail

/// Runs one command. args excludes the program name.
inline int cli_dispatch(const std::vector<std::string>& args, std::ostream& out = std::cout,
                        std::ostream& err = std::cerr) {
  using namespace cli_detail;
  Context ctx{args, out, err};

  CLI::App app{"smooth band-limited pulse design and verification", "smoothctl"};
  app.require_subcommand(1);
  auto* pulse = app.add_subcommand("pulse", "pulse design and simulation")->require_subcommand(1);
  auto* qpt_cmd = app.add_subcommand("qpt", "simulated process tomography")->require_subcommand(1);
  auto* mag = app.add_subcommand("mag", "spin-echo magnetometry")->require_subcommand(1);

  // pulse builtin
  std::string b_name, b_out;
  bool b_list = false;
  auto* p_builtin = pulse->add_subcommand("builtin", "write a built-in pulse as JSON");
  p_builtin->add_option("--name", b_name, "pi, pi2_y or pi_x");
  p_builtin->add_option("--out", b_out, "output JSON");
  p_builtin->add_flag("--list", b_list, "list built-in names");

  // pulse simulate
  ProgramSource s_src;
  std::string s_det = "0", s_scale = "1", s_out, s_initial = "0", s_plot, s_target = "flip";
  int s_samples = 201, s_slices = kDefaultSlices;
  auto* p_sim = pulse->add_subcommand("simulate", "Bloch trajectory and final fidelity");
  s_src.add_to(p_sim);
  p_sim->add_option("--det", s_det, "detuning");
  p_sim->add_option("--scale", s_scale, "amplitude scale");
  p_sim->add_option("--initial", s_initial, "initial state: 0, 1, +, +i")->check(CLI::IsMember({"0", "1", "+", "+i"}));
  p_sim->add_option("--target", s_target, "flip or a gate (id, x, y, x90, y90)");
  p_sim->add_option("--samples", s_samples, "trajectory samples")->check(CLI::Range(2, 1000000));
  p_sim->add_option("--slices", s_slices, "slices per segment")->check(CLI::PositiveNumber);
  p_sim->add_option("--out", s_out, "trajectory CSV")->required();
  p_sim->add_option("--plot", s_plot, "also write a plot script");

  // pulse landscape
  ProgramSource l_src;
  std::string l_target = "flip", l_det, l_scale, l_out, l_plot;
  int l_slices = kDefaultSlices;
  auto* p_land = pulse->add_subcommand("landscape", "fidelity over detuning x amplitude scale");
  l_src.add_to(p_land);
  p_land->add_option("--target", l_target, "flip or a gate (id, x, y, x90, y90)");
  p_land->add_option("--det", l_det, "detunings a:b:n")->required();
  p_land->add_option("--scale", l_scale, "amplitude scales a:b:n")->required();
  p_land->add_option("--slices", l_slices, "slices per segment")->check(CLI::PositiveNumber);
  p_land->add_option("--out", l_out, "landscape CSV")->required();
  p_land->add_option("--plot", l_plot, "also write a plot script");

  // pulse optimize
  std::string o_target = "flip", o_duration = "500ns", o_amax = "10MHz", o_fwhm = "8MHz", o_halfwidth,
              o_scales = "0.75,0.875,1,1.125,1.25", o_out, o_trace, o_name = "optimized", o_resume;
  int o_harmonics = 10, o_det_points = 9, o_max_iters = 5000, o_slices = 500;
  std::uint64_t o_seed = 0;
  double o_p_initial = 1e-2, o_p_step = 1e-4, o_conv_tol = 1e-7;
  auto* p_opt = pulse->add_subcommand("optimize", "gradient-ascent pulse synthesis");
  p_opt->add_option("--target", o_target, "flip or a gate (id, x, y, x90, y90)");
  p_opt->add_option("--harmonics", o_harmonics, "number of harmonics")->check(CLI::PositiveNumber);
  p_opt->add_option("--duration", o_duration, "pulse duration");
  p_opt->add_option("--amax", o_amax, "amplitude limit ('inf' disables)");
  p_opt->add_option("--fwhm", o_fwhm, "Gaussian detuning FWHM");
  p_opt->add_option("--halfwidth", o_halfwidth, "uniform detuning half-width (instead of --fwhm)");
  p_opt->add_option("--det-points", o_det_points, "detuning points")->check(CLI::PositiveNumber);
  p_opt->add_option("--scales", o_scales, "amplitude scales (list or a:b:n)");
  p_opt->add_option("--seed", o_seed, "random seed");
  p_opt->add_option("--max-iters", o_max_iters, "iteration budget")->check(CLI::PositiveNumber);
  p_opt->add_option("--p-initial", o_p_initial, "initial penalty weight (1/MHz^2)");
  p_opt->add_option("--p-step", o_p_step, "penalty step (1/MHz^2)");
  p_opt->add_option("--conv-tol", o_conv_tol, "convergence tolerance");
  p_opt->add_option("--slices", o_slices, "slices per evaluation")->check(CLI::PositiveNumber);
  p_opt->add_option("--resume", o_resume, "start from this pulse JSON instead of random coefficients");
  p_opt->add_option("--name", o_name, "name stored in the pulse JSON");
  p_opt->add_option("--out", o_out, "output pulse JSON")->required();
  p_opt->add_option("--trace", o_trace, "trace CSV");

  // pulse export-awg
  ProgramSource a_src;
  std::string a_rate = "200MHz", a_full_scale, a_out;
  int a_bits = 14;
  bool a_raw = false;
  auto* p_awg = pulse->add_subcommand("export-awg", "I/Q sample table");
  a_src.add_to(p_awg);
  p_awg->add_option("--rate", a_rate, "sample rate");
  p_awg->add_option("--bits", a_bits, "bit depth")->check(CLI::Range(8, 16));
  p_awg->add_option("--full-scale", a_full_scale, "Rabi frequency at full scale (default: peak)");
  p_awg->add_flag("--raw", a_raw, "little-endian int16 interleaved I/Q instead of CSV");
  p_awg->add_option("--out", a_out, "output file")->required();

  // qpt run
  ProgramSource q_src;
  std::string q_det = "0", q_scale = "1", q_ideal = "x", q_prep = "ideal", q_prep_rabi = "20MHz", q_out;
  std::int64_t q_shots = 0;
  std::uint64_t q_seed = 0;
  auto* q_run = qpt_cmd->add_subcommand("run", "tomography, chi and process fidelity");
  q_src.add_to(q_run);
  q_run->add_option("--det", q_det, "detuning");
  q_run->add_option("--scale", q_scale, "amplitude scale");
  q_run->add_option("--ideal", q_ideal, "ideal gate (id, x, y, x90, y90)");
  q_run->add_option("--shots", q_shots, "shots per projection (0: exact)")->check(CLI::NonNegativeNumber);
  q_run->add_option("--seed", q_seed, "random seed");
  q_run->add_option("--prep", q_prep, "preparation/readout: ideal or rect")->check(CLI::IsMember({"ideal", "rect"}));
  q_run->add_option("--prep-rabi", q_prep_rabi, "Rabi frequency of rectangular prep/readout");
  q_run->add_option("--out", q_out, "chi JSON")->required();

  // qpt physicality
  std::string ph_chi, ph_out = "physicality.json";
  int ph_starts = 8;
  std::uint64_t ph_seed = 0;
  auto* q_phys = qpt_cmd->add_subcommand("physicality", "project chi onto physical processes");
  q_phys->add_option("--chi", ph_chi, "chi JSON")->required();
  q_phys->add_option("--starts", ph_starts, "multi-start count")->check(CLI::PositiveNumber);
  q_phys->add_option("--seed", ph_seed, "random seed");
  q_phys->add_option("--out", ph_out, "report JSON");

  // mag sweep
  std::string m_det = "-4MHz:4MHz:9", m_scale = "0.75:1.25:5", m_tau = "1.2us", m_config, m_rect_rabi = "20MHz",
              m_out, m_plot, m_linewidth = "0";
  auto* m_sweep = mag->add_subcommand("sweep", "sensitivity over detuning x amplitude scale");
  m_sweep->add_option("--det", m_det, "detunings a:b:n");
  m_sweep->add_option("--scale", m_scale, "amplitude scales a:b:n");
  m_sweep->add_option("--tau", m_tau, "free precession time");
  m_sweep->add_option("--config", m_config, "sensor model JSON");
  m_sweep->add_option("--rect-rabi", m_rect_rabi, "Rabi frequency of the rectangular sequence");
  m_sweep->add_option("--linewidth", m_linewidth, "Gaussian linewidth FWHM to average over (0: off)");
  m_sweep->add_option("--out", m_out, "sensitivity CSV")->required();
  m_sweep->add_option("--plot", m_plot, "also write a plot script");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  std::vector<fs::path> inputs, outputs;
  try {
    if (p_builtin->parsed()) {
      if (b_list) {
        for (const auto& n : builtin::names()) out << n << "\n";
        return 0;
      }
      if (b_name.empty() || b_out.empty()) throw DomainError("pulse builtin needs --name and --out");
      io::save_pulse(b_out, b_name, builtin::envelope(b_name));
      outputs.emplace_back(b_out);
      finish(ctx, "pulse builtin", std::nullopt, inputs, outputs);
      out << "wrote " << b_out << "\n";
    } else if (p_sim->parsed()) {
      const ControlProgram prog = s_src.load(inputs);
      const EnsemblePoint pt{io::parse_quantity(s_det, Dimension::frequency), std::stod(s_scale), 1.0};
      const Vec2 init = s_initial == "0" ? ket::zero()
                        : s_initial == "1" ? ket::one()
                        : s_initial == "+" ? ket::plus()
                                           : ket::plus_i();
      const auto traj = bloch_trajectory(prog, pt, init, s_samples, s_slices);
      io::write_atomic(s_out, io::trajectory_csv(traj));
      outputs.emplace_back(s_out);
      if (!s_plot.empty()) {
        io::write_atomic(s_plot, emit_plot_script(s_out, PlotKind::trajectory));
        outputs.emplace_back(s_plot);
      }
      const Mat2 u = propagate_timeslice(prog, pt, prog.duration(), s_slices);
      finish(ctx, "pulse simulate", std::nullopt, inputs, outputs);
      out << std::setprecision(8) << "fidelity " << landscape_fidelity(u, named_target(s_target)) << "\n"
          << "max_rabi_hz " << max_rabi(prog) << "\n";
    } else if (p_land->parsed()) {
      const ControlProgram prog = l_src.load(inputs);
      const auto land = landscape(prog, named_target(l_target), io::parse_range(l_det, Dimension::frequency),
                                  io::parse_range(l_scale, Dimension::dimensionless), l_slices);
      io::write_atomic(l_out, io::landscape_csv(land));
      outputs.emplace_back(l_out);
      if (!l_plot.empty()) {
        io::write_atomic(l_plot, emit_plot_script(l_out, PlotKind::landscape));
        outputs.emplace_back(l_plot);
      }
      finish(ctx, "pulse landscape", std::nullopt, inputs, outputs);
      out << "cells " << land.fidelities.size() << " min " << land.fidelities.minCoeff() << " max "
          << land.fidelities.maxCoeff() << "\n";
    } else if (p_opt->parsed()) {
      OptimizerConfig cfg;
      cfg.p_initial = o_p_initial * 1e-12;
      cfg.p_step = o_p_step * 1e-12;
      cfg.a_max = o_amax == "inf" ? std::numeric_limits<double>::infinity()
                                  : io::parse_quantity(o_amax, Dimension::frequency);
      cfg.max_iters = o_max_iters;
      cfg.conv_tol = o_conv_tol;
      cfg.seed = o_seed;
      cfg.n_slices = o_slices;
      const auto scales = io::parse_list(o_scales, Dimension::dimensionless);
      const RobustnessWindow window =
          o_halfwidth.empty()
              ? RobustnessWindow::gaussian(io::parse_quantity(o_fwhm, Dimension::frequency), o_det_points, scales)
              : RobustnessWindow::uniform(io::parse_quantity(o_halfwidth, Dimension::frequency), o_det_points,
                                          scales);
      const TargetSpec target = named_target(o_target);
      OptimizedPulse res = [&] {
        if (!o_resume.empty()) {
          inputs.emplace_back(o_resume);
          return optimize_from(io::load_pulse(o_resume).envelope, target, window, cfg);
        }
        return optimize(target, window, o_harmonics, io::parse_quantity(o_duration, Dimension::time), cfg);
      }();
      io::save_pulse(o_out, o_name, res.envelope);
      outputs.emplace_back(o_out);
      if (!o_trace.empty()) {
        io::write_atomic(o_trace, io::trace_csv(res.trace));
        outputs.emplace_back(o_trace);
      }
      finish(ctx, "pulse optimize", o_seed, inputs, outputs);
      out << std::setprecision(8) << "objective " << res.final_objective << "\n"
          << "max_rabi_hz " << max_rabi(ControlProgram(res.envelope)) << "\n"
          << "iterations " << res.trace.size() << "\n"
          << "converged " << (res.converged ? "true" : "false") << "\n";
      if (!res.converged) {
        err << "optimizer did not converge within " << o_max_iters << " iterations\n";
        return 3;
      }
    } else if (p_awg->parsed()) {
      const ControlProgram prog = a_src.load(inputs);
      AwgExportConfig cfg;
      cfg.sample_rate = io::parse_quantity(a_rate, Dimension::frequency);
      cfg.bit_depth = a_bits;
      if (!a_full_scale.empty()) cfg.full_scale = io::parse_quantity(a_full_scale, Dimension::frequency);
      const AwgTable table = export_awg(prog, cfg);
      io::write_atomic(a_out, a_raw ? awg_raw(table) : awg_csv(table));
      outputs.emplace_back(a_out);
      finish(ctx, "pulse export-awg", std::nullopt, inputs, outputs);
      out << "samples " << table.size() << " full_scale_hz " << table.full_scale << "\n";
    } else if (q_run->parsed()) {
      const ControlProgram prog = q_src.load(inputs);
      const EnsemblePoint pt{io::parse_quantity(q_det, Dimension::frequency), std::stod(q_scale), 1.0};
      TomographyConfig cfg;
      if (q_shots > 0) cfg.shots = q_shots;
      cfg.seed = q_seed;
      if (q_prep == "rect") {
        cfg.prep_readout = PrepReadout::rectangular;
        cfg.prep_rabi_hz = io::parse_quantity(q_prep_rabi, Dimension::frequency);
        cfg.prep_point = pt;
      }
      const ChiMatrix chi = reconstruct_chi(simulate_tomography(prog, pt, cfg));
      io::write_atomic(q_out, io::chi_to_json(chi));
      outputs.emplace_back(q_out);
      finish(ctx, "qpt run", q_shots > 0 ? std::optional<std::uint64_t>(q_seed) : std::nullopt, inputs, outputs);
      bool clamped = false;
      const double f = process_fidelity(chi, named_gate(q_ideal), &clamped);
      out << std::setprecision(6) << "process_fidelity " << f << (clamped ? " (clamped)" : "") << "\n";
    } else if (q_phys->parsed()) {
      inputs.emplace_back(ph_chi);
      const ChiMatrix chi = io::load_chi(ph_chi);
      ProjectionConfig cfg;
      cfg.starts = ph_starts;
      cfg.seed = ph_seed;
      const PhysicalityReport rep = project_physical(chi, cfg);
      io::write_atomic(ph_out, io::physicality_to_json(rep));
      outputs.emplace_back(ph_out);
      finish(ctx, "qpt physicality", ph_seed, inputs, outputs);
      out << std::setprecision(6) << "d_trace " << rep.d_trace << "\n"
          << "frobenius " << rep.frobenius << "\n"
          << "constraint_residual " << rep.constraint_residual << "\n";
    } else if (m_sweep->parsed()) {
      SensorModel model;
      if (!m_config.empty()) {
        inputs.emplace_back(m_config);
        model = io::sensor_model_from_json(io::read_file(m_config));
      }
      const double tau = io::parse_quantity(m_tau, Dimension::time);
      const LinewidthAverage lw{io::parse_quantity(m_linewidth, Dimension::frequency), 7};
      const auto land = sensitivity_landscape(
          rectangular_echo(io::parse_quantity(m_rect_rabi, Dimension::frequency), tau), smooth_echo(tau),
          io::parse_range(m_det, Dimension::frequency), io::parse_range(m_scale, Dimension::dimensionless),
          model, lw);
      io::write_atomic(m_out, io::sensitivity_csv(land));
      outputs.emplace_back(m_out);
      if (!m_plot.empty()) {
        io::write_atomic(m_plot, emit_plot_script(m_out, PlotKind::sensitivity));
        outputs.emplace_back(m_plot);
      }
      finish(ctx, "mag sweep", std::nullopt, inputs, outputs);
      out << std::setprecision(6) << "rect eta max/min " << land.rect.eta.maxCoeff() / land.rect.eta.minCoeff()
          << "\nsmooth eta max/min " << land.smooth.eta.maxCoeff() / land.smooth.eta.minCoeff() << "\n";
    }
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const ConvergenceError& e) {
    err << "convergence error: " << e.what() << "\n";
    return 3;
  } catch (const ClippingError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::out_of_range& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace smoothctl
