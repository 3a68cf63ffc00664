#pragma once

// Emits standalone matplotlib scripts that plot the CSV outputs.

#include <filesystem>
#include <string>

#include "smoothctl/errors.hpp"
#include "smoothctl/io.hpp"

namespace smoothctl {

enum class PlotKind { trajectory, landscape, sensitivity };

inline std::string emit_plot_script(const std::filesystem::path& csv_path, PlotKind kind) {
  const std::string header = io::csv_header(csv_path);
  const std::string_view expected = kind == PlotKind::trajectory  ? io::kTrajectoryHeader
                                    : kind == PlotKind::landscape ? io::kLandscapeHeader
                                                                  : io::kSensitivityHeader;
  if (header != expected)
    throw FormatError(csv_path.string() + ": header '" + header + "' does not match '" +
                      std::string(expected) + "'");

  std::string s =
      "#!/usr/bin/env python3\n"
      "import csv\n"
      "import numpy as np\n"
      "import matplotlib\n"
      "matplotlib.use(\"Agg\")\n"
      "import matplotlib.pyplot as plt\n\n"
      "CSV = " + nlohmann::json(csv_path.string()).dump() + "\n\n"
      "with open(CSV) as fh:\n"
      "    rows = list(csv.DictReader(fh))\n\n";

  switch (kind) {
    case PlotKind::trajectory:
      s += "t = np.array([float(r[\"time_s\"]) for r in rows]) * 1e9\n"
           "sz = np.array([float(r[\"sz\"]) for r in rows])\n"
           "fig, ax = plt.subplots(figsize=(6, 3.5))\n"
           "ax.plot(t, (1 - sz) / 2)\n"
           "ax.set_xlabel(\"time (ns)\")\n"
           "ax.set_ylabel(\"population |1>\")\n"
           "ax.set_ylim(-0.02, 1.02)\n";
      break;
    case PlotKind::landscape:
      s += "det = sorted({float(r[\"detuning_hz\"]) for r in rows})\n"
           "sc = sorted({float(r[\"amplitude_scale\"]) for r in rows})\n"
           "F = np.array([float(r[\"fidelity\"]) for r in rows]).reshape(len(det), len(sc))\n"
           "fig, ax = plt.subplots(figsize=(6, 4.5))\n"
           "d = np.array(det) / 1e6\n"
           "m = ax.pcolormesh(sc, d, F, shading=\"auto\", vmin=0, vmax=1)\n"
           "if len(det) > 1 and len(sc) > 1:\n"
           "    ax.contour(sc, d, F, levels=[0.9], colors=\"w\")\n"
           "fig.colorbar(m, label=\"fidelity\")\n"
           "ax.set_xlabel(\"amplitude scale\")\n"
           "ax.set_ylabel(\"detuning (MHz)\")\n";
      break;
    case PlotKind::sensitivity:
      s += "from matplotlib.colors import LogNorm\n"
           "sets = sorted({r[\"pulse_set\"] for r in rows})\n"
           "fig, axes = plt.subplots(1, len(sets), figsize=(5 * len(sets), 4), squeeze=False)\n"
           "eta_all = [float(r[\"eta_t_per_sqrt_hz\"]) for r in rows]\n"
           "norm = LogNorm(vmin=min(eta_all), vmax=max(eta_all))\n"
           "for ax, name in zip(axes[0], sets):\n"
           "    sub = [r for r in rows if r[\"pulse_set\"] == name]\n"
           "    det = sorted({float(r[\"detuning_hz\"]) for r in sub})\n"
           "    sc = sorted({float(r[\"amplitude_scale\"]) for r in sub})\n"
           "    E = np.array([float(r[\"eta_t_per_sqrt_hz\"]) for r in sub]).reshape(len(det), len(sc))\n"
           "    m = ax.pcolormesh(sc, np.array(det) / 1e6, E, shading=\"auto\", norm=norm)\n"
           "    ax.set_title(name)\n"
           "    ax.set_xlabel(\"amplitude scale\")\n"
           "    ax.set_ylabel(\"detuning (MHz)\")\n"
           "fig.colorbar(m, ax=axes[0].tolist(), label=\"eta (T/sqrt(Hz))\")\n";
      break;
  }
  s += "fig.savefig(CSV.rsplit(\".\", 1)[0] + \".png\", dpi=150, bbox_inches=\"tight\")\n";
  return s;
}

}  // namespace smoothctl
