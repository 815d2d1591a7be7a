#include "layersafe/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>
#include <unistd.h>

#include "layersafe/errors.hpp"

namespace layersafe {

namespace {

void append_cols(std::string& out, const char* name, int n) {
  for (int i = 1; i <= n; ++i) {
    out += ',';
    out += name;
    out += std::to_string(i);
  }
}

void append_vec(std::string& out, const Vec& v) {
  for (int i = 0; i < v.size(); ++i) {
    out += ',';
    out += format_g17(v[i]);
  }
}

}  // namespace

std::string format_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::runtime_error("cannot rename into '" + path.string() + "': " + ec.message());
  }
}

std::string provenance_header(const Scenario& s) {
  std::string out = "# layersafe scenario " + s.digest() + "\n";
  std::istringstream in(s.resolved_text());
  std::string line;
  while (std::getline(in, line)) out += "# " + line + "\n";
  return out;
}

std::string trajectory_csv(const Trajectory& traj, std::string_view header) {
  std::string out(header);
  const Sample& s0 = traj.front();
  out += 't';
  append_cols(out, "x", static_cast<int>(s0.x.size()));
  append_cols(out, "z", static_cast<int>(s0.z.size()));
  append_cols(out, "zdot", static_cast<int>(s0.z_dot.size()));
  append_cols(out, "zsdot", static_cast<int>(s0.z_s_dot.size()));
  append_cols(out, "e", static_cast<int>(s0.e.size()));
  append_cols(out, "edot", static_cast<int>(s0.e_dot.size()));
  append_cols(out, "u", static_cast<int>(s0.u.size()));
  out += ",h,V,hV\n";
  out.reserve(out.size() + traj.size() * 20 * 24);
  for (const auto& s : traj.samples()) {
    out += format_g17(s.t);
    append_vec(out, s.x);
    append_vec(out, s.z);
    append_vec(out, s.z_dot);
    append_vec(out, s.z_s_dot);
    append_vec(out, s.e);
    append_vec(out, s.e_dot);
    append_vec(out, s.u);
    out += ',' + format_g17(s.h) + ',' + format_g17(s.V) + ',' + format_g17(s.h_V) + '\n';
  }
  return out;
}

std::string certificate_text(const CertificateReport& r) {
  std::ostringstream out;
  out << "# layersafe certificate\n";
  out << "scenario " << r.scenario_digest << "\n";
  out << "alpha " << format_g17(r.alpha) << "\n";
  out << "horizon " << format_g17(r.horizon) << "\n";
  out << "velocity " << to_string(r.velocity) << "\n";
  out << "grid";
  for (int i = 0; i < r.grid.dims(); ++i) {
    out << " [" << format_g17(r.grid.lower[i]) << ", " << format_g17(r.grid.upper[i]) << "]x"
        << r.grid.counts[i];
  }
  out << "\n";
  out << "[config]\n" << r.resolved_config << "[/config]\n";
  for (const auto& note : r.notes) out << "note " << note << "\n";

  for (std::size_t i = 0; i < r.per_point.size(); ++i) {
    const auto& p = r.per_point[i];
    out << "point " << i << " at";
    for (int k = 0; k < p.point.size(); ++k) out << ' ' << format_g17(p.point[k]);
    out << " verdict=" << to_string(p.verdict) << " in_S_V=" << (p.in_s_v ? 1 : 0)
        << " h0=" << format_g17(p.h0) << " h_V0=" << format_g17(p.h_V0)
        << " min_h=" << format_g17(p.min_h) << " min_h_V=" << format_g17(p.min_h_V)
        << " first_violation_t=" << (p.first_violation_t ? format_g17(*p.first_violation_t) : "none")
        << " rtf=" << (p.rtf_satisfied ? 1 : 0) << " envelope=" << (p.envelope_holds ? 1 : 0);
    if (p.witness) {
      out << " witness=x0(";
      for (int k = 0; k < p.witness->x0.size(); ++k) {
        out << (k ? "," : "") << format_g17(p.witness->x0[k]);
      }
      out << ")@dt=" << format_g17(p.witness->dt);
    }
    if (!p.note.empty()) out << " note=\"" << p.note << "\"";
    out << "\n";
  }

  out << "[summary]\n";
  out << "points " << r.per_point.size() << "\n";
  for (Verdict v : kAllVerdicts) out << to_string(v) << " " << r.count(v) << "\n";
  out << "unsafe_in_S_V " << r.unsafe_in_s_v() << "\n";
  out << "[/summary]\n";
  return out.str();
}

std::string point_cloud_csv(const CertificateReport& r) {
  std::string out = "# layersafe scenario " + r.scenario_digest + "\n";
  const int k = r.grid.dims();
  out += k == 4 ? "z1,z2,v1,v2" : "z1,z2";
  out += ",verdict,in_S_V,h0,h_V0,min_h\n";
  for (const auto& p : r.per_point) {
    for (int i = 0; i < p.point.size(); ++i) out += (i ? "," : "") + format_g17(p.point[i]);
    out += "," + to_string(p.verdict) + "," + (p.in_s_v ? "1" : "0") + "," + format_g17(p.h0) + "," +
           format_g17(p.h_V0) + "," + format_g17(p.min_h) + "\n";
  }
  return out;
}

std::string plot_script() {
  return R"PY(#!/usr/bin/env python3
"""Plot layersafe case-study CSVs found next to this script (or in argv[1])."""
import glob
import os
import re
import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd


def config(path):
    cfg = {}
    with open(path) as f:
        for line in f:
            if not line.startswith("# "):
                break
            m = re.match(r"# ([\w.@]+) = (.*)", line.strip())
            if m:
                cfg[m.group(1)] = m.group(2)
    return cfg


def vec(text):
    return np.array([float(v) for v in text.strip("()").split(",")])


def main():
    root = sys.argv[1] if len(sys.argv) > 1 else os.path.dirname(os.path.abspath(__file__))
    runs = sorted(glob.glob(os.path.join(root, "case_study_alpha_*.csv")))
    if not runs:
        sys.exit("no case_study_alpha_*.csv files in " + root)
    fig, ax = plt.subplots(2, 2, figsize=(11, 8))
    for path in runs:
        label = "alpha=" + path.split("case_study_alpha_")[1][:-4]
        df = pd.read_csv(path, comment="#")
        ax[0, 0].plot(df.z1, df.z2, label=label)
        ax[0, 1].plot(df.t, df.h, label=label)
        ax[1, 1].plot(df.t, np.hypot(df.edot1, df.edot2), label=label)
    cfg = config(runs[0])
    k = 0
    while "obstacle.%d.center" % k in cfg:
        c = vec(cfg["obstacle.%d.center" % k])
        r = float(cfg["obstacle.%d.radius" % k])
        ax[0, 0].add_patch(plt.Circle(c, r, color="grey", alpha=0.4))
        k += 1
    ax[0, 0].set_aspect("equal")
    ax[0, 0].set_title("path")
    ax[0, 1].axhline(0.0, color="k", lw=0.5)
    ax[0, 1].set_title("h(z(t))")
    first = pd.read_csv(runs[0], comment="#")
    goal = vec(cfg["goal"])
    kp = float(cfg["gains.kp"])
    ax[1, 0].plot(first.t, kp * np.hypot(first.z1 - goal[0], first.z2 - goal[1]), label="|zdot_d|")
    ax[1, 0].plot(first.t, np.hypot(first.zsdot1, first.zsdot2), label="|zdot_s|")
    ax[1, 0].plot(first.t, np.hypot(first.zdot1, first.zdot2), label="|zdot|")
    ax[1, 0].set_title("speeds, " + os.path.basename(runs[0]))
    ax[1, 1].set_yscale("log")
    ax[1, 1].set_title("|edot|")
    for a in ax.flat:
        a.legend(fontsize=8)
    fig.tight_layout()
    out = os.path.join(root, "case_study.png")
    fig.savefig(out, dpi=120)
    print(out)


if __name__ == "__main__":
    main()
)PY";
}

}  // namespace layersafe
