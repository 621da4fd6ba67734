//! Self-contained matplotlib scripts that plot a command's CSV output.

use std::path::{Path, PathBuf};

use crate::error::Result;

const HEADER: &str = r#"#!/usr/bin/env python3
import csv
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))


def read(name):
    with open(os.path.join(HERE, name), newline="") as f:
        return list(csv.DictReader(f))


def col(rows, key):
    return [float(r[key]) if r[key] != "" else float("nan") for r in rows]

"#;

const DECOHERE: &str = r#"
rows = read("decohere.csv")
for r in rows:
    print(r["method"], "Re F =", r["rate_re_hz"], "Hz, Im F =", r["rate_im_hz"], "Hz")
sys.exit(0)
"#;

const DAILY: &str = r#"
rows = read("daily.csv")
h = col(rows, "sidereal_hours")
flux = col(rows, "flux_fraction")
rate = col(rows, "rate_re_hz")
mf = sum(flux) / len(flux)
mr = sum(rate) / len(rate)
fig, ax = plt.subplots(figsize=(6, 4))
ax.plot(h, [f / mf for f in flux], "k-", label="flux")
ax.plot(h, [r / mr for r in rate], "b--", label="Re F")
ax.set_xlabel("sidereal time (h)")
ax.set_ylabel("relative to daily mean")
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(HERE, "daily.png"), dpi=150)
"#;

const ATMOSPHERE: &str = r#"
rows = read("atmosphere.csv")
m = col(rows, "m_eV")
fig, ax = plt.subplots(figsize=(6, 4))
for key, style in [("alphaM_scatt", "k:"), ("alphaM_iso", "k--"), ("alphaM_therm", "k-")]:
    ax.loglog(m, col(rows, key), style, label=key)
ax.set_xlabel("m (eV)")
ax.set_ylabel("alpha_M")
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(HERE, "atmosphere.png"), dpi=150)
"#;

const BORN: &str = r#"
rows = [r for r in read("born_check.csv") if r["born_ratio"] != ""]
fig, ax = plt.subplots(figsize=(6, 4))
ax.loglog(col(rows, "m_eV"), col(rows, "born_ratio"), "k-")
ax.axhline(1.0, color="r", lw=0.8)
ax.set_xlabel("m (eV)")
ax.set_ylabel("|T2/T1|")
fig.tight_layout()
fig.savefig(os.path.join(HERE, "born_check.png"), dpi=150)
"#;

const STATS: &str = r#"
rows = read("stats_sim.csv")
summary = read("stats_summary.csv")[0]
est = col(rows, "estimate")
fig, ax = plt.subplots(figsize=(6, 4))
ax.hist(est, bins=50, color="0.6")
ax.axvline(float(summary["true_signal"]), color="k")
ax.set_xlabel("estimate")
fig.tight_layout()
fig.savefig(os.path.join(HERE, "stats_sim.png"), dpi=150)
"#;

const SENSITIVITY: &str = r#"
rows = read("sensitivity_long.csv")
styles = {"sensitivity": "b-", "greenhouse": "b--", "scatter": "k:", "isotropize": "k--", "thermalize": "k-"}
fig, ax = plt.subplots(figsize=(6, 4))
for curve, style in styles.items():
    pts = [(float(r["m_eV"]), float(r["alpha"])) for r in rows if r["curve"] == curve]
    if pts:
        ax.loglog([p[0] for p in pts], [p[1] for p in pts], style, label=curve)
ax.set_xlabel("m (eV)")
ax.set_ylabel("alpha_M")
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(HERE, "sensitivity.png"), dpi=150)
"#;

/// Write `plot_<command>.py` next to the CSV files.
pub fn write_script(command: &str, dir: &Path) -> Result<PathBuf> {
    let body = match command {
        "decohere" => DECOHERE,
        "daily" => DAILY,
        "atmosphere" => ATMOSPHERE,
        "born-check" => BORN,
        "stats-sim" => STATS,
        _ => SENSITIVITY,
    };
    let path = dir.join(format!("plot_{}.py", command.replace('-', "_")));
    std::fs::write(&path, format!("{HEADER}{body}"))?;
    Ok(path)
}
