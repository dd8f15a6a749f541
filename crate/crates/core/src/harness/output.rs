//! Plot-ready files for one run. Floats are written in shortest round-trip
//! scientific notation, so identical runs give identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::params;

use super::scenario::ScenarioResult;

pub const SERIES_HEADER: [&str; 12] = [
    "step", "t", "s", "sdot", "boundary_temp", "temp_norm", "error_norm", "q", "q_cont", "d_sq", "gamma_m", "m",
];
pub const DIAGNOSTICS_HEADER: [&str; 9] = [
    "step", "t", "v1", "v", "w", "log_w", "w_tilde_norm", "energy_residual", "min_temp",
];
pub const EVENTS_HEADER: [&str; 7] = ["step", "time", "reason", "q_j", "dwell", "d_sq", "gamma_m"];

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |e| Error::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e.to_string()),
    }
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn write_csv(path: &Path, header: &[&str], records: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_path(path)
        .map_err(csv_err(path))?;
    w.write_record(header).map_err(csv_err(path))?;
    for rec in records {
        w.write_record(&rec).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(io_err(path))
}

/// Writes series.csv, diagnostics.csv, events.csv, derivation_report.txt,
/// validation.txt, summary.json and optionally plot.py into `dir`.
pub fn emit_outputs(result: &ScenarioResult, dir: &Path, plot_script: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();

    let path = dir.join("series.csv");
    write_csv(
        &path,
        &SERIES_HEADER,
        result.rows.iter().map(|r| {
            let mut rec = vec![r.step.to_string()];
            rec.extend(
                [r.t, r.s, r.sdot, r.boundary_temp, r.temp_norm, r.error_norm, r.q, r.q_cont, r.d_sq, r.gamma_m, r.m]
                    .map(num),
            );
            rec
        }),
    )?;
    written.push(path);

    let path = dir.join("diagnostics.csv");
    write_csv(
        &path,
        &DIAGNOSTICS_HEADER,
        result.rows.iter().map(|r| {
            let mut rec = vec![r.step.to_string()];
            rec.extend([r.t, r.v1, r.v, r.w, r.log_w, r.w_tilde_norm, r.energy_residual, r.min_temp].map(num));
            rec
        }),
    )?;
    written.push(path);

    let path = dir.join("events.csv");
    write_csv(
        &path,
        &EVENTS_HEADER,
        result.events.iter().map(|e| {
            vec![
                e.step.to_string(),
                num(e.time),
                e.reason.as_str().to_string(),
                num(e.q_j),
                e.dwell.map(num).unwrap_or_default(),
                num(e.d_sq),
                num(e.gamma_m),
            ]
        }),
    )?;
    written.push(path);

    let cfg = &result.config;
    let path = dir.join("derivation_report.txt");
    let phys = params::derive_physical(&cfg.physical)?;
    write_text(&path, &params::derivation_report(&phys, &cfg.controller, &cfg.trigger, &result.derived))?;
    written.push(path);

    let path = dir.join("validation.txt");
    write_text(&path, &result.validation.render())?;
    written.push(path);

    let path = dir.join("summary.json");
    let mut json = serde_json::to_string_pretty(&result.summary)
        .map_err(|e| Error::Consistency(format!("summary serialization: {e}")))?;
    json.push('\n');
    write_text(&path, &json)?;
    written.push(path);

    if plot_script {
        let path = dir.join("plot.py");
        write_text(&path, PLOT_SCRIPT)?;
        written.push(path);
    }
    Ok(written)
}

const PLOT_SCRIPT: &str = r#"# Plots the files written next to this script.
import os

import matplotlib.pyplot as plt
import pandas as pd

here = os.path.dirname(os.path.abspath(__file__))
series = pd.read_csv(os.path.join(here, "series.csv"))
diag = pd.read_csv(os.path.join(here, "diagnostics.csv"))
events = pd.read_csv(os.path.join(here, "events.csv"))

fig, ax = plt.subplots(2, 3, figsize=(14, 7))
ax[0, 0].plot(series.t / 60, series.s)
ax[0, 0].set(xlabel="t [min]", ylabel="s [cm]", title="interface")
ax[0, 1].step(series.t / 60, series.q, where="post", label="held q")
ax[0, 1].plot(series.t / 60, series.q_cont, lw=0.8, label="continuous law")
ax[0, 1].set(xlabel="t [min]", ylabel="q [W/cm²]", title="input")
ax[0, 1].legend()
ax[0, 2].plot(series.t / 60, series.boundary_temp)
ax[0, 2].set(xlabel="t [min]", ylabel="T(0,t) - Tm [°C]", title="boundary temperature")
ax[1, 0].semilogy(series.t / 60, series.error_norm)
ax[1, 0].set(xlabel="t [min]", ylabel="||T - T̂||", title="estimation error")
ax[1, 1].semilogy(series.t / 60, series.d_sq.clip(lower=1e-300), label="d²")
ax[1, 1].semilogy(series.t / 60, series.gamma_m, label="γm")
ax[1, 1].set(xlabel="t [min]", title="trigger")
ax[1, 1].legend()
ax[1, 2].plot(diag.t / 60, diag.log_w)
ax[1, 2].set(xlabel="t [min]", ylabel="log W", title="Lyapunov monitor")
for a in ax.flat:
    for t in events.time:
        a.axvline(t / 60, color="0.85", lw=0.5, zorder=0)
fig.tight_layout()
fig.savefig(os.path.join(here, "signals.png"), dpi=150)
"#;
