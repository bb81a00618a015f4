//! CSV and report writers. Numbers carry 17 significant digits in
//! scientific notation, so files are byte-stable across runs and locales.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use isogroup_core::functionals::SERIES_COLUMNS;
use isogroup_core::{FluidState, RunOutput, VerificationReport};

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn join(values: impl IntoIterator<Item = f64>) -> String {
    values.into_iter().map(num).collect::<Vec<_>>().join(",")
}

pub fn series_csv(out: &RunOutput) -> String {
    let mut s = SERIES_COLUMNS.join(",");
    s.push('\n');
    for r in &out.series {
        s.push_str(&join(r.values()));
        s.push('\n');
    }
    s
}

pub fn paths_csv(out: &RunOutput) -> String {
    let mut s = String::from("t,path_id,x,u,xi,monotone_q\n");
    for p in &out.paths {
        let _ = writeln!(
            s,
            "{},{},{}",
            num(p.t),
            p.path_id,
            join([p.x, p.u, p.xi, p.monotone_q])
        );
    }
    s
}

pub fn snapshot_csv(state: &FluidState) -> String {
    let mut s = String::from("x,rho,u\n");
    for (i, (&r, &u)) in state.rho.iter().zip(&state.u).enumerate() {
        s.push_str(&join([state.grid.center(i), r, u]));
        s.push('\n');
    }
    s
}

pub fn snapshot_name(t: f64) -> String {
    format!("snapshot_{t:.6}.csv")
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

/// Writes `series.csv`, `paths.csv` and one `snapshot_<t>.csv` per stored snapshot.
pub fn write_run(dir: &Path, out: &RunOutput) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut files = vec![
        write(dir, "series.csv", &series_csv(out))?,
        write(dir, "paths.csv", &paths_csv(out))?,
    ];
    for snap in &out.snapshots {
        files.push(write(dir, &snapshot_name(snap.t), &snapshot_csv(snap))?);
    }
    Ok(files)
}

pub fn write_json<T: serde::Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write(dir, name, &text)
}

/// Writes `verify.txt` and `verify.json`.
pub fn write_report(dir: &Path, report: &VerificationReport) -> Result<()> {
    write_json(dir, "verify.json", report)?;
    write(dir, "verify.txt", &report.to_text())?;
    Ok(())
}
