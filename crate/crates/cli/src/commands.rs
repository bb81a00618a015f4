use std::path::Path;

use anyhow::Result;
use isogroup_core::simulation::{predict, run};
use isogroup_core::verify::{convergence_study, run_invariant_suite};
use isogroup_core::{BlowUpReport, RunOutput, Tolerances, VerificationReport};

use crate::config::FileConfig;
use crate::output;

pub fn cmd_run(config: &FileConfig, out_dir: &Path) -> Result<RunOutput> {
    let out = run(&config.run)?;
    output::write_run(out_dir, &out)?;
    Ok(out)
}

pub fn cmd_predict(config: &FileConfig, out_dir: &Path) -> Result<BlowUpReport> {
    let report = predict(&config.run)?;
    output::write_json(out_dir, "blowup.json", &report)?;
    Ok(report)
}

pub fn cmd_verify(config: &FileConfig, out_dir: &Path) -> Result<VerificationReport> {
    let (_, report) = run_invariant_suite(&config.run, &Tolerances::default())?;
    output::write_report(out_dir, &report)?;
    Ok(report)
}

pub fn cmd_mms_order(config: &FileConfig, out_dir: &Path) -> Result<VerificationReport> {
    let report = convergence_study(&config.run, &config.levels, &Tolerances::default())?;
    output::write_report(out_dir, &report)?;
    Ok(report)
}
