//! Parameter sweeps: one full run per value, in parallel.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::ScenarioConfig;
use crate::error::Error;
use crate::output::write_outputs;
use crate::run::{run, Run};

pub const SWEEP_FILE: &str = "sweep.csv";

pub const SWEEP_COLUMNS: [&str; 12] = [
    "param",
    "value",
    "z_impulses",
    "beta_impulses",
    "alpha_impulses",
    "impulses",
    "total_delta_v",
    "converged",
    "convergence_t",
    "convergence_orbit",
    "certified",
    "output_dir",
];

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub value: f64,
    pub dir: PathBuf,
    pub run: Run,
}

impl SweepPoint {
    pub fn row(&self, param: &str) -> Vec<String> {
        let b = &self.run.budget;
        let period = self.run.scenario.params.period();
        let conv = self.run.convergence;
        vec![
            param.to_string(),
            format!("{}", self.value),
            b.z.impulses.to_string(),
            b.beta.impulses.to_string(),
            b.alpha.impulses.to_string(),
            b.impulses().to_string(),
            format!("{}", b.total_delta_v),
            conv.is_some().to_string(),
            conv.map_or_else(String::new, |t| format!("{}", t.t)),
            conv.map_or_else(String::new, |t| format!("{}", t.t / period)),
            self.run.report.passed().to_string(),
            self.dir.display().to_string(),
        ]
    }
}

/// Runs `base` once per value of `param`, writing each run's files under
/// `out/<param>=<value>` and the table to `out/sweep.csv`.
pub fn sweep(base: &ScenarioConfig, param: &str, values: &[f64], out: &Path) -> Result<Vec<SweepPoint>, Error> {
    let configs = values
        .iter()
        .map(|&v| {
            let mut c = base.clone();
            c.set_param(param, v)?;
            c.output_dir = out.join(format!("{param}={v}"));
            Ok((v, c.validate()?))
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let points = configs
        .into_par_iter()
        .map(|(value, scenario)| {
            let run = run(&scenario)?;
            write_outputs(&scenario.output_dir, &run)?;
            Ok(SweepPoint { value, dir: scenario.output_dir, run })
        })
        .collect::<Result<Vec<_>, Error>>()?;

    std::fs::create_dir_all(out).map_err(|source| Error::Io { path: out.to_path_buf(), source })?;
    let path = out.join(SWEEP_FILE);
    let err = |source| Error::Csv { path: path.clone(), source };
    let mut w = csv::Writer::from_path(&path).map_err(err)?;
    w.write_record(SWEEP_COLUMNS).map_err(err)?;
    for p in &points {
        w.write_record(p.row(param)).map_err(err)?;
    }
    w.flush().map_err(|source| Error::Io { path: path.clone(), source })?;
    Ok(points)
}
