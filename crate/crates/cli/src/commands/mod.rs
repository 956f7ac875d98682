pub mod degiorgi;
pub mod simulate;
pub mod steady;
pub mod sweep;
pub mod verify;

use std::fs;
use std::path::Path;

use nschsim_core::invariants::Baseline;
use nschsim_core::stepper::{simulate, RunControl};
use nschsim_core::{DiagnosticsRecord, PotentialSpec, SolverConfig, State, Trajectory};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::io::{diagnostics_row, snapshot_path, write_field, CsvOut, DIAGNOSTICS_HEADER};

/// A finished (or aborted) run with its diagnostics rows.
pub struct RunResult {
    pub trajectory: Trajectory,
    pub records: Vec<(usize, DiagnosticsRecord)>,
    pub failure: Option<CliError>,
}

impl RunResult {
    pub fn into_trajectory(self) -> Result<Trajectory, CliError> {
        match self.failure {
            Some(e) => Err(e),
            None => Ok(self.trajectory),
        }
    }

    pub fn max_of(&self, f: impl Fn(&DiagnosticsRecord) -> f64) -> f64 {
        self.records.iter().map(|(_, r)| f(r)).fold(0.0, f64::max)
    }
}

/// Runs `init` to `time.t_end` and collects diagnostics every
/// `output.diagnostics_every` steps. With `out` set, writes
/// `diagnostics.csv` and the stored snapshots there; a failed run still
/// writes everything up to its last valid state.
pub fn run_pipeline(
    cfg: &RunConfig,
    pot: &PotentialSpec,
    solver: &SolverConfig,
    init: State,
    out: Option<&Path>,
) -> Result<RunResult, CliError> {
    let baseline = Baseline::new(pot, solver, &init).map_err(|e| CliError::Validation(e.to_string()))?;
    let control = RunControl { snapshot_every: cfg.output.snapshot_every, sink_every: cfg.output.diagnostics_every };
    let mut records = Vec::new();
    let mut sink_error = None;
    let result = simulate(pot, init, solver, cfg.time.t_end, control, |ev| {
        match DiagnosticsRecord::compute(pot, solver, &baseline, ev.prev, ev.state) {
            Ok(r) => records.push((ev.step, r)),
            Err(e) => {
                sink_error.get_or_insert(e);
            }
        }
    });
    if let Some(e) = sink_error {
        return Err(CliError::Solver(format!("diagnostics: {e}")));
    }
    let (trajectory, failure) = match result {
        Ok(t) => (t, None),
        Err(f) => {
            let err = CliError::from(f.error.clone());
            let err = match err {
                CliError::Solver(_) => CliError::Solver(f.to_string()),
                other => other,
            };
            (f.trajectory, Some(err))
        }
    };
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let mut csv = CsvOut::create(dir.join("diagnostics.csv"), &DIAGNOSTICS_HEADER)?;
        for (step, r) in &records {
            csv.row(diagnostics_row(*step, r))?;
        }
        csv.finish()?;
        for (step, s) in trajectory.steps.iter().zip(&trajectory.states) {
            write_field(&snapshot_path(dir, "mu", *step), &s.mu, s.t, "mu")?;
            write_field(&snapshot_path(dir, "rho", *step), &s.rho, s.t, "rho")?;
        }
    }
    Ok(RunResult { trajectory, records, failure })
}
