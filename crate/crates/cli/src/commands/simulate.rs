use nschsim_core::steady::omega_limit_probe;
use nschsim_core::{OmegaProbeReport, OmegaThresholds};

use super::run_pipeline;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::init::initial_state;
use crate::io::CsvOut;

pub const PROBE_HEADER: [&str; 10] = [
    "window_start",
    "window_end",
    "sup_dtrho_l2",
    "sup_grad_mu_l2",
    "sup_mu_oscillation",
    "terminal_grad_mu_l2",
    "terminal_mu_oscillation",
    "mu_s",
    "steady_residual",
    "converged",
];

pub fn run(cfg: &RunConfig, probe_window: Option<f64>) -> Result<(), CliError> {
    let pot = cfg.potential()?;
    let solver = cfg.solver();
    let init = initial_state(cfg)?;
    cfg.echo()?;
    let dir = cfg.output.dir.as_path();
    let result = run_pipeline(cfg, &pot, &solver, init, Some(dir))?;
    let traj = result.into_trajectory()?;
    let last = traj.last().expect("trajectory holds the initial state");
    println!(
        "t={} mu=[{:e}, {:e}] rho=[{:e}, {:e}] output={}",
        last.t,
        last.mu.min(),
        last.mu.max(),
        last.rho.min(),
        last.rho.max(),
        dir.display()
    );
    if let Some(w) = probe_window {
        let thresholds = OmegaThresholds::default();
        let rep = omega_limit_probe(&pot, &traj, w, &thresholds).map_err(|e| CliError::Validation(e.to_string()))?;
        write_probe(cfg, &rep)?;
        println!(
            "omega probe [{}, {}]: dtrho={:e} grad_mu={:e} osc={:e} steady_residual={:e} converged={}",
            rep.window_start,
            rep.window_end,
            rep.sup_dtrho_l2,
            rep.sup_grad_mu_l2,
            rep.sup_mu_oscillation,
            rep.steady_residual,
            rep.converged
        );
    }
    Ok(())
}

fn write_probe(cfg: &RunConfig, rep: &OmegaProbeReport) -> Result<(), CliError> {
    let mut csv = CsvOut::create(cfg.output.dir.join("omega_probe.csv"), &PROBE_HEADER)?;
    let mut row: Vec<String> = [
        rep.window_start,
        rep.window_end,
        rep.sup_dtrho_l2,
        rep.sup_grad_mu_l2,
        rep.sup_mu_oscillation,
        rep.terminal_grad_mu_l2,
        rep.terminal_mu_oscillation,
        rep.mu_s,
        rep.steady_residual,
    ]
    .iter()
    .map(|v| format!("{v:e}"))
    .collect();
    row.push(rep.converged.to_string());
    csv.row(row)?;
    csv.finish()?;
    Ok(())
}
