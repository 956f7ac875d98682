use nschsim_core::invariants::degiorgi_diagnostic;

use super::run_pipeline;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::init::initial_state;
use crate::io::write_degiorgi;

pub fn run(cfg: &RunConfig, m: f64, j_max: usize) -> Result<(), CliError> {
    let pot = cfg.potential()?;
    let solver = cfg.solver();
    let init = initial_state(cfg)?;
    cfg.echo()?;
    let traj = run_pipeline(cfg, &pot, &solver, init, None)?.into_trajectory()?;
    let rep = degiorgi_diagnostic(&traj, m, j_max).map_err(|e| CliError::Validation(e.to_string()))?;
    let path = write_degiorgi(cfg.output.dir.join("degiorgi.csv"), &rep)?;
    let zero = rep.first_zero_level.map_or_else(|| "none".to_string(), |j| j.to_string());
    println!(
        "M={:e} sup_mu={:e} 2M={:e} bounded={} first_zero_level={zero} embedding_constant={:e} output={}",
        rep.level_base,
        rep.sup_mu_observed,
        2.0 * rep.level_base,
        rep.bounded_by_two_m,
        rep.embedding_constant(),
        path.display()
    );
    Ok(())
}
