use clap::ValueEnum;
use nschsim_core::invariants::degiorgi_diagnostic;
use nschsim_core::oracle::homogeneous_oracle;
use nschsim_core::steady::solve_steady;
use nschsim_core::{Field, State};

use super::{run_pipeline, RunResult};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::init::initial_state;
use crate::io::{write_degiorgi, CsvOut};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Case {
    /// A steady pair from `init.mu0` and the guess `init.rho0` must not move.
    Stationary,
    /// Constant data against the ODE reference.
    Homogeneous,
    /// The configured data at `dt` and `dt/2`: first-order balance laws.
    Smooth,
}

/// Largest tolerated change of a steady pair, and of its balance residuals.
pub const STATIONARY_TOL: f64 = 1e-8;
/// Largest tolerated sup error against the ODE reference.
pub const ORACLE_TOL: f64 = 1e-3;
pub const ORACLE_RTOL: f64 = 1e-10;
/// Bounds for the smooth case.
pub const SMOOTH_TOL: f64 = 1e-2;
pub const ORDER_WINDOW: (f64, f64) = (1.7, 2.3);

struct Check {
    name: &'static str,
    value: f64,
    ok: bool,
}

impl Check {
    fn below(name: &'static str, value: f64, bound: f64) -> Self {
        Self { name, value, ok: value <= bound }
    }

    fn within(name: &'static str, value: f64, (lo, hi): (f64, f64)) -> Self {
        Self { name, value, ok: (lo..=hi).contains(&value) }
    }
}

fn report(case: &str, checks: &[Check]) -> Result<(), CliError> {
    for c in checks {
        println!("{case}: {} = {:e} {}", c.name, c.value, if c.ok { "ok" } else { "FAILED" });
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.ok).map(|c| c.name).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(format!("{case}: {}", failed.join(", "))))
    }
}

pub fn run(cfg: &RunConfig, case: Case) -> Result<(), CliError> {
    cfg.echo()?;
    match case {
        Case::Stationary => stationary(cfg),
        Case::Homogeneous => homogeneous(cfg),
        Case::Smooth => smooth(cfg),
    }
}

fn degiorgi_file(cfg: &RunConfig, result: &RunResult) -> Result<(), CliError> {
    let path = cfg.output.dir.join("degiorgi.csv");
    match degiorgi_diagnostic(&result.trajectory, 2.0, 60) {
        Ok(rep) => write_degiorgi(path, &rep).map(|_| ()),
        // mu0 = 0: no levels to report
        Err(_) => CsvOut::create(path, &["j", "k_j", "S_j", "triple_norm_j"])?.finish().map(|_| ()),
    }
}

fn stationary(cfg: &RunConfig) -> Result<(), CliError> {
    let pot = cfg.potential()?;
    let solver = cfg.solver();
    let grid = cfg.grid()?;
    let mu_s = cfg.init.mu0;
    let tol = solver.newton_tol.min(1e-11);
    let steady = solve_steady(&pot, mu_s, &Field::constant(grid, cfg.init.rho0), tol, solver.newton_max_iter)?;
    let init = State::initial(Field::constant(grid, mu_s), steady.rho_s.clone())?;
    let result = run_pipeline(cfg, &pot, &solver, init.clone(), Some(&cfg.output.dir))?;
    degiorgi_file(cfg, &result)?;
    let drift = result.max_of(|r| r.conservation_drift);
    let lyap = result.max_of(|r| r.lyapunov_residual);
    let traj = result.into_trajectory()?;
    let change = traj
        .states
        .iter()
        .map(|s| s.mu.sup_distance(&init.mu).max(s.rho.sup_distance(&init.rho)))
        .fold(0.0, f64::max);
    report(
        "stationary",
        &[
            Check::below("steady_residual", steady.residual_norm, tol),
            Check::below("state_change", change, STATIONARY_TOL),
            Check::below("conservation_drift", drift, STATIONARY_TOL),
            Check::below("lyapunov_residual", lyap, STATIONARY_TOL),
        ],
    )
}

fn homogeneous(cfg: &RunConfig) -> Result<(), CliError> {
    let pot = cfg.potential()?;
    let solver = cfg.solver();
    let grid = cfg.grid()?;
    let (mu0, rho0) = (cfg.init.mu0, cfg.init.rho0);
    let init = State::initial(Field::constant(grid, mu0), Field::constant(grid, rho0))?;
    let result = run_pipeline(cfg, &pot, &solver, init, Some(&cfg.output.dir))?;
    let traj = result.into_trajectory()?;
    let times: Vec<f64> = traj.states.iter().map(|s| s.t).collect();
    let oracle = homogeneous_oracle(&pot, rho0, mu0, &solver, &times, ORACLE_RTOL)
        .map_err(|e| CliError::Solver(format!("oracle: {e}")))?;

    let mut csv = CsvOut::create(cfg.output.dir.join("oracle.csv"), &["t", "mu", "rho", "invariant"])?;
    let (mut err_mu, mut err_rho) = (0.0f64, 0.0f64);
    for (k, s) in traj.states.iter().enumerate() {
        csv.row([oracle.times[k], oracle.mu_values[k], oracle.rho_values[k], oracle.invariant_values[k]].map(|v| format!("{v:e}")))?;
        err_mu = err_mu.max(s.mu.values().iter().map(|m| (m - oracle.mu_values[k]).abs()).fold(0.0, f64::max));
        err_rho = err_rho.max(s.rho.values().iter().map(|r| (r - oracle.rho_values[k]).abs()).fold(0.0, f64::max));
    }
    csv.finish()?;
    report(
        "homogeneous",
        &[
            Check::below("max_error_mu", err_mu, ORACLE_TOL),
            Check::below("max_error_rho", err_rho, ORACLE_TOL),
            Check::below("oracle_invariant_drift", oracle.invariant_drift(), 100.0 * ORACLE_RTOL),
        ],
    )
}

fn smooth(cfg: &RunConfig) -> Result<(), CliError> {
    let pot = cfg.potential()?;
    let solver = cfg.solver();
    let coarse = run_pipeline(cfg, &pot, &solver, initial_state(cfg)?, Some(&cfg.output.dir))?;
    degiorgi_file(cfg, &coarse)?;
    let mut half = solver;
    half.dt *= 0.5;
    let mut half_cfg = cfg.clone();
    half_cfg.output.diagnostics_every *= 2;
    let fine = run_pipeline(&half_cfg, &pot, &half, initial_state(cfg)?, None)?;
    let (d1, l1) = (coarse.max_of(|r| r.conservation_drift), coarse.max_of(|r| r.lyapunov_residual));
    let (d2, l2) = (fine.max_of(|r| r.conservation_drift), fine.max_of(|r| r.lyapunov_residual));
    coarse.into_trajectory()?;
    fine.into_trajectory()?;
    report(
        "smooth",
        &[
            Check::below("conservation_drift", d1, SMOOTH_TOL),
            Check::within("conservation_drift_ratio", d1 / d2, ORDER_WINDOW),
            Check::below("lyapunov_residual", l1, SMOOTH_TOL),
            Check::within("lyapunov_residual_ratio", l1 / l2, ORDER_WINDOW),
        ],
    )
}
