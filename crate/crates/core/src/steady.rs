//! Steady states and long-time convergence probes.
//!
//! A steady state is a constant `mu_s >= 0` together with `rho_s` solving
//! `-lap rho_s + f'(rho_s) = mu_s` under zero-flux conditions. Since `f` is
//! not convex the problem can have several solutions; Newton returns the one
//! reached from the supplied initial guess.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::grid::{grad_sq_integral, Field, Grid};
use crate::math;
use crate::potential::PotentialSpec;
use crate::stepper::{Semilinear, StepError, Trajectory};

#[derive(Clone, Debug, PartialEq)]
pub struct SteadyState {
    pub mu_s: f64,
    pub rho_s: Field,
    /// Sup norm of `-lap rho_s + f'(rho_s) - mu_s`.
    pub residual_norm: f64,
}

pub fn solve_steady(
    pot: &PotentialSpec,
    mu_s: f64,
    rho_init: &Field,
    tol: f64,
    max_iter: usize,
) -> Result<SteadyState, StepError> {
    if !(mu_s.is_finite() && mu_s >= 0.0) {
        return Err(StepError::Config("mu_s must be a nonnegative constant"));
    }
    if !(tol > 0.0) || max_iter == 0 {
        return Err(StepError::Config("tolerance and iteration cap must be positive"));
    }
    if !(rho_init.min() > 0.0 && rho_init.max() < 1.0) {
        return Err(StepError::DataHypothesis("initial guess must lie strictly inside (0,1)"));
    }
    let grid = rho_init.grid();
    let source = vec![mu_s; rho_init.len()];
    let problem = Semilinear { pot, grid, lambda: 0.0, shift: 0.0, anchor: &source, source: &source };
    let values = match problem.solve(rho_init.values().to_vec(), tol, max_iter, tol) {
        Ok(v) => v,
        Err(e) if e.is_solver_failure() => {
            pseudo_transient(pot, grid, &source, rho_init.values().to_vec(), tol, max_iter).map_err(|_| e)?
        }
        Err(e) => return Err(e),
    };
    let residual_norm = problem.residual_norm(&values)?;
    Ok(SteadyState { mu_s, rho_s: Field::new(*grid, values)?, residual_norm })
}

/// Outer iterations allowed in [`pseudo_transient`].
const PSEUDO_STEPS: usize = 500;

/// Largest `-f''` over a sample of (0,1).
fn curvature_deficit(pot: &PotentialSpec) -> Result<f64, StepError> {
    let mut worst: f64 = 0.0;
    for k in 1..1024 {
        worst = worst.max(-pot.derivatives(k as f64 / 1024.0, 0.0)?.1);
    }
    Ok(worst)
}

/// Pseudo-transient continuation: implicit steps `s (x+ - x) + F(x+) = 0`
/// with `s` large enough for a definite Newton matrix at first, then shrunk
/// in proportion to the residual.
fn pseudo_transient(
    pot: &PotentialSpec,
    grid: &Grid,
    source: &[f64],
    mut x: Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>, StepError> {
    let exact = Semilinear { pot, grid, lambda: 0.0, shift: 0.0, anchor: source, source };
    let mut norm = exact.residual_norm(&x)?;
    let mut shift = 1.0 + curvature_deficit(pot)?;
    for _ in 0..PSEUDO_STEPS {
        if norm <= tol {
            return Ok(x);
        }
        if shift < 1e-3 {
            if let Ok(y) = exact.solve(x.clone(), tol, max_iter, tol) {
                return Ok(y);
            }
        }
        let anchor = x.clone();
        let step = Semilinear { pot, grid, lambda: 0.0, shift, anchor: &anchor, source };
        match step.solve(x.clone(), (0.1 * norm).max(tol), max_iter, tol) {
            Ok(y) => {
                let next = exact.residual_norm(&y)?;
                shift *= (next / norm).min(1.0);
                x = y;
                norm = next;
            }
            Err(e) if e.is_solver_failure() => shift *= 4.0,
            Err(e) => return Err(e),
        }
    }
    if norm <= tol {
        Ok(x)
    } else {
        Err(StepError::NewtonDiverged { iterations: PSEUDO_STEPS, residual: norm })
    }
}

/// `-lap rho + f'(rho) - mu_s` as a field.
pub fn steady_residual(pot: &PotentialSpec, rho: &Field, mu_s: f64) -> Result<Field, StepError> {
    let grid = rho.grid();
    let mut lap = vec![0.0; rho.len()];
    grid.apply_laplacian(rho.values(), &mut lap);
    let mut out = Vec::with_capacity(rho.len());
    for (l, &r) in lap.iter().zip(rho.values()) {
        out.push(-l + pot.derivatives(r, 0.0)?.0 - mu_s);
    }
    Ok(Field::new(*grid, out)?)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OmegaThresholds {
    pub dtrho_l2: f64,
    pub grad_mu_l2: f64,
    pub mu_oscillation: f64,
    pub steady_residual: f64,
}

impl Default for OmegaThresholds {
    fn default() -> Self {
        Self { dtrho_l2: 1e-6, grad_mu_l2: 1e-6, mu_oscillation: 1e-6, steady_residual: 1e-6 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProbeError {
    EmptyTrajectory,
    WindowTooLong { window: f64, available: f64 },
    Step(StepError),
}

impl fmt::Display for ProbeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EmptyTrajectory => f.write_str("trajectory has no snapshots"),
            Self::WindowTooLong { window, available } => {
                write!(f, "probe window {window} exceeds the stored time span {available}")
            }
            Self::Step(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for ProbeError {}

impl From<StepError> for ProbeError {
    fn from(e: StepError) -> Self {
        Self::Step(e)
    }
}

/// Sup-over-window norms of `d_t rho`, `grad mu` and the oscillation of `mu`,
/// plus the steady residual of the final state against `mu_s = mean(mu)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OmegaProbeReport {
    pub window_start: f64,
    pub window_end: f64,
    pub sup_dtrho_l2: f64,
    pub sup_grad_mu_l2: f64,
    pub sup_mu_oscillation: f64,
    pub terminal_grad_mu_l2: f64,
    pub terminal_mu_oscillation: f64,
    pub mu_s: f64,
    /// L2 norm of `-lap rho + f'(rho) - mu_s` at the final snapshot.
    pub steady_residual: f64,
    pub converged: bool,
}

pub fn omega_limit_probe(
    pot: &PotentialSpec,
    trajectory: &Trajectory,
    window: f64,
    thresholds: &OmegaThresholds,
) -> Result<OmegaProbeReport, ProbeError> {
    let first = trajectory.first().ok_or(ProbeError::EmptyTrajectory)?;
    let last = trajectory.last().ok_or(ProbeError::EmptyTrajectory)?;
    let available = last.t - first.t;
    let slack = 1e-9 * last.t.max(1.0);
    if !(window >= 0.0) || window > available + slack {
        return Err(ProbeError::WindowTooLong { window, available });
    }
    let start = last.t - window - slack;
    let grid: &Grid = last.grid();
    let in_window: Vec<usize> = (0..trajectory.len()).filter(|&s| trajectory.states[s].t >= start).collect();

    let mut sup_dtrho: f64 = 0.0;
    let mut sup_grad: f64 = 0.0;
    let mut sup_osc: f64 = 0.0;
    for &s in &in_window {
        let st = &trajectory.states[s];
        sup_grad = sup_grad.max(math::sqrt(grad_sq_integral(&st.mu)));
        sup_osc = sup_osc.max(st.mu.max() - st.mu.min());
        if s > 0 && trajectory.states[s - 1].t >= start {
            let prev = &trajectory.states[s - 1];
            let dt = st.t - prev.t;
            if dt > 0.0 {
                let d: Vec<f64> = st.rho.values().iter().zip(prev.rho.values()).map(|(a, b)| (a - b) / dt).collect();
                sup_dtrho = sup_dtrho.max(math::sqrt(grid.dot(&d, &d)));
            }
        }
    }
    let mu_s = last.mu.mean();
    let residual = steady_residual(pot, &last.rho, mu_s)?;
    let steady_residual = crate::grid::l2_norm(&residual);
    let terminal_grad_mu_l2 = math::sqrt(grad_sq_integral(&last.mu));
    let terminal_mu_oscillation = last.mu.max() - last.mu.min();
    let converged = sup_dtrho <= thresholds.dtrho_l2
        && sup_grad <= thresholds.grad_mu_l2
        && sup_osc <= thresholds.mu_oscillation
        && steady_residual <= thresholds.steady_residual;
    Ok(OmegaProbeReport {
        window_start: last.t - window,
        window_end: last.t,
        sup_dtrho_l2: sup_dtrho,
        sup_grad_mu_l2: sup_grad,
        sup_mu_oscillation: sup_osc,
        terminal_grad_mu_l2,
        terminal_mu_oscillation,
        mu_s,
        steady_residual,
        converged,
    })
}
