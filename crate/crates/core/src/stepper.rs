//! Delayed-splitting time integrator.
//!
//! One step from `t` to `t + dt`:
//!
//! 1. take the delayed chemical potential `g = mu(t + dt - tau)` (the initial
//!    datum while `t + dt <= tau`, the previous level when `tau = 0`);
//! 2. backward Euler for the order parameter,
//!    `delta (rho+ - rho)/dt - lap rho+ + f'(rho+) = g`, by damped Newton;
//! 3. a linear backward-Euler step for the chemical potential with the time
//!    derivative coefficient frozen at the old level,
//!    `(eps + 2 rho)(mu+ - mu)/dt + mu+ (rho+ - rho)/dt - lap mu+ = 0`.
//!
//! Step 3 has diagonal `eps + rho + rho+ > 0` plus an M-matrix Laplacian, so
//! `mu+ >= 0` whenever `mu >= 0`.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::grid::{grad_sq_integral, Field, Grid, GridError};
use crate::linalg::{DiagPlusLaplacian, LinearSolveFailed};
use crate::math;
use crate::potential::{PotentialError, PotentialSpec, ENDPOINT_GUARD};

/// Regularization used for the single retry after a failed exact solve.
pub const FALLBACK_LAMBDA: f64 = 1e-8;

/// Step halvings allowed per Newton iteration.
pub const MAX_HALVINGS: usize = 60;

#[derive(Clone, Debug, PartialEq)]
pub enum StepError {
    Config(&'static str),
    /// Initial data violate `mu0 >= 0` or `0 < rho0 < 1`.
    DataHypothesis(&'static str),
    BufferUnderrun { t: f64 },
    NewtonDiverged { iterations: usize, residual: f64 },
    ConfinementLost,
    LinearSolveFailed { residual: f64 },
    Potential(PotentialError),
    Grid(GridError),
}

impl fmt::Display for StepError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(what) => write!(f, "invalid solver configuration: {what}"),
            Self::DataHypothesis(what) => write!(f, "initial data rejected: {what}"),
            Self::BufferUnderrun { t } => write!(f, "delay history has no entry for t = {t}"),
            Self::NewtonDiverged { iterations, residual } => write!(
                f,
                "Newton solve did not converge after {iterations} iterations (residual {residual:e}); \
                 try a smaller dt or a positive lambda"
            ),
            Self::ConfinementLost => {
                f.write_str("damped Newton could not keep the order parameter inside (0,1)")
            }
            Self::LinearSolveFailed { residual } => {
                write!(f, "linear solve failed with residual {residual:e}")
            }
            Self::Potential(e) => write!(f, "{e}"),
            Self::Grid(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for StepError {}

impl From<PotentialError> for StepError {
    fn from(e: PotentialError) -> Self {
        Self::Potential(e)
    }
}

impl From<GridError> for StepError {
    fn from(e: GridError) -> Self {
        Self::Grid(e)
    }
}

impl From<LinearSolveFailed> for StepError {
    fn from(e: LinearSolveFailed) -> Self {
        Self::LinearSolveFailed { residual: e.residual }
    }
}

impl StepError {
    /// Solver failures, as opposed to bad input.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Self::NewtonDiverged { .. } | Self::ConfinementLost | Self::LinearSolveFailed { .. }
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    pub eps: f64,
    pub delta: f64,
    /// Delay; a nonnegative integer multiple of `dt`.
    pub tau: f64,
    pub dt: f64,
    /// Yosida parameter; 0 keeps the exact singular potential.
    pub lambda: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub lin_tol: f64,
}

impl SolverConfig {
    pub fn new(eps: f64, delta: f64, dt: f64) -> Self {
        Self {
            eps,
            delta,
            tau: 0.0,
            dt,
            lambda: 0.0,
            newton_tol: 1e-10,
            newton_max_iter: 50,
            lin_tol: 1e-10,
        }
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn validate(&self) -> Result<(), StepError> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !pos(self.eps) {
            return Err(StepError::Config("eps must be positive"));
        }
        if !pos(self.delta) {
            return Err(StepError::Config("delta must be positive"));
        }
        if !pos(self.dt) {
            return Err(StepError::Config("dt must be positive"));
        }
        if !(self.tau.is_finite() && self.tau >= 0.0) {
            return Err(StepError::Config("tau must be nonnegative"));
        }
        let ratio = self.tau / self.dt;
        if math::abs(ratio - math::round(ratio)) > 1e-12 * ratio.max(1.0) {
            return Err(StepError::Config("tau must be an integer multiple of dt"));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(StepError::Config("lambda must be nonnegative"));
        }
        if !pos(self.newton_tol) || !pos(self.lin_tol) {
            return Err(StepError::Config("tolerances must be positive"));
        }
        if self.newton_max_iter == 0 {
            return Err(StepError::Config("newton_max_iter must be positive"));
        }
        Ok(())
    }

    /// `tau / dt`.
    pub fn delay_steps(&self) -> usize {
        math::round(self.tau / self.dt) as usize
    }
}

/// Solution snapshot with the running dissipation integrals.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub t: f64,
    pub mu: Field,
    pub rho: Field,
    /// `int_0^t int |grad mu|^2`.
    pub cum_grad_mu: f64,
    /// `delta int_0^t ||d_t rho||^2`.
    pub cum_dtrho_sq: f64,
}

impl State {
    /// Initial state at `t = 0`; requires `mu0 >= 0` and `0 < rho0 < 1`.
    pub fn initial(mu0: Field, rho0: Field) -> Result<Self, StepError> {
        let state = Self { t: 0.0, mu: mu0, rho: rho0, cum_grad_mu: 0.0, cum_dtrho_sq: 0.0 };
        state.check_data()?;
        Ok(state)
    }

    pub fn check_data(&self) -> Result<(), StepError> {
        if self.mu.grid() != self.rho.grid() {
            return Err(StepError::Grid(GridError::GridMismatch));
        }
        if self.mu.values().iter().any(|v| !v.is_finite()) || self.rho.values().iter().any(|v| !v.is_finite()) {
            return Err(StepError::DataHypothesis("initial data must be finite"));
        }
        if self.mu.min() < 0.0 {
            return Err(StepError::DataHypothesis("mu0 must be nonnegative (mu0 >= 0 a.e.)"));
        }
        if !(self.rho.min() > 0.0 && self.rho.max() < 1.0) {
            return Err(StepError::DataHypothesis("rho0 must lie strictly inside (0,1)"));
        }
        Ok(())
    }

    pub fn grid(&self) -> &Grid {
        self.mu.grid()
    }
}

/// History of `mu` covering `[t - tau, t]` plus the initial datum.
#[derive(Clone, Debug)]
pub struct DelayBuffer {
    t0: f64,
    mu0: Field,
    history: VecDeque<(f64, Field)>,
    depth: usize,
}

impl DelayBuffer {
    pub fn new(init: &State, cfg: &SolverConfig) -> Self {
        let depth = cfg.delay_steps() + 1;
        let mut history = VecDeque::with_capacity(depth + 1);
        history.push_back((init.t, init.mu.clone()));
        Self { t0: init.t, mu0: init.mu.clone(), history, depth }
    }

    pub fn push(&mut self, t: f64, mu: Field) {
        self.history.push_back((t, mu));
        while self.history.len() > self.depth {
            self.history.pop_front();
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }

    /// Entries oldest first.
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.history.iter().map(|(t, _)| *t)
    }
}

/// `(T_tau mu)(t)`: `mu(t - tau)` for `t > tau`, `mu0` otherwise; the most
/// recent level when `tau = 0`.
pub fn delayed_mu<'a>(buffer: &'a DelayBuffer, t: f64, cfg: &SolverConfig) -> Result<&'a Field, StepError> {
    let slack = 1e-6 * cfg.dt;
    if cfg.tau == 0.0 {
        return buffer.history.back().map(|(_, f)| f).ok_or(StepError::BufferUnderrun { t });
    }
    if t - buffer.t0 <= cfg.tau + slack {
        return Ok(&buffer.mu0);
    }
    let target = t - cfg.tau;
    buffer
        .history
        .iter()
        .find(|(te, _)| math::abs(te - target) <= slack)
        .map(|(_, f)| f)
        .ok_or(StepError::BufferUnderrun { t })
}

/// `shift (x - anchor) - lap x + f'(x) - source = 0` on one grid.
pub(crate) struct Semilinear<'a> {
    pub pot: &'a PotentialSpec,
    pub grid: &'a Grid,
    pub lambda: f64,
    pub shift: f64,
    pub anchor: &'a [f64],
    pub source: &'a [f64],
}

impl Semilinear<'_> {
    fn residual(&self, x: &[f64], out: &mut [f64]) -> Result<f64, StepError> {
        self.grid.apply_laplacian(x, out);
        let mut sup: f64 = 0.0;
        for i in 0..x.len() {
            let (fp, _) = self.pot.derivatives(x[i], self.lambda)?;
            let r = self.shift * (x[i] - self.anchor[i]) - out[i] + fp - self.source[i];
            out[i] = r;
            sup = sup.max(math::abs(r));
        }
        Ok(sup)
    }

    pub fn residual_norm(&self, x: &[f64]) -> Result<f64, StepError> {
        let mut out = vec![0.0; x.len()];
        self.residual(x, &mut out)
    }

    /// Newton direction; a singular Jacobian gets its diagonal shifted
    /// upward until the solve succeeds.
    fn direction(&self, diag: &[f64], rhs: &[f64], tol: f64, norm: f64) -> Result<Vec<f64>, StepError> {
        let zero = vec![0.0; rhs.len()];
        let sys = DiagPlusLaplacian { grid: self.grid, diag, coeff: 1.0 };
        let first = match sys.solve(rhs, &zero, tol) {
            Ok(step) => return Ok(step),
            Err(e) => e,
        };
        let mut reg = norm.max(1e-8);
        for _ in 0..8 {
            let shifted: Vec<f64> = diag.iter().map(|d| d + reg).collect();
            let sys = DiagPlusLaplacian { grid: self.grid, diag: &shifted, coeff: 1.0 };
            if let Ok(step) = sys.solve(rhs, &zero, tol) {
                return Ok(step);
            }
            reg *= 10.0;
        }
        Err(first.into())
    }

    /// Damped Newton from `x`. Step halving keeps every iterate inside the
    /// guard band and forces the sup-norm residual to decrease.
    pub fn solve(&self, mut x: Vec<f64>, tol: f64, max_iter: usize, lin_tol: f64) -> Result<Vec<f64>, StepError> {
        let n = x.len();
        let mut f = vec![0.0; n];
        let mut trial_f = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut trial = vec![0.0; n];
        let mut norm = self.residual(&x, &mut f)?;
        for _ in 0..max_iter {
            if norm <= tol {
                return Ok(x);
            }
            for i in 0..n {
                diag[i] = self.shift + self.pot.derivatives(x[i], self.lambda)?.1;
            }
            let rhs: Vec<f64> = f.iter().map(|v| -v).collect();
            let inner_tol = lin_tol.min((1e-2 * norm).max(1e-13));
            let step = self.direction(&diag, &rhs, inner_tol, norm)?;

            let mut alpha = 1.0;
            let mut ever_inside = false;
            let mut accepted = false;
            for _ in 0..=MAX_HALVINGS {
                for i in 0..n {
                    trial[i] = x[i] + alpha * step[i];
                }
                if trial.iter().all(|&v| v > ENDPOINT_GUARD && v < 1.0 - ENDPOINT_GUARD) {
                    ever_inside = true;
                    let trial_norm = self.residual(&trial, &mut trial_f)?;
                    if trial_norm < norm {
                        core::mem::swap(&mut x, &mut trial);
                        core::mem::swap(&mut f, &mut trial_f);
                        norm = trial_norm;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !accepted {
                return Err(if ever_inside {
                    StepError::NewtonDiverged { iterations: max_iter, residual: norm }
                } else {
                    StepError::ConfinementLost
                });
            }
        }
        if norm <= tol {
            Ok(x)
        } else {
            Err(StepError::NewtonDiverged { iterations: max_iter, residual: norm })
        }
    }
}

/// Implicit order-parameter step against the delayed chemical potential.
pub fn rho_step(
    pot: &PotentialSpec,
    rho_old: &Field,
    mu_delayed: &Field,
    cfg: &SolverConfig,
) -> Result<Field, StepError> {
    if rho_old.grid() != mu_delayed.grid() {
        return Err(StepError::Grid(GridError::GridMismatch));
    }
    let attempt = |lambda: f64| {
        let problem = Semilinear {
            pot,
            grid: rho_old.grid(),
            lambda,
            shift: cfg.delta / cfg.dt,
            anchor: rho_old.values(),
            source: mu_delayed.values(),
        };
        problem.solve(rho_old.values().to_vec(), cfg.newton_tol, cfg.newton_max_iter, cfg.lin_tol)
    };
    let values = match attempt(cfg.lambda) {
        Err(e) if cfg.lambda == 0.0 && e.is_solver_failure() => attempt(FALLBACK_LAMBDA).map_err(|_| e)?,
        other => other?,
    };
    Ok(Field::new(*rho_old.grid(), values)?)
}

/// Linear chemical-potential step.
pub fn mu_step(mu_old: &Field, rho_old: &Field, rho_new: &Field, cfg: &SolverConfig) -> Result<Field, StepError> {
    let grid = mu_old.grid();
    if grid != rho_old.grid() || grid != rho_new.grid() {
        return Err(StepError::Grid(GridError::GridMismatch));
    }
    let (r0, r1, m0) = (rho_old.values(), rho_new.values(), mu_old.values());
    let diag: Vec<f64> = r0.iter().zip(r1).map(|(a, b)| cfg.eps + a + b).collect();
    let rhs: Vec<f64> = r0.iter().zip(m0).map(|(a, m)| (cfg.eps + 2.0 * a) * m).collect();
    let sys = DiagPlusLaplacian { grid, diag: &diag, coeff: cfg.dt };
    let values = sys.solve(&rhs, m0, cfg.lin_tol)?;
    Ok(Field::new(*grid, values)?)
}

/// One full step; pushes the new `mu` into `buffer`.
pub fn advance(
    pot: &PotentialSpec,
    state: &State,
    buffer: &mut DelayBuffer,
    cfg: &SolverConfig,
) -> Result<State, StepError> {
    let t_next = state.t + cfg.dt;
    let g = delayed_mu(buffer, t_next, cfg)?;
    let rho = rho_step(pot, &state.rho, g, cfg)?;
    let mu = mu_step(&state.mu, &state.rho, &rho, cfg)?;
    let grid = state.grid();
    let drho: Vec<f64> = rho.values().iter().zip(state.rho.values()).map(|(a, b)| a - b).collect();
    let cum_grad_mu = state.cum_grad_mu + cfg.dt * grad_sq_integral(&mu);
    let cum_dtrho_sq = state.cum_dtrho_sq + cfg.delta / cfg.dt * grid.dot(&drho, &drho);
    buffer.push(t_next, mu.clone());
    Ok(State { t: t_next, mu, rho, cum_grad_mu, cum_dtrho_sq })
}

/// Stored snapshots of a run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub steps: Vec<usize>,
    pub states: Vec<State>,
}

impl Trajectory {
    pub fn push(&mut self, step: usize, state: State) {
        self.steps.push(step);
        self.states.push(state);
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn first(&self) -> Option<&State> {
        self.states.first()
    }

    pub fn last(&self) -> Option<&State> {
        self.states.last()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunControl {
    pub snapshot_every: usize,
    pub sink_every: usize,
}

impl Default for RunControl {
    fn default() -> Self {
        Self { snapshot_every: 100, sink_every: 1 }
    }
}

/// Passed to the diagnostics sink. At step 0 `prev` and `state` coincide.
#[derive(Clone, Copy, Debug)]
pub struct StepEvent<'a> {
    pub step: usize,
    pub prev: &'a State,
    pub state: &'a State,
}

/// A run that stopped early. `trajectory` holds everything stored up to and
/// including the last accepted state.
#[derive(Clone, Debug)]
pub struct SimulationFailure {
    pub error: StepError,
    pub trajectory: Trajectory,
}

impl fmt::Display for SimulationFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.trajectory.last() {
            Some(s) => write!(f, "{} (last valid state at t = {})", self.error, s.t),
            None => write!(f, "{}", self.error),
        }
    }
}

impl core::error::Error for SimulationFailure {}

/// Number of steps needed to reach `t_end` from `t0`.
pub fn step_count(t0: f64, t_end: f64, dt: f64) -> usize {
    if t_end <= t0 {
        0
    } else {
        math::ceil((t_end - t0) / dt - 1e-9) as usize
    }
}

/// Runs from `init` until `t >= t_end`. Snapshots are stored every
/// `control.snapshot_every` steps plus the first and last states; the sink
/// sees step 0, every `control.sink_every`-th step and the final step.
pub fn simulate(
    pot: &PotentialSpec,
    init: State,
    cfg: &SolverConfig,
    t_end: f64,
    control: RunControl,
    mut sink: impl FnMut(&StepEvent<'_>),
) -> Result<Trajectory, SimulationFailure> {
    let mut trajectory = Trajectory::default();
    if let Err(error) = cfg.validate().and_then(|_| init.check_data()) {
        return Err(SimulationFailure { error, trajectory });
    }
    let snapshot_every = control.snapshot_every.max(1);
    let sink_every = control.sink_every.max(1);
    let n_steps = step_count(init.t, t_end, cfg.dt);
    let t0 = init.t;

    let mut buffer = DelayBuffer::new(&init, cfg);
    sink(&StepEvent { step: 0, prev: &init, state: &init });
    trajectory.push(0, init.clone());
    let mut state = init;
    for step in 1..=n_steps {
        let mut next = match advance(pot, &state, &mut buffer, cfg) {
            Ok(s) => s,
            Err(error) => {
                if trajectory.steps.last() != Some(&(step - 1)) {
                    trajectory.push(step - 1, state);
                }
                return Err(SimulationFailure { error, trajectory });
            }
        };
        // keep t free of accumulated rounding
        next.t = t0 + step as f64 * cfg.dt;
        if step % sink_every == 0 || step == n_steps {
            sink(&StepEvent { step, prev: &state, state: &next });
        }
        if step % snapshot_every == 0 || step == n_steps {
            trajectory.push(step, next.clone());
        }
        state = next;
    }
    Ok(trajectory)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pot() -> PotentialSpec {
        PotentialSpec::logarithmic(1.0, 3.0).unwrap()
    }

    fn line(n: usize) -> Grid {
        Grid::line(n, 1.0).unwrap()
    }

    fn bisect(mut a: f64, mut b: f64, g: impl Fn(f64) -> f64) -> f64 {
        let increasing = g(b) > g(a);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if (g(m) > 0.0) == increasing {
                b = m;
            } else {
                a = m;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn config_validation() {
        let ok = SolverConfig::new(1.0, 1.0, 1e-3);
        assert!(ok.validate().is_ok());
        assert!(ok.with_tau(4e-3).validate().is_ok());
        assert_eq!(ok.with_tau(4e-3).delay_steps(), 4);
        assert!(ok.with_tau(4.5e-3).validate().is_err());
        assert!(ok.with_lambda(-1.0).validate().is_err());
        assert!(SolverConfig::new(0.0, 1.0, 1e-3).validate().is_err());
        assert!(SolverConfig::new(1.0, -1.0, 1e-3).validate().is_err());
        assert!(SolverConfig::new(1.0, 1.0, 0.0).validate().is_err());
    }

    #[test]
    fn initial_data_hypotheses() {
        let g = line(4);
        let mut mu = Field::constant(g, 1.0);
        mu.values_mut()[2] = -1e-3;
        assert!(matches!(
            State::initial(mu, Field::constant(g, 0.5)),
            Err(StepError::DataHypothesis(_))
        ));
        assert!(State::initial(Field::constant(g, 0.0), Field::constant(g, 1.0)).is_err());
        assert!(State::initial(Field::constant(g, 0.0), Field::constant(g, 0.0)).is_err());
        assert!(State::initial(Field::constant(g, 0.0), Field::constant(g, 0.2)).is_ok());
    }

    #[test]
    fn singular_jacobian_is_regularized() {
        // delta/dt + f''(0.5) = 2 - 2 = 0 makes the first Newton matrix singular
        let g = line(8);
        let cfg = SolverConfig::new(1.0, 1.0, 0.5);
        let next = rho_step(&pot(), &Field::constant(g, 0.5), &Field::constant(g, 1.0), &cfg).unwrap();
        let r = next.values()[0];
        let h = 2.0 * (r - 0.5) + (r / (1.0 - r)).ln() + 3.0 - 6.0 * r - 1.0;
        assert!(h.abs() < 1e-9);
    }

    #[test]
    fn delay_lookup() {
        let g = line(2);
        let dt = 0.1;
        let cfg = SolverConfig::new(1.0, 1.0, dt).with_tau(2.0 * dt);
        let init = State::initial(Field::constant(g, 7.0), Field::constant(g, 0.5)).unwrap();
        let mut buf = DelayBuffer::new(&init, &cfg);
        assert_eq!(buf.depth(), 3);
        assert_eq!(delayed_mu(&buf, cfg.tau / 2.0, &cfg).unwrap().values()[0], 7.0);
        for k in 1..=2 {
            buf.push(k as f64 * dt, Field::constant(g, k as f64));
        }
        // t = 3 dt reads the entry stored at dt
        assert_eq!(delayed_mu(&buf, 3.0 * dt, &cfg).unwrap().values()[0], 1.0);
        assert_eq!(delayed_mu(&buf, 2.0 * dt, &cfg).unwrap().values()[0], 7.0);
        buf.push(3.0 * dt, Field::constant(g, 3.0));
        assert_eq!(buf.len(), 3);
        assert_eq!(delayed_mu(&buf, 4.0 * dt, &cfg).unwrap().values()[0], 2.0);
        buf.push(4.0 * dt, Field::constant(g, 4.0));
        assert!(matches!(delayed_mu(&buf, 3.0 * dt, &cfg), Err(StepError::BufferUnderrun { .. })));
        assert!(matches!(delayed_mu(&buf, 4.5 * dt, &cfg), Err(StepError::BufferUnderrun { .. })));

        let lagged = SolverConfig::new(1.0, 1.0, dt);
        let mut buf = DelayBuffer::new(&init, &lagged);
        buf.push(dt, Field::constant(g, 4.0));
        assert_eq!(delayed_mu(&buf, 2.0 * dt, &lagged).unwrap().values()[0], 4.0);
    }

    #[test]
    fn constant_history() {
        let g = line(3);
        let dt = 0.01;
        let cfg = SolverConfig::new(1.0, 1.0, dt).with_tau(3.0 * dt);
        let init = State::initial(Field::constant(g, 0.4), Field::constant(g, 0.5)).unwrap();
        let mut buf = DelayBuffer::new(&init, &cfg);
        for k in 1..10 {
            buf.push(k as f64 * dt, Field::constant(g, 0.4));
            let d = delayed_mu(&buf, (k + 1) as f64 * dt, &cfg).unwrap();
            assert!(d.values().iter().all(|&v| v == 0.4));
        }
    }

    #[test]
    fn rho_step_fixed_point() {
        let g = line(8);
        let cfg = SolverConfig::new(1.0, 1.0, 1e-2);
        let rho = Field::constant(g, 0.5);
        let out = rho_step(&pot(), &rho, &Field::constant(g, 0.0), &cfg).unwrap();
        assert_eq!(out, rho);
    }

    #[test]
    fn rho_step_homogeneous_matches_scalar_root() {
        let g = line(5);
        let cfg = SolverConfig::new(1.0, 1.0, 1e-3);
        let p = pot();
        let out = rho_step(&p, &Field::constant(g, 0.3), &Field::constant(g, 2.0), &cfg).unwrap();
        let oracle = bisect(0.2, 0.4, |r| (r - 0.3) / 1e-3 + (r / (1.0 - r)).ln() + 3.0 * (1.0 - 2.0 * r) - 2.0);
        for v in out.values() {
            assert!((v - oracle).abs() < 1e-12, "{v} vs {oracle}");
        }
    }

    #[test]
    fn rho_step_yosida_consistent() {
        let g = line(32);
        let p = pot();
        let rho = Field::from_fn(g, |x| 0.5 + 0.3 * (core::f64::consts::PI * x[0]).cos());
        let mu = Field::from_fn(g, |x| 1.0 + x[0]);
        let exact = rho_step(&p, &rho, &mu, &SolverConfig::new(1.0, 1.0, 1e-2)).unwrap();
        let reg = rho_step(&p, &rho, &mu, &SolverConfig::new(1.0, 1.0, 1e-2).with_lambda(1e-6)).unwrap();
        assert!(exact.sup_distance(&reg) < 1e-5);
        assert!(exact.sup_distance(&reg) > 0.0);
    }

    #[test]
    fn mu_step_constant_and_homogeneous() {
        let g = line(6);
        let cfg = SolverConfig::new(1.0, 1.0, 1e-2);
        let rho = Field::constant(g, 0.4);
        let mu = Field::constant(g, 1.7);
        let out = mu_step(&mu, &rho, &rho, &cfg).unwrap();
        assert!(out.sup_distance(&mu) < 1e-14);

        let rho_new = Field::constant(g, 0.45);
        let out = mu_step(&mu, &rho, &rho_new, &cfg).unwrap();
        let expected = (1.0 + 0.8) * 1.7 / (1.0 + 0.8 + 0.05);
        for v in out.values() {
            assert!((v - expected).abs() < 1e-13);
        }
    }

    #[test]
    fn mu_step_keeps_sign_2d() {
        let g = Grid::rect(10, 8, 1.0, 1.0).unwrap();
        let cfg = SolverConfig::new(0.1, 1.0, 5e-2);
        let mu = Field::from_fn(g, |x| if x[0] < 0.3 { 2.0 } else { 0.0 });
        let rho = Field::from_fn(g, |x| 0.2 + 0.6 * x[1]);
        let rho_new = Field::from_fn(g, |x| 0.1 + 0.8 * x[0] * x[1]);
        let out = mu_step(&mu, &rho, &rho_new, &cfg).unwrap();
        assert!(out.min() >= -1e-9, "{}", out.min());
    }

    #[test]
    fn stationary_pair_is_fixed() {
        let g = line(10);
        let cfg = SolverConfig::new(1.0, 1.0, 1e-2);
        let init = State::initial(Field::constant(g, 0.0), Field::constant(g, 0.5)).unwrap();
        let mut buf = DelayBuffer::new(&init, &cfg);
        let next = advance(&pot(), &init, &mut buf, &cfg).unwrap();
        assert_eq!(next.mu, init.mu);
        assert_eq!(next.rho, init.rho);
        assert_eq!(next.t, 1e-2);
        assert_eq!(next.cum_grad_mu, 0.0);
    }

    #[test]
    fn simulate_zero_horizon() {
        let g = line(4);
        let init = State::initial(Field::constant(g, 1.0), Field::constant(g, 0.3)).unwrap();
        let mut calls = 0;
        let traj = simulate(&pot(), init.clone(), &SolverConfig::new(1.0, 1.0, 1e-2), 0.0, RunControl::default(), |_| {
            calls += 1
        })
        .unwrap();
        assert_eq!(traj.states, vec![init]);
        assert_eq!(calls, 1);
    }

    #[test]
    fn step_counting() {
        assert_eq!(step_count(0.0, 1.0, 1e-3), 1000);
        assert_eq!(step_count(0.0, 1.0, 0.3), 4);
        assert_eq!(step_count(0.0, 0.0, 0.3), 0);
    }
}
