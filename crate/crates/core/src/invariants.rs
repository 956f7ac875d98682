//! Discrete counterparts of the a priori identities and of the level-set
//! (De Giorgi) bound.
//!
//! Two balance laws hold for smooth solutions:
//!
//! ```text
//! int (eps/2 + rho) mu^2 (t) + int_0^t int |grad mu|^2 = int (eps/2 + rho0) mu0^2
//!
//! delta int_0^t ||d_t rho||^2 + 1/2 ||grad rho(t)||^2 + int f(rho(t))
//!   = 1/2 ||grad rho0||^2 + int f(rho0) + eps int (mu(t) - mu0) + 2 int (rho mu (t) - rho0 mu0)
//! ```
//!
//! The scheme satisfies both up to O(dt), so the defects measured here are
//! first-order quantities.

use alloc::vec::Vec;
use core::fmt;

use crate::grid::{grad_sq_integral, integrate, l2_norm, laplacian_neumann, Field, Grid};
use crate::math;
use crate::potential::{PotentialError, PotentialSpec};
use crate::stepper::{SolverConfig, State, Trajectory};

#[derive(Clone, Debug, PartialEq)]
pub enum InvariantError {
    /// The conserved quantity vanishes at `t = 0`; the absolute drift is
    /// reported instead.
    Degenerate { absolute_drift: f64 },
    EmptyTrajectory,
    IndexOutOfRange(usize),
    InvalidParameter(&'static str),
    Potential(PotentialError),
}

impl fmt::Display for InvariantError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Degenerate { absolute_drift } => write!(
                f,
                "initial weighted energy is zero; absolute drift {absolute_drift:e}"
            ),
            Self::EmptyTrajectory => f.write_str("trajectory has no snapshots"),
            Self::IndexOutOfRange(i) => write!(f, "snapshot index {i} out of range"),
            Self::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            Self::Potential(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for InvariantError {}

impl From<PotentialError> for InvariantError {
    fn from(e: PotentialError) -> Self {
        Self::Potential(e)
    }
}

/// `int (eps/2 mu^2 + rho mu^2)`.
pub fn weighted_mu_energy(state: &State, eps: f64) -> f64 {
    let g = state.grid();
    state
        .mu
        .values()
        .iter()
        .zip(state.rho.values())
        .enumerate()
        .map(|(i, (m, r))| g.weight(i) * (0.5 * eps + r) * m * m)
        .sum()
}

fn potential_energy(pot: &PotentialSpec, rho: &Field) -> Result<f64, PotentialError> {
    let g = rho.grid();
    let mut s = 0.0;
    for (i, &r) in rho.values().iter().enumerate() {
        s += g.weight(i) * pot.f(r)?;
    }
    Ok(s)
}

/// The `t = 0` values both balance laws are compared against.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Baseline {
    /// `int (eps/2 + rho0) mu0^2`.
    pub energy0: f64,
    /// `1/2 ||grad rho0||^2 + int f(rho0) - eps int mu0 - 2 int rho0 mu0`.
    pub lyapunov0: f64,
}

impl Baseline {
    pub fn new(pot: &PotentialSpec, cfg: &SolverConfig, init: &State) -> Result<Self, PotentialError> {
        let g = init.grid();
        Ok(Self {
            energy0: weighted_mu_energy(init, cfg.eps),
            lyapunov0: 0.5 * grad_sq_integral(&init.rho) + potential_energy(pot, &init.rho)?
                - cfg.eps * integrate(&init.mu)
                - 2.0 * g.dot(init.rho.values(), init.mu.values()),
        })
    }

    fn drift(&self, lhs: f64) -> f64 {
        let d = math::abs(lhs - self.energy0);
        if self.energy0 > 0.0 {
            d / self.energy0
        } else {
            d
        }
    }
}

/// Both sides of the integrated energy identity at one state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LyapunovSides {
    pub lhs: f64,
    pub rhs: f64,
}

impl LyapunovSides {
    pub fn residual(&self) -> f64 {
        math::abs(self.lhs - self.rhs) / (1.0 + math::abs(self.rhs))
    }
}

pub fn lyapunov_sides(
    pot: &PotentialSpec,
    cfg: &SolverConfig,
    baseline: &Baseline,
    state: &State,
) -> Result<LyapunovSides, PotentialError> {
    let g = state.grid();
    let rho = &state.rho;
    let lhs = state.cum_dtrho_sq + 0.5 * grad_sq_integral(rho) + potential_energy(pot, rho)?;
    let rhs = baseline.lyapunov0 + cfg.eps * integrate(&state.mu) + 2.0 * g.dot(rho.values(), state.mu.values());
    Ok(LyapunovSides { lhs, rhs })
}

/// Per-step diagnostics row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub min_mu: f64,
    pub max_mu: f64,
    pub min_rho: f64,
    pub max_rho: f64,
    pub weighted_mu_energy: f64,
    pub cum_grad_mu: f64,
    pub conservation_drift: f64,
    pub lyapunov_lhs: f64,
    pub lyapunov_rhs: f64,
    pub lyapunov_residual: f64,
    pub dtrho_l2: f64,
    pub grad_mu_l2: f64,
    pub mu_oscillation: f64,
}

impl DiagnosticsRecord {
    /// Diagnostics of `state`; `prev` is the level before it (equal to
    /// `state` at `t = 0`, which gives a zero time derivative).
    pub fn compute(
        pot: &PotentialSpec,
        cfg: &SolverConfig,
        baseline: &Baseline,
        prev: &State,
        state: &State,
    ) -> Result<Self, PotentialError> {
        let energy = weighted_mu_energy(state, cfg.eps);
        let sides = lyapunov_sides(pot, cfg, baseline, state)?;
        let dt = state.t - prev.t;
        let dtrho_l2 = if dt > 0.0 {
            let d: Vec<f64> = state.rho.values().iter().zip(prev.rho.values()).map(|(a, b)| (a - b) / dt).collect();
            math::sqrt(state.grid().dot(&d, &d))
        } else {
            0.0
        };
        let (min_mu, max_mu) = (state.mu.min(), state.mu.max());
        Ok(Self {
            t: state.t,
            min_mu,
            max_mu,
            min_rho: state.rho.min(),
            max_rho: state.rho.max(),
            weighted_mu_energy: energy,
            cum_grad_mu: state.cum_grad_mu,
            conservation_drift: baseline.drift(energy + state.cum_grad_mu),
            lyapunov_lhs: sides.lhs,
            lyapunov_rhs: sides.rhs,
            lyapunov_residual: sides.residual(),
            dtrho_l2,
            grad_mu_l2: math::sqrt(grad_sq_integral(&state.mu)),
            mu_oscillation: max_mu - min_mu,
        })
    }
}

/// Largest relative defect of the first balance law over the snapshots.
pub fn first_estimate_drift(trajectory: &Trajectory, cfg: &SolverConfig) -> Result<f64, InvariantError> {
    let init = trajectory.first().ok_or(InvariantError::EmptyTrajectory)?;
    let e0 = weighted_mu_energy(init, cfg.eps);
    let worst = trajectory
        .states
        .iter()
        .map(|s| math::abs(weighted_mu_energy(s, cfg.eps) + s.cum_grad_mu - e0))
        .fold(0.0, f64::max);
    if e0 > 0.0 {
        Ok(worst / e0)
    } else {
        Err(InvariantError::Degenerate { absolute_drift: worst })
    }
}

/// `|LHS - RHS| / (1 + |RHS|)` of the integrated energy identity at snapshot
/// `index`.
pub fn lyapunov_identity_residual(
    pot: &PotentialSpec,
    trajectory: &Trajectory,
    cfg: &SolverConfig,
    index: usize,
) -> Result<f64, InvariantError> {
    let init = trajectory.first().ok_or(InvariantError::EmptyTrajectory)?;
    let state = trajectory.states.get(index).ok_or(InvariantError::IndexOutOfRange(index))?;
    let baseline = Baseline::new(pot, cfg, init)?;
    Ok(lyapunov_sides(pot, cfg, &baseline, state)?.residual())
}

/// L2 norm of the defect of the pointwise identity
/// `delta (d_t rho)^2 - d_t rho lap rho + f'(rho) d_t rho = eps d_t mu + 2 d_t(rho mu) - lap mu`
/// between two consecutive levels.
pub fn pointwise_identity_residual(
    pot: &PotentialSpec,
    prev: &State,
    next: &State,
    cfg: &SolverConfig,
) -> Result<f64, InvariantError> {
    let dt = next.t - prev.t;
    if !(dt > 0.0) {
        return Err(InvariantError::InvalidParameter("snapshots must be increasing in time"));
    }
    let lap_rho = laplacian_neumann(&next.rho);
    let lap_mu = laplacian_neumann(&next.mu);
    let mut defect = Vec::with_capacity(next.rho.len());
    for i in 0..next.rho.len() {
        let (r0, r1) = (prev.rho.values()[i], next.rho.values()[i]);
        let (m0, m1) = (prev.mu.values()[i], next.mu.values()[i]);
        let drho = (r1 - r0) / dt;
        let (fp, _) = pot.derivatives(r1, cfg.lambda)?;
        let lhs = cfg.delta * drho * drho - drho * lap_rho.values()[i] + fp * drho;
        let rhs = cfg.eps * (m1 - m0) / dt + 2.0 * (r1 * m1 - r0 * m0) / dt - lap_mu.values()[i];
        defect.push(lhs - rhs);
    }
    let grid = next.grid();
    Ok(l2_norm(&Field::new(*grid, defect).map_err(|_| InvariantError::InvalidParameter("non-finite defect"))?))
}

/// Level-set data for the `L^inf` bound on `mu`.
#[derive(Clone, Debug, PartialEq)]
pub struct DeGiorgiReport {
    /// `||mu0||_inf`.
    pub mu0_star: f64,
    pub m: f64,
    /// `M = m * mu0_star`.
    pub level_base: f64,
    /// `k_j = M (2 - 2^-j)`.
    pub k_levels: Vec<f64>,
    /// `S_j = ||chi_{k_j}||` in `L^{7/4}(0,T; L^{7/2})`.
    pub s_levels: Vec<f64>,
    /// The same norms computed as `||chi_{k_j}||_{L^2(L^4)}^{8/7}`.
    pub s_levels_l2l4: Vec<f64>,
    /// `|||(mu - k_j)^+|||`, where `|||v|||^2 = sup_t ||v||_2^2 + int int |grad v|^2`.
    pub triple_norms: Vec<f64>,
    /// `||(mu - k_j)^+||_{L^2(L^4)} / |||(mu - k_j)^+|||`; 0 when both vanish.
    pub embedding_ratios: Vec<f64>,
    pub sup_mu_observed: f64,
    /// First `j` with `S_j = 0`.
    pub first_zero_level: Option<usize>,
    /// `sup mu <= 2 M`.
    pub bounded_by_two_m: bool,
}

impl DeGiorgiReport {
    /// Empirical embedding constant: largest ratio over the levels.
    pub fn embedding_constant(&self) -> f64 {
        self.embedding_ratios.iter().copied().fold(0.0, f64::max)
    }
}

/// Rectangle-rule time weights: snapshot `s >= 1` carries `t_s - t_{s-1}`.
fn time_weights(trajectory: &Trajectory) -> Vec<f64> {
    let st = &trajectory.states;
    (0..st.len()).map(|s| if s == 0 { 0.0 } else { st[s].t - st[s - 1].t }).collect()
}

/// Level sequence `k_j = M (2 - 2^-j)`, `j = 0..=j_max`.
pub fn degiorgi_levels(level_base: f64, j_max: usize) -> Vec<f64> {
    let mut p = 1.0;
    (0..=j_max)
        .map(|_| {
            let k = level_base * (2.0 - p);
            p *= 0.5;
            k
        })
        .collect()
}

pub fn degiorgi_diagnostic(trajectory: &Trajectory, m: f64, j_max: usize) -> Result<DeGiorgiReport, InvariantError> {
    if !(m > 1.0 && m.is_finite()) {
        return Err(InvariantError::InvalidParameter("m must exceed 1"));
    }
    let init = trajectory.first().ok_or(InvariantError::EmptyTrajectory)?;
    let mu0_star = init.mu.values().iter().map(|v| math::abs(*v)).fold(0.0, f64::max);
    if mu0_star == 0.0 {
        return Err(InvariantError::InvalidParameter("mu0 vanishes identically"));
    }
    let level_base = m * mu0_star;
    let k_levels = degiorgi_levels(level_base, j_max);
    let weights = time_weights(trajectory);
    let grid: Grid = *init.grid();
    let sup_mu_observed = trajectory.states.iter().map(|s| s.mu.max()).fold(f64::NEG_INFINITY, f64::max);

    let mut s_levels = Vec::with_capacity(k_levels.len());
    let mut s_levels_l2l4 = Vec::with_capacity(k_levels.len());
    let mut triple_norms = Vec::with_capacity(k_levels.len());
    let mut embedding_ratios = Vec::with_capacity(k_levels.len());
    for &k in &k_levels {
        let mut sum_72 = 0.0; // sum dt (int chi^{7/2})^{(2/7)(7/4)}
        let mut sum_l4 = 0.0; // sum dt (int chi^4)^{2/4}
        let mut sup_l2: f64 = 0.0;
        let mut grad_int = 0.0;
        let mut v_l2l4 = 0.0;
        for (s, state) in trajectory.states.iter().enumerate() {
            let mu = state.mu.values();
            // chi^{7/2} = chi^4 = chi, so both integrals are the measure of
            // the level set; the two norms differ only in the exponents.
            let level_measure: f64 =
                mu.iter().enumerate().filter(|(_, &x)| x > k).map(|(i, _)| grid.weight(i)).sum();
            sum_72 += weights[s] * math::powf(math::powf(level_measure, 2.0 / 7.0), 7.0 / 4.0);
            sum_l4 += weights[s] * math::powf(math::powf(level_measure, 0.25), 2.0);

            let cut = state.mu.map(|x| (x - k).max(0.0));
            sup_l2 = sup_l2.max(grid.dot(cut.values(), cut.values()));
            grad_int += weights[s] * grad_sq_integral(&cut);
            let l4: f64 = cut.values().iter().enumerate().map(|(i, v)| grid.weight(i) * v * v * v * v).sum();
            v_l2l4 += weights[s] * math::sqrt(l4);
        }
        s_levels.push(math::powf(sum_72, 4.0 / 7.0));
        s_levels_l2l4.push(math::powf(math::sqrt(sum_l4), 8.0 / 7.0));
        let triple = math::sqrt(sup_l2 + grad_int);
        triple_norms.push(triple);
        let lhs = math::sqrt(v_l2l4);
        embedding_ratios.push(if triple > 0.0 { lhs / triple } else { 0.0 });
    }
    let first_zero_level = s_levels.iter().position(|&s| s == 0.0);
    Ok(DeGiorgiReport {
        mu0_star,
        m,
        level_base,
        k_levels,
        s_levels,
        s_levels_l2l4,
        triple_norms,
        embedding_ratios,
        sup_mu_observed,
        first_zero_level,
        bounded_by_two_m: sup_mu_observed <= 2.0 * level_base,
    })
}

/// Candidate confinement levels derived from `g = mu - f2'(rho)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConfinementReport {
    pub inf_g: f64,
    pub sup_g: f64,
    /// Largest grid level `r` with `f1'(r) <= inf g`, 0 if none.
    pub r_lower_candidate: f64,
    /// Smallest grid level `r` with `f1'(r) >= sup g`, 1 if none.
    pub r_upper_candidate: f64,
    pub initial_min_rho: f64,
    pub initial_max_rho: f64,
    pub observed_min_rho: f64,
    pub observed_max_rho: f64,
}

impl ConfinementReport {
    pub fn lower_bound(&self) -> f64 {
        self.r_lower_candidate.min(self.initial_min_rho)
    }

    pub fn upper_bound(&self) -> f64 {
        self.r_upper_candidate.max(self.initial_max_rho)
    }

    pub fn respected(&self) -> bool {
        self.observed_min_rho >= self.lower_bound() && self.observed_max_rho <= self.upper_bound()
    }
}

/// Resolution of the level search in [`confinement_bounds`].
pub const CONFINEMENT_LEVELS: u32 = 1 << 20;

pub fn confinement_bounds(pot: &PotentialSpec, trajectory: &Trajectory) -> Result<ConfinementReport, InvariantError> {
    let init = trajectory.first().ok_or(InvariantError::EmptyTrajectory)?;
    let mut inf_g = f64::INFINITY;
    let mut sup_g = f64::NEG_INFINITY;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for s in &trajectory.states {
        for (&m, &r) in s.mu.values().iter().zip(s.rho.values()) {
            let g = m - pot.f2_prime(r)?;
            inf_g = inf_g.min(g);
            sup_g = sup_g.max(g);
        }
        lo = lo.min(s.rho.min());
        hi = hi.max(s.rho.max());
    }
    let n = CONFINEMENT_LEVELS;
    let level = |k: u32| k as f64 / n as f64;
    let f1p = |k: u32| pot.f1_prime(level(k));

    // largest k with f1'(k/n) <= inf_g; f1' is nondecreasing
    let r_lower_candidate = if f1p(1)? > inf_g {
        0.0
    } else {
        let (mut a, mut b) = (1u32, n - 1);
        if f1p(b)? <= inf_g {
            a = b;
        }
        while b - a > 1 {
            let mid = a + (b - a) / 2;
            if f1p(mid)? <= inf_g {
                a = mid;
            } else {
                b = mid;
            }
        }
        level(a)
    };
    // smallest k with f1'(k/n) >= sup_g
    let r_upper_candidate = if f1p(n - 1)? < sup_g {
        1.0
    } else {
        let (mut a, mut b) = (1u32, n - 1);
        if f1p(a)? >= sup_g {
            b = a;
        }
        while b - a > 1 {
            let mid = a + (b - a) / 2;
            if f1p(mid)? >= sup_g {
                b = mid;
            } else {
                a = mid;
            }
        }
        level(b)
    };
    Ok(ConfinementReport {
        inf_g,
        sup_g,
        r_lower_candidate,
        r_upper_candidate,
        initial_min_rho: init.rho.min(),
        initial_max_rho: init.rho.max(),
        observed_min_rho: lo,
        observed_max_rho: hi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stepper::{simulate, RunControl};
    use alloc::vec;

    fn pot() -> PotentialSpec {
        PotentialSpec::logarithmic(1.0, 3.0).unwrap()
    }

    fn stationary(n: usize) -> Trajectory {
        let g = Grid::line(n, 1.0).unwrap();
        let init = State::initial(Field::constant(g, 0.0), Field::constant(g, 0.5)).unwrap();
        let cfg = SolverConfig::new(1.0, 1.0, 1e-2);
        simulate(&pot(), init, &cfg, 0.1, RunControl { snapshot_every: 1, sink_every: 1 }, |_| {}).unwrap()
    }

    #[test]
    fn zero_mu_is_degenerate_with_zero_drift() {
        let traj = stationary(8);
        let cfg = SolverConfig::new(1.0, 1.0, 1e-2);
        assert_eq!(first_estimate_drift(&traj, &cfg), Err(InvariantError::Degenerate { absolute_drift: 0.0 }));
    }

    #[test]
    fn stationary_residuals_vanish() {
        let traj = stationary(8);
        let cfg = SolverConfig::new(1.0, 1.0, 1e-2);
        for i in 0..traj.len() {
            assert!(lyapunov_identity_residual(&pot(), &traj, &cfg, i).unwrap() < 1e-15);
        }
        for w in traj.states.windows(2) {
            assert_eq!(pointwise_identity_residual(&pot(), &w[0], &w[1], &cfg).unwrap(), 0.0);
        }
        assert!(lyapunov_identity_residual(&pot(), &traj, &cfg, 999).is_err());
    }

    #[test]
    fn stationary_positive_mu_has_zero_drift() {
        let g = Grid::line(6, 1.0).unwrap();
        let init = State::initial(Field::constant(g, 1.0), Field::constant(g, 0.5)).unwrap();
        let cfg = SolverConfig::new(1.0, 1.0, 1e-2);
        // (mu, rho) = (1, rho_s) with f'(rho_s) = 1 is steady; 0.5 is not, so
        // only check t = 0 here
        let traj = Trajectory { steps: vec![0], states: vec![init] };
        assert!(first_estimate_drift(&traj, &cfg).unwrap() < 1e-15);
        assert!(lyapunov_identity_residual(&pot(), &traj, &cfg, 0).unwrap() < 1e-15);
    }

    #[test]
    fn levels_follow_formula() {
        let k = degiorgi_levels(1.0, 5);
        assert_eq!(k, vec![1.0, 1.5, 1.75, 1.875, 1.9375, 1.96875]);
        let k = degiorgi_levels(3.0, 60);
        for (j, kj) in k.iter().enumerate() {
            assert_eq!(*kj, 3.0 * (2.0 - 2f64.powi(-(j as i32))));
        }
        assert!(k.windows(2).all(|w| w[0] <= w[1]));
    }

    fn synthetic(values: &[&[f64]]) -> Trajectory {
        let g = Grid::line(values[0].len() - 1, 1.0).unwrap();
        let mut t = Trajectory::default();
        for (s, v) in values.iter().enumerate() {
            let mu = Field::new(g, v.to_vec()).unwrap();
            t.push(s, State { t: s as f64 * 0.5, mu, rho: Field::constant(g, 0.5), cum_grad_mu: 0.0, cum_dtrho_sq: 0.0 });
        }
        t
    }

    #[test]
    fn empty_level_sets_below_m() {
        let traj = synthetic(&[&[1.0, 0.5, 0.0], &[0.9, 0.8, 0.7], &[1.0, 1.0, 1.0]]);
        let rep = degiorgi_diagnostic(&traj, 2.0, 10).unwrap();
        assert_eq!(rep.level_base, 2.0);
        assert!(rep.s_levels.iter().all(|&s| s == 0.0));
        assert_eq!(rep.first_zero_level, Some(0));
        assert!(rep.bounded_by_two_m);
    }

    #[test]
    fn level_norms_nest_and_agree() {
        let traj = synthetic(&[&[1.0, 0.5, 0.0, 0.2], &[1.5, 2.5, 1.0, 0.3], &[3.9, 2.2, 1.9, 1.1]]);
        let rep = degiorgi_diagnostic(&traj, 1.5, 30).unwrap();
        assert!(rep.s_levels[0] > 0.0);
        assert!(rep.s_levels.windows(2).all(|w| w[1] <= w[0]));
        for (a, b) in rep.s_levels.iter().zip(&rep.s_levels_l2l4) {
            assert!((a - b).abs() <= 1e-14 * a.max(1.0));
        }
        assert!(rep.triple_norms.windows(2).all(|w| w[1] <= w[0]));
        // sup mu = 3.9 > 2M = 3 ⇒ never empty
        assert!(!rep.bounded_by_two_m);
        assert_eq!(rep.first_zero_level, None);
        assert!(degiorgi_diagnostic(&traj, 1.0, 3).is_err());
        let zero = synthetic(&[&[0.0, 0.0]]);
        assert!(degiorgi_diagnostic(&zero, 2.0, 3).is_err());
    }

    #[test]
    fn confinement_at_midpoint() {
        let traj = stationary(4);
        let rep = confinement_bounds(&pot(), &traj).unwrap();
        assert_eq!(rep.inf_g, 0.0);
        assert_eq!(rep.sup_g, 0.0);
        assert_eq!(rep.r_lower_candidate, 0.5);
        assert_eq!(rep.r_upper_candidate, 0.5);
        assert_eq!(rep.observed_min_rho, rep.initial_min_rho);
        assert!(rep.respected());
    }

    #[test]
    fn confinement_lower_candidate_closed_form() {
        // mu in [0, 4], rho in (0,1): inf g >= -theta_c, so r_* >= logistic(-theta_c/theta)
        let traj = synthetic(&[&[0.0, 4.0, 2.0], &[1.0, 0.0, 3.0]]);
        let p = pot();
        let rep = confinement_bounds(&p, &traj).unwrap();
        let logistic = 1.0 / (1.0 + 3f64.exp());
        assert!(rep.inf_g >= -3.0);
        assert!(rep.r_lower_candidate >= logistic - 1.0 / CONFINEMENT_LEVELS as f64);
        // exact inverse of the inf: rho = 0.5 everywhere so inf g = 0 ⇒ 0.5
        assert_eq!(rep.r_lower_candidate, 0.5);
        // sup g = 4 ⇒ r^* = logistic(4) rounded up to the level grid
        let up = 1.0 / (1.0 + (-4f64).exp());
        assert!(rep.r_upper_candidate >= up && rep.r_upper_candidate - up <= 1.0 / CONFINEMENT_LEVELS as f64);
    }
}
