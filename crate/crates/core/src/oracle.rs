//! Reference solutions for spatially homogeneous data.
//!
//! For constant fields the Laplacians drop out and the system becomes
//!
//! ```text
//! (eps + 2 rho) mu' + mu rho' = 0,      delta rho' + f'(rho) = mu,
//! ```
//!
//! which conserves `(eps/2 + rho) mu^2`. The primary path eliminates `mu`
//! through that invariant and integrates the scalar equation
//! `delta rho' = mu0 sqrt((eps/2 + rho0) / (eps/2 + rho)) - f'(rho)`;
//! [`homogeneous_oracle_unreduced`] integrates the pair directly as a
//! cross-check. Both use an embedded Dormand-Prince 5(4) pair with PI step
//! control, unrelated to the backward-Euler production scheme.

use alloc::vec::Vec;
use core::fmt;

use crate::math;
use crate::potential::PotentialSpec;
use crate::stepper::SolverConfig;

#[derive(Clone, Debug, PartialEq)]
pub enum OracleError {
    InvalidInput(&'static str),
    /// Step size collapsed, e.g. near a confinement event.
    StepUnderflow { t: f64 },
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::InvalidInput(what) => write!(f, "invalid oracle input: {what}"),
            Self::StepUnderflow { t } => write!(f, "oracle step size underflow at t = {t}"),
        }
    }
}

impl core::error::Error for OracleError {}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct HomogeneousTrajectory {
    pub times: Vec<f64>,
    pub mu_values: Vec<f64>,
    pub rho_values: Vec<f64>,
    /// `(eps/2 + rho) mu^2`.
    pub invariant_values: Vec<f64>,
}

impl HomogeneousTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest deviation of the invariant from its initial value.
    pub fn invariant_drift(&self) -> f64 {
        let Some(&first) = self.invariant_values.first() else {
            return 0.0;
        };
        self.invariant_values.iter().map(|v| math::abs(v - first)).fold(0.0, f64::max)
    }
}

/// `n + 1` equally spaced times on `[0, t_end]`.
pub fn uniform_times(t_end: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| t_end * k as f64 / n.max(1) as f64).collect()
}

// Dormand-Prince 5(4).
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Adaptive integration of `y' = rhs(t, y)` reporting `y` at `out_times`
/// (nondecreasing, starting at or after 0). `rhs` returns `None` when `y`
/// leaves the admissible set, which rejects the step.
fn integrate<const N: usize>(
    rhs: impl Fn(f64, &[f64; N]) -> Option<[f64; N]>,
    y0: [f64; N],
    out_times: &[f64],
    rtol: f64,
) -> Result<Vec<[f64; N]>, OracleError> {
    let atol = rtol;
    let mut out = Vec::with_capacity(out_times.len());
    let mut t = 0.0;
    let mut y = y0;
    let t_final = out_times.last().copied().unwrap_or(0.0);
    let mut h = (1e-3f64).min(t_final.max(1e-12));
    let mut err_prev: f64 = 1.0;
    let mut k = [[0.0; N]; 7];
    let Some(k0) = rhs(t, &y) else {
        return Err(OracleError::InvalidInput("initial state outside the admissible set"));
    };
    k[0] = k0;

    for &target in out_times {
        while t < target {
            let last = target - t <= h * (1.0 + 1e-12);
            let step = if last { target - t } else { h };
            if step < 1e-14 * t.max(1.0) && !last {
                return Err(OracleError::StepUnderflow { t });
            }
            let mut ok = true;
            for s in 1..7 {
                let mut ys = y;
                for (j, kj) in k.iter().enumerate().take(s) {
                    for i in 0..N {
                        ys[i] += step * A[s][j] * kj[i];
                    }
                }
                match rhs(t + C[s] * step, &ys) {
                    Some(v) => k[s] = v,
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            let mut err = f64::INFINITY;
            let mut y5 = y;
            if ok {
                let mut acc = 0.0;
                for i in 0..N {
                    let mut e = 0.0;
                    for s in 0..7 {
                        y5[i] += step * B5[s] * k[s][i];
                        e += step * (B5[s] - B4[s]) * k[s][i];
                    }
                    let sc = atol + rtol * math::abs(y[i]).max(math::abs(y5[i]));
                    acc += (e / sc) * (e / sc);
                }
                err = math::sqrt(acc / N as f64);
            }
            if err <= 1.0 {
                t = if last { target } else { t + step };
                y = y5;
                // FSAL: the last stage is the derivative at the new point
                k[0] = k[6];
                let e = err.max(1e-10);
                let fac = 0.9 * math::powf(e, -0.7 / 5.0) * math::powf(err_prev, 0.4 / 5.0);
                err_prev = e;
                if !last {
                    h = step * fac.clamp(0.2, 5.0);
                }
            } else {
                let fac = if err.is_finite() { (0.9 * math::powf(err, -0.2)).max(0.2) } else { 0.2 };
                h = step * fac;
                if h < 1e-14 * t.max(1.0) {
                    return Err(OracleError::StepUnderflow { t });
                }
            }
        }
        out.push(y);
    }
    Ok(out)
}

fn check_input(rho0: f64, mu0: f64, cfg: &SolverConfig, times: &[f64], rtol: f64) -> Result<(), OracleError> {
    if !(rho0 > 0.0 && rho0 < 1.0) {
        return Err(OracleError::InvalidInput("rho0 must lie in (0,1)"));
    }
    if !(mu0 >= 0.0 && mu0.is_finite()) {
        return Err(OracleError::InvalidInput("mu0 must be nonnegative"));
    }
    if !(cfg.eps > 0.0 && cfg.delta > 0.0) {
        return Err(OracleError::InvalidInput("eps and delta must be positive"));
    }
    if !(rtol > 0.0 && rtol < 1.0) {
        return Err(OracleError::InvalidInput("rtol must lie in (0,1)"));
    }
    if times.first().is_some_and(|&t| t < 0.0) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(OracleError::InvalidInput("sample times must be nonnegative and nondecreasing"));
    }
    Ok(())
}

fn interior(r: f64) -> bool {
    r > 1e-300 && r < 1.0
}

/// Invariant-reduced reference trajectory sampled at `times`.
pub fn homogeneous_oracle(
    pot: &PotentialSpec,
    rho0: f64,
    mu0: f64,
    cfg: &SolverConfig,
    times: &[f64],
    rtol: f64,
) -> Result<HomogeneousTrajectory, OracleError> {
    check_input(rho0, mu0, cfg, times, rtol)?;
    let (eps, delta) = (cfg.eps, cfg.delta);
    let mu_of = |r: f64| mu0 * math::sqrt((0.5 * eps + rho0) / (0.5 * eps + r));
    let rhs = |_t: f64, y: &[f64; 1]| {
        let r = y[0];
        if !interior(r) {
            return None;
        }
        let (fp, _) = pot.derivatives(r, 0.0).ok()?;
        Some([(mu_of(r) - fp) / delta])
    };
    let ys = integrate(rhs, [rho0], times, rtol)?;
    let mut traj = HomogeneousTrajectory::default();
    for (t, y) in times.iter().zip(ys) {
        let r = y[0];
        let m = mu_of(r);
        traj.times.push(*t);
        traj.rho_values.push(r);
        traj.mu_values.push(m);
        traj.invariant_values.push((0.5 * eps + r) * m * m);
    }
    Ok(traj)
}

/// Direct integration of the homogeneous pair, without using the invariant.
pub fn homogeneous_oracle_unreduced(
    pot: &PotentialSpec,
    rho0: f64,
    mu0: f64,
    cfg: &SolverConfig,
    times: &[f64],
    rtol: f64,
) -> Result<HomogeneousTrajectory, OracleError> {
    check_input(rho0, mu0, cfg, times, rtol)?;
    let (eps, delta) = (cfg.eps, cfg.delta);
    let rhs = |_t: f64, y: &[f64; 2]| {
        let (m, r) = (y[0], y[1]);
        if !interior(r) {
            return None;
        }
        let (fp, _) = pot.derivatives(r, 0.0).ok()?;
        let dr = (m - fp) / delta;
        Some([-m * dr / (eps + 2.0 * r), dr])
    };
    let ys = integrate(rhs, [mu0, rho0], times, rtol)?;
    let mut traj = HomogeneousTrajectory::default();
    for (t, y) in times.iter().zip(ys) {
        traj.times.push(*t);
        traj.mu_values.push(y[0]);
        traj.rho_values.push(y[1]);
        traj.invariant_values.push((0.5 * eps + y[1]) * y[0] * y[0]);
    }
    Ok(traj)
}
