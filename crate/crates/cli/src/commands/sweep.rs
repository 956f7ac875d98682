//! One run per value of a single config key, in parallel, summarized in
//! `sweep.csv`.
//!
//! Besides the terminal diagnostics of each run, every row after the first
//! compares against its predecessor: `diff_prev` is
//! `sqrt(||mu_i - mu_{i-1}||^2 + ||rho_i - rho_{i-1}||^2)` of the terminal
//! states (on the coarser grid when `domain.cells` varies), and the `*_ratio`
//! columns divide the previous row's value by the current one.

use clap::ValueEnum;
use nschsim_core::grid::{l2_norm, laplacian_neumann};
use nschsim_core::{Field, Grid, State};
use rayon::prelude::*;

use super::run_pipeline;
use crate::config::RunConfig;
use crate::error::CliError;
use crate::init::{cosine_profile, initial_state};
use crate::io::CsvOut;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    #[value(name = "time.dt")]
    Dt,
    #[value(name = "time.tau")]
    Tau,
    #[value(name = "solver.lambda")]
    Lambda,
    #[value(name = "domain.cells")]
    Cells,
}

impl Axis {
    fn key(self) -> &'static str {
        match self {
            Self::Dt => "time.dt",
            Self::Tau => "time.tau",
            Self::Lambda => "solver.lambda",
            Self::Cells => "domain.cells",
        }
    }
}

pub const SWEEP_HEADER: [&str; 18] = [
    "index",
    "axis",
    "value",
    "status",
    "steps",
    "t",
    "conservation_drift",
    "lyapunov_residual",
    "min_mu",
    "max_mu",
    "min_rho",
    "max_rho",
    "laplacian_error",
    "diff_prev",
    "drift_ratio",
    "diff_ratio",
    "laplacian_ratio",
    "message",
];

/// Parses `values` for `axis`; `time.tau` also accepts multiples of
/// `time.dt` written as `4dt`.
pub fn parse_values(axis: Axis, raw: &str, dt: f64) -> Result<Vec<f64>, CliError> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            let parsed = match s.strip_suffix("dt") {
                Some(k) if axis == Axis::Tau => k.trim().parse::<f64>().map(|k| k * dt),
                _ => s.parse::<f64>(),
            };
            parsed.map_err(|_| CliError::Validation(format!("bad sweep value {s:?}")))
        })
        .collect::<Result<Vec<_>, _>>()
        .and_then(|v| {
            if v.is_empty() {
                Err(CliError::Validation("sweep needs at least one value".into()))
            } else {
                Ok(v)
            }
        })
}

pub fn configure(base: &RunConfig, axis: Axis, value: f64) -> Result<RunConfig, CliError> {
    let mut cfg = base.clone();
    match axis {
        Axis::Dt => cfg.time.dt = value,
        Axis::Tau => cfg.time.tau = value,
        Axis::Lambda => cfg.solver.lambda = value,
        Axis::Cells => {
            if !(value >= 1.0 && value.fract() == 0.0) {
                return Err(CliError::Validation(format!("domain.cells value {value} is not a positive integer")));
            }
            cfg.domain.cells = vec![value as usize; cfg.domain.dim];
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Max nodal error of the discrete Laplacian on the cosine eigenfunction.
pub fn laplacian_error(grid: &Grid) -> f64 {
    let c = cosine_profile(grid);
    let lambda: f64 = grid.lengths().iter().map(|l| (std::f64::consts::PI / l).powi(2)).sum();
    let lap = laplacian_neumann(&c);
    lap.values().iter().zip(c.values()).map(|(a, v)| (a + lambda * v).abs()).fold(0.0, f64::max)
}

/// `fine` sampled at the nodes of `coarse`, if the meshes nest.
fn restrict(fine: &Field, coarse: &Grid) -> Option<Field> {
    let fg = fine.grid();
    if fg.dim() != coarse.dim() || fg.lengths() != coarse.lengths() {
        return None;
    }
    let mut factor = Vec::with_capacity(coarse.dim());
    for a in 0..coarse.dim() {
        let (nf, nc) = (fg.cells()[a], coarse.cells()[a]);
        if nf % nc != 0 {
            return None;
        }
        factor.push(nf / nc);
    }
    let values = (0..coarse.node_count())
        .map(|i| {
            let idx: usize = (0..coarse.dim()).map(|a| coarse.axis_index(i, a) * factor[a] * fg.stride(a)).sum();
            fine.values()[idx]
        })
        .collect();
    Field::new(*coarse, values).ok()
}

fn distance(a: &State, b: &State) -> Option<f64> {
    let (coarse, fine) = if a.grid().node_count() <= b.grid().node_count() { (a, b) } else { (b, a) };
    let mu = restrict(&fine.mu, coarse.grid())?;
    let rho = restrict(&fine.rho, coarse.grid())?;
    let dm = l2_norm(&mu.zip_with(&coarse.mu, |x, y| x - y).ok()?);
    let dr = l2_norm(&rho.zip_with(&coarse.rho, |x, y| x - y).ok()?);
    Some((dm * dm + dr * dr).sqrt())
}

struct Outcome {
    value: f64,
    laplacian_error: f64,
    terminal: Option<(usize, State, f64, f64)>,
    error: Option<CliError>,
}

fn run_one(base: &RunConfig, axis: Axis, value: f64) -> Outcome {
    let attempt = || -> Result<(Outcome, Option<CliError>), CliError> {
        let cfg = configure(base, axis, value)?;
        let pot = cfg.potential()?;
        let solver = cfg.solver();
        let result = run_pipeline(&cfg, &pot, &solver, initial_state(&cfg)?, None)?;
        let lap = laplacian_error(&cfg.grid()?);
        let last = result.records.last().map(|(_, r)| (r.conservation_drift, r.lyapunov_residual));
        let step = *result.trajectory.steps.last().unwrap_or(&0);
        let state = result.trajectory.last().cloned();
        let terminal = match (state, last) {
            (Some(s), Some((d, l))) => Some((step, s, d, l)),
            _ => None,
        };
        Ok((Outcome { value, laplacian_error: lap, terminal, error: None }, result.failure))
    };
    match attempt() {
        Ok((mut o, failure)) => {
            o.error = failure;
            o
        }
        Err(e) => Outcome { value, laplacian_error: f64::NAN, terminal: None, error: Some(e) },
    }
}

fn threads() -> Option<usize> {
    std::env::var("NSCHSIM_THREADS").ok()?.trim().parse::<usize>().ok().filter(|&n| n > 0)
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:e}")
    } else {
        String::new()
    }
}

fn ratio(prev: f64, cur: f64) -> f64 {
    if cur > 0.0 && prev.is_finite() {
        prev / cur
    } else {
        f64::NAN
    }
}

pub fn run(base: &RunConfig, axis: Axis, raw_values: &str) -> Result<(), CliError> {
    let values = parse_values(axis, raw_values, base.time.dt)?;
    base.echo()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads() {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
    let outcomes: Vec<Outcome> = pool.install(|| values.par_iter().map(|&v| run_one(base, axis, v)).collect());

    let path = base.output.dir.join("sweep.csv");
    let mut csv = CsvOut::create(path.clone(), &SWEEP_HEADER)?;
    let nan = f64::NAN;
    let mut prev: Option<(&State, f64, f64, f64)> = None;
    for (i, o) in outcomes.iter().enumerate() {
        let (status, message) = match &o.error {
            None => ("ok".to_string(), String::new()),
            Some(e) => ("failed".to_string(), e.to_string()),
        };
        let mut row = vec![i.to_string(), axis.key().to_string(), format!("{}", o.value), status];
        let mut diff = nan;
        match &o.terminal {
            Some((step, s, drift, lyap)) => {
                row.push(step.to_string());
                row.extend([s.t, *drift, *lyap, s.mu.min(), s.mu.max(), s.rho.min(), s.rho.max(), o.laplacian_error].map(num));
                let (dr, fr, lr) = match prev {
                    Some((ps, pdrift, pdiff, plap)) => {
                        diff = distance(ps, s).unwrap_or(nan);
                        (ratio(pdrift, *drift), ratio(pdiff, diff), ratio(plap, o.laplacian_error))
                    }
                    None => (nan, nan, nan),
                };
                row.extend([diff, dr, fr, lr].map(num));
                prev = Some((s, *drift, diff, o.laplacian_error));
            }
            None => {
                row.push(String::new());
                row.extend([nan, nan, nan, nan, nan, nan, nan, o.laplacian_error, nan, nan, nan, nan].map(num));
                prev = None;
            }
        }
        row.push(message);
        csv.row(row)?;
        println!("{}", csv_line_summary(axis, o, diff));
    }
    csv.finish()?;
    match outcomes.into_iter().find_map(|o| o.error) {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn csv_line_summary(axis: Axis, o: &Outcome, diff: f64) -> String {
    match (&o.terminal, &o.error) {
        (_, Some(e)) => format!("{}={}: failed: {e}", axis.key(), o.value),
        (Some((_, _, drift, lyap)), None) => format!(
            "{}={}: drift={drift:e} lyapunov={lyap:e} laplacian_error={:e} diff_prev={}",
            axis.key(),
            o.value,
            o.laplacian_error,
            num(diff)
        ),
        (None, None) => format!("{}={}: no data", axis.key(), o.value),
    }
}
