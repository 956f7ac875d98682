//! Initial data from the `[init]` section.
//!
//! * `constant`: `mu0`, `rho0` everywhere.
//! * `cosine`: with `c(x) = prod_i cos(pi x_i / L_i)`,
//!   `rho = rho0 + amplitude c` and `mu = mu0 (1 + c/2)`.
//! * `random`: `rho = rho0 + amplitude U(-1, 1)` node by node from a ChaCha8
//!   stream seeded with `seed`; `mu = mu0`.
//! * `file`: snapshots named by `mu_file` and `rho_file`.

use std::f64::consts::PI;

use nschsim_core::{Field, Grid, State};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{InitKind, RunConfig};
use crate::error::CliError;
use crate::io::read_field;

pub fn cosine_profile(grid: &Grid) -> Field {
    let lengths: Vec<f64> = grid.lengths().to_vec();
    Field::from_fn(*grid, |x| x.iter().zip(&lengths).map(|(xi, l)| (PI * xi / l).cos()).product())
}

pub fn initial_fields(cfg: &RunConfig) -> Result<(Field, Field), CliError> {
    let grid = cfg.grid()?;
    let init = &cfg.init;
    let pair = match init.kind {
        InitKind::Constant => (Field::constant(grid, init.mu0), Field::constant(grid, init.rho0)),
        InitKind::Cosine => {
            let c = cosine_profile(&grid);
            (c.map(|v| init.mu0 * (1.0 + 0.5 * v)), c.map(|v| init.rho0 + init.amplitude * v))
        }
        InitKind::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(init.seed);
            let rho = Field::from_fn(grid, |_| init.rho0 + init.amplitude * rng.gen_range(-1.0..1.0));
            (Field::constant(grid, init.mu0), rho)
        }
        InitKind::File => {
            let load = |p: &Option<std::path::PathBuf>| -> Result<Field, CliError> {
                let path = p.as_ref().ok_or_else(|| CliError::Validation("init file path missing".into()))?;
                let snap = read_field(path)?;
                if *snap.field.grid() != grid {
                    return Err(CliError::Validation(format!(
                        "{}: grid does not match the [domain] section",
                        path.display()
                    )));
                }
                Ok(snap.field)
            };
            (load(&init.mu_file)?, load(&init.rho_file)?)
        }
    };
    Ok(pair)
}

/// Initial state; rejects data violating `mu0 >= 0` or `0 < rho0 < 1`.
pub fn initial_state(cfg: &RunConfig) -> Result<State, CliError> {
    let (mu, rho) = initial_fields(cfg)?;
    Ok(State::initial(mu, rho)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(sets: &[&str]) -> RunConfig {
        let v: Vec<String> = sets.iter().map(|s| s.to_string()).collect();
        RunConfig::load(None, &v).unwrap()
    }

    #[test]
    fn cosine_data() {
        let (mu, rho) = initial_fields(&cfg(&["domain.cells=[4]"])).unwrap();
        assert!((rho.values()[0] - 0.6).abs() < 1e-15);
        assert!((rho.values()[4] - 0.4).abs() < 1e-15);
        assert!((mu.values()[0] - 1.5).abs() < 1e-15);
        assert!((mu.values()[4] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn random_is_seeded() {
        let a = initial_fields(&cfg(&["init.type=random", "init.seed=3"])).unwrap();
        let b = initial_fields(&cfg(&["init.type=random", "init.seed=3"])).unwrap();
        let c = initial_fields(&cfg(&["init.type=random", "init.seed=4"])).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.1, c.1);
        assert!(a.1.min() >= 0.4 && a.1.max() <= 0.6);
    }

    #[test]
    fn hypotheses_enforced() {
        let err = initial_state(&cfg(&["init.type=constant", "init.mu0=-1"])).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("mu0 >= 0"));
        assert!(initial_state(&cfg(&["init.type=constant", "init.rho0=1"])).is_err());
    }
}
