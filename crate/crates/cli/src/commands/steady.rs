use clap::ValueEnum;
use nschsim_core::steady::solve_steady;
use nschsim_core::Field;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::io::{read_field, write_field};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GuessSource {
    /// `init.rho0` at every node.
    Const,
    /// The snapshot named by `init.rho_file`.
    File,
}

pub fn run(cfg: &RunConfig, mu_s: f64, source: GuessSource, tol: f64) -> Result<(), CliError> {
    let pot = cfg.potential()?;
    let grid = cfg.grid()?;
    let guess = match source {
        GuessSource::Const => Field::constant(grid, cfg.init.rho0),
        GuessSource::File => {
            let path = cfg
                .init
                .rho_file
                .as_ref()
                .ok_or_else(|| CliError::Validation("--init file needs init.rho_file".into()))?;
            read_field(path)?.field
        }
    };
    let s = solve_steady(&pot, mu_s, &guess, tol, cfg.solver.newton_max_iter)?;
    cfg.echo()?;
    let path = cfg.output.dir.join("rho_s.txt");
    write_field(&path, &s.rho_s, 0.0, "rho")?;
    println!(
        "mu_s={mu_s} residual={:e} rho_s=[{:.16e}, {:.16e}] output={}",
        s.residual_norm,
        s.rho_s.min(),
        s.rho_s.max(),
        path.display()
    );
    Ok(())
}
