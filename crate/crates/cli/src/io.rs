//! Snapshot files and CSV tables.
//!
//! A snapshot holds one nodal field:
//!
//! ```text
//! # nschsim-field v1 dim=2 cells=16,16 lengths=1,1 t=0.5 name=rho
//! 5.0000000000000000e-1
//! ...
//! ```
//!
//! Values are in row-major order (last axis fastest), one per line, with 17
//! significant digits so they read back bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nschsim_core::{DeGiorgiReport, DiagnosticsRecord, Field, Grid};

use crate::error::CliError;

const MAGIC: &str = "# nschsim-field v1";

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub name: String,
    pub t: f64,
    pub field: Field,
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

pub fn format_field(field: &Field, t: f64, name: &str) -> String {
    let g = field.grid();
    let mut out = format!(
        "{MAGIC} dim={} cells={} lengths={} t={t} name={name}\n",
        g.dim(),
        join(g.cells()),
        join(g.lengths())
    );
    for v in field.values() {
        writeln!(out, "{v:.16e}").expect("writing to a String");
    }
    out
}

pub fn write_field(path: &Path, field: &Field, t: f64, name: &str) -> Result<(), CliError> {
    fs::write(path, format_field(field, t, name)).map_err(|e| CliError::io(path, e))
}

pub fn read_field(path: &Path) -> Result<Snapshot, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_field(&text).map_err(|message| CliError::Format { path: path.to_path_buf(), message })
}

pub fn parse_field(text: &str) -> Result<Snapshot, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty file")?;
    let rest = header.strip_prefix(MAGIC).ok_or("missing nschsim-field v1 header")?;
    let (mut dim, mut cells, mut lengths, mut t, mut name) = (None, None, None, None, None);
    for kv in rest.split_whitespace() {
        let (k, v) = kv.split_once('=').ok_or_else(|| format!("bad header entry {kv:?}"))?;
        match k {
            "dim" => dim = Some(v.parse::<usize>().map_err(|e| format!("dim: {e}"))?),
            "cells" => {
                cells = Some(
                    v.split(',').map(str::parse::<usize>).collect::<Result<Vec<_>, _>>().map_err(|e| format!("cells: {e}"))?,
                )
            }
            "lengths" => {
                lengths = Some(
                    v.split(',').map(str::parse::<f64>).collect::<Result<Vec<_>, _>>().map_err(|e| format!("lengths: {e}"))?,
                )
            }
            "t" => t = Some(v.parse::<f64>().map_err(|e| format!("t: {e}"))?),
            "name" => name = Some(v.to_string()),
            _ => return Err(format!("unknown header entry {k:?}")),
        }
    }
    let dim = dim.ok_or("header lacks dim")?;
    let cells = cells.ok_or("header lacks cells")?;
    let lengths = lengths.ok_or("header lacks lengths")?;
    if cells.len() != dim || lengths.len() != dim {
        return Err(format!("dim={dim} does not match cells/lengths"));
    }
    let grid = Grid::new(&cells, &lengths).map_err(|e| e.to_string())?;
    let mut values = Vec::with_capacity(grid.node_count());
    for (i, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        values.push(line.parse::<f64>().map_err(|e| format!("value on line {}: {e}", i + 2))?);
    }
    let field = Field::new(grid, values).map_err(|e| e.to_string())?;
    Ok(Snapshot { name: name.unwrap_or_default(), t: t.unwrap_or(0.0), field })
}

pub fn snapshot_path(dir: &Path, name: &str, step: usize) -> PathBuf {
    dir.join(format!("{name}_{step:08}.txt"))
}

pub const DIAGNOSTICS_HEADER: [&str; 13] = [
    "step",
    "t",
    "min_mu",
    "max_mu",
    "min_rho",
    "max_rho",
    "weighted_mu_energy",
    "cum_grad_mu",
    "conservation_drift",
    "lyapunov_residual",
    "dtrho_l2",
    "grad_mu_l2",
    "mu_oscillation",
];

pub fn diagnostics_row(step: usize, r: &DiagnosticsRecord) -> Vec<String> {
    let mut row = vec![step.to_string()];
    row.extend(
        [
            r.t,
            r.min_mu,
            r.max_mu,
            r.min_rho,
            r.max_rho,
            r.weighted_mu_energy,
            r.cum_grad_mu,
            r.conservation_drift,
            r.lyapunov_residual,
            r.dtrho_l2,
            r.grad_mu_l2,
            r.mu_oscillation,
        ]
        .iter()
        .map(|v| format!("{v:e}")),
    );
    row
}

pub struct CsvOut {
    path: PathBuf,
    writer: csv::Writer<fs::File>,
}

impl CsvOut {
    pub fn create(path: PathBuf, header: &[&str]) -> Result<Self, CliError> {
        let file = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut writer = csv::Writer::from_writer(file);
        writer.write_record(header)?;
        Ok(Self { path, writer })
    }

    pub fn row<I, T>(&mut self, record: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[u8]>,
    {
        self.writer.write_record(record)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<PathBuf, CliError> {
        self.writer.flush().map_err(|e| CliError::io(&self.path, e))?;
        Ok(self.path)
    }
}

pub fn write_degiorgi(path: PathBuf, rep: &DeGiorgiReport) -> Result<PathBuf, CliError> {
    let mut out = CsvOut::create(path, &["j", "k_j", "S_j", "triple_norm_j"])?;
    for (j, ((k, s), n)) in rep.k_levels.iter().zip(&rep.s_levels).zip(&rep.triple_norms).enumerate() {
        out.row([j.to_string(), format!("{k:e}"), format!("{s:e}"), format!("{n:e}")])?;
    }
    out.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_round_trip() {
        let g = Grid::rect(3, 2, 1.5, 0.7).unwrap();
        let f = Field::from_fn(g, |x| (x[0] * 7.3).sin() / 3.0 + x[1]);
        let text = format_field(&f, 0.125, "rho");
        assert!(text.starts_with("# nschsim-field v1 dim=2 cells=3,2 lengths=1.5,0.7 t=0.125 name=rho\n"));
        let back = parse_field(&text).unwrap();
        assert_eq!(back.field, f);
        assert_eq!(back.t, 0.125);
        assert_eq!(back.name, "rho");
    }

    #[test]
    fn malformed_files() {
        assert!(parse_field("").is_err());
        assert!(parse_field("hello\n1\n").is_err());
        assert!(parse_field("# nschsim-field v1 dim=1 cells=2 lengths=1 t=0 name=mu\n1\n2\n").is_err());
        assert!(parse_field("# nschsim-field v1 dim=1 cells=2 lengths=1 t=0 name=mu\n1\nx\n3\n").is_err());
        assert!(parse_field("# nschsim-field v1 dim=2 cells=2 lengths=1 t=0 name=mu\n1\n").is_err());
        assert!(parse_field("# nschsim-field v1 dim=1 cells=1 lengths=1 t=0 name=mu\n1\nNaN\n").is_err());
    }
}
