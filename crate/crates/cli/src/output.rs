//! Key/value reports and CSV tables.
//!
//! CSV schemas:
//! - field snapshots: `x,t,<component>...`
//! - eigen iteration history: `iteration,r_estimate`
//! - convergence series: `n,e_n,ratio`
//! - sweep threshold map: `value,zeta,lambda_V,regime`

use std::fs;
use std::path::{Path, PathBuf};

use vectorhost::{Grid, PeriodicOrbit, StateField};

use crate::CliError;

/// 17 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Default, Clone, PartialEq)]
pub struct Report {
    lines: Vec<(String, String)>,
}

impl Report {
    pub fn push(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.lines.push((key.into(), value.into()));
    }

    pub fn num(&mut self, key: impl Into<String>, v: f64) {
        self.push(key, num(v));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.lines.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        self.lines.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }
}

pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<OutputDir, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::Io(format!("{}: {e}", root.display())))?;
        Ok(OutputDir { root: root.to_path_buf() })
    }

    pub fn write_report(&self, name: &str, report: &Report) -> Result<(), CliError> {
        let path = self.root.join(name);
        fs::write(&path, report.render()).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }

    pub fn write_csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let path = self.root.join(name);
        let io = |e: csv::Error| CliError::Io(format!("{}: {e}", path.display()));
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(&path)
            .map_err(io)?;
        w.write_record(header).map_err(io)?;
        for row in rows {
            w.write_record(row).map_err(io)?;
        }
        w.flush().map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}

/// Rows `x, t, values...` for every stored level and mesh node; nodes
/// outside a component's layout (Dirichlet endpoints) print as zero.
pub fn orbit_rows(grid: &Grid, orbits: &[&PeriodicOrbit]) -> Vec<Vec<String>> {
    let levels = orbits[0].levels.len();
    let mut rows = Vec::with_capacity(levels * grid.node_count());
    for k in 0..levels {
        let states: Vec<&StateField> = orbits.iter().map(|o| &o.levels[k]).collect();
        rows.extend(state_rows(grid, &states));
    }
    rows
}

pub fn state_rows(grid: &Grid, states: &[&StateField]) -> Vec<Vec<String>> {
    (0..grid.node_count())
        .map(|node| {
            let mut row = vec![num(grid.x(node)), num(states[0].t)];
            for s in states {
                for c in 0..s.components.len() {
                    row.push(num(s.nodal(c, node)));
                }
            }
            row
        })
        .collect()
}
