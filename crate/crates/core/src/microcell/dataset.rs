//! Training dataset: a `(phi, nu)` grid of cell solutions.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    assemble, build_cell_mesh, build_frame_mesh, elastic, stokes, CellGeometry, CellSolution,
};
use super::{CELL_VISCOSITY, REFERENCE_E};
use crate::tensor::SquareSym4;
use crate::{Error, Result};

pub const HEADER: &str = "phi,nu,M11,M12,M44,Q11,K11";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetGrid {
    pub phi: Vec<f64>,
    pub nu: Vec<f64>,
}

impl DatasetGrid {
    /// Evenly spaced grid over `[phi_lo, phi_hi] x [nu_lo, nu_hi]`.
    pub fn linspace(n_phi: usize, phi: (f64, f64), n_nu: usize, nu: (f64, f64)) -> Self {
        let lin = |n: usize, (a, b): (f64, f64)| -> Vec<f64> {
            if n == 1 {
                return vec![a];
            }
            (0..n)
                .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
                .collect()
        };
        DatasetGrid {
            phi: lin(n_phi, phi),
            nu: lin(n_nu, nu),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let increasing = |v: &[f64]| !v.is_empty() && v.windows(2).all(|w| w[1] > w[0]);
        if !increasing(&self.phi) || !increasing(&self.nu) {
            return Err(Error::InvalidInput(
                "dataset grids must be nonempty and strictly increasing".into(),
            ));
        }
        if self.nu[0] < 0.1 || *self.nu.last().unwrap() > 0.45 {
            return Err(Error::InvalidInput(
                "Poisson ratio grid must lie in [0.1, 0.45]".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub phi: f64,
    pub nu: f64,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub records: Vec<CellSolution>,
    pub failures: Vec<CellFailure>,
}

/// Solves every grid point. The flow problem depends on `phi` only and is
/// solved once per porosity.
pub fn generate_dataset(grid: &DatasetGrid, resolution: f64) -> Result<Dataset> {
    grid.validate()?;
    let per_phi: Vec<(Vec<CellSolution>, Vec<CellFailure>)> = grid
        .phi
        .par_iter()
        .map(|&phi| {
            let fail_all = |msg: String| {
                let f = grid
                    .nu
                    .iter()
                    .map(|&nu| CellFailure {
                        phi,
                        nu,
                        message: msg.clone(),
                    })
                    .collect();
                (Vec::new(), f)
            };
            let flow = match CellGeometry::new(phi)
                .and_then(|g| build_cell_mesh(&g, resolution))
                .and_then(|m| stokes::solve_stokes(&m, CELL_VISCOSITY))
            {
                Ok(f) => f,
                Err(e) => return fail_all(format!("flow: {e}")),
            };
            let frame = match build_frame_mesh(phi, resolution) {
                Ok(m) => m,
                Err(e) => return fail_all(format!("frame mesh: {e}")),
            };
            let mut ok = Vec::new();
            let mut bad = Vec::new();
            for &nu in &grid.nu {
                match elastic::solve_elastic(&frame, REFERENCE_E, nu) {
                    Ok(el) => ok.push(assemble(phi, nu, &el, &flow).0),
                    Err(e) => bad.push(CellFailure {
                        phi,
                        nu,
                        message: format!("elastic: {e}"),
                    }),
                }
            }
            log::info!(
                "cells at phi={phi:.4} done ({} ok, {} failed)",
                ok.len(),
                bad.len()
            );
            (ok, bad)
        })
        .collect();
    let mut out = Dataset::default();
    for (ok, bad) in per_phi {
        out.records.extend(ok);
        out.failures.extend(bad);
    }
    for f in &out.failures {
        log::error!(
            "cell solve failed at phi={}, nu={}: {}",
            f.phi,
            f.nu,
            f.message
        );
    }
    out.records
        .sort_by(|a, b| a.phi.total_cmp(&b.phi).then(a.nu.total_cmp(&b.nu)));
    Ok(out)
}

fn g17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn format_dataset(records: &[CellSolution]) -> String {
    let mut s = String::with_capacity(128 * (records.len() + 1));
    s.push_str(HEADER);
    s.push('\n');
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            g17(r.phi),
            g17(r.nu),
            g17(r.m.c11),
            g17(r.m.c12),
            g17(r.m.c44),
            g17(r.q11),
            g17(r.k11)
        );
    }
    s
}

pub fn write_dataset(records: &[CellSolution], path: &Path) -> Result<()> {
    std::fs::write(path, format_dataset(records)).map_err(|e| Error::io(path, e))
}

pub fn parse_dataset(text: &str) -> Result<Vec<CellSolution>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == HEADER => {}
        other => {
            return Err(Error::Format(format!(
                "dataset header mismatch: {:?}",
                other.unwrap_or("")
            )))
        }
    }
    let mut out = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v: Vec<f64> = line
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Format(format!("dataset row {}: {e}", k + 2)))?;
        if v.len() != 7 {
            return Err(Error::Format(format!(
                "dataset row {} has {} fields",
                k + 2,
                v.len()
            )));
        }
        out.push(CellSolution {
            phi: v[0],
            nu: v[1],
            m: SquareSym4::new(v[2], v[3], v[4]),
            q11: v[5],
            k11: v[6],
        });
    }
    Ok(out)
}

pub fn read_dataset(path: &Path) -> Result<Vec<CellSolution>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text)
}
