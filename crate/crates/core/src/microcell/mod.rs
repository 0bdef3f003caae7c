//! Periodic cell problems and the training dataset built from them.

pub mod dataset;
pub mod elastic;
pub mod fe;
pub mod linsolve;
pub mod mesh;
pub mod stokes;

use serde::{Deserialize, Serialize};

pub use dataset::{
    generate_dataset, read_dataset, write_dataset, CellFailure, Dataset, DatasetGrid,
};
pub use mesh::{build_cell_mesh, build_frame_mesh, CellGeometry, CellMesh, CellSection, Phase};

use crate::tensor::SquareSym4;
use crate::Result;

/// Dimensionless solid modulus used for every cell solve. `<Q>` scales as
/// `1/E`; callers rescale it to the actual solid modulus.
pub const REFERENCE_E: f64 = 15.0;

/// Dimensionless fluid viscosity of the cell problem.
pub const CELL_VISCOSITY: f64 = 1.0;

/// Cell-averaged tensors for one `(phi, nu)` pair, at `REFERENCE_E`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellSolution {
    pub phi: f64,
    pub nu: f64,
    pub m: SquareSym4,
    pub q11: f64,
    pub k11: f64,
}

/// Constraint and symmetry residuals reported alongside a cell solution.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct CellDiagnostics {
    pub max_mean_displacement: f64,
    pub max_mean_pressure: f64,
    pub max_divergence: f64,
    pub m_symmetry_defect: f64,
    pub q_offdiag_ratio: f64,
    pub k_offdiag_ratio: f64,
}

/// Runs all cell problems for one `(phi, nu)` at the given mesh resolution.
pub fn solve_cell(phi: f64, nu: f64, resolution: f64) -> Result<(CellSolution, CellDiagnostics)> {
    let geom = CellGeometry::new(phi)?;
    let flow = stokes::solve_stokes(&build_cell_mesh(&geom, resolution)?, CELL_VISCOSITY)?;
    let frame = build_frame_mesh(phi, resolution)?;
    let el = elastic::solve_elastic(&frame, REFERENCE_E, nu)?;
    Ok(assemble(phi, nu, &el, &flow))
}

pub(crate) fn assemble(
    phi: f64,
    nu: f64,
    el: &elastic::ElasticResponse,
    flow: &stokes::StokesResponse,
) -> (CellSolution, CellDiagnostics) {
    let sol = CellSolution {
        phi,
        nu,
        m: el.m(),
        q11: el.q11(),
        k11: flow.k11(),
    };
    let diag = CellDiagnostics {
        max_mean_displacement: el.max_mean,
        max_mean_pressure: flow.max_mean_pressure,
        max_divergence: flow.max_divergence,
        m_symmetry_defect: el.symmetry_defect(),
        q_offdiag_ratio: el.pressure.xy.abs() / el.q11().abs(),
        k_offdiag_ratio: flow.offdiag_ratio(),
    };
    (sol, diag)
}
