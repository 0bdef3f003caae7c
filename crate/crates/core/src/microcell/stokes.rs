//! Periodic Stokes cell problem on the cross channel, Taylor-Hood P2/P1.
//!
//! For each unit body force `e_k`: `mu lap W - grad P + e_k = 0`, `div W = 0`
//! in the fluid, `W = 0` on the pore wall, `<P>_f = 0`. The conductivity is
//! the whole-cell average of `W`.

use super::fe::{interface_nodes, Element, Numbering, QUAD_POINTS};
use super::linsolve::{norm, SparseBuilder};
use super::mesh::{CellMesh, CellSection, Phase};
use crate::{Error, Result};

const SOLVE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy)]
pub struct StokesResponse {
    /// `<W>` as a 2x2 matrix: column k is the average velocity for force `e_k`.
    pub k: [[f64; 2]; 2],
    /// Largest `|<P>_f|` over the two solves.
    pub max_mean_pressure: f64,
    /// Largest L2 norm of the discrete divergence `B W`.
    pub max_divergence: f64,
}

impl StokesResponse {
    pub fn k11(&self) -> f64 {
        0.5 * (self.k[0][0] + self.k[1][1])
    }

    pub fn offdiag_ratio(&self) -> f64 {
        self.k[0][1].abs().max(self.k[1][0].abs()) / self.k11().abs()
    }
}

pub fn solve_stokes(mesh: &CellMesh, mu: f64) -> Result<StokesResponse> {
    if mesh.section != CellSection::CrossChannel || !mesh.phase_percolates(Phase::Fluid) {
        return Err(Error::Mesh(
            "fluid domain is not connected across the periodic faces; conductivity would vanish"
                .into(),
        ));
    }
    if !(mu > 0.0) {
        return Err(Error::InvalidInput(format!(
            "viscosity must be positive, got {mu}"
        )));
    }
    let wall = interface_nodes(mesh);
    let vel = Numbering::new(mesh, Phase::Fluid, false, Some(&wall));
    let pre = Numbering::new(mesh, Phase::Fluid, true, None);
    let nv = 2 * vel.count();
    let np = pre.count();
    // Pressure node 0 is pinned; the zero-mean representative is recovered
    // afterwards by subtracting the fluid average.
    let n = nv + np - 1;
    let prow = |q: usize| if q == 0 { None } else { Some(nv + q - 1) };

    let fluid: Vec<Element> = mesh
        .triangles
        .iter()
        .filter(|t| t.phase == Phase::Fluid)
        .map(|t| Element::new(mesh, t))
        .collect();

    let mut a = SparseBuilder::with_capacity(n, fluid.len() * (72 + 72 + 6));
    let mut rhs = vec![vec![0.0; n]; 2];
    for el in &fluid {
        let w = el.weight();
        let vd = el.nodes.map(|k| vel.get(k));
        let pd: [usize; 3] = [0, 1, 2].map(|k| pre.get(el.nodes[k]).expect("pressure node"));
        let mut lap = [[0.0; 6]; 6];
        let mut div = [[[0.0; 2]; 6]; 3];
        let mut mass = [0.0; 6];
        for l in &QUAD_POINTS {
            let g = el.grad_p2(l);
            let nvals = Element::shape_p2(l);
            for i in 0..6 {
                for j in 0..6 {
                    lap[i][j] += w * mu * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                }
                mass[i] += w * nvals[i];
                for q in 0..3 {
                    for c in 0..2 {
                        div[q][i][c] -= w * l[q] * g[i][c];
                    }
                }
            }
        }
        for i in 0..6 {
            let Some(di) = vd[i] else { continue };
            for j in 0..6 {
                if let Some(dj) = vd[j] {
                    for c in 0..2 {
                        a.add(2 * di + c, 2 * dj + c, lap[i][j]);
                    }
                }
            }
            for c in 0..2 {
                rhs[c][2 * di + c] += mass[i];
                for q in 0..3 {
                    if let Some(r) = prow(pd[q]) {
                        a.add_sym(r, 2 * di + c, div[q][i][c]);
                    }
                }
            }
        }
    }

    let sol = a.factor()?.solve(&rhs, SOLVE_TOL)?;

    let mut k = [[0.0; 2]; 2];
    let mut max_mean_pressure: f64 = 0.0;
    let mut max_divergence: f64 = 0.0;
    let fluid_area: f64 = fluid.iter().map(|e| e.area).sum();
    for (force, reduced) in sol.iter().enumerate() {
        let mut x = vec![0.0; nv + np];
        x[..nv].copy_from_slice(&reduced[..nv]);
        x[nv + 1..].copy_from_slice(&reduced[nv..]);
        let mut raw_mean = 0.0;
        for el in &fluid {
            let pd: [usize; 3] = [0, 1, 2].map(|k| pre.get(el.nodes[k]).expect("pressure node"));
            for l in &QUAD_POINTS {
                for q in 0..3 {
                    raw_mean += el.weight() * l[q] * x[nv + pd[q]];
                }
            }
        }
        for v in &mut x[nv..] {
            *v -= raw_mean / fluid_area;
        }
        let mut avg = [0.0; 2];
        let mut pm = 0.0;
        let mut bw = vec![0.0; np];
        for el in &fluid {
            let w = el.weight();
            let vd = el.nodes.map(|k| vel.get(k));
            let pd: [usize; 3] = [0, 1, 2].map(|k| pre.get(el.nodes[k]).expect("pressure node"));
            for l in &QUAD_POINTS {
                let g = el.grad_p2(l);
                let nvals = Element::shape_p2(l);
                let mut divw = 0.0;
                for i in 0..6 {
                    if let Some(d) = vd[i] {
                        avg[0] += w * nvals[i] * x[2 * d];
                        avg[1] += w * nvals[i] * x[2 * d + 1];
                        divw += g[i][0] * x[2 * d] + g[i][1] * x[2 * d + 1];
                    }
                }
                for q in 0..3 {
                    pm += w * l[q] * x[nv + pd[q]];
                    bw[pd[q]] += w * l[q] * divw;
                }
            }
        }
        k[0][force] = avg[0];
        k[1][force] = avg[1];
        max_mean_pressure = max_mean_pressure.max(pm.abs());
        max_divergence = max_divergence.max(norm(&bw));
    }
    Ok(StokesResponse {
        k,
        max_mean_pressure,
        max_divergence,
    })
}
