//! Periodic elastic cell problems on the solid frame (plane strain, P2).
//!
//! For a unit macroscopic strain `e` the fluctuation `A` solves
//! `int C:sym(grad A) : sym(grad v) = -int (C:e) : sym(grad v)` over the solid,
//! which carries the traction condition on the pore wall. The pressure problem
//! replaces `C:e` by the identity. The translation null space is removed by
//! pinning one node; the zero-mean representative is then recovered exactly
//! by subtracting the solid average.

use super::fe::{Element, Numbering, QUAD_POINTS};
use super::linsolve::SparseBuilder;
use super::mesh::{CellMesh, CellSection, Phase};
use crate::tensor::{SquareSym4, Sym2};
use crate::{Error, Result};

const SOLVE_TOL: f64 = 1e-8;

/// Raw averaged responses of the four elastic loads.
#[derive(Debug, Clone, Copy)]
pub struct ElasticResponse {
    /// `<sym grad A>` for loads e11, e22, e12 (unit tensor shear).
    pub strain: [Sym2; 3],
    /// `<sym grad a>` for the pressure load.
    pub pressure: Sym2,
    /// Largest `|<A>|`, `|<a>|` component after the solve.
    pub max_mean: f64,
}

impl ElasticResponse {
    pub fn m(&self) -> SquareSym4 {
        let [r11, r22, r12] = self.strain;
        SquareSym4::new(0.5 * (r11.xx + r22.yy), 0.5 * (r22.xx + r11.yy), r12.xy)
    }

    pub fn q11(&self) -> f64 {
        0.5 * (self.pressure.xx + self.pressure.yy)
    }

    /// Largest departure from the square symmetry class, relative to `|M11|`.
    pub fn symmetry_defect(&self) -> f64 {
        let [r11, r22, r12] = self.strain;
        let scale = r11.xx.abs().max(f64::MIN_POSITIVE);
        [
            (r11.xx - r22.yy).abs(),
            (r22.xx - r11.yy).abs(),
            r11.xy.abs(),
            r22.xy.abs(),
            r12.xx.abs(),
            r12.yy.abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
            / scale
    }
}

/// Solves the three strain problems and the pressure problem with one factorisation.
pub fn solve_elastic(mesh: &CellMesh, e: f64, nu: f64) -> Result<ElasticResponse> {
    if mesh.section != CellSection::Frame {
        return Err(Error::InvalidInput(
            "elastic cell problems need the frame section (connected solid)".into(),
        ));
    }
    if !mesh.has_phase(Phase::Solid) {
        return Err(Error::Mesh("solid subdomain is empty".into()));
    }
    if !(e > 0.0) || !(-1.0 < nu && nu < 0.5) {
        return Err(Error::InvalidInput(format!(
            "bad solid moduli E={e}, nu={nu}"
        )));
    }
    let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    let mu = e / (2.0 * (1.0 + nu));
    let c = SquareSym4::isotropic_lame(lambda, mu);

    let num = Numbering::new(mesh, Phase::Solid, false, None);
    let ndof = 2 * num.count();
    // Equation numbers shifted by the pinned node (numbered 0); NONE = pinned.
    let eq = |d: usize| if d == 0 { usize::MAX } else { d - 1 };
    let n = ndof - 2;
    let elems: Vec<(Element, [usize; 6])> = mesh
        .triangles
        .iter()
        .filter(|t| t.phase == Phase::Solid)
        .map(|t| {
            let el = Element::new(mesh, t);
            let d = el.nodes.map(|k| num.get(k).expect("solid node numbered"));
            (el, d)
        })
        .collect();

    let loads = [
        Sym2::diag(1.0, 0.0),
        Sym2::diag(0.0, 1.0),
        Sym2::new(0.0, 0.0, 0.5),
    ];
    let stress: Vec<[[f64; 2]; 2]> = loads
        .iter()
        .map(|l| {
            let s = c.apply(l);
            [[s.xx, s.xy], [s.xy, s.yy]]
        })
        .chain(std::iter::once([[1.0, 0.0], [0.0, 1.0]]))
        .collect();

    let mut k = SparseBuilder::with_capacity(n, elems.len() * 144);
    let mut rhs = vec![vec![0.0; n]; 4];
    let mut vol = 0.0;
    for (el, dofs) in &elems {
        let w = el.weight();
        vol += el.area;
        let mut ke = [[0.0; 12]; 12];
        let mut fe = [[0.0; 12]; 4];
        for l in &QUAD_POINTS {
            let g = el.grad_p2(l);
            for a in 0..6 {
                for b in 0..6 {
                    let gg = g[a][0] * g[b][0] + g[a][1] * g[b][1];
                    for i in 0..2 {
                        for j in 0..2 {
                            let mut v = lambda * g[a][i] * g[b][j] + mu * g[a][j] * g[b][i];
                            if i == j {
                                v += mu * gg;
                            }
                            ke[2 * a + i][2 * b + j] += w * v;
                        }
                    }
                }
                for i in 0..2 {
                    for (f, s) in fe.iter_mut().zip(&stress) {
                        f[2 * a + i] -= w * (s[i][0] * g[a][0] + s[i][1] * g[a][1]);
                    }
                }
            }
        }
        for a in 0..6 {
            let ra = eq(dofs[a]);
            if ra == usize::MAX {
                continue;
            }
            for i in 0..2 {
                let row = 2 * ra + i;
                for b in 0..6 {
                    let rb = eq(dofs[b]);
                    if rb == usize::MAX {
                        continue;
                    }
                    for j in 0..2 {
                        k.add(row, 2 * rb + j, ke[2 * a + i][2 * b + j]);
                    }
                }
                for (r, f) in rhs.iter_mut().zip(&fe) {
                    r[row] += f[2 * a + i];
                }
            }
        }
    }

    let reduced = k.factor_spd()?.solve(&rhs, SOLVE_TOL)?;
    let mut sol = Vec::with_capacity(4);
    for r in reduced {
        let mut x = vec![0.0; ndof];
        x[2..].copy_from_slice(&r);
        let mut mean = [0.0; 2];
        for (el, dofs) in &elems {
            let w = el.weight();
            for l in &QUAD_POINTS {
                let nv = Element::shape_p2(l);
                for a in 0..6 {
                    mean[0] += w * nv[a] * x[2 * dofs[a]];
                    mean[1] += w * nv[a] * x[2 * dofs[a] + 1];
                }
            }
        }
        for d in 0..ndof / 2 {
            x[2 * d] -= mean[0] / vol;
            x[2 * d + 1] -= mean[1] / vol;
        }
        sol.push(x);
    }

    let mut avg = [Sym2::ZERO; 4];
    let mut max_mean: f64 = 0.0;
    for (s, x) in sol.iter().enumerate() {
        let mut mean = [0.0; 2];
        let mut eps = Sym2::ZERO;
        for (el, dofs) in &elems {
            let w = el.weight();
            for l in &QUAD_POINTS {
                let g = el.grad_p2(l);
                let nv = Element::shape_p2(l);
                for a in 0..6 {
                    let (ux, uy) = (x[2 * dofs[a]], x[2 * dofs[a] + 1]);
                    eps.xx += w * g[a][0] * ux;
                    eps.yy += w * g[a][1] * uy;
                    eps.xy += w * 0.5 * (g[a][1] * ux + g[a][0] * uy);
                    mean[0] += w * nv[a] * ux;
                    mean[1] += w * nv[a] * uy;
                }
            }
        }
        avg[s] = eps;
        max_mean = max_mean.max(mean[0].abs()).max(mean[1].abs());
    }
    Ok(ElasticResponse {
        strain: [avg[0], avg[1], avg[2]],
        pressure: avg[3],
        max_mean,
    })
}

/// `<M>_s` reduced to (M11, M12, M44).
pub fn solve_strain_problems(mesh: &CellMesh, e: f64, nu: f64) -> Result<SquareSym4> {
    Ok(solve_elastic(mesh, e, nu)?.m())
}

/// `<Q>_s` diagonal value.
pub fn solve_pressure_problem(mesh: &CellMesh, e: f64, nu: f64) -> Result<f64> {
    Ok(solve_elastic(mesh, e, nu)?.q11())
}
