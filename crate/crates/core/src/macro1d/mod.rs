//! Incremental mixed finite elements for the homogenised u-p system on a
//! column under uniaxial strain.
//!
//! Displacement is quadratic, pressure linear, two Gauss points per element.
//! Total stress and fluid content are accumulated per Gauss point with the
//! coefficients frozen over each increment. The discrete balance laws are kept
//! in cumulative form, so whatever residual is left after one increment is
//! carried into the right-hand side of the next.

mod bc;
mod output;

use faer::linalg::solvers::Solve;
use faer::Mat;
use rayon::prelude::*;
use serde::Serialize;

pub use bc::{free_drainage_flux, EndCondition, Hydraulic, Mechanical, TimeFunction};
pub use output::{write_nodal_csv, write_point_csv, NODAL_HEADER, POINT_HEADER};

use crate::remodel::{remodel_point, CellProvider, MaterialPointState};
use crate::tensor::Sym2;
use crate::upscale::EffectiveCoefficients;
use crate::{Error, Result};

const GAUSS: [(f64, f64); 2] = [
    (0.211_324_865_405_187_1, 0.5),
    (0.788_675_134_594_812_9, 0.5),
];

/// Face index: 0 = bottom (x = 0), 1 = top (x = length).
pub const BOTTOM: usize = 0;
pub const TOP: usize = 1;

#[derive(Debug, Clone)]
pub struct Column {
    pub length: f64,
    pub n_elements: usize,
    /// Element vertex coordinates.
    pub vertices: Vec<f64>,
    pub ends: [EndCondition; 2],
}

impl Column {
    pub fn new(
        length: f64,
        n_elements: usize,
        bottom: EndCondition,
        top: EndCondition,
    ) -> Result<Self> {
        if !(length > 0.0) || n_elements < 4 {
            return Err(Error::InvalidInput(format!(
                "column needs length > 0 and at least 4 elements, got {length}, {n_elements}"
            )));
        }
        if matches!(bottom.mechanical, Mechanical::Traction(_))
            && matches!(top.mechanical, Mechanical::Traction(_))
        {
            return Err(Error::Solver(
                "no displacement condition: rigid motion is unconstrained".into(),
            ));
        }
        bottom.validate()?;
        top.validate()?;
        let vertices = (0..=n_elements)
            .map(|i| length * i as f64 / n_elements as f64)
            .collect();
        Ok(Column {
            length,
            n_elements,
            vertices,
            ends: [bottom, top],
        })
    }

    pub fn n_u(&self) -> usize {
        2 * self.n_elements + 1
    }

    pub fn n_p(&self) -> usize {
        self.n_elements + 1
    }

    fn u_node(face: usize, n_u: usize) -> usize {
        if face == BOTTOM {
            0
        } else {
            n_u - 1
        }
    }

    fn p_node(face: usize, n_p: usize) -> usize {
        if face == BOTTOM {
            0
        } else {
            n_p - 1
        }
    }

    /// `(x, weight, element, xi)` for every Gauss point.
    pub fn gauss_points(&self) -> Vec<(f64, f64, usize, f64)> {
        let mut out = Vec::with_capacity(2 * self.n_elements);
        for e in 0..self.n_elements {
            let (a, b) = (self.vertices[e], self.vertices[e + 1]);
            for &(xi, w) in &GAUSS {
                out.push((a + xi * (b - a), w * (b - a), e, xi));
            }
        }
        out
    }

    /// Nodal x of the quadratic displacement nodes.
    pub fn u_coordinates(&self) -> Vec<f64> {
        (0..self.n_u())
            .map(|k| {
                let e = (k / 2).min(self.n_elements - 1);
                let (a, b) = (self.vertices[e], self.vertices[e + 1]);
                a + (k - 2 * e) as f64 * 0.5 * (b - a)
            })
            .collect()
    }
}

/// Element shape data at reference coordinate `xi` for element length `h`.
struct Shape {
    n: [f64; 3],
    dn: [f64; 3],
    l: [f64; 2],
    dl: [f64; 2],
}

impl Shape {
    fn at(xi: f64, h: f64) -> Self {
        Shape {
            n: [
                (1.0 - xi) * (1.0 - 2.0 * xi),
                4.0 * xi * (1.0 - xi),
                xi * (2.0 * xi - 1.0),
            ],
            dn: [
                (4.0 * xi - 3.0) / h,
                (4.0 - 8.0 * xi) / h,
                (4.0 * xi - 1.0) / h,
            ],
            l: [1.0 - xi, xi],
            dl: [-1.0 / h, 1.0 / h],
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct QuadPoint {
    pub x: f64,
    pub weight: f64,
    pub element: usize,
    pub xi: f64,
    pub material: MaterialPointState,
    /// Axial macroscopic strain.
    pub strain: f64,
    pub pressure: f64,
    /// Axial total stress.
    pub stress: f64,
    /// Fluid content change since the start.
    pub fluid: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MacroState {
    pub t: f64,
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub u_rate: Vec<f64>,
    pub p_rate: Vec<f64>,
    pub points: Vec<QuadPoint>,
    /// Momentum residual at `t`, added to the next increment.
    pub carry_u: Vec<f64>,
    /// Mass residual at `t`, added to the next increment.
    pub carry_p: Vec<f64>,
    /// Cumulative `sum dt * int K p' q'` per pressure node.
    diffusion: Vec<f64>,
    /// Cumulative boundary outflow per pressure node.
    boundary: Vec<f64>,
    /// Cumulative outflow per face (bottom, top); positive leaves the column.
    pub drained: [f64; 2],
    pub increments: usize,
}

impl MacroState {
    /// Undeformed state with zero pressure and one material state per Gauss point.
    pub fn initial(column: &Column, material: MaterialPointState) -> Self {
        let points = column
            .gauss_points()
            .into_iter()
            .map(|(x, weight, element, xi)| QuadPoint {
                x,
                weight,
                element,
                xi,
                material,
                strain: 0.0,
                pressure: 0.0,
                stress: 0.0,
                fluid: 0.0,
            })
            .collect();
        let (nu, np) = (column.n_u(), column.n_p());
        MacroState {
            t: 0.0,
            u: vec![0.0; nu],
            p: vec![0.0; np],
            u_rate: vec![0.0; nu],
            p_rate: vec![0.0; np],
            points,
            carry_u: vec![0.0; nu],
            carry_p: vec![0.0; np],
            diffusion: vec![0.0; np],
            boundary: vec![0.0; np],
            drained: [0.0; 2],
            increments: 0,
        }
    }

    /// Downward displacement of the top face.
    pub fn settlement(&self) -> f64 {
        -self.u[self.u.len() - 1]
    }

    /// Nodal pressure interpolated at `x`.
    pub fn pressure_at(&self, column: &Column, x: f64) -> f64 {
        let h = column.length / column.n_elements as f64;
        let e = ((x / h).floor() as usize).min(column.n_elements - 1);
        let xi = (x - column.vertices[e]) / h;
        (1.0 - xi) * self.p[e] + xi * self.p[e + 1]
    }

    /// Quadratic displacement interpolated at `x`.
    pub fn displacement_at(&self, column: &Column, x: f64) -> f64 {
        let h = column.length / column.n_elements as f64;
        let e = ((x / h).floor() as usize).min(column.n_elements - 1);
        let s = Shape::at((x - column.vertices[e]) / h, h);
        (0..3).map(|i| s.n[i] * self.u[2 * e + i]).sum()
    }

    /// Total fluid drained through both faces.
    pub fn total_drained(&self) -> f64 {
        self.drained[0] + self.drained[1]
    }

    /// `int zeta dx` from the accumulated Gauss-point fluid content.
    pub fn stored_fluid(&self) -> f64 {
        self.points.iter().map(|q| q.weight * q.fluid).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepReport {
    pub t: f64,
    pub dt: f64,
    pub max_strain_increment: f64,
    /// Outflow per face during the increment.
    pub drained: [f64; 2],
    /// Norms of the residuals carried into the next increment.
    pub carry_u_norm: f64,
    pub carry_p_norm: f64,
    /// Residual norm of the linear solve, relative to the right-hand side.
    pub solve_residual: f64,
    pub clamp_events: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepOptions {
    /// Largest accepted axial strain increment at any Gauss point.
    pub max_strain_increment: f64,
    pub max_strain_halvings: u32,
    /// Halvings allowed after a remodelling rejection.
    pub max_reject_halvings: u32,
    /// Growth factor of the step after an accepted increment.
    pub growth: f64,
    pub dt_max: f64,
}

impl Default for StepOptions {
    fn default() -> Self {
        StepOptions {
            max_strain_increment: 1e-3,
            max_strain_halvings: 12,
            max_reject_halvings: 5,
            growth: 1.5,
            dt_max: f64::INFINITY,
        }
    }
}

/// Outcome of one attempted increment.
pub enum Attempt {
    Accepted(Box<MacroState>, StepReport),
    /// Largest strain increment exceeded the limit.
    StrainLimit(f64),
}

/// `(K, dx, env)` for a free-drainage face, with `K` from the nearest Gauss point.
fn robin(column: &Column, state: &MacroState, face: usize) -> Option<(f64, f64, f64)> {
    match column.ends[face].hydraulic {
        Hydraulic::FreeDrainage { dx, env } => {
            let q = if face == BOTTOM {
                &state.points[0]
            } else {
                &state.points[state.points.len() - 1]
            };
            Some((q.material.eff.k11, dx, env))
        }
        _ => None,
    }
}

/// Assembles and solves one increment to `state.t + dt`; remodels afterwards
/// unless `linear`.
pub fn step(
    column: &Column,
    state: &MacroState,
    dt: f64,
    cells: &dyn CellProvider,
    linear: bool,
    max_strain_increment: f64,
) -> Result<Attempt> {
    if !(dt > 0.0) {
        return Err(Error::InvalidInput(format!(
            "time step must be positive, got {dt}"
        )));
    }
    let (nu, np) = (column.n_u(), column.n_p());
    let t1 = state.t + dt;

    // Prescribed increments; NaN marks a free dof.
    let mut fixed = vec![f64::NAN; nu + np];
    for face in [BOTTOM, TOP] {
        if let Mechanical::Displacement(f) = &column.ends[face].mechanical {
            let k = Column::u_node(face, nu);
            fixed[k] = f.at(t1) - state.u[k];
        }
        if let Hydraulic::Pressure(f) = &column.ends[face].hydraulic {
            let k = Column::p_node(face, np);
            fixed[nu + k] = f.at(t1) - state.p[k];
        }
    }
    let mut index = vec![usize::MAX; nu + np];
    let mut n_free = 0;
    for (k, f) in fixed.iter().enumerate() {
        if f.is_nan() {
            index[k] = n_free;
            n_free += 1;
        }
    }

    let mut a = Mat::<f64>::zeros(nu + np, nu + np);
    let mut rhs = vec![0.0; nu + np];
    rhs[..nu].copy_from_slice(&state.carry_u);
    rhs[nu..].copy_from_slice(&state.carry_p);
    for face in [BOTTOM, TOP] {
        if let Mechanical::Traction(f) = &column.ends[face].mechanical {
            rhs[Column::u_node(face, nu)] += f.at(t1) - f.at(state.t);
        }
        if let Some((k11, dx, env)) = robin(column, state, face) {
            let k = Column::p_node(face, np);
            a[(nu + k, nu + k)] += dt * k11 / dx;
            rhs[nu + k] -= dt * free_drainage_flux(k11, state.p[k], env, dx);
        }
    }
    for q in &state.points {
        let h = column.vertices[q.element + 1] - column.vertices[q.element];
        let s = Shape::at(q.xi, h);
        let (ud, pd) = dofs(q.element, nu);
        let eff = &q.material.eff;
        let (c11, alpha, inv_m, k11) = (eff.c.c11, eff.alpha, 1.0 / eff.biot_modulus, eff.k11);
        let w = q.weight;
        let grad_p: f64 = (0..2).map(|l| s.dl[l] * state.p[q.element + l]).sum();
        for i in 0..3 {
            for j in 0..3 {
                a[(ud[i], ud[j])] += w * c11 * s.dn[i] * s.dn[j];
            }
            for l in 0..2 {
                a[(ud[i], pd[l])] -= w * alpha * s.dn[i] * s.l[l];
                a[(pd[l], ud[i])] += w * alpha * s.l[l] * s.dn[i];
            }
        }
        for k in 0..2 {
            for l in 0..2 {
                a[(pd[k], pd[l])] += w * (inv_m * s.l[k] * s.l[l] + dt * k11 * s.dl[k] * s.dl[l]);
            }
            rhs[pd[k]] -= w * dt * k11 * s.dl[k] * grad_p;
        }
    }

    // Reduce to free dofs.
    let mut af = Mat::<f64>::zeros(n_free, n_free);
    let mut bf = Mat::<f64>::zeros(n_free, 1);
    for i in 0..nu + np {
        let fi = index[i];
        if fi == usize::MAX {
            continue;
        }
        let mut b = rhs[i];
        for j in 0..nu + np {
            let v = a[(i, j)];
            if v == 0.0 {
                continue;
            }
            if index[j] == usize::MAX {
                b -= v * fixed[j];
            } else {
                af[(fi, index[j])] = v;
            }
        }
        bf[(fi, 0)] = b;
    }
    let x = af.partial_piv_lu().solve(&bf);
    let mut delta = fixed;
    for (k, d) in delta.iter_mut().enumerate() {
        if index[k] != usize::MAX {
            *d = x[(index[k], 0)];
        }
    }
    if delta.iter().any(|v| !v.is_finite()) {
        return Err(Error::Solver(
            "singular increment system (check boundary conditions)".into(),
        ));
    }
    let solve_residual = {
        let r = &af * &x - &bf;
        let (rn, bn) = (r.norm_l2(), bf.norm_l2());
        if bn > 0.0 {
            rn / bn
        } else {
            rn
        }
    };
    let (du, dp) = delta.split_at(nu);

    // Gauss-point updates with the frozen coefficients.
    let mut next = state.clone();
    next.t = t1;
    next.increments += 1;
    let mut max_de: f64 = 0.0;
    let mut point_increments = Vec::with_capacity(state.points.len());
    for q in next.points.iter_mut() {
        let h = column.vertices[q.element + 1] - column.vertices[q.element];
        let s = Shape::at(q.xi, h);
        let (ud, pd) = dofs(q.element, nu);
        let de: f64 = (0..3).map(|i| s.dn[i] * du[ud[i]]).sum();
        let dpq: f64 = (0..2).map(|l| s.l[l] * dp[pd[l] - nu]).sum();
        let eff = q.material.eff;
        q.strain += de;
        q.pressure += dpq;
        q.stress += eff.c.c11 * de - eff.alpha * dpq;
        q.fluid += dpq / eff.biot_modulus + eff.alpha * de;
        max_de = max_de.max(de.abs());
        point_increments.push((de, dpq));
    }
    if max_de > max_strain_increment {
        return Ok(Attempt::StrainLimit(max_de));
    }
    for k in 0..nu {
        next.u[k] += du[k];
        next.u_rate[k] = du[k] / dt;
    }
    for k in 0..np {
        next.p[k] += dp[k];
        next.p_rate[k] = dp[k] / dt;
    }

    // Cumulative diffusion with the increment's conductivity, then boundary outflow.
    for q in &next.points {
        let h = column.vertices[q.element + 1] - column.vertices[q.element];
        let s = Shape::at(q.xi, h);
        let grad_p: f64 = (0..2).map(|l| s.dl[l] * next.p[q.element + l]).sum();
        let k11 = q.material.eff.k11;
        for l in 0..2 {
            next.diffusion[q.element + l] += dt * q.weight * k11 * s.dl[l] * grad_p;
        }
    }
    let storage = nodal_storage(column, &next);
    let mut step_drained = [0.0; 2];
    for face in [BOTTOM, TOP] {
        let k = Column::p_node(face, np);
        let before = next.boundary[k];
        match column.ends[face].hydraulic {
            Hydraulic::Pressure(_) => next.boundary[k] = -(storage[k] + next.diffusion[k]),
            Hydraulic::FreeDrainage { .. } => {
                let (k11, dx, env) = robin(column, state, face).expect("free-drainage face");
                next.boundary[k] += dt * free_drainage_flux(k11, next.p[k], env, dx);
            }
            Hydraulic::Impermeable => {}
        }
        step_drained[face] = next.boundary[k] - before;
        next.drained[face] += step_drained[face];
    }

    // Residuals at t1 become the carry of the next increment.
    let mut ru = vec![0.0; nu];
    for face in [BOTTOM, TOP] {
        if let Mechanical::Traction(f) = &column.ends[face].mechanical {
            ru[Column::u_node(face, nu)] += f.at(t1);
        }
    }
    for q in &next.points {
        let h = column.vertices[q.element + 1] - column.vertices[q.element];
        let s = Shape::at(q.xi, h);
        let (ud, _) = dofs(q.element, nu);
        for i in 0..3 {
            ru[ud[i]] -= q.weight * q.stress * s.dn[i];
        }
    }
    let mut rp: Vec<f64> = (0..np)
        .map(|k| -(storage[k] + next.diffusion[k] + next.boundary[k]))
        .collect();
    for k in 0..nu {
        if index[k] == usize::MAX {
            ru[k] = 0.0;
        }
    }
    for k in 0..np {
        if index[nu + k] == usize::MAX {
            rp[k] = 0.0;
        }
    }
    let carry_u_norm = ru.iter().map(|v| v * v).sum::<f64>().sqrt();
    let carry_p_norm = rp.iter().map(|v| v * v).sum::<f64>().sqrt();
    next.carry_u = ru;
    next.carry_p = rp;

    let mut clamp_events = 0;
    if !linear {
        let updated: Vec<MaterialPointState> = next
            .points
            .par_iter()
            .zip(&point_increments)
            .enumerate()
            .map(|(i, (q, &(de, dpq)))| {
                remodel_point(&q.material, &Sym2::diag(de, 0.0), dpq, cells, false, i)
            })
            .collect::<Result<_>>()?;
        for (q, m) in next.points.iter_mut().zip(updated) {
            clamp_events += m.clamp_events - q.material.clamp_events;
            q.material = m;
        }
    }

    let report = StepReport {
        t: t1,
        dt,
        max_strain_increment: max_de,
        drained: step_drained,
        carry_u_norm,
        carry_p_norm,
        solve_residual,
        clamp_events,
    };
    Ok(Attempt::Accepted(Box::new(next), report))
}

/// Global u and p dof numbers of element `e`.
fn dofs(e: usize, nu: usize) -> ([usize; 3], [usize; 2]) {
    ([2 * e, 2 * e + 1, 2 * e + 2], [nu + e, nu + e + 1])
}

/// `int zeta q_k dx` per pressure node.
fn nodal_storage(column: &Column, state: &MacroState) -> Vec<f64> {
    let mut z = vec![0.0; column.n_p()];
    for q in &state.points {
        z[q.element] += q.weight * q.fluid * (1.0 - q.xi);
        z[q.element + 1] += q.weight * q.fluid * q.xi;
    }
    z
}

/// Advances to `t_target`, shrinking the step on strain-limit violations and
/// remodelling rejections. Returns the new state, the per-increment reports
/// and the step size to try next.
pub fn advance(
    column: &Column,
    state: &MacroState,
    t_target: f64,
    dt_try: f64,
    cells: &dyn CellProvider,
    linear: bool,
    opts: &StepOptions,
) -> Result<(MacroState, Vec<StepReport>, f64)> {
    let mut cur = state.clone();
    let mut reports = Vec::new();
    let mut dt = dt_try.min(opts.dt_max);
    let tol = 1e-12 * t_target.abs().max(1.0);
    while cur.t < t_target - tol {
        let remaining = t_target - cur.t;
        let mut h = dt.min(remaining);
        let (mut strain_halvings, mut reject_halvings) = (0, 0);
        loop {
            match step(column, &cur, h, cells, linear, opts.max_strain_increment) {
                Ok(Attempt::Accepted(next, report)) => {
                    cur = *next;
                    reports.push(report);
                    break;
                }
                Ok(Attempt::StrainLimit(de)) => {
                    strain_halvings += 1;
                    if strain_halvings > opts.max_strain_halvings {
                        return Err(Error::Solver(format!(
                            "strain increment {de:.3e} above {:.1e} after {} halvings at t = {}",
                            opts.max_strain_increment, opts.max_strain_halvings, cur.t
                        )));
                    }
                    h *= 0.5;
                }
                Err(Error::Rejected { point, reason }) => {
                    reject_halvings += 1;
                    if reject_halvings > opts.max_reject_halvings {
                        return Err(Error::Rejected { point, reason });
                    }
                    log::debug!("t = {}: point {point} rejected ({reason}), halving", cur.t);
                    h *= 0.5;
                }
                Err(e) => return Err(e),
            }
        }
        let grown = if h < remaining {
            h * opts.growth
        } else {
            dt.max(h)
        };
        dt = grown.min(opts.dt_max);
    }
    Ok((cur, reports, dt))
}

/// Storage and drainage totals for the global mass balance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassBalance {
    /// `int zeta dx` from the accumulated fluid content.
    pub stored: f64,
    pub drained: f64,
    /// `stored + drained`; zero when fluid is conserved.
    pub imbalance: f64,
}

impl MassBalance {
    pub fn relative(&self) -> f64 {
        let scale = self.stored.abs().max(self.drained.abs());
        if scale > 0.0 {
            self.imbalance.abs() / scale
        } else {
            0.0
        }
    }
}

pub fn mass_balance(state: &MacroState) -> MassBalance {
    let stored = state.stored_fluid();
    let drained = state.total_drained();
    MassBalance {
        stored,
        drained,
        imbalance: stored + drained,
    }
}

/// Cumulative outflow per face from a run history.
pub fn drainage_accounting(history: &[StepReport]) -> [f64; 2] {
    history.iter().fold([0.0; 2], |acc, r| {
        [acc[0] + r.drained[0], acc[1] + r.drained[1]]
    })
}

/// Single-drainage series pressure at `depth` below the drained face of a
/// column of `height`, for a compressive `load` ramped linearly over `ramp`
/// (a step when `ramp` is zero). Uses 200 terms.
pub fn terzaghi_pressure(
    eff: &EffectiveCoefficients,
    load: f64,
    height: f64,
    depth: f64,
    t: f64,
    ramp: f64,
) -> f64 {
    let c11 = eff.c.c11;
    let m = eff.biot_modulus;
    let a = eff.alpha;
    let p0 = a * m * load / (a * a * m + c11);
    let cv = eff.k11 / (1.0 / m + a * a / c11);
    let mut sum = 0.0;
    for j in 0..200 {
        let k = (2 * j + 1) as f64 * std::f64::consts::PI / (2.0 * height);
        let rate = k * k * cv;
        let decay = if ramp > 0.0 {
            let tau = t.min(ramp);
            -(-rate * (t - tau)).exp() * (-rate * tau).exp_m1() / (rate * ramp)
        } else {
            (-rate * t).exp()
        };
        sum += 2.0 / (k * height) * (k * depth).sin() * decay;
    }
    p0 * sum
}
